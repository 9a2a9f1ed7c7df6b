#ifndef SEWERSIM_CLI_HPP
#define SEWERSIM_CLI_HPP

#include "sewersim/compare.hpp"
#include "sewersim/geojson.hpp"
#include "sewersim/inp.hpp"
#include "sewersim/synth.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace sewersim::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;       // input or runtime error
inline constexpr int kExitValidation = 2;  // validation / semantic failure

inline std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline bool is_semantic_parse_error(const ParseError& e) {
    std::string what = e.what();
    return what.find("undefined") != std::string::npos;
}

struct CommonFlags {
    std::uint64_t seed = 1;
    std::size_t batch = 100;
    double target_cov = 0.1;
    std::size_t max_sims = 10000;
    double duration = 86400.0;
    double dt = 1.0;
    unsigned workers = 1;
    bool substep = false;
    std::string inertial = "on";
    std::string capacity_basis = "effective";
    std::string damage_model_path;

    RunOptions to_run_options() const {
        RunOptions opt;
        opt.master_seed = seed;
        opt.workers = workers;
        opt.convergence.batch_size = batch;
        opt.convergence.target_avg_delta = target_cov;
        opt.convergence.max_simulations = max_sims;
        opt.solver.duration = duration;
        opt.solver.routing_step = dt;
        opt.solver.substep_on_courant = substep;
        opt.solver.inertial_terms = inertial == "off"      ? InertialTerms::Off
                                    : inertial == "damped" ? InertialTerms::Damped
                                                           : InertialTerms::On;
        opt.pm.capacity_basis = capacity_basis == "original" ? CapacityBasis::Original
                                                             : CapacityBasis::Effective;
        return opt;
    }

    DamageModel load_damage_model() const {
        if (damage_model_path.empty()) return DamageModel{};
        return parse_damage_model(read_file(damage_model_path));
    }

    void attach(CLI::App* cmd) {
        cmd->add_option("--seed", seed, "master random seed");
        cmd->add_option("--batch", batch, "simulations per convergence batch");
        cmd->add_option("--target-cov", target_cov, "target average delta_PM");
        cmd->add_option("--max-sims", max_sims, "simulation cap");
        cmd->add_option("--duration", duration, "routing duration [s]");
        cmd->add_option("--dt", dt, "routing time step [s]");
        cmd->add_option("--workers", workers, "parallel scenario workers");
        cmd->add_flag("--substep", substep, "sub-step when Courant > 1");
        cmd->add_option("--inertial", inertial, "inertial terms: on|damped|off")
            ->check(CLI::IsMember({"on", "damped", "off"}));
        cmd->add_option("--capacity-basis", capacity_basis,
                        "I_80 threshold basis: effective|original")
            ->check(CLI::IsMember({"effective", "original"}));
        cmd->add_option("--damage-model", damage_model_path,
                        "damage model override file");
    }
};

inline Network load_network(const std::string& path, std::ostream& out) {
    auto parsed = parse_inp(read_file(path));
    for (const auto& w : parsed.warnings) out << "warning: " << w << "\n";
    return std::move(parsed.network);
}

inline std::string run_summary(const ModelRunResult& run) {
    std::ostringstream out;
    out << "model " << run.spec.name() << "\n";
    out << "simulations " << run.simulations << "\n";
    char buf[96];
    std::snprintf(buf, sizeof(buf), "average_delta %.6g\n", run.average_delta);
    out << buf << "converged " << (run.converged ? "yes" : "no") << "\n";
    out << "-- timing (wall clock, informational) --\n";
    out << "total_time_s " << format_s3(run.wall_time_s) << "\n";
    out << "time_per_sim_s " << format_s3(run.time_per_sim_s) << "\n";
    return out.str();
}

inline int cmd_validate(const std::string& path, std::ostream& out) {
    Network net;
    try {
        net = load_network(path, out);
    } catch (const ParseError& e) {
        out << "parse error: " << e.what() << "\n";
        return is_semantic_parse_error(e) ? kExitValidation : kExitError;
    }
    auto report = validate(net);
    for (const auto& w : report.warnings)
        out << "warning: " << w.code << " (" << w.component << "): " << w.detail << "\n";
    if (!report.pass()) {
        for (const auto& v : report.violations)
            out << "violation: " << v.code << " (" << v.component << "): " << v.detail
                << "\n";
        return kExitValidation;
    }
    out << "valid: " << net.node_count() << " nodes, " << net.link_count() << " links\n";
    return kExitOk;
}

inline int cmd_run(const std::string& path, const std::string& model_name,
                   const CommonFlags& flags, const std::string& out_base,
                   const std::string& series_path, std::ostream& out) {
    Network net = load_network(path, out);
    auto report = validate(net);
    if (!report.pass()) {
        for (const auto& v : report.violations)
            out << "violation: " << v.code << " (" << v.component << "): " << v.detail
                << "\n";
        return kExitValidation;
    }
    ModelSpec spec = ModelSpec::from_name(model_name);
    RunOptions opt = flags.to_run_options();
    DamageModel damage = flags.load_damage_model();

    if (!series_path.empty()) {
        // Debug: one undamaged routing with the requested fidelity.
        auto dn = undamaged_view(net);
        auto inflows = InflowSet::from_network(net);
        SolverConfig cfg = opt.solver;
        cfg.record_series = true;
        RoutingResult routing = spec.fidelity == Fidelity::KinematicWave
                                    ? route_kinematic(dn, inflows, cfg)
                                    : route_dynamic(dn, inflows, cfg);
        std::string csv = "t,conduit_id,flow\n";
        char buf[128];
        for (std::size_t li = 0; li < net.link_count(); ++li) {
            if (routing.series_flow.empty() || routing.series_flow[li].empty()) continue;
            for (std::size_t s = 0; s < routing.series_times.size(); ++s) {
                std::snprintf(buf, sizeof(buf), "%.17g,%s,%.17g\n", routing.series_times[s],
                              net.link(li).id.c_str(), routing.series_flow[li][s]);
                csv += buf;
            }
        }
        write_file(series_path, csv);
    }

    ModelOutput result = run_model(net, spec, damage, opt);
    std::vector<NodePmEstimate> demand_only;
    for (std::size_t v = 0; v < net.node_count(); ++v)
        if (net.is_demand_node(v)) demand_only.push_back(result.full_estimates[v]);

    write_file(out_base + ".geojson",
               write_geojson(net, result.full_estimates, spec.name()));
    write_file(out_base + ".csv", write_results_csv(demand_only, spec.name()));
    out << run_summary(result.run);
    return kExitOk;
}

inline int cmd_compare(const std::string& path, const CommonFlags& flags, bool crn,
                       const std::string& out_dir, std::ostream& out) {
    Network net = load_network(path, out);
    auto report = validate(net);
    if (!report.pass()) {
        for (const auto& v : report.violations)
            out << "violation: " << v.code << " (" << v.component << "): " << v.detail
                << "\n";
        return kExitValidation;
    }
    CompareOptions opt;
    opt.run = flags.to_run_options();
    opt.common_random_numbers = crn;
    DamageModel damage = flags.load_damage_model();

    std::filesystem::create_directories(out_dir);
    ComparisonReport rep = run_matrix(net, damage, opt);

    for (std::size_t m = 0; m < rep.specs.size(); ++m) {
        const auto name = rep.specs[m].name();
        std::vector<NodePmEstimate> full;
        // Re-expand over every node (outfalls included) for the map output.
        full.reserve(net.node_count());
        std::size_t di = 0;
        for (std::size_t v = 0; v < net.node_count(); ++v) {
            if (net.is_demand_node(v)) {
                full.push_back(rep.expanded[m][di++]);
            } else {
                NodePmEstimate e;
                e.node_id = net.node(v).id;
                e.pm_mean = 1.0;
                e.n_sims = rep.runs[m].simulations;
                e.delta = 0.0;
                full.push_back(std::move(e));
            }
        }
        write_file(out_dir + "/" + name + ".geojson", write_geojson(net, full, name));
        write_file(out_dir + "/" + name + ".csv",
                   write_results_csv(rep.expanded[m], name));
    }

    auto scatter = [&](const std::string& a, const std::string& b) {
        write_file(out_dir + "/scatter_" + a + "_vs_" + b + ".csv",
                   write_scatter_csv(rep.expanded[rep.index_of(a)],
                                     rep.expanded[rep.index_of(b)]));
    };
    for (const auto& spec : rep.specs) scatter("DF", spec.name());
    scatter("KF", "CF");
    scatter("KA", "CA");
    scatter("KF", "KA");
    scatter("CF", "CA");

    write_file(out_dir + "/report.txt", report_text(rep));
    write_file(out_dir + "/summary.kv", report_kv(rep));
    out << report_text(rep);
    return kExitOk;
}

inline int cmd_arterial(const std::string& path, const std::string& out_base,
                        std::ostream& out) {
    Network net = load_network(path, out);
    auto report = validate(net);
    if (!report.pass()) {
        for (const auto& v : report.violations)
            out << "violation: " << v.code << " (" << v.component << "): " << v.detail
                << "\n";
        return kExitValidation;
    }
    ArterialExtraction ext;
    try {
        ext = extract_arterial(net);
    } catch (const std::runtime_error& e) {
        out << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    write_file(out_base + ".inp", write_inp(ext.network));
    write_file(out_base + "_mapping.csv", write_mapping_csv(net, ext.mapping));
    out << "arterial network: " << ext.network.node_count() << " of " << net.node_count()
        << " nodes\n";
    return kExitOk;
}

inline int cmd_generate(const SynthesisParams& params, std::uint64_t seed,
                        const std::string& out_path, std::ostream& out) {
    Network net = generate_synthetic(params, seed);
    write_file(out_path, write_inp(net));
    out << "generated " << net.node_count() << " nodes, " << net.link_count()
        << " links\n";
    return kExitOk;
}

/// CLI front end; returns the process exit code.
inline int run_cli(std::vector<std::string> args, std::ostream& out = std::cout) {
    CLI::App app{"wastewater network functionality under damage: six-model "
                 "Monte Carlo simulator"};
    app.require_subcommand(1);
    app.set_config("--config")->envname("SEWERSIM_CONFIG");

    int exit_code = kExitOk;

    // validate
    std::string v_path;
    auto* v_cmd = app.add_subcommand("validate", "parse and validate a network file");
    v_cmd->add_option("network", v_path, "INP network file")->required();
    v_cmd->callback([&] { exit_code = cmd_validate(v_path, out); });

    // run
    std::string r_path, r_model = "DF", r_out = "run_result", r_series;
    CommonFlags r_flags;
    auto* r_cmd = app.add_subcommand("run", "Monte Carlo run of one model");
    r_cmd->add_option("network", r_path, "INP network file")->required();
    r_cmd->add_option("--model", r_model, "model: DF|KF|CF|DA|KA|CA")
        ->check(CLI::IsMember({"DF", "KF", "CF", "DA", "KA", "CA"}));
    r_cmd->add_option("--out", r_out, "output base path (.geojson/.csv)");
    r_cmd->add_option("--dump-series", r_series,
                      "write undamaged-run flow series CSV to this path");
    r_flags.attach(r_cmd);
    r_cmd->callback(
        [&] { exit_code = cmd_run(r_path, r_model, r_flags, r_out, r_series, out); });

    // compare
    std::string c_path, c_out_dir = "compare_out", c_crn = "off";
    CommonFlags c_flags;
    auto* c_cmd = app.add_subcommand("compare", "run all six models and compare");
    c_cmd->add_option("network", c_path, "INP network file")->required();
    c_cmd->add_option("--out-dir", c_out_dir, "output directory");
    c_cmd->add_option("--crn", c_crn, "common random numbers: on|off")
        ->check(CLI::IsMember({"on", "off"}));
    c_flags.attach(c_cmd);
    c_cmd->callback([&] {
        exit_code = cmd_compare(c_path, c_flags, c_crn == "on", c_out_dir, out);
    });

    // arterial
    std::string a_path, a_out = "arterial";
    auto* a_cmd = app.add_subcommand("arterial", "extract the arterial network");
    a_cmd->add_option("network", a_path, "INP network file")->required();
    a_cmd->add_option("--out", a_out, "output base path (.inp/_mapping.csv)");
    a_cmd->callback([&] { exit_code = cmd_arterial(a_path, a_out, out); });

    // generate
    SynthesisParams g_params;
    std::uint64_t g_seed = 1;
    std::string g_out = "network.inp";
    auto* g_cmd = app.add_subcommand("generate", "generate a synthetic network");
    g_cmd->add_option("--nodes", g_params.node_count, "total node count")->required();
    g_cmd->add_option("--pumps", g_params.pump_count, "pump count");
    g_cmd->add_option("--tanks", g_params.tank_count, "tank count");
    g_cmd->add_option("--seed", g_seed, "generator seed");
    g_cmd->add_option("--out", g_out, "output INP path");
    g_cmd->add_option("--inflow", g_params.base_inflow, "base inflow per junction [m3/s]");
    g_cmd->add_option("--target-util", g_params.target_utilization,
                      "design utilization of Q_full");
    g_cmd->callback([&] { exit_code = cmd_generate(g_params, g_seed, g_out, out); });

    std::vector<const char*> argv;
    argv.push_back("sewersim");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        std::ostringstream err;
        int code = app.exit(e, out, err);
        out << err.str();
        return code == 0 ? kExitOk : kExitError;
    } catch (const ParseError& e) {
        out << "parse error: " << e.what() << "\n";
        return is_semantic_parse_error(e) ? kExitValidation : kExitError;
    } catch (const SimulationFailure& e) {
        out << "error: " << e.what() << " (replay with --seed "
            << e.master_seed << ", simulation index " << e.sim_index << ")\n";
        return kExitError;
    } catch (const std::exception& e) {
        out << "error: " << e.what() << "\n";
        return kExitError;
    }
    return exit_code;
}

inline int run_cli(int argc, char** argv, std::ostream& out = std::cout) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run_cli(std::move(args), out);
}

} // namespace sewersim::cli

#endif
