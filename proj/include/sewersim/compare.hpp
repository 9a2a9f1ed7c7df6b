#ifndef SEWERSIM_COMPARE_HPP
#define SEWERSIM_COMPARE_HPP

#include "sewersim/montecarlo.hpp"

#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace sewersim {

// Mean absolute error over nodes between two expanded estimate vectors.
inline double mae(const std::vector<NodePmEstimate>& a,
                  const std::vector<NodePmEstimate>& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("MAE requires matching node sets");
    if (a.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].node_id != b[i].node_id)
            throw std::invalid_argument("MAE requires matching node sets");
        sum += std::abs(a[i].pm_mean - b[i].pm_mean);
    }
    return sum / static_cast<double>(a.size());
}

inline double average_pm(const std::vector<NodePmEstimate>& est) {
    if (est.empty()) throw std::invalid_argument("average_pm of empty estimates");
    double sum = 0.0;
    for (const auto& e : est) sum += e.pm_mean;
    return sum / static_cast<double>(est.size());
}

struct CompareOptions {
    RunOptions run;
    bool common_random_numbers = false;  // share damage draws across models
};

struct ComparisonReport {
    std::vector<ModelSpec> specs;                       // DF KF CF DA KA CA
    std::vector<ModelRunResult> runs;                   // native granularity
    std::vector<std::vector<NodePmEstimate>> expanded;  // demand nodes, full network
    std::vector<double> average_pm_by_model;
    std::vector<double> mae_vs_baseline;  // baseline is DF
    double mae_kf_cf = 0.0;
    double mae_ka_ca = 0.0;

    std::size_t index_of(const std::string& name) const {
        for (std::size_t i = 0; i < specs.size(); ++i)
            if (specs[i].name() == name) return i;
        throw std::invalid_argument("model '" + name + "' not in report");
    }
};

/**
 * Run all six model specs, expand arterial results to the full node set,
 * and compute the cross-model comparison metrics against the DF baseline.
 * The per-node tables cover the demand (non-outfall) nodes.
 */
inline ComparisonReport run_matrix(const Network& net, const DamageModel& damage,
                                   const CompareOptions& opt) {
    ComparisonReport rep;
    rep.specs = ModelSpec::all_six();
    for (std::size_t m = 0; m < rep.specs.size(); ++m) {
        RunOptions run_opt = opt.run;
        if (!opt.common_random_numbers)
            run_opt.master_seed = mix64(opt.run.master_seed + kGolden * (m + 1));
        ModelOutput out;
        try {
            out = run_model(net, rep.specs[m], damage, run_opt);
        } catch (const std::exception& e) {
            throw std::runtime_error("model " + rep.specs[m].name() + ": " + e.what());
        }
        rep.runs.push_back(std::move(out.run));
        std::vector<NodePmEstimate> demand_only;
        for (std::size_t v = 0; v < net.node_count(); ++v)
            if (net.is_demand_node(v)) demand_only.push_back(out.full_estimates[v]);
        rep.expanded.push_back(std::move(demand_only));
    }
    for (const auto& est : rep.expanded) {
        rep.average_pm_by_model.push_back(average_pm(est));
        rep.mae_vs_baseline.push_back(mae(rep.expanded[0], est));
    }
    rep.mae_kf_cf = mae(rep.expanded[rep.index_of("KF")], rep.expanded[rep.index_of("CF")]);
    rep.mae_ka_ca = mae(rep.expanded[rep.index_of("KA")], rep.expanded[rep.index_of("CA")]);
    return rep;
}

// Scatter table for one model against the baseline.
inline std::string write_scatter_csv(const std::vector<NodePmEstimate>& baseline,
                                     const std::vector<NodePmEstimate>& model) {
    if (baseline.size() != model.size())
        throw std::invalid_argument("scatter requires matching node sets");
    std::string out = "node_id,pm_baseline,pm_model\n";
    char buf[128];
    for (std::size_t i = 0; i < baseline.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g\n", baseline[i].node_id.c_str(),
                      baseline[i].pm_mean, model[i].pm_mean);
        out += buf;
    }
    return out;
}

inline std::string format_s3(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

/// Human-readable comparison summary; timing fields are wall-clock and are
/// kept apart from the deterministic metrics.
inline std::string report_text(const ComparisonReport& rep) {
    std::ostringstream out;
    out << "Model  N      AvgDelta  AvgPM    MAEvsDF  Converged\n";
    for (std::size_t m = 0; m < rep.specs.size(); ++m) {
        char line[160];
        std::snprintf(line, sizeof(line), "%-6s %-6zu %-9.4f %-8.4f %-8.4f %s\n",
                      rep.specs[m].name().c_str(), rep.runs[m].simulations,
                      rep.runs[m].average_delta, rep.average_pm_by_model[m],
                      rep.mae_vs_baseline[m], rep.runs[m].converged ? "yes" : "no");
        out << line;
    }
    out << "MAE(KF,CF) = " << format_s3(rep.mae_kf_cf) << "\n";
    out << "MAE(KA,CA) = " << format_s3(rep.mae_ka_ca) << "\n";
    out << "-- timing (wall clock, informational) --\n";
    for (std::size_t m = 0; m < rep.specs.size(); ++m) {
        out << rep.specs[m].name() << " total " << format_s3(rep.runs[m].wall_time_s)
            << " s, per simulation " << format_s3(rep.runs[m].time_per_sim_s) << " s\n";
    }
    return out.str();
}

/// Machine-readable key-value summary (one `key=value` per line).
inline std::string report_kv(const ComparisonReport& rep) {
    std::ostringstream out;
    char buf[160];
    for (std::size_t m = 0; m < rep.specs.size(); ++m) {
        const auto name = rep.specs[m].name();
        std::snprintf(buf, sizeof(buf), "average_pm.%s=%.17g\n", name.c_str(),
                      rep.average_pm_by_model[m]);
        out << buf;
        std::snprintf(buf, sizeof(buf), "mae_vs_DF.%s=%.17g\n", name.c_str(),
                      rep.mae_vs_baseline[m]);
        out << buf;
        std::snprintf(buf, sizeof(buf), "n_sims.%s=%zu\n", name.c_str(),
                      rep.runs[m].simulations);
        out << buf;
        std::snprintf(buf, sizeof(buf), "avg_delta.%s=%.17g\n", name.c_str(),
                      rep.runs[m].average_delta);
        out << buf;
        std::snprintf(buf, sizeof(buf), "time_per_sim.%s=%.3g\n", name.c_str(),
                      rep.runs[m].time_per_sim_s);
        out << buf;
    }
    std::snprintf(buf, sizeof(buf), "pairwise_mae.KF_CF=%.17g\n", rep.mae_kf_cf);
    out << buf;
    std::snprintf(buf, sizeof(buf), "pairwise_mae.KA_CA=%.17g\n", rep.mae_ka_ca);
    out << buf;
    return out.str();
}

} // namespace sewersim

#endif
