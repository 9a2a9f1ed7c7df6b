#ifndef SEWERSIM_MONTECARLO_HPP
#define SEWERSIM_MONTECARLO_HPP

#include "sewersim/analysis.hpp"
#include "sewersim/damage.hpp"
#include "sewersim/hydraulics.hpp"
#include "sewersim/network.hpp"

#include <chrono>
#include <cmath>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace sewersim {

enum class Granularity { Full, Arterial };
enum class Fidelity { DynamicWave, KinematicWave, Connectivity };

/// One of the six tested model combinations (DF, KF, CF, DA, KA, CA).
struct ModelSpec {
    Granularity granularity = Granularity::Full;
    Fidelity fidelity = Fidelity::DynamicWave;

    std::string name() const {
        std::string f = fidelity == Fidelity::DynamicWave    ? "D"
                        : fidelity == Fidelity::KinematicWave ? "K"
                                                              : "C";
        return f + (granularity == Granularity::Full ? "F" : "A");
    }

    static ModelSpec from_name(const std::string& name) {
        if (name.size() != 2) throw std::invalid_argument("unknown model '" + name + "'");
        ModelSpec spec;
        switch (name[0]) {
        case 'D': spec.fidelity = Fidelity::DynamicWave; break;
        case 'K': spec.fidelity = Fidelity::KinematicWave; break;
        case 'C': spec.fidelity = Fidelity::Connectivity; break;
        default: throw std::invalid_argument("unknown model '" + name + "'");
        }
        switch (name[1]) {
        case 'F': spec.granularity = Granularity::Full; break;
        case 'A': spec.granularity = Granularity::Arterial; break;
        default: throw std::invalid_argument("unknown model '" + name + "'");
        }
        return spec;
    }

    static std::vector<ModelSpec> all_six() {
        return {{Granularity::Full, Fidelity::DynamicWave},
                {Granularity::Full, Fidelity::KinematicWave},
                {Granularity::Full, Fidelity::Connectivity},
                {Granularity::Arterial, Fidelity::DynamicWave},
                {Granularity::Arterial, Fidelity::KinematicWave},
                {Granularity::Arterial, Fidelity::Connectivity}};
    }
};

// Convergence statistic of the PM estimator; undefined at PM = 0, so the
// mean is clamped to 1/N there (flags zero-success nodes as unconverged
// without dividing by zero).
inline double delta_pm(double pm_mean, std::size_t n) {
    if (n < 1) throw std::invalid_argument("delta_pm requires N >= 1");
    if (pm_mean >= 1.0) return 0.0;
    double p = std::max(pm_mean, 1.0 / static_cast<double>(n));
    return std::sqrt((1.0 - p) / (static_cast<double>(n) * p));
}

struct NodePmEstimate {
    std::string node_id;
    double pm_mean = 0.0;
    std::size_t n_sims = 0;
    double delta = 0.0;
};

struct ConvergenceConfig {
    std::size_t batch_size = 100;
    double target_avg_delta = 0.1;
    std::size_t max_simulations = 10000;

    void check() const {
        if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
        if (!(target_avg_delta > 0.0)) throw std::invalid_argument("target must be > 0");
    }
};

/**
 * Running per-node PM means with the batch convergence rule: after each
 * batch, stop when the average delta over the demand nodes drops below
 * target (at least one batch, at most the simulation cap).
 */
class ConvergenceTracker {
public:
    ConvergenceTracker(std::size_t node_count, std::vector<std::size_t> demand_nodes)
        : sums_(node_count, 0.0), demand_nodes_(std::move(demand_nodes)) {}

    // Samples must be accumulated in simulation-index order for
    // bit-reproducible means.
    void add_sample(const std::vector<double>& pm) {
        for (std::size_t i = 0; i < sums_.size(); ++i) sums_[i] += pm[i];
        ++count_;
    }

    std::size_t count() const { return count_; }

    double mean(std::size_t node) const {
        return count_ ? sums_[node] / static_cast<double>(count_) : 0.0;
    }

    double average_delta() const {
        if (demand_nodes_.empty() || count_ == 0) return 0.0;
        double sum = 0.0;
        for (auto v : demand_nodes_) sum += delta_pm(mean(v), count_);
        return sum / static_cast<double>(demand_nodes_.size());
    }

    const std::vector<std::size_t>& demand_nodes() const { return demand_nodes_; }

private:
    std::vector<double> sums_;
    std::size_t count_ = 0;
    std::vector<std::size_t> demand_nodes_;
};

struct ModelRunResult {
    ModelSpec spec;
    std::vector<NodePmEstimate> estimates;  // on the network the model ran on
    std::size_t simulations = 0;
    double average_delta = 0.0;
    bool converged = false;
    double wall_time_s = 0.0;
    double time_per_sim_s = 0.0;
};

struct RunOptions {
    SolverConfig solver;
    ConvergenceConfig convergence;
    std::uint64_t master_seed = 1;
    unsigned workers = 1;
    PmOptions pm;
};

struct SimulationFailure : std::runtime_error {
    std::uint64_t master_seed;
    std::uint64_t sim_index;
    SimulationFailure(std::uint64_t seed, std::uint64_t index, const std::string& what)
        : std::runtime_error("simulation " + std::to_string(index) + " (seed " +
                             std::to_string(seed) + "): " + what),
          master_seed(seed), sim_index(index) {}
};

namespace detail_mc {

/// Scenario evaluation context reused across simulations of one model run.
struct Evaluator {
    const Network* net;
    Fidelity fidelity;
    const DamageModel* damage;
    SolverConfig solver;
    PmOptions pm_options;
    std::uint64_t master_seed;
    const PathTable* paths;
    const KinematicTables* kin_tables;

    // PM per node for one simulation index.
    std::vector<double> evaluate(std::uint64_t sim_index) const {
        DamageScenario sc = sample_scenario(*damage, *net, master_seed, sim_index);
        DamagedNetwork dn = apply_scenario(*net, sc);
        ConnectivityResult conn = connected_nodes(dn);

        std::vector<double> pm(net->node_count(), 0.0);
        if (fidelity == Fidelity::Connectivity) {
            for (std::size_t v = 0; v < net->node_count(); ++v)
                pm[v] = pm_connectivity(v, conn);
            return pm;
        }

        DamagedNetwork routed = restrict_to_connected(dn, conn);
        InflowSet inflows = InflowSet::from_network(*net, &conn.connected);
        RoutingResult routing;
        try {
            routing = fidelity == Fidelity::KinematicWave
                          ? route_kinematic(routed, inflows, solver, kin_tables)
                          : route_dynamic(routed, inflows, solver);
        } catch (const SolverError& e) {
            throw SimulationFailure(master_seed, sim_index, e.what());
        }

        // I_80 per conduit, then summed along each node's undamaged path.
        std::vector<unsigned char> over(net->link_count(), 0);
        for (std::size_t li = 0; li < net->link_count(); ++li) {
            if (!routed.link_alive[li] || net->link(li).kind != LinkKind::Conduit) continue;
            double cap = pm_options.capacity_basis == CapacityBasis::Effective
                             ? routed.effective_capacity(li)
                             : net->full_flow(li);
            over[li] = routing.max_abs_flow[li] > 0.8 * cap ? 1 : 0;
        }
        for (std::size_t v = 0; v < net->node_count(); ++v) {
            if (!net->is_demand_node(v)) {
                pm[v] = pm_connectivity(v, conn);
                continue;
            }
            if (!conn.is_connected(v)) continue;  // pm stays 0
            const auto& path = paths->path(v);
            if (path.empty()) {
                pm[v] = 1.0;
                continue;
            }
            std::size_t hits = 0;
            for (auto li : path) hits += over[li];
            pm[v] = 1.0 - static_cast<double>(hits) / static_cast<double>(path.size());
        }
        return pm;
    }
};

inline void run_batch(const Evaluator& eval, std::uint64_t first_index, std::size_t count,
                      unsigned workers, std::vector<std::vector<double>>& out) {
    out.resize(count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) out[i] = eval.evaluate(first_index + i);
        return;
    }
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < count; i += workers)
                    out[i] = eval.evaluate(first_index + i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

} // namespace detail_mc

/**
 * Monte Carlo estimation of the per-node performance measure for one model:
 * sample damage, evaluate PM per node, update running means in
 * simulation-index order, and stop at the first batch boundary where the
 * average delta over the demand nodes is below target. Deterministic for a
 * fixed seed regardless of worker count.
 */
inline ModelRunResult run_model_on(const Network& net, const ModelSpec& spec,
                                   const DamageModel& damage, const RunOptions& opt) {
    opt.convergence.check();
    opt.solver.check();
    damage.check();

    auto t0 = std::chrono::steady_clock::now();

    PathTable paths(net);
    std::optional<KinematicTables> kin;
    if (spec.fidelity == Fidelity::KinematicWave) kin.emplace(net);

    detail_mc::Evaluator eval{&net,
                              spec.fidelity,
                              &damage,
                              opt.solver,
                              opt.pm,
                              opt.master_seed,
                              &paths,
                              kin ? &*kin : nullptr};

    std::vector<std::size_t> demand;
    for (std::size_t v = 0; v < net.node_count(); ++v)
        if (net.is_demand_node(v)) demand.push_back(v);

    ConvergenceTracker tracker(net.node_count(), demand);
    std::vector<std::vector<double>> batch;
    bool converged = false;
    while (tracker.count() < opt.convergence.max_simulations) {
        std::size_t count = std::min(opt.convergence.batch_size,
                                     opt.convergence.max_simulations - tracker.count());
        detail_mc::run_batch(eval, tracker.count(), count, opt.workers, batch);
        for (const auto& pm : batch) tracker.add_sample(pm);
        if (tracker.average_delta() < opt.convergence.target_avg_delta) {
            converged = true;
            break;
        }
    }

    auto t1 = std::chrono::steady_clock::now();

    ModelRunResult res;
    res.spec = spec;
    res.simulations = tracker.count();
    res.average_delta = tracker.average_delta();
    res.converged = converged;
    res.wall_time_s = std::chrono::duration<double>(t1 - t0).count();
    res.time_per_sim_s = res.simulations ? res.wall_time_s / res.simulations : 0.0;
    res.estimates.reserve(net.node_count());
    for (std::size_t v = 0; v < net.node_count(); ++v) {
        NodePmEstimate e;
        e.node_id = net.node(v).id;
        e.n_sims = tracker.count();
        e.pm_mean = net.is_demand_node(v) ? tracker.mean(v) : 1.0;  // outfalls stay up
        e.delta = delta_pm(e.pm_mean, e.n_sims);
        res.estimates.push_back(std::move(e));
    }
    return res;
}

/// Per-full-node estimates: every node carries its aggregation node's value.
inline std::vector<NodePmEstimate> expand_to_full(const std::vector<NodePmEstimate>& est,
                                                  const Network& coarse,
                                                  const Network& full,
                                                  const ArterialMapping& mapping) {
    std::vector<NodePmEstimate> out;
    out.reserve(full.node_count());
    for (std::size_t v = 0; v < full.node_count(); ++v) {
        auto it = mapping.id_map.find(full.node(v).id);
        if (it == mapping.id_map.end())
            throw std::invalid_argument("mapping does not cover node '" + full.node(v).id +
                                        "'");
        auto ci = coarse.node_index(it->second);
        if (ci == npos)
            throw std::invalid_argument("mapping target '" + it->second +
                                        "' missing from arterial network");
        NodePmEstimate e = est[ci];
        e.node_id = full.node(v).id;
        out.push_back(std::move(e));
    }
    return out;
}

/**
 * Run a model spec against a full network: arterial specs extract the
 * arterial network first, run on it, and report estimates expanded back to
 * the full node set.
 */
struct ModelOutput {
    ModelRunResult run;                       // native-granularity result
    std::vector<NodePmEstimate> full_estimates;  // expanded to full nodes
};

inline ModelOutput run_model(const Network& full, const ModelSpec& spec,
                             const DamageModel& damage, const RunOptions& opt) {
    ModelOutput out;
    if (spec.granularity == Granularity::Full) {
        out.run = run_model_on(full, spec, damage, opt);
        out.full_estimates = out.run.estimates;
        return out;
    }
    ArterialExtraction ext = extract_arterial(full);
    out.run = run_model_on(ext.network, spec, damage, opt);
    out.full_estimates = expand_to_full(out.run.estimates, ext.network, full, ext.mapping);
    return out;
}

} // namespace sewersim

#endif
