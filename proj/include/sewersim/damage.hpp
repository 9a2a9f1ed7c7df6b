#ifndef SEWERSIM_DAMAGE_HPP
#define SEWERSIM_DAMAGE_HPP

#include "sewersim/network.hpp"
#include "sewersim/rng.hpp"

#include <cmath>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

namespace sewersim {

enum class DamageKind { Undamaged, CapacityFactor, Failed };

struct DamageState {
    DamageKind kind = DamageKind::Undamaged;
    double capacity = 1.0;  // remaining fraction of flow capacity, (0,1)

    static DamageState undamaged() { return {DamageKind::Undamaged, 1.0}; }
    static DamageState failed() { return {DamageKind::Failed, 0.0}; }
    static DamageState capacity_factor(double c) { return {DamageKind::CapacityFactor, c}; }

    bool operator==(const DamageState&) const = default;
};

/// Ordered categorical distribution over damage states for one component class.
struct DamageStateDistribution {
    std::vector<std::pair<DamageState, double>> entries;

    void check() const {
        double sum = 0.0;
        for (const auto& [state, p] : entries) {
            if (p < 0.0) throw std::invalid_argument("damage probability must be >= 0");
            if (state.kind == DamageKind::CapacityFactor &&
                !(state.capacity > 0.0 && state.capacity < 1.0))
                throw std::invalid_argument("capacity factor must lie in (0,1)");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw std::invalid_argument("damage probabilities must sum to 1");
    }

    DamageState draw(double u) const {
        double acc = 0.0;
        for (const auto& [state, p] : entries) {
            acc += p;
            if (u < acc) return state;
        }
        return entries.back().first;
    }
};

/// Per-class damage distributions; defaults follow the assumed component
/// damage probabilities (tanks/pumps fail with 0.1, pipes have partial
/// capacity-loss states).
struct DamageModel {
    DamageStateDistribution tanks{{{DamageState::undamaged(), 0.9},
                                   {DamageState::failed(), 0.1}}};
    DamageStateDistribution pumps{{{DamageState::undamaged(), 0.9},
                                   {DamageState::failed(), 0.1}}};
    DamageStateDistribution pipes{{{DamageState::undamaged(), 0.85},
                                   {DamageState::capacity_factor(0.5), 0.1},
                                   {DamageState::capacity_factor(0.1), 0.04},
                                   {DamageState::failed(), 0.01}}};

    void check() const {
        tanks.check();
        pumps.check();
        pipes.check();
    }

    static DamageModel all_undamaged() {
        DamageModel m;
        m.tanks = {{{DamageState::undamaged(), 1.0}}};
        m.pumps = {{{DamageState::undamaged(), 1.0}}};
        m.pipes = {{{DamageState::undamaged(), 1.0}}};
        return m;
    }
};

/**
 * One Monte Carlo draw of component damage states. Covers exactly the
 * damageable components: conduits, pumps and tanks. Junctions and
 * outfalls are never damaged.
 */
struct DamageScenario {
    std::uint64_t master_seed = 0;
    std::uint64_t sim_index = 0;
    std::vector<DamageState> link_states;  // by link index
    std::vector<DamageState> node_states;  // by node index; only tanks vary

    const DamageState& state_of_link(std::size_t i) const { return link_states[i]; }
    const DamageState& state_of_node(std::size_t i) const { return node_states[i]; }
};

// Independent per-component draw keyed by (master_seed, sim_index,
// component id), so the scenario does not depend on iteration order or
// worker scheduling.
inline DamageScenario sample_scenario(const DamageModel& model, const Network& net,
                                      std::uint64_t master_seed, std::uint64_t sim_index) {
    DamageScenario sc;
    sc.master_seed = master_seed;
    sc.sim_index = sim_index;
    sc.link_states.assign(net.link_count(), DamageState::undamaged());
    sc.node_states.assign(net.node_count(), DamageState::undamaged());

    for (std::size_t i = 0; i < net.node_count(); ++i) {
        if (net.node(i).kind != NodeKind::Storage) continue;
        double u = uniform01(stream_key(master_seed, sim_index, hash_id(net.node(i).id)));
        sc.node_states[i] = model.tanks.draw(u);
    }
    for (std::size_t i = 0; i < net.link_count(); ++i) {
        const auto& l = net.link(i);
        double u = uniform01(stream_key(master_seed, sim_index, hash_id(l.id)));
        sc.link_states[i] = l.kind == LinkKind::Conduit ? model.pipes.draw(u)
                                                        : model.pumps.draw(u);
    }
    return sc;
}

/**
 * A damage scenario applied to a network, without touching the original:
 * failed components (and everything attached to a failed tank) drop out of
 * the routed graph; partially damaged conduits carry a capacity factor.
 */
struct DamagedNetwork {
    const Network* base = nullptr;
    std::vector<bool> node_alive;
    std::vector<bool> link_alive;
    std::vector<double> capacity_factor;  // per link; 1.0 when undamaged

    const Network& network() const { return *base; }

    // Effective Manning n and capacity for a conduit under partial damage:
    // n_eff = n / c scales conveyance by exactly c.
    double effective_manning(std::size_t link) const {
        return base->link(link).manning_n / capacity_factor[link];
    }

    double effective_capacity(std::size_t link) const {
        return capacity_factor[link] * base->full_flow(link);
    }
};

inline DamagedNetwork apply_scenario(const Network& net, const DamageScenario& sc) {
    if (sc.link_states.size() != net.link_count() ||
        sc.node_states.size() != net.node_count())
        throw std::invalid_argument("scenario does not cover this network");

    DamagedNetwork dn;
    dn.base = &net;
    dn.node_alive.assign(net.node_count(), true);
    dn.link_alive.assign(net.link_count(), true);
    dn.capacity_factor.assign(net.link_count(), 1.0);

    for (std::size_t i = 0; i < net.node_count(); ++i)
        if (sc.node_states[i].kind == DamageKind::Failed) dn.node_alive[i] = false;

    for (std::size_t i = 0; i < net.link_count(); ++i) {
        const auto& l = net.link(i);
        const auto& st = sc.link_states[i];
        if (st.kind == DamageKind::Failed) dn.link_alive[i] = false;
        if (st.kind == DamageKind::CapacityFactor) dn.capacity_factor[i] = st.capacity;
        // Links attached to a failed tank disappear with it.
        if (l.from != npos && !dn.node_alive[l.from]) dn.link_alive[i] = false;
        if (l.to != npos && !dn.node_alive[l.to]) dn.link_alive[i] = false;
    }
    return dn;
}

/**
 * Parse a damage-model override file: lines of `<class> <state> <probability>`
 * with class pipes|tanks|pumps and state undamaged|failed|capacity:<c>.
 * A class with any entries replaces its default distribution entirely.
 */
inline std::string err_at(int line, const std::string& msg) {
    return "damage model line " + std::to_string(line) + ": " + msg;
}

inline DamageModel parse_damage_model(const std::string& text) {
    DamageModel model;
    DamageStateDistribution pipes, tanks, pumps;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        auto semi = raw.find(';');
        if (semi != std::string::npos) raw = raw.substr(0, semi);
        auto hash = raw.find('#');
        if (hash != std::string::npos) raw = raw.substr(0, hash);
        std::istringstream fs(raw);
        std::string cls, state;
        double prob;
        if (!(fs >> cls)) continue;
        if (!(fs >> state >> prob))
            throw std::runtime_error(err_at(lineno, "expected '<class> <state> <probability>'"));
        DamageState st;
        if (state == "undamaged") {
            st = DamageState::undamaged();
        } else if (state == "failed") {
            st = DamageState::failed();
        } else if (state.rfind("capacity:", 0) == 0) {
            st = DamageState::capacity_factor(std::stod(state.substr(9)));
        } else {
            throw std::runtime_error(err_at(lineno, "unknown damage state '" + state + "'"));
        }
        if (cls == "pipes") pipes.entries.emplace_back(st, prob);
        else if (cls == "tanks") tanks.entries.emplace_back(st, prob);
        else if (cls == "pumps") pumps.entries.emplace_back(st, prob);
        else throw std::runtime_error(err_at(lineno, "unknown component class '" + cls + "'"));
    }
    if (!pipes.entries.empty()) model.pipes = std::move(pipes);
    if (!tanks.entries.empty()) model.tanks = std::move(tanks);
    if (!pumps.entries.empty()) model.pumps = std::move(pumps);
    model.check();
    return model;
}

} // namespace sewersim

#endif
