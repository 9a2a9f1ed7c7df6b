#ifndef SEWERSIM_ANALYSIS_HPP
#define SEWERSIM_ANALYSIS_HPP

#include "sewersim/damage.hpp"
#include "sewersim/hydraulics.hpp"
#include "sewersim/network.hpp"

#include <vector>

namespace sewersim {

/// Nodes with a directed path of surviving components to some outfall.
struct ConnectivityResult {
    std::vector<bool> connected;  // by node index

    bool is_connected(std::size_t node) const { return connected[node]; }
};

inline ConnectivityResult connected_nodes(const DamagedNetwork& dn) {
    const Network& net = dn.network();
    ConnectivityResult res;
    res.connected.assign(net.node_count(), false);

    // Reverse reachability from the outfalls along surviving links.
    std::vector<std::size_t> stack;
    for (std::size_t i = 0; i < net.node_count(); ++i) {
        if (net.node(i).kind == NodeKind::Outfall && dn.node_alive[i]) {
            res.connected[i] = true;
            stack.push_back(i);
        }
    }
    while (!stack.empty()) {
        std::size_t v = stack.back();
        stack.pop_back();
        for (auto li : net.in_links(v)) {
            if (!dn.link_alive[li]) continue;
            auto from = net.link(li).from;
            if (from == npos || !dn.node_alive[from] || res.connected[from]) continue;
            res.connected[from] = true;
            stack.push_back(from);
        }
    }
    return res;
}

inline double pm_connectivity(std::size_t node, const ConnectivityResult& conn) {
    return conn.is_connected(node) ? 1.0 : 0.0;
}

enum class CapacityBasis {
    Effective,  // I_80 threshold at 0.8 * c * Q_full (default)
    Original    // I_80 threshold at 0.8 * Q_full regardless of damage
};

struct PmOptions {
    CapacityBasis capacity_basis = CapacityBasis::Effective;
};

/**
 * Fixed per-node downstream paths over the undamaged topology, shared by
 * all scenarios: Eq.-style path s_i with n_i counting conduits only.
 */
class PathTable {
public:
    explicit PathTable(const Network& net) {
        paths_.resize(net.node_count());
        for (std::size_t i = 0; i < net.node_count(); ++i)
            if (net.is_demand_node(i)) paths_[i] = downstream_path(net, i);
    }

    const std::vector<std::size_t>& path(std::size_t node) const { return paths_[node]; }

private:
    std::vector<std::vector<std::size_t>> paths_;
};

/**
 * Flow performance measure: 0 when disconnected, otherwise
 * 1 - (number of path conduits with max flow above 80% of capacity) / n_i.
 * Ties at exactly the threshold do not count as exceeding.
 */
inline double pm_flow(std::size_t node, const RoutingResult& routing,
                      const DamagedNetwork& dn, const std::vector<std::size_t>& path,
                      const ConnectivityResult& conn, const PmOptions& opt = {}) {
    if (!conn.is_connected(node)) return 0.0;
    if (path.empty()) return 1.0;
    const Network& net = dn.network();
    std::size_t over = 0;
    for (auto li : path) {
        if (li >= routing.max_abs_flow.size())
            throw std::logic_error("routing record missing for path conduit");
        double q_cap = opt.capacity_basis == CapacityBasis::Effective
                           ? dn.effective_capacity(li)
                           : net.full_flow(li);
        if (routing.max_abs_flow[li] > 0.8 * q_cap) ++over;
    }
    return 1.0 - static_cast<double>(over) / static_cast<double>(path.size());
}

/// Restrict a damaged network to its connected portion: disconnected nodes
/// and any link touching them drop out of the routed graph.
inline DamagedNetwork restrict_to_connected(const DamagedNetwork& dn,
                                            const ConnectivityResult& conn) {
    DamagedNetwork out = dn;
    const Network& net = dn.network();
    for (std::size_t i = 0; i < net.node_count(); ++i)
        if (!conn.connected[i]) out.node_alive[i] = false;
    for (std::size_t i = 0; i < net.link_count(); ++i) {
        const auto& l = net.link(i);
        if (l.from == npos || l.to == npos || !out.node_alive[l.from] ||
            !out.node_alive[l.to])
            out.link_alive[i] = false;
    }
    return out;
}

} // namespace sewersim

#endif
