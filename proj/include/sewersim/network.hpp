#ifndef SEWERSIM_NETWORK_HPP
#define SEWERSIM_NETWORK_HPP

#include "sewersim/geometry.hpp"

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace sewersim {

inline constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

enum class NodeKind { Junction, Storage, Outfall };
enum class LinkKind { Conduit, Pump };

struct Coord {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const Coord&) const = default;
};

struct Junction {
    std::string id;
    double invert_elev = 0.0;
    double rim_elev = 0.0;      // ground surface
    double base_inflow = 0.0;   // dry-weather load [m3/s]
    std::string pattern_id;     // empty = constant 1.0 pattern
    Coord coord;
};

struct StorageTank {
    std::string id;
    double invert_elev = 0.0;
    double max_depth = 0.0;
    double surface_area = 0.0;  // constant [m2]
    Coord coord;
};

struct Outfall {
    std::string id;
    double invert_elev = 0.0;
    Coord coord;
};

struct Conduit {
    std::string id;
    std::string from_node;
    std::string to_node;
    double length = 0.0;
    double manning_n = 0.0;
    double diameter = 0.0;      // circular section only
    double offset_up = 0.0;
    double offset_dn = 0.0;
};

struct Pump {
    std::string id;
    std::string from_node;      // must be a storage tank
    std::string to_node;
    double rated_flow = 0.0;    // constant discharge when on [m3/s]
    double start_depth = 0.0;
    double stop_depth = 0.0;
};

// Flattened storage inside Network; the public structs above are the
// construction and query surface.
struct NodeRecord {
    NodeKind kind = NodeKind::Junction;
    std::string id;
    double invert_elev = 0.0;
    double rim_elev = 0.0;
    double base_inflow = 0.0;
    std::string pattern_id;
    double max_depth = 0.0;
    double surface_area = 0.0;
    Coord coord;
};

struct LinkRecord {
    LinkKind kind = LinkKind::Conduit;
    std::string id;
    std::string from_id;
    std::string to_id;
    std::size_t from = npos;    // resolved node indices; npos if dangling
    std::size_t to = npos;
    double length = 0.0;
    double manning_n = 0.0;
    double diameter = 0.0;
    double offset_up = 0.0;
    double offset_dn = 0.0;
    double rated_flow = 0.0;
    double start_depth = 0.0;
    double stop_depth = 0.0;
};

struct ValidationIssue {
    std::string code;       // e.g. "dangling endpoint", "non-tree topology"
    std::string component;  // offending node/link id
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationIssue> violations;
    std::vector<ValidationIssue> warnings;
    bool pass() const { return violations.empty(); }
};

/**
 * A wastewater collection network: directed graph of junctions, storage
 * tanks and outfalls joined by gravity conduits and pumps.
 *
 * Immutable once frozen; all queries are const and safe to share across
 * concurrent simulation workers.
 */
class Network {
public:
    void add_junction(const Junction& j) {
        NodeRecord r;
        r.kind = NodeKind::Junction;
        r.id = j.id;
        r.invert_elev = j.invert_elev;
        r.rim_elev = j.rim_elev;
        r.base_inflow = j.base_inflow;
        r.pattern_id = j.pattern_id;
        r.coord = j.coord;
        add_node(std::move(r));
    }

    void add_tank(const StorageTank& t) {
        NodeRecord r;
        r.kind = NodeKind::Storage;
        r.id = t.id;
        r.invert_elev = t.invert_elev;
        r.max_depth = t.max_depth;
        r.surface_area = t.surface_area;
        r.coord = t.coord;
        add_node(std::move(r));
    }

    void add_outfall(const Outfall& o) {
        NodeRecord r;
        r.kind = NodeKind::Outfall;
        r.id = o.id;
        r.invert_elev = o.invert_elev;
        r.coord = o.coord;
        add_node(std::move(r));
    }

    void add_conduit(const Conduit& c) {
        LinkRecord r;
        r.kind = LinkKind::Conduit;
        r.id = c.id;
        r.from_id = c.from_node;
        r.to_id = c.to_node;
        r.length = c.length;
        r.manning_n = c.manning_n;
        r.diameter = c.diameter;
        r.offset_up = c.offset_up;
        r.offset_dn = c.offset_dn;
        add_link(std::move(r));
    }

    void add_pump(const Pump& p) {
        LinkRecord r;
        r.kind = LinkKind::Pump;
        r.id = p.id;
        r.from_id = p.from_node;
        r.to_id = p.to_node;
        r.rated_flow = p.rated_flow;
        r.start_depth = p.start_depth;
        r.stop_depth = p.stop_depth;
        add_link(std::move(r));
    }

    void set_pattern(const std::string& id, std::vector<double> multipliers) {
        ensure_mutable();
        patterns_[id] = std::move(multipliers);
    }

    // Resolves link endpoints and builds adjacency. Never throws: broken
    // references stay as npos endpoints for validate() to report.
    void freeze() {
        if (frozen_) return;
        for (auto& l : links_) {
            l.from = node_index(l.from_id);
            l.to = node_index(l.to_id);
        }
        out_links_.assign(nodes_.size(), {});
        in_links_.assign(nodes_.size(), {});
        for (std::size_t i = 0; i < links_.size(); ++i) {
            if (links_[i].from != npos) out_links_[links_[i].from].push_back(i);
            if (links_[i].to != npos) in_links_[links_[i].to].push_back(i);
        }
        frozen_ = true;
    }

    bool frozen() const { return frozen_; }

    std::size_t node_count() const { return nodes_.size(); }
    std::size_t link_count() const { return links_.size(); }
    const NodeRecord& node(std::size_t i) const { return nodes_[i]; }
    const LinkRecord& link(std::size_t i) const { return links_[i]; }

    // Building-phase mutation only (parser fills cross-referenced fields).
    NodeRecord& node_mutable(std::size_t i) {
        ensure_mutable();
        return nodes_[i];
    }

    LinkRecord& link_mutable(std::size_t i) {
        ensure_mutable();
        return links_[i];
    }
    const std::vector<NodeRecord>& nodes() const { return nodes_; }
    const std::vector<LinkRecord>& links() const { return links_; }

    std::size_t node_index(const std::string& id) const {
        auto it = node_by_id_.find(id);
        return it == node_by_id_.end() ? npos : it->second;
    }

    std::size_t link_index(const std::string& id) const {
        auto it = link_by_id_.find(id);
        return it == link_by_id_.end() ? npos : it->second;
    }

    const std::vector<std::size_t>& out_links(std::size_t node) const {
        require_frozen();
        return out_links_[node];
    }

    const std::vector<std::size_t>& in_links(std::size_t node) const {
        require_frozen();
        return in_links_[node];
    }

    const std::map<std::string, std::vector<double>>& patterns() const { return patterns_; }

    // Multiplier for a node's inflow pattern at time t [s]; hourly values,
    // wrapping over the pattern length. Missing pattern = constant 1.0.
    double pattern_multiplier(const std::string& pattern_id, double t) const {
        if (pattern_id.empty()) return 1.0;
        auto it = patterns_.find(pattern_id);
        if (it == patterns_.end() || it->second.empty()) return 1.0;
        auto hour = static_cast<std::size_t>(t / 3600.0);
        return it->second[hour % it->second.size()];
    }

    double inflow_at(std::size_t node, double t) const {
        const auto& n = nodes_[node];
        if (n.kind != NodeKind::Junction || n.base_inflow <= 0.0) return 0.0;
        return n.base_inflow * pattern_multiplier(n.pattern_id, t);
    }

    bool is_demand_node(std::size_t i) const { return nodes_[i].kind != NodeKind::Outfall; }

    // Conduit invert elevations at each end (node invert + offset).
    double conduit_invert_up(std::size_t link) const {
        const auto& l = links_[link];
        return nodes_[l.from].invert_elev + l.offset_up;
    }

    double conduit_invert_dn(std::size_t link) const {
        const auto& l = links_[link];
        return nodes_[l.to].invert_elev + l.offset_dn;
    }

    double bed_slope(std::size_t link) const {
        const auto& l = links_[link];
        return (conduit_invert_up(link) - conduit_invert_dn(link)) / l.length;
    }

    double full_flow(std::size_t link) const {
        const auto& l = links_[link];
        return manning_full_flow(l.diameter, l.manning_n, bed_slope(link));
    }

    std::vector<std::size_t> outfall_indices() const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < nodes_.size(); ++i)
            if (nodes_[i].kind == NodeKind::Outfall) out.push_back(i);
        return out;
    }

    // Field-for-field equality, keyed by id (storage order is a parsing
    // artifact, not a property of the network).
    bool operator==(const Network& other) const {
        if (nodes_.size() != other.nodes_.size() || links_.size() != other.links_.size())
            return false;
        for (const auto& a : nodes_) {
            auto idx = other.node_index(a.id);
            if (idx == npos) return false;
            const auto& b = other.nodes_[idx];
            if (a.kind != b.kind || a.invert_elev != b.invert_elev ||
                a.rim_elev != b.rim_elev || a.base_inflow != b.base_inflow ||
                a.pattern_id != b.pattern_id || a.max_depth != b.max_depth ||
                a.surface_area != b.surface_area || !(a.coord == b.coord))
                return false;
        }
        for (const auto& a : links_) {
            auto idx = other.link_index(a.id);
            if (idx == npos) return false;
            const auto& b = other.links_[idx];
            if (a.kind != b.kind || a.from_id != b.from_id || a.to_id != b.to_id ||
                a.length != b.length || a.manning_n != b.manning_n ||
                a.diameter != b.diameter || a.offset_up != b.offset_up ||
                a.offset_dn != b.offset_dn || a.rated_flow != b.rated_flow ||
                a.start_depth != b.start_depth || a.stop_depth != b.stop_depth)
                return false;
        }
        return patterns_ == other.patterns_;
    }

private:
    void ensure_mutable() const {
        if (frozen_) throw std::logic_error("network is frozen");
    }

    void add_node(NodeRecord&& r) {
        ensure_mutable();
        auto [it, inserted] = node_by_id_.try_emplace(r.id, nodes_.size());
        if (!inserted) duplicate_ids_.push_back(r.id);
        nodes_.push_back(std::move(r));
    }

    void add_link(LinkRecord&& r) {
        ensure_mutable();
        auto [it, inserted] = link_by_id_.try_emplace(r.id, links_.size());
        if (!inserted) duplicate_ids_.push_back(r.id);
        links_.push_back(std::move(r));
    }

    void require_frozen() const {
        if (!frozen_) throw std::logic_error("network must be frozen first");
    }

    std::vector<NodeRecord> nodes_;
    std::vector<LinkRecord> links_;
    std::unordered_map<std::string, std::size_t> node_by_id_;
    std::unordered_map<std::string, std::size_t> link_by_id_;
    std::map<std::string, std::vector<double>> patterns_;
    std::vector<std::vector<std::size_t>> out_links_;
    std::vector<std::vector<std::size_t>> in_links_;
    std::vector<std::string> duplicate_ids_;
    bool frozen_ = false;

    friend ValidationReport validate(const Network&);
};

inline ValidationReport validate(const Network& net) {
    if (!net.frozen()) throw std::logic_error("validate requires a frozen network");
    ValidationReport rep;
    auto violation = [&](std::string code, std::string component, std::string detail) {
        rep.violations.push_back({std::move(code), std::move(component), std::move(detail)});
    };
    auto warning = [&](std::string code, std::string component, std::string detail) {
        rep.warnings.push_back({std::move(code), std::move(component), std::move(detail)});
    };

    for (const auto& id : net.duplicate_ids_)
        violation("duplicate id", id, "id used more than once");

    bool has_outfall = false;
    for (const auto& n : net.nodes()) {
        switch (n.kind) {
        case NodeKind::Junction:
            if (n.rim_elev < n.invert_elev)
                violation("rim below invert", n.id, "rim_elev must be >= invert_elev");
            if (n.base_inflow < 0.0)
                violation("negative inflow", n.id, "base_inflow must be >= 0");
            break;
        case NodeKind::Storage:
            if (!(n.max_depth > 0.0))
                violation("bad tank depth", n.id, "max_depth must be > 0");
            if (!(n.surface_area > 0.0))
                violation("bad tank area", n.id, "surface_area must be > 0");
            break;
        case NodeKind::Outfall:
            has_outfall = true;
            break;
        }
    }
    if (!has_outfall) violation("no outfall", "", "a network requires at least one outfall");

    for (std::size_t i = 0; i < net.link_count(); ++i) {
        const auto& l = net.link(i);
        if (l.from == npos)
            violation("dangling endpoint", l.id, "from node '" + l.from_id + "' not defined");
        if (l.to == npos)
            violation("dangling endpoint", l.id, "to node '" + l.to_id + "' not defined");
        if (l.kind == LinkKind::Conduit) {
            if (!(l.length > 0.0)) violation("bad length", l.id, "length must be > 0");
            if (!(l.manning_n > 0.0)) violation("bad roughness", l.id, "manning_n must be > 0");
            if (!(l.diameter > 0.0)) violation("bad diameter", l.id, "diameter must be > 0");
            if (l.from != npos && l.to != npos && l.length > 0.0 && net.bed_slope(i) <= 0.0)
                warning("adverse slope", l.id, "bed slope S0 <= 0");
        } else {
            if (!(l.rated_flow > 0.0)) violation("bad pump rate", l.id, "rated_flow must be > 0");
            if (!(l.start_depth > l.stop_depth) || l.stop_depth < 0.0)
                violation("bad pump depths", l.id, "requires start_depth > stop_depth >= 0");
            if (l.from != npos) {
                const auto& src = net.node(l.from);
                if (src.kind != NodeKind::Storage)
                    violation("pump source not tank", l.id, "pump must draw from a storage tank");
                else if (l.start_depth > src.max_depth)
                    violation("bad pump depths", l.id, "start_depth exceeds tank max_depth");
            }
        }
    }

    // Tree toward the outfall: at most one outgoing link anywhere, none at
    // outfalls, and every non-outfall node must reach an outfall.
    for (std::size_t i = 0; i < net.node_count(); ++i) {
        const auto& outs = net.out_links(i);
        if (net.node(i).kind == NodeKind::Outfall) {
            if (!outs.empty())
                violation("non-tree topology", net.node(i).id, "outfall has outgoing links");
        } else if (outs.size() > 1) {
            violation("non-tree topology", net.node(i).id,
                      "more than one outgoing link (unique downstream path required)");
        }
    }

    // Cycle check over the flow-direction graph.
    std::vector<int> state(net.node_count(), 0); // 0 unvisited, 1 on path, 2 done
    for (std::size_t start = 0; start < net.node_count(); ++start) {
        std::size_t v = start;
        std::vector<std::size_t> path;
        while (v != npos && state[v] == 0) {
            state[v] = 1;
            path.push_back(v);
            const auto& outs = net.out_links(v);
            std::size_t next = npos;
            for (auto li : outs) {
                if (net.link(li).to != npos) { next = net.link(li).to; break; }
            }
            v = next;
        }
        if (v != npos && state[v] == 1) {
            violation("cycle", net.node(v).id, "flow-direction graph contains a cycle");
        }
        for (auto p : path) state[p] = 2;
    }

    // Reachability to an outfall (only meaningful when no cycle was hit).
    for (std::size_t i = 0; i < net.node_count(); ++i) {
        if (net.node(i).kind == NodeKind::Outfall) continue;
        std::size_t v = i;
        std::size_t hops = 0;
        bool reached = false;
        while (hops <= net.node_count()) {
            const auto& outs = net.out_links(v);
            if (outs.empty() || net.link(outs[0]).to == npos) break;
            v = net.link(outs[0]).to;
            ++hops;
            if (net.node(v).kind == NodeKind::Outfall) { reached = true; break; }
        }
        if (!reached)
            violation("unreachable outfall", net.node(i).id,
                      "no directed path of links to an outfall");
    }

    return rep;
}

/**
 * The unique sequence of gravity conduits from `node` to an outfall.
 * Pumps and tanks are traversed but only conduits are members; Eq.-style
 * path length n_i counts conduits only.
 */
inline std::vector<std::size_t> downstream_path(const Network& net, std::size_t node) {
    if (!net.is_demand_node(node))
        throw std::invalid_argument("downstream_path requires a demand node");
    std::vector<std::size_t> path;
    std::size_t v = node;
    std::size_t hops = 0;
    while (net.node(v).kind != NodeKind::Outfall) {
        const auto& outs = net.out_links(v);
        if (outs.empty() || net.link(outs[0]).to == npos)
            throw std::runtime_error("node '" + net.node(node).id +
                                     "' has no downstream path to an outfall");
        std::size_t li = outs[0];
        if (net.link(li).kind == LinkKind::Conduit) path.push_back(li);
        v = net.link(li).to;
        if (++hops > net.node_count())
            throw std::runtime_error("cycle encountered walking downstream from '" +
                                     net.node(node).id + "'");
    }
    return path;
}

inline std::vector<std::size_t> downstream_path(const Network& net, const std::string& id) {
    auto idx = net.node_index(id);
    if (idx == npos) throw std::invalid_argument("unknown node '" + id + "'");
    return downstream_path(net, idx);
}

/**
 * Association from every full-network node to the arterial node that
 * receives its wastewater. Arterial nodes map to themselves.
 */
struct ArterialMapping {
    // target_full_index[i] = full-network index of the arterial node
    // aggregating node i.
    std::vector<std::size_t> target_full_index;
    std::unordered_map<std::string, std::string> id_map;

    const std::string& target_of(const Network& full, const std::string& id) const {
        auto it = id_map.find(id);
        if (it == id_map.end()) throw std::invalid_argument("node '" + id + "' not mapped");
        (void)full;
        return it->second;
    }
};

struct ArterialExtraction {
    Network network;
    ArterialMapping mapping;
};

/**
 * Extract the arterial network: all tanks and pumps, the node immediately
 * upstream of each tank (aggregation node), and the downstream closure of
 * nodes and links from any tank or pump. Each aggregation node absorbs the
 * wastewater inflow of the capillary nodes draining through it.
 *
 * Outfalls that are not downstream of any tank or pump keep the upstream
 * endpoint of each conduit entering them as an aggregation node, so the
 * mapping stays total and inflow is conserved on multi-outfall networks.
 */
inline ArterialExtraction extract_arterial(const Network& net) {
    bool has_station = false;
    for (const auto& n : net.nodes())
        if (n.kind == NodeKind::Storage) has_station = true;
    for (const auto& l : net.links())
        if (l.kind == LinkKind::Pump) has_station = true;
    if (!has_station)
        throw std::runtime_error("arterial network undefined: no tanks or pumps");

    std::vector<bool> keep_node(net.node_count(), false);
    std::vector<bool> keep_link(net.link_count(), false);

    // Seeds: tanks, pump endpoints, and downstream closure from them.
    std::vector<std::size_t> stack;
    auto mark_node = [&](std::size_t v) {
        if (v != npos && !keep_node[v]) {
            keep_node[v] = true;
            stack.push_back(v);
        }
    };
    for (std::size_t i = 0; i < net.node_count(); ++i)
        if (net.node(i).kind == NodeKind::Storage) mark_node(i);
    for (std::size_t i = 0; i < net.link_count(); ++i) {
        const auto& l = net.link(i);
        if (l.kind == LinkKind::Pump) {
            keep_link[i] = true;
            mark_node(l.from);
            mark_node(l.to);
        }
    }
    while (!stack.empty()) {
        std::size_t v = stack.back();
        stack.pop_back();
        for (auto li : net.out_links(v)) {
            keep_link[li] = true;
            mark_node(net.link(li).to);
        }
    }

    // Aggregation nodes: upstream endpoint of every conduit entering a tank,
    // plus (for outfalls with no station upstream) the endpoints of conduits
    // entering the outfall; keep those entering conduits as well.
    for (std::size_t i = 0; i < net.link_count(); ++i) {
        const auto& l = net.link(i);
        if (l.kind != LinkKind::Conduit || l.to == npos || l.from == npos) continue;
        bool into_tank = net.node(l.to).kind == NodeKind::Storage;
        bool into_uncovered_outfall =
            net.node(l.to).kind == NodeKind::Outfall && !keep_link[i];
        if (into_tank || into_uncovered_outfall) {
            keep_node[l.from] = true;
            keep_link[i] = true;
            keep_node[l.to] = true;
        }
    }

    // Map every node to the first retained node on its downstream walk.
    ArterialMapping mapping;
    mapping.target_full_index.assign(net.node_count(), npos);
    for (std::size_t i = 0; i < net.node_count(); ++i) {
        std::size_t v = i;
        std::size_t hops = 0;
        while (v != npos && !keep_node[v] && hops <= net.node_count()) {
            const auto& outs = net.out_links(v);
            v = outs.empty() ? npos : net.link(outs[0]).to;
            ++hops;
        }
        if (v == npos || !keep_node[v])
            throw std::runtime_error("node '" + net.node(i).id +
                                     "' has no downstream arterial node");
        mapping.target_full_index[i] = v;
        mapping.id_map[net.node(i).id] = net.node(v).id;
    }

    // Aggregated inflow: sum of base inflows over the preimage of each
    // target, accumulated in node-index order so totals are reproducible.
    std::vector<double> inflow(net.node_count(), 0.0);
    for (std::size_t i = 0; i < net.node_count(); ++i)
        inflow[mapping.target_full_index[i]] += net.node(i).base_inflow;

    Network arterial;
    for (std::size_t i = 0; i < net.node_count(); ++i) {
        if (!keep_node[i]) continue;
        const auto& n = net.node(i);
        switch (n.kind) {
        case NodeKind::Junction: {
            Junction j{n.id, n.invert_elev, n.rim_elev, inflow[i], n.pattern_id, n.coord};
            arterial.add_junction(j);
            break;
        }
        case NodeKind::Storage:
            arterial.add_tank({n.id, n.invert_elev, n.max_depth, n.surface_area, n.coord});
            break;
        case NodeKind::Outfall:
            arterial.add_outfall({n.id, n.invert_elev, n.coord});
            break;
        }
    }
    for (std::size_t i = 0; i < net.link_count(); ++i) {
        if (!keep_link[i]) continue;
        const auto& l = net.link(i);
        if (l.kind == LinkKind::Conduit) {
            arterial.add_conduit({l.id, l.from_id, l.to_id, l.length, l.manning_n,
                                  l.diameter, l.offset_up, l.offset_dn});
        } else {
            arterial.add_pump({l.id, l.from_id, l.to_id, l.rated_flow, l.start_depth,
                               l.stop_depth});
        }
    }
    for (const auto& [pid, mult] : net.patterns()) arterial.set_pattern(pid, mult);
    arterial.freeze();
    return {std::move(arterial), std::move(mapping)};
}

} // namespace sewersim

#endif
