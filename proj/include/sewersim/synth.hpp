#ifndef SEWERSIM_SYNTH_HPP
#define SEWERSIM_SYNTH_HPP

#include "sewersim/geometry.hpp"
#include "sewersim/network.hpp"
#include "sewersim/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace sewersim {

/**
 * Parameters for the synthetic tree-network generator. node_count is the
 * total number of nodes (outfall and tanks included); the generator builds
 * min(pump_count, tank_count) pump stations, since a wet well without a
 * pump would dead-end the tree.
 */
struct SynthesisParams {
    std::size_t node_count = 100;
    std::size_t pump_count = 1;
    std::size_t tank_count = 1;
    double diameter_min = 0.2;   // m; required capacity may push above
    double diameter_max = 2.0;
    double slope_min = 0.004;
    double slope_max = 0.02;
    double length_min = 50.0;    // m
    double length_max = 200.0;
    double manning_n = 0.013;
    double base_inflow = 0.001953125;  // m3/s per junction; dyadic so sums are exact
    double target_utilization = 0.5;   // max steady flow / Q_full

    void check() const {
        if (node_count < 2) throw std::invalid_argument("node_count must be >= 2");
        if (!(target_utilization > 0.0 && target_utilization < 0.8))
            throw std::invalid_argument("target utilization must lie in (0, 0.8)");
        if (!(slope_min > 0.0 && slope_max >= slope_min))
            throw std::invalid_argument("bad slope range");
        if (!(length_min > 0.0 && length_max >= length_min))
            throw std::invalid_argument("bad length range");
        if (!(diameter_min > 0.0 && diameter_max >= diameter_min))
            throw std::invalid_argument("bad diameter range");
        if (!(manning_n > 0.0)) throw std::invalid_argument("manning_n must be > 0");
        if (base_inflow < 0.0) throw std::invalid_argument("base_inflow must be >= 0");
    }
};

namespace detail_synth {

struct ProtoNode {
    std::size_t parent = npos;   // downstream neighbor
    double invert = 0.0;
    double slope = 0.0;          // of the conduit toward parent
    double length = 0.0;
    double cover = 3.0;
    double x = 0.0, y = 0.0;
    bool is_tank = false;
    bool pumped = false;         // link toward parent is a pump
    double tank_area = 0.0;
    double tank_max_depth = 0.0;
    double rated_flow = 0.0;
};

} // namespace detail_synth

/**
 * Deterministic synthetic collection network: a random tree draining to a
 * single outfall, pump stations inserted on interior edges, and diameters
 * sized from the accumulated design flow so that undamaged steady
 * utilization stays at or below the target everywhere.
 */
inline Network generate_synthetic(const SynthesisParams& params, std::uint64_t seed) {
    params.check();
    SplitMix64 rng(mix64(seed ^ 0x73796e7468ULL));

    std::size_t stations = std::min(params.pump_count, params.tank_count);
    if (params.node_count < 2 + 2 * stations)
        stations = params.node_count >= 4 ? (params.node_count - 2) / 2 : 0;
    std::size_t junctions = params.node_count - 1 - stations;

    using detail_synth::ProtoNode;
    // Index 0 is the outfall; junctions come first, tanks appended later.
    std::vector<ProtoNode> proto(1 + junctions);
    proto[0].invert = 0.0;

    for (std::size_t i = 1; i < proto.size(); ++i) {
        // Bias toward extending the most recent chain for realistic depth.
        std::size_t parent;
        if (i == 1) {
            parent = 0;
        } else if (rng.next_double() < 0.75) {
            parent = i - 1;
        } else {
            parent = rng.next_below(i);
        }
        auto& p = proto[i];
        p.parent = parent;
        p.length = rng.uniform(params.length_min, params.length_max);
        p.slope = rng.uniform(params.slope_min, params.slope_max);
        p.invert = proto[parent].invert + p.slope * p.length;
        p.cover = rng.uniform(1.5, 2.5);
        double angle = rng.uniform(0.0, 2.0 * kPi);
        p.x = proto[parent].x + p.length * std::cos(angle);
        p.y = proto[parent].y + p.length * std::sin(angle);
    }

    // Insert pump stations on edges at depth >= 2 (tank between the chosen
    // junction and its parent), without reusing a junction.
    std::vector<std::size_t> depth(proto.size(), 0);
    for (std::size_t i = 1; i < proto.size(); ++i) {
        std::size_t v = i, d = 0;
        while (proto[v].parent != npos) {
            v = proto[v].parent;
            ++d;
        }
        depth[i] = d;
    }
    // Stations sit on trunk edges near the outfall: the arterial network
    // stays a coarse skeleton while the capillary trees aggregate onto it.
    std::vector<std::size_t> eligible;
    for (std::size_t i = 1; i < proto.size(); ++i)
        if (depth[i] >= 2 && depth[i] <= 5) eligible.push_back(i);
    if (eligible.empty())
        for (std::size_t i = 1; i < proto.size(); ++i)
            if (depth[i] >= 1) eligible.push_back(i);
    std::vector<bool> used(proto.size(), false);
    std::size_t placed = 0;
    while (placed < stations && !eligible.empty()) {
        std::size_t pick = rng.next_below(eligible.size());
        std::size_t u = eligible[pick];
        eligible.erase(eligible.begin() + static_cast<std::ptrdiff_t>(pick));
        if (used[u]) continue;
        used[u] = true;
        std::size_t v = proto[u].parent;
        ProtoNode tank;
        tank.is_tank = true;
        tank.parent = v;
        tank.pumped = true;
        tank.invert = proto[v].invert - 1.0;  // wet well sump below the lift point
        tank.tank_max_depth = 2.0;
        tank.x = 0.5 * (proto[u].x + proto[v].x);
        tank.y = 0.5 * (proto[u].y + proto[v].y);
        proto.push_back(tank);
        std::size_t t = proto.size() - 1;
        // Reroute u through the tank; conduit geometry re-derived from inverts.
        proto[u].parent = t;
        proto[u].slope = (proto[u].invert - tank.invert) / proto[u].length;
        ++placed;
    }

    // Accumulated design flow, upstream to downstream: base inflows pass
    // through conduits; a station contributes its pump's rated flow.
    std::vector<double> design(proto.size(), 0.0);
    std::vector<std::size_t> order(proto.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        // Children before parents: deeper inverts first is not reliable with
        // tanks, so sort by tree depth.
        std::size_t da = 0, db = 0;
        for (std::size_t v = a; proto[v].parent != npos; v = proto[v].parent) ++da;
        for (std::size_t v = b; proto[v].parent != npos; v = proto[v].parent) ++db;
        return da > db;
    });
    for (auto i : order) {
        if (i == 0) continue;
        double inflow = proto[i].is_tank ? 0.0 : params.base_inflow;
        double q = design[i] + inflow;
        if (proto[i].is_tank) {
            // Rated at twice the average so the well drains between cycles.
            proto[i].rated_flow = std::max(2.0 * q, 0.01);
            proto[i].tank_area = std::clamp(750.0 * q, 2.0, 500.0);
            q = proto[i].rated_flow;
        }
        design[proto[i].parent] += q;
        design[i] = q;  // design flow of the edge toward the parent
    }

    // Harmon-style peaking factor: laterals are sized for sharper peaks than
    // trunk mains, so utilization under steady dry-weather flow drops as
    // flow accumulates downstream.
    auto peaking_factor = [](double q_avg) {
        double p = std::sqrt(std::max(q_avg, 0.0) * 1000.0);
        return 1.0 + 14.0 / (4.0 + p);
    };
    auto diameter_for = [&](double q, double slope) {
        double design_q = std::max(q, 1e-6) * peaking_factor(q);
        double q_full_needed = design_q / params.target_utilization;
        double coeff = manning_full_flow(1.0, params.manning_n, slope);  // per D^(8/3)
        double d_req = std::pow(q_full_needed / coeff, 3.0 / 8.0);
        double d = std::max(params.diameter_min, std::ceil(d_req / 0.05) * 0.05);
        return d;
    };

    Network net;
    auto node_id = [&](std::size_t i) {
        if (i == 0) return std::string("OUT1");
        return (proto[i].is_tank ? "T" : "J") + std::to_string(i);
    };
    net.add_outfall({node_id(0), proto[0].invert, {proto[0].x, proto[0].y}});
    for (std::size_t i = 1; i < proto.size(); ++i) {
        const auto& p = proto[i];
        if (p.is_tank) {
            net.add_tank({node_id(i), p.invert, p.tank_max_depth, p.tank_area,
                          {p.x, p.y}});
        } else {
            net.add_junction({node_id(i), p.invert, p.invert + p.cover,
                              params.base_inflow, "", {p.x, p.y}});
        }
    }
    std::size_t conduit_no = 0, pump_no = 0;
    for (std::size_t i = 1; i < proto.size(); ++i) {
        const auto& p = proto[i];
        if (p.pumped) {
            net.add_pump({"P" + std::to_string(++pump_no), node_id(i), node_id(p.parent),
                          p.rated_flow, 1.2, 0.4});
        } else {
            double d = diameter_for(design[i], p.slope);
            net.add_conduit({"C" + std::to_string(++conduit_no), node_id(i),
                             node_id(p.parent), p.length, params.manning_n, d, 0.0, 0.0});
        }
    }
    net.freeze();
    return net;
}

} // namespace sewersim

#endif
