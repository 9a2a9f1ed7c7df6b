#ifndef SEWERSIM_HYDRAULICS_HPP
#define SEWERSIM_HYDRAULICS_HPP

#include "sewersim/damage.hpp"
#include "sewersim/geometry.hpp"
#include "sewersim/network.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sewersim {

struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class InertialTerms { On, Damped, Off };

struct SolverConfig {
    double routing_step = 1.0;      // s
    double duration = 86400.0;      // s
    InertialTerms inertial_terms = InertialTerms::On;
    double slot_width_fraction = 0.01;   // Preissmann slot width / diameter
    double min_node_surface_area = 1.0;  // m2
    double gravity = 9.81;               // m/s2
    double inflow_ramp_s = 300.0;        // lateral inflow spin-up, avoids dry-start shock
    double stats_warmup_s = 0.0;         // max-flow statistics ignore t < warmup
    bool substep_on_courant = false;
    int max_substeps = 16;
    bool record_series = false;
    // Fixed boundary stage per outfall id [m, absolute]; absent = free outfall.
    std::unordered_map<std::string, double> fixed_outfall_stage;

    double ramp(double t) const {
        if (inflow_ramp_s <= 0.0) return 1.0;
        return t >= inflow_ramp_s ? 1.0 : t / inflow_ramp_s;
    }

    void check() const {
        if (!(routing_step > 0.0)) throw std::invalid_argument("routing step must be > 0");
        if (duration < routing_step) throw std::invalid_argument("duration must be >= step");
        if (!(slot_width_fraction > 0.0 && slot_width_fraction <= 0.05))
            throw std::invalid_argument("slot width fraction must lie in (0, 0.05]");
        if (inflow_ramp_s < 0.0) throw std::invalid_argument("inflow ramp must be >= 0");
    }
};

struct RoutingResult {
    std::vector<double> max_abs_flow;  // per link index [m3/s]
    std::vector<double> final_depth;   // per conduit index; mean flow depth [m]
    double inflow_volume = 0.0;        // lateral inflow offered on routed nodes [m3]
    double outflow_volume = 0.0;       // net volume delivered to outfalls [m3]
    double stored_volume = 0.0;        // in conduits/tanks/nodes at end [m3]
    double ponded_volume = 0.0;        // kinematic node ponds at end [m3]
    double overflow_volume = 0.0;      // spilled at tank/junction rims [m3]
    double continuity_error = 0.0;     // |in - out - stored - ponded - overflow| / in
    double max_courant = 0.0;
    std::vector<double> series_times;
    std::vector<std::vector<double>> series_flow;  // [link][record]

    void finish_balance() {
        double err = inflow_volume - outflow_volume - stored_volume - ponded_volume -
                     overflow_volume;
        continuity_error = inflow_volume > 0.0 ? std::abs(err) / inflow_volume : 0.0;
    }
};

/// Lateral inflow per node; base values are index-aligned with the network.
struct InflowSet {
    std::vector<double> base;                          // m3/s
    std::vector<const std::vector<double>*> pattern;   // nullptr = constant
    std::vector<std::function<double(double)>> custom; // empty unless used

    static InflowSet from_network(const Network& net,
                                  const std::vector<bool>* node_mask = nullptr) {
        InflowSet in;
        in.base.assign(net.node_count(), 0.0);
        in.pattern.assign(net.node_count(), nullptr);
        for (std::size_t i = 0; i < net.node_count(); ++i) {
            if (node_mask && !(*node_mask)[i]) continue;
            const auto& n = net.node(i);
            if (n.kind != NodeKind::Junction) continue;
            in.base[i] = n.base_inflow;
            if (!n.pattern_id.empty()) {
                auto it = net.patterns().find(n.pattern_id);
                if (it != net.patterns().end() && !it->second.empty())
                    in.pattern[i] = &it->second;
            }
        }
        return in;
    }

    void set_custom(std::size_t node, std::function<double(double)> f) {
        if (custom.empty()) custom.assign(base.size(), nullptr);
        custom[node] = std::move(f);
    }

    double at(std::size_t node, double t) const {
        if (!custom.empty() && custom[node]) return custom[node](t);
        double q = base[node];
        if (q != 0.0 && pattern[node]) {
            const auto& m = *pattern[node];
            q *= m[static_cast<std::size_t>(t / 3600.0) % m.size()];
        }
        return q;
    }
};

namespace section_tables {

inline constexpr int kTablePoints = 257;

// Dimensionless circular-section curves sampled on eta = y/D in [0, 1].
struct Curves {
    std::array<double, kTablePoints> area;        // A / D^2
    std::array<double, kTablePoints> hyd_radius;  // R / D
    std::array<double, kTablePoints> conveyance;  // A R^(2/3) / D^(8/3), clamped monotone
    std::array<double, kTablePoints> a3_over_t;   // (A^3/T) / D^5
    std::array<double, kTablePoints> top_width;   // T / D
};

inline const Curves& curves() {
    static const Curves c = [] {
        Curves k{};
        SectionGeometry sec(1.0);
        for (int i = 0; i < kTablePoints; ++i) {
            double eta = static_cast<double>(i) / (kTablePoints - 1);
            double a = sec.area(eta);
            double t = std::max(sec.top_width(eta), 1e-9);
            k.area[i] = a;
            k.hyd_radius[i] = sec.hyd_radius(eta);
            k.top_width[i] = t;
            k.conveyance[i] = a * std::pow(sec.hyd_radius(eta), 2.0 / 3.0);
            k.a3_over_t[i] = a * a * a / t;
        }
        // Conveyance peaks near eta 0.94; clamp to a nondecreasing rating so
        // depth-from-flow inversions are single valued.
        for (int i = 1; i < kTablePoints; ++i)
            k.conveyance[i] = std::max(k.conveyance[i], k.conveyance[i - 1]);
        return k;
    }();
    return c;
}

inline double interp(const std::array<double, kTablePoints>& tab, double eta) {
    if (eta <= 0.0) return tab.front();
    if (eta >= 1.0) return tab.back();
    double x = eta * (kTablePoints - 1);
    int i = static_cast<int>(x);
    double f = x - i;
    return tab[i] * (1.0 - f) + tab[i + 1] * f;
}

// Inverse lookup on a nondecreasing table: smallest eta with tab(eta) >= v.
inline double inverse(const std::array<double, kTablePoints>& tab, double v) {
    if (v <= tab.front()) return 0.0;
    if (v >= tab.back()) return 1.0;
    int lo = 0, hi = kTablePoints - 1;
    while (hi - lo > 1) {
        int mid = (lo + hi) / 2;
        (tab[mid] < v ? lo : hi) = mid;
    }
    double span = tab[hi] - tab[lo];
    double f = span > 0.0 ? (v - tab[lo]) / span : 0.0;
    return (lo + f) / (kTablePoints - 1);
}

} // namespace section_tables

// Normal depth via the dimensionless conveyance curve (rising limb).
inline double normal_depth_fast(double diameter, double n, double s0, double q) {
    if (q <= 0.0 || s0 <= 0.0) return 0.0;
    double beta = q * n / (std::sqrt(s0) * std::pow(diameter, 8.0 / 3.0));
    return diameter * section_tables::inverse(section_tables::curves().conveyance, beta);
}

inline double critical_depth_fast(double diameter, double q, double g = 9.81) {
    if (q <= 0.0) return 0.0;
    double target = q * q / (g * std::pow(diameter, 5.0));
    return diameter * section_tables::inverse(section_tables::curves().a3_over_t, target);
}

struct TankPumpState {
    double depth = 0.0;
    bool pump_on = false;
};

struct TankStepResult {
    TankPumpState state;
    double pumped_flow = 0.0;      // m3/s over the step
    double overflow_volume = 0.0;  // m3 spilled above max depth
};

/**
 * One forward step of a wet well with an attached constant-rate pump.
 * Hysteresis switches on the start-of-step depth: on at start_depth,
 * off at stop_depth. Pumped flow never exceeds the available volume, and
 * depth is capped at max_depth with the excess reported as overflow.
 */
inline TankStepResult simulate_storage_pump(const StorageTank& tank, const Pump* pump,
                                            double inflow, TankPumpState state, double dt) {
    TankStepResult out;
    if (pump) {
        if (state.depth >= pump->start_depth) state.pump_on = true;
        else if (state.depth <= pump->stop_depth) state.pump_on = false;
        if (state.pump_on) {
            double available = state.depth * tank.surface_area + inflow * dt;
            out.pumped_flow = std::min(pump->rated_flow, std::max(0.0, available) / dt);
        }
    } else {
        state.pump_on = false;
    }
    double depth = state.depth + (inflow - out.pumped_flow) * dt / tank.surface_area;
    if (depth > tank.max_depth) {
        out.overflow_volume = (depth - tank.max_depth) * tank.surface_area;
        depth = tank.max_depth;
    }
    if (depth < 0.0) depth = 0.0;
    state.depth = depth;
    out.state = state;
    return out;
}

namespace detail_hyd {

// Node processing order with every link endpoint after its source.
inline std::vector<std::size_t> topological_order(const Network& net) {
    std::vector<std::size_t> indeg(net.node_count(), 0);
    for (const auto& l : net.links())
        if (l.from != npos && l.to != npos) ++indeg[l.to];
    std::vector<std::size_t> order;
    order.reserve(net.node_count());
    std::vector<std::size_t> queue;
    for (std::size_t i = 0; i < net.node_count(); ++i)
        if (indeg[i] == 0) queue.push_back(i);
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
        std::size_t v = queue[qi];
        order.push_back(v);
        for (auto li : net.out_links(v)) {
            auto to = net.link(li).to;
            if (to != npos && --indeg[to] == 0) queue.push_back(to);
        }
    }
    if (order.size() != net.node_count())
        throw SolverError("cyclic subnetwork: routing requires an acyclic network");
    return order;
}

inline bool routed_link(const DamagedNetwork& dn, std::size_t li) {
    const auto& l = dn.network().link(li);
    return dn.link_alive[li] && l.from != npos && l.to != npos && dn.node_alive[l.from] &&
           dn.node_alive[l.to];
}

} // namespace detail_hyd

/// Per-conduit volume-to-flow rating tables for the kinematic solver,
/// computed once per network and shared across damage scenarios.
class KinematicTables {
public:
    static constexpr int kPoints = 129;

    explicit KinematicTables(const Network& net) {
        const auto& cv = section_tables::curves();
        flow_.resize(net.link_count());
        depth_.resize(net.link_count());
        q_full_.assign(net.link_count(), 0.0);
        for (std::size_t i = 0; i < net.link_count(); ++i) {
            const auto& l = net.link(i);
            if (l.kind != LinkKind::Conduit) continue;
            double s0 = net.bed_slope(i);
            if (s0 <= 0.0) continue;  // checked at routing time
            double scale = std::pow(l.diameter, 8.0 / 3.0) * std::sqrt(s0) / l.manning_n;
            q_full_[i] = manning_full_flow(l.diameter, l.manning_n, s0);
            auto& fq = flow_[i];
            auto& fy = depth_[i];
            fq.resize(kPoints);
            fy.resize(kPoints);
            for (int j = 0; j < kPoints; ++j) {
                // Uniform grid in volume fraction; invert the area curve.
                double vol_frac = static_cast<double>(j) / (kPoints - 1);
                double eta = section_tables::inverse(
                    cv.area, vol_frac * cv.area.back());
                fq[j] = section_tables::interp(cv.conveyance, eta) * scale;
                fy[j] = eta * l.diameter;
            }
        }
    }

    bool has(std::size_t link) const { return !flow_[link].empty(); }

    // Normal flow at the stored-volume fraction, undamaged roughness.
    double flow_at(std::size_t link, double vol_frac) const {
        return lookup(flow_[link], vol_frac);
    }

    double depth_at(std::size_t link, double vol_frac) const {
        return lookup(depth_[link], vol_frac);
    }

    double q_full(std::size_t link) const { return q_full_[link]; }

private:
    static double lookup(const std::vector<double>& tab, double f) {
        if (f <= 0.0) return tab.front();
        if (f >= 1.0) return tab.back();
        double x = f * (kPoints - 1);
        int i = static_cast<int>(x);
        double w = x - i;
        return tab[i] * (1.0 - w) + tab[i + 1] * w;
    }

    std::vector<std::vector<double>> flow_;
    std::vector<std::vector<double>> depth_;
    std::vector<double> q_full_;
};

/**
 * Kinematic wave routing (normal-flow approximation, Sf = S0).
 *
 * Nodes are processed in topological order; each conduit acts as a
 * nonlinear reservoir whose outflow follows the Manning normal-flow
 * rating at its current storage depth, capped at the effective capacity.
 * Inflow beyond the capacity ponds at the upstream node and drains later.
 * Downstream state never influences upstream flow.
 */
inline RoutingResult route_kinematic(const DamagedNetwork& dn, const InflowSet& inflows,
                                     const SolverConfig& config,
                                     const KinematicTables* tables = nullptr) {
    config.check();
    const Network& net = dn.network();
    std::optional<KinematicTables> local;
    if (!tables) {
        local.emplace(net);
        tables = &*local;
    }

    for (std::size_t i = 0; i < net.link_count(); ++i) {
        if (!detail_hyd::routed_link(dn, i)) continue;
        if (net.link(i).kind == LinkKind::Conduit && net.bed_slope(i) <= 0.0)
            throw SolverError("kinematic routing requires positive slope on conduit '" +
                              net.link(i).id + "'");
    }

    auto order = detail_hyd::topological_order(net);
    double dt = config.routing_step;
    auto steps = static_cast<std::size_t>(config.duration / dt + 0.5);

    RoutingResult res;
    res.max_abs_flow.assign(net.link_count(), 0.0);
    res.final_depth.assign(net.link_count(), 0.0);

    std::vector<double> volume(net.link_count(), 0.0);   // conduit storage [m3]
    std::vector<double> full_vol(net.link_count(), 0.0);
    std::vector<double> pond(net.node_count(), 0.0);
    std::vector<double> incoming(net.node_count(), 0.0);
    std::vector<TankPumpState> tank_state(net.node_count());
    std::vector<std::size_t> pump_of_tank(net.node_count(), npos);
    for (std::size_t i = 0; i < net.link_count(); ++i) {
        const auto& l = net.link(i);
        if (l.kind == LinkKind::Conduit)
            full_vol[i] = 0.25 * kPi * l.diameter * l.diameter * l.length;
        if (l.kind == LinkKind::Pump && detail_hyd::routed_link(dn, i))
            pump_of_tank[l.from] = i;
    }

    if (config.record_series) res.series_flow.assign(net.link_count(), {});

    for (std::size_t step = 0; step < steps; ++step) {
        double t = static_cast<double>(step) * dt;
        std::fill(incoming.begin(), incoming.end(), 0.0);

        double ramp = config.ramp(t);
        for (auto v : order) {
            if (!dn.node_alive[v]) continue;
            const auto& node = net.node(v);
            double lateral = ramp * inflows.at(v, t);
            res.inflow_volume += lateral * dt;
            double rate = incoming[v] + lateral;

            if (node.kind == NodeKind::Outfall) {
                res.outflow_volume += rate * dt;
                continue;
            }
            if (node.kind == NodeKind::Storage) {
                StorageTank tank{node.id, node.invert_elev, node.max_depth,
                                 node.surface_area, node.coord};
                const Pump* pump = nullptr;
                Pump pump_val;
                std::size_t pi = pump_of_tank[v];
                if (pi != npos) {
                    const auto& pl = net.link(pi);
                    pump_val = Pump{pl.id, pl.from_id, pl.to_id, pl.rated_flow,
                                    pl.start_depth, pl.stop_depth};
                    pump = &pump_val;
                }
                auto ts = simulate_storage_pump(tank, pump, rate, tank_state[v], dt);
                tank_state[v] = ts.state;
                res.overflow_volume += ts.overflow_volume;
                if (pi != npos && ts.pumped_flow > 0.0) {
                    incoming[net.link(pi).to] += ts.pumped_flow;
                    if (ts.pumped_flow > res.max_abs_flow[pi] && t >= config.stats_warmup_s)
                        res.max_abs_flow[pi] = ts.pumped_flow;
                }
                continue;
            }

            // Junction: feed the single outgoing conduit, pond any excess.
            std::size_t out = npos;
            for (auto li : net.out_links(v))
                if (detail_hyd::routed_link(dn, li) &&
                    net.link(li).kind == LinkKind::Conduit) { out = li; break; }
            if (out == npos) {
                pond[v] += rate * dt;  // dead end under this scenario
                continue;
            }
            double cap = dn.capacity_factor[out] * tables->q_full(out);
            double avail = rate + pond[v] / dt;
            double accept = std::min(avail, cap);
            pond[v] = std::max(0.0, pond[v] + (rate - accept) * dt);

            double vol = volume[out] + accept * dt;
            double frac = vol / full_vol[out];
            double q_out = dn.capacity_factor[out] * tables->flow_at(out, std::min(frac, 1.0));
            q_out = std::min({q_out, cap, vol / dt});
            volume[out] = vol - q_out * dt;
            incoming[net.link(out).to] += q_out;
            if (q_out > res.max_abs_flow[out] && t >= config.stats_warmup_s)
                res.max_abs_flow[out] = q_out;
            if (config.record_series) res.series_flow[out].push_back(q_out);
        }
        if (config.record_series) res.series_times.push_back(t + dt);
    }

    for (std::size_t i = 0; i < net.link_count(); ++i) {
        if (net.link(i).kind != LinkKind::Conduit || full_vol[i] <= 0.0 || !tables->has(i))
            continue;
        res.stored_volume += volume[i];
        res.final_depth[i] = tables->depth_at(i, std::min(volume[i] / full_vol[i], 1.0));
    }
    for (std::size_t v = 0; v < net.node_count(); ++v) {
        res.ponded_volume += pond[v];
        if (net.node(v).kind == NodeKind::Storage)
            res.stored_volume += tank_state[v].depth * net.node(v).surface_area;
    }
    res.finish_balance();
    return res;
}

/**
 * Dynamic wave routing: link momentum with head-difference driving term and
 * implicit Manning friction, coupled to node continuity dH/dt = sum(Q)/A.
 * Heads above the crown ride a Preissmann slot, so surcharged (pressurized)
 * flow and backwater emerge without a separate regime; reversal is allowed.
 */
inline RoutingResult route_dynamic(const DamagedNetwork& dn, const InflowSet& inflows,
                                   const SolverConfig& config) {
    config.check();
    const Network& net = dn.network();
    (void)detail_hyd::topological_order(net);  // rejects cycles

    const double g = config.gravity;
    const double dt = config.routing_step;
    const auto steps = static_cast<std::size_t>(config.duration / dt + 0.5);

    RoutingResult res;
    res.max_abs_flow.assign(net.link_count(), 0.0);
    res.final_depth.assign(net.link_count(), 0.0);
    if (config.record_series) res.series_flow.assign(net.link_count(), {});

    // Per-link constants.
    struct LinkGeom {
        bool routed = false;
        bool conduit = false;
        double z_up = 0.0, z_dn = 0.0;
        double diameter = 0.0, length = 0.0;
        double n_eff = 0.0;
        double a_full = 0.0, r_full = 0.0, slot_width = 0.0;
    };
    std::vector<LinkGeom> geom(net.link_count());
    double min_invert = std::numeric_limits<double>::max();
    double max_relief = 0.0;
    for (const auto& n : net.nodes()) {
        min_invert = std::min(min_invert, n.invert_elev);
        double top = n.kind == NodeKind::Junction ? n.rim_elev
                     : n.kind == NodeKind::Storage ? n.invert_elev + n.max_depth
                                                   : n.invert_elev;
        max_relief = std::max(max_relief, top);
    }
    double head_limit = min_invert + 10.0 * std::max(1.0, max_relief - min_invert);

    for (std::size_t i = 0; i < net.link_count(); ++i) {
        auto& lg = geom[i];
        lg.routed = detail_hyd::routed_link(dn, i);
        if (!lg.routed) continue;
        const auto& l = net.link(i);
        lg.conduit = l.kind == LinkKind::Conduit;
        if (!lg.conduit) continue;
        lg.z_up = net.conduit_invert_up(i);
        lg.z_dn = net.conduit_invert_dn(i);
        lg.diameter = l.diameter;
        lg.length = l.length;
        lg.n_eff = dn.effective_manning(i);
        lg.a_full = 0.25 * kPi * l.diameter * l.diameter;
        lg.r_full = 0.25 * l.diameter;
        lg.slot_width = config.slot_width_fraction * l.diameter;
    }

    // Pumps attached to live tanks.
    std::vector<std::size_t> pump_of_tank(net.node_count(), npos);
    for (std::size_t i = 0; i < net.link_count(); ++i)
        if (geom[i].routed && net.link(i).kind == LinkKind::Pump)
            pump_of_tank[net.link(i).from] = i;

    // State.
    std::vector<double> head(net.node_count());
    for (std::size_t v = 0; v < net.node_count(); ++v) head[v] = net.node(v).invert_elev;
    std::vector<double> q(net.link_count(), 0.0);
    std::vector<double> area_prev(net.link_count(), 0.0);
    std::vector<TankPumpState> tank_state(net.node_count());
    std::vector<double> node_area(net.node_count(), 0.0);
    std::vector<double> net_rate(net.node_count(), 0.0);

    const auto outfalls = net.outfall_indices();
    // First incoming routed conduit per outfall, for the free boundary depth.
    std::vector<std::size_t> boundary_link(net.node_count(), npos);
    std::vector<double> fixed_stage(net.node_count(),
                                    std::numeric_limits<double>::quiet_NaN());
    for (auto o : outfalls) {
        for (auto li : net.in_links(o))
            if (geom[li].routed && geom[li].conduit) { boundary_link[o] = li; break; }
        auto it = config.fixed_outfall_stage.find(net.node(o).id);
        if (it != config.fixed_outfall_stage.end()) fixed_stage[o] = it->second;
    }

    const double sigma_base = config.inertial_terms == InertialTerms::Off ? 0.0 : 1.0;
    const double y_dry = 1e-4;

    auto conduit_area = [&](const LinkGeom& lg, double y) {
        if (y >= lg.diameter)
            return lg.a_full + (y - lg.diameter) * lg.slot_width;
        if (y <= 0.0) return 0.0;
        return lg.diameter * lg.diameter *
               section_tables::interp(section_tables::curves().area, y / lg.diameter);
    };
    auto conduit_width = [&](const LinkGeom& lg, double y) {
        if (y >= lg.diameter) return lg.slot_width;
        double w = lg.diameter *
                   section_tables::interp(section_tables::curves().top_width, y / lg.diameter);
        return std::max(w, lg.slot_width);
    };

    double last_courant = 0.0;
    for (std::size_t step = 0; step < steps; ++step) {
        double t = static_cast<double>(step) * dt;

        int substeps = 1;
        if (config.substep_on_courant && last_courant > 1.0)
            substeps = std::min(config.max_substeps,
                                static_cast<int>(std::ceil(last_courant)));
        double h = dt / substeps;
        double courant_this_step = 0.0;

        for (int sub = 0; sub < substeps; ++sub) {
            double ts = t + sub * h;
            double ramp = config.ramp(ts);

            // Boundary heads. Moving the boundary end re-stages water inside
            // the adjacent conduit, so the half-end storage change is charged
            // against the outflow tally to keep the balance first-order exact.
            for (auto o : outfalls) {
                if (!dn.node_alive[o]) continue;
                double h_old = head[o];
                if (!std::isnan(fixed_stage[o])) {
                    head[o] = fixed_stage[o];
                } else {
                    std::size_t bl = boundary_link[o];
                    if (bl != npos) {
                        const auto& lg = geom[bl];
                        double qa = std::abs(q[bl]);
                        double yc = critical_depth_fast(lg.diameter, qa, g);
                        double s0 = (lg.z_up - lg.z_dn) / lg.length;
                        double yn = s0 > 0.0
                                        ? normal_depth_fast(lg.diameter, lg.n_eff, s0, qa)
                                        : lg.diameter;
                        head[o] = lg.z_dn + std::min(yc, yn);
                    } else {
                        head[o] = net.node(o).invert_elev;
                    }
                }
                for (auto li : net.in_links(o)) {
                    const auto& lg = geom[li];
                    if (!lg.routed || !lg.conduit) continue;
                    double y1 = std::max(0.0, head[net.link(li).from] - lg.z_up);
                    double ybar = 0.5 * (y1 + std::max(0.0, h_old - lg.z_dn));
                    if (ybar <= 0.0 && head[o] <= h_old) continue;
                    double dy = std::max(0.0, head[o] - lg.z_dn) -
                                std::max(0.0, h_old - lg.z_dn);
                    res.outflow_volume -=
                        0.5 * lg.length * conduit_width(lg, std::max(ybar, 1e-6)) * dy;
                }
            }

            // Node free-surface areas from current depths.
            for (std::size_t v = 0; v < net.node_count(); ++v) {
                if (!dn.node_alive[v]) continue;
                const auto& node = net.node(v);
                if (node.kind == NodeKind::Storage) {
                    node_area[v] = node.surface_area;
                    continue;
                }
                double a = config.min_node_surface_area;
                for (auto li : net.in_links(v)) {
                    const auto& lg = geom[li];
                    if (!lg.routed || !lg.conduit) continue;
                    double ybar = 0.5 * (std::max(0.0, head[net.link(li).from] - lg.z_up) +
                                         std::max(0.0, head[v] - lg.z_dn));
                    a += 0.5 * lg.length * conduit_width(lg, ybar);
                }
                for (auto li : net.out_links(v)) {
                    const auto& lg = geom[li];
                    if (!lg.routed || !lg.conduit) continue;
                    double ybar = 0.5 * (std::max(0.0, head[v] - lg.z_up) +
                                         std::max(0.0, head[net.link(li).to] - lg.z_dn));
                    a += 0.5 * lg.length * conduit_width(lg, ybar);
                }
                node_area[v] = a;
            }

            // Link momentum updates.
            for (std::size_t li = 0; li < net.link_count(); ++li) {
                const auto& lg = geom[li];
                if (!lg.routed || !lg.conduit) continue;
                const auto& l = net.link(li);
                double h1 = head[l.from];
                double h2 = head[l.to];
                double y1 = std::max(0.0, h1 - lg.z_up);
                double y2 = std::max(0.0, h2 - lg.z_dn);
                if (y1 <= y_dry && y2 <= y_dry) {
                    q[li] = 0.0;
                    area_prev[li] = 0.0;
                    continue;
                }
                double ybar = 0.5 * (y1 + y2);
                double a = std::max(conduit_area(lg, ybar), 1e-4 * lg.a_full);
                double r = lg.r_full;
                if (ybar < lg.diameter) {
                    r = lg.diameter * section_tables::interp(section_tables::curves().hyd_radius,
                                                             ybar / lg.diameter);
                    r = std::max(r, 1e-3 * lg.diameter);
                }
                double v_bar = q[li] / a;

                double sigma = sigma_base;
                if (config.inertial_terms == InertialTerms::Damped) {
                    double tw = conduit_width(lg, ybar);
                    double c = std::sqrt(g * a / tw);
                    double fr = std::abs(v_bar) / std::max(c, 1e-9);
                    sigma = std::clamp(2.0 * (1.0 - fr), 0.0, 1.0);
                }

                double dq_head = h * g * a * (h1 - h2) / lg.length;
                double dq_inertial = 0.0;
                if (sigma > 0.0 && area_prev[li] > 0.0) {
                    double a1 = conduit_area(lg, std::max(y1, y_dry));
                    double a2 = conduit_area(lg, std::max(y2, y_dry));
                    dq_inertial = sigma * (2.0 * v_bar * (a - area_prev[li]) +
                                           h * v_bar * v_bar * (a2 - a1) / lg.length);
                }
                double denom = 1.0 + h * g * lg.n_eff * lg.n_eff * std::abs(q[li]) /
                                         (a * std::pow(r, 4.0 / 3.0));
                double q_new = (q[li] + dq_head + dq_inertial) / denom;

                // Keep dry ends from exporting water they do not have.
                if (y1 <= y_dry && q_new > 0.0) q_new = 0.0;
                if (y2 <= y_dry && q_new < 0.0) q_new = 0.0;
                // Donor volume limit against the upstream node store.
                if (q_new > 0.0 && net.node(l.from).kind == NodeKind::Junction) {
                    double avail =
                        (head[l.from] - net.node(l.from).invert_elev) * node_area[l.from] / h +
                        ramp * inflows.at(l.from, ts);
                    q_new = std::min(q_new, std::max(0.0, avail));
                }

                q[li] = q_new;
                area_prev[li] = a;

                double tw = conduit_width(lg, ybar);
                double wave = std::abs(v_bar) + std::sqrt(g * a / tw);
                courant_this_step = std::max(courant_this_step, wave * h / lg.length);
            }

            // Pump flows from start-of-substep tank states.
            for (std::size_t v = 0; v < net.node_count(); ++v) {
                if (net.node(v).kind != NodeKind::Storage || !dn.node_alive[v]) continue;
                double inflow = 0.0;
                for (auto li : net.in_links(v))
                    if (geom[li].routed && geom[li].conduit) inflow += q[li];
                for (auto li : net.out_links(v))
                    if (geom[li].routed && geom[li].conduit) inflow -= q[li];
                const auto& node = net.node(v);
                StorageTank tank{node.id, node.invert_elev, node.max_depth,
                                 node.surface_area, node.coord};
                const Pump* pump = nullptr;
                Pump pump_val;
                std::size_t pi = pump_of_tank[v];
                if (pi != npos) {
                    const auto& pl = net.link(pi);
                    pump_val = Pump{pl.id, pl.from_id, pl.to_id, pl.rated_flow,
                                    pl.start_depth, pl.stop_depth};
                    pump = &pump_val;
                }
                auto tsr = simulate_storage_pump(tank, pump, inflow, tank_state[v], h);
                tank_state[v] = tsr.state;
                res.overflow_volume += tsr.overflow_volume;
                head[v] = node.invert_elev + tsr.state.depth;
                if (pi != npos) {
                    q[pi] = tsr.pumped_flow;
                    if (tsr.pumped_flow > res.max_abs_flow[pi] && ts >= config.stats_warmup_s)
                        res.max_abs_flow[pi] = tsr.pumped_flow;
                }
            }

            // Junction continuity.
            std::fill(net_rate.begin(), net_rate.end(), 0.0);
            for (std::size_t li = 0; li < net.link_count(); ++li) {
                if (!geom[li].routed) continue;
                const auto& l = net.link(li);
                if (l.kind == LinkKind::Conduit) {
                    net_rate[l.from] -= q[li];
                    net_rate[l.to] += q[li];
                } else {
                    net_rate[l.to] += q[li];  // tank side handled above
                }
            }
            for (std::size_t v = 0; v < net.node_count(); ++v) {
                if (!dn.node_alive[v]) continue;
                const auto& node = net.node(v);
                double lateral = ramp * inflows.at(v, ts);
                res.inflow_volume += lateral * h;
                if (node.kind == NodeKind::Outfall) {
                    res.outflow_volume += (net_rate[v] + lateral) * h;
                    continue;
                }
                if (node.kind == NodeKind::Storage) continue;
                double dh = h * (net_rate[v] + lateral) / node_area[v];
                double hn = head[v] + dh;
                if (hn > node.rim_elev) {
                    res.overflow_volume += (hn - node.rim_elev) * node_area[v];
                    hn = node.rim_elev;
                }
                if (hn < node.invert_elev) hn = node.invert_elev;
                head[v] = hn;
            }

            // Instability guard.
            for (std::size_t v = 0; v < net.node_count(); ++v) {
                if (!dn.node_alive[v]) continue;
                if (!std::isfinite(head[v]) || head[v] > head_limit)
                    throw SolverError("dynamic wave instability: head at node '" +
                                      net.node(v).id + "' diverged at t=" +
                                      std::to_string(ts) + " s");
            }
        }

        last_courant = courant_this_step;
        res.max_courant = std::max(res.max_courant, courant_this_step);
        bool in_window = t + dt > config.stats_warmup_s;
        for (std::size_t li = 0; li < net.link_count(); ++li) {
            if (!geom[li].routed || !geom[li].conduit) continue;
            double qa = std::abs(q[li]);
            if (qa > res.max_abs_flow[li] && in_window) res.max_abs_flow[li] = qa;
            if (config.record_series) res.series_flow[li].push_back(q[li]);
        }
        if (config.record_series) res.series_times.push_back(t + dt);
    }

    // Final stored volume, measured geometrically.
    for (std::size_t li = 0; li < net.link_count(); ++li) {
        const auto& lg = geom[li];
        if (!lg.routed || !lg.conduit) continue;
        const auto& l = net.link(li);
        double y1 = std::max(0.0, head[l.from] - lg.z_up);
        double y2 = std::max(0.0, head[l.to] - lg.z_dn);
        double ybar = 0.5 * (y1 + y2);
        res.stored_volume += conduit_area(lg, ybar) * lg.length;
        res.final_depth[li] = std::min(ybar, lg.diameter);
    }
    for (std::size_t v = 0; v < net.node_count(); ++v) {
        if (!dn.node_alive[v]) continue;
        const auto& node = net.node(v);
        if (node.kind == NodeKind::Junction)
            res.stored_volume += (head[v] - node.invert_elev) * config.min_node_surface_area;
        else if (node.kind == NodeKind::Storage)
            res.stored_volume += tank_state[v].depth * node.surface_area;
    }
    res.finish_balance();
    return res;
}

/// Undamaged view of a network, for direct solver runs.
inline DamagedNetwork undamaged_view(const Network& net) {
    DamagedNetwork dn;
    dn.base = &net;
    dn.node_alive.assign(net.node_count(), true);
    dn.link_alive.assign(net.link_count(), true);
    dn.capacity_factor.assign(net.link_count(), 1.0);
    return dn;
}

} // namespace sewersim

#endif
