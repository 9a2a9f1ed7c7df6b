#include "sewersim/hydraulics.hpp"
#include "sewersim/inp.hpp"
#include "sewersim/synth.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace sewersim;

TEST_CASE("two-node request yields junction, outfall and one conduit") {
    auto net = generate_synthetic({.node_count = 2, .pump_count = 0, .tank_count = 0}, 5);
    CHECK(net.node_count() == 2);
    CHECK(net.link_count() == 1);
    CHECK(validate(net).pass());
}

TEST_CASE("same seed gives byte-identical INP output") {
    SynthesisParams params{.node_count = 120, .pump_count = 2, .tank_count = 2};
    auto a = write_inp(generate_synthetic(params, 77));
    auto b = write_inp(generate_synthetic(params, 77));
    CHECK(a == b);
    auto c = write_inp(generate_synthetic(params, 78));
    CHECK(a != c);
}

TEST_CASE("generated networks validate across seeds and sizes") {
    SplitMix64 rng(4242);
    for (int trial = 0; trial < 25; ++trial) {
        SynthesisParams params;
        params.node_count = 2 + rng.next_below(200);
        params.pump_count = rng.next_below(4);
        params.tank_count = rng.next_below(4);
        auto net = generate_synthetic(params, rng.next());
        auto rep = validate(net);
        INFO("seed trial " << trial << " nodes " << params.node_count);
        CHECK(rep.pass());
        CHECK(rep.warnings.empty());  // all slopes positive
    }
}

TEST_CASE("requested station count is honored when it fits") {
    auto net = generate_synthetic({.node_count = 100, .pump_count = 3, .tank_count = 3}, 9);
    std::size_t tanks = 0, pumps = 0;
    for (const auto& n : net.nodes())
        if (n.kind == NodeKind::Storage) ++tanks;
    for (const auto& l : net.links())
        if (l.kind == LinkKind::Pump) ++pumps;
    CHECK(tanks == 3);
    CHECK(pumps == 3);
    CHECK(net.node_count() == 100);
}

TEST_CASE("undamaged steady utilization stays within the target") {
    SynthesisParams params{.node_count = 150, .pump_count = 2, .tank_count = 2};
    params.target_utilization = 0.5;
    auto net = generate_synthetic(params, 31);

    SolverConfig cfg;
    cfg.routing_step = 2.0;
    cfg.duration = 14400.0;
    auto res = route_kinematic(undamaged_view(net), InflowSet::from_network(net), cfg);

    for (std::size_t li = 0; li < net.link_count(); ++li) {
        if (net.link(li).kind != LinkKind::Conduit) continue;
        double utilization = res.max_abs_flow[li] / net.full_flow(li);
        INFO("conduit " << net.link(li).id);
        CHECK(utilization <= params.target_utilization);
    }
}

TEST_CASE("generator rejects bad parameters") {
    SynthesisParams params;
    params.target_utilization = 0.9;
    CHECK_THROWS(generate_synthetic(params, 1));
    params.target_utilization = 0.5;
    params.node_count = 1;
    CHECK_THROWS(generate_synthetic(params, 1));
}
