#include "sewersim/network.hpp"
#include "sewersim/synth.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>

using namespace sewersim;

TEST_CASE("minimal two-node chain validates") {
    auto net = fixtures::two_node_chain();
    auto rep = validate(net);
    CHECK(rep.pass());
    CHECK(rep.warnings.empty());
}

TEST_CASE("dangling endpoint is reported") {
    Network net;
    net.add_junction({"A", 1.0, 3.0, 0.0, "", {}});
    net.add_outfall({"Out", 0.0, {}});
    net.add_conduit({"C1", "A", "Out", 100.0, 0.013, 1.0, 0.0, 0.0});
    net.add_conduit({"C2", "A", "Missing", 50.0, 0.013, 1.0, 0.0, 0.0});
    net.freeze();
    auto rep = validate(net);
    REQUIRE_FALSE(rep.pass());
    bool found = false;
    for (const auto& v : rep.violations)
        if (v.code == "dangling endpoint" && v.component == "C2") found = true;
    CHECK(found);
}

TEST_CASE("two outgoing conduits violate the tree topology") {
    Network net;
    net.add_junction({"A", 2.0, 5.0, 0.0, "", {}});
    net.add_junction({"B", 1.0, 4.0, 0.0, "", {}});
    net.add_outfall({"Out", 0.0, {}});
    net.add_conduit({"C1", "A", "B", 100.0, 0.013, 1.0, 0.0, 0.0});
    net.add_conduit({"C2", "A", "Out", 100.0, 0.013, 1.0, 0.0, 0.0});
    net.add_conduit({"C3", "B", "Out", 100.0, 0.013, 1.0, 0.0, 0.0});
    net.freeze();
    auto rep = validate(net);
    REQUIRE_FALSE(rep.pass());
    bool found = false;
    for (const auto& v : rep.violations)
        if (v.code == "non-tree topology" && v.component == "A") found = true;
    CHECK(found);
}

TEST_CASE("cycles are rejected") {
    Network net;
    net.add_junction({"A", 1.0, 3.0, 0.0, "", {}});
    net.add_junction({"B", 1.0, 3.0, 0.0, "", {}});
    net.add_outfall({"Out", 0.0, {}});
    net.add_conduit({"C1", "A", "B", 100.0, 0.013, 1.0, 0.0, 0.0});
    net.add_conduit({"C2", "B", "A", 100.0, 0.013, 1.0, 0.0, 0.0});
    net.freeze();
    auto rep = validate(net);
    REQUIRE_FALSE(rep.pass());
    bool cycle = false, unreachable = false;
    for (const auto& v : rep.violations) {
        if (v.code == "cycle") cycle = true;
        if (v.code == "unreachable outfall") unreachable = true;
    }
    CHECK(cycle);
    CHECK(unreachable);
}

TEST_CASE("adverse slope is a warning, not a violation") {
    Network net;
    net.add_junction({"A", 0.0, 3.0, 0.0, "", {}});  // below the outfall invert
    net.add_outfall({"Out", 1.0, {}});
    net.add_conduit({"C1", "A", "Out", 100.0, 0.013, 1.0, 0.0, 0.0});
    net.freeze();
    auto rep = validate(net);
    CHECK(rep.pass());
    REQUIRE(rep.warnings.size() == 1);
    CHECK(rep.warnings[0].code == "adverse slope");
}

TEST_CASE("pump from a junction is rejected") {
    Network net;
    net.add_junction({"A", 1.0, 3.0, 0.0, "", {}});
    net.add_outfall({"Out", 0.0, {}});
    net.add_pump({"P1", "A", "Out", 1.0, 1.0, 0.2});
    net.freeze();
    auto rep = validate(net);
    REQUIRE_FALSE(rep.pass());
    CHECK(rep.violations[0].code == "pump source not tank");
}

TEST_CASE("downstream path on a chain") {
    auto net = fixtures::three_node_chain();
    auto path = downstream_path(net, "A");
    REQUIRE(path.size() == 2);
    CHECK(net.link(path[0]).id == "C1");
    CHECK(net.link(path[1]).id == "C2");
    CHECK(downstream_path(net, "B").size() == 1);
}

TEST_CASE("downstream path traverses tanks and pumps without counting them") {
    auto net = fixtures::pumped_chain();
    auto path = downstream_path(net, "A");
    std::vector<std::string> ids;
    for (auto li : path) ids.push_back(net.link(li).id);
    CHECK(ids == std::vector<std::string>{"C1", "C2", "C3"});

    // Independent walker agrees on every demand node.
    for (const auto& id : {"A", "B", "T", "C"}) {
        auto expected = oracles::walk_downstream(net, id);
        auto got = downstream_path(net, id);
        std::vector<std::string> got_ids;
        for (auto li : got) got_ids.push_back(net.link(li).id);
        CHECK(got_ids == expected);
    }
}

TEST_CASE("downstream path errors without a route to the outfall") {
    Network net;
    net.add_junction({"A", 1.0, 3.0, 0.0, "", {}});
    net.add_junction({"Island", 1.0, 3.0, 0.0, "", {}});
    net.add_outfall({"Out", 0.0, {}});
    net.add_conduit({"C1", "A", "Out", 100.0, 0.013, 1.0, 0.0, 0.0});
    net.freeze();
    CHECK_THROWS(downstream_path(net, "Island"));
}

TEST_CASE("suffix property: ancestor paths contain descendant paths") {
    auto net = generate_synthetic({.node_count = 60, .pump_count = 2, .tank_count = 2}, 11);
    for (std::size_t v = 0; v < net.node_count(); ++v) {
        if (!net.is_demand_node(v)) continue;
        auto pv = downstream_path(net, v);
        // Walk one hop upstream of v along any incoming conduit.
        for (auto li : net.in_links(v)) {
            if (net.link(li).kind != LinkKind::Conduit) continue;
            auto u = net.link(li).from;
            auto pu = downstream_path(net, u);
            REQUIRE(pu.size() == pv.size() + 1);
            CHECK(std::equal(pv.begin(), pv.end(), pu.begin() + 1));
        }
    }
}

TEST_CASE("arterial extraction on the pumped chain") {
    auto net = fixtures::pumped_chain();
    auto ext = extract_arterial(net);
    std::set<std::string> kept;
    for (const auto& n : ext.network.nodes()) kept.insert(n.id);
    CHECK(kept == std::set<std::string>{"B", "T", "C", "Out"});
    // B aggregates A's inflow plus its own.
    auto bi = ext.network.node_index("B");
    CHECK(ext.network.node(bi).base_inflow == 2.0);  // exact dyadic sum
    CHECK(ext.mapping.id_map.at("A") == "B");
    CHECK(ext.mapping.id_map.at("B") == "B");
    CHECK(ext.mapping.id_map.at("Out") == "Out");
    CHECK(validate(ext.network).pass());
}

TEST_CASE("arterial of a fully covered network is the identity") {
    Network net;
    net.add_tank({"T", 2.0, 2.0, 10.0, {}});
    net.add_junction({"C", 1.0, 3.0, 0.5, "", {}});
    net.add_outfall({"Out", 0.0, {}});
    net.add_pump({"P1", "T", "C", 1.0, 1.0, 0.2});
    net.add_conduit({"C1", "C", "Out", 100.0, 0.013, 1.0, 0.0, 0.0});
    net.freeze();
    auto ext = extract_arterial(net);
    CHECK(ext.network == net);
    for (const auto& [from, to] : ext.mapping.id_map) CHECK(from == to);
}

TEST_CASE("arterial requires at least one station") {
    auto net = fixtures::three_node_chain();
    CHECK_THROWS_WITH(extract_arterial(net),
                      Catch::Matchers::ContainsSubstring("no tanks or pumps"));
}

TEST_CASE("two parallel pumped branches keep both aggregation nodes") {
    auto net = fixtures::two_branch_pumped();
    auto ext = extract_arterial(net);
    std::set<std::string> kept;
    for (const auto& n : ext.network.nodes()) kept.insert(n.id);
    CHECK(kept == std::set<std::string>{"A1", "A2", "T1", "T2", "M", "Out"});
    CHECK(ext.network.node(ext.network.node_index("A1")).base_inflow == 1.0);
    CHECK(ext.network.node(ext.network.node_index("A2")).base_inflow == 0.5);

    // Downstream closure matches the brute-force oracle.
    auto closure = oracles::downstream_closure_of_stations(net);
    for (const auto& id : closure) CHECK(kept.count(id) == 1);
}

TEST_CASE("arterial extraction is idempotent and conserves inflow") {
    for (std::uint64_t seed : {3u, 19u, 57u}) {
        auto net = generate_synthetic({.node_count = 80, .pump_count = 2, .tank_count = 2},
                                      seed);
        auto ext = extract_arterial(net);

        // Exact conservation: generator inflows are dyadic.
        double full_sum = 0.0, art_sum = 0.0;
        for (const auto& n : net.nodes()) full_sum += n.base_inflow;
        for (const auto& n : ext.network.nodes()) art_sum += n.base_inflow;
        CHECK(full_sum == art_sum);

        auto again = extract_arterial(ext.network);
        CHECK(again.network == ext.network);

        // Mapping is total and arterial nodes map to themselves.
        for (const auto& n : net.nodes()) {
            REQUIRE(ext.mapping.id_map.count(n.id) == 1);
            if (ext.network.node_index(n.id) != npos)
                CHECK(ext.mapping.id_map.at(n.id) == n.id);
        }
    }
}

TEST_CASE("arterial path of the mapped node is a suffix of the full path") {
    auto net = generate_synthetic({.node_count = 70, .pump_count = 2, .tank_count = 2}, 23);
    auto ext = extract_arterial(net);
    for (std::size_t v = 0; v < net.node_count(); ++v) {
        if (!net.is_demand_node(v)) continue;
        const auto& target = ext.mapping.id_map.at(net.node(v).id);
        if (!ext.network.is_demand_node(ext.network.node_index(target))) continue;
        std::vector<std::string> full_ids;
        for (auto li : downstream_path(net, net.node(v).id))
            full_ids.push_back(net.link(li).id);
        std::vector<std::string> art_ids;
        for (auto li : downstream_path(ext.network, target))
            art_ids.push_back(ext.network.link(li).id);
        // Every arterial conduit of the mapped node's path appears, in
        // order, within the full-network path.
        auto it = full_ids.begin();
        for (const auto& id : art_ids) {
            it = std::find(it, full_ids.end(), id);
            REQUIRE(it != full_ids.end());
            ++it;
        }
    }
}

TEST_CASE("multi-outfall networks keep the mapping total") {
    Network net;
    net.add_junction({"A", 2.0, 5.0, 1.0, "", {}});
    net.add_tank({"T", 0.5, 2.0, 20.0, {}});
    net.add_junction({"B", 1.0, 4.0, 0.5, "", {}});
    net.add_outfall({"Out1", 0.0, {}});
    net.add_junction({"X", 1.5, 4.0, 0.25, "", {}});
    net.add_outfall({"Out2", 0.0, {}});
    net.add_conduit({"C1", "A", "T", 100.0, 0.013, 1.0, 0.0, 0.0});
    net.add_pump({"P1", "T", "B", 2.0, 1.0, 0.2});
    net.add_conduit({"C2", "B", "Out1", 100.0, 0.013, 1.0, 0.0, 0.0});
    net.add_conduit({"C3", "X", "Out2", 100.0, 0.013, 1.0, 0.0, 0.0});
    net.freeze();
    REQUIRE(validate(net).pass());
    auto ext = extract_arterial(net);
    // X drains to an outfall with no station upstream: X becomes an
    // aggregation node so no inflow is dropped.
    CHECK(ext.mapping.id_map.at("X") == "X");
    double full_sum = 0.0, art_sum = 0.0;
    for (const auto& n : net.nodes()) full_sum += n.base_inflow;
    for (const auto& n : ext.network.nodes()) art_sum += n.base_inflow;
    CHECK(full_sum == art_sum);
}

TEST_CASE("network equality is field-for-field") {
    auto a = fixtures::pumped_chain();
    auto b = fixtures::pumped_chain();
    CHECK(a == b);
    Network c;
    c.add_junction({"A", 3.0, 6.0, 1.0, "", {0.0, 0.0}});
    CHECK_FALSE(a == c);
}
