#include "sewersim/damage.hpp"
#include "sewersim/inp.hpp"
#include "support/fixtures.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace sewersim;

TEST_CASE("degenerate all-undamaged model leaves everything intact") {
    auto net = fixtures::pumped_chain();
    auto sc = sample_scenario(DamageModel::all_undamaged(), net, 123, 0);
    for (const auto& st : sc.link_states) CHECK(st.kind == DamageKind::Undamaged);
    for (const auto& st : sc.node_states) CHECK(st.kind == DamageKind::Undamaged);
}

TEST_CASE("same seed and index reproduce the scenario") {
    auto net = fixtures::pumped_chain();
    DamageModel model;
    auto a = sample_scenario(model, net, 99, 7);
    auto b = sample_scenario(model, net, 99, 7);
    CHECK(a.link_states == b.link_states);
    CHECK(a.node_states == b.node_states);
    auto c = sample_scenario(model, net, 99, 8);
    bool same = a.link_states == c.link_states && a.node_states == c.node_states;
    CHECK_FALSE(same);
}

TEST_CASE("empirical state frequencies match the model at 10k draws") {
    auto net = fixtures::pumped_chain();  // 3 conduits, 1 pump, 1 tank
    DamageModel model;
    const std::size_t n = 10000;
    std::size_t pipe_failed = 0, pipe_c50 = 0, pipe_c10 = 0;
    std::size_t pump_failed = 0, tank_failed = 0, pipe_draws = 0;
    for (std::size_t i = 0; i < n; ++i) {
        auto sc = sample_scenario(model, net, 2024, i);
        for (std::size_t li = 0; li < net.link_count(); ++li) {
            const auto& st = sc.link_states[li];
            if (net.link(li).kind == LinkKind::Conduit) {
                ++pipe_draws;
                if (st.kind == DamageKind::Failed) ++pipe_failed;
                if (st.kind == DamageKind::CapacityFactor && st.capacity == 0.5) ++pipe_c50;
                if (st.kind == DamageKind::CapacityFactor && st.capacity == 0.1) ++pipe_c10;
            } else if (st.kind == DamageKind::Failed) {
                ++pump_failed;
            }
        }
        auto ti = net.node_index("T");
        if (sc.node_states[ti].kind == DamageKind::Failed) ++tank_failed;
    }
    auto within3sigma = [](std::size_t hits, std::size_t draws, double p) {
        double sigma = std::sqrt(p * (1.0 - p) / static_cast<double>(draws));
        return std::abs(static_cast<double>(hits) / draws - p) <= 3.0 * sigma;
    };
    CHECK(within3sigma(pipe_failed, pipe_draws, 0.01));
    CHECK(within3sigma(pipe_c50, pipe_draws, 0.10));
    CHECK(within3sigma(pipe_c10, pipe_draws, 0.04));
    CHECK(within3sigma(pump_failed, n, 0.10));
    CHECK(within3sigma(tank_failed, n, 0.10));
}

TEST_CASE("sampling is independent of component iteration order") {
    // Build the same network with components declared in a different order;
    // per-component draws depend only on (seed, index, id).
    Network a = fixtures::three_node_chain();
    Network b;
    b.add_outfall({"Out", 0.0, {200.0, 0.0}});
    b.add_junction({"B", 1.0, 4.0, 1.0, "", {100.0, 0.0}});
    b.add_junction({"A", 2.0, 5.0, 1.0, "", {0.0, 0.0}});
    b.add_conduit({"C2", "B", "Out", 100.0, 0.013, 1.0, 0.0, 0.0});
    b.add_conduit({"C1", "A", "B", 100.0, 0.013, 1.0, 0.0, 0.0});
    b.freeze();
    DamageModel model;
    for (std::uint64_t i = 0; i < 200; ++i) {
        auto sa = sample_scenario(model, a, 5, i);
        auto sb = sample_scenario(model, b, 5, i);
        for (const auto& l : a.links()) {
            auto ia = a.link_index(l.id);
            auto ib = b.link_index(l.id);
            CHECK(sa.link_states[ia] == sb.link_states[ib]);
        }
    }
}

TEST_CASE("apply_scenario removes failed components and their attachments") {
    auto net = fixtures::pumped_chain();
    DamageScenario sc;
    sc.link_states.assign(net.link_count(), DamageState::undamaged());
    sc.node_states.assign(net.node_count(), DamageState::undamaged());
    sc.node_states[net.node_index("T")] = DamageState::failed();
    auto dn = apply_scenario(net, sc);
    CHECK_FALSE(dn.node_alive[net.node_index("T")]);
    CHECK_FALSE(dn.link_alive[net.link_index("P1")]);  // pump hangs off the tank
    CHECK_FALSE(dn.link_alive[net.link_index("C2")]);  // conduit into the tank
    CHECK(dn.link_alive[net.link_index("C1")]);
    CHECK(dn.link_alive[net.link_index("C3")]);
}

TEST_CASE("capacity factor halves effective capacity and leaves the rest") {
    auto net = fixtures::three_node_chain();
    DamageScenario sc;
    sc.link_states.assign(net.link_count(), DamageState::undamaged());
    sc.node_states.assign(net.node_count(), DamageState::undamaged());
    sc.link_states[net.link_index("C2")] = DamageState::capacity_factor(0.5);
    auto dn = apply_scenario(net, sc);
    auto c2 = net.link_index("C2");
    CHECK(dn.effective_capacity(c2) == 0.5 * net.full_flow(c2));
    CHECK(dn.effective_manning(c2) == net.link(c2).manning_n / 0.5);
    auto c1 = net.link_index("C1");
    CHECK(dn.effective_capacity(c1) == net.full_flow(c1));
    CHECK(dn.link_alive[c2]);
}

TEST_CASE("all-undamaged scenario reproduces the original view") {
    auto net = fixtures::pumped_chain();
    auto sc = sample_scenario(DamageModel::all_undamaged(), net, 1, 0);
    auto dn = apply_scenario(net, sc);
    for (auto alive : dn.node_alive) CHECK(alive);
    for (auto alive : dn.link_alive) CHECK(alive);
    for (auto c : dn.capacity_factor) CHECK(c == 1.0);
}

TEST_CASE("apply_scenario never mutates the input network") {
    auto net = fixtures::pumped_chain();
    auto before = write_inp(net);
    DamageModel model;
    for (std::uint64_t i = 0; i < 50; ++i) {
        auto sc = sample_scenario(model, net, 77, i);
        auto dn = apply_scenario(net, sc);
        (void)dn;
    }
    CHECK(write_inp(net) == before);
}

TEST_CASE("scenario must cover the network") {
    auto net = fixtures::pumped_chain();
    DamageScenario sc;
    sc.link_states.assign(1, DamageState::undamaged());
    sc.node_states.assign(net.node_count(), DamageState::undamaged());
    CHECK_THROWS(apply_scenario(net, sc));
}

TEST_CASE("damage model override file parses and validates") {
    auto model = parse_damage_model(
        "; capacity loss study\n"
        "pipes undamaged 0.7\n"
        "pipes capacity:0.25 0.2\n"
        "pipes failed 0.1\n"
        "tanks undamaged 1.0\n");
    CHECK(model.pipes.entries.size() == 3);
    CHECK(model.pipes.entries[1].first.capacity == 0.25);
    CHECK(model.tanks.entries.size() == 1);
    // pumps keep the default
    CHECK(model.pumps.entries.size() == 2);

    CHECK_THROWS(parse_damage_model("pipes undamaged 0.5\n"));      // does not sum to 1
    CHECK_THROWS(parse_damage_model("pipes broken 1.0\n"));         // unknown state
    CHECK_THROWS(parse_damage_model("valves undamaged 1.0\n"));     // unknown class
    CHECK_THROWS(parse_damage_model("pipes capacity:1.5 1.0\n"));   // capacity out of range
}

TEST_CASE("distribution invariants are enforced") {
    DamageStateDistribution d{{{DamageState::undamaged(), 0.5},
                               {DamageState::failed(), 0.5000001}}};
    CHECK_THROWS(d.check());
}
