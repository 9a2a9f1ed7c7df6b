#ifndef SEWERSIM_TEST_FIXTURES_HPP
#define SEWERSIM_TEST_FIXTURES_HPP

#include "sewersim/network.hpp"

namespace fixtures {

using namespace sewersim;

// A -> Out, one conduit.
inline Network two_node_chain() {
    Network net;
    net.add_junction({"A", 1.0, 4.0, 0.5, "", {0.0, 0.0}});
    net.add_outfall({"Out", 0.0, {100.0, 0.0}});
    net.add_conduit({"C1", "A", "Out", 100.0, 0.013, 1.0, 0.0, 0.0});
    net.freeze();
    return net;
}

// A -> B -> Out, two conduits.
inline Network three_node_chain(double base_a = 1.0, double base_b = 1.0) {
    Network net;
    net.add_junction({"A", 2.0, 5.0, base_a, "", {0.0, 0.0}});
    net.add_junction({"B", 1.0, 4.0, base_b, "", {100.0, 0.0}});
    net.add_outfall({"Out", 0.0, {200.0, 0.0}});
    net.add_conduit({"C1", "A", "B", 100.0, 0.013, 1.0, 0.0, 0.0});
    net.add_conduit({"C2", "B", "Out", 100.0, 0.013, 1.0, 0.0, 0.0});
    net.freeze();
    return net;
}

// A -> B -> T(tank) -> pump -> C -> Out; pump link is not part of s_i.
inline Network pumped_chain() {
    Network net;
    net.add_junction({"A", 3.0, 6.0, 1.0, "", {0.0, 0.0}});
    net.add_junction({"B", 2.0, 5.0, 1.0, "", {100.0, 0.0}});
    net.add_tank({"T", 0.5, 2.0, 25.0, {200.0, 0.0}});
    net.add_junction({"C", 1.0, 4.0, 0.0, "", {300.0, 0.0}});
    net.add_outfall({"Out", 0.0, {400.0, 0.0}});
    net.add_conduit({"C1", "A", "B", 100.0, 0.013, 1.0, 0.0, 0.0});
    net.add_conduit({"C2", "B", "T", 100.0, 0.013, 1.0, 0.0, 0.0});
    net.add_pump({"P1", "T", "C", 4.0, 1.2, 0.4});
    net.add_conduit({"C3", "C", "Out", 100.0, 0.013, 1.2, 0.0, 0.0});
    net.freeze();
    return net;
}

// Two parallel pumped branches merging at M before the outfall.
inline Network two_branch_pumped() {
    Network net;
    net.add_junction({"A1", 4.0, 7.0, 1.0, "", {0.0, 100.0}});
    net.add_junction({"A2", 3.5, 6.5, 0.5, "", {0.0, -100.0}});
    net.add_tank({"T1", 2.0, 2.0, 25.0, {100.0, 100.0}});
    net.add_tank({"T2", 2.0, 2.0, 25.0, {100.0, -100.0}});
    net.add_junction({"M", 1.0, 4.0, 0.25, "", {200.0, 0.0}});
    net.add_outfall({"Out", 0.0, {300.0, 0.0}});
    net.add_conduit({"C1", "A1", "T1", 100.0, 0.013, 1.0, 0.0, 0.0});
    net.add_conduit({"C2", "A2", "T2", 100.0, 0.013, 1.0, 0.0, 0.0});
    net.add_pump({"P1", "T1", "M", 4.0, 1.2, 0.4});
    net.add_pump({"P2", "T2", "M", 4.0, 1.2, 0.4});
    net.add_conduit({"C3", "M", "Out", 100.0, 0.013, 1.5, 0.0, 0.0});
    net.freeze();
    return net;
}

} // namespace fixtures

#endif
