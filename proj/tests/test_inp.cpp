#include "sewersim/inp.hpp"
#include "sewersim/synth.hpp"
#include "support/fixtures.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace sewersim;

namespace {

const char* kMinimalInp = R"(;units SI
[JUNCTIONS]
J1  10.0  3.0

[OUTFALLS]
O1  0.0  FREE

[CONDUITS]
C1  J1  O1  120.5  0.013

[XSECTIONS]
C1  CIRCULAR  0.9

[DWF]
J1  FLOW  0.004
)";

} // namespace

TEST_CASE("minimal document parses into a two-node network") {
    auto parsed = parse_inp(kMinimalInp);
    const auto& net = parsed.network;
    CHECK(parsed.warnings.empty());
    REQUIRE(net.node_count() == 2);
    REQUIRE(net.link_count() == 1);
    auto j = net.node(net.node_index("J1"));
    CHECK(j.invert_elev == 10.0);
    CHECK(j.rim_elev == 13.0);
    CHECK(j.base_inflow == 0.004);
    const auto& c = net.link(0);
    CHECK(c.length == 120.5);
    CHECK(c.diameter == 0.9);
    CHECK(validate(net).pass());
}

TEST_CASE("undefined node reference is a semantic error with the line") {
    std::string text = kMinimalInp;
    text += "\n[CONDUITS]\nC9 J9 O1 10 0.013\n";
    try {
        parse_inp(text);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        std::string what = e.what();
        CHECK(what.find("J9") != std::string::npos);
        CHECK(what.find("undefined") != std::string::npos);
        CHECK(e.line > 0);
    }
}

TEST_CASE("unsupported sections are skipped with a warning") {
    std::string text = kMinimalInp;
    text += "\n[WEIRS]\nW1 J1 O1 TRANSVERSE 1.0\n";
    auto parsed = parse_inp(text);
    REQUIRE(parsed.warnings.size() == 1);
    CHECK(parsed.warnings[0] == "section WEIRS ignored");
    CHECK(parsed.network.node_count() == 2);
}

TEST_CASE("malformed numbers name the line") {
    try {
        parse_inp("[JUNCTIONS]\nJ1 ten 3.0\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line == 2);
    }
}

TEST_CASE("non-SI unit declarations are rejected") {
    CHECK_THROWS_AS(parse_inp(";units US\n[JUNCTIONS]\nJ1 1 3\n"), ParseError);
    CHECK_THROWS_AS(parse_inp("[OPTIONS]\nFLOW_UNITS CFS\n"), ParseError);
    CHECK_NOTHROW(parse_inp(";units SI\n[OPTIONS]\nFLOW_UNITS CMS\n[OUTFALLS]\nO1 0 FREE\n"));
}

TEST_CASE("non-circular sections are rejected") {
    std::string text = kMinimalInp;
    auto pos = text.find("CIRCULAR");
    text.replace(pos, 8, "RECT_OPEN");
    CHECK_THROWS_WITH(parse_inp(text), Catch::Matchers::ContainsSubstring("CIRCULAR"));
}

TEST_CASE("round trip of hand-built fixtures") {
    for (const Network& net :
         {fixtures::two_node_chain(), fixtures::three_node_chain(), fixtures::pumped_chain(),
          fixtures::two_branch_pumped()}) {
        auto text = write_inp(net);
        auto back = parse_inp(text);
        CHECK(back.network == net);
    }
}

TEST_CASE("round trip of the arterial extraction output") {
    auto ext = extract_arterial(fixtures::pumped_chain());
    auto back = parse_inp(write_inp(ext.network));
    CHECK(back.network == ext.network);
}

TEST_CASE("patterns survive the round trip") {
    Network net;
    net.add_junction({"J1", 1.0, 3.0, 0.01, "P1", {2.5, -3.5}});
    net.add_outfall({"O1", 0.0, {0.0, 0.0}});
    net.add_conduit({"C1", "J1", "O1", 100.0, 0.013, 0.5, 0.1, 0.05});
    net.set_pattern("P1", {0.5, 1.5, 1.0, 0.9});
    net.freeze();
    auto back = parse_inp(write_inp(net));
    CHECK(back.network == net);
    CHECK(back.network.pattern_multiplier("P1", 3700.0) == 1.5);
}

TEST_CASE("numeric round trip keeps full precision on random networks") {
    // Slopes are differences of close elevations: field-for-field equality
    // after parse(write(n)) needs the writer to keep every digit.
    SplitMix64 rng(99);
    for (int trial = 0; trial < 60; ++trial) {
        SynthesisParams params;
        params.node_count = 2 + rng.next_below(25);
        params.pump_count = rng.next_below(3);
        params.tank_count = params.pump_count;
        params.base_inflow = rng.uniform(1e-5, 0.01);  // deliberately non-dyadic
        auto net = generate_synthetic(params, rng.next());
        auto text = write_inp(net);
        auto back = parse_inp(text);
        REQUIRE(back.network == net);
        // parse . write . parse = parse
        CHECK(parse_inp(write_inp(back.network)).network == back.network);
    }
}

TEST_CASE("document parser keeps sections and comments") {
    auto doc = parse_inp_document(kMinimalInp);
    REQUIRE(doc.find("JUNCTIONS") != nullptr);
    CHECK(doc.find("JUNCTIONS")->records.size() == 1);
    CHECK(doc.leading_comments.size() == 1);
    CHECK(doc.leading_comments[0] == "units SI");
}
