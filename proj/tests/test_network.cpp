#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "ropf/network.hpp"

using namespace ropf;

namespace {

std::string two_bus_doc() {
    return R"({
  "version": 1,
  "buses": [
    {"id": 0, "v_lo": 1.0, "v_hi": 1.0, "alpha": 0.0, "beta": 1.0,
     "injection": {"kind": "box", "p_lo": -10, "p_hi": 10, "q_lo": -10, "q_hi": 10}},
    {"id": 1, "v_lo": 0.9025, "v_hi": 1.1025, "alpha": 0.0, "beta": 1.0,
     "injection": {"kind": "box", "p_lo": -0.1, "p_hi": 0.0, "q_lo": -0.05, "q_hi": 0.0}}
  ],
  "lines": [{"from": 1, "to": 0, "r": 0.01, "x": 0.01}]
})";
}

}  // namespace

TEST_CASE("load minimal two-bus document") {
    const RadialNetwork net = load_network(two_bus_doc());
    CHECK(net.n_buses == 2);
    CHECK(net.parent[1] == 0);
    CHECK(net.children[0] == std::vector<BusId>{1});
    CHECK(net.line[1].r == doctest::Approx(0.01));
}

TEST_CASE("load rejects malformed documents") {
    CHECK_THROWS_AS(load_network("not json"), ParseError);
    CHECK_THROWS_AS(load_network(R"({"version": 1, "buses": []})"), ParseError);

    // Self-loop: bus 2's line points to itself.
    std::string doc = two_bus_doc();
    auto pos = doc.find(R"("from": 1, "to": 0)");
    doc.replace(pos, 18, R"("from": 1, "to": 1)");
    CHECK_THROWS_AS(load_network(doc), ValidationError);

    // Missing line impedance for bus 1.
    std::string missing = two_bus_doc();
    pos = missing.find(R"("lines")");
    missing = missing.substr(0, pos) + "\"lines\": []\n}";
    CHECK_THROWS_AS(load_network(missing), ParseError);
}

TEST_CASE("validate diagnoses broken invariants") {
    RadialNetwork net = load_network(two_bus_doc());
    CHECK(validation_errors(net).empty());

    RadialNetwork bad_root = net;
    bad_root.spec[0].v_hi = 1.1;
    const auto errs = validation_errors(bad_root);
    REQUIRE(!errs.empty());
    bool mentions_root = false;
    for (const auto& e : errs) mentions_root = mentions_root || e.find("root") != std::string::npos;
    CHECK(mentions_root);

    RadialNetwork bad_box = net;
    bad_box.spec[1].injection = BoxRegion{1.0, 0.0, 0.0, 0.0};
    CHECK(!validation_errors(bad_box).empty());

    RadialNetwork bad_line = net;
    bad_line.line[1] = LineParams{0.0, 0.0};
    CHECK(!validation_errors(bad_line).empty());
    CHECK_THROWS_AS(validate(bad_line), ValidationError);
}

TEST_CASE("generators produce the advertised topologies deterministically") {
    LoadProfile profile;
    profile.seed = 1;
    const RadialNetwork line5 = gen_line(5, profile);
    for (BusId b = 1; b < 5; ++b) CHECK(line5.parent[b] == b - 1);
    CHECK(save_network(gen_line(5, profile)) == save_network(line5));

    const RadialNetwork star5 = gen_fat_tree(5, profile);
    for (BusId b = 1; b < 5; ++b) CHECK(star5.parent[b] == 0);

    CHECK(diameter(gen_line(10, profile)) == 9);
    CHECK(diameter(gen_fat_tree(10, profile)) == 2);
    CHECK(diameter(gen_fat_tree(2, profile)) == 1);
    CHECK_THROWS(gen_line(1, profile));
    CHECK_THROWS(gen_fat_tree(1, profile));
}

TEST_CASE("generator diameters across sizes 2..200") {
    LoadProfile profile;
    profile.seed = 42;
    for (int n = 2; n <= 200; ++n) {
        const RadialNetwork line = gen_line(n, profile);
        CHECK(validation_errors(line).empty());
        CHECK(diameter(line) == n - 1);
        const RadialNetwork star = gen_fat_tree(n, profile);
        CHECK(validation_errors(star).empty());
        CHECK(diameter(star) == (n >= 3 ? 2 : 1));
    }
    const RadialNetwork rt = gen_random_tree(100, profile);
    CHECK(validation_errors(rt).empty());
    CHECK(diameter(rt) >= 2);
}

TEST_CASE("load-save-load is the identity") {
    LoadProfile profile;
    profile.seed = 9;
    for (const RadialNetwork& net :
         {gen_line(20, profile), gen_fat_tree(20, profile), gen_random_tree(20, profile)}) {
        const std::string bytes = save_network(net);
        const RadialNetwork reloaded = load_network(bytes);
        CHECK(save_network(reloaded) == bytes);
        CHECK(reloaded.n_buses == net.n_buses);
        CHECK(reloaded.parent == net.parent);
    }
}
