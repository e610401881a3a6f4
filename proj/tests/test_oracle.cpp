#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ropf/kernels.hpp"
#include "ropf/network.hpp"
#include "ropf/oracle.hpp"

using namespace ropf;

namespace {

RadialNetwork two_bus(const InjectionRegion& load, double beta = 1.0) {
    RadialNetwork net;
    net.n_buses = 2;
    net.parent = {-1, 0};
    net.children = {{1}, {}};
    net.line = {{}, {0.01, 0.01}};
    net.spec.resize(2);
    net.spec[0].v_lo = net.spec[0].v_hi = 1.0;
    net.spec[0].injection = BoxRegion{-10, 10, -10, 10};
    net.spec[0].beta = beta;
    net.spec[1].injection = load;
    net.spec[1].beta = beta;
    validate(net);
    return net;
}

}  // namespace

TEST_CASE("objective evaluation") {
    RadialNetwork net = two_bus(BoxRegion{0, 0, 0, 0});
    CHECK(objective({0.0, 0.0}, net) == 0.0);
    CHECK(objective({0.1, -0.2}, net) == doctest::Approx(-0.1));

    net.spec[0].alpha = 2.0;
    net.spec[0].beta = 0.0;
    net.spec[1].beta = 0.0;
    CHECK(objective({0.5, 0.0}, net) == doctest::Approx(0.25));
}

TEST_CASE("oracle_disk frozen instances") {
    const OracleConfig cfg;
    {
        const auto res = oracle_disk({2, 2, 1, -1, 10}, cfg);
        CHECK(res.p == doctest::Approx(0).epsilon(1e-5));
        CHECK(res.q == doctest::Approx(0.5).epsilon(1e-5));
    }
    {
        // Interior optimum matches the unconstrained minimizer.
        const auto res = oracle_disk({2, 2, -1, -1, 10}, cfg);
        CHECK(res.p == doctest::Approx(0.5).epsilon(1e-5));
        CHECK(res.q == doctest::Approx(0.5).epsilon(1e-5));
    }
    {
        // Extreme pull lands on the boundary.
        const auto res = oracle_disk({2, 2, -1000, 0, 1}, cfg);
        CHECK(res.p == doctest::Approx(1).epsilon(1e-5));
        CHECK(res.q == doctest::Approx(0).epsilon(1e-4));
    }
}

TEST_CASE("oracle_cone_box matches the kernel on shared ground truth") {
    const OracleConfig cfg;
    const ConeBoxQP qp{0, 0, 0, 0, 1.0, 0.5, 2.0};
    const auto res = oracle_cone_box(qp, cfg);
    const auto sol = solve_cone_box_qp(qp);
    CHECK(std::abs(res.objective -
                   cone_box_objective(qp, sol.z1, sol.z2, sol.z3, sol.z4)) <= 1e-6);

    // Cone inactive: componentwise clamped minimizer.
    const ConeBoxQP easy{-1, 0, -2, -2, 1.0, 0.5, 2.0};
    const auto res2 = oracle_cone_box(easy, cfg);
    CHECK(res2.z[0] == doctest::Approx(0.5).epsilon(1e-4));
    CHECK(res2.z[2] == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("oracle_ropf_small on desk instances") {
    const OracleConfig cfg;
    {
        // Zero loads, loss minimization: nothing flows, objective 0.
        const RadialNetwork net = two_bus(BoxRegion{0, 0, 0, 0});
        const auto res = oracle_ropf_small(net, cfg);
        CHECK(std::abs(res.objective) <= 1e-9);
        CHECK(res.point.feasible);
    }
    {
        // Single PV bus: losses are minimized at zero export, and the point
        // keeps the cone tight by construction.
        const RadialNetwork net = two_bus(DiskRegion{0.05});
        const auto res = oracle_ropf_small(net, cfg);
        CHECK(res.point.feasible);
        const double gap =
            res.point.v[1] * res.point.l[1] - std::norm(res.point.S[1]);
        CHECK(std::abs(gap) <= 1e-6);
    }
    {
        // Doubling the grid moves the objective by at most 1e-5.
        const RadialNetwork net = two_bus(DiskRegion{0.05});
        OracleConfig fine = cfg;
        fine.grid = 2 * cfg.grid;
        const auto coarse = oracle_ropf_small(net, cfg);
        const auto refined = oracle_ropf_small(net, fine);
        CHECK(std::abs(coarse.objective - refined.objective) <= 1e-5);
    }
    {
        // Oversized networks are rejected.
        LoadProfile profile;
        profile.seed = 2;
        CHECK_THROWS(oracle_ropf_small(gen_line(7, profile), cfg));
    }
}
