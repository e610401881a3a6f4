#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "ropf/kernels.hpp"
#include "ropf/oracle.hpp"

using namespace ropf;

TEST_CASE("clamp") {
    CHECK(clamp(5, 0, 2) == 2);
    CHECK(clamp(-1, 0, 2) == 0);
    CHECK(clamp(1, 0, 2) == 1);
    CHECK_THROWS_AS(clamp(0, 2, 1), KernelError);
}

TEST_CASE("real_roots on factored forms") {
    {
        // p^3 - p
        const std::vector<double> c{0, -1, 0, 1};
        const auto roots = real_roots(c);
        REQUIRE(roots.size() == 3);
        CHECK(roots[0] == doctest::Approx(-1).epsilon(1e-9));
        CHECK(roots[1] == doctest::Approx(0).epsilon(1e-9));
        CHECK(roots[2] == doctest::Approx(1).epsilon(1e-9));
    }
    {
        // p^4 - 5p^2 + 4
        const std::vector<double> c{4, 0, -5, 0, 1};
        const auto roots = real_roots(c);
        REQUIRE(roots.size() == 4);
        CHECK(roots[0] == doctest::Approx(-2).epsilon(1e-9));
        CHECK(roots[1] == doctest::Approx(-1).epsilon(1e-9));
        CHECK(roots[2] == doctest::Approx(1).epsilon(1e-9));
        CHECK(roots[3] == doctest::Approx(2).epsilon(1e-9));
    }
    {
        // p^2 + 1: no real roots
        const std::vector<double> c{1, 0, 1};
        CHECK(real_roots(c).empty());
    }
    {
        // zero polynomial is rejected
        const std::vector<double> c{0, 0, 0};
        CHECK_THROWS_AS(real_roots(c), KernelError);
    }
}

TEST_CASE("real_roots recovers well-separated random roots") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> root_dist(-10.0, 10.0);
    std::uniform_int_distribution<int> deg_dist(1, 4);
    std::uniform_real_distribution<double> lead(0.2, 3.0);
    for (int trial = 0; trial < 500; ++trial) {
        const int deg = deg_dist(rng);
        std::vector<double> roots;
        while (static_cast<int>(roots.size()) < deg) {
            const double r = root_dist(rng);
            bool ok = true;
            for (double prev : roots) ok = ok && std::abs(prev - r) >= 1e-3;
            if (ok) roots.push_back(r);
        }
        std::sort(roots.begin(), roots.end());
        // Expand prod (x - r_i), ascending coefficients.
        std::vector<double> coeffs{lead(rng)};
        for (double r : roots) {
            std::vector<double> next(coeffs.size() + 1, 0.0);
            for (std::size_t i = 0; i < coeffs.size(); ++i) {
                next[i + 1] += coeffs[i];
                next[i] -= r * coeffs[i];
            }
            coeffs = std::move(next);
        }
        const auto found = real_roots(coeffs);
        REQUIRE(found.size() == roots.size());
        for (std::size_t i = 0; i < roots.size(); ++i) {
            CHECK(std::abs(found[i] - roots[i]) <= 1e-7);
        }
    }
}

TEST_CASE("solve_eq_qp frozen instances") {
    EqQP qp;
    qp.a_diag = Eigen::Vector2d(1, 1);
    qp.B = Eigen::MatrixXd(1, 2);
    qp.B << 1, -1;
    qp.c = Eigen::Vector2d(1, 0);
    Eigen::VectorXd x = solve_eq_qp(qp);
    CHECK(x(0) == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(x(1) == doctest::Approx(-0.5).epsilon(1e-12));

    qp.a_diag = Eigen::Vector2d(2, 2);
    x = solve_eq_qp(qp);
    CHECK(x(0) == doctest::Approx(-0.25).epsilon(1e-12));
    CHECK(x(1) == doctest::Approx(-0.25).epsilon(1e-12));

    qp.c = Eigen::Vector2d(0, 0);
    x = solve_eq_qp(qp);
    CHECK(x.norm() == doctest::Approx(0).epsilon(1e-14));

    // Rank-deficient B is rejected.
    EqQP bad = qp;
    bad.B = Eigen::MatrixXd(2, 2);
    bad.B << 1, -1, 2, -2;
    CHECK_THROWS_AS(solve_eq_qp(bad), KernelError);
}

TEST_CASE("solve_eq_qp agrees with dense KKT oracle") {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> n_dist(2, 20);
    std::uniform_real_distribution<double> a_dist(0.3, 3.0);
    std::uniform_real_distribution<double> e_dist(-2.0, 2.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = n_dist(rng);
        std::uniform_int_distribution<int> m_dist(1, std::min(10, n - 1));
        const int m = m_dist(rng);
        EqQP qp;
        qp.a_diag.resize(n);
        qp.c.resize(n);
        qp.B.resize(m, n);
        for (int i = 0; i < n; ++i) qp.a_diag(i) = a_dist(rng);
        for (int i = 0; i < n; ++i) qp.c(i) = e_dist(rng);
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < n; ++j) qp.B(i, j) = e_dist(rng);
        }
        if (Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(qp.B.transpose()).rank() != m) continue;

        const Eigen::VectorXd x = solve_eq_qp(qp);
        Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + m, n + m);
        kkt.topLeftCorner(n, n) = Eigen::MatrixXd(qp.a_diag.asDiagonal());
        kkt.topRightCorner(n, m) = qp.B.transpose();
        kkt.bottomLeftCorner(m, n) = qp.B;
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + m);
        rhs.head(n) = -qp.c;
        const Eigen::VectorXd full = kkt.fullPivLu().solve(rhs);
        const Eigen::VectorXd ref = full.head(n);
        const Eigen::VectorXd nu = full.tail(m);

        const double scale = std::max(1.0, qp.c.cwiseAbs().maxCoeff());
        CHECK((qp.B * x).cwiseAbs().maxCoeff() <= 1e-10 * scale);
        const Eigen::VectorXd grad =
            qp.a_diag.asDiagonal() * x + qp.c + qp.B.transpose() * nu;
        CHECK(grad.cwiseAbs().maxCoeff() <= 1e-8 * scale);
        auto obj = [&](const Eigen::VectorXd& y) {
            return 0.5 * y.dot(qp.a_diag.asDiagonal() * y) + qp.c.dot(y);
        };
        CHECK(obj(x) <= obj(ref) + 1e-9);
    }
}

TEST_CASE("solve_cone_box_qp frozen instances") {
    {
        ConeBoxQP qp{0, 0, 0, 0, 1.0, 0.5, 2.0};
        const auto sol = solve_cone_box_qp(qp);
        CHECK(sol.z1 == doctest::Approx(0).epsilon(1e-12));
        CHECK(sol.z2 == doctest::Approx(0).epsilon(1e-12));
        CHECK(sol.z3 == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(sol.z4 == doctest::Approx(0).epsilon(1e-12));
        CHECK(sol.resolved_case == ConeBoxCase::Unconstrained);
    }
    {
        ConeBoxQP qp{-1, 0, -2, -2, 1.0, 0.5, 2.0};
        const auto sol = solve_cone_box_qp(qp);
        CHECK(sol.z1 == doctest::Approx(0.5).epsilon(1e-10));
        CHECK(sol.z2 == doctest::Approx(0).epsilon(1e-10));
        CHECK(sol.z3 == doctest::Approx(1).epsilon(1e-10));
        CHECK(sol.z4 == doctest::Approx(1).epsilon(1e-10));
        CHECK(sol.resolved_case == ConeBoxCase::Unconstrained);
    }
    {
        // Case-1 candidate (2, 0, 1, 1) violates the cone (4 > 1); the
        // solver must fall through to a cone-active case and match the oracle.
        ConeBoxQP qp{-4, 0, -2, -2, 1.0, 0.5, 2.0};
        const auto sol = solve_cone_box_qp(qp);
        CHECK(sol.resolved_case != ConeBoxCase::Unconstrained);
        const double cone = (sol.z1 * sol.z1 + sol.z2 * sol.z2) / sol.z3 - sol.z4;
        CHECK(std::abs(cone) <= 1e-8);
        const auto ref = oracle_cone_box(qp, OracleConfig{});
        CHECK(cone_box_objective(qp, sol.z1, sol.z2, sol.z3, sol.z4) <=
              ref.objective + 1e-6);
    }
}

TEST_CASE("solve_cone_box_qp handles a fixed z3 box") {
    ConeBoxQP qp{-4, 1, -2, -2, 0.8, 1.0, 1.0};
    const auto sol = solve_cone_box_qp(qp);
    CHECK(sol.z3 == doctest::Approx(1.0).epsilon(1e-12));
    const auto ref = oracle_cone_box(qp, OracleConfig{});
    CHECK(cone_box_objective(qp, sol.z1, sol.z2, sol.z3, sol.z4) <= ref.objective + 1e-6);
}

TEST_CASE("solve_cone_box_qp fuzz vs oracle") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> coeff(-5.0, 5.0);
    std::uniform_real_distribution<double> k_dist(0.3, 2.0);
    std::uniform_real_distribution<double> lo_dist(0.05, 2.5);
    std::uniform_real_distribution<double> width(0.0, 0.5);
    std::set<ConeBoxCase> seen;
    for (int trial = 0; trial < 1000; ++trial) {
        ConeBoxQP qp;
        qp.c1 = coeff(rng);
        qp.c2 = coeff(rng);
        qp.c3 = coeff(rng);
        qp.c4 = coeff(rng);
        if (trial % 7 == 0) qp.c1 = 0;  // exercise the degenerate-axis path
        if (trial % 11 == 0) qp.c2 = 0;
        qp.k = k_dist(rng);
        qp.z3_lo = lo_dist(rng);
        qp.z3_hi = std::min(3.0, qp.z3_lo + (trial % 5 == 0 ? 0.0 : width(rng)));
        const auto sol = solve_cone_box_qp(qp);
        seen.insert(sol.resolved_case);

        const double cone =
            (sol.z1 * sol.z1 + sol.z2 * sol.z2) / sol.z3 - qp.k * qp.k * sol.z4;
        CHECK(cone <= 1e-8);
        CHECK(sol.z3 >= qp.z3_lo - 1e-12);
        CHECK(sol.z3 <= qp.z3_hi + 1e-12);
        const auto ref = oracle_cone_box(qp, OracleConfig{});
        CHECK(cone_box_objective(qp, sol.z1, sol.z2, sol.z3, sol.z4) <=
              ref.objective + 1e-6);
    }
    // The case enumeration should actually be exercised.
    CHECK(seen.count(ConeBoxCase::Unconstrained) == 1);
    CHECK(seen.size() >= 3);
}

TEST_CASE("solve_disk_qp frozen instances") {
    {
        const auto [p, q] = solve_disk_qp({2, 2, 1, -1, 10});
        CHECK(p == doctest::Approx(0).epsilon(1e-12));
        CHECK(q == doctest::Approx(0.5).epsilon(1e-12));
    }
    {
        const auto [p, q] = solve_disk_qp({2, 2, -1, -1, 10});
        CHECK(p == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(q == doctest::Approx(0.5).epsilon(1e-12));
    }
    {
        const auto [p, q] = solve_disk_qp({2, 2, -4, 0, 1});
        CHECK(p == doctest::Approx(1).epsilon(1e-10));
        CHECK(q == doctest::Approx(0).epsilon(1e-10));
    }
}

TEST_CASE("solve_disk_qp fuzz vs oracle") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> a_dist(0.3, 3.0);
    std::uniform_real_distribution<double> b_dist(-4.0, 4.0);
    std::uniform_real_distribution<double> c_dist(0.1, 2.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const DiskQP qp{a_dist(rng), a_dist(rng), b_dist(rng), b_dist(rng), c_dist(rng)};
        const auto [p, q] = solve_disk_qp(qp);
        CHECK(p >= -1e-9);
        CHECK(std::hypot(p, q) <= qp.c + 1e-9);
        const auto ref = oracle_disk(qp, OracleConfig{});
        CHECK(disk_objective(qp, p, q) <= ref.objective + 1e-6);
    }
}

TEST_CASE("solve_box_qp") {
    {
        const auto [p, q] = solve_box_qp({0, 0, 1, 0.3, -0.1, 0, 1, -1, 1});
        CHECK(p == doctest::Approx(0.3));
        CHECK(q == doctest::Approx(-0.1));
    }
    {
        const auto [p, q] = solve_box_qp({0, 1, 1, 0.3, 0, 0, 1, 0, 0});
        CHECK(p == doctest::Approx(0.0));  // clamp(-0.7, 0, 1)
        CHECK(q == doctest::Approx(0.0));
    }
    {
        const auto [p, q] = solve_box_qp({0, 0, 1, 5, 0, 0, 1, 0, 0});
        CHECK(p == doctest::Approx(1.0));
        CHECK(q == doctest::Approx(0.0));
    }
}
