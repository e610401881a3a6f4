#include "ropf/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ropf {

double clamp(double x, double lo, double hi) {
    if (lo > hi) throw KernelError("clamp: lo > hi");
    return std::min(hi, std::max(x, lo));
}

namespace {

double poly_eval(std::span<const double> coeffs, double x) {
    double v = 0.0;
    for (std::size_t k = coeffs.size(); k-- > 0;) v = v * x + coeffs[k];
    return v;
}

double poly_eval_deriv(std::span<const double> coeffs, double x) {
    double v = 0.0;
    for (std::size_t k = coeffs.size(); k-- > 1;) v = v * x + static_cast<double>(k) * coeffs[k];
    return v;
}

double newton_polish(std::span<const double> coeffs, double x) {
    for (int it = 0; it < 30; ++it) {
        const double f = poly_eval(coeffs, x);
        const double df = poly_eval_deriv(coeffs, x);
        if (df == 0.0) break;
        const double step = f / df;
        x -= step;
        if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(x))) break;
    }
    return x;
}

}  // namespace

std::vector<double> real_roots(std::span<const double> coeffs) {
    double max_mag = 0.0;
    for (double c : coeffs) max_mag = std::max(max_mag, std::abs(c));
    if (max_mag == 0.0) throw KernelError("real_roots: zero polynomial");

    // Strip negligible leading coefficients.
    std::vector<double> c(coeffs.begin(), coeffs.end());
    while (c.size() > 1 && std::abs(c.back()) <= 1e-14 * max_mag) c.pop_back();
    const int deg = static_cast<int>(c.size()) - 1;
    if (deg > 4) throw KernelError("real_roots: degree exceeds 4");

    std::vector<double> roots;
    if (deg == 0) {
        // Nonzero constant: no roots.
    } else if (deg == 1) {
        roots.push_back(-c[0] / c[1]);
    } else if (deg == 2) {
        const double a = c[2], b = c[1], c0 = c[0];
        const double disc = b * b - 4 * a * c0;
        const double disc_tol = 1e-12 * std::max(b * b, std::abs(4 * a * c0));
        if (disc > disc_tol) {
            // Numerically stable pair via the sign trick.
            const double sq = std::sqrt(disc);
            const double q = -0.5 * (b + (b >= 0 ? sq : -sq));
            roots.push_back(q / a);
            if (q != 0.0) roots.push_back(c0 / q);
            else roots.push_back(0.0);
        } else if (disc >= -disc_tol) {
            roots.push_back(-b / (2 * a));
        }
    } else {
        // Companion matrix of the monic polynomial.
        Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(deg, deg);
        for (int i = 0; i < deg; ++i) comp(i, deg - 1) = -c[i] / c[deg];
        for (int i = 1; i < deg; ++i) comp(i, i - 1) = 1.0;
        Eigen::EigenSolver<Eigen::MatrixXd> es(comp, /*computeEigenvectors=*/false);
        for (int i = 0; i < deg; ++i) {
            const std::complex<double> ev = es.eigenvalues()(i);
            if (std::abs(ev.imag()) > 1e-6 * std::max(1.0, std::abs(ev))) continue;
            const double r = newton_polish(c, ev.real());
            // Residual gate relative to the coefficient scale at the root.
            double scale = max_mag;
            double xp = 1.0;
            for (std::size_t k = 0; k < c.size(); ++k) {
                scale = std::max(scale, std::abs(c[k]) * std::abs(xp));
                xp *= r;
            }
            if (std::abs(poly_eval(c, r)) <= 1e-9 * scale) roots.push_back(r);
        }
    }

    std::sort(roots.begin(), roots.end());
    std::vector<double> unique_roots;
    for (double r : roots) {
        if (unique_roots.empty() ||
            std::abs(r - unique_roots.back()) > 1e-6 * std::max(1.0, std::abs(r))) {
            unique_roots.push_back(r);
        }
    }
    return unique_roots;
}

Eigen::VectorXd solve_eq_qp(const EqQP& qp) {
    const auto n = qp.a_diag.size();
    if (qp.c.size() != n || qp.B.cols() != n) throw KernelError("solve_eq_qp: dimension mismatch");
    if ((qp.a_diag.array() <= 0).any()) throw KernelError("solve_eq_qp: diagonal must be positive");

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(qp.B.transpose());
    qr.setThreshold(1e-10);
    if (qr.rank() < qp.B.rows()) throw KernelError("solve_eq_qp: B is not full row rank");

    const Eigen::VectorXd ainv = qp.a_diag.cwiseInverse();
    const Eigen::VectorXd ainv_c = ainv.asDiagonal() * qp.c;
    const Eigen::MatrixXd M = qp.B * ainv.asDiagonal() * qp.B.transpose();
    const Eigen::VectorXd nu = M.ldlt().solve(qp.B * ainv_c);
    return ainv.asDiagonal() * (qp.B.transpose() * nu) - ainv_c;
}

double cone_box_objective(const ConeBoxQP& qp, double z1, double z2, double z3, double z4) {
    return z1 * z1 + qp.c1 * z1 + z2 * z2 + qp.c2 * z2 + z3 * z3 + qp.c3 * z3 +
           z4 * z4 + qp.c4 * z4;
}

namespace {

struct ConeBoxCandidate {
    ConeBoxSolution sol;
    double objective;
};

bool better(const ConeBoxCandidate& a, const ConeBoxCandidate& b) {
    if (a.objective != b.objective) return a.objective < b.objective;
    const auto ta = std::tie(a.sol.z1, a.sol.z2, a.sol.z3, a.sol.z4);
    const auto tb = std::tie(b.sol.z1, b.sol.z2, b.sol.z3, b.sol.z4);
    return ta < tb;
}

void check_cone_box_input(const ConeBoxQP& qp) {
    if (!(qp.k > 0)) throw KernelError("solve_cone_box_qp: k must be positive");
    if (!(qp.z3_lo > 0) || !(qp.z3_lo <= qp.z3_hi)) {
        throw KernelError("solve_cone_box_qp: box must satisfy 0 < z3_lo <= z3_hi");
    }
}

std::string cone_box_repr(const ConeBoxQP& qp) {
    std::ostringstream os;
    os << "ConeBoxQP{c=(" << qp.c1 << "," << qp.c2 << "," << qp.c3 << "," << qp.c4
       << "), k=" << qp.k << ", z3 in [" << qp.z3_lo << "," << qp.z3_hi << "]}";
    return os.str();
}

}  // namespace

ConeBoxSolution solve_cone_box_qp(const ConeBoxQP& qp) {
    check_cone_box_input(qp);
    const double k2 = qp.k * qp.k;
    const double k4 = k2 * k2;
    const double scale = std::max({1.0, std::abs(qp.c1), std::abs(qp.c2), std::abs(qp.c3),
                                   std::abs(qp.c4), qp.z3_hi});
    const double mult_tol = 1e-9 * scale;

    // Case 1: cone multiplier zero, componentwise minimizer with z3 clamped.
    {
        const double z1 = -qp.c1 / 2, z2 = -qp.c2 / 2, z4 = -qp.c4 / 2;
        const double z3 = clamp(-qp.c3 / 2, qp.z3_lo, qp.z3_hi);
        if (z1 * z1 + z2 * z2 <= k2 * z3 * z4 + 1e-12 * scale * scale) {
            return {z1, z2, z3, z4, ConeBoxCase::Unconstrained};
        }
    }

    const double C = qp.c1 * qp.c1 + qp.c2 * qp.c2;
    const bool fixed_box = (qp.z3_lo == qp.z3_hi);

    if (C <= 1e-28 * scale * scale) {
        // c1 = c2 = 0 with the cone violated in Case 1 forces S = 0, l = 0
        // and the cone multiplier mu = c4 / k^2 > 0.
        const double z3 = clamp(-qp.c3 / 2, qp.z3_lo, qp.z3_hi);
        return {0.0, 0.0, z3, 0.0, ConeBoxCase::DegenerateAxis};
    }

    // Case 2: the cone is active. z4 and mu follow from the root p of the
    // bound-pinned cubic or the interior quartic.
    auto case2_candidates_at_bound = [&](double bound, bool upper) {
        std::vector<ConeBoxCandidate> out;
        const std::array<double, 4> cubic{1.0 / bound, 2.0 + 2.0 * qp.c4 / (k2 * bound), 0.0,
                                          4.0 * C / k4};
        for (double p : real_roots(cubic)) {
            const double z3 = bound;
            const double z1 = qp.c1 * p * z3;
            const double z2 = qp.c2 * p * z3;
            const double z4 = C * p * p * z3 / k2;
            const double mu = (2 * z4 + qp.c4) / k2;
            if (mu < -mult_tol) continue;
            if (!fixed_box) {
                // Bound multiplier sign from the z3 stationarity row.
                const double lam = upper ? mu * C * p * p - 2 * z3 - qp.c3
                                         : 2 * z3 + qp.c3 - mu * C * p * p;
                if (lam < -mult_tol) continue;
            }
            ConeBoxSolution s{z1, z2, z3, z4,
                              fixed_box   ? ConeBoxCase::BoundUpper
                              : upper     ? ConeBoxCase::BoundUpper
                                          : ConeBoxCase::BoundLower};
            out.push_back({s, cone_box_objective(qp, z1, z2, z3, z4)});
        }
        return out;
    };

    auto pick = [&](std::vector<ConeBoxCandidate>& cands) -> ConeBoxSolution {
        ConeBoxCandidate best = cands.front();
        for (const auto& c : cands) {
            if (better(c, best)) best = c;
        }
        return best.sol;
    };

    auto upper_cands = case2_candidates_at_bound(qp.z3_hi, /*upper=*/true);
    if (!upper_cands.empty()) return pick(upper_cands);
    if (!fixed_box) {
        auto lower_cands = case2_candidates_at_bound(qp.z3_lo, /*upper=*/false);
        if (!lower_cands.empty()) return pick(lower_cands);

        // Interior case: quartic in p, z3 recovered from the stationarity ratio.
        const std::array<double, 5> quartic{-1.0, qp.c3 - 2 * qp.c4 / k2, 0.0,
                                            (C / k2) * (2 * qp.c3 / k2 - qp.c4), C * C / k4};
        std::vector<ConeBoxCandidate> cands;
        for (double p : real_roots(quartic)) {
            const double denom = 2 * (C * p * p + 2);
            const double z3 = -(C * p + 2 * qp.c3) / denom;
            const double box_tol = 1e-9 * std::max(1.0, qp.z3_hi);
            if (!(z3 > 0) || z3 < qp.z3_lo - box_tol || z3 > qp.z3_hi + box_tol) continue;
            const double z1 = qp.c1 * p * z3;
            const double z2 = qp.c2 * p * z3;
            const double z4 = C * p * p * z3 / k2;
            const double mu = (2 * z4 + qp.c4) / k2;
            if (mu < -mult_tol) continue;
            // Guard against spurious roots: the stationarity rows must hold.
            const double r1 = 2 * z1 + qp.c1 + 2 * mu * z1 / z3;
            const double r3 = 2 * z3 + qp.c3 - mu * C * p * p;
            if (std::abs(r1) > 1e-6 * scale || std::abs(r3) > 1e-6 * scale) continue;
            ConeBoxSolution s{z1, z2, clamp(z3, qp.z3_lo, qp.z3_hi), z4, ConeBoxCase::Interior};
            cands.push_back({s, cone_box_objective(qp, z1, z2, z3, z4)});
        }
        if (!cands.empty()) return pick(cands);
    }
    throw KernelError("solve_cone_box_qp: no KKT-consistent candidate for " + cone_box_repr(qp));
}

double disk_objective(const DiskQP& qp, double p, double q) {
    return qp.a1 / 2 * p * p + qp.b1 * p + qp.a2 / 2 * q * q + qp.b2 * q;
}

std::pair<double, double> solve_disk_qp(const DiskQP& qp) {
    if (!(qp.a1 > 0) || !(qp.a2 > 0) || !(qp.c > 0)) {
        throw KernelError("solve_disk_qp: requires a1, a2, c > 0");
    }
    // Case 1: no incentive for positive p.
    if (qp.b1 >= 0) {
        return {0.0, clamp(-qp.b2 / qp.a2, -qp.c, qp.c)};
    }
    // Case 2: unconstrained minimizer inside the disk.
    const double p0 = -qp.b1 / qp.a1;
    const double q0 = -qp.b2 / qp.a2;
    if (p0 * p0 + q0 * q0 <= qp.c * qp.c) {
        return {p0, q0};
    }
    // Case 3: boundary; quartic in the disk multiplier lambda.
    const double u = qp.a1, v = qp.a2;
    const double b1s = qp.b1 * qp.b1, b2s = qp.b2 * qp.b2;
    const double c2 = qp.c * qp.c;
    // b1^2 (v+2L)^2 + b2^2 (u+2L)^2 = c^2 (u+2L)^2 (v+2L)^2, ascending in L.
    const std::array<double, 5> quartic{
        b1s * v * v + b2s * u * u - c2 * u * u * v * v,
        4 * b1s * v + 4 * b2s * u - c2 * 4 * u * v * (u + v),
        4 * b1s + 4 * b2s - c2 * (4 * u * u + 4 * v * v + 16 * u * v),
        -c2 * 16 * (u + v),
        -c2 * 16,
    };
    const double scale = std::max({1.0, std::abs(qp.b1), std::abs(qp.b2), qp.c});
    double best_p = 0, best_q = 0, best_obj = std::numeric_limits<double>::infinity();
    bool found = false;
    for (double lam : real_roots(quartic)) {
        if (lam <= 1e-12 * scale) continue;
        const double p = -qp.b1 / (u + 2 * lam);
        const double q = -qp.b2 / (v + 2 * lam);
        if (p < -1e-9 * scale) continue;
        if (std::abs(p * p + q * q - c2) > 1e-7 * std::max(1.0, c2)) continue;
        const double obj = disk_objective(qp, p, q);
        if (!found || obj < best_obj) {
            best_p = p;
            best_q = q;
            best_obj = obj;
            found = true;
        }
    }
    if (!found) throw KernelError("solve_disk_qp: no positive multiplier root found");
    return {std::max(best_p, 0.0), best_q};
}

std::pair<double, double> solve_box_qp(const BoxQP& qp) {
    if (!(qp.alpha + qp.rho > 0)) throw KernelError("solve_box_qp: alpha + rho must be positive");
    const double p = clamp((qp.rho * qp.p_hat - qp.beta) / (qp.alpha + qp.rho), qp.p_lo, qp.p_hi);
    const double q = clamp(qp.q_hat, qp.q_lo, qp.q_hi);
    return {p, q};
}

}  // namespace ropf
