#ifndef ROPF_KERNELS_HPP_
#define ROPF_KERNELS_HPP_

#include <Eigen/Dense>
#include <array>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace ropf {

struct KernelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Clips x into [lo, hi]. Throws if lo > hi.
double clamp(double x, double lo, double hi);

/// All real roots of a polynomial of degree <= 4 given by ascending
/// coefficients (coeffs[k] multiplies x^k). Leading coefficients below
/// 1e-14 of the max magnitude are stripped first. Repeated roots are
/// reported once; output is sorted ascending. Degrees 1-2 are solved in
/// closed form, 3-4 via the companion-matrix eigenproblem with Newton
/// polishing.
std::vector<double> real_roots(std::span<const double> coeffs);

/// min 1/2 x^T diag(a) x + c^T x  s.t.  B x = 0,
/// with a > 0 componentwise and B full row rank.
struct EqQP {
    Eigen::VectorXd a_diag;
    Eigen::MatrixXd B;
    Eigen::VectorXd c;
};

Eigen::VectorXd solve_eq_qp(const EqQP& qp);

/// min sum_i (z_i^2 + c_i z_i)  s.t.  (z1^2+z2^2)/z3 <= k^2 z4,
///                                    z3_lo <= z3 <= z3_hi,
/// with k > 0 and 0 < z3_lo <= z3_hi.
struct ConeBoxQP {
    double c1{0}, c2{0}, c3{0}, c4{0};
    double k{1.0};
    double z3_lo{1.0};
    double z3_hi{1.0};
};

/// Which branch of the KKT enumeration produced the solution.
enum class ConeBoxCase {
    Unconstrained = 1,   // cone multiplier zero
    BoundUpper = 2,      // cone active, z3 pinned at upper bound
    BoundLower = 3,      // cone active, z3 pinned at lower bound
    Interior = 4,        // cone active, z3 strictly inside the box
    DegenerateAxis = 5,  // c1 = c2 = 0 with the cone active
};

struct ConeBoxSolution {
    double z1{0}, z2{0}, z3{0}, z4{0};
    ConeBoxCase resolved_case{ConeBoxCase::Unconstrained};
};

double cone_box_objective(const ConeBoxQP& qp, double z1, double z2, double z3, double z4);

ConeBoxSolution solve_cone_box_qp(const ConeBoxQP& qp);

/// min a1/2 p^2 + b1 p + a2/2 q^2 + b2 q  s.t.  p^2 + q^2 <= c^2, p >= 0,
/// with a1, a2, c > 0.
struct DiskQP {
    double a1{1}, a2{1};
    double b1{0}, b2{0};
    double c{1};
};

double disk_objective(const DiskQP& qp, double p, double q);

std::pair<double, double> solve_disk_qp(const DiskQP& qp);

/// min alpha/2 p^2 + beta p + rho/2 ((p - p_hat)^2 + (q - q_hat)^2)
/// over the box [p_lo, p_hi] x [q_lo, q_hi].
struct BoxQP {
    double alpha{0}, beta{0};
    double rho{1};
    double p_hat{0}, q_hat{0};
    double p_lo{0}, p_hi{0}, q_lo{0}, q_hi{0};
};

std::pair<double, double> solve_box_qp(const BoxQP& qp);

}  // namespace ropf

#endif  // ROPF_KERNELS_HPP_
