#ifndef ROPF_ORACLE_HPP_
#define ROPF_ORACLE_HPP_

#include <array>
#include <complex>
#include <utility>
#include <vector>

#include "ropf/kernels.hpp"
#include "ropf/network.hpp"

namespace ropf {

// Slow, independent reference solvers. They deliberately share no code with
// the closed-form kernels so that agreement is evidence, not tautology.

struct OracleConfig {
    int grid{50};             // grid resolution per axis
    int refine_iters{20000};  // cap on refinement steps
    double tol{1e-9};         // refinement step floor
};

struct ConeBoxOracleResult {
    std::array<double, 4> z{};
    double objective{0};
};

/// Grid over (z1, z2, z3) with z4 at its componentwise optimum, then
/// compass search with shrinking steps.
ConeBoxOracleResult oracle_cone_box(const ConeBoxQP& qp, const OracleConfig& cfg);

struct DiskOracleResult {
    double p{0}, q{0};
    double objective{0};
};

/// Polar grid over the half-disk plus projected compass refinement.
DiskOracleResult oracle_disk(const DiskQP& qp, const OracleConfig& cfg);

struct RopfPoint {
    std::vector<double> v;                  // per bus
    std::vector<std::complex<double>> s;    // per bus
    std::vector<std::complex<double>> S;    // per line (index = child bus)
    std::vector<double> l;
    bool feasible{false};
};

struct RopfOracleResult {
    double objective{0};
    RopfPoint point;
};

/// Centralized reference for networks of <= 6 buses: free injections are
/// optimized by grid plus projected refinement; for each candidate the
/// remaining variables are eliminated by leaf-to-root / root-to-leaf sweeps
/// with the cone held tight.
RopfOracleResult oracle_ropf_small(const RadialNetwork& net, const OracleConfig& cfg);

/// Exact evaluation of sum_i alpha_i/2 p_i^2 + beta_i p_i.
double objective(const std::vector<double>& p, const RadialNetwork& net);

}  // namespace ropf

#endif  // ROPF_ORACLE_HPP_
