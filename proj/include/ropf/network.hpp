#ifndef ROPF_NETWORK_HPP_
#define ROPF_NETWORK_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace ropf {

using BusId = int;

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Per-line series impedance in per-unit. Line i runs from bus i to its parent.
struct LineParams {
    double r{0.0};
    double x{0.0};
    double impedance_sq() const { return r * r + x * x; }
};

/// Rectangular injection region: p in [p_lo, p_hi], q in [q_lo, q_hi].
struct BoxRegion {
    double p_lo{0.0};
    double p_hi{0.0};
    double q_lo{0.0};
    double q_hi{0.0};
};

/// Inverter-style injection region: p >= 0, p^2 + q^2 <= s_max^2.
struct DiskRegion {
    double s_max{0.0};
};

using InjectionRegion = std::variant<BoxRegion, DiskRegion>;

struct BusSpec {
    InjectionRegion injection{BoxRegion{}};
    double v_lo{0.95 * 0.95};  // squared voltage magnitude bounds
    double v_hi{1.05 * 1.05};
    double alpha{0.0};  // cost f(p) = alpha/2 p^2 + beta p
    double beta{0.0};
};

/// Immutable radial network rooted at bus 0. Children lists are sorted
/// ascending so all reductions over them are deterministic.
struct RadialNetwork {
    int n_buses{0};
    std::vector<BusId> parent;                 // parent[0] == -1
    std::vector<std::vector<BusId>> children;  // ascending BusId
    std::vector<LineParams> line;              // line[i] valid for i >= 1
    std::vector<BusSpec> spec;

    bool is_root(BusId b) const { return b == 0; }
};

/// Collects one diagnostic per violated invariant (empty means valid).
std::vector<std::string> validation_errors(const RadialNetwork& net);

/// Throws ValidationError listing every violated invariant.
void validate(const RadialNetwork& net);

RadialNetwork load_network(const std::string& bytes);
std::string save_network(const RadialNetwork& net);

RadialNetwork load_network_file(const std::string& path);
void save_network_file(const RadialNetwork& net, const std::string& path);

/// Parameters for the synthetic-network generators. All draws are
/// deterministic in `seed`. Loads and impedances are scaled down with the
/// network size so that generated instances stay voltage-feasible.
struct LoadProfile {
    std::uint64_t seed{1};
    double pv_fraction{0.3};   // fraction of non-root buses with a Disk region
    double base_r{0.01};       // per-unit line resistance before jitter/scale
    double base_x{0.01};
    double load_p_max{0.05};   // max real consumption magnitude per bus
    double load_q_max{0.02};
    double pv_s_max{0.03};     // inverter nameplate
    double alpha{0.0};         // cost coefficients (defaults: loss minimization)
    double beta{1.0};
};

/// Path graph 0-1-...-(n-1); diameter n-1.
RadialNetwork gen_line(int n, const LoadProfile& profile);

/// Star: every bus 1..n-1 hangs off the root; diameter 2 for n >= 3.
RadialNetwork gen_fat_tree(int n, const LoadProfile& profile);

/// Uniform random recursive tree: parent of bus i drawn from 0..i-1.
RadialNetwork gen_random_tree(int n, const LoadProfile& profile);

/// Longest hop-count between any two buses (two BFS passes).
int diameter(const RadialNetwork& net);

}  // namespace ropf

#endif  // ROPF_NETWORK_HPP_
