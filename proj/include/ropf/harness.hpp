#ifndef ROPF_HARNESS_HPP_
#define ROPF_HARNESS_HPP_

#include <iosfwd>
#include <string>
#include <vector>

#include "ropf/agent.hpp"
#include "ropf/network.hpp"

namespace ropf {

struct SolveConfig {
    double rho{1.0};
    double tol_scale{1e-4};  // stop when r, s <= tol_scale * sqrt(N)
    int max_iters{100000};
    int parallelism{1};
};

enum class SolveStatus { Converged, MaxIters };

struct TraceRow {
    int iter{0};
    double r{0};
    double s{0};
    double objective{0};
};

struct Trace {
    std::vector<TraceRow> rows;
    SolveStatus status{SolveStatus::MaxIters};
};

/// Final z-variables plus convergence metadata.
struct Solution {
    std::vector<double> v;        // per bus
    std::vector<Complex> s;       // per bus
    std::vector<Complex> S;       // per line (index = child bus; S[0] unused)
    std::vector<double> l;        // per line
    int iterations{0};
    double r{0};
    double s_res{0};
    SolveStatus status{SolveStatus::MaxIters};
};

/// Synchronous round scheduler owning all agent states.
class Engine {
  public:
    Engine(const RadialNetwork& net, const SolveConfig& config);

    /// One full iteration: pre-x barrier, x-phase, pre-z barrier, z-phase,
    /// multiplier phase, residual aggregation. Returns (r, s). Results are
    /// bit-identical regardless of worker count.
    std::pair<double, double> round();

    double objective() const;  // sum of f_i(p_i^(z))

    const RadialNetwork& net() const { return net_; }
    const std::vector<AgentState>& agents() const { return agents_; }
    int iter() const { return iter_; }
    const SolveConfig& config() const { return config_; }

    Solution extract_solution() const;

  private:
    RadialNetwork net_;
    SolveConfig config_;
    std::vector<AgentState> agents_;
    int iter_{0};
};

std::pair<Solution, Trace> run(const RadialNetwork& net, const SolveConfig& config);

/// Per-line relaxation gap v_i * l_i - |S_i|^2 on the final z-variables
/// (index 0 unused).
std::vector<double> exactness_gap(const Solution& sol, const RadialNetwork& net);

/// Max violation of the voltage-drop and power-balance equations on the
/// final z-variables.
double flow_residual(const Solution& sol, const RadialNetwork& net);

double solution_objective(const Solution& sol, const RadialNetwork& net);

void write_trace_csv(std::ostream& os, const Trace& trace);
std::string trace_csv(const Trace& trace);
std::string solution_document(const Solution& sol, const RadialNetwork& net);

}  // namespace ropf

#endif  // ROPF_HARNESS_HPP_
