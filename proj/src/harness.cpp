#include "ropf/harness.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <sstream>
#include <thread>
#include <tuple>

#include <json.hpp>

namespace ropf {

namespace {

// Runs fn(i) for i in [0, n) across `workers` threads over contiguous
// chunks. Each index writes only its own slot, so the result does not
// depend on the partition.
void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
    workers = std::max(1, std::min(workers, n));
    if (workers == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> threads;
    threads.reserve(workers);
    const int chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const int lo = w * chunk;
        const int hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        threads.emplace_back([&fn, lo, hi] {
            for (int i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : threads) t.join();
}

}  // namespace

Engine::Engine(const RadialNetwork& net, const SolveConfig& config)
    : net_(net), config_(config) {
    validate(net_);
    if (!(config_.rho > 0) || !(config_.tol_scale > 0) || config_.max_iters < 1) {
        throw ValidationError("invalid solve config");
    }
    agents_ = init_states(net_);
}

std::pair<double, double> Engine::round() {
    const int n = net_.n_buses;
    const double rho = config_.rho;
    const int workers = std::max(1, config_.parallelism);

    // Phase 1: pre-x messages, then all x-updates.
    std::vector<XPhaseInbound> x_in(n);
    for (BusId b = 0; b < n; ++b) {
        if (!net_.is_root(b)) {
            const BusId pa = net_.parent[b];
            x_in[b].from_parent = ParentToChildPreX{
                {pa, b, iter_}, agents_[pa].z.v, agents_[b].mult.gamma};
        }
        x_in[b].from_children.reserve(net_.children[b].size());
        for (BusId c : net_.children[b]) {
            x_in[b].from_children.push_back(ChildToParentPreX{
                {c, b, iter_}, agents_[c].z, agents_[c].mult.mu_S, agents_[c].mult.mu_l});
        }
    }
    std::vector<LocalX> new_x(n);
    parallel_for(n, workers,
                 [&](int b) { new_x[b] = x_update(agents_[b], net_, x_in[b], rho); });
    for (BusId b = 0; b < n; ++b) agents_[b].x = std::move(new_x[b]);

    // Phase 2: pre-z messages, then all z-updates.
    std::vector<ZPhaseInbound> z_in(n);
    for (BusId b = 0; b < n; ++b) {
        if (!net_.is_root(b)) {
            const BusId pa = net_.parent[b];
            const auto& siblings = net_.children[pa];
            const std::size_t t =
                std::lower_bound(siblings.begin(), siblings.end(), b) - siblings.begin();
            z_in[b].from_parent =
                ParentToChildPreZ{{pa, b, iter_}, agents_[pa].x.child_copies[t],
                                  agents_[b].mult.mu_S, agents_[b].mult.mu_l};
        }
        z_in[b].from_children.reserve(net_.children[b].size());
        for (BusId c : net_.children[b]) {
            z_in[b].from_children.push_back(ChildToParentPreZ{
                {c, b, iter_}, agents_[c].x.v_parent, agents_[c].mult.gamma});
        }
    }
    std::vector<LocalZ> new_z(n);
    parallel_for(n, workers,
                 [&](int b) { new_z[b] = z_update(agents_[b], net_, z_in[b], rho); });
    for (BusId b = 0; b < n; ++b) {
        agents_[b].z_prev = agents_[b].z;
        agents_[b].z = new_z[b];
    }

    // Phase 3: multiplier updates and residual aggregation.
    std::vector<MultiplierInbound> m_in(n);
    for (BusId b = 1; b < n; ++b) {
        m_in[b].parent_v_z = agents_[net_.parent[b]].z.v;
        m_in[b].parent_copy_of_self = z_in[b].from_parent->copy;
    }
    std::vector<Multipliers> new_mult(n);
    parallel_for(n, workers,
                 [&](int b) { new_mult[b] = multiplier_update(agents_[b], net_, m_in[b], rho); });
    for (BusId b = 0; b < n; ++b) agents_[b].mult = new_mult[b];

    double r_sq = 0.0, s_sq = 0.0;
    for (BusId b = 0; b < n; ++b) {
        auto [rb, sb] = local_residual_contrib(agents_[b], net_, m_in[b]);
        r_sq += rb;
        s_sq += sb;
    }
    ++iter_;
    return {std::sqrt(r_sq), rho * std::sqrt(s_sq)};
}

double Engine::objective() const {
    double obj = 0.0;
    for (const auto& st : agents_) {
        const BusSpec& sp = net_.spec[st.bus];
        const double p = st.z.s.real();
        obj += sp.alpha / 2 * p * p + sp.beta * p;
    }
    return obj;
}

Solution Engine::extract_solution() const {
    Solution sol;
    const int n = net_.n_buses;
    sol.v.resize(n);
    sol.s.resize(n);
    sol.S.assign(n, {0.0, 0.0});
    sol.l.assign(n, 0.0);
    for (BusId b = 0; b < n; ++b) {
        sol.v[b] = agents_[b].z.v;
        sol.s[b] = agents_[b].z.s;
        if (!net_.is_root(b)) {
            sol.S[b] = agents_[b].z.S;
            sol.l[b] = agents_[b].z.l;
        }
    }
    sol.iterations = iter_;
    return sol;
}

std::pair<Solution, Trace> run(const RadialNetwork& net, const SolveConfig& config) {
    Engine engine(net, config);
    Trace trace;
    const double tol = config.tol_scale * std::sqrt(static_cast<double>(net.n_buses));
    double r = 0, s = 0;
    trace.status = SolveStatus::MaxIters;
    for (int k = 0; k < config.max_iters; ++k) {
        std::tie(r, s) = engine.round();
        trace.rows.push_back({engine.iter(), r, s, engine.objective()});
        if (r <= tol && s <= tol) {
            trace.status = SolveStatus::Converged;
            break;
        }
    }
    Solution sol = engine.extract_solution();
    sol.r = r;
    sol.s_res = s;
    sol.status = trace.status;
    return {std::move(sol), std::move(trace)};
}

std::vector<double> exactness_gap(const Solution& sol, const RadialNetwork& net) {
    std::vector<double> gap(net.n_buses, 0.0);
    for (BusId b = 1; b < net.n_buses; ++b) {
        gap[b] = sol.v[b] * sol.l[b] - std::norm(sol.S[b]);
    }
    return gap;
}

double flow_residual(const Solution& sol, const RadialNetwork& net) {
    double worst = 0.0;
    for (BusId b = 1; b < net.n_buses; ++b) {
        const LineParams& lp = net.line[b];
        const double drop = sol.v[net.parent[b]] - sol.v[b] +
                            2.0 * (lp.r * sol.S[b].real() + lp.x * sol.S[b].imag()) -
                            sol.l[b] * lp.impedance_sq();
        worst = std::max(worst, std::abs(drop));
    }
    for (BusId b = 0; b < net.n_buses; ++b) {
        Complex balance = sol.s[b];
        for (BusId c : net.children[b]) {
            balance += sol.S[c] - Complex(net.line[c].r, net.line[c].x) * sol.l[c];
        }
        if (!net.is_root(b)) balance -= sol.S[b];
        worst = std::max(worst, std::abs(balance));
    }
    return worst;
}

double solution_objective(const Solution& sol, const RadialNetwork& net) {
    double obj = 0.0;
    for (BusId b = 0; b < net.n_buses; ++b) {
        const double p = sol.s[b].real();
        obj += net.spec[b].alpha / 2 * p * p + net.spec[b].beta * p;
    }
    return obj;
}

void write_trace_csv(std::ostream& os, const Trace& trace) {
    os << "iter,r,s,objective\n";
    os.precision(17);
    for (const auto& row : trace.rows) {
        os << row.iter << ',' << row.r << ',' << row.s << ',' << row.objective << '\n';
    }
}

std::string trace_csv(const Trace& trace) {
    std::ostringstream os;
    write_trace_csv(os, trace);
    return os.str();
}

std::string solution_document(const Solution& sol, const RadialNetwork& net) {
    nlohmann::ordered_json doc;
    doc["status"] = sol.status == SolveStatus::Converged ? "converged" : "max_iters";
    doc["iterations"] = sol.iterations;
    doc["primal_residual"] = sol.r;
    doc["dual_residual"] = sol.s_res;
    doc["objective"] = solution_objective(sol, net);
    doc["buses"] = nlohmann::ordered_json::array();
    for (BusId b = 0; b < net.n_buses; ++b) {
        doc["buses"].push_back({{"id", b},
                                {"v", sol.v[b]},
                                {"p", sol.s[b].real()},
                                {"q", sol.s[b].imag()}});
    }
    doc["lines"] = nlohmann::ordered_json::array();
    for (BusId b = 1; b < net.n_buses; ++b) {
        doc["lines"].push_back({{"from", b},
                                {"to", net.parent[b]},
                                {"P", sol.S[b].real()},
                                {"Q", sol.S[b].imag()},
                                {"l", sol.l[b]}});
    }
    return doc.dump(2) + "\n";
}

}  // namespace ropf
