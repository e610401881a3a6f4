#include "ropf/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace ropf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double cone_relaxed_objective(const ConeBoxQP& qp, double z1, double z2, double z3) {
    // z4 at its componentwise optimum given the others.
    const double k2 = qp.k * qp.k;
    const double z4 = std::max(-qp.c4 / 2, (z1 * z1 + z2 * z2) / (k2 * z3));
    return cone_box_objective(qp, z1, z2, z3, z4);
}

}  // namespace

ConeBoxOracleResult oracle_cone_box(const ConeBoxQP& qp, const OracleConfig& cfg) {
    if (!(qp.z3_lo > 0) || qp.z3_lo > qp.z3_hi) throw KernelError("oracle_cone_box: bad box");
    const double r1 = std::abs(qp.c1) / 2 + 1.0;
    const double r2 = std::abs(qp.c2) / 2 + 1.0;
    const int g = std::max(8, cfg.grid);

    double best[3] = {0.0, 0.0, qp.z3_lo};
    double best_obj = kInf;
    for (int i = 0; i <= g; ++i) {
        const double z1 = -r1 + 2 * r1 * i / g;
        for (int j = 0; j <= g; ++j) {
            const double z2 = -r2 + 2 * r2 * j / g;
            for (int t = 0; t <= g; ++t) {
                const double z3 = qp.z3_lo + (qp.z3_hi - qp.z3_lo) * t / g;
                const double obj = cone_relaxed_objective(qp, z1, z2, z3);
                if (obj < best_obj) {
                    best_obj = obj;
                    best[0] = z1;
                    best[1] = z2;
                    best[2] = z3;
                }
            }
        }
    }

    // Compass refinement with shrinking steps.
    double step = std::max({2 * r1 / g, 2 * r2 / g, (qp.z3_hi - qp.z3_lo) / g, 1e-3});
    int iters = 0;
    while (step > cfg.tol && iters < cfg.refine_iters) {
        bool improved = false;
        for (int d = 0; d < 3 && !improved; ++d) {
            for (double sgn : {1.0, -1.0}) {
                double cand[3] = {best[0], best[1], best[2]};
                cand[d] += sgn * step;
                cand[2] = std::min(qp.z3_hi, std::max(qp.z3_lo, cand[2]));
                const double obj = cone_relaxed_objective(qp, cand[0], cand[1], cand[2]);
                if (obj < best_obj) {
                    best_obj = obj;
                    best[0] = cand[0];
                    best[1] = cand[1];
                    best[2] = cand[2];
                    improved = true;
                    break;
                }
            }
        }
        if (!improved) step *= 0.5;
        ++iters;
    }

    const double k2 = qp.k * qp.k;
    const double z4 = std::max(-qp.c4 / 2, (best[0] * best[0] + best[1] * best[1]) / (k2 * best[2]));
    return {{best[0], best[1], best[2], z4}, best_obj};
}

DiskOracleResult oracle_disk(const DiskQP& qp, const OracleConfig& cfg) {
    const int g = std::max(8, cfg.grid);
    double best_p = 0, best_q = 0;
    double best_obj = kInf;
    for (int i = 0; i <= g; ++i) {
        const double theta = -M_PI / 2 + M_PI * i / g;
        for (int j = 0; j <= g; ++j) {
            const double radius = qp.c * j / g;
            const double p = radius * std::cos(theta);
            const double q = radius * std::sin(theta);
            const double obj = disk_objective(qp, p, q);
            if (obj < best_obj) {
                best_obj = obj;
                best_p = p;
                best_q = q;
            }
        }
    }

    auto project = [&](double& p, double& q) {
        p = std::max(p, 0.0);
        const double nrm = std::hypot(p, q);
        if (nrm > qp.c) {
            p *= qp.c / nrm;
            q *= qp.c / nrm;
        }
    };
    double step = std::max(qp.c / g, 1e-3);
    int iters = 0;
    while (step > cfg.tol && iters < cfg.refine_iters) {
        bool improved = false;
        const double deltas[4][2] = {{step, 0}, {-step, 0}, {0, step}, {0, -step}};
        for (const auto& d : deltas) {
            double p = best_p + d[0], q = best_q + d[1];
            project(p, q);
            const double obj = disk_objective(qp, p, q);
            if (obj < best_obj) {
                best_obj = obj;
                best_p = p;
                best_q = q;
                improved = true;
                break;
            }
        }
        if (!improved) step *= 0.5;
        ++iters;
    }
    return {best_p, best_q, best_obj};
}

double objective(const std::vector<double>& p, const RadialNetwork& net) {
    double obj = 0.0;
    for (BusId b = 0; b < net.n_buses && b < static_cast<BusId>(p.size()); ++b) {
        obj += net.spec[b].alpha / 2 * p[b] * p[b] + net.spec[b].beta * p[b];
    }
    return obj;
}

namespace {

struct FreeVar {
    BusId bus;
    int comp;  // 0 = p, 1 = q
    double lo, hi;
};

struct SweepSolver {
    const RadialNetwork& net;
    std::vector<BusId> reverse_topo;

    explicit SweepSolver(const RadialNetwork& n) : net(n) {
        std::deque<BusId> queue{0};
        while (!queue.empty()) {
            BusId b = queue.front();
            queue.pop_front();
            reverse_topo.push_back(b);
            for (BusId c : net.children[b]) queue.push_back(c);
        }
        std::reverse(reverse_topo.begin(), reverse_topo.end());
    }

    // Eliminates (S, l, v) for given non-root injections by alternating
    // leaf-to-root flow sweeps (cone tight: l = |S|^2 / v) and root-to-leaf
    // voltage sweeps. Returns the BFM point and the implied root injection.
    RopfPoint eliminate(const std::vector<std::complex<double>>& s_nonroot) const {
        const int n = net.n_buses;
        RopfPoint pt;
        pt.v.assign(n, 1.0);
        pt.v[0] = net.spec[0].v_lo;
        pt.s = s_nonroot;
        pt.S.assign(n, {0.0, 0.0});
        pt.l.assign(n, 0.0);
        for (int sweep = 0; sweep < 300; ++sweep) {
            for (BusId b : reverse_topo) {
                if (net.is_root(b)) continue;
                std::complex<double> S = pt.s[b];
                for (BusId c : net.children[b]) {
                    S += pt.S[c] - std::complex<double>(net.line[c].r, net.line[c].x) * pt.l[c];
                }
                pt.S[b] = S;
                pt.l[b] = std::norm(S) / pt.v[b];
            }
            double dv = 0.0;
            for (auto it = reverse_topo.rbegin(); it != reverse_topo.rend(); ++it) {
                const BusId b = *it;
                if (net.is_root(b)) continue;
                const LineParams& lp = net.line[b];
                const double v_new = pt.v[net.parent[b]] +
                                     2 * (lp.r * pt.S[b].real() + lp.x * pt.S[b].imag()) -
                                     pt.l[b] * lp.impedance_sq();
                dv = std::max(dv, std::abs(v_new - pt.v[b]));
                pt.v[b] = v_new;
            }
            if (dv < 1e-13) break;
        }
        std::complex<double> root_inj{0.0, 0.0};
        for (BusId c : net.children[0]) {
            root_inj -= pt.S[c] - std::complex<double>(net.line[c].r, net.line[c].x) * pt.l[c];
        }
        pt.s[0] = root_inj;
        return pt;
    }
};

bool point_feasible(const RopfPoint& pt, const RadialNetwork& net, double tol) {
    for (BusId b = 0; b < net.n_buses; ++b) {
        if (pt.v[b] < net.spec[b].v_lo - tol || pt.v[b] > net.spec[b].v_hi + tol) return false;
        if (!(pt.v[b] > 0)) return false;
    }
    const auto& region = net.spec[0].injection;
    const auto s0 = pt.s[0];
    if (const auto* box = std::get_if<BoxRegion>(&region)) {
        if (s0.real() < box->p_lo - tol || s0.real() > box->p_hi + tol) return false;
        if (s0.imag() < box->q_lo - tol || s0.imag() > box->q_hi + tol) return false;
    } else {
        const auto& disk = std::get<DiskRegion>(region);
        if (s0.real() < -tol || std::abs(s0) > disk.s_max + tol) return false;
    }
    return true;
}

}  // namespace

RopfOracleResult oracle_ropf_small(const RadialNetwork& net, const OracleConfig& cfg) {
    validate(net);
    if (net.n_buses > 6) throw KernelError("oracle_ropf_small: limited to 6 buses");
    const SweepSolver sweeper(net);

    // Free injection scalars of the non-root buses.
    std::vector<FreeVar> vars;
    std::vector<std::complex<double>> base(net.n_buses, {0.0, 0.0});
    for (BusId b = 1; b < net.n_buses; ++b) {
        const auto& region = net.spec[b].injection;
        if (const auto* box = std::get_if<BoxRegion>(&region)) {
            base[b] = {(box->p_lo + box->p_hi) / 2, (box->q_lo + box->q_hi) / 2};
            if (box->p_hi > box->p_lo) vars.push_back({b, 0, box->p_lo, box->p_hi});
            if (box->q_hi > box->q_lo) vars.push_back({b, 1, box->q_lo, box->q_hi});
        } else {
            const auto& disk = std::get<DiskRegion>(region);
            if (disk.s_max > 0) {
                vars.push_back({b, 0, 0.0, disk.s_max});
                vars.push_back({b, 1, -disk.s_max, disk.s_max});
            }
        }
    }

    auto apply = [&](const std::vector<double>& x) {
        auto s = base;
        for (std::size_t i = 0; i < vars.size(); ++i) {
            const FreeVar& fv = vars[i];
            if (fv.comp == 0) {
                s[fv.bus] = {x[i], s[fv.bus].imag()};
            } else {
                s[fv.bus] = {s[fv.bus].real(), x[i]};
            }
        }
        // Joint projection of disk pairs.
        for (BusId b = 1; b < net.n_buses; ++b) {
            if (const auto* disk = std::get_if<DiskRegion>(&net.spec[b].injection)) {
                double p = std::max(s[b].real(), 0.0);
                double q = s[b].imag();
                const double nrm = std::hypot(p, q);
                if (nrm > disk->s_max && nrm > 0) {
                    p *= disk->s_max / nrm;
                    q *= disk->s_max / nrm;
                }
                s[b] = {p, q};
            }
        }
        return s;
    };

    auto evaluate = [&](const std::vector<double>& x) -> std::pair<double, RopfPoint> {
        RopfPoint pt = sweeper.eliminate(apply(x));
        if (!point_feasible(pt, net, 1e-9)) return {kInf, std::move(pt)};
        std::vector<double> p(net.n_buses);
        for (BusId b = 0; b < net.n_buses; ++b) p[b] = pt.s[b].real();
        pt.feasible = true;
        return {objective(p, net), std::move(pt)};
    };

    const int dim = static_cast<int>(vars.size());
    std::vector<double> best(dim);
    for (int i = 0; i < dim; ++i) best[i] = (vars[i].lo + vars[i].hi) / 2;
    auto [best_obj, best_pt] = evaluate(best);

    // Coarse grid multistart (dimension is at most ~2 per free bus; the
    // oracle caps out at a handful of scalars).
    if (dim > 0 && dim <= 4) {
        const int g = std::max(4, cfg.grid / 10);
        std::vector<int> idx(dim, 0);
        while (true) {
            std::vector<double> x(dim);
            for (int i = 0; i < dim; ++i) {
                x[i] = vars[i].lo + (vars[i].hi - vars[i].lo) * idx[i] / g;
            }
            auto [obj, pt] = evaluate(x);
            if (obj < best_obj) {
                best_obj = obj;
                best = x;
                best_pt = std::move(pt);
            }
            int d = 0;
            while (d < dim && ++idx[d] > g) {
                idx[d] = 0;
                ++d;
            }
            if (d == dim) break;
        }
    }

    // Projected compass refinement with diminishing steps.
    if (dim > 0) {
        double step = 0.0;
        for (const auto& fv : vars) step = std::max(step, (fv.hi - fv.lo) / 4);
        int iters = 0;
        while (step > 1e-9 && iters < cfg.refine_iters) {
            bool improved = false;
            for (int d = 0; d < dim && !improved; ++d) {
                for (double sgn : {1.0, -1.0}) {
                    auto x = best;
                    x[d] = std::min(vars[d].hi, std::max(vars[d].lo, x[d] + sgn * step));
                    auto [obj, pt] = evaluate(x);
                    if (obj < best_obj - 1e-15) {
                        best_obj = obj;
                        best = x;
                        best_pt = std::move(pt);
                        improved = true;
                        break;
                    }
                }
            }
            if (!improved) step *= 0.5;
            ++iters;
        }
    }

    if (!std::isfinite(best_obj)) {
        throw KernelError("oracle_ropf_small: no feasible point found");
    }
    return {best_obj, std::move(best_pt)};
}

}  // namespace ropf
