#include "ropf/agent.hpp"

#include <cmath>
#include <deque>

#include "ropf/kernels.hpp"

namespace ropf {

namespace {

Complex feasible_injection(const InjectionRegion& region) {
    if (const auto* box = std::get_if<BoxRegion>(&region)) {
        return {(box->p_lo + box->p_hi) / 2, (box->q_lo + box->q_hi) / 2};
    }
    return {0.0, 0.0};  // disk center
}

std::vector<BusId> topo_order(const RadialNetwork& net) {
    std::vector<BusId> order;
    order.reserve(net.n_buses);
    std::deque<BusId> queue{0};
    while (!queue.empty()) {
        BusId b = queue.front();
        queue.pop_front();
        order.push_back(b);
        for (BusId c : net.children[b]) queue.push_back(c);
    }
    return order;
}

}  // namespace

std::vector<AgentState> init_states(const RadialNetwork& net) {
    const int n = net.n_buses;
    std::vector<AgentState> states(n);
    for (BusId b = 0; b < n; ++b) {
        AgentState& st = states[b];
        st.bus = b;
        st.z.v = net.is_root(b) ? net.spec[b].v_lo : 1.0;
        st.z.s = feasible_injection(net.spec[b].injection);
    }
    // Branch flows assuming lossless lines, accumulated leaf-to-root.
    const auto order = topo_order(net);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const BusId b = *it;
        if (net.is_root(b)) continue;
        Complex S = states[b].z.s;
        for (BusId c : net.children[b]) S += states[c].z.S;
        states[b].z.S = S;
        states[b].z.l = std::norm(S) / states[b].z.v;
    }
    for (BusId b = 0; b < n; ++b) {
        AgentState& st = states[b];
        st.x.v = st.z.v;
        st.x.l = st.z.l;
        st.x.S = st.z.S;
        st.x.s = st.z.s;
        st.x.v_parent = net.is_root(b) ? 0.0 : states[net.parent[b]].z.v;
        st.x.child_copies.resize(net.children[b].size());
        for (std::size_t t = 0; t < net.children[b].size(); ++t) {
            const BusId c = net.children[b][t];
            st.x.child_copies[t] = {states[c].z.l, states[c].z.S};
        }
        st.z_prev = st.z;
    }
    return states;
}

AgentState init_state(const RadialNetwork& net, BusId bus) {
    return init_states(net)[bus];
}

HatTargets compute_hats(const AgentState& state, const RadialNetwork& net,
                        const ZPhaseInbound& inbound, double rho) {
    const BusId b = state.bus;
    const std::size_t n_children = net.children[b].size();
    if (inbound.from_children.size() != n_children) {
        throw KernelError("compute_hats: missing child message");
    }
    HatTargets hats;
    const double m = static_cast<double>(n_children) + 1.0;

    double v_sum = state.x.v;
    double gamma_sum = 0.0;
    for (const auto& msg : inbound.from_children) {
        v_sum += msg.v_parent_copy;
        gamma_sum += msg.gamma;
    }
    hats.v_hat = (v_sum + (state.mult.lam_v + gamma_sum) / rho) / m;
    hats.s_hat = state.x.s + state.mult.lam_s / rho;

    if (!net.is_root(b)) {
        if (!inbound.from_parent) throw KernelError("compute_hats: missing parent message");
        const ChildCopy& pc = inbound.from_parent->copy;
        hats.S_hat = (state.x.S + pc.S) / 2.0 + (state.mult.lam_S + state.mult.mu_S) / (2.0 * rho);
        hats.l_hat = (state.x.l + pc.l) / 2.0 + (state.mult.lam_l + state.mult.mu_l) / (2.0 * rho);
    }
    return hats;
}

LocalX x_update(const AgentState& state, const RadialNetwork& net, const XPhaseInbound& inbound,
                double rho) {
    const BusId b = state.bus;
    const auto& kids = net.children[b];
    const int m = static_cast<int>(kids.size());
    if (static_cast<int>(inbound.from_children.size()) != m) {
        throw KernelError("x_update: missing child message");
    }
    const bool root = net.is_root(b);
    if (!root && !inbound.from_parent) throw KernelError("x_update: missing parent message");

    // Variable layout. Non-root: (v, l, P, Q, p, q, v_parent, {l_j, P_j, Q_j}).
    // Root: v fixed and S == 0 are eliminated, leaving (p, q, {l_j, P_j, Q_j}).
    const int own = root ? 2 : 7;
    const int dim = own + 3 * m;
    const int n_rows = root ? 2 : 3;

    EqQP qp;
    qp.a_diag = Eigen::VectorXd::Constant(dim, rho);
    qp.c = Eigen::VectorXd::Zero(dim);
    qp.B = Eigen::MatrixXd::Zero(n_rows, dim);

    const Multipliers& mult = state.mult;
    const LocalZ& z = state.z;
    int ip, iq;
    if (root) {
        ip = 0;
        iq = 1;
    } else {
        const int iv = 0, il = 1, iP = 2, iQ = 3, ivp = 6;
        ip = 4;
        iq = 5;
        qp.c(iv) = mult.lam_v - rho * z.v;
        qp.c(il) = mult.lam_l - rho * z.l;
        qp.c(iP) = mult.lam_S.real() - rho * z.S.real();
        qp.c(iQ) = mult.lam_S.imag() - rho * z.S.imag();
        qp.c(ivp) = mult.gamma - rho * inbound.from_parent->v_z;

        // Voltage drop along the own line.
        const LineParams& lp = net.line[b];
        qp.B(0, ivp) = 1.0;
        qp.B(0, iv) = -1.0;
        qp.B(0, iP) = 2.0 * lp.r;
        qp.B(0, iQ) = 2.0 * lp.x;
        qp.B(0, il) = -lp.impedance_sq();
        // Power balance, real and reactive rows.
        qp.B(1, iP) = -1.0;
        qp.B(2, iQ) = -1.0;
    }
    qp.c(ip) = mult.lam_s.real() - rho * z.s.real();
    qp.c(iq) = mult.lam_s.imag() - rho * z.s.imag();
    const int rowP = root ? 0 : 1;
    const int rowQ = root ? 1 : 2;
    qp.B(rowP, ip) = 1.0;
    qp.B(rowQ, iq) = 1.0;

    for (int t = 0; t < m; ++t) {
        const BusId j = kids[t];
        const ChildToParentPreX& msg = inbound.from_children[t];
        const int il_t = own + 3 * t;
        const int iP_t = il_t + 1;
        const int iQ_t = il_t + 2;
        qp.c(il_t) = msg.mu_l - rho * msg.z.l;
        qp.c(iP_t) = msg.mu_S.real() - rho * msg.z.S.real();
        qp.c(iQ_t) = msg.mu_S.imag() - rho * msg.z.S.imag();
        qp.B(rowP, iP_t) = 1.0;
        qp.B(rowP, il_t) = -net.line[j].r;
        qp.B(rowQ, iQ_t) = 1.0;
        qp.B(rowQ, il_t) = -net.line[j].x;
    }

    const Eigen::VectorXd sol = solve_eq_qp(qp);

    LocalX out;
    if (root) {
        out.v = net.spec[0].v_lo;
        out.l = 0.0;
        out.S = {0.0, 0.0};
        out.v_parent = 0.0;
    } else {
        out.v = sol(0);
        out.l = sol(1);
        out.S = {sol(2), sol(3)};
        out.v_parent = sol(6);
    }
    out.s = {sol(ip), sol(iq)};
    out.child_copies.resize(m);
    for (int t = 0; t < m; ++t) {
        const int il_t = own + 3 * t;
        out.child_copies[t] = {sol(il_t), {sol(il_t + 1), sol(il_t + 2)}};
    }
    return out;
}

LocalZ z_update(const AgentState& state, const RadialNetwork& net, const ZPhaseInbound& inbound,
                double rho) {
    const BusId b = state.bus;
    const HatTargets hats = compute_hats(state, net, inbound, rho);
    const BusSpec& sp = net.spec[b];
    const double m = static_cast<double>(net.children[b].size()) + 1.0;
    const double kappa = std::sqrt(m / 2.0);

    LocalZ out;
    // (v, l, S): scaled cone-box subproblem with z3 = kappa*v so that
    // z1^2 + z2^2 <= k^2 z3 z4 with k^2 = 1/kappa is exactly |S|^2 <= v*l.
    ConeBoxQP cone;
    cone.k = std::sqrt(1.0 / kappa);
    cone.z3_lo = kappa * sp.v_lo;
    cone.z3_hi = kappa * sp.v_hi;
    cone.c3 = -2.0 * kappa * hats.v_hat;
    if (!net.is_root(b)) {
        cone.c1 = -2.0 * hats.S_hat.real();
        cone.c2 = -2.0 * hats.S_hat.imag();
        cone.c4 = -2.0 * hats.l_hat;
    }
    const ConeBoxSolution cz = solve_cone_box_qp(cone);
    out.v = cz.z3 / kappa;
    if (net.is_root(b)) {
        out.l = 0.0;
        out.S = {0.0, 0.0};
    } else {
        out.l = cz.z4;
        out.S = {cz.z1, cz.z2};
    }

    // Injection subproblem.
    if (const auto* box = std::get_if<BoxRegion>(&sp.injection)) {
        BoxQP bq;
        bq.alpha = sp.alpha;
        bq.beta = sp.beta;
        bq.rho = rho;
        bq.p_hat = hats.s_hat.real();
        bq.q_hat = hats.s_hat.imag();
        bq.p_lo = box->p_lo;
        bq.p_hi = box->p_hi;
        bq.q_lo = box->q_lo;
        bq.q_hi = box->q_hi;
        auto [p, q] = solve_box_qp(bq);
        out.s = {p, q};
    } else {
        const auto& disk = std::get<DiskRegion>(sp.injection);
        if (disk.s_max <= 0) {
            out.s = {0.0, 0.0};
        } else {
            DiskQP dq;
            dq.a1 = sp.alpha + rho;
            dq.a2 = rho;
            dq.b1 = sp.beta - rho * hats.s_hat.real();
            dq.b2 = -rho * hats.s_hat.imag();
            dq.c = disk.s_max;
            auto [p, q] = solve_disk_qp(dq);
            out.s = {p, q};
        }
    }
    return out;
}

Multipliers multiplier_update(const AgentState& state, const RadialNetwork& net,
                              const MultiplierInbound& inbound, double rho) {
    Multipliers mult = state.mult;
    mult.lam_S += rho * (state.x.S - state.z.S);
    mult.lam_l += rho * (state.x.l - state.z.l);
    mult.lam_v += rho * (state.x.v - state.z.v);
    mult.lam_s += rho * (state.x.s - state.z.s);
    if (!net.is_root(state.bus)) {
        if (!inbound.parent_v_z || !inbound.parent_copy_of_self) {
            throw KernelError("multiplier_update: missing parent values");
        }
        const ChildCopy& pc = *inbound.parent_copy_of_self;
        mult.mu_S += rho * (pc.S - state.z.S);
        mult.mu_l += rho * (pc.l - state.z.l);
        mult.gamma += rho * (state.x.v_parent - *inbound.parent_v_z);
    }
    return mult;
}

std::pair<double, double> local_residual_contrib(const AgentState& state, const RadialNetwork& net,
                                                 const MultiplierInbound& inbound) {
    const bool root = net.is_root(state.bus);
    double r_sq = 0.0;
    // lambda pairs.
    r_sq += std::norm(state.x.s - state.z.s);
    r_sq += (state.x.v - state.z.v) * (state.x.v - state.z.v);
    if (!root) {
        r_sq += std::norm(state.x.S - state.z.S);
        r_sq += (state.x.l - state.z.l) * (state.x.l - state.z.l);
        // mu and gamma pairs of this bus's parent edge.
        if (!inbound.parent_v_z || !inbound.parent_copy_of_self) {
            throw KernelError("local_residual_contrib: missing parent values");
        }
        const ChildCopy& pc = *inbound.parent_copy_of_self;
        r_sq += std::norm(pc.S - state.z.S);
        r_sq += (pc.l - state.z.l) * (pc.l - state.z.l);
        const double gv = state.x.v_parent - *inbound.parent_v_z;
        r_sq += gv * gv;
    }

    double s_sq = std::norm(state.z.s - state.z_prev.s);
    s_sq += (state.z.v - state.z_prev.v) * (state.z.v - state.z_prev.v);
    if (!root) {
        s_sq += std::norm(state.z.S - state.z_prev.S);
        s_sq += (state.z.l - state.z_prev.l) * (state.z.l - state.z_prev.l);
    }
    return {r_sq, s_sq};
}

}  // namespace ropf
