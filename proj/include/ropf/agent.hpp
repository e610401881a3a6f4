#ifndef ROPF_AGENT_HPP_
#define ROPF_AGENT_HPP_

#include <complex>
#include <optional>
#include <variant>
#include <vector>

#include "ropf/network.hpp"

namespace ropf {

using Complex = std::complex<double>;

/// A parent's working copy of one child's line variables.
struct ChildCopy {
    double l{0.0};
    Complex S{0.0, 0.0};
};

/// x-side variables of one agent. The root keeps v fixed and S == 0; its
/// v_parent slot is unused.
struct LocalX {
    double v{1.0};
    double l{0.0};
    Complex S{0.0, 0.0};
    Complex s{0.0, 0.0};
    double v_parent{1.0};
    std::vector<ChildCopy> child_copies;  // canonical child order
};

/// z-side variables of one agent.
struct LocalZ {
    double v{1.0};
    double l{0.0};
    Complex S{0.0, 0.0};
    Complex s{0.0, 0.0};
};

struct Multipliers {
    Complex lam_S{0.0, 0.0};
    double lam_l{0.0};
    double lam_v{0.0};
    Complex lam_s{0.0, 0.0};
    // Parent-edge pairs; meaningless at the root.
    Complex mu_S{0.0, 0.0};
    double mu_l{0.0};
    double gamma{0.0};
};

struct AgentState {
    BusId bus{0};
    LocalX x;
    LocalZ z;
    LocalZ z_prev;
    Multipliers mult;
};

/// Proximal centers of the completed-square z-update objective.
struct HatTargets {
    Complex S_hat{0.0, 0.0};
    double l_hat{0.0};
    double v_hat{0.0};
    Complex s_hat{0.0, 0.0};
};

// Typed neighbor payloads. Every message carries sender, receiver and the
// iteration it belongs to; the harness delivers them at the phase barriers.
struct MessageHeader {
    BusId sender{0};
    BusId receiver{0};
    int iter{0};
};

struct ParentToChildPreX {
    MessageHeader hdr;
    double v_z{1.0};
    double gamma{0.0};  // echo of the child's own multiplier
};

struct ChildToParentPreX {
    MessageHeader hdr;
    LocalZ z;
    Complex mu_S{0.0, 0.0};
    double mu_l{0.0};
};

struct ParentToChildPreZ {
    MessageHeader hdr;
    ChildCopy copy;
    Complex mu_S{0.0, 0.0};  // echo of the child's own multiplier
    double mu_l{0.0};
};

struct ChildToParentPreZ {
    MessageHeader hdr;
    double v_parent_copy{1.0};
    double gamma{0.0};
};

using Message =
    std::variant<ParentToChildPreX, ChildToParentPreX, ParentToChildPreZ, ChildToParentPreZ>;

/// Everything one agent receives before its x-update.
struct XPhaseInbound {
    std::optional<ParentToChildPreX> from_parent;    // absent at root
    std::vector<ChildToParentPreX> from_children;    // canonical child order
};

/// Everything one agent receives before its z-update.
struct ZPhaseInbound {
    std::optional<ParentToChildPreZ> from_parent;
    std::vector<ChildToParentPreZ> from_children;
};

/// Neighbor-side values needed by the multiplier update and the residual
/// aggregation: both reflect the state after the z-phase of the iteration.
struct MultiplierInbound {
    std::optional<double> parent_v_z;
    std::optional<ChildCopy> parent_copy_of_self;
};

/// Initial states for all buses: flat voltage profile, feasible injections,
/// branch flows accumulated leaf-to-root ignoring line impedance, x-copies
/// equal to z and zero multipliers.
std::vector<AgentState> init_states(const RadialNetwork& net);

AgentState init_state(const RadialNetwork& net, BusId bus);

HatTargets compute_hats(const AgentState& state, const RadialNetwork& net,
                        const ZPhaseInbound& inbound, double rho);

LocalX x_update(const AgentState& state, const RadialNetwork& net, const XPhaseInbound& inbound,
                double rho);

LocalZ z_update(const AgentState& state, const RadialNetwork& net, const ZPhaseInbound& inbound,
                double rho);

Multipliers multiplier_update(const AgentState& state, const RadialNetwork& net,
                              const MultiplierInbound& inbound, double rho);

/// (r_sq, s_sq): squared consensus gaps over the pairs owned by this bus and
/// the squared z displacement of its block. Each network-wide pair is counted
/// exactly once.
std::pair<double, double> local_residual_contrib(const AgentState& state, const RadialNetwork& net,
                                                 const MultiplierInbound& inbound);

}  // namespace ropf

#endif  // ROPF_AGENT_HPP_
