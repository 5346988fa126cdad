#include "protoclone/stern_gerlach.hpp"

#include <cmath>

namespace protoclone {

void FieldPulse::validate() const {
    if (!(tau >= 0.0) || !std::isfinite(tau)) throw std::invalid_argument("FieldPulse: tau must be >= 0");
    if (!(gamma < 0.0)) throw std::invalid_argument("FieldPulse: gamma must be negative");
    if (!std::isfinite(Bi) || !std::isfinite(B0)) throw std::invalid_argument("FieldPulse: non-finite field");
    const double n2 = axis.dot(axis);
    if (std::abs(n2 - 1.0) > 1e-12) throw std::invalid_argument("FieldPulse: axis is not a unit vector");
}

PacketPrep PacketPrep::minimum(double dp) {
    if (!(dp > 0.0)) throw std::invalid_argument("PacketPrep: dp must be positive");
    return {dp, 0.5 / dp, 0.0, 0.0};
}

void PacketPrep::validate() const {
    if (!(dp >= 0.0) || !(dz >= 0.0)) throw std::invalid_argument("PacketPrep: spreads must be non-negative");
    if (dz * dp < 0.5 - 1e-12) throw std::invalid_argument("PacketPrep: violates dz dp >= 1/2");
    if (p0 != 0.0 || z0 != 0.0) throw std::invalid_argument("PacketPrep: packet must start centred at rest");
}

double kick_magnitude(const FieldPulse& pulse) { return std::abs(pulse.gamma * pulse.Bi * pulse.tau * 0.5); }

double match_pulse_to_level(const WellGeometry& geom, const Level& level, double gamma) {
    geom.validate();
    if (!(gamma < 0.0)) throw std::invalid_argument("match_pulse_to_level: gamma must be negative");
    if (!(level.E > 0.0)) throw std::invalid_argument("match_pulse_to_level: level energy must be positive");
    // (gamma Bi tau / 2)^2 / 2 = E
    return -2.0 * std::sqrt(2.0 * level.E) / std::abs(gamma);
}

SplitState split(const BlochAngles& spin, const FieldPulse& pulse) {
    pulse.validate();
    SplitState s;
    s.pulse = pulse;
    s.lab_spin = spin;
    const AxisFrame frame = AxisFrame::along(axis_to_angles(pulse.axis));
    const FrameDecomposition dec = decompose_in_axis(spin, frame);
    // Larmor precession about the pulse axis only shifts the relative phase
    s.precession_angle = -pulse.gamma * pulse.B0 * pulse.tau;
    s.frame_spin = BlochAngles(dec.theta, dec.phi + s.precession_angle);
    s.phi_identifiable = !s.frame_spin.pole();
    const double c = std::cos(0.5 * dec.theta);
    s.w_plus = c * c;
    s.w_minus = 1.0 - s.w_plus;
    // force on the +axis branch is gamma Bi / 2, so Bi < 0 pushes it up
    s.p_plus = pulse.gamma * pulse.Bi * pulse.tau * 0.5;
    s.p_minus = -s.p_plus;
    s.entangled = !s.frame_spin.pole();
    return s;
}

void record_momentum_measurement(SplitState& state) { state.momentum_measured = true; }

Recombination recombine(const SplitState& state, const PacketPrep& prep) {
    if (state.momentum_measured) {
        throw CollapsedStateError("recombine: branch momentum was measured; the superposition is gone");
    }
    Recombination r;
    r.spin = state.lab_spin;
    r.prep = prep;
    r.dz_grown = state.pulse.tau > 0.0;
    return r;
}

double energy_uncertainty(const PacketPrep& prep, double kick) {
    return 0.5 * (prep.dp * prep.dp + 2.0 * std::abs(kick) * prep.dp);
}

}  // namespace protoclone
