#pragma once

// Centre-and-weight bookkeeping for a Stern-Gerlach pulse: the spin is
// decomposed along the pulse axis and each branch receives an equal and
// opposite momentum kick. Natural units (hbar = M = 1).

#include <stdexcept>

#include "protoclone/doublewell_spectra.hpp"
#include "protoclone/spin_algebra.hpp"

namespace protoclone {

struct FieldPulse {
    double Bi = -1.0;    // field gradient along the axis (signed)
    double tau = 1.0;    // duration
    UnitVec3 axis{0.0, 0.0, 1.0};
    double gamma = -1.0;  // gyromagnetic ratio, negative for the electron
    double B0 = 0.0;      // optional static field along the axis (precession only)

    // Throws std::invalid_argument unless tau >= 0 and gamma < 0.
    void validate() const;
};

struct PacketPrep {
    double dp = 0.0;  // momentum spread
    double dz = 0.0;  // position spread
    double p0 = 0.0;
    double z0 = 0.0;

    // Minimum-uncertainty packet with the given momentum spread.
    static PacketPrep minimum(double dp);

    // Throws std::invalid_argument unless dz dp >= 1/2 and the packet is centred.
    void validate() const;
};

struct SplitState {
    BlochAngles lab_spin;     // spin before the pulse, kept for exact recombination
    BlochAngles frame_spin;   // (theta_ma, phi_ma) relative to the pulse axis
    bool phi_identifiable = false;
    double w_plus = 1.0;      // cos^2(theta_ma / 2)
    double w_minus = 0.0;     // sin^2(theta_ma / 2)
    double p_plus = 0.0;      // momentum centre of the +axis branch
    double p_minus = 0.0;     // = -p_plus
    bool entangled = false;
    double precession_angle = 0.0;  // -gamma B0 tau, folded into frame_spin.phi
    bool momentum_measured = false;  // set only by an explicit collapse
    FieldPulse pulse;
};

// Raised when recombining a state whose branch momentum was read out.
class CollapsedStateError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

struct Recombination {
    BlochAngles spin;
    double p_plus = 0.0;
    double p_minus = 0.0;
    PacketPrep prep;        // dp unchanged
    bool dz_grown = false;  // the packet has spread while the branches were apart
};

// |gamma Bi tau / 2|
double kick_magnitude(const FieldPulse& pulse);

// Signed Bi * tau (Bi < 0 convention) whose kick carries kinetic energy E of the level.
double match_pulse_to_level(const WellGeometry& geom, const Level& level, double gamma);

SplitState split(const BlochAngles& spin, const FieldPulse& pulse);

// Marks the state as collapsed by a momentum readout (makes recombine throw).
void record_momentum_measurement(SplitState& state);

Recombination recombine(const SplitState& state, const PacketPrep& prep = {});

// Worst-case kinetic energy spread (dp^2 + 2 |kick| dp) / 2.
double energy_uncertainty(const PacketPrep& prep, double kick);

}  // namespace protoclone
