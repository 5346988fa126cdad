#pragma once

// Brute-force check of the analytic pipeline: direct propagation of the
// time-dependent Schroedinger equation for each spin component on a uniform
// grid (Crank-Nicolson, second order in dz and dt, unitary by construction).

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "protoclone/doublewell_spectra.hpp"
#include "protoclone/protective_probe.hpp"
#include "protoclone/spin_algebra.hpp"
#include "protoclone/stern_gerlach.hpp"

namespace protoclone {

// Potential height standing in for a hard wall inside the box.
inline constexpr double kWallPotential = 1e6;

class StabilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// npts interior nodes between Dirichlet walls at zmin and zmax.
struct Grid1D {
    double zmin = -1.0;
    double zmax = 1.0;
    int npts = 1024;
    double dt = 1e-3;

    [[nodiscard]] double spacing() const { return (zmax - zmin) / (npts + 1); }
    [[nodiscard]] double z(int j) const { return zmin + (j + 1) * spacing(); }

    // npts must be a power of two >= 1024, dt > 0, zmin < zmax.
    void validate() const;

    // Grid spanning the hard-wall box [-(b + a/2), b + a/2].
    static Grid1D box(const WellGeometry& geom, int npts, double dt);
};

struct SpinorField {
    Grid1D grid;
    std::vector<cplx> up;
    std::vector<cplx> down;

    [[nodiscard]] double norm_sq() const;
    [[nodiscard]] double component_norm_sq(bool spin_up) const;
};

// Spin-diagonal potential at time t, written into per-node arrays.
struct Potential {
    std::function<void(double t, std::vector<double>& v_up, std::vector<double>& v_down)> fill;
    bool time_dependent = false;
};

using StepObserver = std::function<void(double t, const SpinorField&)>;

struct PropagationStats {
    int steps = 0;
    double norm_drift = 0.0;     // |norm(t_end) - norm(0)|
    double cross_transfer = 0.0;  // norm moved between spin components
};

// Evolves `field` in place for `duration`. Throws StabilityError when
// dt (max|V| off the walls + <T>) >= 0.5: the phase per step must stay small
// for the Cayley form to track the exact propagator.
PropagationStats propagate(SpinorField& field, const Potential& potential, double duration,
                           const StepObserver& observer = {});

// <u|v> and <u|p|v> on the grid (trapezoid, central-difference momentum).
cplx grid_overlap(const std::vector<cplx>& u, const std::vector<cplx>& v, double h);
double grid_momentum(const std::vector<cplx>& psi, double h);
double grid_position(const std::vector<cplx>& psi, const Grid1D& grid);

// Fraction of the cell around each node covered by |z| <= half_width, times height.
std::vector<double> cell_averaged_barrier(const Grid1D& grid, double half_width, double height);

// Real, parity-even eigenfunction of H_S built from level.k on the grid and
// normalized there (the spin-conditioned form mixes in the antisymmetric level).
std::vector<cplx> symmetric_eigenfunction(const Grid1D& grid, const WellGeometry& geom, const Level& level);

struct StationarityResult {
    double min_fidelity = 1.0;
    double final_fidelity = 1.0;
    double phase_rate = 0.0;       // -d arg<phi|psi>/dt
    double energy = 0.0;           // analytic E of the level
    double norm_drift = 0.0;
    int steps = 0;
};

StationarityResult stationarity_check(const Level& level, const WellGeometry& geom, double duration,
                                      const Grid1D& grid, const BlochAngles& spin = {});

struct SplitEvolutionResult {
    double p_up = 0.0;   // <p> of the spin-up component
    double p_down = 0.0;
    double w_up = 0.0;   // component weights
    double w_down = 0.0;
    double cross_transfer = 0.0;
    double norm_drift = 0.0;
};

// Free-space Gaussian packet, spin (theta, phi), under -gamma Bi z S_z for tau.
SplitEvolutionResult split_evolution(const BlochAngles& spin, const FieldPulse& pulse, const PacketPrep& prep,
                                     const Grid1D& grid);

// Barrier height as a piecewise-linear function of time.
struct RampSchedule {
    WellGeometry geometry;  // final potential
    double duration = 1.0;
    std::vector<double> knot_times;      // increasing, from 0 to duration
    std::vector<double> knot_fractions;  // fraction of V0 at each knot

    [[nodiscard]] double barrier_at(double t) const;
    void validate() const;

    // Smoothstep ramp 0 -> V0 sampled on `knots` linear pieces.
    static RampSchedule smooth(const WellGeometry& geom, double duration, int knots = 64);
};

struct TrapResult {
    double duration = 0.0;
    double fidelity = 0.0;  // |<target|psi(end)>|^2
    int steps = 0;
};

// Starts in the free-box ground state and ramps the barrier up.
TrapResult adiabatic_trap(const RampSchedule& schedule, const Level& target, const Grid1D& grid);

struct ProtectedResult {
    double survival = 1.0;
    double mean_interaction = 0.0;  // time average of <1/sqrt((z - za)^2 + s^2)>
    double norm_drift = 0.0;
};

ProtectedResult protected_interaction(const Level& level, const WellGeometry& geom, const ProbeConfig& probe,
                                      double za, double softening, const Grid1D& grid);

struct PhaseGradientResult {
    double f_prime = 0.0;  // numeric d f / d za at 0
    double kick = 0.0;     // -lambda T f'(0)
    double softening = 0.0;
    double step = 0.0;
};

// f(za) = <phi_s1| 1/sqrt((z - za)^2 + s^2) |phi_s1> by Simpson quadrature on a
// segmented well grid, differentiated by a central difference over za = +-step.
PhaseGradientResult probe_phase_gradient(const Level& level, const WellGeometry& geom, const BlochAngles& spin,
                                         const ProbeConfig& probe, double softening, double step,
                                         int quad_points = WellGrid::kDefaultPoints);

// ---------------------------------------------------------------------------
// full suite

struct OracleSettings {
    WellGeometry oracle_geometry{1.0, 0.6, 50.0};  // gap large enough to propagate over 100 / gap
    WellGeometry demo_geometry{1.0, 1.0, 1250.0};  // where the analytic kick is compared
    ProbeConfig demo_probe;
    BlochAngles spin{1.0, 0.5};
    int npts = 1024;
    double dt = 5e-3;
    int quad_points = WellGrid::kDefaultPoints;
    double softening_rel = 1e-3;  // s / (b - a/2)
    double adiabatic_target = 100.0;  // t * gap for stationarity and trap
    double weakness_target = 1e-3;
    bool convergence = true;
};

struct OracleRow {
    std::string name;
    double measured = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::string detail;
};

std::vector<OracleRow> run_oracle_suite(const OracleSettings& settings);

}  // namespace protoclone
