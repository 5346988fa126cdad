#pragma once

// Turns protective probe readouts along three axes (z, n, l) into an
// estimate of the unknown spin direction and prepares the clone.

#include <array>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "protoclone/doublewell_spectra.hpp"
#include "protoclone/protective_probe.hpp"
#include "protoclone/spin_algebra.hpp"

namespace protoclone {

inline constexpr double kPlanTolerance = 1e-9;
inline constexpr double kClampSlack = 1e-9;
inline constexpr double kThetaPoleTolerance = 1e-6;

struct AxisPlan {
    BlochAngles n_axis{std::numbers::pi / 3.0, std::numbers::pi / 5.0};
    BlochAngles l_axis{2.0 * std::numbers::pi / 5.0, 4.0 * std::numbers::pi / 5.0};

    // Rejects theta_n = 0, phi_n = 0, theta_l in {0, theta_n}, phi_l in {0, phi_n}.
    // Also rejects phi_l = phi_n + pi, where the two spurious candidates coincide.
    void validate() const;
};

// Measurements along the two axes admit no common azimuth.
class InconsistentMeasurements : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct InvertedCos {
    double value = 0.0;
    bool clamped = false;
};

// C = lambda T A^2 I, so that p_final = -C cos(theta) for the protected level.
double calibration_constant(const WellGeometry& geom, const Level& level, const ProbeConfig& probe);

// clamp(-p / C, -1, 1), recording whether the clamp was active.
InvertedCos invert_cos(double p_measured, double C);

// One protective readout along `axis`: split, probe, invert. Gaussian noise of
// width noise_sigma is added to the probe momentum when rng is given.
double measure_axis(const BlochAngles& hidden, const BlochAngles& axis, const WellGeometry& geom, const Level& level,
                    const ProbeConfig& probe, double noise_sigma = 0.0, std::mt19937_64* rng = nullptr,
                    std::vector<std::string>* warnings = nullptr);

struct PhiOptions {
    double tolerance = 1e-6;      // max circular distance between matched candidates
    bool nearest_fallback = false;  // accept the nearest pair when no candidates match
};

struct PhiSolution {
    double phi_hat = 0.0;
    std::array<double, 2> candidates_n{};
    std::array<double, 2> candidates_l{};
    std::array<double, 2> residuals{};  // constraint residuals along n and l
    double mismatch = 0.0;               // distance between the matched candidates
    bool clamped = false;
    bool fallback_used = false;
};

PhiSolution solve_phi(double cos_theta_m, double meas_n, double meas_l, const AxisPlan& plan,
                      const PhiOptions& options = {});

struct Estimate {
    double theta_hat = 0.0;
    double phi_hat = 0.0;
    std::array<double, 2> phi_candidates_n{};
    std::array<double, 2> phi_candidates_l{};
    std::array<double, 2> residuals{};
    std::array<double, 3> measurements{};  // cos along z, n, l
    bool pole_flag = false;
    bool clamped = false;
    bool fallback_used = false;
    SpinKet prepared_clone;
    std::vector<std::string> warnings;
};

struct CloneOptions {
    bool nearest_fallback = false;
};

Estimate clone_state(const BlochAngles& hidden, const AxisPlan& plan, const WellGeometry& geom, const Level& level,
                     const ProbeConfig& probe, double noise_sigma = 0.0, std::mt19937_64* rng = nullptr,
                     const CloneOptions& options = {});

// Great-circle distance between two Bloch directions.
double angular_error(const BlochAngles& a, const BlochAngles& b);

struct MonteCarloSummary {
    int trials = 0;
    int failures = 0;        // inconsistent or pole trials
    double rms_error = 0.0;  // over successful trials
    double max_error = 0.0;
};

// Clones `trials` random hidden states (theta in [0.1, pi - 0.1]) at the given
// noise level. Hidden states and noise come from one generator seeded with `seed`.
MonteCarloSummary clone_monte_carlo(const AxisPlan& plan, const WellGeometry& geom, const Level& level,
                                    const ProbeConfig& probe, double noise_sigma, int trials, std::uint64_t seed);

}  // namespace protoclone
