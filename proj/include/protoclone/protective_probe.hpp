#pragma once

// Protective measurement of a trapped electron by a probe charge fixed at
// z_a = 0 between the wells. The probe gains momentum -lambda T f'(0), where
// f(z_a) is the expectation of 1/|z - z_a| in the protected eigenstate.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "protoclone/doublewell_spectra.hpp"
#include "protoclone/spin_algebra.hpp"
#include "protoclone/stern_gerlach.hpp"

namespace protoclone {

struct ProbeConfig {
    double coupling = 1e-3;     // lambda, the natural-unit Coulomb strength
    double T = 1.0;             // interaction time
    double epsilon_reg = 1e-3;  // excision half-width around the probe in the barrier integral
    double za0 = 0.0;           // probe centre, fixed at the midpoint
    double adiabatic_threshold = 100.0;  // warn below this T * gap
    double weakness_threshold = 1e-2;    // warn above this lambda / (d * gap)

    void validate() const;
};

struct KickResult {
    double kick_integral = 0.0;  // I
    double h_prime0 = 0.0;
    double g_prime0 = 0.0;
    double p_final = 0.0;
    double adiabatic_ratio = 0.0;
    double weakness_ratio = 0.0;
    std::vector<std::string> warnings;
};

// I = int_{b-a/2}^{b+a/2} sin^2(k (b + a/2 - z)) / z^2 dz
double kick_integral(const WellGeometry& geom, const Level& level);

// Well part of f: A^2 [w_up int sin^2/(z - za) + w_down int sin^2/(z + za)].
double h_of_za(const WellGeometry& geom, const Level& level, const BlochAngles& spin, double za);

// Barrier part of f with the points closer than epsilon_reg to the probe excised.
double g_of_za(const WellGeometry& geom, const Level& level, double za, double epsilon_reg);

// h + g; throws std::domain_error once |za| reaches d - epsilon_reg.
double f_of_za(const WellGeometry& geom, const Level& level, const BlochAngles& spin, double za,
               const ProbeConfig& probe);

// +-cos(theta) A^2 I: the symmetric level carries cos^2 in the upper well,
// the antisymmetric one sin^2, which flips the sign.
double h_prime_zero(const WellGeometry& geom, const Level& level, double theta_m);

// Central difference of g at 0 (step 1e-5 (b - a/2)).
double g_prime_zero(const WellGeometry& geom, const Level& level, const ProbeConfig& probe);

double adiabaticity_ratio(double T, double gap);
double weakness_ratio(const WellGeometry& geom, const ProbeConfig& probe, double gap);

// Full kick for the ground level s1; the gap is computed from the geometry.
KickResult probe_momentum(const BlochAngles& spin, const WellGeometry& geom, const Level& level,
                          const ProbeConfig& probe);

// Protective readout of one branch pair: uses the spin relative to the pulse
// axis. The state is taken by const reference: nothing is collapsed.
KickResult probe_momentum(const SplitState& state, const WellGeometry& geom, const Level& level,
                          const ProbeConfig& probe);

enum class Candidate { Zero, Plus };

const char* to_string(Candidate c);

// Discrimination of |0> from |+> by a protective readout of a superposition
// sum_i c_i phi_i of trapped levels. Integrals are computed once.
class Discriminator {
public:
    Discriminator(const WellGeometry& geom, std::vector<Level> levels, std::vector<cplx> weights,
                  const ProbeConfig& probe);

    // Noiseless weight-averaged probe momentum for the given spin.
    [[nodiscard]] double response(const BlochAngles& spin) const;
    // Response of |0>; the decision threshold sits at half of it.
    [[nodiscard]] double zero_response() const { return zero_response_; }
    [[nodiscard]] Candidate classify(double p_measured) const;

    Candidate operator()(const BlochAngles& spin, double noise_sigma, std::mt19937_64& rng) const;

private:
    double slope_ = 0.0;  // d p / d cos(theta)
    double zero_response_ = 0.0;
};

Candidate discriminate(const BlochAngles& spin, const WellGeometry& geom, const std::vector<Level>& levels,
                       const std::vector<cplx>& weights, const ProbeConfig& probe, double noise_sigma,
                       std::mt19937_64& rng);

}  // namespace protoclone
