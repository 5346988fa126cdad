#include "protoclone/protective_probe.hpp"

#include <cmath>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace protoclone {

namespace {

using boost::math::quadrature::gauss_kronrod;

constexpr double kQuadTol = 1e-13;
constexpr unsigned kMaxDepth = 20;

// J(s) = int_d^{d+a} sin^2(k (w - z)) / (z + s)^p dz
double well_integral(const WellGeometry& geom, double k, double s, int power) {
    const double w = geom.outer_wall();
    const double d = geom.barrier_half_width();
    const auto f = [&](double z) {
        const double u = std::sin(k * (w - z));
        const double r = z + s;
        return power == 1 ? u * u / r : u * u / (r * r);
    };
    return gauss_kronrod<double, 61>::integrate(f, d, w, kMaxDepth, kQuadTol);
}

// Squared barrier profile over its join value: cosh^2(qx)/cosh^2(qd) or the sinh analogue.
double barrier_profile_sq(Parity parity, double q, double d, double x) {
    const double ax = std::abs(x);
    const double decay = std::exp(q * (ax - d));
    double r;
    if (parity == Parity::Symmetric) {
        r = decay * (1.0 + std::exp(-2.0 * q * ax)) / (1.0 + std::exp(-2.0 * q * d));
    } else {
        r = decay * std::expm1(-2.0 * q * ax) / std::expm1(-2.0 * q * d);
    }
    return r * r;
}

// int_eps^L profile^2(c + u) / u du, integrated in log u so the 1/u end is smooth
double barrier_piece(Parity parity, double q, double d, double c, double eps, double L) {
    if (!(L > eps)) return 0.0;
    const auto f = [&](double s) { return barrier_profile_sq(parity, q, d, c + std::exp(s)); };
    return gauss_kronrod<double, 61>::integrate(f, std::log(eps), std::log(L), kMaxDepth, kQuadTol);
}

// Which fraction of the level sits in the upper (spin-up) well
double upper_weight(const Level& level, const BlochAngles& spin) {
    const double c = std::cos(0.5 * spin.theta());
    const double s = std::sin(0.5 * spin.theta());
    return level.parity == Parity::Symmetric ? c * c : s * s;
}

void require_ground_level(const Level& level) {
    if (level.parity != Parity::Symmetric || level.n != 1) {
        throw std::invalid_argument("probe_momentum: the protected state must be the ground level s1");
    }
}

}  // namespace

void ProbeConfig::validate() const {
    if (!(coupling > 0.0) || !std::isfinite(coupling)) throw std::invalid_argument("ProbeConfig: coupling must be > 0");
    if (!(T > 0.0) || !std::isfinite(T)) throw std::invalid_argument("ProbeConfig: T must be > 0");
    if (!(epsilon_reg > 0.0)) throw std::invalid_argument("ProbeConfig: epsilon_reg must be > 0");
    if (za0 != 0.0) throw std::invalid_argument("ProbeConfig: the probe sits at za0 = 0");
}

double kick_integral(const WellGeometry& geom, const Level& level) {
    geom.validate();
    return well_integral(geom, level.k, 0.0, 2);
}

double h_of_za(const WellGeometry& geom, const Level& level, const BlochAngles& spin, double za) {
    geom.validate();
    const double up = upper_weight(level, spin);
    // upper well: |z - za| = z - za; mirrored lower well: |z - za| = z' + za
    const double j_up = well_integral(geom, level.k, -za, 1);
    const double j_dn = well_integral(geom, level.k, za, 1);
    return level.A * level.A * (up * j_up + (1.0 - up) * j_dn);
}

double g_of_za(const WellGeometry& geom, const Level& level, double za, double epsilon_reg) {
    geom.validate();
    if (geom.infinite_barrier()) return 0.0;
    const double d = geom.barrier_half_width();
    if (!(epsilon_reg > 0.0)) throw std::invalid_argument("g_of_za: epsilon_reg must be > 0");
    if (!(std::abs(za) < d - epsilon_reg)) {
        std::ostringstream msg;
        msg << "g_of_za: |za| = " << std::abs(za) << " reaches the barrier cutoff " << d - epsilon_reg;
        throw std::domain_error(msg.str());
    }
    const double join = level.A * std::sin(level.k * geom.a);
    // u measured away from the probe on both sides; the two pieces swap under
    // za -> -za, so g is even by construction
    const double right = barrier_piece(level.parity, level.q, d, za, epsilon_reg, d - za);
    const double left = barrier_piece(level.parity, level.q, d, -za, epsilon_reg, d + za);
    return join * join * (right + left);
}

double f_of_za(const WellGeometry& geom, const Level& level, const BlochAngles& spin, double za,
               const ProbeConfig& probe) {
    return h_of_za(geom, level, spin, za) + g_of_za(geom, level, za, probe.epsilon_reg);
}

double h_prime_zero(const WellGeometry& geom, const Level& level, double theta_m) {
    const double sign = level.parity == Parity::Symmetric ? 1.0 : -1.0;
    return sign * std::cos(theta_m) * level.A * level.A * kick_integral(geom, level);
}

double g_prime_zero(const WellGeometry& geom, const Level& level, const ProbeConfig& probe) {
    const double delta = 1e-5 * geom.barrier_half_width();
    return (g_of_za(geom, level, delta, probe.epsilon_reg) - g_of_za(geom, level, -delta, probe.epsilon_reg)) /
           (2.0 * delta);
}

double adiabaticity_ratio(double T, double gap) {
    if (!(gap > 0.0)) throw std::invalid_argument("adiabaticity_ratio: gap must be positive");
    return T * gap;
}

double weakness_ratio(const WellGeometry& geom, const ProbeConfig& probe, double gap) {
    if (!(gap > 0.0)) throw std::invalid_argument("weakness_ratio: gap must be positive");
    return probe.coupling / (geom.barrier_half_width() * gap);
}

namespace {

KickResult kick_for_theta(double theta, const WellGeometry& geom, const Level& level, const ProbeConfig& probe) {
    probe.validate();
    require_ground_level(level);
    KickResult r;
    r.kick_integral = kick_integral(geom, level);
    r.h_prime0 = std::cos(theta) * level.A * level.A * r.kick_integral;
    r.g_prime0 = g_prime_zero(geom, level, probe);
    r.p_final = -probe.coupling * probe.T * (r.h_prime0 + r.g_prime0);
    const double gap = tunneling_gap(geom);
    r.adiabatic_ratio = adiabaticity_ratio(probe.T, gap);
    r.weakness_ratio = weakness_ratio(geom, probe, gap);
    // ratios that equal their threshold up to rounding do not warn
    constexpr double slack = 1e-12;
    if (r.adiabatic_ratio < probe.adiabatic_threshold * (1.0 - slack)) {
        std::ostringstream msg;
        msg << "adiabatic ratio " << r.adiabatic_ratio << " below " << probe.adiabatic_threshold;
        r.warnings.push_back(msg.str());
    }
    if (r.weakness_ratio > probe.weakness_threshold * (1.0 + slack)) {
        std::ostringstream msg;
        msg << "weakness ratio " << r.weakness_ratio << " above " << probe.weakness_threshold;
        r.warnings.push_back(msg.str());
    }
    return r;
}

}  // namespace

KickResult probe_momentum(const BlochAngles& spin, const WellGeometry& geom, const Level& level,
                          const ProbeConfig& probe) {
    return kick_for_theta(spin.theta(), geom, level, probe);
}

KickResult probe_momentum(const SplitState& state, const WellGeometry& geom, const Level& level,
                          const ProbeConfig& probe) {
    return kick_for_theta(state.frame_spin.theta(), geom, level, probe);
}

const char* to_string(Candidate c) { return c == Candidate::Zero ? "zero" : "plus"; }

Discriminator::Discriminator(const WellGeometry& geom, std::vector<Level> levels, std::vector<cplx> weights,
                             const ProbeConfig& probe) {
    probe.validate();
    if (levels.empty() || levels.size() != weights.size()) {
        throw std::invalid_argument("Discriminator: need one weight per level");
    }
    double total = 0.0;
    for (const cplx& w : weights) total += std::norm(w);
    if (!(total > 0.0)) throw std::invalid_argument("Discriminator: all weights vanish");
    if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("Discriminator: weights are not normalized");
    double slope = 0.0;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        // f'_i(0) per unit cos(theta)
        slope += std::norm(weights[i]) * h_prime_zero(geom, levels[i], 0.0);
    }
    slope_ = -probe.coupling * probe.T * slope;
    if (slope_ == 0.0) throw std::invalid_argument("Discriminator: the |0> response vanishes");
    zero_response_ = slope_;
}

double Discriminator::response(const BlochAngles& spin) const { return slope_ * std::cos(spin.theta()); }

Candidate Discriminator::classify(double p_measured) const {
    const double along = std::copysign(1.0, zero_response_) * p_measured;
    return along > 0.5 * std::abs(zero_response_) ? Candidate::Zero : Candidate::Plus;
}

Candidate Discriminator::operator()(const BlochAngles& spin, double noise_sigma, std::mt19937_64& rng) const {
    double p = response(spin);
    if (noise_sigma > 0.0) {
        std::normal_distribution<double> noise(0.0, noise_sigma);
        p += noise(rng);
    }
    return classify(p);
}

Candidate discriminate(const BlochAngles& spin, const WellGeometry& geom, const std::vector<Level>& levels,
                       const std::vector<cplx>& weights, const ProbeConfig& probe, double noise_sigma,
                       std::mt19937_64& rng) {
    return Discriminator(geom, levels, weights, probe)(spin, noise_sigma, rng);
}

}  // namespace protoclone
