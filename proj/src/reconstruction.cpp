#include "protoclone/reconstruction.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "protoclone/stern_gerlach.hpp"

namespace protoclone {

namespace {

constexpr double kPi = std::numbers::pi;

bool near_angle(double a, double b) { return circular_distance(a, b) < kPlanTolerance; }

// Probe readout of one axis. Returns the measured momentum and leaves the
// split record in `state` so that the caller can recombine.
double readout(const BlochAngles& hidden, const BlochAngles& axis, const WellGeometry& geom, const Level& level,
               const ProbeConfig& probe, double noise_sigma, std::mt19937_64* rng, SplitState& state,
               std::vector<std::string>* warnings) {
    FieldPulse pulse;
    pulse.axis = angles_to_axis(axis);
    state = split(hidden, pulse);
    const KickResult kick = probe_momentum(state, geom, level, probe);
    if (warnings) warnings->insert(warnings->end(), kick.warnings.begin(), kick.warnings.end());
    double p = kick.p_final;
    if (noise_sigma > 0.0) {
        if (!rng) throw std::invalid_argument("measure_axis: noise requested without a random generator");
        std::normal_distribution<double> unit(0.0, 1.0);
        p += noise_sigma * unit(*rng);
    }
    return p;
}

struct AxisCandidates {
    std::array<double, 2> phi;
    bool clamped = false;
};

AxisCandidates axis_candidates(double cos_m, double sin_m, double meas, const BlochAngles& axis, bool allow_clamp) {
    const double denom = sin_m * std::sin(axis.theta());
    if (std::abs(denom) < 1e-12) throw PoleError("solve_phi: sin(theta_m) sin(theta_axis) vanishes");
    double c = (meas - cos_m * std::cos(axis.theta())) / denom;
    AxisCandidates out;
    if (std::abs(c) > 1.0) {
        if (std::abs(c) - 1.0 > kClampSlack && !allow_clamp) {
            std::ostringstream msg;
            msg << "solve_phi: cos(phi_m - phi_axis) = " << c << " lies outside [-1, 1]";
            throw InconsistentMeasurements(msg.str());
        }
        c = std::clamp(c, -1.0, 1.0);
        out.clamped = true;
    }
    const double eta = std::acos(c);
    out.phi = {wrap_angle(axis.phi() + eta), wrap_angle(axis.phi() - eta)};
    return out;
}

double constraint_residual(double cos_m, double sin_m, double phi, double meas, const BlochAngles& axis) {
    return cos_m * std::cos(axis.theta()) + std::cos(phi - axis.phi()) * sin_m * std::sin(axis.theta()) - meas;
}

// spread of the recovered azimuth along one axis for cos-readout noise sc
double phi_spread(double cos_m, double sin_m, double meas, const BlochAngles& axis, double sc) {
    const double st = std::sin(axis.theta());
    const double denom = sin_m * st;
    const double c = std::clamp((meas - cos_m * std::cos(axis.theta())) / denom, -1.0, 1.0);
    const double d_meas = 1.0 / denom;
    const double d_cos = -std::cos(axis.theta()) / denom + c * cos_m / (sin_m * sin_m);
    const double sc_c = sc * std::hypot(d_meas, d_cos);
    return sc_c / std::sqrt(std::max(1.0 - c * c, sc_c));
}

}  // namespace

void AxisPlan::validate() const {
    const auto fail = [](const char* why) { throw std::invalid_argument(std::string("AxisPlan: ") + why); };
    if (n_axis.theta() < kPlanTolerance) fail("theta_n must differ from 0");
    if (near_angle(n_axis.phi(), 0.0)) fail("phi_n must differ from 0");
    if (l_axis.theta() < kPlanTolerance) fail("theta_l must differ from 0");
    if (std::abs(l_axis.theta() - n_axis.theta()) < kPlanTolerance) fail("theta_l must differ from theta_n");
    if (near_angle(l_axis.phi(), 0.0)) fail("phi_l must differ from 0");
    if (near_angle(l_axis.phi(), n_axis.phi())) fail("phi_l must differ from phi_n");
    if (near_angle(l_axis.phi(), n_axis.phi() + kPi)) fail("phi_l must differ from phi_n + pi");
    if (n_axis.theta() > kPi - kPlanTolerance || l_axis.theta() > kPi - kPlanTolerance) {
        fail("axes along -z carry no azimuth information");
    }
}

double calibration_constant(const WellGeometry& geom, const Level& level, const ProbeConfig& probe) {
    probe.validate();
    return probe.coupling * probe.T * level.A * level.A * kick_integral(geom, level);
}

InvertedCos invert_cos(double p_measured, double C) {
    if (!(C > 0.0)) throw std::invalid_argument("invert_cos: C must be positive");
    const double raw = -p_measured / C;
    InvertedCos out;
    out.value = std::clamp(raw, -1.0, 1.0);
    out.clamped = out.value != raw;
    return out;
}

double measure_axis(const BlochAngles& hidden, const BlochAngles& axis, const WellGeometry& geom, const Level& level,
                    const ProbeConfig& probe, double noise_sigma, std::mt19937_64* rng,
                    std::vector<std::string>* warnings) {
    SplitState state;
    const double p = readout(hidden, axis, geom, level, probe, noise_sigma, rng, state, warnings);
    return invert_cos(p, calibration_constant(geom, level, probe)).value;
}

PhiSolution solve_phi(double cos_theta_m, double meas_n, double meas_l, const AxisPlan& plan,
                      const PhiOptions& options) {
    plan.validate();
    if (std::abs(cos_theta_m) >= 1.0 - kClampSlack) {
        throw PoleError("solve_phi: theta_m sits on a pole; phi_m is not identifiable");
    }
    const double sin_m = std::sqrt((1.0 - cos_theta_m) * (1.0 + cos_theta_m));
    const AxisCandidates cn = axis_candidates(cos_theta_m, sin_m, meas_n, plan.n_axis, options.nearest_fallback);
    const AxisCandidates cl = axis_candidates(cos_theta_m, sin_m, meas_l, plan.l_axis, options.nearest_fallback);

    PhiSolution out;
    out.candidates_n = cn.phi;
    out.candidates_l = cl.phi;
    out.clamped = cn.clamped || cl.clamped;
    double best = 4.0 * kPi;
    for (double a : cn.phi) {
        for (double b : cl.phi) {
            const double dist = circular_distance(a, b);
            if (dist < best) {
                best = dist;
                // circular midpoint of the matched pair
                out.phi_hat = wrap_angle(std::atan2(std::sin(a) + std::sin(b), std::cos(a) + std::cos(b)));
            }
        }
    }
    out.mismatch = best;
    if (best > options.tolerance) {
        if (!options.nearest_fallback) {
            std::ostringstream msg;
            msg << "solve_phi: candidate sets share no member (closest pair " << best << " rad apart, tolerance "
                << options.tolerance << ")";
            throw InconsistentMeasurements(msg.str());
        }
        out.fallback_used = true;
    }
    out.residuals = {constraint_residual(cos_theta_m, sin_m, out.phi_hat, meas_n, plan.n_axis),
                     constraint_residual(cos_theta_m, sin_m, out.phi_hat, meas_l, plan.l_axis)};
    return out;
}

Estimate clone_state(const BlochAngles& hidden, const AxisPlan& plan, const WellGeometry& geom, const Level& level,
                     const ProbeConfig& probe, double noise_sigma, std::mt19937_64* rng,
                     const CloneOptions& options) {
    plan.validate();
    const double C = calibration_constant(geom, level, probe);
    Estimate est;

    // theta from the z axis alone
    SplitState state;
    const BlochAngles z_axis(0.0, 0.0);
    const InvertedCos mz =
        invert_cos(readout(hidden, z_axis, geom, level, probe, noise_sigma, rng, state, &est.warnings), C);
    est.clamped = mz.clamped;
    est.measurements[0] = mz.value;
    est.theta_hat = std::acos(mz.value);
    BlochAngles spin = recombine(state).spin;

    if (est.theta_hat < kThetaPoleTolerance || est.theta_hat > kPi - kThetaPoleTolerance) {
        est.pole_flag = true;
        est.phi_hat = 0.0;
        est.prepared_clone = bloch_to_ket(BlochAngles(est.theta_hat, 0.0));
        return est;
    }

    const InvertedCos mn =
        invert_cos(readout(spin, plan.n_axis, geom, level, probe, noise_sigma, rng, state, &est.warnings), C);
    spin = recombine(state).spin;
    const InvertedCos ml =
        invert_cos(readout(spin, plan.l_axis, geom, level, probe, noise_sigma, rng, state, &est.warnings), C);
    spin = recombine(state).spin;
    est.measurements[1] = mn.value;
    est.measurements[2] = ml.value;
    est.clamped = est.clamped || mn.clamped || ml.clamped;

    PhiOptions po;
    po.nearest_fallback = options.nearest_fallback;
    if (noise_sigma > 0.0) {
        const double sc = noise_sigma / C;
        const double cm = mz.value;
        const double sm = std::sqrt(std::max(0.0, (1.0 - cm) * (1.0 + cm)));
        po.tolerance += 3.0 * (phi_spread(cm, sm, mn.value, plan.n_axis, sc) + phi_spread(cm, sm, ml.value, plan.l_axis, sc));
    }
    const PhiSolution sol = solve_phi(mz.value, mn.value, ml.value, plan, po);
    est.phi_hat = sol.phi_hat;
    est.phi_candidates_n = sol.candidates_n;
    est.phi_candidates_l = sol.candidates_l;
    est.residuals = sol.residuals;
    est.fallback_used = sol.fallback_used;
    est.clamped = est.clamped || sol.clamped;
    est.prepared_clone = bloch_to_ket(BlochAngles(est.theta_hat, est.phi_hat));
    return est;
}

double angular_error(const BlochAngles& a, const BlochAngles& b) {
    const UnitVec3 u = angles_to_axis(a);
    const UnitVec3 v = angles_to_axis(b);
    const double cx = u.y * v.z - u.z * v.y;
    const double cy = u.z * v.x - u.x * v.z;
    const double cz = u.x * v.y - u.y * v.x;
    return std::atan2(std::sqrt(cx * cx + cy * cy + cz * cz), u.dot(v));
}

MonteCarloSummary clone_monte_carlo(const AxisPlan& plan, const WellGeometry& geom, const Level& level,
                                    const ProbeConfig& probe, double noise_sigma, int trials, std::uint64_t seed) {
    if (trials < 1) throw std::invalid_argument("clone_monte_carlo: need at least one trial");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> theta_dist(0.1, kPi - 0.1);
    std::uniform_real_distribution<double> phi_dist(0.0, 2.0 * kPi);
    CloneOptions options;
    options.nearest_fallback = true;
    MonteCarloSummary out;
    out.trials = trials;
    double sum_sq = 0.0;
    int ok = 0;
    for (int t = 0; t < trials; ++t) {
        const double th = theta_dist(rng);
        const double ph = phi_dist(rng);
        const BlochAngles hidden(th, ph);
        try {
            const Estimate est = clone_state(hidden, plan, geom, level, probe, noise_sigma, &rng, options);
            const double err = angular_error(hidden, BlochAngles(est.theta_hat, est.phi_hat));
            sum_sq += err * err;
            out.max_error = std::max(out.max_error, err);
            ++ok;
        } catch (const InconsistentMeasurements&) {
            ++out.failures;
        } catch (const PoleError&) {
            ++out.failures;
        }
    }
    out.rms_error = ok > 0 ? std::sqrt(sum_sq / ok) : std::numeric_limits<double>::quiet_NaN();
    return out;
}

}  // namespace protoclone
