#include "protoclone/spin_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace protoclone {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}  // namespace

double wrap_angle(double phi) {
    double r = std::fmod(phi, kTwoPi);
    if (r < 0.0) r += kTwoPi;
    // fmod of a value just below 2 pi can round up to exactly 2 pi
    if (r >= kTwoPi) r = 0.0;
    return r;
}

double circular_distance(double a, double b) {
    const double d = wrap_angle(a - b);
    return std::min(d, kTwoPi - d);
}

BlochAngles::BlochAngles(double theta, double phi) {
    if (!std::isfinite(theta) || !std::isfinite(phi)) {
        throw std::invalid_argument("BlochAngles: non-finite angle");
    }
    theta_ = std::clamp(theta, 0.0, kPi);
    pole_ = theta_ <= kPoleTolerance || theta_ >= kPi - kPoleTolerance;
    phi_ = pole_ ? 0.0 : wrap_angle(phi);
}

UnitVec3 UnitVec3::normalized(double x, double y, double z) {
    const double n = std::sqrt(x * x + y * y + z * z);
    if (!(n > 0.0) || !std::isfinite(n)) {
        throw std::invalid_argument("UnitVec3: cannot normalize a zero or non-finite vector");
    }
    return {x / n, y / n, z / n};
}

SpinKet SpinKet::canonical(cplx c0, cplx c1) {
    const double n = std::sqrt(std::norm(c0) + std::norm(c1));
    if (!(n > 0.0) || !std::isfinite(n)) {
        throw std::invalid_argument("SpinKet: zero or non-finite amplitudes");
    }
    c0 /= n;
    c1 /= n;
    // Strip the global phase so that the leading nonzero amplitude is real.
    const cplx lead = std::abs(c0) > 0.0 ? c0 : c1;
    const cplx unit_phase = std::conj(lead) / std::abs(lead);
    c0 *= unit_phase;
    c1 *= unit_phase;
    if (std::abs(c0) > 0.0) {
        c0 = {std::abs(c0), 0.0};
    } else {
        c0 = {0.0, 0.0};
        c1 = {std::abs(c1), 0.0};
    }
    return SpinKet(c0, c1);
}

cplx SpinKet::inner(const SpinKet& other) const {
    return std::conj(c0_) * other.c0_ + std::conj(c1_) * other.c1_;
}

SpinKet bloch_to_ket(const BlochAngles& angles) {
    const double h = 0.5 * angles.theta();
    return SpinKet::canonical(std::cos(h), std::sin(h) * std::polar(1.0, angles.phi()));
}

BlochAngles ket_to_bloch(const SpinKet& ket) {
    const double theta = 2.0 * std::atan2(std::abs(ket.c1()), std::abs(ket.c0()));
    const double phi = std::arg(ket.c1()) - std::arg(ket.c0());
    return {theta, phi};
}

UnitVec3 angles_to_axis(const BlochAngles& angles) {
    const double st = std::sin(angles.theta());
    return {st * std::cos(angles.phi()), st * std::sin(angles.phi()), std::cos(angles.theta())};
}

BlochAngles axis_to_angles(const UnitVec3& axis) {
    const double rho = std::hypot(axis.x, axis.y);
    return {std::atan2(rho, axis.z), std::atan2(axis.y, axis.x)};
}

double axis_overlap_cos(const UnitVec3& m, const UnitVec3& n) {
    const BlochAngles am = axis_to_angles(m);
    const BlochAngles an = axis_to_angles(n);
    return std::cos(am.theta()) * std::cos(an.theta()) +
           std::cos(am.phi() - an.phi()) * std::sin(am.theta()) * std::sin(an.theta());
}

AxisFrame AxisFrame::along(const BlochAngles& axis_angles) {
    const double h = 0.5 * axis_angles.theta();
    const cplx e = std::polar(1.0, axis_angles.phi());
    AxisFrame f;
    f.axis = angles_to_axis(axis_angles);
    f.plus_ket = bloch_to_ket(axis_angles);
    // -sin(t/2)|0> + cos(t/2)e^{ip}|1>, stored in canonical phase
    f.minus_ket = SpinKet::canonical(-std::sin(h), std::cos(h) * e);
    return f;
}

FrameDecomposition decompose_in_axis(const BlochAngles& m_angles, const AxisFrame& frame) {
    const SpinKet m = bloch_to_ket(m_angles);
    const cplx up = frame.plus_ket.inner(m);
    const cplx dn = frame.minus_ket.inner(m);
    FrameDecomposition out;
    out.theta = 2.0 * std::atan2(std::abs(dn), std::abs(up));
    const BlochAngles chart(out.theta, std::arg(dn) - std::arg(up));
    out.phi = chart.phi();
    out.phi_identifiable = !chart.pole();
    return out;
}

Matrix4 nonunitary_cloner(const BlochAngles& angles) {
    if (angles.theta() <= kPoleTolerance) {
        throw PoleError("nonunitary_cloner: cot(theta/2) diverges at theta = 0");
    }
    const double h = 0.5 * angles.theta();
    const double c = std::cos(h);
    const double s = std::sin(h);
    const cplx e = std::polar(1.0, angles.phi());
    Matrix4 d = Matrix4::Zero();
    d(0, 0) = 1.0;
    d(0, 2) = std::conj(e) * (c / s) * (c - 1.0);
    d(1, 2) = c;
    d(2, 2) = c;
    d(3, 2) = e * s;
    return d;
}

Matrix4 plus_state_cloner() {
    const double r2 = std::sqrt(2.0);
    Matrix4 d = Matrix4::Zero();
    d(0, 0) = r2;
    d(0, 2) = 1.0 - r2;
    d(1, 2) = 1.0;
    d(2, 2) = 1.0;
    d(3, 2) = 1.0;
    return d / r2;
}

Vector4 tensor(const SpinKet& a, const SpinKet& b) {
    return {a.c0() * b.c0(), a.c0() * b.c1(), a.c1() * b.c0(), a.c1() * b.c1()};
}

double linearity_obstruction_check(const BlochAngles& angles) {
    const SpinKet m = bloch_to_ket(angles);
    const double h = 0.5 * angles.theta();
    const Vector4 linear{std::cos(h), 0.0, 0.0, std::sin(h) * std::polar(1.0, angles.phi())};
    return (linear - tensor(m, m)).norm();
}

WrongProtection wrong_protection_outcome(const BlochAngles& m, const BlochAngles& n, double b_static,
                                         double b_gradient, double q_n, double strength) {
    if (!(b_static > 0.0) || !(strength > 0.0)) {
        throw std::invalid_argument("wrong_protection_outcome: requires b_static > 0 and strength > 0");
    }
    const double cos_m = std::cos(m.theta());
    const double cos_mn = angles_to_axis(m).dot(angles_to_axis(n));
    const double eps = b_gradient * q_n / (b_static * strength);
    WrongProtection out;
    double c = cos_m + eps * (cos_mn - cos_m * std::cos(n.theta()));
    if (c > 1.0 || c < -1.0) {
        out.clamped = true;
        c = std::clamp(c, -1.0, 1.0);
    }
    out.cos_theta_bm = c;
    out.p_plus = 0.5 * (1.0 + c);
    out.p_minus = 1.0 - out.p_plus;
    return out;
}

double cwp_kick(double theta_m, double gamma, double b_gradient, double tau) {
    return gamma * b_gradient * std::cos(theta_m) * 0.5 * tau;
}

}  // namespace protoclone
