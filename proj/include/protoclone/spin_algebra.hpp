#pragma once

// Spin-1/2 states on the Bloch sphere, measurement-axis frames, the explicit
// non-unitary cloner matrices and two closed-form side analyses.
//
// Natural units throughout: hbar = 1, electron mass M = 1.

#include <array>
#include <complex>
#include <stdexcept>
#include <utility>

#include <Eigen/Dense>

namespace protoclone {

using cplx = std::complex<double>;
using Matrix4 = Eigen::Matrix4cd;
using Vector4 = Eigen::Vector4cd;

// Raised when an operation needs an azimuth that the pole makes undefined.
class PoleError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Angular distance below which theta counts as sitting on a pole.
inline constexpr double kPoleTolerance = 1e-12;

// Polar/azimuthal chart of a pure spin-1/2 state. theta is clamped to
// [0, pi], phi reduced into [0, 2 pi). On a pole phi is stored as 0 and
// flagged as non-identifiable.
class BlochAngles {
public:
    BlochAngles() = default;
    BlochAngles(double theta, double phi);

    [[nodiscard]] double theta() const { return theta_; }
    [[nodiscard]] double phi() const { return phi_; }
    [[nodiscard]] bool pole() const { return pole_; }

    friend bool operator==(const BlochAngles&, const BlochAngles&) = default;

private:
    double theta_ = 0.0;
    double phi_ = 0.0;
    bool pole_ = true;
};

// Reduce an angle into [0, 2 pi).
double wrap_angle(double phi);

// Shortest distance between two angles on the circle, in [0, pi].
double circular_distance(double a, double b);

struct UnitVec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 1.0;

    // Rescales (x, y, z) to unit length; throws on a zero vector.
    static UnitVec3 normalized(double x, double y, double z);

    [[nodiscard]] double dot(const UnitVec3& o) const { return x * o.x + y * o.y + z * o.z; }
};

// Normalized two-amplitude spin state in canonical global phase:
// c0 real and >= 0, or c1 real and >= 0 when c0 vanishes.
class SpinKet {
public:
    SpinKet() = default;

    // Normalizes and canonicalizes arbitrary amplitudes.
    static SpinKet canonical(cplx c0, cplx c1);

    [[nodiscard]] cplx c0() const { return c0_; }
    [[nodiscard]] cplx c1() const { return c1_; }

    // <this|other>
    [[nodiscard]] cplx inner(const SpinKet& other) const;

private:
    SpinKet(cplx c0, cplx c1) : c0_(c0), c1_(c1) {}
    cplx c0_{1.0, 0.0};
    cplx c1_{0.0, 0.0};
};

// Eigenbasis of S . axis. plus_ket carries eigenvalue +1/2.
struct AxisFrame {
    UnitVec3 axis;
    SpinKet plus_ket;
    SpinKet minus_ket;

    static AxisFrame along(const BlochAngles& axis_angles);
};

SpinKet bloch_to_ket(const BlochAngles& angles);
BlochAngles ket_to_bloch(const SpinKet& ket);

UnitVec3 angles_to_axis(const BlochAngles& angles);
BlochAngles axis_to_angles(const UnitVec3& axis);

// cos of the angle between m and n, written in the polar/azimuthal form
// cos(th_m)cos(th_n) + cos(ph_m - ph_n) sin(th_m) sin(th_n).
double axis_overlap_cos(const UnitVec3& m, const UnitVec3& n);

// Spin state expressed in a rotated frame:
// |m> = cos(theta/2)|+> + sin(theta/2) e^{i phi}|->.
struct FrameDecomposition {
    double theta = 0.0;
    double phi = 0.0;
    bool phi_identifiable = false;
};

FrameDecomposition decompose_in_axis(const BlochAngles& m_angles, const AxisFrame& frame);

// 4x4 operator on H2 (x) H2 (basis |00>,|01>,|10>,|11>) that maps |0>|0> to
// itself and |m>|0> to |m>|m>. Diverges at theta = 0 (throws PoleError).
Matrix4 nonunitary_cloner(const BlochAngles& angles);

// Fixed matrix mapping |0>|0> -> |0>|0> and |+>|0> -> |+>|+>.
Matrix4 plus_state_cloner();

// Product state |a>|b> in the 4-dimensional basis above.
Vector4 tensor(const SpinKet& a, const SpinKet& b);

// || cos(t/2)|00> + sin(t/2)e^{i p}|11> - |m>|m> ||: the distance between
// what a linear cloner must output and the required copy.
double linearity_obstruction_check(const BlochAngles& angles);

struct WrongProtection {
    double cos_theta_bm = 1.0;
    double p_plus = 1.0;
    double p_minus = 0.0;
    bool clamped = false;
};

// First-order outcome of protecting with a static field along z plus a weak
// gradient field (b_gradient / strength) * q_n along n.
WrongProtection wrong_protection_outcome(const BlochAngles& m, const BlochAngles& n, double b_static,
                                         double b_gradient, double q_n, double strength);

// Momentum gained by the packet centre when working in the S_m eigenbasis.
double cwp_kick(double theta_m, double gamma, double b_gradient, double tau);

}  // namespace protoclone
