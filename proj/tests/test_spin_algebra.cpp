#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "protoclone/spin_algebra.hpp"

using namespace protoclone;

namespace {

constexpr double kPi = std::numbers::pi;

// Test-side ket built straight from the textbook formula, no canonicalization.
Vector4 raw_tensor(cplx a0, cplx a1, cplx b0, cplx b1) { return {a0 * b0, a0 * b1, a1 * b0, a1 * b1}; }

double max_abs(const Vector4& v) { return v.cwiseAbs().maxCoeff(); }

std::vector<BlochAngles> sample_states() {
    std::vector<BlochAngles> out;
    for (double t : {0.1, 0.5, 1.0, kPi / 2, 2.0, 3.0}) {
        for (double p : {0.0, 0.7, 2.5, 4.0, 6.0}) out.emplace_back(t, p);
    }
    return out;
}

}  // namespace

TEST_CASE("angles are clamped, wrapped and flagged at the poles") {
    const BlochAngles a(1.0, -0.5);
    CHECK(a.phi() == doctest::Approx(2 * kPi - 0.5));
    CHECK_FALSE(a.pole());

    const BlochAngles north(0.0, 1.3);
    CHECK(north.pole());
    CHECK(north.phi() == 0.0);
    CHECK(BlochAngles(kPi, 2.0).pole());
    CHECK(BlochAngles(-0.1, 0.0).theta() == 0.0);
    CHECK_THROWS_AS(BlochAngles(std::nan(""), 0.0), std::invalid_argument);

    CHECK(wrap_angle(2 * kPi) == 0.0);
    CHECK(wrap_angle(-1e-20) < 2 * kPi);
    CHECK(circular_distance(0.1, 2 * kPi - 0.1) == doctest::Approx(0.2));
}

TEST_CASE("ket and Bloch chart round-trip") {
    for (const auto& s : sample_states()) {
        const SpinKet k = bloch_to_ket(s);
        CHECK(std::norm(k.c0()) + std::norm(k.c1()) == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(k.c0().imag() == 0.0);
        const BlochAngles back = ket_to_bloch(k);
        CHECK(back.theta() == doctest::Approx(s.theta()).epsilon(1e-13));
        CHECK(circular_distance(back.phi(), s.phi()) < 1e-12);
    }
    // canonical phase strips a global phase
    const SpinKet k = SpinKet::canonical(std::polar(2.0, 1.1), std::polar(1.0, 2.0));
    CHECK(k.c0().imag() == 0.0);
    CHECK(std::arg(k.c1()) == doctest::Approx(0.9));
    CHECK_THROWS_AS(SpinKet::canonical(0.0, 0.0), std::invalid_argument);
}

TEST_CASE("axis overlap equals the Cartesian dot product") {
    for (const auto& m : sample_states()) {
        for (const auto& n : sample_states()) {
            const UnitVec3 u = angles_to_axis(m);
            const UnitVec3 v = angles_to_axis(n);
            CHECK(axis_overlap_cos(u, v) == doctest::Approx(u.dot(v)).epsilon(1e-12));
        }
    }
    CHECK_THROWS_AS(UnitVec3::normalized(0, 0, 0), std::invalid_argument);
}

TEST_CASE("frame eigenkets are orthonormal eigenvectors of S.n") {
    for (const auto& n : sample_states()) {
        const AxisFrame f = AxisFrame::along(n);
        CHECK(std::abs(f.plus_ket.inner(f.minus_ket)) < 1e-14);
        // expectation of sigma.n in |+> is +1
        const cplx a = f.plus_ket.c0(), b = f.plus_ket.c1();
        const double sx = 2 * std::real(std::conj(a) * b);
        const double sy = 2 * std::imag(std::conj(a) * b);
        const double sz = std::norm(a) - std::norm(b);
        CHECK(sx * f.axis.x + sy * f.axis.y + sz * f.axis.z == doctest::Approx(1.0).epsilon(1e-13));
    }
}

TEST_CASE("decomposition in a rotated frame rebuilds the state") {
    const AxisFrame f = AxisFrame::along(BlochAngles(kPi / 3, kPi / 5));
    for (const auto& m : sample_states()) {
        const FrameDecomposition d = decompose_in_axis(m, f);
        const cplx c = std::cos(0.5 * d.theta);
        const cplx s = std::sin(0.5 * d.theta) * std::polar(1.0, d.phi);
        const cplx r0 = c * f.plus_ket.c0() + s * f.minus_ket.c0();
        const cplx r1 = c * f.plus_ket.c1() + s * f.minus_ket.c1();
        const SpinKet k = bloch_to_ket(m);
        const cplx ov = std::conj(r0) * k.c0() + std::conj(r1) * k.c1();
        CHECK(std::abs(ov) == doctest::Approx(1.0).epsilon(1e-12));
        // cos theta in the frame is the projection onto the axis
        CHECK(std::cos(d.theta) == doctest::Approx(angles_to_axis(m).dot(f.axis)).epsilon(1e-12));
    }
    // along its own axis a state is a pole of the frame chart
    const FrameDecomposition same = decompose_in_axis(BlochAngles(1.0, 2.0), AxisFrame::along(BlochAngles(1.0, 2.0)));
    CHECK(same.theta < 1e-7);
    CHECK_FALSE(same.phi_identifiable);
}

TEST_CASE("non-unitary cloner reproduces its defining action") {
    for (const auto& m : sample_states()) {
        const Matrix4 D = nonunitary_cloner(m);
        const double h = 0.5 * m.theta();
        const cplx m0 = std::cos(h), m1 = std::sin(h) * std::polar(1.0, m.phi());
        const Vector4 zz = raw_tensor(1, 0, 1, 0);
        const Vector4 m_zero = raw_tensor(m0, m1, 1, 0);
        CHECK(max_abs(D * zz - zz) < 1e-12);
        CHECK(max_abs(D * m_zero - raw_tensor(m0, m1, m0, m1)) < 1e-12);
    }
    CHECK_THROWS_AS(nonunitary_cloner(BlochAngles(0.0, 0.0)), PoleError);
    // not unitary away from the pole
    const Matrix4 D = nonunitary_cloner(BlochAngles(1.0, 0.3));
    CHECK((D.adjoint() * D - Matrix4::Identity()).norm() > 1e-3);
}

TEST_CASE("plus-state cloner matches the general cloner at theta = pi/2, phi = 0") {
    const Matrix4 P = plus_state_cloner();
    const double r = 1 / std::sqrt(2.0);
    const Vector4 zz = raw_tensor(1, 0, 1, 0);
    CHECK(max_abs(P * zz - zz) < 1e-12);
    CHECK(max_abs(P * raw_tensor(r, r, 1, 0) - raw_tensor(r, r, r, r)) < 1e-12);
    CHECK((P - nonunitary_cloner(BlochAngles(kPi / 2, 0.0))).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("linearity obstruction") {
    // at the equator with phi = 0 the deviation is sqrt(2 - sqrt 2) by hand
    CHECK(linearity_obstruction_check(BlochAngles(kPi / 2, 0.0)) ==
          doctest::Approx(std::sqrt(2 - std::sqrt(2.0))).epsilon(1e-14));
    CHECK(linearity_obstruction_check(BlochAngles(0.0, 0.0)) < 1e-15);
    CHECK(linearity_obstruction_check(BlochAngles(kPi, 0.0)) < 1e-15);
    for (const auto& m : sample_states()) {
        CHECK(linearity_obstruction_check(m) > 0.0);
        CHECK(linearity_obstruction_check(m) ==
              doctest::Approx(linearity_obstruction_check(BlochAngles(m.theta(), -m.phi()))).epsilon(1e-13));
    }
}

TEST_CASE("tilted protection field") {
    const BlochAngles m(1.0, 0.4), n(kPi / 3, kPi / 5);
    const WrongProtection none = wrong_protection_outcome(m, n, 1.0, 0.0, 1.0, 1.0);
    CHECK(none.cos_theta_bm == doctest::Approx(std::cos(1.0)));
    CHECK(none.p_plus + none.p_minus == doctest::Approx(1.0));
    CHECK_FALSE(none.clamped);

    // first order in eps: cos_m + eps (m.n - cos_m cos_n)
    const double eps = 0.1;
    const WrongProtection w = wrong_protection_outcome(m, n, 2.0, 0.2, 1.0, 1.0);
    const double mn = angles_to_axis(m).dot(angles_to_axis(n));
    CHECK(w.cos_theta_bm == doctest::Approx(std::cos(1.0) + eps * (mn - std::cos(1.0) * std::cos(kPi / 3))));

    const WrongProtection big = wrong_protection_outcome(BlochAngles(0.01, 0), BlochAngles(kPi / 2, 0), 1.0, 100.0,
                                                         1.0, 1.0);
    CHECK(big.clamped);
    CHECK(big.cos_theta_bm <= 1.0);
    CHECK_THROWS_AS(wrong_protection_outcome(m, n, 0.0, 1.0, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("kick in the S_m eigenbasis") {
    CHECK(cwp_kick(0.0, -1.0, -1.0, 1.0) == doctest::Approx(0.5));
    CHECK(cwp_kick(kPi, -1.0, -1.0, 1.0) == doctest::Approx(-0.5));
    CHECK(std::abs(cwp_kick(kPi / 2, -1.0, -1.0, 1.0)) < 1e-16);
}
