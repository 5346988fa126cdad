#include <doctest.h>

#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "protoclone/protective_probe.hpp"

using namespace protoclone;

namespace {

constexpr double kPi = std::numbers::pi;
const WellGeometry kDemo{1.0, 1.0, 1250.0};

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol, int depth = 50) {
    const auto step = [&](auto&& self, double x0, double x1, double f0, double fm, double f1, double whole, double t,
                          int left) -> double {
        const double m = 0.5 * (x0 + x1);
        const double flm = f(0.5 * (x0 + m)), frm = f(0.5 * (m + x1));
        const double l = (m - x0) / 6 * (f0 + 4 * flm + fm);
        const double r = (x1 - m) / 6 * (fm + 4 * frm + f1);
        if (left <= 0 || std::abs(l + r - whole) <= 15 * t) return l + r + (l + r - whole) / 15;
        return self(self, x0, m, f0, flm, fm, l, t / 2, left - 1) + self(self, m, x1, fm, frm, f1, r, t / 2, left - 1);
    };
    const double f0 = f(a), f1 = f(b), fm = f(0.5 * (a + b));
    return step(step, a, b, f0, fm, f1, (b - a) / 6 * (f0 + 4 * fm + f1), tol, depth);
}

Level s1() { return solve_levels(kDemo, Parity::Symmetric, 1)[0]; }

// T and lambda at adiabatic ratio 100 and weakness ratio 1e-3
ProbeConfig demo_probe() {
    const double gap = tunneling_gap(kDemo);
    ProbeConfig p;
    p.T = 100.0 / gap;
    p.coupling = 1e-3 * kDemo.barrier_half_width() * gap;
    p.epsilon_reg = 1e-3 * kDemo.barrier_half_width();
    return p;
}

}  // namespace

TEST_CASE("kick integral against adaptive Simpson") {
    for (const auto& g : {kDemo, WellGeometry{1.0, 0.6, 50.0}, WellGeometry{0.5, 1.5, 400.0}}) {
        for (const Parity p : {Parity::Symmetric, Parity::Antisymmetric}) {
            const Level lv = solve_levels(g, p, 1)[0];
            const double w = g.outer_wall(), d = g.barrier_half_width();
            const double ref = adaptive_simpson(
                [&](double z) { return std::pow(std::sin(lv.k * (w - z)), 2) / (z * z); }, d, w, 1e-15);
            CHECK(kick_integral(g, lv) == doctest::Approx(ref).epsilon(1e-11));
            CHECK(kick_integral(g, lv) > 0.0);
        }
    }
}

TEST_CASE("finite-difference f'(0) matches the analytic well derivative") {
    const Level lv = s1();
    const ProbeConfig probe = demo_probe();
    const double A2I = lv.A * lv.A * kick_integral(kDemo, lv);
    const double h = 1e-4 * kDemo.barrier_half_width();
    for (double theta : {0.0, 0.5, 1.0, 2.0, 3.0}) {
        const BlochAngles spin(theta, 0.3);
        const double fd = (f_of_za(kDemo, lv, spin, h, probe) - f_of_za(kDemo, lv, spin, -h, probe)) / (2 * h);
        const double analytic = h_prime_zero(kDemo, lv, theta);
        CHECK(analytic == doctest::Approx(std::cos(theta) * A2I).epsilon(1e-13));
        // absolute scale A^2 I keeps the check meaningful near theta = pi/2
        CHECK(std::abs(fd - analytic) < 1e-3 * A2I);
    }
    // antisymmetric level: cos^2 and sin^2 trade wells
    const Level a1 = solve_levels(kDemo, Parity::Antisymmetric, 1)[0];
    CHECK(h_prime_zero(kDemo, a1, 0.4) < 0.0);
}

TEST_CASE("barrier part has zero slope at the midpoint") {
    const Level lv = s1();
    const double A2I = lv.A * lv.A * kick_integral(kDemo, lv);
    for (double rel : {1e-4, 1e-3, 1e-2}) {
        ProbeConfig p = demo_probe();
        p.epsilon_reg = rel * kDemo.barrier_half_width();
        CHECK(std::abs(g_prime_zero(kDemo, lv, p)) < 1e-8 * A2I);
        const double za = 0.1;
        CHECK(g_of_za(kDemo, lv, za, p.epsilon_reg) == g_of_za(kDemo, lv, -za, p.epsilon_reg));
    }
    CHECK_THROWS_AS(g_of_za(kDemo, lv, 0.4995, 1e-3), std::domain_error);
    CHECK_THROWS_AS(f_of_za(kDemo, lv, {}, 0.5, demo_probe()), std::domain_error);
}

TEST_CASE("probe momentum follows -C cos(theta)") {
    const Level lv = s1();
    const ProbeConfig probe = demo_probe();
    const double C = probe.coupling * probe.T * lv.A * lv.A * kick_integral(kDemo, lv);
    for (int j = 0; j <= 18; ++j) {
        const double theta = j * kPi / 18;
        const KickResult r = probe_momentum(BlochAngles(theta, 1.0), kDemo, lv, probe);
        CHECK(std::abs(r.p_final + C * std::cos(theta)) < 1e-12 * C);
        CHECK(r.warnings.empty());
    }
    CHECK(probe_momentum(BlochAngles(0.0, 0.0), kDemo, lv, probe).p_final < 0.0);
    CHECK(probe_momentum(BlochAngles(kPi, 0.0), kDemo, lv, probe).p_final > 0.0);
    CHECK(std::abs(probe_momentum(BlochAngles(kPi / 2, 0.0), kDemo, lv, probe).p_final) < 1e-12 * C);

    const KickResult r = probe_momentum(BlochAngles(1.0, 0.0), kDemo, lv, probe);
    CHECK(r.adiabatic_ratio == doctest::Approx(100.0));
    CHECK(r.weakness_ratio == doctest::Approx(1e-3));
}

TEST_CASE("split-state readout uses the polar angle relative to the pulse axis") {
    const Level lv = s1();
    const ProbeConfig probe = demo_probe();
    FieldPulse pulse;
    pulse.axis = angles_to_axis(BlochAngles(kPi / 3, kPi / 5));
    const BlochAngles m(1.0, 2.0);
    const SplitState s = split(m, pulse);
    const double c = angles_to_axis(m).dot(pulse.axis);
    const double C = probe.coupling * probe.T * lv.A * lv.A * kick_integral(kDemo, lv);
    CHECK(probe_momentum(s, kDemo, lv, probe).p_final == doctest::Approx(-C * c).epsilon(1e-10));
}

TEST_CASE("warnings when the probe is too fast or too strong") {
    const Level lv = s1();
    ProbeConfig fast = demo_probe();
    fast.T *= 0.1;
    const KickResult r1 = probe_momentum(BlochAngles(1.0, 0.0), kDemo, lv, fast);
    REQUIRE(r1.warnings.size() == 1);
    CHECK(r1.warnings[0].find("adiabatic") != std::string::npos);

    ProbeConfig strong = demo_probe();
    strong.coupling *= 100.0;
    const KickResult r2 = probe_momentum(BlochAngles(1.0, 0.0), kDemo, lv, strong);
    REQUIRE(r2.warnings.size() == 1);
    CHECK(r2.warnings[0].find("weakness") != std::string::npos);

    ProbeConfig bad;
    bad.coupling = -1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("discrimination of |0> from |+>") {
    const ProbeConfig probe = demo_probe();
    const auto sym = solve_levels(kDemo, Parity::Symmetric, 2);
    const Discriminator d(kDemo, {sym[0]}, {1.0}, probe);
    CHECK(d.classify(d.response(BlochAngles(0.0, 0.0))) == Candidate::Zero);
    CHECK(d.classify(d.response(BlochAngles(kPi / 2, 0.0))) == Candidate::Plus);
    CHECK(std::abs(d.response(BlochAngles(kPi / 2, 0.0))) < 1e-12 * std::abs(d.zero_response()));

    std::mt19937_64 rng(7);
    int correct = 0;
    for (int i = 0; i < 100; ++i) {
        correct += d(BlochAngles(0.0, 0.0), 0.0, rng) == Candidate::Zero;
        correct += d(BlochAngles(kPi / 2, 0.0), 0.0, rng) == Candidate::Plus;
    }
    CHECK(correct == 200);

    // superposition of two symmetric levels
    const double r = 1 / std::sqrt(2.0);
    const Discriminator two(kDemo, {sym[0], sym[1]}, {r, r}, probe);
    CHECK(two.classify(two.response(BlochAngles(0.0, 0.0))) == Candidate::Zero);
    CHECK(std::string(to_string(Candidate::Plus)) == "plus");

    CHECK_THROWS_AS(Discriminator(kDemo, {sym[0]}, {0.5}, probe), std::invalid_argument);
    CHECK_THROWS_AS(Discriminator(kDemo, {sym[0]}, {0.0}, probe), std::invalid_argument);
    CHECK_THROWS_AS(Discriminator(kDemo, {sym[0], sym[1]}, {1.0}, probe), std::invalid_argument);
}
