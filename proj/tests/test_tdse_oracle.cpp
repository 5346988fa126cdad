#include <doctest.h>

#include <cmath>
#include <numbers>

#include "protoclone/reconstruction.hpp"
#include "protoclone/tdse_oracle.hpp"

using namespace protoclone;

namespace {

constexpr double kPi = std::numbers::pi;
const WellGeometry kOracle{1.0, 0.6, 50.0};
const WellGeometry kDemo{1.0, 1.0, 1250.0};

Potential zero_potential() {
    Potential p;
    p.fill = [](double, std::vector<double>& up, std::vector<double>& dn) {
        std::fill(up.begin(), up.end(), 0.0);
        std::fill(dn.begin(), dn.end(), 0.0);
    };
    return p;
}

}  // namespace

TEST_CASE("grid validation") {
    CHECK_NOTHROW((Grid1D{-1, 1, 1024, 1e-3}).validate());
    CHECK_THROWS_AS((Grid1D{-1, 1, 1000, 1e-3}).validate(), std::invalid_argument);
    CHECK_THROWS_AS((Grid1D{-1, 1, 512, 1e-3}).validate(), std::invalid_argument);
    CHECK_THROWS_AS((Grid1D{1, -1, 1024, 1e-3}).validate(), std::invalid_argument);
    const Grid1D box = Grid1D::box(kOracle, 1024, 1e-3);
    CHECK(box.zmin == doctest::Approx(-1.1));
    CHECK(box.z(1023) + box.spacing() == doctest::Approx(1.1));
}

TEST_CASE("free Gaussian packet: drift, spreading and norm") {
    // analytic: <z>(t) = p0 t, width^2(t) = s^2 + (t / (2 s))^2
    const Grid1D g{-40.0, 40.0, 4096, 2e-3};
    const double s = 1.0, p0 = 1.5;
    SpinorField f{g, std::vector<cplx>(4096), std::vector<cplx>(4096, 0.0)};
    for (int j = 0; j < g.npts; ++j) {
        const double z = g.z(j);
        f.up[static_cast<std::size_t>(j)] = std::exp(-z * z / (4 * s * s)) * std::polar(1.0, p0 * z);
    }
    const double n0 = f.norm_sq();
    for (auto& c : f.up) c /= std::sqrt(n0);
    const double t = 4.0;
    const PropagationStats st = propagate(f, zero_potential(), t);
    CHECK(st.norm_drift < 1e-10);
    CHECK(grid_position(f.up, g) == doctest::Approx(p0 * t).epsilon(2e-3));
    CHECK(grid_momentum(f.up, g.spacing()) == doctest::Approx(p0).epsilon(2e-3));
    double z2 = 0.0;
    for (int j = 0; j < g.npts; ++j) {
        const double dz = g.z(j) - p0 * t;
        z2 += std::norm(f.up[static_cast<std::size_t>(j)]) * dz * dz * g.spacing();
    }
    CHECK(std::sqrt(z2) == doctest::Approx(std::sqrt(s * s + std::pow(t / (2 * s), 2))).epsilon(3e-3));
    CHECK(f.component_norm_sq(false) == 0.0);
}

TEST_CASE("stability guard") {
    const Grid1D g{-1.0, 1.0, 1024, 10.0};
    SpinorField f{g, std::vector<cplx>(1024, 0.0), std::vector<cplx>(1024, 0.0)};
    for (int j = 0; j < g.npts; ++j) f.up[static_cast<std::size_t>(j)] = std::sin(kPi * (g.z(j) + 1) / 2);
    CHECK_THROWS_AS(propagate(f, zero_potential(), 100.0), StabilityError);
}

TEST_CASE("cell-averaged barrier integrates to its area") {
    const Grid1D g = Grid1D::box(kOracle, 1024, 1e-3);
    const auto v = cell_averaged_barrier(g, kOracle.barrier_half_width(), kOracle.V0);
    double area = 0.0;
    for (double x : v) area += x * g.spacing();
    CHECK(area == doctest::Approx(2 * kOracle.barrier_half_width() * kOracle.V0).epsilon(1e-3));
}

TEST_CASE("eigenstate is stationary with the analytic phase rate") {
    const Level lv = solve_levels(kOracle, Parity::Symmetric, 1)[0];
    const double gap = tunneling_gap(kOracle);
    const Grid1D g = Grid1D::box(kOracle, 1024, 5e-3);
    const StationarityResult r = stationarity_check(lv, kOracle, 10.0 / gap, g, BlochAngles(1.0, 0.5));
    CHECK(r.min_fidelity > 1 - 1e-6);
    CHECK(r.phase_rate == doctest::Approx(lv.E).epsilon(1e-3));
    CHECK(r.norm_drift < 1e-9);
}

TEST_CASE("gradient pulse splits the packet by +-gamma Bi tau / 2") {
    const Grid1D g{-20.0, 20.0, 2048, 2e-3};
    const SplitEvolutionResult r = split_evolution(BlochAngles(1.0, 0.5), FieldPulse{}, PacketPrep::minimum(0.5), g);
    CHECK(r.p_up == doctest::Approx(0.5).epsilon(1e-2));
    CHECK(r.p_down == doctest::Approx(-0.5).epsilon(1e-2));
    CHECK(r.w_up == doctest::Approx(std::pow(std::cos(0.5), 2)).epsilon(1e-6));
    CHECK(r.cross_transfer < 1e-12);

    FieldPulse tilted;
    tilted.axis = {1.0, 0.0, 0.0};
    CHECK_THROWS_AS(split_evolution(BlochAngles(1.0, 0.5), tilted, PacketPrep::minimum(0.5), g),
                    std::invalid_argument);
}

TEST_CASE("ramp schedule") {
    const RampSchedule r = RampSchedule::smooth(kOracle, 10.0, 16);
    CHECK_NOTHROW(r.validate());
    CHECK(r.barrier_at(0.0) == 0.0);
    CHECK(r.barrier_at(10.0) == doctest::Approx(kOracle.V0));
    CHECK(r.barrier_at(5.0) == doctest::Approx(0.5 * kOracle.V0));
    RampSchedule bad = r;
    bad.knot_times[3] = bad.knot_times[2];
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("numeric phase gradient reproduces the analytic kick") {
    const Level lv = solve_levels(kDemo, Parity::Symmetric, 1)[0];
    const double gap = tunneling_gap(kDemo);
    const double d = kDemo.barrier_half_width();
    ProbeConfig p;
    p.T = 100.0 / gap;
    p.coupling = 1e-3 * d * gap;
    p.epsilon_reg = 1e-3 * d;
    const BlochAngles spin(1.0, 0.5);
    const PhaseGradientResult r = probe_phase_gradient(lv, kDemo, spin, p, 1e-3 * d, 1e-3 * d);
    const double analytic = -calibration_constant(kDemo, lv, p) * std::cos(1.0);
    CHECK(r.kick / analytic == doctest::Approx(1.0).epsilon(5e-3));
}
