#include "protoclone/doublewell_spectra.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/tools/roots.hpp>

namespace protoclone {

namespace {

constexpr double kPi = std::numbers::pi;

// Distance kept from tan asymptotes and from k = alpha when bracketing (k units times a).
constexpr double kGuard = 1e-9;

// coth(x) - 1 and 1 - tanh(x) without cancellation
double coth_minus_one(double x) { return 2.0 / std::expm1(2.0 * x); }
double one_minus_tanh(double x) { return 2.0 / (std::expm1(2.0 * x) + 2.0); }

void require_finite_barrier(const WellGeometry& geom, const char* what) {
    geom.validate();
    if (geom.infinite_barrier()) {
        throw std::invalid_argument(std::string(what) + ": requires a finite barrier height");
    }
}

double residual_impl(Parity parity, double k, const WellGeometry& geom) {
    require_finite_barrier(geom, "constraint residual");
    const double alpha = barrier_alpha(geom);
    if (!(k > 0.0) || !(k < alpha)) {
        std::ostringstream msg;
        msg << "constraint residual: k = " << k << " outside (0, alpha = " << alpha << ")";
        throw std::domain_error(msg.str());
    }
    const double q = std::sqrt((alpha - k) * (alpha + k));
    const double x = q * geom.barrier_half_width();
    const double hyper = parity == Parity::Symmetric ? 1.0 / std::tanh(x) : std::tanh(x);
    return std::tan(k * geom.a) + (k / q) * hyper;
}

struct Bracket {
    double lo;
    double hi;
};

// Branch n of tan(k a), clipped to (0, alpha) and shrunk by the guard band.
// Returns false when the branch holds no root of the given family.
bool branch_bracket(const WellGeometry& geom, Parity parity, int n, Bracket& out) {
    const double alpha = barrier_alpha(geom);
    const double guard = kGuard / geom.a;
    const double lo = (n - 0.5) * kPi / geom.a + guard;
    const double hi = std::min(n * kPi / geom.a, alpha) - guard;
    if (!(lo < hi)) return false;
    // tan -> -inf at lo; the residual must change sign across the branch
    if (!(residual_impl(parity, lo, geom) < 0.0)) return false;
    if (!(residual_impl(parity, hi, geom) > 0.0)) return false;
    out = {lo, hi};
    return true;
}

double solve_branch(const WellGeometry& geom, Parity parity, Bracket br) {
    double lo = br.lo;
    double hi = br.hi;
    double f_lo = residual_impl(parity, lo, geom);
    double f_hi = residual_impl(parity, hi, geom);
    // Bisect to the 1e-12 target, then keep halving while the bracket still
    // shrinks in floating point: steep residuals near alpha need the extra bits.
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double f_mid = residual_impl(parity, mid, geom);
        if (f_mid == 0.0) return mid;
        if (f_mid < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
        if (hi - lo < 1e-12 && std::min(std::abs(f_lo), std::abs(f_hi)) < 1e-13) break;
    }
    // derivative-free secant polish on the final bracket
    double best = std::abs(f_lo) < std::abs(f_hi) ? lo : hi;
    double best_f = std::min(std::abs(f_lo), std::abs(f_hi));
    if (f_hi != f_lo) {
        const double s = lo - f_lo * (hi - lo) / (f_hi - f_lo);
        if (s >= lo && s <= hi) {
            const double f_s = std::abs(residual_impl(parity, s, geom));
            if (f_s <= best_f) best = s;
        }
    }
    return best;
}

Level make_level(const WellGeometry& geom, Parity parity, int n, double k) {
    const double alpha = barrier_alpha(geom);
    Level lv;
    lv.parity = parity;
    lv.n = n;
    lv.k = k;
    lv.q = std::sqrt((alpha - k) * (alpha + k));
    lv.E = 0.5 * k * k;
    return normalize_level(lv, geom);
}

// Barrier profile relative to its value at the join, cosh(qz)/cosh(qd) or
// sinh(qz)/sinh(qd), written with decaying exponentials only.
double barrier_ratio(Parity parity, double q, double d, double z) {
    const double az = std::abs(z);
    const double decay = std::exp(q * (az - d));
    if (parity == Parity::Symmetric) {
        return decay * (1.0 + std::exp(-2.0 * q * az)) / (1.0 + std::exp(-2.0 * q * d));
    }
    const double r = decay * std::expm1(-2.0 * q * az) / std::expm1(-2.0 * q * d);
    return z < 0.0 ? -r : r;
}

struct SpinWeights {
    cplx upper;  // spin-up amplitude carried in the upper well
    cplx lower;  // spin-down amplitude carried in the lower well
    SpinorValue barrier;  // spinor multiplying the barrier profile
};

SpinWeights spin_weights(Parity parity, const BlochAngles& spin) {
    const double c = std::cos(0.5 * spin.theta());
    const double s = std::sin(0.5 * spin.theta());
    const cplx e = std::polar(1.0, spin.phi());
    if (parity == Parity::Symmetric) {
        return {c, s * e, {c, s * e}};
    }
    return {s, -c * e, {s, c * e}};
}

SpinorValue eval_piecewise(Region region, Parity parity, double k, double A, double join_value, double q,
                           const WellGeometry& geom, const BlochAngles& spin, double z) {
    const SpinWeights w = spin_weights(parity, spin);
    const double wall = geom.outer_wall();
    switch (region) {
        case Region::UpperWell: {
            const double u = A * std::sin(k * (wall - z));
            return {w.upper * u, 0.0};
        }
        case Region::LowerWell: {
            const double u = A * std::sin(k * (wall + z));
            return {0.0, w.lower * u};
        }
        case Region::Barrier: {
            if (join_value == 0.0) return {0.0, 0.0};
            const double u = join_value * barrier_ratio(parity, q, geom.barrier_half_width(), z);
            return {w.barrier.up * u, w.barrier.down * u};
        }
        case Region::Outside:
            break;
    }
    return {0.0, 0.0};
}

}  // namespace

const char* to_string(Parity p) { return p == Parity::Symmetric ? "sym" : "antisym"; }

void WellGeometry::validate() const {
    if (!(a > 0.0) || !std::isfinite(a)) throw std::invalid_argument("WellGeometry: a must be positive and finite");
    if (!std::isfinite(b) || !(b - 0.5 * a > 0.0)) {
        throw std::invalid_argument("WellGeometry: need b > a/2 (nonempty barrier)");
    }
    if (!(V0 > 0.0)) throw std::invalid_argument("WellGeometry: V0 must be positive");
}

InsufficientLevels::InsufficientLevels(int requested, int available)
    : std::runtime_error("requested " + std::to_string(requested) + " bound levels but only " +
                         std::to_string(available) + " exist"),
      available_(available) {}

double barrier_alpha(const WellGeometry& geom) {
    if (geom.infinite_barrier()) return std::numeric_limits<double>::infinity();
    return std::sqrt(2.0 * geom.V0);
}

double sym_residual(double k, const WellGeometry& geom) { return residual_impl(Parity::Symmetric, k, geom); }

double antisym_residual(double k, const WellGeometry& geom) {
    return residual_impl(Parity::Antisymmetric, k, geom);
}

double constraint_residual(Parity parity, double k, const WellGeometry& geom) {
    return residual_impl(parity, k, geom);
}

int bound_level_count(const WellGeometry& geom, Parity parity) {
    require_finite_barrier(geom, "bound_level_count");
    const double alpha = barrier_alpha(geom);
    int count = 0;
    for (int n = 1; (n - 0.5) * kPi / geom.a < alpha; ++n) {
        Bracket br{};
        if (!branch_bracket(geom, parity, n, br)) break;
        ++count;
    }
    return count;
}

std::vector<Level> solve_levels(const WellGeometry& geom, Parity parity, int count) {
    require_finite_barrier(geom, "solve_levels");
    if (count < 1) throw std::invalid_argument("solve_levels: count must be >= 1");
    std::vector<Level> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int n = 1; n <= count; ++n) {
        Bracket br{};
        if (!branch_bracket(geom, parity, n, br)) {
            throw InsufficientLevels(count, n - 1);
        }
        out.push_back(make_level(geom, parity, n, solve_branch(geom, parity, br)));
    }
    return out;
}

double tunneling_gap(const WellGeometry& geom, int n) {
    require_finite_barrier(geom, "tunneling_gap");
    if (n < 1) throw std::invalid_argument("tunneling_gap: n must be >= 1");
    Bracket bs{}, ba{};
    if (!branch_bracket(geom, Parity::Symmetric, n, bs) || !branch_bracket(geom, Parity::Antisymmetric, n, ba)) {
        throw InsufficientLevels(n, std::min(bound_level_count(geom, Parity::Symmetric),
                                             bound_level_count(geom, Parity::Antisymmetric)));
    }
    const double alpha = barrier_alpha(geom);
    const double a = geom.a;
    const double d = geom.barrier_half_width();
    const double ks = solve_branch(geom, Parity::Symmetric, bs);
    const double qs = std::sqrt((alpha - ks) * (alpha + ks));
    const double gs = ks / qs;
    const double eps_c = coth_minus_one(qs * d);

    // D(delta) = R_a(ks + delta) - R_s(ks), arranged so that every term is
    // computed to full relative precision even when delta is ~1e-20 or less.
    const auto D = [&](double delta) {
        const double kd = ks + delta;
        const double qd = std::sqrt((alpha - kd) * (alpha + kd));
        if (delta > 1e-3 / a) {
            return residual_impl(Parity::Antisymmetric, kd, geom) - residual_impl(Parity::Symmetric, ks, geom);
        }
        const double tan_diff = std::sin(a * delta) / (std::cos(a * ks) * std::cos(a * kd));
        const double g_diff = alpha * alpha * delta * (ks + kd) / (qs * qd * (kd * qs + ks * qd));
        return tan_diff + g_diff - (kd / qd) * one_minus_tanh(qd * d) - gs * eps_c;
    };

    const double hi = ba.hi - ks;
    boost::uintmax_t max_iter = 300;
    const auto [x0, x1] = boost::math::tools::toms748_solve(D, 0.0, hi, D(0.0), D(hi),
                                                            boost::math::tools::eps_tolerance<double>(52),
                                                            max_iter);
    const double delta = 0.5 * (x0 + x1);
    return 0.5 * delta * (2.0 * ks + delta);
}

Level normalize_level(Level level, const WellGeometry& geom) {
    geom.validate();
    const double k = level.k;
    const double a = geom.a;
    const double d = geom.barrier_half_width();
    // one well, spatial part: int_0^a sin^2(k u) du
    const double well = 0.5 * a - std::sin(2.0 * k * a) / (4.0 * k);
    const double ska = std::sin(k * a);
    if (geom.infinite_barrier()) {
        level.q = std::numeric_limits<double>::infinity();
        level.A = 1.0 / std::sqrt(well);
        level.B = 0.0;
        return level;
    }
    const double q = level.q;
    const double x = q * d;
    // barrier integral divided by the squared join value of the profile
    double barrier;
    if (level.parity == Parity::Symmetric) {
        const double sech = 1.0 / std::cosh(x);
        barrier = d * sech * sech + std::tanh(x) / q;
    } else if (x < 1e-3) {
        barrier = d * (2.0 / 3.0 - 4.0 * x * x / 45.0);
    } else {
        const double csch = 1.0 / std::sinh(x);
        barrier = 1.0 / (q * std::tanh(x)) - d * csch * csch;
    }
    // The well amplitude pairs with cos^2 + sin^2 = 1 across the two wells,
    // and the barrier spinor is unit, so the total is spin independent.
    level.A = 1.0 / std::sqrt(well + ska * ska * barrier);
    const double join = level.A * ska;
    const double profile = level.parity == Parity::Symmetric ? std::cosh(x) : std::sinh(x);
    level.B = join / profile;
    return level;
}

Region region_of(const WellGeometry& geom, double z) {
    const double d = geom.barrier_half_width();
    const double w = geom.outer_wall();
    if (z < -w || z > w) return Region::Outside;
    if (z > d) return Region::UpperWell;
    if (z < -d) return Region::LowerWell;
    return Region::Barrier;
}

SpinorValue eval_eigenstate_in(Region region, const Level& level, const WellGeometry& geom,
                               const BlochAngles& spin, double z) {
    const double join = geom.infinite_barrier() ? 0.0 : level.A * std::sin(level.k * geom.a);
    return eval_piecewise(region, level.parity, level.k, level.A, join, level.q, geom, spin, z);
}

SpinorValue eval_eigenstate(const Level& level, const WellGeometry& geom, const BlochAngles& spin, double z) {
    return eval_eigenstate_in(region_of(geom, z), level, geom, spin, z);
}

SpinorValue infinite_well_state_in(Region region, int n, Parity parity, const WellGeometry& geom,
                                   const BlochAngles& spin, double z) {
    if (n < 1) throw std::invalid_argument("infinite_well_state: n must be >= 1");
    const double k = n * kPi / geom.a;
    return eval_piecewise(region, parity, k, std::sqrt(2.0 / geom.a), 0.0, 0.0, geom, spin, z);
}

SpinorValue infinite_well_state(int n, Parity parity, const WellGeometry& geom, const BlochAngles& spin,
                                double z) {
    return infinite_well_state_in(region_of(geom, z), n, parity, geom, spin, z);
}

// ---------------------------------------------------------------------------
// grid and inner products

WellGrid::WellGrid(const WellGeometry& geom, int total_points, double k_max) : geom_(geom) {
    geom.validate();
    if (total_points < 9) throw std::invalid_argument("WellGrid: need at least 9 points");
    const double d = geom.barrier_half_width();
    const double w = geom.outer_wall();
    const double span = 2.0 * w;
    const struct {
        Region r;
        double z0, z1;
    } parts[] = {{Region::LowerWell, -w, -d}, {Region::Barrier, -d, d}, {Region::UpperWell, d, w}};

    int offset = 0;
    for (const auto& p : parts) {
        const double len = p.z1 - p.z0;
        double want = total_points * len / span;
        if (k_max > 0.0) want = std::max(want, 40.0 * len * k_max / (2.0 * kPi));
        int pts = std::max(3, static_cast<int>(std::ceil(want)));
        if (pts % 2 == 0) ++pts;
        segments_.push_back({p.r, p.z0, p.z1, pts, offset});
        const double h = len / (pts - 1);
        for (int i = 0; i < pts; ++i) {
            nodes_.push_back(i == pts - 1 ? p.z1 : p.z0 + i * h);
            const double c = (i == 0 || i == pts - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
            weights_.push_back(c * h / 3.0);
        }
        offset += pts;
    }
}

bool WellGrid::operator==(const WellGrid& other) const {
    return geom_.a == other.geom_.a && geom_.b == other.geom_.b && nodes_ == other.nodes_ &&
           weights_ == other.weights_;
}

SpinorWave sample_eigenstate(std::shared_ptr<const WellGrid> grid, const Level& level, const BlochAngles& spin) {
    const WellGeometry geom = grid->geometry();
    return sample_wave(std::move(grid), [&](Region r, double z) { return eval_eigenstate_in(r, level, geom, spin, z); });
}

SpinorWave sample_infinite_well(std::shared_ptr<const WellGrid> grid, int n, Parity parity,
                                const BlochAngles& spin) {
    const WellGeometry geom = grid->geometry();
    return sample_wave(std::move(grid),
                       [&](Region r, double z) { return infinite_well_state_in(r, n, parity, geom, spin, z); });
}

cplx overlap(const SpinorWave& u, const SpinorWave& v) {
    if (!u.grid || !v.grid || (u.grid != v.grid && !(*u.grid == *v.grid))) {
        throw std::invalid_argument("overlap: spinor waves live on different grids");
    }
    const auto w = u.grid->weights();
    cplx acc = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        acc += w[i] * (std::conj(u.up[i]) * v.up[i] + std::conj(u.down[i]) * v.down[i]);
    }
    return acc;
}

double norm(const SpinorWave& u) { return std::sqrt(std::max(0.0, overlap(u, u).real())); }

namespace {

void axpy(SpinorWave& y, cplx c, const SpinorWave& x) {
    for (std::size_t i = 0; i < y.up.size(); ++i) {
        y.up[i] += c * x.up[i];
        y.down[i] += c * x.down[i];
    }
}

void scale(SpinorWave& y, double s) {
    for (std::size_t i = 0; i < y.up.size(); ++i) {
        y.up[i] *= s;
        y.down[i] *= s;
    }
}

}  // namespace

OrthonormalBasis::OrthonormalBasis(std::shared_ptr<const WellGrid> grid, const WellGeometry& geom,
                                   const BlochAngles& spin, int members)
    : grid_(std::move(grid)) {
    if (members < 1) throw std::invalid_argument("OrthonormalBasis: need at least one member");
    require_finite_barrier(geom, "OrthonormalBasis");
    if (!grid_ || grid_->geometry().a != geom.a || grid_->geometry().b != geom.b) {
        throw std::invalid_argument("OrthonormalBasis: grid does not match the geometry");
    }

    const int ns = bound_level_count(geom, Parity::Symmetric);
    const int na = bound_level_count(geom, Parity::Antisymmetric);
    bound_pairs_ = std::min(ns, na);

    struct Pending {
        Member m;
        SpinorWave w;
    };
    std::vector<Pending> pool;
    // every bound member is a candidate; the top of the spectrum may have one
    // extra symmetric level without a partner
    for (Parity p : {Parity::Symmetric, Parity::Antisymmetric}) {
        const int count = p == Parity::Symmetric ? ns : na;
        if (count == 0) continue;
        for (const Level& lv : solve_levels(geom, p, count)) {
            pool.push_back({{std::string(p == Parity::Symmetric ? "phi_s" : "phi_a") + std::to_string(lv.n), lv.E},
                            sample_eigenstate(grid_, lv, spin)});
        }
    }
    const double L = 2.0 * geom.b + geom.a;
    const SpinKet m = bloch_to_ket(spin);
    const int needed = std::max(0, members - static_cast<int>(pool.size()));
    for (int j = 0; j < needed + 1; ++j) {
        const int l = 2 * bound_pairs_ + 1 + j;
        const double kl = l * kPi / L;
        const double amp = std::sqrt(2.0 / L);
        pool.push_back({{"phi'_" + std::to_string(l), 0.5 * kl * kl},
                        sample_wave(grid_, [&](Region, double z) {
                            const double u = amp * std::cos(kl * z);
                            return SpinorValue{m.c0() * u, m.c1() * u};
                        })});
    }
    std::stable_sort(pool.begin(), pool.end(),
                     [](const Pending& x, const Pending& y) { return x.m.energy < y.m.energy; });
    if (static_cast<int>(pool.size()) > members) pool.resize(static_cast<std::size_t>(members));

    // modified Gram-Schmidt with one re-orthogonalization pass
    for (auto& item : pool) {
        SpinorWave v = std::move(item.w);
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& e : vectors_) axpy(v, -overlap(e, v), e);
        }
        const double nv = norm(v);
        if (!(nv > 1e-10)) {
            throw std::runtime_error("OrthonormalBasis: member " + item.m.label + " is linearly dependent on the grid");
        }
        scale(v, 1.0 / nv);
        vectors_.push_back(std::move(v));
        members_.push_back(item.m);
    }
}

double OrthonormalBasis::gram_deviation(int count) const {
    count = std::min(count, static_cast<int>(vectors_.size()));
    double worst = 0.0;
    for (int i = 0; i < count; ++i) {
        for (int j = 0; j < count; ++j) {
            const cplx g = overlap(vectors_[static_cast<std::size_t>(i)], vectors_[static_cast<std::size_t>(j)]);
            worst = std::max(worst, std::abs(g - (i == j ? 1.0 : 0.0)));
        }
    }
    return worst;
}

double OrthonormalBasis::projection_residual(const SpinorWave& test, int count) const {
    count = std::min(count, static_cast<int>(vectors_.size()));
    SpinorWave r = test;
    for (int i = 0; i < count; ++i) {
        const auto& e = vectors_[static_cast<std::size_t>(i)];
        axpy(r, -overlap(e, r), e);
    }
    return norm(r);
}

double completeness_residual(const SpinorWave& test, const WellGeometry& geom, const BlochAngles& spin, int N) {
    if (!test.grid) throw std::invalid_argument("completeness_residual: test wave has no grid");
    const OrthonormalBasis basis(test.grid, geom, spin, N);
    return basis.projection_residual(test, N);
}

}  // namespace protoclone
