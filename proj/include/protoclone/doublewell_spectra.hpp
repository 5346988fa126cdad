#pragma once

// Bound states of the symmetric finite double well
//
//   V(z) = 0   for b - a/2 < |z| < b + a/2
//   V(z) = V0  for |z| <= b - a/2
//   V(z) = inf for |z| >= b + a/2
//
// in the spin-conditioned form used by the protocol: the upper well carries
// the |0> spin component, the lower well the |1> component, and the barrier
// holds a shared evanescent tail. Natural units (hbar = M = 1), E = k^2 / 2.

#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "protoclone/spin_algebra.hpp"

namespace protoclone {

enum class Parity { Symmetric, Antisymmetric };

const char* to_string(Parity p);

struct WellGeometry {
    double a = 1.0;   // width of each well
    double b = 1.0;   // distance from the origin to each well centre
    double V0 = std::numeric_limits<double>::infinity();  // barrier height

    [[nodiscard]] double barrier_half_width() const { return b - 0.5 * a; }
    [[nodiscard]] double outer_wall() const { return b + 0.5 * a; }
    [[nodiscard]] bool infinite_barrier() const { return std::isinf(V0); }

    // Throws std::invalid_argument unless a > 0, b > a/2 and V0 > 0.
    void validate() const;
};

struct Level {
    Parity parity = Parity::Symmetric;
    int n = 1;
    double k = 0.0;  // wavenumber inside the wells
    double q = 0.0;  // decay constant in the barrier, sqrt(alpha^2 - k^2)
    double E = 0.0;  // k^2 / 2
    double A = 0.0;  // oscillatory amplitude
    double B = 0.0;  // evanescent amplitude
};

// Thrown by solve_levels when fewer bound levels exist than requested.
class InsufficientLevels : public std::runtime_error {
public:
    InsufficientLevels(int requested, int available);
    [[nodiscard]] int available() const { return available_; }

private:
    int available_;
};

// sqrt(2 V0); +inf for an infinite barrier.
double barrier_alpha(const WellGeometry& geom);

// tan(k a) + k/q coth(q (b - a/2)); zero at the symmetric-family roots.
double sym_residual(double k, const WellGeometry& geom);
// tan(k a) + k/q tanh(q (b - a/2)); zero at the antisymmetric-family roots.
double antisym_residual(double k, const WellGeometry& geom);
double constraint_residual(Parity parity, double k, const WellGeometry& geom);

// Number of bound levels of the given family (k < alpha).
int bound_level_count(const WellGeometry& geom, Parity parity);

// First `count` levels of one family, normalized, with strictly increasing k.
// Root n is bracketed in ((n - 1/2) pi / a, n pi / a).
std::vector<Level> solve_levels(const WellGeometry& geom, Parity parity, int count);

// E_an - E_sn, resolved even when it is far below double resolution of E.
double tunneling_gap(const WellGeometry& geom, int n = 1);

// Fills A and B: continuity at |z| = b - a/2 and unit total norm.
Level normalize_level(Level level, const WellGeometry& geom);

struct SpinorValue {
    cplx up;
    cplx down;
};

enum class Region { LowerWell, Barrier, UpperWell, Outside };

Region region_of(const WellGeometry& geom, double z);

// Eigenstate amplitude pair at z. Joins at |z| = b - a/2 belong to the barrier.
SpinorValue eval_eigenstate(const Level& level, const WellGeometry& geom, const BlochAngles& spin, double z);

// Same, but evaluated with the closed form of a given region (one-sided
// limits at the joins, where the paper form is discontinuous in the spin
// component that does not live in that well).
SpinorValue eval_eigenstate_in(Region region, const Level& level, const WellGeometry& geom,
                               const BlochAngles& spin, double z);

// Hard-wall state with k = n pi / a (V0 -> infinity limit).
SpinorValue infinite_well_state(int n, Parity parity, const WellGeometry& geom, const BlochAngles& spin,
                                double z);
SpinorValue infinite_well_state_in(Region region, int n, Parity parity, const WellGeometry& geom,
                                   const BlochAngles& spin, double z);

// Composite-Simpson grid over [-(b + a/2), b + a/2], split at the joins so
// that each segment integrates a smooth function.
class WellGrid {
public:
    struct Segment {
        Region region;
        double z0;
        double z1;
        int points;  // odd
        int offset;  // index of the first node in the flattened arrays
    };

    static constexpr int kDefaultPoints = 8192;

    // k_max: highest wavenumber to be resolved with >= 40 points per wavelength.
    explicit WellGrid(const WellGeometry& geom, int total_points = kDefaultPoints, double k_max = 0.0);

    [[nodiscard]] const std::vector<Segment>& segments() const { return segments_; }
    [[nodiscard]] std::span<const double> nodes() const { return nodes_; }
    [[nodiscard]] std::span<const double> weights() const { return weights_; }
    [[nodiscard]] std::size_t size() const { return nodes_.size(); }
    [[nodiscard]] const WellGeometry& geometry() const { return geom_; }

    bool operator==(const WellGrid& other) const;

private:
    WellGeometry geom_;
    std::vector<Segment> segments_;
    std::vector<double> nodes_;
    std::vector<double> weights_;
};

// Spinor-valued function sampled on a WellGrid.
struct SpinorWave {
    std::shared_ptr<const WellGrid> grid;
    std::vector<cplx> up;
    std::vector<cplx> down;
};

template <class F>
SpinorWave sample_wave(std::shared_ptr<const WellGrid> grid, F&& f) {
    SpinorWave w{grid, std::vector<cplx>(grid->size()), std::vector<cplx>(grid->size())};
    const auto z = grid->nodes();
    for (const auto& seg : grid->segments()) {
        for (int i = 0; i < seg.points; ++i) {
            const std::size_t j = static_cast<std::size_t>(seg.offset + i);
            const SpinorValue v = f(seg.region, z[j]);
            w.up[j] = v.up;
            w.down[j] = v.down;
        }
    }
    return w;
}

SpinorWave sample_eigenstate(std::shared_ptr<const WellGrid> grid, const Level& level, const BlochAngles& spin);
SpinorWave sample_infinite_well(std::shared_ptr<const WellGrid> grid, int n, Parity parity, const BlochAngles& spin);

// <u|v> by composite Simpson; throws std::invalid_argument on grid mismatch.
cplx overlap(const SpinorWave& u, const SpinorWave& v);
double norm(const SpinorWave& u);

// Energy-ordered family {phi_sk, phi_ak, phi'_l} (phi_s1 first), orthonormalized
// on the grid by Gram-Schmidt in that order. phi'_l are the above-barrier
// cosines |m> sqrt(2/L) cos(l pi z / L), L = 2b + a, for l >= 2M + 1 where M
// is the number of bound level pairs.
class OrthonormalBasis {
public:
    struct Member {
        std::string label;
        double energy;
    };

    // Members are built for `geom` (its a and b must match the grid's).
    OrthonormalBasis(std::shared_ptr<const WellGrid> grid, const WellGeometry& geom, const BlochAngles& spin,
                     int members);

    [[nodiscard]] int bound_pairs() const { return bound_pairs_; }
    [[nodiscard]] const std::vector<Member>& members() const { return members_; }
    [[nodiscard]] const std::vector<SpinorWave>& vectors() const { return vectors_; }

    // Max-norm deviation of the Gram matrix of the first `count` vectors from identity.
    [[nodiscard]] double gram_deviation(int count) const;

    // || test - P_N test || for the projector onto the first N vectors.
    [[nodiscard]] double projection_residual(const SpinorWave& test, int count) const;

private:
    std::shared_ptr<const WellGrid> grid_;
    int bound_pairs_ = 0;
    std::vector<Member> members_;
    std::vector<SpinorWave> vectors_;
};

// L2 residual of projecting `test` onto the first N orthonormalized members.
double completeness_residual(const SpinorWave& test, const WellGeometry& geom, const BlochAngles& spin, int N);

}  // namespace protoclone
