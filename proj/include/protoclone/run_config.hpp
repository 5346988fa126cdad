#pragma once

// JSON run configuration for the command-line tool. Every key is checked:
// unknown keys, wrong types and invalid physics are rejected at load time.

#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "protoclone/doublewell_spectra.hpp"
#include "protoclone/protective_probe.hpp"
#include "protoclone/reconstruction.hpp"
#include "protoclone/stern_gerlach.hpp"
#include "protoclone/tdse_oracle.hpp"

namespace protoclone {

// Maps to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ProbeSettings {
    // explicit values win; otherwise T = adiabatic_ratio / gap and
    // coupling = weakness_ratio * (b - a/2) * gap^coupling_exponent
    std::optional<double> coupling;
    std::optional<double> T;
    double adiabatic_ratio = 100.0;
    double weakness_ratio = 1e-3;
    double coupling_exponent = 1.0;
    double epsilon_reg_rel = 1e-3;  // in units of b - a/2
    double softening_rel = 1e-3;    // in units of b - a/2
    double adiabatic_threshold = 100.0;
    double weakness_threshold = 1e-2;
};

struct PulseSettings {
    double Bi = -1.0;
    double tau = 1.0;
    double gamma = -1.0;
};

struct HiddenSettings {
    bool random = false;
    double theta = std::numbers::pi / 3.0;
    double phi = 5.0 * std::numbers::pi / 4.0;
};

struct GridSettings {
    int npts = 1024;
    double dt = 5e-3;
    int quad_points = WellGrid::kDefaultPoints;
};

struct OracleConfig {
    WellGeometry geometry{1.0, 0.6, 50.0};
    bool convergence = true;
};

struct LevelWeight {
    Parity parity = Parity::Symmetric;
    int n = 1;
    double weight = 1.0;
};

struct DiscriminateSettings {
    int trials = 100;  // per candidate state
    std::vector<LevelWeight> levels{LevelWeight{}};
};

struct CloneSettings {
    int trials = 100;        // Monte Carlo trials when noise is on
    bool fallback = false;   // accept the nearest candidate pair on inconsistency
};

struct SweepAxis {
    std::string parameter;  // dotted config path, e.g. "hidden.theta"
    std::vector<double> values;
};

struct RunConfig {
    WellGeometry geometry{1.0, 1.0, 1250.0};
    ProbeSettings probe;
    PulseSettings pulse;
    AxisPlan plan;
    HiddenSettings hidden;
    double noise_sigma_rel = 0.0;  // probe-momentum noise in units of C
    std::uint64_t seed = 1;
    int levels = 10;
    GridSettings grid;
    OracleConfig oracle;
    DiscriminateSettings discriminate;
    CloneSettings clone;
    std::vector<SweepAxis> sweep;
    std::string output = "out";
};

// Parses and validates; `origin` names the source in error messages.
RunConfig parse_config(const std::string& text, const std::string& origin = "config");
RunConfig config_from_json(const nlohmann::json& doc, const std::string& origin = "config");
RunConfig load_config(const std::string& path);

// Fully populated snapshot (defaults included); config_from_json(to_json(c)) == c.
nlohmann::json to_json(const RunConfig& cfg);

// Quantities derived from the configuration.
struct DerivedProbe {
    ProbeConfig probe;
    double gap = 0.0;
    double softening = 0.0;
};
DerivedProbe derive_probe(const RunConfig& cfg);

FieldPulse make_pulse(const RunConfig& cfg);

// Applies `value` at a dotted path of the snapshot and revalidates.
RunConfig with_override(const RunConfig& cfg, const std::string& path, double value);

}  // namespace protoclone
