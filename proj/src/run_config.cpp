#include "protoclone/run_config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace protoclone {

using nlohmann::json;

namespace {

// Source text for line lookups; empty when the config did not come from text.
struct Context {
    std::string origin;
    std::string text;

    // 1-based line of the first occurrence of "key" in the text, 0 if unknown.
    [[nodiscard]] int line_of_key(const std::string& key) const {
        if (text.empty() || key.empty()) return 0;
        const auto pos = text.find('"' + key + '"');
        if (pos == std::string::npos) return 0;
        return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(pos), '\n'));
    }

    [[noreturn]] void fail(const std::string& path, const std::string& key, const std::string& what) const {
        std::ostringstream os;
        os << origin;
        if (const int line = line_of_key(key); line > 0) os << ':' << line;
        os << ": " << (path.empty() ? std::string("<root>") : path) << ": " << what;
        throw ConfigError(os.str());
    }
};

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

// Strict reader over one JSON object. Every key read is recorded; finish()
// rejects the rest.
class Section {
public:
    Section(const json& obj, std::string path, const Context& ctx, std::string key = {})
        : obj_(obj), path_(std::move(path)), ctx_(ctx) {
        if (!obj_.is_object()) ctx_.fail(path_, key, "expected an object");
    }

    [[nodiscard]] bool has(const std::string& key) const { return obj_.contains(key); }

    double number(const std::string& key, double fallback) {
        const json* v = take(key);
        if (v == nullptr) return fallback;
        if (!v->is_number()) ctx_.fail(join(path_, key), key, "expected a number");
        const double x = v->get<double>();
        if (!std::isfinite(x)) ctx_.fail(join(path_, key), key, "must be finite");
        return x;
    }

    std::optional<double> optional_number(const std::string& key) {
        if (!has(key)) return std::nullopt;
        if (obj_.at(key).is_null()) {
            used_.push_back(key);
            return std::nullopt;
        }
        return number(key, 0.0);
    }

    long long integer(const std::string& key, long long fallback) {
        const json* v = take(key);
        if (v == nullptr) return fallback;
        if (v->is_number_integer()) return v->get<long long>();
        // sweeps write values back as doubles; accept them when integral
        if (v->is_number_float()) {
            const double x = v->get<double>();
            if (std::isfinite(x) && x == std::floor(x) && std::abs(x) < 9e15) return static_cast<long long>(x);
        }
        ctx_.fail(join(path_, key), key, "expected an integer");
    }

    std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
        const json* v = take(key);
        if (v == nullptr) return fallback;
        if (v->is_number_unsigned()) return v->get<std::uint64_t>();
        if (v->is_number_float()) {
            const double x = v->get<double>();
            if (std::isfinite(x) && x >= 0.0 && x == std::floor(x) && x < 9e15) return static_cast<std::uint64_t>(x);
        }
        ctx_.fail(join(path_, key), key, "expected a non-negative integer");
    }

    bool boolean(const std::string& key, bool fallback) {
        const json* v = take(key);
        if (v == nullptr) return fallback;
        if (!v->is_boolean()) ctx_.fail(join(path_, key), key, "expected true or false");
        return v->get<bool>();
    }

    std::string string(const std::string& key, const std::string& fallback) {
        const json* v = take(key);
        if (v == nullptr) return fallback;
        if (!v->is_string()) ctx_.fail(join(path_, key), key, "expected a string");
        return v->get<std::string>();
    }

    // Raw access for arrays and nested objects; nullptr when absent.
    const json* raw(const std::string& key) { return take(key); }

    void finish() const {
        for (const auto& [key, value] : obj_.items()) {
            if (std::find(used_.begin(), used_.end(), key) == used_.end()) {
                ctx_.fail(join(path_, key), key, "unknown key");
            }
        }
    }

    [[nodiscard]] const std::string& path() const { return path_; }

private:
    const json* take(const std::string& key) {
        used_.push_back(key);
        const auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

    const json& obj_;
    std::string path_;
    const Context& ctx_;
    std::vector<std::string> used_;
};

WellGeometry read_geometry(Section s, const WellGeometry& fallback) {
    WellGeometry g;
    g.a = s.number("a", fallback.a);
    g.b = s.number("b", fallback.b);
    g.V0 = s.number("V0", fallback.V0);
    s.finish();
    return g;
}

void check(bool ok, const Context& ctx, const std::string& path, const std::string& what) {
    if (!ok) {
        const auto dot = path.rfind('.');
        ctx.fail(path, dot == std::string::npos ? path : path.substr(dot + 1), what);
    }
}

// Runs a library validate() and turns its exception into a ConfigError.
template <class F>
void validate_with(const Context& ctx, const std::string& path, F&& f) {
    try {
        f();
    } catch (const std::exception& e) {
        check(false, ctx, path, e.what());
    }
}

void validate_geometry(const WellGeometry& g, const Context& ctx, const std::string& path) {
    validate_with(ctx, path, [&] { g.validate(); });
    if (bound_level_count(g, Parity::Symmetric) < 1 || bound_level_count(g, Parity::Antisymmetric) < 1) {
        check(false, ctx, path, "barrier too low: no bound level pair");
    }
}

bool power_of_two(long long n) { return n > 0 && (n & (n - 1)) == 0; }

RunConfig parse_document(const json& doc, const Context& ctx) {
    RunConfig cfg;
    Section root(doc, "", ctx);

    if (const json* g = root.raw("geometry")) {
        cfg.geometry = read_geometry(Section(*g, "geometry", ctx, "geometry"), cfg.geometry);
    }
    validate_geometry(cfg.geometry, ctx, "geometry");

    if (const json* p = root.raw("probe")) {
        Section s(*p, "probe", ctx, "probe");
        auto& pr = cfg.probe;
        pr.coupling = s.optional_number("coupling");
        pr.T = s.optional_number("T");
        pr.adiabatic_ratio = s.number("adiabatic_ratio", pr.adiabatic_ratio);
        pr.weakness_ratio = s.number("weakness_ratio", pr.weakness_ratio);
        pr.coupling_exponent = s.number("coupling_exponent", pr.coupling_exponent);
        pr.epsilon_reg_rel = s.number("epsilon_reg_rel", pr.epsilon_reg_rel);
        pr.softening_rel = s.number("softening_rel", pr.softening_rel);
        pr.adiabatic_threshold = s.number("adiabatic_threshold", pr.adiabatic_threshold);
        pr.weakness_threshold = s.number("weakness_threshold", pr.weakness_threshold);
        s.finish();
    }
    {
        const auto& pr = cfg.probe;
        check(!pr.coupling || *pr.coupling > 0.0, ctx, "probe.coupling", "must be positive");
        check(!pr.T || *pr.T > 0.0, ctx, "probe.T", "must be positive");
        check(pr.adiabatic_ratio > 0.0, ctx, "probe.adiabatic_ratio", "must be positive");
        check(pr.weakness_ratio > 0.0, ctx, "probe.weakness_ratio", "must be positive");
        check(pr.coupling_exponent >= 1.0, ctx, "probe.coupling_exponent", "must be >= 1");
        check(pr.epsilon_reg_rel > 0.0 && pr.epsilon_reg_rel < 0.5, ctx, "probe.epsilon_reg_rel",
              "must lie in (0, 0.5)");
        check(pr.softening_rel > 0.0 && pr.softening_rel < 0.5, ctx, "probe.softening_rel", "must lie in (0, 0.5)");
        check(pr.adiabatic_threshold > 0.0, ctx, "probe.adiabatic_threshold", "must be positive");
        check(pr.weakness_threshold > 0.0, ctx, "probe.weakness_threshold", "must be positive");
    }

    if (const json* p = root.raw("pulse")) {
        Section s(*p, "pulse", ctx, "pulse");
        cfg.pulse.Bi = s.number("Bi", cfg.pulse.Bi);
        cfg.pulse.tau = s.number("tau", cfg.pulse.tau);
        cfg.pulse.gamma = s.number("gamma", cfg.pulse.gamma);
        s.finish();
    }
    validate_with(ctx, "pulse", [&] { make_pulse(cfg).validate(); });
    check(cfg.pulse.Bi != 0.0, ctx, "pulse.Bi", "must be nonzero");

    if (const json* p = root.raw("axis_plan")) {
        Section s(*p, "axis_plan", ctx, "axis_plan");
        const double tn = s.number("theta_n", cfg.plan.n_axis.theta());
        const double pn = s.number("phi_n", cfg.plan.n_axis.phi());
        const double tl = s.number("theta_l", cfg.plan.l_axis.theta());
        const double pl = s.number("phi_l", cfg.plan.l_axis.phi());
        s.finish();
        check(tn >= 0.0 && tn <= std::numbers::pi, ctx, "axis_plan.theta_n", "must lie in [0, pi]");
        check(tl >= 0.0 && tl <= std::numbers::pi, ctx, "axis_plan.theta_l", "must lie in [0, pi]");
        cfg.plan.n_axis = BlochAngles(tn, pn);
        cfg.plan.l_axis = BlochAngles(tl, pl);
    }
    validate_with(ctx, "axis_plan", [&] { cfg.plan.validate(); });

    if (const json* p = root.raw("hidden")) {
        Section s(*p, "hidden", ctx, "hidden");
        cfg.hidden.random = s.boolean("random", cfg.hidden.random);
        cfg.hidden.theta = s.number("theta", cfg.hidden.theta);
        cfg.hidden.phi = s.number("phi", cfg.hidden.phi);
        s.finish();
        check(cfg.hidden.theta >= 0.0 && cfg.hidden.theta <= std::numbers::pi, ctx, "hidden.theta",
              "must lie in [0, pi]");
    }

    if (const json* p = root.raw("noise")) {
        Section s(*p, "noise", ctx, "noise");
        cfg.noise_sigma_rel = s.number("sigma_rel", cfg.noise_sigma_rel);
        s.finish();
        check(cfg.noise_sigma_rel >= 0.0, ctx, "noise.sigma_rel", "must be >= 0");
    }

    cfg.seed = root.unsigned_integer("seed", cfg.seed);
    const long long levels = root.integer("levels", cfg.levels);
    check(levels >= 1 && levels <= 100000, ctx, "levels", "must be a positive integer");
    cfg.levels = static_cast<int>(levels);
    {
        const int avail = std::min(bound_level_count(cfg.geometry, Parity::Symmetric),
                                   bound_level_count(cfg.geometry, Parity::Antisymmetric));
        check(cfg.levels <= avail, ctx, "levels",
              "requests " + std::to_string(cfg.levels) + " level pairs but only " + std::to_string(avail) +
                  " are bound");
    }

    if (const json* p = root.raw("grid")) {
        Section s(*p, "grid", ctx, "grid");
        const long long npts = s.integer("npts", cfg.grid.npts);
        cfg.grid.dt = s.number("dt", cfg.grid.dt);
        const long long quad = s.integer("quad_points", cfg.grid.quad_points);
        s.finish();
        check(power_of_two(npts) && npts >= 1024 && npts <= (1 << 22), ctx, "grid.npts",
              "must be a power of two >= 1024");
        check(quad >= 64 && quad <= (1 << 24), ctx, "grid.quad_points", "must lie in [64, 2^24]");
        cfg.grid.npts = static_cast<int>(npts);
        cfg.grid.quad_points = static_cast<int>(quad);
    }
    check(cfg.grid.dt > 0.0, ctx, "grid.dt", "must be positive");

    if (const json* p = root.raw("oracle")) {
        Section s(*p, "oracle", ctx, "oracle");
        if (const json* g = s.raw("geometry")) {
            cfg.oracle.geometry = read_geometry(Section(*g, "oracle.geometry", ctx, "geometry"), cfg.oracle.geometry);
        }
        cfg.oracle.convergence = s.boolean("convergence", cfg.oracle.convergence);
        s.finish();
    }
    validate_geometry(cfg.oracle.geometry, ctx, "oracle.geometry");

    if (const json* p = root.raw("discriminate")) {
        Section s(*p, "discriminate", ctx, "discriminate");
        const long long trials = s.integer("trials", cfg.discriminate.trials);
        check(trials >= 1 && trials <= 100000000, ctx, "discriminate.trials", "must be a positive integer");
        cfg.discriminate.trials = static_cast<int>(trials);
        if (const json* lv = s.raw("levels")) {
            check(lv->is_array() && !lv->empty(), ctx, "discriminate.levels", "expected a non-empty array");
            cfg.discriminate.levels.clear();
            for (std::size_t i = 0; i < lv->size(); ++i) {
                const std::string path = "discriminate.levels[" + std::to_string(i) + "]";
                Section e((*lv)[i], path, ctx, "levels");
                LevelWeight w;
                const std::string parity = e.string("parity", "sym");
                if (parity == "sym") {
                    w.parity = Parity::Symmetric;
                } else if (parity == "antisym") {
                    w.parity = Parity::Antisymmetric;
                } else {
                    ctx.fail(path + ".parity", "parity", "expected \"sym\" or \"antisym\"");
                }
                const long long n = e.integer("n", 1);
                w.weight = e.number("weight", 1.0);
                e.finish();
                check(n >= 1 && n <= bound_level_count(cfg.geometry, w.parity), ctx, path + ".n",
                      "no such bound level");
                w.n = static_cast<int>(n);
                cfg.discriminate.levels.push_back(w);
            }
        }
        s.finish();
    }
    {
        double sum = 0.0;
        for (const auto& w : cfg.discriminate.levels) sum += w.weight * w.weight;
        check(std::abs(sum - 1.0) <= 1e-9, ctx, "discriminate.levels", "weights must satisfy sum w^2 = 1");
    }

    if (const json* p = root.raw("clone")) {
        Section s(*p, "clone", ctx, "clone");
        const long long trials = s.integer("trials", cfg.clone.trials);
        check(trials >= 0 && trials <= 100000000, ctx, "clone.trials", "must be a non-negative integer");
        cfg.clone.trials = static_cast<int>(trials);
        cfg.clone.fallback = s.boolean("fallback", cfg.clone.fallback);
        s.finish();
    }

    if (const json* p = root.raw("sweep")) {
        check(p->is_array(), ctx, "sweep", "expected an array of axes");
        for (std::size_t i = 0; i < p->size(); ++i) {
            const std::string path = "sweep[" + std::to_string(i) + "]";
            Section e((*p)[i], path, ctx, "sweep");
            SweepAxis axis;
            axis.parameter = e.string("parameter", "");
            check(!axis.parameter.empty(), ctx, path + ".parameter", "required");
            if (const json* vals = e.raw("values")) {
                check(vals->is_array(), ctx, path + ".values", "expected an array of numbers");
                for (const auto& v : *vals) {
                    check(v.is_number() && std::isfinite(v.get<double>()), ctx, path + ".values",
                          "expected finite numbers");
                    axis.values.push_back(v.get<double>());
                }
            }
            if (e.has("start") || e.has("stop") || e.has("count")) {
                check(axis.values.empty(), ctx, path, "give either values or start/stop/count");
                const double start = e.number("start", 0.0);
                const double stop = e.number("stop", 0.0);
                const long long count = e.integer("count", 0);
                check(count >= 0 && count <= 1000000, ctx, path + ".count", "must be a non-negative integer");
                for (long long j = 0; j < count; ++j) {
                    const double t = count == 1 ? 0.0 : static_cast<double>(j) / static_cast<double>(count - 1);
                    axis.values.push_back(j == count - 1 && count > 1 ? stop : start + t * (stop - start));
                }
            }
            e.finish();
            check(!axis.values.empty(), ctx, path, "empty sweep range");
            cfg.sweep.push_back(std::move(axis));
        }
    }

    cfg.output = root.string("output", cfg.output);
    check(!cfg.output.empty(), ctx, "output", "must not be empty");
    root.finish();
    return cfg;
}

std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> parts;
    std::string cur;
    for (const char c : path) {
        if (c == '.') {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    parts.push_back(cur);
    return parts;
}

}  // namespace

RunConfig config_from_json(const json& doc, const std::string& origin) {
    const Context ctx{origin, {}};
    return parse_document(doc, ctx);
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        // e.byte is 1-based and points just past the offending character
        const std::size_t upto = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
        const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(upto), '\n');
        std::string what = e.what();
        // drop the library prefix "[json.exception.parse_error.101] "
        if (const auto p = what.find("] "); p != std::string::npos) what = what.substr(p + 2);
        throw ConfigError(origin + ":" + std::to_string(line) + ": " + what);
    }
    const Context ctx{origin, text};
    return parse_document(doc, ctx);
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path + ": cannot open config file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

json to_json(const RunConfig& cfg) {
    const auto geometry = [](const WellGeometry& g) { return json{{"a", g.a}, {"b", g.b}, {"V0", g.V0}}; };
    json probe{{"adiabatic_ratio", cfg.probe.adiabatic_ratio},
               {"weakness_ratio", cfg.probe.weakness_ratio},
               {"coupling_exponent", cfg.probe.coupling_exponent},
               {"epsilon_reg_rel", cfg.probe.epsilon_reg_rel},
               {"softening_rel", cfg.probe.softening_rel},
               {"adiabatic_threshold", cfg.probe.adiabatic_threshold},
               {"weakness_threshold", cfg.probe.weakness_threshold}};
    probe["coupling"] = cfg.probe.coupling ? json(*cfg.probe.coupling) : json(nullptr);
    probe["T"] = cfg.probe.T ? json(*cfg.probe.T) : json(nullptr);

    json levels = json::array();
    for (const auto& w : cfg.discriminate.levels) {
        levels.push_back({{"parity", to_string(w.parity)}, {"n", w.n}, {"weight", w.weight}});
    }
    json sweep = json::array();
    for (const auto& ax : cfg.sweep) sweep.push_back({{"parameter", ax.parameter}, {"values", ax.values}});

    return json{
        {"geometry", geometry(cfg.geometry)},
        {"probe", probe},
        {"pulse", {{"Bi", cfg.pulse.Bi}, {"tau", cfg.pulse.tau}, {"gamma", cfg.pulse.gamma}}},
        {"axis_plan",
         {{"theta_n", cfg.plan.n_axis.theta()},
          {"phi_n", cfg.plan.n_axis.phi()},
          {"theta_l", cfg.plan.l_axis.theta()},
          {"phi_l", cfg.plan.l_axis.phi()}}},
        {"hidden", {{"random", cfg.hidden.random}, {"theta", cfg.hidden.theta}, {"phi", cfg.hidden.phi}}},
        {"noise", {{"sigma_rel", cfg.noise_sigma_rel}}},
        {"seed", cfg.seed},
        {"levels", cfg.levels},
        {"grid", {{"npts", cfg.grid.npts}, {"dt", cfg.grid.dt}, {"quad_points", cfg.grid.quad_points}}},
        {"oracle", {{"geometry", geometry(cfg.oracle.geometry)}, {"convergence", cfg.oracle.convergence}}},
        {"discriminate", {{"trials", cfg.discriminate.trials}, {"levels", levels}}},
        {"clone", {{"trials", cfg.clone.trials}, {"fallback", cfg.clone.fallback}}},
        {"sweep", sweep},
        {"output", cfg.output},
    };
}

DerivedProbe derive_probe(const RunConfig& cfg) {
    DerivedProbe out;
    const double d = cfg.geometry.barrier_half_width();
    out.gap = tunneling_gap(cfg.geometry);
    out.softening = cfg.probe.softening_rel * d;
    auto& p = out.probe;
    p.T = cfg.probe.T ? *cfg.probe.T : cfg.probe.adiabatic_ratio / out.gap;
    p.coupling = cfg.probe.coupling ? *cfg.probe.coupling
                                    : cfg.probe.weakness_ratio * d * std::pow(out.gap, cfg.probe.coupling_exponent);
    p.epsilon_reg = cfg.probe.epsilon_reg_rel * d;
    p.adiabatic_threshold = cfg.probe.adiabatic_threshold;
    p.weakness_threshold = cfg.probe.weakness_threshold;
    p.validate();
    return out;
}

FieldPulse make_pulse(const RunConfig& cfg) {
    FieldPulse p;
    p.Bi = cfg.pulse.Bi;
    p.tau = cfg.pulse.tau;
    p.gamma = cfg.pulse.gamma;
    return p;
}

RunConfig with_override(const RunConfig& cfg, const std::string& path, double value) {
    json doc = to_json(cfg);
    json* node = &doc;
    const auto parts = split_path(path);
    for (std::size_t i = 0; i < parts.size(); ++i) {
        const auto& key = parts[i];
        if (!node->is_object() || key.empty()) throw ConfigError("sweep: invalid parameter path '" + path + "'");
        if (i + 1 < parts.size()) {
            if (!node->contains(key)) throw ConfigError("sweep: unknown parameter '" + path + "'");
            node = &(*node)[key];
        } else {
            if (!node->contains(key)) throw ConfigError("sweep: unknown parameter '" + path + "'");
            json& leaf = (*node)[key];
            if (!leaf.is_number() && !leaf.is_null()) {
                throw ConfigError("sweep: parameter '" + path + "' is not numeric");
            }
            leaf = value;
        }
    }
    // a sweep over the parameters must not recurse into nested sweeps
    doc["sweep"] = json::array();
    return config_from_json(doc, "sweep[" + path + "=" + std::to_string(value) + "]");
}

}  // namespace protoclone
