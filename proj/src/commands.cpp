#include "protoclone/commands.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <random>
#include <thread>

#include "protoclone/doublewell_spectra.hpp"
#include "protoclone/protective_probe.hpp"
#include "protoclone/reconstruction.hpp"
#include "protoclone/tdse_oracle.hpp"

namespace protoclone {

using nlohmann::json;
namespace fs = std::filesystem;

std::string format_number(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::add_row(std::vector<std::string> cells) {
    if (cells.size() != header_.size()) throw std::logic_error("CsvTable: row width does not match the header");
    rows_.push_back(std::move(cells));
}

namespace {

std::string csv_cell(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (const char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + '"';
}

void append_line(std::string& out, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i > 0) out += ',';
        out += csv_cell(cells[i]);
    }
    out += '\n';
}

}  // namespace

std::string CsvTable::str() const {
    std::string out;
    append_line(out, header_);
    for (const auto& r : rows_) append_line(out, r);
    return out;
}

void CsvTable::write(const fs::path& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << str();
}

namespace {

constexpr double kPi = std::numbers::pi;

std::string num(double x) { return format_number(x); }
std::string num(long long x) { return std::to_string(x); }
std::string flag(bool b) { return b ? "1" : "0"; }

class Stopwatch {
public:
    explicit Stopwatch(RunRecord& record) : record_(record), last_(Clock::now()) {}

    void lap(const std::string& stage) {
        const auto now = Clock::now();
        record_.timings.emplace_back(stage, std::chrono::duration<double>(now - last_).count());
        last_ = now;
    }

private:
    using Clock = std::chrono::steady_clock;
    RunRecord& record_;
    Clock::time_point last_;
};

void add_warnings(std::vector<std::string>& into, const std::vector<std::string>& more,
                  const std::string& prefix = {}) {
    for (const auto& w : more) {
        const std::string s = prefix + w;
        if (std::find(into.begin(), into.end(), s) == into.end()) into.push_back(s);
    }
}

struct Physics {
    DerivedProbe derived;
    Level s1;
    double C = 0.0;
};

Physics prepare(const RunConfig& cfg) {
    Physics p;
    p.derived = derive_probe(cfg);
    p.s1 = solve_levels(cfg.geometry, Parity::Symmetric, 1).front();
    p.C = calibration_constant(cfg.geometry, p.s1, p.derived.probe);
    return p;
}

BlochAngles hidden_state(const RunConfig& cfg, std::mt19937_64& rng) {
    if (!cfg.hidden.random) return {cfg.hidden.theta, cfg.hidden.phi};
    std::uniform_real_distribution<double> th(0.1, kPi - 0.1);
    std::uniform_real_distribution<double> ph(0.0, 2.0 * kPi);
    const double theta = th(rng);
    return {theta, ph(rng)};
}

json probe_json(const Physics& p) {
    return json{{"gap", p.derived.gap},
                {"T", p.derived.probe.T},
                {"coupling", p.derived.probe.coupling},
                {"epsilon_reg", p.derived.probe.epsilon_reg},
                {"C", p.C},
                {"k_s1", p.s1.k},
                {"A_s1", p.s1.A}};
}

RunRecord begin_record(const RunConfig& cfg, const std::string& command) {
    RunRecord r;
    r.command = command;
    r.config = to_json(cfg);
    r.config_hash = config_hash(r.config);
    r.seed = cfg.seed;
    return r;
}

std::ostream* logger(const RunContext& ctx) { return ctx.quiet ? nullptr : ctx.log; }

// Runs `body` with the output directory in place; failures become exit code
// 1 (2 for configuration errors) and are recorded rather than rethrown.
template <class F>
CommandResult guarded(const RunConfig& cfg, const RunContext& ctx, const std::string& command, F&& body) {
    CommandResult res;
    res.record = begin_record(cfg, command);
    fs::create_directories(ctx.out_dir);
    Stopwatch sw(res.record);
    try {
        body(res, sw);
    } catch (const ConfigError& e) {
        res.exit_code = kExitUsage;
        res.record.results["error"] = e.what();
    } catch (const std::exception& e) {
        res.exit_code = kExitFailure;
        res.record.results["error"] = e.what();
    }
    res.record.exit_code = res.exit_code;
    std::string stem = command;
    std::replace(stem.begin(), stem.end(), '-', '_');
    const fs::path path = ctx.out_dir / (stem + "_record.json");
    write_record(res.record, path.string());
    res.files.push_back(path);
    return res;
}

void write_table(CommandResult& res, const RunContext& ctx, const CsvTable& table, const std::string& name) {
    const fs::path path = ctx.out_dir / name;
    table.write(path);
    res.files.push_back(path);
}

}  // namespace

// ---------------------------------------------------------------------------

CommandResult cmd_spectrum(const RunConfig& cfg, const RunContext& ctx) {
    return guarded(cfg, ctx, "spectrum", [&](CommandResult& res, Stopwatch& sw) {
        const auto& g = cfg.geometry;
        const auto sym = solve_levels(g, Parity::Symmetric, cfg.levels);
        const auto anti = solve_levels(g, Parity::Antisymmetric, cfg.levels);
        sw.lap("solve");
        std::vector<double> gaps;
        for (int n = 1; n <= cfg.levels; ++n) gaps.push_back(tunneling_gap(g, n));
        sw.lap("gaps");

        // E - E_s1 stays resolvable where E_a and E_s coincide in double
        CsvTable table({"label", "parity", "n", "k", "q", "E", "E_minus_Es1", "A", "B", "gap"});
        const double k1 = sym.front().k;
        for (int i = 0; i < cfg.levels; ++i) {
            const Level& s = sym[static_cast<std::size_t>(i)];
            const Level& a = anti[static_cast<std::size_t>(i)];
            const double gap = gaps[static_cast<std::size_t>(i)];
            const double excit = 0.5 * (s.k - k1) * (s.k + k1);
            for (const Level* lv : {&s, &a}) {
                const bool is_sym = lv->parity == Parity::Symmetric;
                table.add_row({std::string(is_sym ? "s" : "a") + std::to_string(lv->n), to_string(lv->parity),
                               num(static_cast<long long>(lv->n)), num(lv->k), num(lv->q), num(lv->E),
                               num(is_sym ? excit : excit + gap), num(lv->A), num(lv->B), num(gap)});
            }
        }
        write_table(res, ctx, table, "spectrum.csv");

        res.record.results = json{{"gap", gaps.front()},
                                  {"E_s1", sym.front().E},
                                  {"k_s1", sym.front().k},
                                  {"level_pairs", cfg.levels},
                                  {"bound_sym", bound_level_count(g, Parity::Symmetric)},
                                  {"bound_antisym", bound_level_count(g, Parity::Antisymmetric)}};
        if (auto* log = logger(ctx)) {
            *log << "spectrum: " << cfg.levels << " level pairs, E_s1 = " << num(sym.front().E)
                 << ", gap = " << num(gaps.front()) << "\n";
        }
    });
}

CommandResult cmd_kick_curve(const RunConfig& cfg, const RunContext& ctx) {
    return guarded(cfg, ctx, "kick-curve", [&](CommandResult& res, Stopwatch& sw) {
        const Physics ph = prepare(cfg);
        sw.lap("prepare");
        constexpr int kSteps = 18;  // 19 points, 10 degrees apart
        std::vector<double> theta, cosv, p;
        for (int j = 0; j <= kSteps; ++j) {
            const double t = j == kSteps ? kPi : j * kPi / kSteps;
            const KickResult k = probe_momentum(BlochAngles(t, 0.0), cfg.geometry, ph.s1, ph.derived.probe);
            add_warnings(res.record.warnings, k.warnings);
            theta.push_back(t);
            cosv.push_back(std::cos(t));
            p.push_back(k.p_final);
        }
        sw.lap("probe");
        // least-squares line through the origin
        double spc = 0.0, scc = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            spc += p[i] * cosv[i];
            scc += cosv[i] * cosv[i];
        }
        const double slope = spc / scc;
        double max_res = 0.0;
        CsvTable table({"theta", "cos_theta", "p_final", "fit", "residual"});
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double fit = slope * cosv[i];
            max_res = std::max(max_res, std::abs(p[i] - fit));
            table.add_row({num(theta[i]), num(cosv[i]), num(p[i]), num(fit), num(p[i] - fit)});
        }
        write_table(res, ctx, table, "kick_curve.csv");

        const double slope_dev = std::abs(slope + ph.C) / ph.C;
        const double res_rel = max_res / ph.C;
        CsvTable fit({"slope", "C", "slope_deviation_rel", "max_residual_rel"});
        fit.add_row({num(slope), num(ph.C), num(slope_dev), num(res_rel)});
        write_table(res, ctx, fit, "kick_curve_fit.csv");

        res.record.results = probe_json(ph);
        res.record.results["slope"] = slope;
        res.record.results["slope_deviation_rel"] = slope_dev;
        res.record.results["max_residual_rel"] = res_rel;
        if (auto* log = logger(ctx)) {
            *log << "kick-curve: slope = " << num(slope) << ", -C = " << num(-ph.C)
                 << ", max residual / C = " << num(res_rel) << "\n";
        }
    });
}

CommandResult cmd_clone(const RunConfig& cfg, const RunContext& ctx) {
    return guarded(cfg, ctx, "clone", [&](CommandResult& res, Stopwatch& sw) {
        const Physics ph = prepare(cfg);
        sw.lap("prepare");
        std::mt19937_64 rng(cfg.seed);
        const BlochAngles hidden = hidden_state(cfg, rng);
        const double sigma = cfg.noise_sigma_rel * ph.C;
        res.record.results = probe_json(ph);
        res.record.results["hidden"] = {{"theta", hidden.theta()}, {"phi", hidden.phi()}};
        res.record.results["sigma"] = sigma;

        const Estimate e = clone_state(hidden, cfg.plan, cfg.geometry, ph.s1, ph.derived.probe, sigma,
                                       sigma > 0.0 ? &rng : nullptr, CloneOptions{cfg.clone.fallback});
        sw.lap("clone");
        add_warnings(res.record.warnings, e.warnings);
        const BlochAngles est(e.theta_hat, e.phi_hat);
        const double err = angular_error(hidden, est);
        const double fidelity = std::norm(bloch_to_ket(hidden).inner(e.prepared_clone));

        CsvTable table({"theta", "phi", "theta_hat", "phi_hat", "angular_error", "fidelity", "pole_flag", "clamped",
                        "fallback_used", "cos_z", "cos_n", "cos_l", "phi_n_1", "phi_n_2", "phi_l_1", "phi_l_2"});
        table.add_row({num(hidden.theta()), num(hidden.phi()), num(e.theta_hat), num(e.phi_hat), num(err),
                       num(fidelity), flag(e.pole_flag), flag(e.clamped), flag(e.fallback_used),
                       num(e.measurements[0]), num(e.measurements[1]), num(e.measurements[2]),
                       num(e.phi_candidates_n[0]), num(e.phi_candidates_n[1]), num(e.phi_candidates_l[0]),
                       num(e.phi_candidates_l[1])});
        write_table(res, ctx, table, "clone.csv");
        res.record.results["estimate"] = {{"theta_hat", e.theta_hat}, {"phi_hat", e.phi_hat},
                                          {"angular_error", err},    {"fidelity", fidelity},
                                          {"pole_flag", e.pole_flag}, {"fallback_used", e.fallback_used}};

        if (sigma > 0.0 && cfg.clone.trials > 0) {
            const MonteCarloSummary mc = clone_monte_carlo(cfg.plan, cfg.geometry, ph.s1, ph.derived.probe, sigma,
                                                           cfg.clone.trials, cfg.seed);
            sw.lap("monte_carlo");
            CsvTable mct({"sigma_rel", "sigma", "trials", "failures", "rms_error", "max_error"});
            mct.add_row({num(cfg.noise_sigma_rel), num(sigma), num(static_cast<long long>(mc.trials)),
                         num(static_cast<long long>(mc.failures)), num(mc.rms_error), num(mc.max_error)});
            write_table(res, ctx, mct, "clone_monte_carlo.csv");
            res.record.results["monte_carlo"] = {{"trials", mc.trials},
                                                 {"failures", mc.failures},
                                                 {"rms_error", mc.rms_error},
                                                 {"max_error", mc.max_error}};
        }
        if (auto* log = logger(ctx)) {
            *log << "clone: hidden (" << num(hidden.theta()) << ", " << num(hidden.phi()) << ") -> estimate ("
                 << num(e.theta_hat) << ", " << num(e.phi_hat) << "), angular error " << num(err)
                 << (e.pole_flag ? " [pole]" : "") << "\n";
        }
    });
}

CommandResult cmd_discriminate(const RunConfig& cfg, const RunContext& ctx) {
    return guarded(cfg, ctx, "discriminate", [&](CommandResult& res, Stopwatch& sw) {
        const DerivedProbe dp = derive_probe(cfg);
        std::vector<Level> levels;
        std::vector<cplx> weights;
        for (const auto& w : cfg.discriminate.levels) {
            levels.push_back(solve_levels(cfg.geometry, w.parity, w.n).back());
            weights.emplace_back(w.weight, 0.0);
        }
        const Discriminator disc(cfg.geometry, levels, weights, dp.probe);
        sw.lap("prepare");
        const double sigma = cfg.noise_sigma_rel * std::abs(disc.zero_response());
        const BlochAngles zero(0.0, 0.0);
        const BlochAngles plus(0.5 * kPi, 0.0);

        std::mt19937_64 rng(cfg.seed);
        long long confusion[2][2] = {{0, 0}, {0, 0}};  // [truth][predicted], 0 = |0>, 1 = |+>
        for (int i = 0; i < cfg.discriminate.trials; ++i) {
            confusion[0][disc(zero, sigma, rng) == Candidate::Zero ? 0 : 1] += 1;
            confusion[1][disc(plus, sigma, rng) == Candidate::Zero ? 0 : 1] += 1;
        }
        sw.lap("trials");
        const double total = 2.0 * cfg.discriminate.trials;
        const double errors = static_cast<double>(confusion[0][1] + confusion[1][0]);
        // each hypothesis sits |zero_response| / 2 from the threshold
        const double expected = sigma > 0.0 ? 0.5 * std::erfc(std::abs(disc.zero_response()) /
                                                              (2.0 * sigma * std::numbers::sqrt2))
                                            : 0.0;

        CsvTable table({"truth", "predicted_zero", "predicted_plus"});
        table.add_row({"zero", num(confusion[0][0]), num(confusion[0][1])});
        table.add_row({"plus", num(confusion[1][0]), num(confusion[1][1])});
        write_table(res, ctx, table, "discriminate.csv");

        res.record.results = json{{"gap", dp.gap},
                                  {"zero_response", disc.zero_response()},
                                  {"threshold", 0.5 * disc.zero_response()},
                                  {"sigma", sigma},
                                  {"trials_per_state", cfg.discriminate.trials},
                                  {"confusion", {{confusion[0][0], confusion[0][1]}, {confusion[1][0], confusion[1][1]}}},
                                  {"accuracy", 1.0 - errors / total},
                                  {"error_rate", errors / total},
                                  {"expected_error_rate", expected}};
        if (auto* log = logger(ctx)) {
            *log << "discriminate: accuracy " << num(1.0 - errors / total) << " over " << num(total)
                 << " trials (expected error rate " << num(expected) << ")\n";
        }
    });
}

CommandResult cmd_oracle(const RunConfig& cfg, const RunContext& ctx) {
    return guarded(cfg, ctx, "oracle", [&](CommandResult& res, Stopwatch& sw) {
        OracleSettings s;
        s.oracle_geometry = cfg.oracle.geometry;
        s.demo_geometry = cfg.geometry;
        s.demo_probe = derive_probe(cfg).probe;
        if (!cfg.hidden.random) s.spin = BlochAngles(cfg.hidden.theta, cfg.hidden.phi);
        s.npts = cfg.grid.npts;
        s.dt = cfg.grid.dt;
        s.quad_points = cfg.grid.quad_points;
        s.softening_rel = cfg.probe.softening_rel;
        s.adiabatic_target = cfg.probe.adiabatic_ratio;
        s.weakness_target = cfg.probe.weakness_ratio;
        s.convergence = cfg.oracle.convergence;
        const auto rows = run_oracle_suite(s);
        sw.lap("suite");

        CsvTable table({"name", "measured", "tolerance", "pass", "detail"});
        json jrows = json::array();
        int failed = 0;
        for (const auto& r : rows) {
            table.add_row({r.name, num(r.measured), num(r.tolerance), flag(r.pass), r.detail});
            // non-finite measurements are stored as strings to keep the record lossless
            const json measured = std::isfinite(r.measured) ? json(r.measured) : json(num(r.measured));
            jrows.push_back({{"name", r.name}, {"measured", measured}, {"tolerance", r.tolerance},
                             {"pass", r.pass}, {"detail", r.detail}});
            if (!r.pass) ++failed;
        }
        write_table(res, ctx, table, "oracle.csv");
        res.record.results = json{{"rows", jrows}, {"failed", failed}};
        if (failed > 0) res.exit_code = kExitFailure;
        if (auto* log = logger(ctx)) {
            for (const auto& r : rows) {
                *log << (r.pass ? "PASS " : "FAIL ") << std::left << std::setw(32) << r.name << num(r.measured)
                     << " (tol " << num(r.tolerance) << ")\n";
            }
        }
    });
}

// ---------------------------------------------------------------------------

namespace {

struct SweepRow {
    std::vector<double> params;
    std::uint64_t seed = 0;
    RunConfig cfg;
    bool ok = false;
    std::string error;
    BlochAngles hidden;
    double gap = 0.0, E_s1 = 0.0, C = 0.0, p_final = 0.0;
    double theta_hat = 0.0, phi_hat = 0.0, angular_error = 0.0;
    bool mc_run = false;
    MonteCarloSummary mc;
    std::vector<std::string> warnings;
};

// Cartesian product of the sweep axes, last axis varying fastest. Every row
// is validated here, before anything is computed or written.
std::vector<SweepRow> build_rows(const RunConfig& cfg) {
    if (cfg.sweep.empty()) throw ConfigError("sweep: empty sweep range (no sweep axes in the config)");
    std::size_t total = 1;
    for (const auto& ax : cfg.sweep) {
        if (ax.values.empty()) throw ConfigError("sweep: empty sweep range for '" + ax.parameter + "'");
        total *= ax.values.size();
        if (total > 1000000) throw ConfigError("sweep: more than 10^6 rows");
    }
    std::vector<SweepRow> rows(total);
    for (std::size_t i = 0; i < total; ++i) {
        SweepRow& row = rows[i];
        row.params.resize(cfg.sweep.size());
        std::size_t rem = i;
        for (std::size_t a = cfg.sweep.size(); a-- > 0;) {
            const auto& vals = cfg.sweep[a].values;
            row.params[a] = vals[rem % vals.size()];
            rem /= vals.size();
        }
        row.seed = cfg.seed + i;
        RunConfig rc = cfg;
        rc.sweep.clear();
        for (std::size_t a = 0; a < cfg.sweep.size(); ++a) rc = with_override(rc, cfg.sweep[a].parameter, row.params[a]);
        rc.seed = row.seed;
        row.cfg = std::move(rc);
    }
    return rows;
}

void compute_row(SweepRow& row, std::uint64_t mc_seed) {
    const RunConfig& cfg = row.cfg;
    const Physics ph = prepare(cfg);
    std::mt19937_64 rng(row.seed);
    row.hidden = hidden_state(cfg, rng);
    row.gap = ph.derived.gap;
    row.E_s1 = ph.s1.E;
    row.C = ph.C;
    const KickResult k = probe_momentum(row.hidden, cfg.geometry, ph.s1, ph.derived.probe);
    row.p_final = k.p_final;
    add_warnings(row.warnings, k.warnings);
    const double sigma = cfg.noise_sigma_rel * ph.C;
    const Estimate e = clone_state(row.hidden, cfg.plan, cfg.geometry, ph.s1, ph.derived.probe, sigma,
                                   sigma > 0.0 ? &rng : nullptr, CloneOptions{cfg.clone.fallback});
    add_warnings(row.warnings, e.warnings);
    row.theta_hat = e.theta_hat;
    row.phi_hat = e.phi_hat;
    row.angular_error = angular_error(row.hidden, BlochAngles(e.theta_hat, e.phi_hat));
    if (cfg.clone.trials > 0) {
        // one stream for every row: noise sweeps compare like with like
        row.mc = clone_monte_carlo(cfg.plan, cfg.geometry, ph.s1, ph.derived.probe, sigma, cfg.clone.trials, mc_seed);
        row.mc_run = true;
    }
    row.ok = true;
}

std::string trend_of(const std::vector<double>& v) {
    if (v.size() < 2) return "undetermined";
    bool inc = true, dec = true, flat = true;
    for (std::size_t i = 1; i < v.size(); ++i) {
        inc = inc && v[i] > v[i - 1];
        dec = dec && v[i] < v[i - 1];
        flat = flat && v[i] == v[i - 1];
    }
    if (flat) return "constant";
    if (inc) return "increasing";
    if (dec) return "decreasing";
    return "non-monotone";
}

}  // namespace

CommandResult cmd_sweep(const RunConfig& cfg, const RunContext& ctx) {
    std::vector<SweepRow> rows;
    try {
        rows = build_rows(cfg);
    } catch (const ConfigError& e) {
        // nothing is written for an invalid sweep
        CommandResult res;
        res.exit_code = kExitUsage;
        res.record = begin_record(cfg, "sweep");
        res.record.exit_code = kExitUsage;
        res.record.results["error"] = e.what();
        return res;
    }
    return guarded(cfg, ctx, "sweep", [&](CommandResult& res, Stopwatch& sw) {
        const std::size_t jobs =
            std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(std::max(ctx.jobs, 1)), rows.size()));
        std::atomic<std::size_t> next{0};
        const auto worker = [&] {
            for (std::size_t i = next++; i < rows.size(); i = next++) {
                try {
                    compute_row(rows[i], cfg.seed);
                } catch (const std::exception& e) {
                    rows[i].ok = false;
                    rows[i].error = e.what();
                }
            }
        };
        std::vector<std::thread> pool;
        for (std::size_t t = 1; t < jobs; ++t) pool.emplace_back(worker);
        worker();
        for (auto& t : pool) t.join();
        sw.lap("rows");

        std::vector<std::string> header{"index"};
        for (const auto& ax : cfg.sweep) header.push_back(ax.parameter);
        for (const char* h : {"seed", "status", "hidden_theta", "hidden_phi", "gap", "E_s1", "C", "p_final",
                              "theta_hat", "phi_hat", "angular_error", "mc_trials", "mc_failures", "rms_error",
                              "max_error"}) {
            header.emplace_back(h);
        }
        CsvTable table(header);
        int failed = 0;
        json jrows = json::array();
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const SweepRow& r = rows[i];
            std::vector<std::string> cells{std::to_string(i)};
            for (const double p : r.params) cells.push_back(num(p));
            cells.push_back(std::to_string(r.seed));
            if (r.ok) {
                cells.insert(cells.end(), {"ok", num(r.hidden.theta()), num(r.hidden.phi()), num(r.gap),
                                           num(r.E_s1), num(r.C), num(r.p_final), num(r.theta_hat),
                                           num(r.phi_hat), num(r.angular_error)});
                if (r.mc_run) {
                    cells.insert(cells.end(), {num(static_cast<long long>(r.mc.trials)),
                                               num(static_cast<long long>(r.mc.failures)), num(r.mc.rms_error),
                                               num(r.mc.max_error)});
                } else {
                    cells.insert(cells.end(), 4, "");
                }
            } else {
                ++failed;
                cells.push_back("error: " + r.error);
                cells.insert(cells.end(), 13, "");
            }
            table.add_row(std::move(cells));
            add_warnings(res.record.warnings, r.warnings, "row " + std::to_string(i) + ": ");

            json jr{{"index", i}, {"params", r.params}, {"seed", r.seed}, {"ok", r.ok}};
            if (r.ok) {
                jr["gap"] = r.gap;
                jr["C"] = r.C;
                jr["p_final"] = r.p_final;
                jr["angular_error"] = r.angular_error;
                if (r.mc_run) jr["rms_error"] = r.mc.rms_error;
            } else {
                jr["error"] = r.error;
            }
            jrows.push_back(std::move(jr));
        }
        write_table(res, ctx, table, "sweep.csv");

        // monotone trends along a single sweep axis
        CsvTable trend({"parameter", "metric", "first", "last", "trend"});
        if (cfg.sweep.size() == 1 && failed == 0) {
            const auto add = [&](const char* metric, auto get, bool needs_mc) {
                if (needs_mc && !std::all_of(rows.begin(), rows.end(), [](const SweepRow& r) { return r.mc_run; })) {
                    return;
                }
                std::vector<double> v;
                for (const auto& r : rows) v.push_back(get(r));
                trend.add_row({cfg.sweep[0].parameter, metric, num(v.front()), num(v.back()), trend_of(v)});
            };
            add("gap", [](const SweepRow& r) { return r.gap; }, false);
            add("C", [](const SweepRow& r) { return r.C; }, false);
            add("p_final", [](const SweepRow& r) { return r.p_final; }, false);
            add("angular_error", [](const SweepRow& r) { return r.angular_error; }, false);
            add("rms_error", [](const SweepRow& r) { return r.mc.rms_error; }, true);
        }
        write_table(res, ctx, trend, "sweep_trend.csv");

        res.record.results = json{{"rows", jrows}, {"failed", failed}, {"jobs", jobs}};
        if (failed > 0) res.exit_code = kExitFailure;
        if (auto* log = logger(ctx)) {
            *log << "sweep: " << rows.size() << " rows, " << failed << " failed\n";
        }
    });
}

// ---------------------------------------------------------------------------

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"spectrum", "kick-curve", "clone", "discriminate", "oracle", "sweep"};
    return names;
}

int run_command(const std::string& name, const CommandOptions& options, std::ostream& out, std::ostream& err) {
    const auto& names = command_names();
    if (std::find(names.begin(), names.end(), name) == names.end()) {
        err << "error: unknown command '" << name << "'\n";
        return kExitUsage;
    }
    if (options.jobs < 1) {
        err << "error: --jobs must be at least 1\n";
        return kExitUsage;
    }
    RunConfig cfg;
    try {
        cfg = load_config(options.config_path);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    if (options.seed) cfg.seed = *options.seed;

    RunContext ctx;
    ctx.jobs = options.jobs;
    ctx.quiet = options.quiet;
    ctx.log = &out;
    const char* env = std::getenv("PROTOCLONE_OUT");
    if (env != nullptr && *env != '\0') {
        ctx.out_dir = env;
    } else if (options.out_dir) {
        ctx.out_dir = *options.out_dir;
    } else {
        ctx.out_dir = cfg.output;
    }

    CommandResult res;
    try {
        if (name == "spectrum") res = cmd_spectrum(cfg, ctx);
        else if (name == "kick-curve") res = cmd_kick_curve(cfg, ctx);
        else if (name == "clone") res = cmd_clone(cfg, ctx);
        else if (name == "discriminate") res = cmd_discriminate(cfg, ctx);
        else if (name == "oracle") res = cmd_oracle(cfg, ctx);
        else res = cmd_sweep(cfg, ctx);
    } catch (const std::exception& e) {
        // output directory or record I/O
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    if (res.record.results.is_object() && res.record.results.contains("error")) {
        err << "error: " << res.record.results["error"].get<std::string>() << "\n";
    }
    for (const auto& w : res.record.warnings) err << "warning: " << w << "\n";
    if (!options.quiet) {
        for (const auto& f : res.files) out << "wrote " << f.string() << "\n";
    }
    return res.exit_code;
}

}  // namespace protoclone
