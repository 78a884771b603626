#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hypcrit/audits.hpp"
#include "hypcrit/boundary.hpp"
#include "hypcrit/convergence.hpp"
#include "hypcrit/entropy.hpp"
#include "hypcrit/lemmas.hpp"
#include "hypcrit/scenario.hpp"

namespace hypcrit {

/// Process exit codes of the batch driver.
enum ExitCode : int { exit_pass = 0, exit_check_failed = 1, exit_rejected = 2 };

struct CommandOptions {
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed; ///< overrides the scenario seed
    unsigned threads = 1;
    bool emit_witnesses = false;
    bool dirac_control = false; ///< boundary: replace μ_s by a single Dirac atom
};

struct CommandResult {
    int exit_code = exit_pass;
    json audits;
};

namespace command_detail {

inline void write_text(const std::string& dir, const std::string& name, const std::string& text) {
    std::filesystem::create_directories(dir);
    std::ofstream out(std::filesystem::path(dir) / name, std::ios::binary);
    if (!out) throw Error("cannot write " + name + " in " + dir);
    out << text;
}

inline void write_json(const std::string& dir, const std::string& name, const json& j) {
    write_text(dir, name, j.dump(2) + "\n");
}

/// Shortest round-trip decimal for CSV cells.
inline std::string num(double x) {
    json j = x;
    return j.dump();
}

inline json check_json(const InequalityCheck& c) {
    json j;
    j["name"] = c.name;
    j["pass"] = c.pass();
    j["constant"] = c.constant;
    j["tolerance"] = c.tolerance;
    j["configurations"] = c.configurations;
    j["violations"] = c.violations;
    j["max_value"] = c.configurations ? json(c.max_value) : json(nullptr);
    j["max_defect"] = c.max_defect();
    j["witness"] = c.witness ? json(*c.witness) : json(nullptr);
    return j;
}

inline json verdict(const std::string& name, bool pass, json detail = json::object()) {
    json j;
    j["name"] = name;
    j["pass"] = pass;
    for (auto& [k, v] : detail.items()) j[k] = v;
    return j;
}

/// Classifies plane generators, then certifies. Rejections carry the stage.
inline GroupAction certified_action(const Scenario& s, std::string& stage) {
    stage = "model";
    GroupAction a = s.action();
    if (a.space.kind == SpaceKind::plane) {
        stage = "classification";
        for (const auto& g : a.generators) translation_length(a.space, g);
    }
    stage = "certification";
    return certify(a);
}

inline json certification_json(const GroupAction& a) {
    json j;
    j["status"] = "certified";
    j["method"] = to_string(a.certification);
    j["systole_bound"] = a.systole_bound;
    j["declared_delta"] = a.declared_delta;
    j["declared_codiameter"] = a.declared_codiameter;
    return j;
}

inline std::pair<Length, Length> window_of(const json& block, std::pair<Length, Length> fallback) {
    if (!block.contains("window")) return fallback;
    const auto& w = block["window"];
    if (!w.is_array() || w.size() != 2) throw ScenarioError("window must be [T_min, T_max]");
    return {scenario_detail::real_value(w[0], "window"), scenario_detail::real_value(w[1], "window")};
}

inline double real_or(const json& block, const char* key, double fallback) {
    return block.is_object() && block.contains(key) ? scenario_detail::real_value(block[key], key) : fallback;
}

inline EntropyEstimate estimate_for(const OrbitBall& ball, const json& block, std::pair<Length, Length> window) {
    std::string kind = block.value("estimator", std::string("shells"));
    if (kind == "continuous") return estimate_critical_exponent_continuous(ball, window);
    if (kind != "shells") throw ScenarioError("estimator must be \"shells\" or \"continuous\"");
    EstimatorOptions eo;
    std::string method = block.value("method", std::string("regression-slope"));
    if (method == "last-ratio")
        eo.method = EstimatorMethod::last_ratio;
    else if (method != "regression-slope")
        throw ScenarioError("method must be \"regression-slope\" or \"last-ratio\"");
    eo.top_half = block.value("top_half", false);
    return estimate_critical_exponent(ball.count_by_shell, window, eo);
}

inline json estimate_json(const EntropyEstimate& e) {
    json j;
    j["h_hat"] = e.h_hat;
    j["method"] = to_string(e.method);
    j["window"] = {e.window.first, e.window.second};
    j["residual"] = e.residual;
    j["h_regression"] = e.h_regression;
    j["h_last_ratio"] = e.h_last_ratio;
    return j;
}

inline std::string counts_csv(const Counts& counts, Rate h, double K) {
    std::ostringstream out;
    out << "t,count,lower,upper\n";
    for (const auto& [t, n] : counts) {
        double e = std::exp(h * t);
        out << num(t) << ',' << n << ',' << num(e / K) << ',' << num(K * e) << '\n';
    }
    return out.str();
}

inline EnumerateOptions enumerate_options(const json& block, unsigned threads) {
    EnumerateOptions eo;
    eo.threads = threads;
    eo.shell_step = real_or(block, "shell_step", 0.0);
    return eo;
}

inline std::vector<ModelPoint> chain_pool(const GroupAction& a, const OrbitBall& ball, Length radius,
                                          std::uint64_t seed) {
    std::vector<ModelPoint> pool;
    for (const auto& e : ball.entries)
        if (detail::within(e.displacement, radius)) pool.push_back(e.point);
    Rng rng(seed);
    for (std::size_t i = 0; i < 256; ++i) pool.push_back(random_point(a.space, radius, rng));
    return pool;
}

inline int finish(json& audits, const std::vector<json>& checks, const std::string& dir) {
    bool pass = true;
    for (const auto& c : checks) pass = pass && c["pass"].get<bool>();
    audits["checks"] = checks;
    audits["pass"] = pass;
    write_json(dir, "audits.json", audits);
    return pass ? exit_pass : exit_check_failed;
}

} // namespace command_detail

/// Orbit counting, critical exponent, equidistribution constant and the
/// entropy bounds. Writes counts.csv, estimate.json and audits.json.
inline CommandResult cmd_entropy(const Scenario& s, const GroupAction& a, const CommandOptions& opt,
                                 std::uint64_t seed) {
    using namespace command_detail;
    const json block = s.entropy.is_object() ? s.entropy : json::object();
    Length T = real_or(block, "T", 10.0);
    auto window = window_of(block, {0.4 * T, T});
    OrbitBall ball = enumerate_orbit_ball(a, T, enumerate_options(block, opt.threads));
    EntropyEstimate est = estimate_for(ball, block, window);
    auto eq = equidistribution_constant(ball.count_by_shell, est.h_hat);
    auto sys = measure_systole(ball);
    write_text(opt.out_dir, "counts.csv", counts_csv(ball.count_by_shell, est.h_hat, eq.K_measured));

    json e;
    e["scenario"] = s.name;
    e["command"] = "entropy";
    e["estimate"] = estimate_json(est);
    e["orbit_points"] = ball.entries.size();
    e["elements_examined"] = ball.elements_examined;
    e["max_word_length"] = ball.max_word_length;
    e["radius"] = ball.radius;
    e["K_measured"] = eq.K_measured;
    e["K_worst_T"] = eq.worst_T;
    e["systole"] = {{"min_displacement", sys.min_displacement},
                    {"word", sys.attaining_word.str()},
                    {"upper_bound_only", sys.upper_bound_only}};

    std::vector<json> checks;
    double tol = real_or(block, "estimator_tolerance", 0.01);
    auto lb = check_entropy_lower_bound(est.h_hat, a.declared_delta, a.declared_codiameter, tol);
    checks.push_back(verdict("entropy_lower_bound", lb.pass, {{"h", lb.h}, {"bound", lb.bound}}));
    if (block.contains("expected_h")) {
        double want = scenario_detail::real_value(block["expected_h"], "expected_h");
        checks.push_back(verdict("expected_h", std::abs(est.h_hat - want) <= tol,
                                 {{"h", est.h_hat}, {"expected", want}, {"tolerance", tol}}));
    }
    if (block.contains("K_bound")) {
        double K = scenario_detail::real_value(block["K_bound"], "K_bound");
        checks.push_back(verdict("equidistribution", check_equidistribution(ball.count_by_shell, est.h_hat, K),
                                 {{"K_measured", eq.K_measured}, {"K_bound", K}}));
    }
    BoundSuiteOptions bo;
    bo.seed = seed;
    bo.configurations = block.value("chain_configurations", std::size_t{1000});
    auto chain = check_pack_cov_chain(a.space, chain_pool(a, ball, bo.chain_radius, seed), bo);
    checks.push_back(check_json(chain));
    if (block.contains("covering")) {
        const json& cv = block["covering"];
        Length r = real_or(cv, "scale", 0.5);
        auto cw = window_of(cv, window);
        std::vector<ModelPoint> Y;
        for (const auto& en : ball.entries) Y.push_back(en.point);
        auto grid = uniform_grid(real_or(cv, "step", ball.shell_step), cw.second);
        auto ce = covering_entropy_estimate(a, Y, r, grid, cw);
        e["covering_entropy"] = estimate_json(ce);
        double ctol = real_or(cv, "tolerance", 0.05);
        checks.push_back(verdict("covering_entropy_agreement", std::abs(ce.h_hat - est.h_hat) <= ctol,
                                 {{"h_cov", ce.h_hat}, {"h", est.h_hat}, {"tolerance", ctol}}));
    }
    write_json(opt.out_dir, "estimate.json", e);

    CommandResult res;
    res.audits["scenario"] = s.name;
    res.audits["command"] = "entropy";
    res.audits["seed"] = seed;
    res.audits["certification"] = certification_json(a);
    res.exit_code = finish(res.audits, checks, opt.out_dir);
    return res;
}

/// Patterson-Sullivan atoms, the Ahlfors regularity audit with the explicit
/// step bounds, and quasiconformality. Writes counts.csv, estimate.json and audits.json.
inline CommandResult cmd_boundary(const Scenario& s, const GroupAction& a, const CommandOptions& opt,
                                  std::uint64_t seed) {
    using namespace command_detail;
    const json block = s.boundary.is_object() ? s.boundary : json::object();
    const bool tree = a.space.kind == SpaceKind::tree;
    Length T = real_or(block, "T", tree ? 10.0 : 24.0);
    auto window = window_of(block, {0.4 * T, T});
    OrbitBall ball = enumerate_orbit_ball(a, T, enumerate_options(block, opt.threads));
    Rate h = block.contains("h") ? scenario_detail::real_value(block["h"], "h") : estimate_for(ball, block, window).h_hat;
    Rate sexp = real_or(block, "s", 1.2 * h);
    PattersonSullivanOptions po;
    po.projection_fraction = real_or(block, "projection_fraction", 2.0 / 3.0);
    po.h_estimate = h;
    AtomicMeasure mu = patterson_sullivan_atoms(a, ball, sexp, po);
    BallKind kind = block.value("ball_kind", std::string("closed")) == "open" ? BallKind::open : BallKind::closed;

    std::vector<AhlforsSample> samples;
    std::vector<double> rhos;
    if (tree) {
        // one center per cylinder of each depth, taken from the projected atoms
        int max_depth = block.value("max_depth", static_cast<int>(std::floor(mu.projection_depth / a.space.edge())));
        for (int n = 1; n <= max_depth; ++n) {
            double rho = std::exp(-n * a.space.edge());
            rhos.push_back(rho);
            std::set<std::string> seen;
            for (std::size_t i : mu.boundary) {
                const auto& w = std::get<TreeEnd>(*mu.atoms[i].end).word;
                if (w.size() < static_cast<std::size_t>(n)) continue;
                if (seen.insert(w.prefix(static_cast<std::size_t>(n)).key()).second)
                    samples.push_back({*mu.atoms[i].end, rho});
            }
        }
    } else {
        auto limits = limit_set_sample(a, ball, real_or(block, "limit_min_displacement", T / 2.0));
        std::size_t centers = block.value("centers", std::size_t{64});
        Rng rng(seed);
        std::uniform_int_distribution<std::size_t> pick(0, limits.size() - 1);
        int max_depth = block.value("max_depth", 4);
        for (int n = 1; n <= max_depth; ++n) {
            double rho = std::exp(-static_cast<double>(n));
            rhos.push_back(rho);
            for (std::size_t c = 0; c < centers; ++c) samples.push_back({limits[pick(rng)], rho});
        }
    }
    if (opt.dirac_control) mu = dirac_measure(samples.front().center);
    auto shadow_elements = sigma_R(ball, real_or(block, "shadow_radius", T / 2.0));
    auto ahl = check_ahlfors_regularity(a, mu, h, samples, shadow_elements, kind);

    QuasiconformalityReport qc;
    if (!opt.dirac_control) {
        if (tree) {
            std::vector<Word> cells;
            detail::for_each_reduced_word(a.rank(), 3, [&](const Word& w) {
                if (w.size() == 3) cells.push_back(w);
            });
            for (const auto& g : a.generators) {
                auto q = check_quasiconformality(a, mu, h, g, cells);
                qc.Q = std::max(qc.Q, q.Q);
                qc.cells_used += q.cells_used;
                qc.cells_skipped += q.cells_skipped;
            }
        } else {
            auto limits = limit_set_sample(a, ball, real_or(block, "limit_min_displacement", T / 2.0));
            std::vector<BoundaryApprox> centers(limits.begin(),
                                                limits.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(32, limits.size())));
            qc = check_quasiconformality(a, mu, h, a.generators.front(), centers, real_or(block, "arc_half_width", 0.05));
        }
    }

    write_text(opt.out_dir, "counts.csv",
               counts_csv(ball.count_by_shell, h, equidistribution_constant(ball.count_by_shell, h).K_measured));
    json e;
    e["scenario"] = s.name;
    e["command"] = "boundary";
    e["h"] = h;
    e["s"] = sexp;
    e["measure"] = {{"kind", opt.dirac_control ? "dirac" : "patterson-sullivan"},
                    {"atoms", mu.atoms.size()},
                    {"boundary_atoms", mu.boundary.size()},
                    {"truncation_T", mu.truncation_T},
                    {"projection_depth", mu.projection_depth}};
    write_json(opt.out_dir, "estimate.json", e);

    json rows = json::array();
    for (double rho : rhos) {
        double lo = std::numeric_limits<double>::infinity(), hi = 0;
        std::size_t n = 0;
        for (const auto& r : ahl.rows)
            if (r.rho == rho) {
                lo = std::min(lo, r.ratio_lower);
                hi = std::max(hi, r.ratio_upper);
                ++n;
            }
        rows.push_back({{"rho", rho}, {"samples", n}, {"ratio_min", n ? json(lo) : json(nullptr)},
                        {"ratio_max", n ? json(hi) : json(nullptr)}});
    }
    double A = std::max(ahl.A_upper, std::isfinite(ahl.A_lower) && ahl.A_lower > 0 ? 1.0 / ahl.A_lower : ahl.A_upper);
    std::vector<json> checks;
    checks.push_back(verdict("ahlfors_step1", ahl.step1_pass, {{"A_upper", ahl.A_upper}, {"bound", ahl.step1_bound}}));
    checks.push_back(verdict("ahlfors_step3", ahl.step3_pass,
                             {{"A_lower", std::isfinite(ahl.A_lower) ? json(ahl.A_lower) : json(nullptr)},
                              {"bound", ahl.step3_bound}, {"Q_shadow", ahl.Q_shadow}, {"R0", ahl.R0}}));
    if (block.contains("expected_ratio")) {
        double lo = scenario_detail::real_value(block["expected_ratio"][0], "expected_ratio");
        double hi = scenario_detail::real_value(block["expected_ratio"][1], "expected_ratio");
        bool ok = !ahl.rows.empty();
        for (const auto& r : ahl.rows) ok = ok && r.ratio_lower >= lo && r.ratio_upper <= hi;
        checks.push_back(verdict("expected_ratio", ok, {{"range", {lo, hi}}}));
    }

    CommandResult res;
    res.audits["scenario"] = s.name;
    res.audits["command"] = "boundary";
    res.audits["seed"] = seed;
    res.audits["certification"] = certification_json(a);
    res.audits["ahlfors"] = {{"A", A},
                             {"A_lower", std::isfinite(ahl.A_lower) ? json(ahl.A_lower) : json(nullptr)},
                             {"A_upper", ahl.A_upper},
                             {"decidable", ahl.decidable},
                             {"skipped", ahl.skipped},
                             {"rows", rows}};
    if (!opt.dirac_control)
        res.audits["quasiconformality"] = {{"Q", qc.Q}, {"cells_used", qc.cells_used}, {"cells_skipped", qc.cells_skipped}};
    res.exit_code = finish(res.audits, checks, opt.out_dir);
    return res;
}

/// Geodesic-lemma suite, shadow-ball suite and explicit-constant bound suite.
inline CommandResult cmd_verify(const Scenario& s, const GroupAction& a, const CommandOptions& opt,
                                std::uint64_t seed) {
    using namespace command_detail;
    const json block = s.verify.is_object() ? s.verify : json::object();
    const bool tree = a.space.kind == SpaceKind::tree;
    std::size_t configs = block.value("configurations", std::size_t{1000});
    Length T = real_or(block, "T", tree ? 10.0 : 24.0);
    OrbitBall ball = enumerate_orbit_ball(a, T, enumerate_options(block, opt.threads));
    auto window = window_of(block, {0.4 * T, T});
    json est_block = block;
    if (!tree && !est_block.contains("estimator")) est_block["estimator"] = "continuous";
    Rate h = estimate_for(ball, est_block, window).h_hat;

    LemmaSampling plan;
    plan.configurations = configs;
    plan.seed = seed;
    plan.radius = real_or(block, "radius", 6.0);
    auto geo = check_geodesic_lemmas(a.space, a.declared_delta, plan);

    ShadowLemmaOptions so;
    so.configurations = configs;
    so.seed = seed;
    so.pack_sets = configs;
    auto ends = limit_set_sample(a, ball, real_or(block, "limit_min_displacement", tree ? T : T / 2.0));
    auto sh = check_shadow_ball_lemma(a, ends, so);

    BoundSuiteOptions bo;
    bo.configurations = configs;
    bo.seed = seed;
    auto bounds = check_bound_suite(a, ball, h, bo);

    json groups;
    std::vector<json> checks;
    for (auto [label, rep] : {std::pair{"geodesic_lemmas", &geo}, std::pair{"shadow_ball", &sh},
                              std::pair{"bounds", &bounds}}) {
        json arr = json::array();
        for (const auto& c : rep->checks) {
            arr.push_back(check_json(c));
            checks.push_back(check_json(c));
        }
        groups[label] = arr;
    }
    json e;
    e["scenario"] = s.name;
    e["command"] = "verify";
    e["h_hat"] = h;
    e["orbit_points"] = ball.entries.size();
    e["limit_samples"] = ends.size();
    write_json(opt.out_dir, "estimate.json", e);

    CommandResult res;
    res.audits["scenario"] = s.name;
    res.audits["command"] = "verify";
    res.audits["seed"] = seed;
    res.audits["certification"] = certification_json(a);
    res.audits["suites"] = groups;
    bool pass = true;
    for (const auto& c : checks) pass = pass && c["pass"].get<bool>();
    res.audits["pass"] = pass;
    write_json(opt.out_dir, "audits.json", res.audits);
    res.exit_code = pass ? exit_pass : exit_check_failed;
    return res;
}

/// Builds the parametric family named in the scenario's family block.
inline ContinuityFamily scenario_family(const Scenario& s) {
    const json& f = s.family;
    if (!f.is_object()) throw ScenarioError("converge needs a \"family\" block");
    std::string kind = scenario_detail::required(f, "kind", "family").get<std::string>();
    ContinuityFamily fam;
    fam.name = kind;
    for (const auto& p : scenario_detail::required(f, "params", "family"))
        fam.params.push_back(scenario_detail::real_value(p, "param"));
    fam.limit_param = scenario_detail::real_value(scenario_detail::required(f, "limit", "family"), "limit");
    if (kind == "tree_rescale") {
        if (s.kind != SpaceKind::tree) throw ScenarioError("tree_rescale needs a tree model");
        int valence = s.valence;
        fam.make = [valence](double l) { return free_group_action(valence, Rational::approximate(l)); };
    } else if (kind == "schottky") {
        if (s.kind != SpaceKind::plane) throw ScenarioError("schottky family needs a plane model");
        Length delta = s.delta, D = s.codiameter;
        fam.make = [delta, D](double L) { return plane_action(schottky_pair(L), delta, D); };
    } else if (kind == "constant") {
        Scenario copy = s;
        fam.make = [copy](double) { return copy.action(); };
    } else {
        throw ScenarioError("unknown family kind '" + kind + "'");
    }
    return fam;
}

inline ContinuityConfig scenario_continuity_config(const Scenario& s, unsigned threads) {
    using command_detail::real_or;
    const json& f = s.family;
    ContinuityConfig c;
    c.T = real_or(f, "T", c.T);
    c.window = command_detail::window_of(f, c.window);
    c.scale_by_edge = f.value("scale_by_edge", false);
    c.continuous_estimator = f.value("estimator", std::string("shells")) == "continuous";
    c.estimator.top_half = f.value("top_half", false);
    c.epsilon0 = real_or(f, "epsilon0", c.epsilon0);
    c.resolution = real_or(f, "resolution", c.resolution);
    c.estimator_tolerance = real_or(f, "estimator_tolerance", c.estimator_tolerance);
    c.C_max = real_or(f, "C_max", c.C_max);
    c.K_bound = real_or(f, "K_bound", c.K_bound);
    c.ladder_steps = f.value("ladder_steps", c.ladder_steps);
    c.algebraic_samples = f.value("algebraic_samples", c.algebraic_samples);
    c.threads = threads;
    return c;
}

/// Continuity experiment over a family. The verdict is the continuity check,
/// or the Cauchy audit on successive differences when "verdict": "cauchy".
inline CommandResult cmd_converge(const Scenario& s, const CommandOptions& opt, std::uint64_t seed) {
    using namespace command_detail;
    ContinuityFamily fam = scenario_family(s);
    ContinuityConfig cfg = scenario_continuity_config(s, opt.threads);
    cfg.keep_witnesses = opt.emit_witnesses;
    ContinuityReport rep = run_continuity_experiment(fam, cfg);

    auto opt_num = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
    std::ostringstream csv;
    csv << "param,eps,scale,eps_combinatorial,witness_valid,h_hat,residual,K,algebraic_gap,orbit_points\n";
    json rows = json::array();
    auto row_json = [&](const ContinuityRow& r) {
        return json{{"param", r.param},
                    {"eps", opt_num(r.eps)},
                    {"scale", opt_num(r.scale)},
                    {"eps_combinatorial", r.eps_combinatorial},
                    {"witness_valid", r.witness_valid},
                    {"h_hat", r.h_hat},
                    {"residual", r.residual},
                    {"K", r.K},
                    {"algebraic_gap", r.algebraic_gap ? json(*r.algebraic_gap) : json(nullptr)},
                    {"orbit_points", r.orbit_points}};
    };
    for (const auto& r : rep.rows) {
        csv << num(r.param) << ',' << (std::isfinite(r.eps) ? num(r.eps) : "inf") << ','
            << (std::isfinite(r.scale) ? num(r.scale) : "inf") << ',' << num(r.eps_combinatorial) << ','
            << (r.witness_valid ? 1 : 0) << ',' << num(r.h_hat) << ',' << num(r.residual) << ',' << num(r.K) << ','
            << (r.algebraic_gap ? num(*r.algebraic_gap) : "") << ',' << r.orbit_points << '\n';
        rows.push_back(row_json(r));
    }
    write_text(opt.out_dir, "continuity.csv", csv.str());
    json cj;
    cj["scenario"] = s.name;
    cj["family"] = rep.family;
    cj["epsilon0"] = rep.epsilon0;
    cj["covering_radius"] = rep.covering_radius;
    cj["limit"] = row_json(rep.limit);
    cj["rows"] = rows;
    cj["C"] = rep.C;
    cj["h_agreement"] = rep.h_agreement;
    cj["K_max"] = rep.K_max;
    cj["K_uniform"] = rep.K_uniform;
    cj["difference_ratios"] = rep.difference_ratios;
    cj["pass"] = rep.pass;
    write_json(opt.out_dir, "continuity.json", cj);
    write_json(opt.out_dir, "estimate.json",
               {{"scenario", s.name}, {"command", "converge"}, {"limit_h_hat", rep.limit.h_hat}});
    if (opt.emit_witnesses) {
        json ws = json::array();
        for (std::size_t i = 0; i < rep.witnesses.size(); ++i) {
            const auto& w = rep.witnesses[i];
            ws.push_back({{"param", rep.rows[i].param}, {"epsilon", w.epsilon}, {"f", w.f}, {"phi", w.phi}, {"psi", w.psi}});
        }
        write_json(opt.out_dir, "witnesses.json", ws);
    }

    std::vector<json> checks;
    std::string mode = s.family.value("verdict", std::string("continuity"));
    if (mode == "cauchy") {
        double need = real_or(s.family, "min_difference_ratio", 1.5);
        bool ok = !rep.difference_ratios.empty();
        for (double r : rep.difference_ratios) ok = ok && r >= need;
        checks.push_back(verdict("cauchy_audit", ok, {{"min_ratio", need}, {"ratios", rep.difference_ratios}}));
    } else if (mode == "continuity") {
        checks.push_back(verdict("h_agreement", rep.h_agreement, {{"C", rep.C}, {"C_max", cfg.C_max}}));
        checks.push_back(verdict("K_uniform", rep.K_uniform, {{"K_max", rep.K_max}, {"K_bound", cfg.K_bound}}));
    } else {
        throw ScenarioError("verdict must be \"continuity\" or \"cauchy\"");
    }
    CommandResult res;
    res.audits["scenario"] = s.name;
    res.audits["command"] = "converge";
    res.audits["seed"] = seed;
    res.exit_code = finish(res.audits, checks, opt.out_dir);
    return res;
}

/// Runs one subcommand on a scenario file. Errors (scenario, classification,
/// certification, or an experiment that cannot be carried out) are reported in
/// audits.json with the stage reached and give exit code 2.
inline int run_command(const std::string& command, const std::string& scenario_path, const CommandOptions& opt,
                       std::ostream& log = std::cerr) {
    using namespace command_detail;
    static const std::set<std::string> known{"entropy", "boundary", "converge", "verify"};
    if (!known.count(command)) {
        log << "unknown command " << command << "\n";
        return exit_rejected;
    }
    std::string stage = "scenario";
    json audits;
    audits["command"] = command;
    try {
        Scenario s = load_scenario(scenario_path);
        audits["scenario"] = s.name;
        std::uint64_t seed = opt.seed.value_or(s.seed);
        CommandResult r;
        if (command == "converge") {
            stage = "experiment";
            r = cmd_converge(s, opt, seed);
        } else {
            GroupAction a = certified_action(s, stage);
            stage = "experiment";
            if (command == "entropy")
                r = cmd_entropy(s, a, opt, seed);
            else if (command == "boundary")
                r = cmd_boundary(s, a, opt, seed);
            else
                r = cmd_verify(s, a, opt, seed);
        }
        log << s.name << ": " << command << (r.exit_code == exit_pass ? " passed" : " failed") << "\n";
        return r.exit_code;
    } catch (const Error& e) {
        audits["status"] = "rejected";
        audits["stage"] = stage;
        audits["diagnosis"] = e.what();
        audits["pass"] = false;
        try {
            write_json(opt.out_dir, "audits.json", audits);
        } catch (const Error&) {
        }
        log << "rejected at " << stage << ": " << e.what() << "\n";
        return exit_rejected;
    }
}

} // namespace hypcrit
