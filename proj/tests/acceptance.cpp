// Acceptance runner: `acceptance --criterion N` prints one PASS/FAIL line
// for criterion N and exits nonzero on failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include <genvert/baseline.hpp>
#include <genvert/errors.hpp>
#include <genvert/harness.hpp>
#include <genvert/invert.hpp>
#include <genvert/lp.hpp>
#include <genvert/model.hpp>
#include <genvert/random.hpp>
#include <genvert/reductions.hpp>

#include "cli.hpp"
#include "oracles.hpp"

using namespace genvert;

namespace {

struct Verdict {
    bool pass;
    std::string detail;
};

std::string fmt(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

std::size_t count_successes(const std::vector<TrialRecord>& recs, Method m, double threshold)
{
    std::size_t n = 0;
    for (const auto& r : recs)
        if (r.method == m && r.relative_error && *r.relative_error <= threshold) ++n;
    return n;
}

Verdict exact_realizable_recovery()
{
    TrialConfig cfg;
    cfg.dims = {20, 100, 500};
    cfg.weight_std_rule = WeightStdRule::Unit;
    cfg.methods = {Method::Exact, Method::Linf};
    cfg.trials = 50;
    cfg.success_threshold = 1e-6;
    cfg.base_seed = 1;
    auto recs = run_noise_sweep(cfg);
    std::size_t exact = count_successes(recs, Method::Exact, 1e-6);
    std::size_t linf = count_successes(recs, Method::Linf, 1e-6);
    return {exact >= 49 && linf >= 49,
            "exact " + std::to_string(exact) + "/50, linf " + std::to_string(linf) + "/50 within 1e-6"};
}

Verdict witness_net()
{
    GeneratorNetwork net({Layer(Matrix{{1.0, 2.0}, {3.0, 1.0}}, Activation::relu()),
                          Layer(Matrix{{1.0, -1.0}}, Activation::relu())});
    double a = forward(net, Vector{-1.0, 1.0})[0];
    double b = forward(net, Vector{1.0, 3.0})[0];
    double c = forward(net, Vector{0.0, 2.0})[0];
    return {a == 1.0 && b == 1.0 && c == 2.0,
            "G(-1,1)=" + format_double(a) + " G(1,3)=" + format_double(b) + " G(0,2)=" + format_double(c)};
}

Verdict noise_linearity()
{
    TrialConfig cfg;
    cfg.dims = {20, 100, 500};
    cfg.methods = {Method::Linf};
    cfg.trials = 20;
    cfg.base_seed = 3;
    cfg.noise = {NoiseSpec::Kind::Uniform, 0.0, 7};
    const std::vector<double> levels{1e-1, 1e-2, 1e-3, 1e-4};
    auto recs = run_noise_levels(cfg, levels);
    std::vector<double> medians;
    std::string detail = "medians";
    for (double a : levels) {
        double m = median_relative_error(recs, Method::Linf, a).value_or(INFINITY);
        medians.push_back(m);
        detail += " " + fmt(m);
    }
    if (!std::all_of(medians.begin(), medians.end(), [](double m) { return std::isfinite(m) && m > 0.0; }))
        return {false, detail + "; non-finite median"};
    double slope = loglog_slope(levels, medians);
    return {slope >= 0.8 && slope <= 1.2, detail + "; log-log slope " + fmt(slope)};
}

Verdict success_vs_k()
{
    TrialConfig cfg;
    cfg.dims = {10, 250, 600};
    // Unit-variance pre-activations at every layer, so GD's fixed step of 1
    // is a sensible scale.
    cfg.weight_std_rule = WeightStdRule::InvSqrtFanout;
    cfg.methods = {Method::Linf, Method::L1, Method::Relaxed, Method::Gd};
    cfg.trials = 20;
    cfg.success_threshold = 1e-3;
    cfg.base_seed = 4;
    // Outputs here are O(0.1), so a 0.1 starting threshold would misclassify
    // most coordinates in a noiseless run.
    cfg.lp.epsilon_init = 1e-6;
    cfg.gd.learning_rate = 1.0;
    cfg.gd.max_iters = 1000;
    const std::vector<std::size_t> ks{10, 40, 70, 100};
    auto table = run_success_vs_k(cfg, ks);
    bool pass = true;
    std::string detail;
    for (const auto& row : table.rows) {
        detail += std::string(to_string(row.method)) + "@" + std::to_string(row.k) + "=" + fmt(row.rate);
        if (row.method == Method::Gd) {
            double iters = 0.0;
            for (const auto& r : table.records)
                if (r.method == Method::Gd && r.k == row.k) iters += double(r.gd_iterations);
            detail += " (mean " + fmt(iters / double(row.trials)) + " iters)";
        }
        detail += " ";
        if (row.method == Method::Gd) {
            if ((row.k == 70 || row.k == 100) && row.rate > 0.5) pass = false;
        } else if (row.rate < 0.95) {
            pass = false;
        }
    }
    return {pass, detail};
}

Verdict lp_oracle()
{
    std::size_t agree = 0, feasible = 0;
    const std::size_t total = 200;
    for (std::uint64_t seed = 0; seed < total; ++seed) {
        lp::LpProblem p = oracle::random_boxed_lp(90000 + seed);
        auto ref = oracle::enumerate_vertices(p);
        auto s = lp::solve(p);
        bool ok = ref.feasible ? (s.status == lp::Status::Optimal && std::abs(*s.objective - ref.objective) <= 1e-6)
                               : s.status == lp::Status::Infeasible;
        agree += ok;
        feasible += ref.feasible;
    }

    // Degenerate programs: each must simply return.
    std::size_t degenerate = 0;
    lp::LpProblem beale(4);
    beale.set_objective(Vector{-0.75, 150.0, -0.02, 6.0});
    beale.add_constraint(Vector{0.25, -60.0, -0.04, 9.0}, lp::Relation::LessEqual, 0.0);
    beale.add_constraint(Vector{0.5, -90.0, -0.02, 3.0}, lp::Relation::LessEqual, 0.0);
    beale.add_constraint(Vector{0.0, 0.0, 1.0, 0.0}, lp::Relation::LessEqual, 1.0);
    for (std::size_t j = 0; j < 4; ++j) beale.set_bounds(j, 0.0, std::nullopt);
    bool beale_ok = true;
    for (auto pr : {lp::Pricing::DantzigWithBlandFallback, lp::Pricing::Bland}) {
        lp::SolverOptions o;
        o.pricing = pr;
        auto s = lp::solve(beale, o);
        beale_ok = beale_ok && s.status == lp::Status::Optimal && std::abs(*s.objective + 0.05) < 1e-9;
        ++degenerate;
    }
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        lp::LpProblem base = oracle::random_boxed_lp(70000 + seed);
        lp::LpProblem dup(base.num_variables(), base.sense());
        dup.set_objective(base.objective());
        for (std::size_t j = 0; j < base.num_variables(); ++j)
            dup.set_bounds(j, base.bounds()[j].lower, base.bounds()[j].upper);
        for (int rep = 0; rep < 4; ++rep)
            for (const auto& c : base.constraints()) dup.add_constraint(c.coefficients, c.relation, c.rhs);
        lp::solve(dup);
        ++degenerate;
    }
    return {agree == total && beale_ok,
            std::to_string(agree) + "/" + std::to_string(total) + " agree with vertex enumeration (" +
                std::to_string(feasible) + " feasible); " + std::to_string(degenerate) +
                " degenerate programs terminated" + (beale_ok ? "" : "; cycling example wrong")};
}

Verdict sat_reduction()
{
    std::size_t agree = 0, sat_count = 0, real_hits = 0, real_checked = 0, real_miss = 0;
    const std::size_t formulas = 50, n = 10;
    for (std::uint64_t seed = 0; seed < formulas; ++seed) {
        CnfFormula f = random_cnf(n, 43, 500 + seed);
        Gadget bin = build_binary_gadget(f);
        Gadget real = build_real_gadget(f);
        bool gadget_zero = false, consistent = true;
        for (std::uint64_t bits = 0; bits < (1u << n); ++bits) {
            std::vector<int> s(n);
            Vector z(n);
            for (std::size_t i = 0; i < n; ++i) {
                s[i] = (bits >> i) & 1 ? 1 : -1;
                z[i] = s[i];
            }
            bool zero = forward(bin.net, z)[0] == 0.0;
            consistent = consistent && zero == f.satisfied_by(s);
            gadget_zero = gadget_zero || zero;
            bool hit = forward(real.net, z) == real.target;
            if (f.satisfied_by(s)) {
                ++real_checked;
                real_hits += hit;
            } else {
                real_miss += !hit;
            }
        }
        auto bf = brute_force_sat(f);
        bool ok = consistent && bf.has_value() == gadget_zero && (!bf || f.satisfied_by(*bf));
        agree += ok;
        sat_count += bf.has_value();
    }
    std::size_t unsat_points = formulas * (1u << n) - real_checked;
    return {agree == formulas && real_hits == real_checked && real_miss == unsat_points && sat_count > 0 &&
                sat_count < formulas,
            std::to_string(agree) + "/50 formulas consistent (" + std::to_string(sat_count) +
                " satisfiable); real gadget hit target at " + std::to_string(real_hits) + "/" +
                std::to_string(real_checked) + " satisfying assignments and missed at " +
                std::to_string(real_miss) + "/" + std::to_string(unsat_points) + " others"};
}

Verdict leaky_round_trip()
{
    double worst = 0.0;
    std::size_t pass = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(derive_seed(777, seed));
        std::size_t k = 2 + rng.below(19);
        std::size_t n = k + rng.below(4 * k);
        auto net = random_gaussian_net(std::vector<std::size_t>{k, n}, WeightStdRule::Unit, seed, Activation::leaky(0.1));
        Vector z(k);
        for (double& v : z) v = rng.normal();
        Vector got = invert_layer_leaky_exact(net.layer(1), forward(net, z));
        double err = norm2(subtract(got, z).span()) / norm2(z.span());
        worst = std::max(worst, err);
        pass += err <= 1e-8;
    }
    return {pass == 100, std::to_string(pass) + "/100 within 1e-8, worst " + fmt(worst)};
}

Verdict noisy_linf_bound()
{
    const double eps = 1e-3;
    std::size_t pass = 0, valid = 0, exact_pass = 0;
    double worst_ratio = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto net = random_gaussian_net(std::vector<std::size_t>{20, 100}, WeightStdRule::Unit, derive_seed(88, seed));
        Rng rng(derive_seed(99, seed));
        Vector z(20);
        for (double& v : z) v = rng.normal();
        Vector x = forward(net, z);
        // Noise with ||e||_inf = eps exactly: uniform entries, one pinned to +-eps.
        Vector e(x.dim());
        for (double& v : e) v = rng.uniform(-eps, eps);
        e[rng.below(e.dim())] = rng.uniform01() < 0.5 ? -eps : eps;
        x = add(x, e);
        LpInvertConfig cfg;
        cfg.epsilon_init = eps;
        LayerInversionOutcome out;
        try {
            out = invert_layer_linf(net.layer(1), x, cfg);
        } catch (const Error&) {
            continue;
        }
        // c-hat over the rows the program treated as active.
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < x.dim(); ++i)
            if (x[i] > out.epsilon_used) rows.push_back(i);
        if (rows.size() < 20) continue;
        const Matrix w_active = net.layer(1).weights().select_rows(rows);
        // Monte-Carlo c-hat over sampled directions; it can only overestimate
        // the true minimum, so the gate is at least as strict as the exact one.
        double c_hat = estimate_assumption_constant(w_active, rows.size(), BoundNorm::Linf, 1000, seed);
        if (c_hat <= 0.0) continue;
        ++valid;
        double err = norm_inf(subtract(out.recovered, z).span());
        worst_ratio = std::max(worst_ratio, err / (2.0 * eps / c_hat));
        pass += err <= 2.0 * eps / c_hat;
        exact_pass += err <= 2.0 * eps / exact_linf_constant(w_active);
    }
    return {pass >= 95, std::to_string(pass) + "/100 within 2 eps / c-hat (" + std::to_string(valid) +
                            " with a valid c-hat, " + std::to_string(exact_pass) +
                            " with the exact constant), worst error/bound " + fmt(worst_ratio)};
}

Verdict gradient_check()
{
    std::size_t pass = 0, drawn = 0;
    double worst = 0.0;
    const double h = 1e-6;
    Rng rng(2024);
    for (std::uint64_t seed = 0; drawn < 100; ++seed) {
        auto net = random_gaussian_net(std::vector<std::size_t>{10, 50, 200}, WeightStdRule::InvSqrtFanout, seed);
        Vector z(10), x(200);
        for (double& v : z) v = rng.normal();
        for (double& v : x) v = rng.normal();
        // Smooth point: no pre-activation within 1000 h of a kink.
        bool smooth = true;
        Vector a = z;
        for (const auto& l : net.layers()) {
            for (double v : l.pre_activation(a)) smooth = smooth && std::abs(v) > 1e3 * h;
            a = l.forward(a);
        }
        if (!smooth) continue;
        ++drawn;
        auto op = ForwardOperator::identity(200);
        Vector g = gd_gradient(net, x, op, z);
        Vector fd = finite_diff_grad(net, x, op, z, h);
        double rel = norm_inf(subtract(g, fd).span()) / norm_inf(fd.span());
        worst = std::max(worst, rel);
        pass += rel <= 1e-4;
    }
    return {pass == 100, std::to_string(pass) + "/100 smooth points within 1e-4, worst " + fmt(worst)};
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

Verdict determinism()
{
    std::string detail;
    bool pass = true;

    // Library level: noise sweep across methods with different thread counts.
    TrialConfig cfg;
    cfg.dims = {8, 40, 120};
    cfg.methods = {Method::Linf, Method::L1, Method::Relaxed, Method::Gd, Method::Exact};
    cfg.noise = {NoiseSpec::Kind::Gaussian, 1e-3, 5};
    cfg.trials = 6;
    cfg.base_seed = 10;
    cfg.gd.max_iters = 100;
    std::string first;
    for (std::size_t threads : {1, 3}) {
        cfg.threads = threads;
        std::ostringstream out;
        write_trials_csv(out, run_noise_sweep(cfg));
        if (first.empty()) {
            first = out.str();
        } else if (out.str() != first) {
            pass = false;
            detail += "library CSV differs across thread counts; ";
        }
    }

    // CLI level: every config kind run twice.
    auto dir = std::filesystem::temp_directory_path() / "genvert_acceptance_det";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    const char* configs[] = {
        R"({"kind": "noise_sweep", "dims": [6, 30, 90], "methods": ["linf", "l1", "gd"],
            "noise": {"kind": "uniform", "levels": [0.01, 0.001], "seed": 1}, "trials": 4, "base_seed": 21,
            "gd": {"max_iters": 50}})",
        R"({"kind": "success_vs_k", "dims": [4, 30, 90], "ks": [2, 6], "methods": ["linf", "gd"],
            "trials": 4, "base_seed": 22, "lp": {"epsilon_init": 1e-6}, "gd": {"max_iters": 50}})",
        R"({"kind": "timing", "dims": [4, 30, 90], "ks": [3], "methods": ["linf", "l1"], "trials": 3,
            "base_seed": 23})",
    };
    std::size_t files = 0;
    for (std::size_t c = 0; c < 3; ++c) {
        auto cfg_path = dir / ("cfg" + std::to_string(c) + ".json");
        std::ofstream(cfg_path) << configs[c];
        std::string runs[2];
        for (int r = 0; r < 2; ++r) {
            auto out_dir = dir / ("run" + std::to_string(c) + "_" + std::to_string(r));
            std::string cfg_s = cfg_path.string(), out_s = out_dir.string();
            const char* argv[] = {"genvert", "experiment", "--config", cfg_s.c_str(), "--out", out_s.c_str()};
            std::ostringstream sink;
            if (cli::run(6, argv, sink, sink) != 0) {
                pass = false;
                detail += "config " + std::to_string(c) + " failed; ";
            }
        }
        for (const auto& entry : std::filesystem::directory_iterator(dir / ("run" + std::to_string(c) + "_0"))) {
            auto name = entry.path().filename();
            // Wall-clock tables are measurements, not reproducible outputs.
            if (entry.path().extension() != ".csv" || name == "timing.csv") continue;
            ++files;
            if (slurp(entry.path()) != slurp(dir / ("run" + std::to_string(c) + "_1") / name)) {
                pass = false;
                detail += name.string() + " of config " + std::to_string(c) + " differs; ";
            }
        }
    }
    std::filesystem::remove_all(dir);
    return {pass, detail + std::to_string(files) + " CLI CSV files compared byte for byte, library CSV stable "
                                                    "across thread counts"};
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"acceptance checks"};
    int criterion = 0;
    app.add_option("--criterion", criterion, "criterion number 1-10")->required()->check(CLI::Range(1, 10));
    CLI11_PARSE(app, argc, argv);

    using Fn = Verdict (*)();
    const Fn checks[] = {exact_realizable_recovery, witness_net,      noise_linearity, success_vs_k,
                         lp_oracle,                 sat_reduction,    leaky_round_trip, noisy_linf_bound,
                         gradient_check,            determinism};
    const char* names[] = {"exact realizable recovery",   "two-layer example values", "noise linearity",
                           "success rate versus k",       "LP oracle equivalence",    "3SAT reduction",
                           "LeakyReLU exact round trip",  "noisy l_inf bound",        "gradient correctness",
                           "determinism"};

    auto t0 = std::chrono::steady_clock::now();
    Verdict v{false, ""};
    try {
        v = checks[criterion - 1]();
    } catch (const std::exception& e) {
        v = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << "criterion " << criterion << " [" << names[criterion - 1] << "]: " << (v.pass ? "PASS" : "FAIL")
              << " (" << v.detail << "; " << fmt(secs) << " s)" << std::endl;
    return v.pass ? 0 : 1;
}
