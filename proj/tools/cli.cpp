#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "genvert/baseline.hpp"
#include "genvert/errors.hpp"
#include "genvert/harness.hpp"
#include "genvert/invert.hpp"
#include "genvert/model.hpp"
#include "genvert/reductions.hpp"

namespace genvert::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

int exit_code_for(ErrorCode code)
{
    switch (code) {
    case ErrorCode::ParseError:
    case ErrorCode::ValidationError:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::InvalidArgument:
    case ErrorCode::NonFinite: return kExitUsage;
    default: return kExitSolverFailure;
    }
}

std::string join(const std::vector<std::size_t>& v)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i)
        s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

std::vector<std::size_t> parse_dims(const std::string& text)
{
    std::vector<std::size_t> dims;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        std::size_t used = 0;
        long long v = -1;
        try {
            v = std::stoll(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size() || item.empty() || v <= 0)
            throw Error(ErrorCode::ParseError, "bad width '" + item + "' in --dims");
        dims.push_back(static_cast<std::size_t>(v));
    }
    if (dims.size() < 2)
        throw Error(ErrorCode::ValidationError, "--dims needs at least two widths");
    return dims;
}

std::ifstream open_input(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::ParseError, "cannot open " + path.string());
    return in;
}

// Kept output coordinates, 0-based, whitespace separated.
std::vector<std::size_t> load_mask(const fs::path& path)
{
    std::ifstream in = open_input(path);
    std::vector<std::size_t> kept;
    std::string token;
    while (in >> token) {
        std::size_t used = 0;
        long long v = -1;
        try {
            v = std::stoll(token, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != token.size() || v < 0)
            throw Error(ErrorCode::ParseError, path.string() + ": bad index '" + token + "'");
        kept.push_back(static_cast<std::size_t>(v));
    }
    return kept;
}

// "<rows> <cols>" followed by the entries in row-major order.
Matrix load_matrix(const fs::path& path)
{
    std::ifstream in = open_input(path);
    long long rows = -1;
    long long cols = -1;
    if (!(in >> rows >> cols) || rows <= 0 || cols <= 0)
        throw Error(ErrorCode::ParseError, path.string() + ": expected '<rows> <cols>' header");
    std::vector<double> entries;
    entries.reserve(static_cast<std::size_t>(rows * cols));
    std::string token;
    while (in >> token) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(token, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != token.size())
            throw Error(ErrorCode::ParseError, path.string() + ": bad entry '" + token + "'");
        entries.push_back(v);
    }
    if (entries.size() != static_cast<std::size_t>(rows * cols))
        throw Error(ErrorCode::ParseError, path.string() + ": header declares " + std::to_string(rows * cols) +
                                               " entries, found " + std::to_string(entries.size()));
    return Matrix(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols), std::move(entries));
}

std::string latent_line(const Vector& v)
{
    std::string s;
    for (std::size_t i = 0; i < v.dim(); ++i)
        s += (i ? " " : "") + format_double(v[i]);
    return s;
}

// ---------------------------------------------------------------------------
// Shared option blocks.

struct LpOptions {
    double eps = LpInvertConfig{}.epsilon_init;
    double alpha = LpInvertConfig{}.alpha;
    std::string eps_rule = "adaptive";
    double assumed_c = LpInvertConfig{}.assumed_c;
    std::size_t max_rounds = LpInvertConfig{}.max_epsilon_rounds;

    void add_to(CLI::App& app)
    {
        app.add_option("--eps", eps, "initial error bound guess")->capture_default_str();
        app.add_option("--alpha", alpha, "epsilon growth factor")->capture_default_str();
        app.add_option("--eps-rule", eps_rule, "per-layer epsilon schedule")
            ->check(CLI::IsMember({"adaptive", "theoretical"}))
            ->capture_default_str();
        app.add_option("--assumed-c", assumed_c, "layer constant for the theoretical rule")->capture_default_str();
        app.add_option("--max-rounds", max_rounds, "epsilon rounds per layer")->capture_default_str();
    }

    LpInvertConfig config() const
    {
        LpInvertConfig cfg;
        cfg.epsilon_init = eps;
        cfg.alpha = alpha;
        cfg.epsilon_rule = parse_epsilon_rule(eps_rule);
        cfg.assumed_c = assumed_c;
        cfg.max_epsilon_rounds = max_rounds;
        cfg.validate();
        return cfg;
    }
};

struct GdOptions {
    double lr = GdConfig{}.learning_rate;
    std::size_t iters = GdConfig{}.max_iters;
    double grad_stop = GdConfig{}.grad_norm_stop;
    std::uint64_t init_seed = 0;
    bool zero_init = false;
    std::size_t restarts = GdConfig{}.restarts;

    void add_to(CLI::App& app)
    {
        app.add_option("--lr", lr, "gradient descent learning rate")->capture_default_str();
        app.add_option("--iters", iters, "gradient descent iterations")->capture_default_str();
        app.add_option("--grad-stop", grad_stop, "gradient norm stopping threshold")->capture_default_str();
        app.add_option("--init-seed", init_seed, "Gaussian initialization seed")->capture_default_str();
        app.add_flag("--zero-init", zero_init, "start gradient descent at z = 0");
        app.add_option("--restarts", restarts, "number of restarts")->capture_default_str();
    }

    GdConfig config() const
    {
        GdConfig cfg;
        cfg.learning_rate = lr;
        cfg.max_iters = iters;
        cfg.grad_norm_stop = grad_stop;
        cfg.init_seed = zero_init ? std::nullopt : std::optional<std::uint64_t>(init_seed);
        cfg.restarts = restarts;
        cfg.validate();
        return cfg;
    }
};

void print_lp_header(std::ostream& out, const LpInvertConfig& cfg)
{
    out << "# lp: epsilon_init=" << format_double(cfg.epsilon_init) << " alpha=" << format_double(cfg.alpha)
        << " epsilon_rule=" << to_string(cfg.epsilon_rule) << " assumed_c=" << format_double(cfg.assumed_c)
        << " max_epsilon_rounds=" << cfg.max_epsilon_rounds << '\n';
}

void print_gd_header(std::ostream& out, const GdConfig& cfg)
{
    out << "# gd: learning_rate=" << format_double(cfg.learning_rate) << " max_iters=" << cfg.max_iters
        << " grad_norm_stop=" << format_double(cfg.grad_norm_stop)
        << " init=" << (cfg.init_seed ? "gaussian:" + std::to_string(*cfg.init_seed) : std::string("zero"))
        << " restarts=" << cfg.restarts << '\n';
}

void print_report(std::ostream& out, const GeneratorNetwork& net, const InversionReport& report)
{
    out << "success: " << (report.success ? "yes" : "no") << '\n';
    out << "lp_solves: " << report.lp_solves << '\n';
    out << "gd_iterations: " << report.gd_iterations << '\n';
    out << "residual_linf: " << format_double(report.residuals.linf) << '\n';
    out << "residual_l1: " << format_double(report.residuals.l1) << '\n';
    out << "residual_l2: " << format_double(report.residuals.l2) << '\n';
    for (std::size_t i = 0; i < report.layers.size(); ++i) {
        const LayerInversionOutcome& layer = report.layers[i];
        out << "layer " << net.depth() - i << ": epsilon=" << format_double(layer.epsilon_used)
            << " value=" << format_double(layer.delta_or_l1) << " active=" << layer.active_set_size
            << " rounds=" << layer.trail.size() << (layer.budget_exhausted ? " budget_exhausted" : "") << '\n';
    }
    for (const std::string& note : report.notes)
        out << "note: " << note << '\n';
}

void write_latent(std::ostream& out, const std::string& path, const Vector& latent)
{
    if (path.empty()) {
        out << "latent: " << latent_line(latent) << '\n';
    } else {
        save_vector(path, latent);
        out << "latent: written to " << path << '\n';
    }
}

// ---------------------------------------------------------------------------
// invert

struct InvertArgs {
    std::string net;
    std::string obs;
    std::string method = "linf";
    std::string out;
    LpOptions lp;
    GdOptions gd;
};

int cmd_invert(const InvertArgs& a, std::ostream& out)
{
    const LpInvertConfig lp = a.lp.config();
    const GdConfig gd = a.gd.config();
    const GeneratorNetwork net = load_net(a.net);
    const Vector x = load_vector(a.obs);
    if (x.dim() != net.output_dim())
        throw Error(ErrorCode::DimensionMismatch, "observation has " + std::to_string(x.dim()) +
                                                      " entries, network outputs " +
                                                      std::to_string(net.output_dim()));

    out << "# genvert " << library_version() << " invert\n";
    out << "# method: " << a.method << '\n';
    print_lp_header(out, lp);
    print_gd_header(out, gd);
    out << "network: widths " << join(net.widths()) << '\n';

    InversionReport report;
    if (a.method == "gd") {
        report = gd_invert(net, x, ForwardOperator::identity(net.output_dim()), gd);
    } else if (a.method == "exact") {
        const bool leaky = net.layers().front().activation().is_leaky();
        report = leaky ? invert_leaky_exact(net, x) : invert_realizable(net, x);
    } else {
        report = invert_network(net, x, parse_inversion_method(a.method), lp);
    }
    print_report(out, net, report);
    write_latent(out, a.out, report.latent);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// experiment

template <class T>
T take(const json& obj, const char* key, T fallback)
{
    if (!obj.contains(key) || obj.at(key).is_null())
        return fallback;
    return obj.at(key).get<T>();
}

void reject_unknown(const json& obj, std::initializer_list<const char*> known, const std::string& where)
{
    for (const auto& item : obj.items()) {
        if (std::none_of(known.begin(), known.end(), [&](const char* k) { return item.key() == k; }))
            throw Error(ErrorCode::ParseError, "unknown key '" + item.key() + "' in " + where);
    }
}

struct ExperimentPlan {
    std::string kind = "noise_sweep";
    TrialConfig cfg;
    std::vector<double> levels;
    std::vector<std::size_t> ks;
};

ExperimentPlan parse_experiment(const json& j)
{
    if (!j.is_object())
        throw Error(ErrorCode::ParseError, "experiment config must be a JSON object");
    reject_unknown(j,
                   {"kind", "dims", "weight_std_rule", "leaky_slope", "methods", "noise", "trials",
                    "success_threshold", "base_seed", "ks", "lp", "gd", "threads"},
                   "config");
    ExperimentPlan plan;
    TrialConfig& cfg = plan.cfg;
    plan.kind = take<std::string>(j, "kind", plan.kind);
    if (plan.kind != "noise_sweep" && plan.kind != "success_vs_k" && plan.kind != "timing")
        throw Error(ErrorCode::ValidationError, "kind must be noise_sweep, success_vs_k or timing");
    cfg.dims = take(j, "dims", cfg.dims);
    cfg.weight_std_rule = parse_weight_std_rule(take<std::string>(j, "weight_std_rule", "unit"));
    if (j.contains("leaky_slope") && !j.at("leaky_slope").is_null())
        cfg.leaky_slope = j.at("leaky_slope").get<double>();
    if (j.contains("methods")) {
        cfg.methods.clear();
        for (const auto& m : j.at("methods"))
            cfg.methods.push_back(parse_method(m.get<std::string>()));
    }
    cfg.trials = take(j, "trials", cfg.trials);
    cfg.success_threshold = take(j, "success_threshold", cfg.success_threshold);
    cfg.base_seed = take(j, "base_seed", cfg.base_seed);
    cfg.threads = take(j, "threads", cfg.threads);
    plan.ks = take(j, "ks", std::vector<std::size_t>{});

    if (j.contains("noise")) {
        const json& n = j.at("noise");
        reject_unknown(n, {"kind", "a", "levels", "seed"}, "noise");
        cfg.noise.kind = parse_noise_kind(take<std::string>(n, "kind", "none"));
        cfg.noise.a = take(n, "a", 0.0);
        cfg.noise.seed = take(n, "seed", std::uint64_t{0});
        plan.levels = take(n, "levels", std::vector<double>{});
    }
    if (j.contains("lp")) {
        const json& l = j.at("lp");
        reject_unknown(l, {"epsilon_init", "alpha", "epsilon_rule", "assumed_c", "max_epsilon_rounds"}, "lp");
        cfg.lp.epsilon_init = take(l, "epsilon_init", cfg.lp.epsilon_init);
        cfg.lp.alpha = take(l, "alpha", cfg.lp.alpha);
        cfg.lp.epsilon_rule = parse_epsilon_rule(take<std::string>(l, "epsilon_rule", "adaptive"));
        cfg.lp.assumed_c = take(l, "assumed_c", cfg.lp.assumed_c);
        cfg.lp.max_epsilon_rounds = take(l, "max_epsilon_rounds", cfg.lp.max_epsilon_rounds);
    }
    if (j.contains("gd")) {
        const json& g = j.at("gd");
        reject_unknown(g, {"learning_rate", "max_iters", "grad_norm_stop", "init_seed", "restarts", "line_halving"},
                       "gd");
        cfg.gd.learning_rate = take(g, "learning_rate", cfg.gd.learning_rate);
        cfg.gd.max_iters = take(g, "max_iters", cfg.gd.max_iters);
        cfg.gd.grad_norm_stop = take(g, "grad_norm_stop", cfg.gd.grad_norm_stop);
        if (g.contains("init_seed")) {
            if (g.at("init_seed").is_null())
                cfg.gd.init_seed.reset();
            else
                cfg.gd.init_seed = g.at("init_seed").get<std::uint64_t>();
        }
        cfg.gd.restarts = take(g, "restarts", cfg.gd.restarts);
        cfg.gd.line_halving = take(g, "line_halving", cfg.gd.line_halving);
    }
    if (plan.kind != "noise_sweep" && plan.ks.empty())
        throw Error(ErrorCode::ValidationError, plan.kind + " needs a non-empty 'ks' list");
    cfg.validate();
    cfg.lp.validate();
    cfg.gd.validate();
    return plan;
}

std::ofstream open_output(const fs::path& path)
{
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw Error(ErrorCode::ParseError, "cannot write " + path.string());
    return f;
}

void write_noise_summary(std::ostream& out, const std::vector<TrialRecord>& records, const TrialConfig& cfg,
                         const std::vector<double>& levels)
{
    out << "method,noise_level,trials,successes,median_relative_error\n";
    for (Method m : cfg.methods) {
        for (double level : levels) {
            std::size_t trials = 0;
            std::size_t successes = 0;
            for (const auto& r : records) {
                if (r.method == m && r.noise_level == level) {
                    ++trials;
                    successes += r.success ? 1 : 0;
                }
            }
            const auto median = median_relative_error(records, m, level);
            out << to_string(m) << ',' << format_double(level) << ',' << trials << ',' << successes << ','
                << (median ? format_double(*median) : "") << '\n';
        }
    }
}

int cmd_experiment(const std::string& config_path, const std::string& out_dir, std::optional<std::size_t> threads,
                   std::ostream& out)
{
    json j;
    {
        std::ifstream in = open_input(config_path);
        try {
            j = json::parse(in);
        } catch (const json::exception& e) {
            throw Error(ErrorCode::ParseError, config_path + ": " + e.what());
        }
    }
    ExperimentPlan plan;
    try {
        plan = parse_experiment(j);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, config_path + ": " + e.what());
    }
    if (threads)
        plan.cfg.threads = *threads;
    const TrialConfig& cfg = plan.cfg;

    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    auto meta = run_metadata(cfg);
    meta.emplace_back("kind", plan.kind);

    out << "# genvert " << library_version() << " experiment " << plan.kind << '\n';
    print_lp_header(out, cfg.lp);
    print_gd_header(out, cfg.gd);

    std::size_t failures = 0;
    if (plan.kind == "noise_sweep") {
        std::vector<double> levels = plan.levels;
        if (levels.empty())
            levels.push_back(cfg.noise.kind == NoiseSpec::Kind::None ? 0.0 : cfg.noise.a);
        std::string joined;
        for (std::size_t i = 0; i < levels.size(); ++i)
            joined += (i ? "," : "") + format_double(levels[i]);
        meta.emplace_back("noise_levels", joined);
        const auto records = cfg.noise.kind == NoiseSpec::Kind::None ? run_noise_sweep(cfg)
                                                                     : run_noise_levels(cfg, levels);
        auto trials_file = open_output(dir / "trials.csv");
        write_trials_csv(trials_file, records);
        auto summary_file = open_output(dir / "summary.csv");
        write_noise_summary(summary_file, records, cfg, levels);
        write_noise_summary(out, records, cfg, levels);
        for (const auto& r : records)
            failures += r.failed ? 1 : 0;
    } else if (plan.kind == "success_vs_k") {
        meta.emplace_back("ks", join(plan.ks));
        const SuccessTable table = run_success_vs_k(cfg, plan.ks);
        auto trials_file = open_output(dir / "trials.csv");
        write_trials_csv(trials_file, table.records);
        auto summary_file = open_output(dir / "success.csv");
        write_success_csv(summary_file, table.rows);
        write_success_csv(out, table.rows);
        for (const auto& r : table.records)
            failures += r.failed ? 1 : 0;
    } else {
        meta.emplace_back("ks", join(plan.ks));
        const auto rows = run_timing(cfg, plan.ks);
        auto summary_file = open_output(dir / "timing.csv");
        write_timing_csv(summary_file, rows);
        write_timing_csv(out, rows);
    }
    auto meta_file = open_output(dir / "metadata.txt");
    write_metadata(meta_file, meta);
    out << "failed_trials: " << failures << '\n';
    out << "output: " << out_dir << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------
// sense

struct SenseArgs {
    std::string net;
    std::string obs;
    std::string mask;
    std::string matrix;
    std::string inner = "linf";
    std::size_t outer_iters = PgdConfig{}.outer_iters;
    double step = PgdConfig{}.step;
    std::string out;
    LpOptions lp;
};

int cmd_sense(const SenseArgs& a, std::ostream& out)
{
    const LpInvertConfig lp = a.lp.config();
    const GeneratorNetwork net = load_net(a.net);
    const Vector y = load_vector(a.obs);
    const std::size_t n = net.output_dim();
    ForwardOperator op = ForwardOperator::identity(n);
    std::string op_name = "identity";
    if (!a.mask.empty()) {
        op = ForwardOperator::mask(n, load_mask(a.mask));
        op_name = "mask";
    } else if (!a.matrix.empty()) {
        op = ForwardOperator::dense(load_matrix(a.matrix));
        op_name = "matrix";
    }
    if (op.input_dim() != n)
        throw Error(ErrorCode::DimensionMismatch, "operator takes " + std::to_string(op.input_dim()) +
                                                      " inputs, network outputs " + std::to_string(n));
    if (y.dim() != op.output_dim())
        throw Error(ErrorCode::DimensionMismatch, "observation has " + std::to_string(y.dim()) +
                                                      " entries, operator outputs " +
                                                      std::to_string(op.output_dim()));

    Projector projector;
    projector.lp = lp;
    if (a.inner == "exact") {
        projector.kind = Projector::Kind::Realizable;
    } else {
        projector.method = parse_inversion_method(a.inner);
    }
    PgdConfig pgd;
    pgd.outer_iters = a.outer_iters;
    pgd.step = a.step;

    out << "# genvert " << library_version() << " sense\n";
    out << "# operator: " << op_name << " (" << op.output_dim() << " measurements)\n";
    out << "# inner: " << a.inner << " outer_iters=" << pgd.outer_iters << " step=" << format_double(pgd.step)
        << '\n';
    print_lp_header(out, lp);
    const InversionReport report = pgd_sense(net, y, op, projector, pgd);
    out << "objective: " << format_double(gd_objective(net, y, op, report.latent)) << '\n';
    print_report(out, net, report);
    write_latent(out, a.out, report.latent);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// reduce, gen-net, verify

int cmd_reduce(const std::string& cnf, const std::string& gadget, const std::string& out_path,
               const std::string& target_path, std::ostream& out)
{
    const CnfFormula f = load_dimacs(cnf);
    const Gadget g = gadget == "binary" ? build_binary_gadget(f) : build_real_gadget(f);
    save_net(out_path, g.net);
    if (!target_path.empty())
        save_vector(target_path, g.target);
    out << "# genvert " << library_version() << " reduce\n";
    out << "gadget: " << gadget << '\n';
    out << "variables: " << f.num_vars << '\n';
    out << "clauses: " << f.clauses.size() << '\n';
    out << "widths: " << join(g.net.widths()) << '\n';
    out << "target: " << latent_line(g.target) << '\n';
    out << "network: written to " << out_path << '\n';
    return kExitOk;
}

int cmd_gen_net(const std::string& dims_text, std::uint64_t seed, const std::string& rule,
                std::optional<double> leaky, const std::string& out_path, std::ostream& out)
{
    const std::vector<std::size_t> dims = parse_dims(dims_text);
    const Activation act = leaky ? Activation::leaky(*leaky) : Activation::relu();
    const GeneratorNetwork net = random_gaussian_net(dims, parse_weight_std_rule(rule), seed, act);
    save_net(out_path, net);
    out << "# genvert " << library_version() << " gen-net\n";
    out << "widths: " << join(dims) << '\n';
    out << "seed: " << seed << '\n';
    out << "weight_std_rule: " << rule << '\n';
    out << "network: written to " << out_path << '\n';
    return kExitOk;
}

int cmd_verify(std::ostream& out)
{
    bool all = true;
    auto check = [&](bool ok, const std::string& what) {
        out << (ok ? "ok    " : "FAIL  ") << what << '\n';
        all = all && ok;
    };

    const GeneratorNetwork ex1({Layer(Matrix{{1.0, 2.0}, {3.0, 1.0}}, Activation::relu()),
                                Layer(Matrix{{1.0, -1.0}}, Activation::relu())});
    const Vector points[] = {{-1.0, 1.0}, {1.0, 3.0}, {0.0, 2.0}};
    const double expected[] = {1.0, 1.0, 2.0};
    for (std::size_t i = 0; i < 3; ++i) {
        const double g = forward(ex1, points[i])[0];
        out << "G(" << format_double(points[i][0]) << ", " << format_double(points[i][1])
            << ") = " << format_double(g) << '\n';
        check(g == expected[i], "example network value " + format_double(expected[i]));
    }
    const auto trace = forward_trace(ex1, points[0]);
    check(trace[0][0] == 1.0 && trace[0][1] == 0.0, "hidden layer at (-1, 1) is (1, 0)");

    std::stringstream buffer;
    write_net(buffer, ex1);
    check(read_net(buffer) == ex1, "network file round trip");

    const std::vector<std::size_t> dims{5, 20, 40};
    const GeneratorNetwork net = random_gaussian_net(dims, WeightStdRule::Unit, 1);
    const Vector z{0.5, -1.0, 0.25, 2.0, -0.75};
    const Vector x = forward(net, z);
    const double exact_err = norm_inf(subtract(invert_realizable(net, x).latent, z).span());
    check(exact_err <= 1e-8, "exact inversion of a random 5-20-40 network (error " + format_double(exact_err) + ")");
    const double linf_err =
        norm_inf(subtract(invert_network(net, x, InversionMethod::Linf, {}).latent, z).span());
    check(linf_err <= 1e-6, "l_inf LP inversion of the same network (error " + format_double(linf_err) + ")");

    CnfFormula clause;
    clause.num_vars = 3;
    clause.clauses = {{1, 2, 3}};
    const Gadget gadget = build_binary_gadget(clause);
    check(forward(gadget.net, Vector{1.0, 1.0, 1.0})[0] == 0.0 &&
              forward(gadget.net, Vector{-1.0, -1.0, -1.0})[0] == 1.0,
          "binary gadget counts unsatisfied clauses");
    const Gadget real = build_real_gadget(clause);
    check(forward(real.net, Vector{1.0, -1.0, -1.0}) == real.target, "real gadget reaches its target");

    out << (all ? "verify: all checks passed" : "verify: FAILED") << '\n';
    return all ? kExitOk : kExitSolverFailure;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Layer-wise inversion of ReLU / LeakyReLU generative networks", "genvert"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(library_version()));

    InvertArgs inv;
    CLI::App* invert = app.add_subcommand("invert", "recover the latent code of an observation");
    invert->add_option("--net", inv.net, "network file")->required()->check(CLI::ExistingFile);
    invert->add_option("--obs", inv.obs, "observation file, one value per line")->required()->check(CLI::ExistingFile);
    invert->add_option("--method", inv.method, "inversion method")
        ->check(CLI::IsMember({"linf", "l1", "relaxed", "gd", "exact"}))
        ->capture_default_str();
    invert->add_option("--out", inv.out, "write the latent vector here");
    inv.lp.add_to(*invert);
    inv.gd.add_to(*invert);

    std::string config_path;
    std::string out_dir;
    std::optional<std::size_t> threads;
    CLI::App* experiment = app.add_subcommand("experiment", "run a JSON-configured trial sweep");
    experiment->add_option("--config", config_path, "JSON experiment config")->required()->check(CLI::ExistingFile);
    experiment->add_option("--out", out_dir, "output directory")->required();
    experiment->add_option("--threads", threads, "worker threads (overrides config and GENVERT_THREADS)");

    SenseArgs sen;
    CLI::App* sense = app.add_subcommand("sense", "projected gradient descent for y = A G(z)");
    sense->add_option("--net", sen.net, "network file")->required()->check(CLI::ExistingFile);
    sense->add_option("--obs", sen.obs, "measurement file")->required()->check(CLI::ExistingFile);
    auto* mask_opt = sense->add_option("--mask", sen.mask, "kept output indices (0-based)")->check(CLI::ExistingFile);
    auto* matrix_opt =
        sense->add_option("--matrix", sen.matrix, "dense operator: '<rows> <cols>' then entries")->check(CLI::ExistingFile);
    mask_opt->excludes(matrix_opt);
    sense->add_option("--inner", sen.inner, "projection method")
        ->check(CLI::IsMember({"linf", "l1", "relaxed", "exact"}))
        ->capture_default_str();
    sense->add_option("--outer-iters", sen.outer_iters, "outer iterations")->capture_default_str();
    sense->add_option("--step", sen.step, "image-space gradient step")->capture_default_str();
    sense->add_option("--out", sen.out, "write the latent vector here");
    sen.lp.add_to(*sense);

    std::string cnf;
    std::string gadget = "binary";
    std::string gadget_out;
    std::string target_out;
    CLI::App* reduce = app.add_subcommand("reduce", "compile a 3-CNF formula into a hardness gadget");
    reduce->add_option("--cnf", cnf, "DIMACS file")->required()->check(CLI::ExistingFile);
    reduce->add_option("--gadget", gadget, "gadget kind")
        ->check(CLI::IsMember({"binary", "real"}))
        ->capture_default_str();
    reduce->add_option("--out", gadget_out, "network output file")->required();
    reduce->add_option("--target-out", target_out, "target vector output file");

    std::string dims;
    std::uint64_t seed = 0;
    std::string std_rule = "unit";
    std::optional<double> leaky;
    std::string net_out;
    CLI::App* gen = app.add_subcommand("gen-net", "draw a random Gaussian network");
    gen->add_option("--dims", dims, "widths k,n_1,...,n_d")->required();
    gen->add_option("--seed", seed, "PRNG seed")->capture_default_str();
    gen->add_option("--std-rule", std_rule, "weight standard deviation rule")
        ->check(CLI::IsMember({"unit", "inv_sqrt_fanout"}))
        ->capture_default_str();
    gen->add_option("--leaky", leaky, "LeakyReLU slope (default ReLU)");
    gen->add_option("--out", net_out, "network output file")->required();

    CLI::App* verify = app.add_subcommand("verify", "run built-in self checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (invert->parsed())
            return cmd_invert(inv, out);
        if (experiment->parsed())
            return cmd_experiment(config_path, out_dir, threads, out);
        if (sense->parsed())
            return cmd_sense(sen, out);
        if (reduce->parsed())
            return cmd_reduce(cnf, gadget, gadget_out, target_out, out);
        if (gen->parsed())
            return cmd_gen_net(dims, seed, std_rule, leaky, net_out, out);
        if (verify->parsed())
            return cmd_verify(out);
    } catch (const Error& e) {
        err << "genvert: " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const fs::filesystem_error& e) {
        err << "genvert: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}

}  // namespace genvert::cli
