#include "genvert/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <ostream>
#include <thread>

#include "genvert/errors.hpp"
#include "genvert/lp.hpp"
#include "genvert/random.hpp"

#ifndef GENVERT_VERSION
#define GENVERT_VERSION "unknown"
#endif

namespace genvert {

std::string_view library_version()
{
    return GENVERT_VERSION;
}

std::string_view to_string(NoiseSpec::Kind kind)
{
    switch (kind) {
    case NoiseSpec::Kind::None: return "none";
    case NoiseSpec::Kind::Uniform: return "uniform";
    case NoiseSpec::Kind::Gaussian: return "gaussian";
    }
    return "unknown";
}

NoiseSpec::Kind parse_noise_kind(std::string_view text)
{
    if (text == "none")
        return NoiseSpec::Kind::None;
    if (text == "uniform")
        return NoiseSpec::Kind::Uniform;
    if (text == "gaussian")
        return NoiseSpec::Kind::Gaussian;
    throw Error(ErrorCode::InvalidArgument, "unknown noise kind '" + std::string(text) + "'");
}

std::string_view to_string(Method method)
{
    switch (method) {
    case Method::Linf: return "linf";
    case Method::L1: return "l1";
    case Method::Relaxed: return "relaxed";
    case Method::Gd: return "gd";
    case Method::Exact: return "exact";
    }
    return "unknown";
}

Method parse_method(std::string_view text)
{
    if (text == "linf")
        return Method::Linf;
    if (text == "l1")
        return Method::L1;
    if (text == "relaxed")
        return Method::Relaxed;
    if (text == "gd")
        return Method::Gd;
    if (text == "exact")
        return Method::Exact;
    throw Error(ErrorCode::InvalidArgument, "unknown method '" + std::string(text) + "'");
}

void TrialConfig::validate() const
{
    if (trials == 0)
        throw Error(ErrorCode::ValidationError, "trials must be at least 1");
    if (!(success_threshold > 0.0))
        throw Error(ErrorCode::ValidationError, "success_threshold must be positive");
    if (!(noise.a >= 0.0) || !std::isfinite(noise.a))
        throw Error(ErrorCode::ValidationError, "noise level must be nonnegative");
    if (methods.empty())
        throw Error(ErrorCode::ValidationError, "no methods selected");
    if (dims.size() < 2)
        throw Error(ErrorCode::ValidationError, "dims needs at least an input and an output width");
    if (std::find(dims.begin(), dims.end(), std::size_t{0}) != dims.end())
        throw Error(ErrorCode::ValidationError, "dims must be positive");
    if (leaky_slope && !(*leaky_slope > 0.0 && *leaky_slope < 1.0))
        throw Error(ErrorCode::ValidationError, "leaky slope must lie in (0,1)");
    lp.validate();
    gd.validate();
}

TrialSeeds trial_seeds(std::uint64_t base_seed, std::size_t trial)
{
    const std::uint64_t t = derive_seed(base_seed, trial);
    return {t, derive_seed(t, 1), derive_seed(t, 2), derive_seed(t, 3), derive_seed(t, 4)};
}

std::size_t default_thread_count()
{
    if (const char* env = std::getenv("GENVERT_THREADS")) {
        char* end = nullptr;
        const long long v = std::strtoll(env, &end, 10);
        if (end != env && *end == '\0' && v > 0)
            return static_cast<std::size_t>(v);
    }
    return std::max(1U, std::thread::hardware_concurrency());
}

namespace {

// Runs job(i) for i in [0, count) on up to `threads` workers. The first
// exception escaping a job is rethrown after all workers stop.
template <class Job>
void parallel_for(std::size_t count, std::size_t threads, Job&& job)
{
    threads = std::max<std::size_t>(1, std::min(threads, count));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i)
            job(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count)
                return;
            try {
                job(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
                next = count;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t)
        pool.emplace_back(worker);
    for (auto& th : pool)
        th.join();
    if (failure)
        std::rethrow_exception(failure);
}

struct Instance {
    GeneratorNetwork net;
    Vector latent;
    Vector clean;
    Vector observed;
    double relative_noise = 0.0;
};

Instance draw_instance(const TrialConfig& cfg, const TrialSeeds& seeds)
{
    const Activation act = cfg.leaky_slope ? Activation::leaky(*cfg.leaky_slope) : Activation::relu();
    GeneratorNetwork net = random_gaussian_net(cfg.dims, cfg.weight_std_rule, seeds.net, act);
    Rng latent_rng(seeds.latent);
    Vector z(cfg.dims.front());
    for (double& v : z)
        v = latent_rng.normal();
    Vector clean = forward(net, z);

    Vector observed = clean;
    double relative_noise = 0.0;
    if (cfg.noise.kind != NoiseSpec::Kind::None) {
        Rng noise_rng(cfg.noise.seed == 0 ? seeds.noise : derive_seed(seeds.noise, cfg.noise.seed));
        Vector e(clean.dim());
        for (double& v : e)
            v = cfg.noise.kind == NoiseSpec::Kind::Uniform ? noise_rng.uniform(-1.0, 1.0) : noise_rng.normal();
        e = scale(e, cfg.noise.a);
        observed = add(clean, e);
        const double clean_norm = norm2(clean.span());
        relative_noise = clean_norm > 0.0 ? norm2(e.span()) / clean_norm : 0.0;
    }
    return {std::move(net), std::move(z), std::move(clean), std::move(observed), relative_noise};
}

TrialRecord run_method(const TrialConfig& cfg, Method method, const Instance& inst, const TrialSeeds& seeds,
                       std::size_t trial)
{
    TrialRecord rec;
    rec.method = method;
    rec.trial = trial;
    rec.seed = seeds.trial;
    rec.k = cfg.dims.front();
    rec.noise_kind = cfg.noise.kind;
    rec.noise_level = cfg.noise.kind == NoiseSpec::Kind::None ? 0.0 : cfg.noise.a;
    rec.relative_noise = inst.relative_noise;

    const auto start = std::chrono::steady_clock::now();
    try {
        InversionReport report;
        switch (method) {
        case Method::Linf: report = invert_network(inst.net, inst.observed, InversionMethod::Linf, cfg.lp); break;
        case Method::L1: report = invert_network(inst.net, inst.observed, InversionMethod::L1, cfg.lp); break;
        case Method::Relaxed:
            report = invert_network(inst.net, inst.observed, InversionMethod::Relaxed, cfg.lp);
            break;
        case Method::Gd: {
            GdConfig gd = cfg.gd;
            if (gd.init_seed)
                gd.init_seed = derive_seed(seeds.gd, *gd.init_seed);
            report = gd_invert(inst.net, inst.observed, ForwardOperator::identity(inst.net.output_dim()), gd);
            break;
        }
        case Method::Exact:
            report = cfg.leaky_slope ? invert_leaky_exact(inst.net, inst.observed)
                                     : invert_realizable(inst.net, inst.observed);
            break;
        }
        const double err = norm2(subtract(report.latent, inst.latent).span()) / norm2(inst.latent.span());
        rec.relative_error = err;
        rec.residuals = report.residuals;
        rec.lp_solves = report.lp_solves;
        rec.gd_iterations = report.gd_iterations;
        rec.success = err <= cfg.success_threshold;
    } catch (const Error& e) {
        rec.failed = true;
        rec.error = e.what();
    }
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

}  // namespace

std::vector<TrialRecord> run_noise_sweep(const TrialConfig& cfg)
{
    cfg.validate();
    const std::size_t methods = cfg.methods.size();
    std::vector<TrialRecord> slots(cfg.trials * methods);
    const std::size_t threads = cfg.threads == 0 ? default_thread_count() : cfg.threads;
    parallel_for(cfg.trials, threads, [&](std::size_t t) {
        const TrialSeeds seeds = trial_seeds(cfg.base_seed, t);
        const Instance inst = draw_instance(cfg, seeds);
        for (std::size_t m = 0; m < methods; ++m)
            slots[m * cfg.trials + t] = run_method(cfg, cfg.methods[m], inst, seeds, t);
    });
    return slots;
}

std::vector<TrialRecord> run_noise_levels(const TrialConfig& cfg, const std::vector<double>& levels)
{
    std::vector<TrialRecord> all;
    for (double a : levels) {
        TrialConfig level_cfg = cfg;
        level_cfg.noise.a = a;
        if (a == 0.0)
            level_cfg.noise.kind = NoiseSpec::Kind::None;
        auto records = run_noise_sweep(level_cfg);
        all.insert(all.end(), std::make_move_iterator(records.begin()), std::make_move_iterator(records.end()));
    }
    return all;
}

std::vector<SuccessRow> summarize_success(const std::vector<TrialRecord>& records, const std::vector<Method>& methods)
{
    std::vector<std::size_t> ks;
    for (const auto& r : records) {
        if (std::find(ks.begin(), ks.end(), r.k) == ks.end())
            ks.push_back(r.k);
    }
    std::vector<SuccessRow> rows;
    for (std::size_t k : ks) {
        for (Method m : methods) {
            SuccessRow row{m, k, 0, 0, 0.0};
            for (const auto& r : records) {
                if (r.k == k && r.method == m) {
                    ++row.trials;
                    row.successes += r.success ? 1 : 0;
                }
            }
            row.rate = row.trials == 0 ? 0.0 : static_cast<double>(row.successes) / static_cast<double>(row.trials);
            rows.push_back(row);
        }
    }
    return rows;
}

std::vector<TimingRow> summarize_timing(const std::vector<TrialRecord>& records, const std::vector<Method>& methods)
{
    std::vector<TimingRow> rows;
    for (const SuccessRow& s : summarize_success(records, methods)) {
        TimingRow row{s.method, s.k, 0, 0.0};
        for (const auto& r : records) {
            if (r.k == s.k && r.method == s.method) {
                ++row.trials;
                row.mean_seconds += r.wall_seconds;
            }
        }
        if (row.trials > 0)
            row.mean_seconds /= static_cast<double>(row.trials);
        rows.push_back(row);
    }
    return rows;
}

SuccessTable run_success_vs_k(const TrialConfig& cfg, const std::vector<std::size_t>& ks)
{
    cfg.validate();
    if (ks.empty())
        throw Error(ErrorCode::ValidationError, "no k values given");
    for (std::size_t k : ks) {
        if (k == 0 || k > cfg.dims[1])
            throw Error(ErrorCode::ValidationError, "k = " + std::to_string(k) + " exceeds hidden width " +
                                                        std::to_string(cfg.dims[1]));
    }
    SuccessTable table;
    for (std::size_t k : ks) {
        TrialConfig k_cfg = cfg;
        k_cfg.dims[0] = k;
        auto records = run_noise_sweep(k_cfg);
        table.records.insert(table.records.end(), std::make_move_iterator(records.begin()),
                             std::make_move_iterator(records.end()));
    }
    table.rows = summarize_success(table.records, cfg.methods);
    return table;
}

std::vector<TimingRow> run_timing(const TrialConfig& cfg, const std::vector<std::size_t>& ks)
{
    TrialConfig serial = cfg;
    serial.threads = 1;
    const SuccessTable table = run_success_vs_k(serial, ks);
    return summarize_timing(table.records, cfg.methods);
}

std::optional<double> median_relative_error(const std::vector<TrialRecord>& records, Method method,
                                            double noise_level)
{
    std::vector<double> errs;
    for (const auto& r : records) {
        if (r.method == method && r.noise_level == noise_level)
            errs.push_back(r.relative_error.value_or(std::numeric_limits<double>::infinity()));
    }
    if (errs.empty())
        return std::nullopt;
    std::sort(errs.begin(), errs.end());
    const std::size_t n = errs.size();
    return n % 2 == 1 ? errs[n / 2] : 0.5 * (errs[n / 2 - 1] + errs[n / 2]);
}

double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys)
{
    if (xs.size() != ys.size() || xs.size() < 2)
        throw Error(ErrorCode::InvalidArgument, "loglog_slope needs matching series of length >= 2");
    std::vector<double> lx;
    std::vector<double> ly;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!(xs[i] > 0.0) || !(ys[i] > 0.0) || !std::isfinite(ys[i]))
            throw Error(ErrorCode::InvalidArgument, "loglog_slope needs positive finite values");
        lx.push_back(std::log(xs[i]));
        ly.push_back(std::log(ys[i]));
    }
    const double n = static_cast<double>(lx.size());
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    if (sxx == 0.0)
        throw Error(ErrorCode::InvalidArgument, "loglog_slope needs two distinct x values");
    return sxy / sxx;
}

double estimate_assumption_constant(const Matrix& w, std::size_t m, BoundNorm norm, std::size_t samples,
                                    std::uint64_t seed)
{
    if (m > w.rows())
        throw Error(ErrorCode::InvalidArgument, "subset size " + std::to_string(m) + " exceeds " +
                                                    std::to_string(w.rows()) + " rows");
    if (m <= w.cols())
        throw Error(ErrorCode::InvalidArgument, "subset size must exceed the column count");
    if (samples == 0)
        throw Error(ErrorCode::InvalidArgument, "samples must be positive");
    Rng rng(seed);
    std::vector<std::size_t> perm(w.rows());
    std::vector<double> u(w.cols());
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < samples; ++s) {
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        // Partial Fisher-Yates for the first m entries.
        for (std::size_t i = 0; i < m && m < w.rows(); ++i)
            std::swap(perm[i], perm[i + rng.below(w.rows() - i)]);
        for (double& v : u)
            v = rng.normal();
        const double unorm = norm == BoundNorm::Linf ? norm_inf(u) : norm1(u);
        if (unorm == 0.0)
            continue;
        double image = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double v = dot(w.row(perm[i]), u);
            image = norm == BoundNorm::Linf ? std::max(image, std::abs(v)) : image + std::abs(v);
        }
        best = std::min(best, image / unorm);
    }
    return best;
}

double exact_linf_constant(const Matrix& a)
{
    const std::size_t k = a.cols();
    if (k == 0 || a.rows() == 0)
        throw Error(ErrorCode::InvalidArgument, "exact_linf_constant needs a nonempty matrix");
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) {
        lp::LpProblem p(k + 1, lp::Sense::Minimize);
        std::vector<double> obj(k + 1, 0.0);
        obj[k] = 1.0;
        p.set_objective(Vector(std::move(obj)));
        for (std::size_t c = 0; c < k; ++c)
            p.set_bounds(c, c == j ? 1.0 : -1.0, 1.0);
        for (std::size_t r = 0; r < a.rows(); ++r) {
            std::vector<double> row(a.row(r).begin(), a.row(r).end());
            row.push_back(-1.0);
            p.add_constraint(Vector(row), lp::Relation::LessEqual, 0.0);
            row.back() = 1.0;
            p.add_constraint(Vector(std::move(row)), lp::Relation::GreaterEqual, 0.0);
        }
        const lp::LpSolution sol = lp::solve(p);
        if (sol.status != lp::Status::Optimal)
            throw Error(ErrorCode::InvalidArgument, "constant LP not solved: " + lp::to_string(sol.status));
        best = std::min(best, std::max(0.0, *sol.objective));
    }
    return best;
}

// ---------------------------------------------------------------------------
// Output.

std::string csv_field(std::string_view text)
{
    if (text.find_first_of(",\"\r\n") == std::string_view::npos)
        return std::string(text);
    std::string out = "\"";
    for (char c : text) {
        if (c == '"')
            out += '"';
        out += c;
    }
    out += '"';
    return out;
}

void write_trials_csv(std::ostream& out, const std::vector<TrialRecord>& records)
{
    out << "method,trial,seed,k,noise_kind,noise_level,relative_noise,relative_error,residual_linf,residual_l1,"
           "residual_l2,success,failed,lp_solves,gd_iterations,error\n";
    for (const auto& r : records) {
        out << to_string(r.method) << ',' << r.trial << ',' << r.seed << ',' << r.k << ',' << to_string(r.noise_kind)
            << ',' << format_double(r.noise_level) << ',' << format_double(r.relative_noise) << ','
            << (r.relative_error ? format_double(*r.relative_error) : std::string()) << ','
            << format_double(r.residuals.linf) << ',' << format_double(r.residuals.l1) << ','
            << format_double(r.residuals.l2) << ',' << (r.success ? 1 : 0) << ',' << (r.failed ? 1 : 0) << ','
            << r.lp_solves << ',' << r.gd_iterations << ',' << csv_field(r.error) << '\n';
    }
}

void write_timing_records_csv(std::ostream& out, const std::vector<TrialRecord>& records)
{
    out << "method,trial,k,noise_level,wall_seconds\n";
    for (const auto& r : records) {
        out << to_string(r.method) << ',' << r.trial << ',' << r.k << ',' << format_double(r.noise_level) << ','
            << format_double(r.wall_seconds) << '\n';
    }
}

void write_success_csv(std::ostream& out, const std::vector<SuccessRow>& rows)
{
    out << "method,k,trials,successes,rate\n";
    for (const auto& r : rows)
        out << to_string(r.method) << ',' << r.k << ',' << r.trials << ',' << r.successes << ','
            << format_double(r.rate) << '\n';
}

void write_timing_csv(std::ostream& out, const std::vector<TimingRow>& rows)
{
    out << "method,k,trials,mean_seconds\n";
    for (const auto& r : rows)
        out << to_string(r.method) << ',' << r.k << ',' << r.trials << ',' << format_double(r.mean_seconds) << '\n';
}

std::vector<std::pair<std::string, std::string>> run_metadata(const TrialConfig& cfg)
{
    std::string dims;
    for (std::size_t i = 0; i < cfg.dims.size(); ++i)
        dims += (i ? "," : "") + std::to_string(cfg.dims[i]);
    std::string methods;
    for (std::size_t i = 0; i < cfg.methods.size(); ++i)
        methods += std::string(i ? "," : "") + std::string(to_string(cfg.methods[i]));
    return {
        {"code_version", std::string(library_version())},
        {"dims", dims},
        {"activation", cfg.leaky_slope ? "leaky:" + format_double(*cfg.leaky_slope) : "relu"},
        {"weight_std_rule", std::string(to_string(cfg.weight_std_rule))},
        {"methods", methods},
        {"trials", std::to_string(cfg.trials)},
        {"success_threshold", format_double(cfg.success_threshold)},
        {"base_seed", std::to_string(cfg.base_seed)},
        {"seed_rule", "trial=splitmix64(base_seed^trial); net,latent,noise,gd=splitmix64(trial^{1,2,3,4})"},
        {"prng_family", std::string(Rng::kFamily)},
        {"normal_transform", std::string(Rng::kNormalTransform)},
        {"latent_prior", "standard_normal"},
        {"noise_kind", std::string(to_string(cfg.noise.kind))},
        {"noise_level", format_double(cfg.noise.a)},
        {"noise_seed", std::to_string(cfg.noise.seed)},
        {"gaussian_noise_parameter", "standard_deviation"},
        {"relative_noise_definition", "||e||_2/||G(z*)||_2"},
        {"relative_error_definition", "||z-z*||_2/||z*||_2"},
        {"epsilon_init", format_double(cfg.lp.epsilon_init)},
        {"alpha", format_double(cfg.lp.alpha)},
        {"epsilon_rule", std::string(to_string(cfg.lp.epsilon_rule))},
        {"assumed_c", format_double(cfg.lp.assumed_c)},
        {"max_epsilon_rounds", std::to_string(cfg.lp.max_epsilon_rounds)},
        {"gd_learning_rate", format_double(cfg.gd.learning_rate)},
        {"gd_max_iters", std::to_string(cfg.gd.max_iters)},
        {"gd_grad_norm_stop", format_double(cfg.gd.grad_norm_stop)},
        {"gd_init", cfg.gd.init_seed ? "gaussian:" + std::to_string(*cfg.gd.init_seed) : "zero"},
        {"gd_restarts", std::to_string(cfg.gd.restarts)},
    };
}

void write_metadata(std::ostream& out, const std::vector<std::pair<std::string, std::string>>& entries)
{
    for (const auto& [key, value] : entries)
        out << key << '=' << value << '\n';
}

}  // namespace genvert
