#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "genvert/baseline.hpp"
#include "genvert/invert.hpp"
#include "genvert/linalg.hpp"
#include "genvert/model.hpp"

namespace genvert {

struct NoiseSpec {
    enum class Kind { None, Uniform, Gaussian };
    Kind kind = Kind::None;
    /// Uniform: half-width of U(-a, a). Gaussian: standard deviation.
    double a = 0.0;
    /// Mixed into the per-trial noise stream; the level a does not enter the
    /// stream, so different levels perturb along the same direction.
    std::uint64_t seed = 0;
};

std::string_view to_string(NoiseSpec::Kind kind);
NoiseSpec::Kind parse_noise_kind(std::string_view text);

enum class Method { Linf, L1, Relaxed, Gd, Exact };

std::string_view to_string(Method method);
Method parse_method(std::string_view text);

struct TrialConfig {
    /// (k, n_1, ..., n_d)
    std::vector<std::size_t> dims{20, 100, 500};
    WeightStdRule weight_std_rule = WeightStdRule::Unit;
    /// ReLU when empty, LeakyReLU with this slope otherwise.
    std::optional<double> leaky_slope;
    std::vector<Method> methods{Method::Linf};
    NoiseSpec noise;
    std::size_t trials = 20;
    double success_threshold = 1e-3;
    std::uint64_t base_seed = 0;
    LpInvertConfig lp;
    /// GD settings. A set init_seed is replaced per trial by a derived seed.
    GdConfig gd;
    /// 0 = GENVERT_THREADS or the machine's core count.
    std::size_t threads = 0;

    /// Throws ValidationError on trials == 0, threshold <= 0, a < 0, empty
    /// methods, fewer than two dims, or any zero width.
    void validate() const;
};

struct TrialRecord {
    Method method = Method::Linf;
    std::size_t trial = 0;
    std::uint64_t seed = 0;
    std::size_t k = 0;
    NoiseSpec::Kind noise_kind = NoiseSpec::Kind::None;
    double noise_level = 0.0;
    /// ||e||_2 / ||G(z*)||_2
    double relative_noise = 0.0;
    /// ||z - z*||_2 / ||z*||_2; empty when the method failed.
    std::optional<double> relative_error;
    /// ||G(z) - x|| in each norm; zero when failed.
    Residuals residuals;
    bool success = false;
    bool failed = false;
    std::string error;
    std::size_t lp_solves = 0;
    std::size_t gd_iterations = 0;
    /// Not part of the trial CSV so that file stays byte-reproducible.
    double wall_seconds = 0.0;
};

/// Seeds used by trial t: trial = derive_seed(base, t); the network, latent,
/// noise and GD streams derive from it with indices 1, 2, 3, 4.
struct TrialSeeds {
    std::uint64_t trial, net, latent, noise, gd;
};
TrialSeeds trial_seeds(std::uint64_t base_seed, std::size_t trial);

/// Runs every method on cfg.trials random instances. Records are ordered by
/// (method position in cfg.methods, trial index). Method failures are recorded,
/// never thrown.
std::vector<TrialRecord> run_noise_sweep(const TrialConfig& cfg);

/// run_noise_sweep once per level, concatenated in level order.
std::vector<TrialRecord> run_noise_levels(const TrialConfig& cfg, const std::vector<double>& levels);

struct SuccessRow {
    Method method = Method::Linf;
    std::size_t k = 0;
    std::size_t trials = 0;
    std::size_t successes = 0;
    double rate = 0.0;
};

struct SuccessTable {
    std::vector<SuccessRow> rows;
    std::vector<TrialRecord> records;
};

/// Replaces dims[0] with each k. Throws ValidationError when k exceeds the
/// first hidden width.
SuccessTable run_success_vs_k(const TrialConfig& cfg, const std::vector<std::size_t>& ks);

struct TimingRow {
    Method method = Method::Linf;
    std::size_t k = 0;
    std::size_t trials = 0;
    double mean_seconds = 0.0;
};

/// Mean wall time per (method, k); trials run on one thread so timings do
/// not compete. All methods see the same seeds.
std::vector<TimingRow> run_timing(const TrialConfig& cfg, const std::vector<std::size_t>& ks);

std::vector<TimingRow> summarize_timing(const std::vector<TrialRecord>& records, const std::vector<Method>& methods);
std::vector<SuccessRow> summarize_success(const std::vector<TrialRecord>& records, const std::vector<Method>& methods);

/// Median of the present relative errors of `method` at `noise_level`
/// (failures count as +inf). Empty if no record matches.
std::optional<double> median_relative_error(const std::vector<TrialRecord>& records, Method method,
                                            double noise_level);

/// Least-squares slope of log(y) against log(x). Needs two distinct positive xs.
double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys);

/// Monte-Carlo estimate of min ||W_I u|| / ||u|| over index sets |I| = m and
/// Gaussian directions u, in the chosen norm. Errors: InvalidArgument when
/// m <= cols or m > rows, or samples == 0.
double estimate_assumption_constant(const Matrix& w, std::size_t m, BoundNorm norm, std::size_t samples,
                                    std::uint64_t seed);

/// Exact min over ||u||_inf = 1 of ||A u||_inf, one LP per coordinate.
/// Zero when A has a nontrivial null space.
double exact_linf_constant(const Matrix& a);

/// Worker count: GENVERT_THREADS when set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
std::size_t default_thread_count();

/// RFC-4180 field quoting.
std::string csv_field(std::string_view text);
void write_trials_csv(std::ostream& out, const std::vector<TrialRecord>& records);
void write_timing_records_csv(std::ostream& out, const std::vector<TrialRecord>& records);
void write_success_csv(std::ostream& out, const std::vector<SuccessRow>& rows);
void write_timing_csv(std::ostream& out, const std::vector<TimingRow>& rows);

/// key=value lines describing the run: config, seeds, PRNG family, weight rule,
/// noise conventions and code version.
std::vector<std::pair<std::string, std::string>> run_metadata(const TrialConfig& cfg);
void write_metadata(std::ostream& out, const std::vector<std::pair<std::string, std::string>>& entries);

std::string_view library_version();

}  // namespace genvert
