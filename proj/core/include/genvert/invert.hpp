#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "genvert/linalg.hpp"
#include "genvert/lp.hpp"
#include "genvert/model.hpp"

namespace genvert {

/// Relative tolerance for realizable-case equalities: checks use tol * (1 + ||x||_inf).
inline constexpr double kRealizableTolerance = 1e-8;
/// Relative threshold separating active (x_i > thr) from inactive outputs.
inline constexpr double kActiveThreshold = 1e-9;

enum class EpsilonRule {
    /// Every layer starts at epsilon_init and grows by alpha while infeasible.
    Adaptive,
    /// Layer i starts at epsilon_init * (2 / assumed_c)^(d - i).
    Theoretical,
};

std::string_view to_string(EpsilonRule rule);
EpsilonRule parse_epsilon_rule(std::string_view text);

/// How the l_inf loop locates its first feasible round. Both return the same
/// round; Bisection exploits that the uncapped optimal delta is monotone in
/// epsilon for ReLU layers and probes O(log rounds) programs. LeakyReLU layers
/// always run sequentially because the band constraints are not monotone.
enum class EpsilonSearch { Sequential, Bisection };

struct LpInvertConfig {
    double epsilon_init = 0.1;
    double alpha = 1.2;
    EpsilonRule epsilon_rule = EpsilonRule::Adaptive;
    double assumed_c = 1.0;
    std::size_t max_epsilon_rounds = 50;
    EpsilonSearch search = EpsilonSearch::Bisection;
    lp::SolverOptions solver{};

    /// Throws InvalidArgument on epsilon_init <= 0, alpha <= 1, assumed_c outside (0,2] or zero rounds.
    void validate() const;
};

struct RoundRecord {
    double epsilon = 0.0;
    lp::Status status = lp::Status::Infeasible;
    /// ||phi(z) - x||_1 of the round's solution when it has one.
    std::optional<double> l1_residual;
};

struct LayerInversionOutcome {
    Vector recovered;
    double epsilon_used = 0.0;
    /// Optimal delta (l_inf), sum of e (l_1) or objective (relaxed).
    double delta_or_l1 = 0.0;
    std::size_t active_set_size = 0;
    std::vector<RoundRecord> trail;
    std::size_t lp_solves = 0;
    /// Round budget ran out before the stopping rule fired; the best round is returned.
    bool budget_exhausted = false;
};

enum class InversionMethod { Linf, L1, Relaxed };

std::string_view to_string(InversionMethod method);
InversionMethod parse_inversion_method(std::string_view text);

struct Residuals {
    double linf = 0.0;
    double l1 = 0.0;
    double l2 = 0.0;
};

Residuals residuals(const Vector& reconstruction, const Vector& observation);

struct InversionReport {
    Vector latent;
    /// Deepest layer first. Empty for the gradient-descent baseline.
    std::vector<LayerInversionOutcome> layers;
    std::size_t lp_solves = 0;
    std::size_t gd_iterations = 0;
    bool success = false;
    /// ||G(latent) - x|| in each norm.
    Residuals residuals;
    std::vector<std::string> notes;
};

// ---------------------------------------------------------------------------
// Realizable case.

/// Solves the active rows of one ReLU layer exactly. Errors:
/// InsufficientActiveRows, RankDeficient, NotRealizable.
Vector invert_layer_realizable(const Layer& layer, const Vector& x);
/// Layer-wise exact recovery from layer d down to 1; errors carry the layer index.
InversionReport invert_realizable(const GeneratorNetwork& net, const Vector& x);

/// Coordinatewise LeakyReLU inverse followed by least squares.
Vector invert_layer_leaky_exact(const Layer& layer, const Vector& x);
InversionReport invert_leaky_exact(const GeneratorNetwork& net, const Vector& x);

// ---------------------------------------------------------------------------
// Single linear programs (one round of each loop).

struct RoundSolution {
    lp::Status status = lp::Status::Infeasible;
    std::optional<Vector> z;
    double objective = 0.0;
    std::size_t active_set_size = 0;
};

/// min delta over the on/off (ReLU) or three-band (LeakyReLU) constraints at
/// threshold eps; delta_cap adds the bound delta <= cap.
RoundSolution linf_round(const Layer& layer, const Vector& x, double eps, std::optional<double> delta_cap,
                         const lp::SolverOptions& options = {});
/// min sum(e) with per-coordinate slack e >= 0.
RoundSolution l1_round(const Layer& layer, const Vector& x, double eps, const lp::SolverOptions& options = {});
/// Relaxed program: ReLU maximizes sum max(0,x_i) w_i^T z under w_i^T z <= x_i + eps;
/// LeakyReLU maximizes x^T W z under (1/c) min(x_i - eps, 0) <= w_i^T z <= max(x_i + eps, 0).
RoundSolution relaxed_round(const Layer& layer, const Vector& x, double eps, const lp::SolverOptions& options = {});

// ---------------------------------------------------------------------------
// Per-layer loops.

/// l_inf loop: grow epsilon by alpha until the capped program is feasible and
/// return that first feasible round. Errors: NeverFeasible, IterationLimit.
LayerInversionOutcome invert_layer_linf(const Layer& layer, const Vector& x, const LpInvertConfig& cfg);
LayerInversionOutcome invert_layer_linf_leaky(const Layer& layer, const Vector& x, const LpInvertConfig& cfg);

/// l_1 loop: stop at the first round whose ||phi(z) - x||_1 does not improve
/// and return the previous round.
LayerInversionOutcome invert_layer_l1(const Layer& layer, const Vector& x, const LpInvertConfig& cfg);
LayerInversionOutcome invert_layer_l1_leaky(const Layer& layer, const Vector& x, const LpInvertConfig& cfg);

/// Relaxed loop; the same stopping test as l_1 but only from round 3 on and only
/// when the previous round was feasible. Errors: UnboundedRelaxation, NeverFeasible.
LayerInversionOutcome invert_layer_relaxed(const Layer& layer, const Vector& x, const LpInvertConfig& cfg);

/// Backward layer-wise inversion. The activation of each layer selects the
/// ReLU or LeakyReLU variant of the chosen method.
InversionReport invert_network(const GeneratorNetwork& net, const Vector& x, InversionMethod method,
                               const LpInvertConfig& cfg);

/// epsilon used for layer `layer` (1-based) of a depth-d network under cfg.epsilon_rule.
double layer_epsilon(const LpInvertConfig& cfg, std::size_t depth, std::size_t layer);

// ---------------------------------------------------------------------------

enum class BoundNorm { Linf, L1 };

struct BoundReport {
    std::size_t depth = 0;
    double epsilon = 0.0;
    double assumed_c = 0.0;
    double bound = 0.0;
};

/// (2/c)^d * eps for either norm.
BoundReport theoretical_bound(std::size_t depth, double eps, double c, BoundNorm norm);

}  // namespace genvert
