#include "genvert/invert.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "genvert/errors.hpp"

namespace genvert {

void LpInvertConfig::validate() const
{
    if (!(epsilon_init > 0.0) || !std::isfinite(epsilon_init))
        throw Error(ErrorCode::InvalidArgument, "epsilon_init must be positive");
    if (!(alpha > 1.0) || !std::isfinite(alpha))
        throw Error(ErrorCode::InvalidArgument, "alpha must exceed 1");
    if (!(assumed_c > 0.0 && assumed_c <= 2.0))
        throw Error(ErrorCode::InvalidArgument, "assumed_c must lie in (0,2]");
    if (max_epsilon_rounds == 0)
        throw Error(ErrorCode::InvalidArgument, "max_epsilon_rounds must be positive");
}

std::string_view to_string(EpsilonRule rule)
{
    return rule == EpsilonRule::Adaptive ? "adaptive" : "theoretical";
}

EpsilonRule parse_epsilon_rule(std::string_view text)
{
    if (text == "adaptive")
        return EpsilonRule::Adaptive;
    if (text == "theoretical")
        return EpsilonRule::Theoretical;
    throw Error(ErrorCode::InvalidArgument, "unknown epsilon rule '" + std::string(text) + "'");
}

std::string_view to_string(InversionMethod method)
{
    switch (method) {
    case InversionMethod::Linf: return "linf";
    case InversionMethod::L1: return "l1";
    case InversionMethod::Relaxed: return "relaxed";
    }
    return "unknown";
}

InversionMethod parse_inversion_method(std::string_view text)
{
    if (text == "linf")
        return InversionMethod::Linf;
    if (text == "l1")
        return InversionMethod::L1;
    if (text == "relaxed")
        return InversionMethod::Relaxed;
    throw Error(ErrorCode::InvalidArgument, "unknown inversion method '" + std::string(text) + "'");
}

Residuals residuals(const Vector& reconstruction, const Vector& observation)
{
    const Vector diff = subtract(reconstruction, observation);
    return {norm_inf(diff.span()), norm1(diff.span()), norm2(diff.span())};
}

namespace {

void require_dim(const Layer& layer, const Vector& x)
{
    if (x.dim() != layer.output_dim())
        throw Error(ErrorCode::DimensionMismatch, "observation has " + std::to_string(x.dim()) +
                                                      " entries, layer outputs " + std::to_string(layer.output_dim()));
}

void require_relu(const Layer& layer, const char* op)
{
    if (layer.activation().is_leaky())
        throw Error(ErrorCode::InvalidArgument, std::string(op) + " expects a ReLU layer");
}

void require_leaky(const Layer& layer, const char* op)
{
    if (!layer.activation().is_leaky())
        throw Error(ErrorCode::InvalidArgument, std::string(op) + " expects a LeakyReLU layer");
}

// Indices (into `candidates`) of the first rows of w that are linearly
// independent, scanning in order and stopping at w.cols().
std::vector<std::size_t> first_independent_rows(const Matrix& w, const std::vector<std::size_t>& candidates)
{
    const std::size_t k = w.cols();
    std::vector<std::vector<double>> basis;
    std::vector<std::size_t> chosen;
    std::vector<double> v(k);
    for (std::size_t idx : candidates) {
        const auto row = w.row(idx);
        std::copy(row.begin(), row.end(), v.begin());
        const double original = norm2(v);
        if (original == 0.0)
            continue;
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& q : basis) {
                const double proj = dot(q, v);
                for (std::size_t c = 0; c < k; ++c)
                    v[c] -= proj * q[c];
            }
        }
        const double remaining = norm2(v);
        if (remaining <= 1e-9 * original)
            continue;
        for (double& e : v)
            e /= remaining;
        basis.push_back(v);
        chosen.push_back(idx);
        if (chosen.size() == k)
            break;
    }
    return chosen;
}

double active_residual(const Matrix& w_active, const Vector& rhs, const Vector& z)
{
    return norm2(subtract(matvec(w_active, z), rhs).span());
}

Vector layer_rhs(const Layer& layer, const Vector& x)
{
    return subtract(x, layer.bias());
}

double l1_residual(const Layer& layer, const Vector& z, const Vector& x)
{
    return norm1(subtract(layer.forward(z), x).span());
}

}  // namespace

// ---------------------------------------------------------------------------

Vector invert_layer_realizable(const Layer& layer, const Vector& x)
{
    require_relu(layer, "invert_layer_realizable");
    require_dim(layer, x);
    const std::size_t k = layer.input_dim();
    const double scale = 1.0 + norm_inf(x.span());
    const double threshold = kActiveThreshold * scale;
    const double tol = kRealizableTolerance * scale;

    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < x.dim(); ++i) {
        if (x[i] < -tol)
            throw Error(ErrorCode::NotRealizable, "negative observation at output " + std::to_string(i));
        if (x[i] > threshold)
            active.push_back(i);
    }
    if (active.size() < k)
        throw Error(ErrorCode::InsufficientActiveRows,
                    std::to_string(active.size()) + " active rows for " + std::to_string(k) + " unknowns");

    const Vector rhs_all = layer_rhs(layer, x);
    const std::vector<std::size_t> square_rows = first_independent_rows(layer.weights(), active);
    if (square_rows.size() < k)
        throw Error(ErrorCode::RankDeficient, "active rows span only " + std::to_string(square_rows.size()) +
                                                  " of " + std::to_string(k) + " dimensions");

    auto gather = [&rhs_all](const std::vector<std::size_t>& idx) {
        std::vector<double> out;
        out.reserve(idx.size());
        for (std::size_t i : idx)
            out.push_back(rhs_all[i]);
        return Vector(std::move(out));
    };

    const Matrix w_active = layer.weights().select_rows(active);
    const Vector rhs_active = gather(active);
    Vector z = solve_square(layer.weights().select_rows(square_rows), gather(square_rows));
    if (active.size() > k) {
        Vector ls = least_squares(w_active, rhs_active).solution;
        if (active_residual(w_active, rhs_active, ls) < active_residual(w_active, rhs_active, z))
            z = std::move(ls);
    }

    const Vector pre = layer.pre_activation(z);
    std::size_t a = 0;
    for (std::size_t i = 0; i < x.dim(); ++i) {
        if (a < active.size() && active[a] == i) {
            ++a;
            if (std::abs(pre[i] - x[i]) > tol)
                throw Error(ErrorCode::NotRealizable, "active output " + std::to_string(i) + " misfit " +
                                                          format_double(std::abs(pre[i] - x[i])));
        } else if (pre[i] > tol) {
            throw Error(ErrorCode::NotRealizable, "inactive output " + std::to_string(i) + " has pre-activation " +
                                                      format_double(pre[i]));
        }
    }
    return z;
}

namespace {

template <class LayerFn>
InversionReport invert_exact_layers(const GeneratorNetwork& net, const Vector& x, LayerFn&& per_layer)
{
    if (x.dim() != net.output_dim())
        throw Error(ErrorCode::DimensionMismatch, "observation dimension");
    InversionReport report;
    Vector current = x;
    for (std::size_t i = net.depth(); i >= 1; --i) {
        const Layer& layer = net.layer(i);
        try {
            Vector z = per_layer(layer, current);
            LayerInversionOutcome outcome;
            outcome.recovered = z;
            std::size_t active = 0;
            for (double v : current)
                active += v > kActiveThreshold * (1.0 + norm_inf(current.span())) ? 1 : 0;
            outcome.active_set_size = active;
            report.layers.push_back(std::move(outcome));
            current = std::move(z);
        } catch (const LayerError&) {
            throw;
        } catch (const Error& e) {
            throw LayerError(e.code(), i, e.message());
        }
    }
    report.latent = current;
    const Vector reconstruction = forward(net, report.latent);
    report.residuals = residuals(reconstruction, x);
    report.success = report.residuals.linf <= kRealizableTolerance * (1.0 + norm_inf(x.span()));
    return report;
}

}  // namespace

InversionReport invert_realizable(const GeneratorNetwork& net, const Vector& x)
{
    return invert_exact_layers(net, x, [](const Layer& l, const Vector& obs) {
        return invert_layer_realizable(l, obs);
    });
}

Vector invert_layer_leaky_exact(const Layer& layer, const Vector& x)
{
    require_leaky(layer, "invert_layer_leaky_exact");
    require_dim(layer, x);
    const double c = layer.activation().slope();
    std::vector<double> pre(x.dim());
    for (std::size_t i = 0; i < x.dim(); ++i)
        pre[i] = (x[i] >= 0.0 ? x[i] : x[i] / c) - layer.bias()[i];
    const Vector target(std::move(pre));
    const LeastSquaresResult ls = least_squares(layer.weights(), target);
    const double tol = kRealizableTolerance * (1.0 + norm_inf(target.span()));
    const double misfit = norm_inf(subtract(matvec(layer.weights(), ls.solution), target).span());
    if (misfit > tol)
        throw Error(ErrorCode::NotRealizable, "pre-activation inconsistent, misfit " + format_double(misfit));
    return ls.solution;
}

InversionReport invert_leaky_exact(const GeneratorNetwork& net, const Vector& x)
{
    return invert_exact_layers(net, x, [](const Layer& l, const Vector& obs) {
        return invert_layer_leaky_exact(l, obs);
    });
}

// ---------------------------------------------------------------------------
// Program builders.

namespace {

// Row of an LP over (z, extra...) with w on the z block.
Vector make_row(std::span<const double> w, double w_scale, std::size_t total, std::size_t extra_index,
                double extra_coef)
{
    std::vector<double> row(total, 0.0);
    for (std::size_t c = 0; c < w.size(); ++c)
        row[c] = w_scale * w[c];
    row[extra_index] += extra_coef;
    return Vector(std::move(row));
}

enum class Band { On, Middle, Negative, Off };

// ReLU: On (x > eps) / Off. LeakyReLU: On / Middle / Negative with the
// boundaries given per program (l_inf: -eps < x <= eps middle; l_1: -eps <= x <= eps).
Band classify(const Layer& layer, double xj, double eps, bool closed_middle)
{
    if (xj > eps)
        return Band::On;
    if (!layer.activation().is_leaky())
        return Band::Off;
    const bool middle = closed_middle ? xj >= -eps : xj > -eps;
    return middle ? Band::Middle : Band::Negative;
}

// Adds the band constraints for output j with slack variable `slack` (delta
// or e_j): lower and/or upper limits on w_j^T z + b_j.
void add_band_rows(lp::LpProblem& p, const Layer& layer, std::size_t j, double xj, Band band, std::size_t slack)
{
    const std::size_t total = p.num_variables();
    const auto w = layer.weights().row(j);
    const double b = layer.bias()[j];
    const double c = layer.activation().slope();
    switch (band) {
    case Band::On:
        // x - s <= w z + b <= x + s
        p.add_constraint(make_row(w, 1.0, total, slack, -1.0), lp::Relation::LessEqual, xj - b);
        p.add_constraint(make_row(w, 1.0, total, slack, 1.0), lp::Relation::GreaterEqual, xj - b);
        break;
    case Band::Off:
        p.add_constraint(make_row(w, 1.0, total, slack, -1.0), lp::Relation::LessEqual, xj - b);
        break;
    case Band::Middle:
        // (min(x, 0) - s)/c <= w z + b <= x + s. With x itself on the left a
        // small positive output would exclude its own pre-activation x < x/c.
        p.add_constraint(make_row(w, 1.0, total, slack, -1.0), lp::Relation::LessEqual, xj - b);
        p.add_constraint(make_row(w, c, total, slack, 1.0), lp::Relation::GreaterEqual, std::min(xj, 0.0) - c * b);
        break;
    case Band::Negative:
        // x - s <= c (w z + b) <= x + s
        p.add_constraint(make_row(w, c, total, slack, -1.0), lp::Relation::LessEqual, xj - c * b);
        p.add_constraint(make_row(w, c, total, slack, 1.0), lp::Relation::GreaterEqual, xj - c * b);
        break;
    }
}

Vector head(const Vector& v, std::size_t n)
{
    return Vector(std::vector<double>(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n)));
}

}  // namespace

RoundSolution linf_round(const Layer& layer, const Vector& x, double eps, std::optional<double> delta_cap,
                         const lp::SolverOptions& options)
{
    require_dim(layer, x);
    const std::size_t k = layer.input_dim();
    const std::size_t delta = k;
    lp::LpProblem p(k + 1, lp::Sense::Minimize);
    std::vector<double> objective(k + 1, 0.0);
    objective[delta] = 1.0;
    p.set_objective(Vector(std::move(objective)));
    p.set_bounds(delta, 0.0, delta_cap);

    RoundSolution out;
    for (std::size_t j = 0; j < x.dim(); ++j) {
        const Band band = classify(layer, x[j], eps, false);
        out.active_set_size += band == Band::On ? 1 : 0;
        add_band_rows(p, layer, j, x[j], band, delta);
    }
    lp::LpSolution sol = lp::solve(p, options);
    out.status = sol.status;
    if (sol.status == lp::Status::Optimal) {
        out.objective = (*sol.point)[delta];
        out.z = head(*sol.point, k);
    }
    return out;
}

RoundSolution l1_round(const Layer& layer, const Vector& x, double eps, const lp::SolverOptions& options)
{
    require_dim(layer, x);
    const std::size_t k = layer.input_dim();
    const std::size_t n = x.dim();
    const double c = layer.activation().slope();

    // Two-sided bands use e_j = p_j + q_j with w z + b - x = p_j - q_j, which
    // keeps every slack in a single row; one-sided bands use a single e_j.
    std::vector<Band> bands(n);
    std::size_t slacks = 0;
    RoundSolution out;
    for (std::size_t j = 0; j < n; ++j) {
        bands[j] = classify(layer, x[j], eps, true);
        slacks += bands[j] == Band::On || bands[j] == Band::Negative ? 2 : 1;
        out.active_set_size += bands[j] == Band::On ? 1 : 0;
    }
    const std::size_t total = k + slacks;
    lp::LpProblem p(total, lp::Sense::Minimize);
    std::vector<double> objective(total, 0.0);
    for (std::size_t v = k; v < total; ++v) {
        objective[v] = 1.0;
        p.set_bounds(v, 0.0, std::nullopt);
    }
    p.set_objective(Vector(std::move(objective)));

    std::size_t next = k;
    for (std::size_t j = 0; j < n; ++j) {
        const auto w = layer.weights().row(j);
        const double b = layer.bias()[j];
        if (bands[j] == Band::On || bands[j] == Band::Negative) {
            const double scale = bands[j] == Band::On ? 1.0 : c;
            Vector row = make_row(w, scale, total, next, -1.0);
            row[next + 1] = 1.0;
            p.add_constraint(std::move(row), lp::Relation::Equal, x[j] - scale * b);
            next += 2;
        } else {
            add_band_rows(p, layer, j, x[j], bands[j], next);
            next += 1;
        }
    }
    lp::LpSolution sol = lp::solve(p, options);
    out.status = sol.status;
    if (sol.status == lp::Status::Optimal) {
        double sum = 0.0;
        for (std::size_t v = k; v < total; ++v)
            sum += (*sol.point)[v];
        out.objective = sum;
        out.z = head(*sol.point, k);
    }
    return out;
}

RoundSolution relaxed_round(const Layer& layer, const Vector& x, double eps, const lp::SolverOptions& options)
{
    require_dim(layer, x);
    const std::size_t k = layer.input_dim();
    const Matrix& w = layer.weights();
    const Vector& b = layer.bias();
    lp::LpProblem p(k, lp::Sense::Maximize);
    std::vector<double> objective(k, 0.0);
    RoundSolution out;
    const bool leaky = layer.activation().is_leaky();
    const double c = layer.activation().slope();
    for (std::size_t i = 0; i < x.dim(); ++i) {
        const double weight = leaky ? x[i] : std::max(0.0, x[i]);
        if (weight != 0.0) {
            const auto row = w.row(i);
            for (std::size_t col = 0; col < k; ++col)
                objective[col] += weight * row[col];
        }
        const Vector row(std::vector<double>(w.row(i).begin(), w.row(i).end()));
        if (leaky) {
            p.add_constraint(row, lp::Relation::LessEqual, std::max(x[i] + eps, 0.0) - b[i]);
            p.add_constraint(row, lp::Relation::GreaterEqual, std::min(x[i] - eps, 0.0) / c - b[i]);
        } else {
            p.add_constraint(row, lp::Relation::LessEqual, x[i] + eps - b[i]);
        }
        out.active_set_size += x[i] > eps ? 1 : 0;
    }
    p.set_objective(Vector(std::move(objective)));
    lp::LpSolution sol = lp::solve(p, options);
    out.status = sol.status;
    if (sol.status == lp::Status::Optimal) {
        out.objective = *sol.objective;
        out.z = std::move(sol.point);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Loops.

namespace {

double round_epsilon(const LpInvertConfig& cfg, double eps0, std::size_t t)
{
    return eps0 * std::pow(cfg.alpha, static_cast<double>(t));
}

LayerInversionOutcome finish_linf(const RoundSolution& sol, double eps)
{
    LayerInversionOutcome out;
    out.recovered = *sol.z;
    out.epsilon_used = eps;
    out.delta_or_l1 = sol.objective;
    out.active_set_size = sol.active_set_size;
    return out;
}

LayerInversionOutcome linf_sequential(const Layer& layer, const Vector& x, const LpInvertConfig& cfg, double eps0,
                                      std::size_t first_round, std::vector<RoundRecord> trail, std::size_t solves)
{
    for (std::size_t t = first_round; t < cfg.max_epsilon_rounds; ++t) {
        const double eps = round_epsilon(cfg, eps0, t);
        const RoundSolution sol = linf_round(layer, x, eps, eps, cfg.solver);
        ++solves;
        trail.push_back({eps, sol.status, std::nullopt});
        if (sol.status == lp::Status::Optimal) {
            LayerInversionOutcome out = finish_linf(sol, eps);
            out.trail = std::move(trail);
            out.lp_solves = solves;
            return out;
        }
    }
    throw Error(ErrorCode::NeverFeasible, "no feasible epsilon within " + std::to_string(cfg.max_epsilon_rounds) +
                                              " rounds (last " +
                                              format_double(round_epsilon(cfg, eps0, cfg.max_epsilon_rounds - 1)) + ")");
}

LayerInversionOutcome linf_loop(const Layer& layer, const Vector& x, const LpInvertConfig& cfg, double eps0)
{
    require_dim(layer, x);
    if (layer.activation().is_leaky() || cfg.search == EpsilonSearch::Sequential || cfg.max_epsilon_rounds < 3)
        return linf_sequential(layer, x, cfg, eps0, 0, {}, 0);

    // Round 0 directly; most well-posed instances stop here.
    std::vector<RoundRecord> trail;
    std::size_t solves = 0;
    {
        const RoundSolution sol = linf_round(layer, x, eps0, eps0, cfg.solver);
        ++solves;
        trail.push_back({eps0, sol.status, std::nullopt});
        if (sol.status == lp::Status::Optimal) {
            LayerInversionOutcome out = finish_linf(sol, eps0);
            out.trail = std::move(trail);
            out.lp_solves = solves;
            return out;
        }
    }
    // Round t is feasible iff the uncapped optimum delta*(t) <= eps_t;
    // delta* is non-increasing in eps so the predicate is monotone in t.
    auto probe = [&](std::size_t t) {
        const double eps = round_epsilon(cfg, eps0, t);
        const RoundSolution sol = linf_round(layer, x, eps, std::nullopt, cfg.solver);
        ++solves;
        const bool feasible = sol.status == lp::Status::Optimal &&
                              sol.objective <= eps + lp::kFeasibilityTolerance * (1.0 + eps);
        trail.push_back({eps, feasible ? lp::Status::Optimal : lp::Status::Infeasible, std::nullopt});
        return feasible;
    };
    std::size_t lo = 0;
    std::size_t hi = cfg.max_epsilon_rounds - 1;
    if (!probe(hi))
        throw Error(ErrorCode::NeverFeasible, "no feasible epsilon within " + std::to_string(cfg.max_epsilon_rounds) +
                                                  " rounds (last " + format_double(round_epsilon(cfg, eps0, hi)) + ")");
    while (hi - lo > 1) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (probe(mid))
            hi = mid;
        else
            lo = mid;
    }
    // Solve the capped program of the located round; fall back to sequential
    // rounds if tolerances disagree at the boundary.
    return linf_sequential(layer, x, cfg, eps0, hi, std::move(trail), solves);
}

// Shared driver for the l_1 and relaxed loops.
template <class RoundFn>
LayerInversionOutcome improvement_loop(const Layer& layer, const Vector& x, const LpInvertConfig& cfg, double eps0,
                                       std::size_t min_round_for_stop, RoundFn&& round)
{
    require_dim(layer, x);
    struct Round {
        double eps;
        RoundSolution sol;
        double residual;
    };
    std::vector<Round> rounds;
    std::vector<RoundRecord> trail;

    auto outcome_from = [&](const Round& r, bool exhausted) {
        LayerInversionOutcome out;
        out.recovered = *r.sol.z;
        out.epsilon_used = r.eps;
        out.delta_or_l1 = r.sol.objective;
        out.active_set_size = r.sol.active_set_size;
        out.trail = trail;
        out.lp_solves = rounds.size();
        out.budget_exhausted = exhausted;
        return out;
    };

    for (std::size_t t = 1; t <= cfg.max_epsilon_rounds; ++t) {
        const double eps = round_epsilon(cfg, eps0, t - 1);
        RoundSolution sol = round(layer, x, eps, cfg.solver);
        if (sol.status == lp::Status::Unbounded)
            throw Error(ErrorCode::UnboundedRelaxation, "program unbounded at epsilon " + format_double(eps));
        const bool feasible = sol.status == lp::Status::Optimal;
        const double residual =
            feasible ? l1_residual(layer, *sol.z, x) : std::numeric_limits<double>::infinity();
        trail.push_back({eps, sol.status, feasible ? std::optional<double>(residual) : std::nullopt});
        rounds.push_back({eps, std::move(sol), residual});

        if (t >= min_round_for_stop && t >= 2) {
            const Round& prev = rounds[t - 2];
            const bool prev_feasible = prev.sol.status == lp::Status::Optimal;
            if (prev_feasible && feasible && residual >= prev.residual)
                return outcome_from(prev, false);
        }
    }

    const Round* best = nullptr;
    for (const Round& r : rounds) {
        if (r.sol.status == lp::Status::Optimal && (best == nullptr || r.residual < best->residual))
            best = &r;
    }
    if (best == nullptr)
        throw Error(ErrorCode::NeverFeasible, "no feasible round within " + std::to_string(cfg.max_epsilon_rounds));
    return outcome_from(*best, true);
}

}  // namespace

LayerInversionOutcome invert_layer_linf(const Layer& layer, const Vector& x, const LpInvertConfig& cfg)
{
    cfg.validate();
    require_relu(layer, "invert_layer_linf");
    return linf_loop(layer, x, cfg, cfg.epsilon_init);
}

LayerInversionOutcome invert_layer_linf_leaky(const Layer& layer, const Vector& x, const LpInvertConfig& cfg)
{
    cfg.validate();
    require_leaky(layer, "invert_layer_linf_leaky");
    return linf_loop(layer, x, cfg, cfg.epsilon_init);
}

LayerInversionOutcome invert_layer_l1(const Layer& layer, const Vector& x, const LpInvertConfig& cfg)
{
    cfg.validate();
    require_relu(layer, "invert_layer_l1");
    return improvement_loop(layer, x, cfg, cfg.epsilon_init, 2, l1_round);
}

LayerInversionOutcome invert_layer_l1_leaky(const Layer& layer, const Vector& x, const LpInvertConfig& cfg)
{
    cfg.validate();
    require_leaky(layer, "invert_layer_l1_leaky");
    return improvement_loop(layer, x, cfg, cfg.epsilon_init, 2, l1_round);
}

LayerInversionOutcome invert_layer_relaxed(const Layer& layer, const Vector& x, const LpInvertConfig& cfg)
{
    cfg.validate();
    return improvement_loop(layer, x, cfg, cfg.epsilon_init, 3, relaxed_round);
}

double layer_epsilon(const LpInvertConfig& cfg, std::size_t depth, std::size_t layer)
{
    if (cfg.epsilon_rule == EpsilonRule::Adaptive)
        return cfg.epsilon_init;
    return cfg.epsilon_init * std::pow(2.0 / cfg.assumed_c, static_cast<double>(depth - layer));
}

InversionReport invert_network(const GeneratorNetwork& net, const Vector& x, InversionMethod method,
                               const LpInvertConfig& cfg)
{
    cfg.validate();
    if (x.dim() != net.output_dim())
        throw Error(ErrorCode::DimensionMismatch, "observation has " + std::to_string(x.dim()) +
                                                      " entries, network outputs " + std::to_string(net.output_dim()));
    InversionReport report;
    bool any_bias = false;
    Vector current = x;
    for (std::size_t i = net.depth(); i >= 1; --i) {
        const Layer& layer = net.layer(i);
        any_bias = any_bias || layer.has_bias();
        const double eps0 = layer_epsilon(cfg, net.depth(), i);
        LpInvertConfig layer_cfg = cfg;
        layer_cfg.epsilon_init = eps0;
        try {
            LayerInversionOutcome outcome;
            switch (method) {
            case InversionMethod::Linf:
                outcome = layer.activation().is_leaky() ? invert_layer_linf_leaky(layer, current, layer_cfg)
                                                        : invert_layer_linf(layer, current, layer_cfg);
                break;
            case InversionMethod::L1:
                outcome = layer.activation().is_leaky() ? invert_layer_l1_leaky(layer, current, layer_cfg)
                                                        : invert_layer_l1(layer, current, layer_cfg);
                break;
            case InversionMethod::Relaxed:
                outcome = invert_layer_relaxed(layer, current, layer_cfg);
                break;
            }
            report.lp_solves += outcome.lp_solves;
            if (outcome.budget_exhausted)
                report.notes.push_back("layer " + std::to_string(i) + ": round budget exhausted");
            current = outcome.recovered;
            report.layers.push_back(std::move(outcome));
        } catch (const Error& e) {
            throw LayerError(e.code(), i, e.message());
        }
    }
    if (any_bias)
        report.notes.push_back("nonzero biases: band thresholds applied to raw observations, right-hand sides shifted by bias");
    report.latent = current;
    report.residuals = residuals(forward(net, report.latent), x);
    report.success = std::none_of(report.layers.begin(), report.layers.end(),
                                  [](const LayerInversionOutcome& o) { return o.budget_exhausted; });
    return report;
}

BoundReport theoretical_bound(std::size_t depth, double eps, double c, BoundNorm)
{
    if (depth < 1)
        throw Error(ErrorCode::InvalidArgument, "depth must be at least 1");
    if (!(eps >= 0.0) || !std::isfinite(eps))
        throw Error(ErrorCode::InvalidArgument, "epsilon must be nonnegative");
    if (!(c > 0.0 && c <= 2.0))
        throw Error(ErrorCode::InvalidArgument, "constant must lie in (0,2]");
    return {depth, eps, c, std::pow(2.0 / c, static_cast<double>(depth)) * eps};
}

}  // namespace genvert
