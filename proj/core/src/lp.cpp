#include "genvert/lp.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>

#include "genvert/errors.hpp"
#include "genvert/random.hpp"

namespace genvert::lp {

std::string to_string(Status status)
{
    switch (status) {
    case Status::Optimal: return "Optimal";
    case Status::Infeasible: return "Infeasible";
    case Status::Unbounded: return "Unbounded";
    }
    return "Unknown";
}

LpProblem::LpProblem(std::size_t num_variables, Sense sense)
    : num_variables_(num_variables), sense_(sense), objective_(num_variables), bounds_(num_variables)
{
}

void LpProblem::set_objective(Vector objective)
{
    if (objective.dim() != num_variables_)
        throw Error(ErrorCode::DimensionMismatch, "objective dimension");
    objective_ = std::move(objective);
}

void LpProblem::add_constraint(Vector coefficients, Relation relation, double rhs)
{
    if (coefficients.dim() != num_variables_)
        throw Error(ErrorCode::DimensionMismatch, "constraint dimension");
    if (!std::isfinite(rhs))
        throw Error(ErrorCode::NonFinite, "constraint rhs");
    constraints_.push_back({std::move(coefficients), relation, rhs});
}

void LpProblem::set_bounds(std::size_t variable, std::optional<double> lower, std::optional<double> upper)
{
    if (variable >= num_variables_)
        throw Error(ErrorCode::InvalidArgument, "bound on unknown variable");
    if ((lower && !std::isfinite(*lower)) || (upper && !std::isfinite(*upper)))
        throw Error(ErrorCode::NonFinite, "variable bound");
    bounds_[variable] = {lower, upper};
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPivotEpsilon = 1e-9;
constexpr double kDegenerateStep = 1e-12;
// Reduced costs this small relative to the column are round-off, not a ray.
constexpr double kNoiseReducedCost = 1e-7;
// Tolerance for accepting a point recovered from the dual.
constexpr double kRecoveryTolerance = 1e-7;
constexpr std::size_t kReinvertInterval = 100;
// Relative widening of basic bounds when degenerate pivots stall.
constexpr double kPerturbation = 1e-7;
constexpr std::size_t kMaxPerturbRounds = 5;
constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

enum class State : unsigned char { Basic, Lower, Upper, Zero };

// Bounded-variable simplex over A x (+ slack) (+ artificial) = b with
// lo <= x <= up. The tableau holds B^-1 A for every column; basic values are
// kept in beta and nonbasic columns sit at a bound (or at 0 when free).
class Engine {
public:
    Engine(const LpProblem& p, const SolverOptions& options)
        : options_(options), nv_(p.num_variables()), m_(p.constraints().size())
    {
        limit_ = options.max_iterations != 0 ? options.max_iterations
                                             : std::max<std::size_t>(10000, 50 * (nv_ + m_));
        sign_ = p.sense() == Sense::Maximize ? -1.0 : 1.0;

        std::vector<double> x0(nv_, 0.0);
        std::vector<State> structural_state(nv_, State::Zero);
        for (std::size_t j = 0; j < nv_; ++j) {
            const Bounds& b = p.bounds()[j];
            if (b.lower && b.upper && *b.lower > *b.upper + kFeasibilityTolerance)
                bounds_conflict_ = true;
            if (b.lower) {
                structural_state[j] = State::Lower;
                x0[j] = *b.lower;
            } else if (b.upper) {
                structural_state[j] = State::Upper;
                x0[j] = *b.upper;
            }
        }

        // Decide per row between a basic slack and an artificial.
        std::vector<double> resid(m_);
        std::vector<char> needs_art(m_, 0);
        std::size_t slacks = 0;
        std::size_t arts = 0;
        for (std::size_t i = 0; i < m_; ++i) {
            const Constraint& c = p.constraints()[i];
            double r = c.rhs;
            for (std::size_t j = 0; j < nv_; ++j) {
                if (x0[j] != 0.0)
                    r -= c.coefficients[j] * x0[j];
            }
            resid[i] = r;
            rhs_scale_ = std::max(rhs_scale_, std::abs(c.rhs));
            switch (c.relation) {
            case Relation::LessEqual:
                ++slacks;
                needs_art[i] = r < 0.0;
                break;
            case Relation::GreaterEqual:
                ++slacks;
                needs_art[i] = r > 0.0;
                break;
            case Relation::Equal: needs_art[i] = 1; break;
            }
            arts += needs_art[i] ? 1 : 0;
        }

        first_art_ = nv_ + slacks;
        n_ = first_art_ + arts;
        t_.assign(m_ * n_, 0.0);
        beta_.assign(m_, 0.0);
        lo_.assign(n_, 0.0);
        up_.assign(n_, kInf);
        state_.assign(n_, State::Lower);
        basis_.assign(m_, kNone);
        unit_col_.assign(m_, kNone);
        unit_sign_.assign(m_, 1.0);
        blocked_.assign(n_, 0);
        rhs0_.assign(m_, 0.0);
        perturbed_bound_.assign(n_, 0);
        lo0_.assign(n_, 0.0);
        up0_.assign(n_, 0.0);

        for (std::size_t j = 0; j < nv_; ++j) {
            const Bounds& b = p.bounds()[j];
            lo_[j] = b.lower ? *b.lower : -kInf;
            up_[j] = b.upper ? *b.upper : kInf;
            state_[j] = structural_state[j];
        }

        std::size_t slack = nv_;
        std::size_t art = first_art_;
        for (std::size_t i = 0; i < m_; ++i) {
            const Constraint& c = p.constraints()[i];
            double* row = t_.data() + i * n_;
            std::copy(c.coefficients.begin(), c.coefficients.end(), row);
            std::size_t slack_col = kNone;
            if (c.relation != Relation::Equal) {
                slack_col = slack++;
                row[slack_col] = 1.0;
                if (c.relation == Relation::LessEqual) {
                    lo_[slack_col] = 0.0;
                    up_[slack_col] = kInf;
                    state_[slack_col] = State::Lower;
                } else {
                    lo_[slack_col] = -kInf;
                    up_[slack_col] = 0.0;
                    state_[slack_col] = State::Upper;
                }
                unit_col_[i] = slack_col;
                unit_sign_[i] = 1.0;
            }
            rhs0_[i] = c.rhs;
            if (!needs_art[i]) {
                basis_[i] = slack_col;
                state_[slack_col] = State::Basic;
                beta_[i] = resid[i];
                continue;
            }
            const double sigma = resid[i] >= 0.0 ? 1.0 : -1.0;
            const std::size_t a = art++;
            row[a] = sigma;
            // Normalize so the artificial has coefficient 1 in its row.
            if (sigma < 0.0) {
                for (std::size_t j = 0; j < n_; ++j)
                    row[j] = -row[j];
                rhs0_[i] = -rhs0_[i];
            }
            lo_[a] = 0.0;
            up_[a] = kInf;
            basis_[i] = a;
            state_[a] = State::Basic;
            beta_[i] = std::abs(resid[i]);
            if (c.relation == Relation::Equal) {
                unit_col_[i] = a;
                unit_sign_[i] = sigma;
            }
        }
        t0_ = t_;
        cost_.assign(n_, 0.0);
        objective_.resize(nv_);
        for (std::size_t j = 0; j < nv_; ++j)
            objective_[j] = sign_ * p.objective()[j];
    }

    Status solve()
    {
        if (bounds_conflict_)
            return Status::Infeasible;
        if (n_ > first_art_) {
            std::fill(cost_.begin(), cost_.end(), 0.0);
            for (std::size_t j = first_art_; j < n_; ++j)
                cost_[j] = 1.0;
            compute_reduced_costs();
            if (run(1.0, true) != Status::Optimal || artificial_sum() > phase1_target())
                return Status::Infeasible;
            for (std::size_t j = first_art_; j < n_; ++j) {
                up_[j] = 0.0;
                if (state_[j] != State::Basic)
                    state_[j] = State::Lower;
            }
            drive_out_artificials();
        }
        std::fill(cost_.begin(), cost_.end(), 0.0);
        std::copy(objective_.begin(), objective_.end(), cost_.begin());
        double scale = 1.0;
        for (double c : objective_)
            scale = std::max(scale, std::abs(c));
        std::fill(blocked_.begin(), blocked_.end(), 0);
        compute_reduced_costs();
        std::fill(perturbed_bound_.begin(), perturbed_bound_.end(), 0);
        perturb_rounds_ = 0;
        const Status phase2 = run(scale);
        if (phase2 != Status::Optimal)
            return phase2;
        compute_reduced_costs();
        return Status::Optimal;
    }

    std::size_t iterations() const noexcept { return iterations_; }
    double sign() const noexcept { return sign_; }

    double value(std::size_t j) const
    {
        switch (state_[j]) {
        case State::Lower: return lo_[j];
        case State::Upper: return up_[j];
        case State::Zero: return 0.0;
        case State::Basic: break;
        }
        for (std::size_t i = 0; i < m_; ++i) {
            if (basis_[i] == j)
                return beta_[i];
        }
        return 0.0;
    }

    std::vector<double> structural_values() const
    {
        std::vector<double> x(nv_);
        for (std::size_t j = 0; j < nv_; ++j) {
            if (state_[j] != State::Basic)
                x[j] = value(j);
        }
        for (std::size_t i = 0; i < m_; ++i) {
            if (basis_[i] < nv_)
                x[basis_[i]] = beta_[i];
        }
        return x;
    }

    /// Multipliers of the internal minimization: d(min objective)/d(rhs_i).
    std::vector<double> row_multipliers() const
    {
        std::vector<double> pi(m_, 0.0);
        for (std::size_t i = 0; i < m_; ++i) {
            const std::size_t u = unit_col_[i];
            if (u == kNone)
                continue;  // equality row without artificial cannot occur
            double acc = 0.0;
            for (std::size_t k = 0; k < m_; ++k) {
                const double cb = cost_[basis_[k]];
                if (cb != 0.0)
                    acc += cb * t_[k * n_ + u];
            }
            pi[i] = unit_sign_[i] * acc;
        }
        return pi;
    }

    double reduced_cost(std::size_t j) const { return d_[j]; }
    State state(std::size_t j) const { return state_[j]; }

private:
    void compute_reduced_costs()
    {
        d_ = cost_;
        for (std::size_t i = 0; i < m_; ++i) {
            const double cb = cost_[basis_[i]];
            if (cb == 0.0)
                continue;
            const double* row = t_.data() + i * n_;
            for (std::size_t j = 0; j < n_; ++j)
                d_[j] -= cb * row[j];
        }
        for (std::size_t i = 0; i < m_; ++i)
            d_[basis_[i]] = 0.0;
    }

    void drive_out_artificials()
    {
        for (std::size_t i = 0; i < m_; ++i) {
            if (basis_[i] < first_art_)
                continue;
            const double* row = t_.data() + i * n_;
            std::size_t best = kNone;
            double best_mag = kPivotEpsilon;
            for (std::size_t j = 0; j < first_art_; ++j) {
                if (state_[j] != State::Basic && std::abs(row[j]) > best_mag) {
                    best_mag = std::abs(row[j]);
                    best = j;
                }
            }
            if (best == kNone)
                continue;  // redundant row; the artificial stays basic at 0
            const std::size_t leaving = basis_[i];
            const double entering_value = value(best);
            pivot(i, best);
            beta_[i] = entering_value;
            state_[leaving] = State::Lower;
        }
    }

    // Entering column and direction (+1 increase, -1 decrease).
    std::pair<std::size_t, double> choose_entering(bool bland) const
    {
        std::size_t best = kNone;
        double best_score = 0.0;
        double best_dir = 0.0;
        for (std::size_t j = 0; j < n_; ++j) {
            if (state_[j] == State::Basic || blocked_[j] || lo_[j] == up_[j])
                continue;
            const double dj = d_[j];
            double dir = 0.0;
            switch (state_[j]) {
            case State::Lower: dir = dj < -kOptimalityTolerance ? 1.0 : 0.0; break;
            case State::Upper: dir = dj > kOptimalityTolerance ? -1.0 : 0.0; break;
            case State::Zero: dir = dj < -kOptimalityTolerance ? 1.0 : (dj > kOptimalityTolerance ? -1.0 : 0.0); break;
            case State::Basic: break;
            }
            if (dir == 0.0)
                continue;
            if (bland)
                return {j, dir};
            if (std::abs(dj) > best_score) {
                best_score = std::abs(dj);
                best = j;
                best_dir = dir;
            }
        }
        return {best, best_dir};
    }

    struct Step {
        std::size_t row = kNone;  // kNone with finite theta means a bound flip
        double theta = kInf;
        bool to_lower = false;    // leaving variable's resting bound
    };

    // Distance the basic variable of row i may travel at the given rate.
    bool room(std::size_t i, double rate, double& dist, bool& to_lower) const
    {
        const std::size_t bv = basis_[i];
        if (rate < 0.0) {
            if (lo_[bv] == -kInf)
                return false;
            dist = std::max(0.0, beta_[i] - lo_[bv]);
            to_lower = true;
        } else {
            if (up_[bv] == kInf)
                return false;
            dist = std::max(0.0, up_[bv] - beta_[i]);
            to_lower = false;
        }
        return true;
    }

    Step ratio_test(std::size_t q, double dir, bool bland) const
    {
        Step step;
        if (bland) {
            // Exact minimum ratio, ties to the smallest basic index.
            double min_ratio = kInf;
            for (std::size_t i = 0; i < m_; ++i) {
                const double a = t_[i * n_ + q];
                double dist = 0.0;
                bool to_lower = false;
                if (std::abs(a) > kPivotEpsilon && room(i, -dir * a, dist, to_lower))
                    min_ratio = std::min(min_ratio, dist / std::abs(a));
            }
            const double tie = 1e-12 * (1.0 + min_ratio);
            for (std::size_t i = 0; i < m_ && min_ratio < kInf; ++i) {
                const double a = t_[i * n_ + q];
                double dist = 0.0;
                bool to_lower = false;
                if (std::abs(a) <= kPivotEpsilon || !room(i, -dir * a, dist, to_lower) ||
                    dist / std::abs(a) > min_ratio + tie)
                    continue;
                if (step.row == kNone || basis_[i] < basis_[step.row]) {
                    step.row = i;
                    step.theta = dist / std::abs(a);
                    step.to_lower = to_lower;
                }
            }
        } else {
            // Harris: relax every bound by the feasibility tolerance, then take
            // the largest pivot among rows that bind within the relaxed step.
            double bound = kInf;
            for (std::size_t i = 0; i < m_; ++i) {
                const double a = t_[i * n_ + q];
                if (std::abs(a) <= kPivotEpsilon)
                    continue;
                double dist = 0.0;
                bool to_lower = false;
                if (room(i, -dir * a, dist, to_lower))
                    bound = std::min(bound, (dist + kFeasibilityTolerance) / std::abs(a));
            }
            if (bound < kInf) {
                double best = 0.0;
                for (std::size_t i = 0; i < m_; ++i) {
                    const double a = t_[i * n_ + q];
                    if (std::abs(a) <= kPivotEpsilon || std::abs(a) <= best)
                        continue;
                    double dist = 0.0;
                    bool to_lower = false;
                    if (!room(i, -dir * a, dist, to_lower) || dist / std::abs(a) > bound)
                        continue;
                    best = std::abs(a);
                    step.row = i;
                    step.theta = dist / std::abs(a);
                    step.to_lower = to_lower;
                }
            }
        }
        const double range = dir > 0.0 ? up_[q] - value(q) : value(q) - lo_[q];
        if (range < kInf && (step.row == kNone || range <= step.theta)) {
            step.row = kNone;
            step.theta = range;
        }
        return step;
    }

    double artificial_sum() const
    {
        double sum = 0.0;
        for (std::size_t i = 0; i < m_; ++i) {
            if (basis_[i] >= first_art_)
                sum += std::max(0.0, beta_[i]);
        }
        return sum;
    }

    double phase1_target() const { return kFeasibilityTolerance * std::max(1.0, rhs_scale_); }

    Status run(double cost_scale, bool phase1 = false)
    {
        bool bland = options_.pricing == Pricing::Bland;
        std::size_t degenerate_run = 0;
        for (;;) {
            if (since_reinvert_ >= std::max(kReinvertInterval, m_))
                reinvert();
            // Phase 1 may stop at any feasible basis; degenerate pivots at zero
            // infeasibility would only stall.
            if (phase1 && artificial_sum() <= 0.01 * phase1_target()) {
                if (!perturbed_)
                    return Status::Optimal;
                if (!remove_perturbation())
                    return Status::Infeasible;
                continue;
            }
            const auto [q, dir] = choose_entering(bland);
            if (q == kNone) {
                if (perturbed_) {
                    if (!remove_perturbation())
                        return Status::Infeasible;
                    continue;
                }
                // Confirm on a fresh tableau before trusting the verdict, when
                // enough pivots have passed to pay for the refactorization.
                if (since_reinvert_ > 0 && 4 * since_reinvert_ >= m_ && reinvert())
                    continue;
                return Status::Optimal;
            }
            const Step step = ratio_test(q, dir, bland);
            if (step.theta == kInf && since_reinvert_ > 0 && reinvert())
                continue;
            if (step.theta == kInf) {
                if (std::abs(d_[q]) < kNoiseReducedCost * cost_scale * std::max(1.0, column_max(q))) {
                    blocked_[q] = 1;
                    continue;
                }
                restore_bounds();
                return Status::Unbounded;
            }
            count_iteration();

            for (std::size_t i = 0; i < m_; ++i) {
                const double a = t_[i * n_ + q];
                if (a != 0.0)
                    beta_[i] -= dir * a * step.theta;
            }
            if (step.row == kNone) {
                state_[q] = dir > 0.0 ? State::Upper : State::Lower;
            } else {
                const std::size_t leaving = basis_[step.row];
                const double entering_value = value(q) + dir * step.theta;
                pivot(step.row, q);
                beta_[step.row] = entering_value;
                state_[leaving] = step.to_lower ? State::Lower : State::Upper;
            }

            if (options_.pricing == Pricing::Bland)
                continue;
            if (step.theta <= kDegenerateStep) {
                // A stall: first widen the bounds of the basic variables by
                // tiny random amounts, Bland only if that keeps stalling.
                if (++degenerate_run >= options_.degenerate_switch) {
                    if (perturb_rounds_ < kMaxPerturbRounds && perturb_basic_bounds())
                        degenerate_run = 0;
                    else
                        bland = true;
                }
            } else {
                degenerate_run = 0;
                bland = false;
            }
        }
    }

    void count_iteration()
    {
        if (iterations_ >= limit_)
            throw Error(ErrorCode::IterationLimit, "simplex exceeded " + std::to_string(limit_) + " pivots");
        ++iterations_;
        ++since_reinvert_;
    }

    bool perturb_basic_bounds()
    {
        ++perturb_rounds_;
        bool changed = false;
        for (std::size_t i = 0; i < m_; ++i) {
            const std::size_t j = basis_[i];
            if (j >= first_art_ || perturbed_bound_[j])
                continue;
            const double xi = kPerturbation * (1.0 + perturb_rng_.uniform01());
            lo0_[j] = lo_[j];
            up0_[j] = up_[j];
            if (lo_[j] != -kInf) {
                lo_[j] -= xi * (1.0 + std::abs(lo_[j]));
                changed = true;
            }
            if (up_[j] != kInf) {
                up_[j] += xi * (1.0 + std::abs(up_[j]));
                changed = true;
            }
            perturbed_bound_[j] = 1;
        }
        perturbed_ = perturbed_ || changed;
        return changed;
    }

    void restore_bounds()
    {
        if (!perturbed_)
            return;
        for (std::size_t j = 0; j < first_art_; ++j) {
            if (!perturbed_bound_[j])
                continue;
            lo_[j] = lo0_[j];
            up_[j] = up0_[j];
            perturbed_bound_[j] = 0;
        }
        perturbed_ = false;
    }

    // Back to the true bounds: nonbasic variables snap to them, and the basic
    // values that now violate a bound are repaired by dual simplex pivots,
    // which keep the reduced costs optimal. False if a violated row has no
    // eligible entering column (the problem is infeasible).
    bool remove_perturbation()
    {
        restore_bounds();
        if (!reinvert())
            compute_reduced_costs();
        for (;;) {
            std::size_t r = kNone;
            double worst = kFeasibilityTolerance;
            for (std::size_t i = 0; i < m_; ++i) {
                const std::size_t bv = basis_[i];
                const double v = std::max(lo_[bv] - beta_[i], beta_[i] - up_[bv]);
                if (v > worst * (1.0 + std::abs(beta_[i]))) {
                    worst = v;
                    r = i;
                }
            }
            if (r == kNone)
                return true;
            const std::size_t bv = basis_[r];
            const bool below = beta_[r] < lo_[bv];
            const double target = below ? lo_[bv] : up_[bv];
            const double* row = t_.data() + r * n_;
            std::size_t q = kNone;
            double best_ratio = kInf;
            double best_mag = 0.0;
            for (std::size_t j = 0; j < n_; ++j) {
                if (state_[j] == State::Basic || lo_[j] == up_[j])
                    continue;
                const double a = row[j];
                if (std::abs(a) <= kPivotEpsilon)
                    continue;
                // beta_r moves by -a * delta_j; it must move toward the target.
                const bool up_ok = state_[j] != State::Upper;
                const bool down_ok = state_[j] != State::Lower;
                const bool needs_increase = below ? a < 0.0 : a > 0.0;
                if (needs_increase ? !up_ok : !down_ok)
                    continue;
                const double ratio = std::abs(d_[j]) / std::abs(a);
                if (ratio < best_ratio - 1e-12 || (ratio <= best_ratio + 1e-12 && std::abs(a) > best_mag)) {
                    best_ratio = ratio;
                    best_mag = std::abs(a);
                    q = j;
                }
            }
            if (q == kNone)
                return false;
            count_iteration();
            const double delta = (beta_[r] - target) / row[q];
            for (std::size_t i = 0; i < m_; ++i) {
                const double a = t_[i * n_ + q];
                if (a != 0.0)
                    beta_[i] -= a * delta;
            }
            const double entering_value = value(q) + delta;
            pivot(r, q);
            beta_[r] = entering_value;
            state_[bv] = below ? State::Lower : State::Upper;
        }
    }

    double column_max(std::size_t q) const
    {
        double m = 0.0;
        for (std::size_t i = 0; i < m_; ++i)
            m = std::max(m, std::abs(t_[i * n_ + q]));
        return m;
    }

    // Rebuilds B^-1 A, the basic values and the reduced costs from the
    // original rows, discarding the drift of incremental pivots. False when the
    // basis matrix is numerically singular (the tableau is left as is).
    bool reinvert()
    {
        since_reinvert_ = 0;
        const std::size_t m = m_;
        std::vector<double> b(m * m);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t k = 0; k < m; ++k)
                b[i * m + k] = t0_[i * n_ + basis_[k]];
        std::vector<double> inv(m * m, 0.0);
        for (std::size_t i = 0; i < m; ++i)
            inv[i * m + i] = 1.0;
        // Gauss-Jordan with partial pivoting.
        for (std::size_t c = 0; c < m; ++c) {
            std::size_t piv = c;
            for (std::size_t r = c + 1; r < m; ++r)
                if (std::abs(b[r * m + c]) > std::abs(b[piv * m + c]))
                    piv = r;
            if (std::abs(b[piv * m + c]) < 1e-12)
                return false;
            if (piv != c) {
                std::swap_ranges(b.begin() + piv * m, b.begin() + (piv + 1) * m, b.begin() + c * m);
                std::swap_ranges(inv.begin() + piv * m, inv.begin() + (piv + 1) * m, inv.begin() + c * m);
            }
            const double f = 1.0 / b[c * m + c];
            for (std::size_t k = 0; k < m; ++k) {
                b[c * m + k] *= f;
                inv[c * m + k] *= f;
            }
            for (std::size_t r = 0; r < m; ++r) {
                const double g = b[r * m + c];
                if (r == c || g == 0.0)
                    continue;
                for (std::size_t k = 0; k < m; ++k) {
                    b[r * m + k] -= g * b[c * m + k];
                    inv[r * m + k] -= g * inv[c * m + k];
                }
            }
        }
        // Row k of inv belongs to basis position k.
        std::fill(t_.begin(), t_.end(), 0.0);
        for (std::size_t k = 0; k < m; ++k) {
            double* out = t_.data() + k * n_;
            for (std::size_t i = 0; i < m; ++i) {
                const double g = inv[k * m + i];
                if (g == 0.0)
                    continue;
                const double* src = t0_.data() + i * n_;
                for (std::size_t j = 0; j < n_; ++j)
                    out[j] += g * src[j];
            }
        }
        std::vector<double> r = rhs0_;
        for (std::size_t j = 0; j < n_; ++j) {
            if (state_[j] == State::Basic)
                continue;
            const double v = value(j);
            if (v == 0.0)
                continue;
            for (std::size_t i = 0; i < m; ++i)
                r[i] -= t0_[i * n_ + j] * v;
        }
        for (std::size_t k = 0; k < m; ++k) {
            double acc = 0.0;
            for (std::size_t i = 0; i < m; ++i)
                acc += inv[k * m + i] * r[i];
            beta_[k] = acc;
            double* row = t_.data() + k * n_;
            for (std::size_t i = 0; i < m; ++i)
                if (i != k)
                    row[basis_[i]] = 0.0;
            row[basis_[k]] = 1.0;
        }
        compute_reduced_costs();
        return true;
    }

    void pivot(std::size_t r, std::size_t q)
    {
        double* prow = t_.data() + r * n_;
        const double inv = 1.0 / prow[q];
        nz_.clear();
        for (std::size_t j = 0; j < n_; ++j) {
            if (prow[j] != 0.0) {
                prow[j] *= inv;
                nz_.push_back(j);
            }
        }
        prow[q] = 1.0;
        const bool dense = nz_.size() * 2 > n_;
        for (std::size_t i = 0; i < m_; ++i) {
            if (i == r)
                continue;
            double* irow = t_.data() + i * n_;
            const double f = irow[q];
            if (f == 0.0)
                continue;
            if (dense) {
                for (std::size_t j = 0; j < n_; ++j)
                    irow[j] -= f * prow[j];
            } else {
                for (std::size_t j : nz_)
                    irow[j] -= f * prow[j];
            }
            irow[q] = 0.0;
        }
        const double f = d_[q];
        if (f != 0.0) {
            for (std::size_t j : nz_)
                d_[j] -= f * prow[j];
        }
        d_[q] = 0.0;
        basis_[r] = q;
        state_[q] = State::Basic;
    }

    const SolverOptions& options_;
    std::size_t nv_;
    std::size_t m_;
    std::size_t n_ = 0;
    std::size_t first_art_ = 0;
    std::size_t limit_ = 0;
    std::size_t iterations_ = 0;
    double sign_ = 1.0;
    double rhs_scale_ = 1.0;
    bool bounds_conflict_ = false;
    std::size_t since_reinvert_ = 0;
    bool perturbed_ = false;
    std::size_t perturb_rounds_ = 0;
    std::vector<char> perturbed_bound_;
    std::vector<double> lo0_;
    std::vector<double> up0_;
    Rng perturb_rng_{0x9e3779b97f4a7c15ULL};
    std::vector<double> t_;
    std::vector<double> t0_;
    std::vector<double> rhs0_;
    std::vector<double> beta_;
    std::vector<double> lo_;
    std::vector<double> up_;
    std::vector<double> cost_;
    std::vector<double> objective_;
    std::vector<double> d_;
    std::vector<std::size_t> basis_;
    std::vector<State> state_;
    std::vector<std::size_t> unit_col_;
    std::vector<double> unit_sign_;
    std::vector<char> blocked_;
    std::vector<std::size_t> nz_;
};

LpSolution solve_primal(const LpProblem& problem, const SolverOptions& options)
{
    Engine engine(problem, options);
    LpSolution solution;
    solution.status = engine.solve();
    solution.iterations = engine.iterations();
    if (solution.status != Status::Optimal)
        return solution;
    solution.point = Vector(engine.structural_values());
    solution.objective = dot(problem.objective().span(), solution.point->span());
    std::vector<double> pi = engine.row_multipliers();
    for (double& v : pi)
        v *= engine.sign();
    solution.duals = Vector(std::move(pi));
    return solution;
}

// ---------------------------------------------------------------------------
// Dual formulation. With x shifted/mirrored so every variable is free or
// nonnegative and box bounds turned into rows, the primal
//     min c'x  s.t.  A x (rel) b
// has dual  max b'y  s.t.  A_j' y <= c_j (x_j >= 0) or = c_j (x_j free),
// y_i >= 0 for >= rows, <= 0 for <= rows, free for = rows. Dual rows with a
// single entry become bounds on y; the primal point is the vector of dual
// multipliers.

enum class VarKind { Free, Lower, Upper, Box };

struct DualPlan {
    LpProblem dual{0};
    std::vector<VarKind> kind;
    std::vector<double> offset;
    std::vector<std::size_t> dual_row;  // per primal variable, kNone if folded
    std::vector<std::size_t> single_y;  // per primal variable folded into a bound
    std::vector<double> single_coef;
    std::vector<std::size_t> lower_src;  // per y: primal variable whose row set the lower bound
    std::vector<std::size_t> upper_src;
    double constant = 0.0;
    bool dual_infeasible = false;
    std::size_t dense_rows = 0;
};

DualPlan plan_dual(const LpProblem& p)
{
    const std::size_t nv = p.num_variables();
    const std::size_t mc = p.constraints().size();
    const double sign = p.sense() == Sense::Maximize ? -1.0 : 1.0;
    DualPlan plan;
    plan.kind.resize(nv);
    plan.offset.assign(nv, 0.0);
    std::vector<std::size_t> box_row(nv, kNone);
    std::size_t rows = mc;
    for (std::size_t j = 0; j < nv; ++j) {
        const Bounds& b = p.bounds()[j];
        if (b.lower && b.upper) {
            plan.kind[j] = VarKind::Box;
            plan.offset[j] = *b.lower;
            box_row[j] = rows++;
        } else if (b.lower) {
            plan.kind[j] = VarKind::Lower;
            plan.offset[j] = *b.lower;
        } else if (b.upper) {
            plan.kind[j] = VarKind::Upper;
            plan.offset[j] = *b.upper;
        } else {
            plan.kind[j] = VarKind::Free;
        }
    }

    // Shifted right-hand sides and dual objective.
    std::vector<double> rhs(rows, 0.0);
    for (std::size_t i = 0; i < mc; ++i) {
        const Constraint& c = p.constraints()[i];
        double r = c.rhs;
        for (std::size_t j = 0; j < nv; ++j) {
            if (plan.offset[j] != 0.0)
                r -= c.coefficients[j] * plan.offset[j];
        }
        rhs[i] = r;
    }
    for (std::size_t j = 0; j < nv; ++j) {
        if (box_row[j] != kNone)
            rhs[box_row[j]] = *p.bounds()[j].upper - *p.bounds()[j].lower;
        plan.constant += sign * p.objective()[j] * plan.offset[j];
    }

    plan.dual = LpProblem(rows, Sense::Maximize);
    plan.dual.set_objective(Vector(rhs));
    std::vector<double> ylo(rows, -kInf);
    std::vector<double> yup(rows, kInf);
    for (std::size_t i = 0; i < rows; ++i) {
        const Relation rel = i < mc ? p.constraints()[i].relation : Relation::LessEqual;
        if (rel == Relation::GreaterEqual)
            ylo[i] = 0.0;
        else if (rel == Relation::LessEqual)
            yup[i] = 0.0;
    }
    plan.lower_src.assign(rows, kNone);
    plan.upper_src.assign(rows, kNone);
    plan.dual_row.assign(nv, kNone);
    plan.single_y.assign(nv, kNone);
    plan.single_coef.assign(nv, 0.0);

    std::vector<double> column(rows);
    for (std::size_t j = 0; j < nv; ++j) {
        const double flip = plan.kind[j] == VarKind::Upper ? -1.0 : 1.0;
        std::size_t nnz = 0;
        std::size_t last = kNone;
        for (std::size_t i = 0; i < mc; ++i) {
            column[i] = flip * p.constraints()[i].coefficients[j];
            if (column[i] != 0.0) {
                ++nnz;
                last = i;
            }
        }
        for (std::size_t i = mc; i < rows; ++i)
            column[i] = 0.0;
        if (box_row[j] != kNone) {
            column[box_row[j]] = 1.0;
            ++nnz;
            last = box_row[j];
        }
        const double cj = flip * sign * p.objective()[j];
        const bool equality = plan.kind[j] == VarKind::Free;
        if (nnz == 0) {
            if (equality ? std::abs(cj) > kFeasibilityTolerance : cj < -kFeasibilityTolerance)
                plan.dual_infeasible = true;
            continue;
        }
        if (nnz == 1) {
            const double a = column[last];
            const double v = cj / a;
            plan.single_y[j] = last;
            plan.single_coef[j] = a;
            if (equality || a > 0.0) {
                if (v < yup[last]) {
                    yup[last] = v;
                    plan.upper_src[last] = j;
                }
            }
            if (equality || a < 0.0) {
                if (v > ylo[last]) {
                    ylo[last] = v;
                    plan.lower_src[last] = j;
                }
            }
            continue;
        }
        plan.dual_row[j] = plan.dual.constraints().size();
        plan.dual.add_constraint(Vector(column), equality ? Relation::Equal : Relation::LessEqual, cj);
        ++plan.dense_rows;
    }
    for (std::size_t i = 0; i < rows; ++i) {
        if (ylo[i] > yup[i] + kFeasibilityTolerance)
            plan.dual_infeasible = true;
        plan.dual.set_bounds(i, ylo[i] == -kInf ? std::nullopt : std::optional<double>(ylo[i]),
                             yup[i] == kInf ? std::nullopt : std::optional<double>(yup[i]));
    }
    return plan;
}

// Solves through the dual; empty when the caller should fall back to the primal.
std::optional<LpSolution> solve_via_dual(const LpProblem& p, const DualPlan& plan, const SolverOptions& options)
{
    if (plan.dual_infeasible)
        return std::nullopt;
    const std::size_t nv = p.num_variables();
    const std::size_t mc = p.constraints().size();
    Engine engine(plan.dual, options);
    const Status status = engine.solve();
    LpSolution solution;
    solution.iterations = engine.iterations();
    solution.solved_dual = true;
    if (status == Status::Unbounded) {
        solution.status = Status::Infeasible;
        return solution;
    }
    if (status == Status::Infeasible)
        return std::nullopt;

    // The engine minimizes -b'y; its multipliers pi give x' = -pi.
    const std::vector<double> pi = engine.row_multipliers();
    const std::vector<double> y = engine.structural_values();
    std::vector<double> xs(nv, 0.0);
    for (std::size_t j = 0; j < nv; ++j) {
        if (plan.dual_row[j] != kNone)
            xs[j] = -pi[plan.dual_row[j]];
    }
    for (std::size_t i = 0; i < y.size(); ++i) {
        const State st = engine.state(i);
        if (st == State::Basic || st == State::Zero)
            continue;
        const double di = engine.reduced_cost(i);
        const std::size_t src = di > 0.0 ? plan.lower_src[i] : (di < 0.0 ? plan.upper_src[i] : kNone);
        if (src != kNone)
            xs[src] = -di / plan.single_coef[src];
    }
    std::vector<double> x(nv);
    for (std::size_t j = 0; j < nv; ++j) {
        switch (plan.kind[j]) {
        case VarKind::Free: x[j] = xs[j]; break;
        case VarKind::Lower:
        case VarKind::Box: x[j] = plan.offset[j] + std::max(0.0, xs[j]); break;
        case VarKind::Upper: x[j] = plan.offset[j] - std::max(0.0, xs[j]); break;
        }
        if (plan.kind[j] == VarKind::Box)
            x[j] = std::min(x[j], *p.bounds()[j].upper);
    }
    Vector point(std::move(x));

    // Accept only a verified point: feasible and matching the dual objective.
    double scale = 1.0;
    for (const Constraint& c : p.constraints())
        scale = std::max(scale, std::abs(c.rhs));
    if (feasibility_check(p, point).max_violation > kRecoveryTolerance * scale)
        return std::nullopt;
    const double sign = p.sense() == Sense::Maximize ? -1.0 : 1.0;
    const double primal = sign * dot(p.objective().span(), point.span());
    const double dual = dot(plan.dual.objective().span(), std::span<const double>(y)) + plan.constant;
    if (std::abs(primal - dual) > kRecoveryTolerance * std::max(scale, 1.0 + std::abs(primal)))
        return std::nullopt;

    solution.status = Status::Optimal;
    solution.objective = dot(p.objective().span(), point.span());
    solution.point = std::move(point);
    std::vector<double> duals(mc);
    for (std::size_t i = 0; i < mc; ++i)
        duals[i] = sign * y[i];
    solution.duals = Vector(std::move(duals));
    return solution;
}

// Work estimate for a dense tableau of the given shape: pivots scale with rows.
double tableau_work(double rows, double cols)
{
    return rows * rows * (rows + cols);
}

}  // namespace

LpSolution solve(const LpProblem& problem, const SolverOptions& options)
{
    if (options.formulation != Formulation::Primal) {
        const DualPlan plan = plan_dual(problem);
        bool use_dual = options.formulation == Formulation::Dual;
        if (!use_dual) {
            const double primal_rows = static_cast<double>(problem.constraints().size());
            const double dual_rows = static_cast<double>(plan.dense_rows);
            use_dual = tableau_work(dual_rows, static_cast<double>(plan.dual.num_variables())) <
                       0.5 * tableau_work(primal_rows, static_cast<double>(problem.num_variables()));
        }
        if (use_dual) {
            if (auto via_dual = solve_via_dual(problem, plan, options))
                return *via_dual;
        }
    }
    return solve_primal(problem, options);
}

ViolationReport feasibility_check(const LpProblem& problem, const Vector& point)
{
    if (point.dim() != problem.num_variables())
        throw Error(ErrorCode::DimensionMismatch, "point dimension");
    ViolationReport report{-std::numeric_limits<double>::infinity(), 0};
    auto consider = [&report](double violation, std::size_t index) {
        if (violation > report.max_violation) {
            report.max_violation = violation;
            report.worst = index;
        }
    };
    const auto& cons = problem.constraints();
    for (std::size_t i = 0; i < cons.size(); ++i) {
        const double lhs = dot(cons[i].coefficients.span(), point.span());
        switch (cons[i].relation) {
        case Relation::LessEqual: consider(lhs - cons[i].rhs, i); break;
        case Relation::GreaterEqual: consider(cons[i].rhs - lhs, i); break;
        case Relation::Equal: consider(std::abs(lhs - cons[i].rhs), i); break;
        }
    }
    for (std::size_t j = 0; j < problem.num_variables(); ++j) {
        const Bounds& bnd = problem.bounds()[j];
        if (bnd.lower)
            consider(*bnd.lower - point[j], cons.size() + j);
        if (bnd.upper)
            consider(point[j] - *bnd.upper, cons.size() + j);
    }
    if (!std::isfinite(report.max_violation))
        report.max_violation = 0.0;
    return report;
}

namespace {

void write_double(std::ostream& out, double v)
{
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.write(buf, res.ptr - buf);
}

}  // namespace

void write_text(std::ostream& out, const LpProblem& problem)
{
    out << "lp v1\n";
    out << "sense " << (problem.sense() == Sense::Minimize ? "minimize" : "maximize") << '\n';
    out << "variables " << problem.num_variables() << '\n';
    out << "objective";
    for (double c : problem.objective()) {
        out << ' ';
        write_double(out, c);
    }
    out << '\n';
    for (std::size_t j = 0; j < problem.num_variables(); ++j) {
        const Bounds& bnd = problem.bounds()[j];
        if (!bnd.lower && !bnd.upper)
            continue;
        out << "bound " << j << ' ';
        if (bnd.lower)
            write_double(out, *bnd.lower);
        else
            out << "-inf";
        out << ' ';
        if (bnd.upper)
            write_double(out, *bnd.upper);
        else
            out << "inf";
        out << '\n';
    }
    for (const Constraint& c : problem.constraints()) {
        out << "row";
        for (double a : c.coefficients) {
            out << ' ';
            write_double(out, a);
        }
        switch (c.relation) {
        case Relation::LessEqual: out << " <= "; break;
        case Relation::Equal: out << " = "; break;
        case Relation::GreaterEqual: out << " >= "; break;
        }
        write_double(out, c.rhs);
        out << '\n';
    }
}

}  // namespace genvert::lp
