#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "genvert/linalg.hpp"

namespace genvert::lp {

enum class Sense { Minimize, Maximize };
enum class Relation { LessEqual, Equal, GreaterEqual };
enum class Status { Optimal, Infeasible, Unbounded };

std::string to_string(Status status);

struct Constraint {
    Vector coefficients;
    Relation relation = Relation::LessEqual;
    double rhs = 0.0;
};

/// Absent bound means unbounded on that side. Variables are free unless bounded.
struct Bounds {
    std::optional<double> lower;
    std::optional<double> upper;
};

class LpProblem {
public:
    explicit LpProblem(std::size_t num_variables, Sense sense = Sense::Minimize);

    void set_sense(Sense sense) { sense_ = sense; }
    void set_objective(Vector objective);
    void add_constraint(Vector coefficients, Relation relation, double rhs);
    void set_bounds(std::size_t variable, std::optional<double> lower, std::optional<double> upper);

    std::size_t num_variables() const noexcept { return num_variables_; }
    Sense sense() const noexcept { return sense_; }
    const Vector& objective() const noexcept { return objective_; }
    const std::vector<Constraint>& constraints() const noexcept { return constraints_; }
    const std::vector<Bounds>& bounds() const noexcept { return bounds_; }

private:
    std::size_t num_variables_;
    Sense sense_;
    Vector objective_;
    std::vector<Constraint> constraints_;
    std::vector<Bounds> bounds_;
};

struct LpSolution {
    Status status = Status::Infeasible;
    std::optional<Vector> point;       // present iff Optimal
    std::optional<double> objective;   // present iff Optimal
    /// Per constraint, d(objective)/d(rhs) at the optimum; present iff Optimal.
    std::optional<Vector> duals;
    std::size_t iterations = 0;
    /// True when the point was recovered from the dual program.
    bool solved_dual = false;
};

enum class Pricing {
    /// Bland's smallest-index rule throughout.
    Bland,
    /// Largest reduced cost; switches to Bland while a run of degenerate pivots lasts.
    DantzigWithBlandFallback,
};

inline constexpr double kFeasibilityTolerance = 1e-9;
inline constexpr double kOptimalityTolerance = 1e-9;

enum class Formulation {
    /// Dual when it gives a markedly shorter tableau.
    Automatic,
    Primal,
    /// Solve the dual and read the point off its multipliers. Falls back to the
    /// primal when the dual is infeasible or the recovered point fails to verify.
    Dual,
};

struct SolverOptions {
    Pricing pricing = Pricing::DantzigWithBlandFallback;
    Formulation formulation = Formulation::Automatic;
    /// 0 selects max(10000, 50 * (variables + constraints)).
    std::size_t max_iterations = 0;
    /// Consecutive degenerate Dantzig pivots tolerated before switching to Bland.
    std::size_t degenerate_switch = 40;
};

/// Two-phase bounded-variable simplex on a dense tableau; variable bounds are
/// handled implicitly and free variables are not split. Throws
/// Error(IterationLimit) when the pivot budget runs out.
LpSolution solve(const LpProblem& problem, const SolverOptions& options = {});

struct ViolationReport {
    double max_violation = 0.0;
    /// Index into constraints, or constraints().size() + variable for a bound.
    std::size_t worst = 0;
};

/// Largest signed violation over constraints and bounds (<= 0 means satisfied).
ViolationReport feasibility_check(const LpProblem& problem, const Vector& point);

/// Plain-text debug dump, one constraint per line:
///
///     lp v1
///     sense minimize|maximize
///     variables <n>
///     objective <c_1> ... <c_n>
///     bound <j> <lower|-inf> <upper|inf>      (only for bounded variables)
///     row <a_1> ... <a_n> <= | = | >= <rhs>
void write_text(std::ostream& out, const LpProblem& problem);

}  // namespace genvert::lp
