#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "genvert/invert.hpp"
#include "genvert/linalg.hpp"
#include "genvert/model.hpp"

namespace genvert {

struct GdConfig {
    double learning_rate = 1.0;
    std::size_t max_iters = 1000;
    double grad_norm_stop = 1e-9;
    /// Each restart r starts from a standard Gaussian drawn from
    /// Rng(derive_seed(*init_seed, r)). Empty: start from z = 0, which is a
    /// stationary point of every zero-bias ReLU network.
    std::optional<std::uint64_t> init_seed = 0;
    std::size_t restarts = 1;
    /// Halve the step until the objective does not increase (up to 50 times).
    bool line_halving = false;

    void validate() const;
};

/// Linear measurement operator A applied to G(z).
class ForwardOperator {
public:
    static ForwardOperator identity(std::size_t dim);
    /// Keeps the listed coordinates (in the given order).
    static ForwardOperator mask(std::size_t dim, std::vector<std::size_t> kept);
    static ForwardOperator dense(Matrix a);

    enum class Kind { Identity, Mask, Dense };
    Kind kind() const noexcept { return kind_; }
    std::size_t input_dim() const noexcept { return input_dim_; }
    std::size_t output_dim() const noexcept;
    const std::vector<std::size_t>& kept() const noexcept { return kept_; }

    Vector apply(const Vector& v) const;
    Vector apply_transposed(const Vector& y) const;

private:
    ForwardOperator(Kind kind, std::size_t input_dim) : kind_(kind), input_dim_(input_dim) {}

    Kind kind_;
    std::size_t input_dim_;
    std::vector<std::size_t> kept_;
    Matrix matrix_;
};

/// f(z) = 0.5 * ||A G(z) - x||^2
double gd_objective(const GeneratorNetwork& net, const Vector& x, const ForwardOperator& op, const Vector& z);
/// Backpropagated subgradient of gd_objective.
Vector gd_gradient(const GeneratorNetwork& net, const Vector& x, const ForwardOperator& op, const Vector& z);
/// Central differences of gd_objective with step h (> 0).
Vector finite_diff_grad(const GeneratorNetwork& net, const Vector& x, const ForwardOperator& op, const Vector& z,
                        double h);

/// Fixed-step (or halving) gradient descent, best restart by final objective.
/// report.layers stays empty; report.success means the gradient-norm stop fired.
InversionReport gd_invert(const GeneratorNetwork& net, const Vector& x, const ForwardOperator& op,
                          const GdConfig& cfg);
/// Same, starting from a given point (single run).
InversionReport gd_invert_from(const GeneratorNetwork& net, const Vector& x, const ForwardOperator& op,
                               const GdConfig& cfg, const Vector& start);

/// Projection used by pgd_sense: one of the LP inversions, or the exact solver.
struct Projector {
    enum class Kind { Lp, Realizable } kind = Kind::Lp;
    InversionMethod method = InversionMethod::Linf;
    LpInvertConfig lp{};
};

struct PgdConfig {
    std::size_t outer_iters = 30;
    double step = 0.5;
};

/// Projected gradient descent on ||A x_img - y||^2 with projection onto the
/// range of G through inversion. Returns the best iterate by objective;
/// projection failures become notes. Throws the last projection error if no
/// iterate succeeded.
InversionReport pgd_sense(const GeneratorNetwork& net, const Vector& y, const ForwardOperator& op,
                          const Projector& projector, const PgdConfig& cfg = {});

}  // namespace genvert
