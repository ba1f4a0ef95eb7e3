#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "genvert/linalg.hpp"

namespace genvert {

class Activation {
public:
    enum class Kind { ReLU, LeakyReLU };

    static constexpr double kDefaultLeakySlope = 0.1;

    static Activation relu() { return Activation(Kind::ReLU, 0.0); }
    /// Throws ValidationError unless 0 < slope < 1.
    static Activation leaky(double slope = kDefaultLeakySlope);

    Kind kind() const noexcept { return kind_; }
    bool is_leaky() const noexcept { return kind_ == Kind::LeakyReLU; }
    /// Negative-side slope c; 0 for ReLU.
    double slope() const noexcept { return slope_; }

    double apply(double pre) const noexcept { return pre >= 0.0 ? pre : slope_ * pre; }
    /// Subgradient convention: derivative at exactly 0 is taken from the left.
    double derivative(double pre) const noexcept { return pre > 0.0 ? 1.0 : slope_; }

    bool operator==(const Activation&) const = default;

private:
    Activation(Kind kind, double slope) : kind_(kind), slope_(slope) {}

    Kind kind_;
    double slope_;
};

/// One affine map followed by an activation: a -> act(W a + b).
class Layer {
public:
    Layer(Matrix weights, Vector bias, Activation activation);
    /// Zero bias.
    Layer(Matrix weights, Activation activation);

    const Matrix& weights() const noexcept { return weights_; }
    const Vector& bias() const noexcept { return bias_; }
    const Activation& activation() const noexcept { return activation_; }
    std::size_t input_dim() const noexcept { return weights_.cols(); }
    std::size_t output_dim() const noexcept { return weights_.rows(); }
    bool has_bias() const noexcept;

    /// W a + b
    Vector pre_activation(const Vector& input) const;
    Vector forward(const Vector& input) const;

    bool operator==(const Layer&) const = default;

private:
    Matrix weights_;
    Vector bias_;
    Activation activation_;
};

class GeneratorNetwork {
public:
    explicit GeneratorNetwork(std::vector<Layer> layers);

    std::size_t depth() const noexcept { return layers_.size(); }
    std::size_t input_dim() const noexcept { return layers_.front().input_dim(); }
    std::size_t output_dim() const noexcept { return layers_.back().output_dim(); }
    const std::vector<Layer>& layers() const noexcept { return layers_; }
    /// 1-based, matching the convention that layer 1 consumes the latent code.
    const Layer& layer(std::size_t index) const { return layers_.at(index - 1); }
    /// Widths n_0 = k, n_1, ..., n_d = n.
    std::vector<std::size_t> widths() const;

    bool operator==(const GeneratorNetwork&) const = default;

private:
    std::vector<Layer> layers_;
};

Vector forward(const GeneratorNetwork& net, const Vector& z);
/// Outputs z_1 ... z_d of every layer; the last equals forward(net, z).
std::vector<Vector> forward_trace(const GeneratorNetwork& net, const Vector& z);

/// Equivalent zero-bias network taking z (+) 1. Hidden layers carry an extra
/// pass-through unit with weight 1 on the constant coordinate so the constant
/// reaches every depth (ReLU(1) = LeakyReLU(1) = 1).
GeneratorNetwork absorb_bias(const GeneratorNetwork& net);

enum class WeightStdRule {
    Unit,           // std 1
    InvSqrtFanout,  // std 1/sqrt(n_i), n_i the output width of layer i
};

std::string_view to_string(WeightStdRule rule);
WeightStdRule parse_weight_std_rule(std::string_view text);

/// I.i.d. Gaussian weights, zero biases. dims = (k, n_1, ..., n_d); entries
/// are drawn layer by layer in row-major order from Rng(seed).
GeneratorNetwork random_gaussian_net(std::span<const std::size_t> dims, WeightStdRule rule, std::uint64_t seed,
                                     Activation activation = Activation::relu());

/// Text format, one item per line:
///
///     genvert-net v1
///     layers <d>
///     layer <n_i> <n_{i-1}> relu|leaky [<c>]
///     <n_i lines of n_{i-1} weights>
///     <one line of n_i biases>
///
/// Floats use the shortest representation that round-trips exactly.
void write_net(std::ostream& out, const GeneratorNetwork& net);
/// Errors: ParseError (malformed), DimensionMismatch (declared vs actual
/// counts, broken chaining), NonFinite, ValidationError (slope outside (0,1)).
GeneratorNetwork read_net(std::istream& in);

void save_net(const std::filesystem::path& path, const GeneratorNetwork& net);
GeneratorNetwork load_net(const std::filesystem::path& path);

/// Observation files: one float per line.
void save_vector(const std::filesystem::path& path, const Vector& v);
Vector load_vector(const std::filesystem::path& path);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace genvert
