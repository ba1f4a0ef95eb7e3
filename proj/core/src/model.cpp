#include "genvert/model.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "genvert/errors.hpp"
#include "genvert/random.hpp"

namespace genvert {

Activation Activation::leaky(double slope)
{
    if (!(slope > 0.0 && slope < 1.0))
        throw Error(ErrorCode::ValidationError, "leaky slope must lie in (0,1), got " + format_double(slope));
    return Activation(Kind::LeakyReLU, slope);
}

Layer::Layer(Matrix weights, Vector bias, Activation activation)
    : weights_(std::move(weights)), bias_(std::move(bias)), activation_(activation)
{
    if (bias_.dim() != weights_.rows())
        throw Error(ErrorCode::DimensionMismatch, "bias has " + std::to_string(bias_.dim()) + " entries for " +
                                                      std::to_string(weights_.rows()) + " rows");
}

Layer::Layer(Matrix weights, Activation activation)
    : weights_(std::move(weights)), bias_(weights_.rows()), activation_(activation)
{
}

bool Layer::has_bias() const noexcept
{
    for (double b : bias_)
        if (b != 0.0)
            return true;
    return false;
}

Vector Layer::pre_activation(const Vector& input) const
{
    if (input.dim() != weights_.cols())
        throw Error(ErrorCode::DimensionMismatch, "layer input has " + std::to_string(input.dim()) +
                                                      " entries, expected " + std::to_string(weights_.cols()));
    std::vector<double> out(weights_.rows());
    for (std::size_t r = 0; r < weights_.rows(); ++r) {
        const auto row = weights_.row(r);
        double acc = 0.0;
        for (std::size_t c = 0; c < row.size(); ++c)
            acc += row[c] * input[c];
        out[r] = acc + bias_[r];
    }
    return Vector(std::move(out));
}

Vector Layer::forward(const Vector& input) const
{
    Vector out = pre_activation(input);
    for (double& v : out)
        v = activation_.apply(v);
    return out;
}

GeneratorNetwork::GeneratorNetwork(std::vector<Layer> layers) : layers_(std::move(layers))
{
    if (layers_.empty())
        throw Error(ErrorCode::InvalidArgument, "network needs at least one layer");
    for (std::size_t i = 1; i < layers_.size(); ++i) {
        if (layers_[i].input_dim() != layers_[i - 1].output_dim())
            throw Error(ErrorCode::DimensionMismatch, "layer " + std::to_string(i + 1) + " does not chain onto layer " +
                                                          std::to_string(i));
    }
}

std::vector<std::size_t> GeneratorNetwork::widths() const
{
    std::vector<std::size_t> out{input_dim()};
    for (const Layer& l : layers_)
        out.push_back(l.output_dim());
    return out;
}

Vector forward(const GeneratorNetwork& net, const Vector& z)
{
    Vector a = z;
    for (const Layer& l : net.layers())
        a = l.forward(a);
    return a;
}

std::vector<Vector> forward_trace(const GeneratorNetwork& net, const Vector& z)
{
    std::vector<Vector> out;
    out.reserve(net.depth());
    const Vector* current = &z;
    for (const Layer& l : net.layers()) {
        out.push_back(l.forward(*current));
        current = &out.back();
    }
    return out;
}

GeneratorNetwork absorb_bias(const GeneratorNetwork& net)
{
    std::vector<Layer> layers;
    const std::size_t d = net.depth();
    for (std::size_t i = 0; i < d; ++i) {
        const Layer& src = net.layers()[i];
        const bool last = i + 1 == d;
        const std::size_t rows = src.output_dim() + (last ? 0 : 1);
        const std::size_t cols = src.input_dim() + 1;
        Matrix w(rows, cols);
        for (std::size_t r = 0; r < src.output_dim(); ++r) {
            for (std::size_t c = 0; c < src.input_dim(); ++c)
                w(r, c) = src.weights()(r, c);
            w(r, cols - 1) = src.bias()[r];
        }
        if (!last)
            w(rows - 1, cols - 1) = 1.0;
        layers.emplace_back(std::move(w), Vector(rows), src.activation());
    }
    return GeneratorNetwork(std::move(layers));
}

std::string_view to_string(WeightStdRule rule)
{
    return rule == WeightStdRule::Unit ? "unit" : "inv_sqrt_fanout";
}

WeightStdRule parse_weight_std_rule(std::string_view text)
{
    if (text == "unit")
        return WeightStdRule::Unit;
    if (text == "inv_sqrt_fanout")
        return WeightStdRule::InvSqrtFanout;
    throw Error(ErrorCode::InvalidArgument, "unknown weight std rule '" + std::string(text) + "'");
}

GeneratorNetwork random_gaussian_net(std::span<const std::size_t> dims, WeightStdRule rule, std::uint64_t seed,
                                     Activation activation)
{
    if (dims.size() < 2)
        throw Error(ErrorCode::InvalidArgument, "need at least an input and an output width");
    for (std::size_t w : dims)
        if (w == 0)
            throw Error(ErrorCode::InvalidArgument, "layer widths must be positive");
    Rng rng(seed);
    std::vector<Layer> layers;
    for (std::size_t i = 1; i < dims.size(); ++i) {
        const double std_dev = rule == WeightStdRule::Unit ? 1.0 : 1.0 / std::sqrt(static_cast<double>(dims[i]));
        std::vector<double> entries(dims[i] * dims[i - 1]);
        for (double& e : entries)
            e = std_dev * rng.normal();
        layers.emplace_back(Matrix(dims[i], dims[i - 1], std::move(entries)), Vector(dims[i]), activation);
    }
    return GeneratorNetwork(std::move(layers));
}

std::string format_double(double v)
{
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

void write_row(std::ostream& out, std::span<const double> values)
{
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i != 0)
            out << ' ';
        out << format_double(values[i]);
    }
    out << '\n';
}

class LineReader {
public:
    explicit LineReader(std::istream& in) : in_(in) {}

    std::vector<std::string> tokens(const char* what)
    {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            std::istringstream ss(line);
            std::vector<std::string> out;
            for (std::string tok; ss >> tok;)
                out.push_back(tok);
            if (!out.empty())
                return out;
        }
        fail(ErrorCode::ParseError, std::string("unexpected end of file, expected ") + what);
    }

    bool at_end()
    {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                return false;
        }
        return true;
    }

    [[noreturn]] void fail(ErrorCode code, const std::string& message) const
    {
        throw Error(code, "line " + std::to_string(line_no_) + ": " + message);
    }

    std::size_t parse_count(const std::string& tok) const
    {
        std::size_t v = 0;
        const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
            fail(ErrorCode::ParseError, "expected a count, got '" + tok + "'");
        return v;
    }

    double parse_real(const std::string& tok) const
    {
        double v = 0.0;
        const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
            fail(ErrorCode::ParseError, "expected a number, got '" + tok + "'");
        if (!std::isfinite(v))
            fail(ErrorCode::NonFinite, "non-finite entry '" + tok + "'");
        return v;
    }

    std::vector<double> real_row(std::size_t expected, const char* what)
    {
        const auto toks = tokens(what);
        if (toks.size() != expected)
            fail(ErrorCode::DimensionMismatch, std::string(what) + " has " + std::to_string(toks.size()) +
                                                   " entries, declared " + std::to_string(expected));
        std::vector<double> out;
        out.reserve(expected);
        for (const auto& t : toks)
            out.push_back(parse_real(t));
        return out;
    }

private:
    std::istream& in_;
    std::size_t line_no_ = 0;
};

}  // namespace

void write_net(std::ostream& out, const GeneratorNetwork& net)
{
    out << "genvert-net v1\n";
    out << "layers " << net.depth() << '\n';
    for (const Layer& l : net.layers()) {
        out << "layer " << l.output_dim() << ' ' << l.input_dim() << ' ';
        if (l.activation().is_leaky())
            out << "leaky " << format_double(l.activation().slope()) << '\n';
        else
            out << "relu\n";
        for (std::size_t r = 0; r < l.output_dim(); ++r)
            write_row(out, l.weights().row(r));
        write_row(out, l.bias().span());
    }
}

GeneratorNetwork read_net(std::istream& in)
{
    LineReader reader(in);
    auto header = reader.tokens("header");
    if (header.size() != 2 || header[0] != "genvert-net" || header[1] != "v1")
        reader.fail(ErrorCode::ParseError, "missing 'genvert-net v1' header");
    auto count = reader.tokens("layer count");
    if (count.size() != 2 || count[0] != "layers")
        reader.fail(ErrorCode::ParseError, "expected 'layers <d>'");
    const std::size_t depth = reader.parse_count(count[1]);
    if (depth == 0)
        reader.fail(ErrorCode::ParseError, "network needs at least one layer");

    std::vector<Layer> layers;
    for (std::size_t i = 0; i < depth; ++i) {
        auto head = reader.tokens("layer header");
        if (head.size() < 4 || head[0] != "layer")
            reader.fail(ErrorCode::ParseError, "expected 'layer <rows> <cols> relu|leaky [c]'");
        const std::size_t rows = reader.parse_count(head[1]);
        const std::size_t cols = reader.parse_count(head[2]);
        std::optional<Activation> act;
        if (head[3] == "relu" && head.size() == 4) {
            act = Activation::relu();
        } else if (head[3] == "leaky" && head.size() == 5) {
            const double slope = reader.parse_real(head[4]);
            if (!(slope > 0.0 && slope < 1.0))
                reader.fail(ErrorCode::ValidationError, "leaky slope " + head[4] + " outside (0,1)");
            act = Activation::leaky(slope);
        } else {
            reader.fail(ErrorCode::ParseError, "bad activation spec");
        }
        if (!layers.empty() && layers.back().output_dim() != cols)
            reader.fail(ErrorCode::DimensionMismatch, "layer " + std::to_string(i + 1) + " input width " +
                                                          std::to_string(cols) + " does not chain");
        std::vector<double> entries;
        entries.reserve(rows * cols);
        for (std::size_t r = 0; r < rows; ++r) {
            auto row = reader.real_row(cols, "weight row");
            entries.insert(entries.end(), row.begin(), row.end());
        }
        auto bias = reader.real_row(rows, "bias row");
        layers.emplace_back(Matrix(rows, cols, std::move(entries)), Vector(std::move(bias)), *act);
    }
    if (!reader.at_end())
        reader.fail(ErrorCode::DimensionMismatch, "trailing content after declared layers");
    return GeneratorNetwork(std::move(layers));
}

void save_net(const std::filesystem::path& path, const GeneratorNetwork& net)
{
    std::ofstream out(path);
    if (!out)
        throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
    write_net(out, net);
}

GeneratorNetwork load_net(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::ParseError, "cannot open " + path.string());
    return read_net(in);
}

void save_vector(const std::filesystem::path& path, const Vector& v)
{
    std::ofstream out(path);
    if (!out)
        throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
    for (double x : v)
        out << format_double(x) << '\n';
}

Vector load_vector(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::ParseError, "cannot open " + path.string());
    std::vector<double> values;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos)
            continue;
        const auto last = line.find_last_not_of(" \t\r");
        const std::string tok = line.substr(first, last - first + 1);
        double v = 0.0;
        const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
            throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(line_no) + ": bad number '" + tok + "'");
        if (!std::isfinite(v))
            throw Error(ErrorCode::NonFinite, path.string() + ":" + std::to_string(line_no));
        values.push_back(v);
    }
    return Vector(std::move(values));
}

}  // namespace genvert
