#include "genvert/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <string>

#include "genvert/errors.hpp"
#include "genvert/random.hpp"

namespace genvert {

void GdConfig::validate() const
{
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw Error(ErrorCode::InvalidArgument, "learning_rate must be positive");
    if (max_iters < 1)
        throw Error(ErrorCode::InvalidArgument, "max_iters must be at least 1");
    if (!(grad_norm_stop >= 0.0))
        throw Error(ErrorCode::InvalidArgument, "grad_norm_stop must be nonnegative");
    if (restarts < 1)
        throw Error(ErrorCode::InvalidArgument, "restarts must be at least 1");
}

ForwardOperator ForwardOperator::identity(std::size_t dim)
{
    return ForwardOperator(Kind::Identity, dim);
}

ForwardOperator ForwardOperator::mask(std::size_t dim, std::vector<std::size_t> kept)
{
    for (std::size_t i : kept) {
        if (i >= dim)
            throw Error(ErrorCode::DimensionMismatch,
                        "mask index " + std::to_string(i) + " outside output range " + std::to_string(dim));
    }
    ForwardOperator op(Kind::Mask, dim);
    op.kept_ = std::move(kept);
    return op;
}

ForwardOperator ForwardOperator::dense(Matrix a)
{
    ForwardOperator op(Kind::Dense, a.cols());
    op.matrix_ = std::move(a);
    return op;
}

std::size_t ForwardOperator::output_dim() const noexcept
{
    switch (kind_) {
    case Kind::Identity: return input_dim_;
    case Kind::Mask: return kept_.size();
    case Kind::Dense: return matrix_.rows();
    }
    return 0;
}

Vector ForwardOperator::apply(const Vector& v) const
{
    if (v.dim() != input_dim_)
        throw Error(ErrorCode::DimensionMismatch, "operator input dimension");
    switch (kind_) {
    case Kind::Identity: return v;
    case Kind::Mask: {
        Vector out(kept_.size());
        for (std::size_t i = 0; i < kept_.size(); ++i)
            out[i] = v[kept_[i]];
        return out;
    }
    case Kind::Dense: return matvec(matrix_, v);
    }
    return v;
}

Vector ForwardOperator::apply_transposed(const Vector& y) const
{
    if (y.dim() != output_dim())
        throw Error(ErrorCode::DimensionMismatch, "operator output dimension");
    switch (kind_) {
    case Kind::Identity: return y;
    case Kind::Mask: {
        Vector out(input_dim_);
        for (std::size_t i = 0; i < kept_.size(); ++i)
            out[kept_[i]] += y[i];
        return out;
    }
    case Kind::Dense: return matvec_transposed(matrix_, y);
    }
    return y;
}

namespace {

void check_dims(const GeneratorNetwork& net, const Vector& x, const ForwardOperator& op)
{
    if (op.input_dim() != net.output_dim())
        throw Error(ErrorCode::DimensionMismatch, "operator expects " + std::to_string(op.input_dim()) +
                                                      " inputs, network outputs " + std::to_string(net.output_dim()));
    if (x.dim() != op.output_dim())
        throw Error(ErrorCode::DimensionMismatch, "observation has " + std::to_string(x.dim()) +
                                                      " entries, operator outputs " + std::to_string(op.output_dim()));
}

// Forward/backward on raw buffers so a diverging run (lr too large) can be
// detected instead of tripping the finite checks of Vector.
struct Workspace {
    std::vector<std::vector<double>> pre;   // per layer
    std::vector<std::vector<double>> post;  // post[0] = z, post[i] = layer i output
};

void raw_forward(const GeneratorNetwork& net, std::span<const double> z, Workspace& ws)
{
    const std::size_t d = net.depth();
    ws.pre.resize(d);
    ws.post.resize(d + 1);
    ws.post[0].assign(z.begin(), z.end());
    for (std::size_t i = 0; i < d; ++i) {
        const Layer& layer = net.layers()[i];
        const Matrix& w = layer.weights();
        auto& pre = ws.pre[i];
        auto& post = ws.post[i + 1];
        const auto& in = ws.post[i];
        pre.assign(w.rows(), 0.0);
        post.resize(w.rows());
        for (std::size_t r = 0; r < w.rows(); ++r) {
            const auto row = w.row(r);
            double acc = 0.0;
            for (std::size_t c = 0; c < row.size(); ++c)
                acc += row[c] * in[c];
            pre[r] = acc + layer.bias()[r];
            post[r] = layer.activation().apply(pre[r]);
        }
    }
}

// Residual A G(z) - x and objective for the current workspace.
double raw_residual(const ForwardOperator& op, const Vector& x, const Workspace& ws, std::vector<double>& resid)
{
    const auto& out = ws.post.back();
    const std::size_t m = op.output_dim();
    resid.resize(m);
    switch (op.kind()) {
    case ForwardOperator::Kind::Identity:
        for (std::size_t i = 0; i < m; ++i)
            resid[i] = out[i] - x[i];
        break;
    case ForwardOperator::Kind::Mask:
        for (std::size_t i = 0; i < m; ++i)
            resid[i] = out[op.kept()[i]] - x[i];
        break;
    case ForwardOperator::Kind::Dense: {
        bool finite = std::all_of(out.begin(), out.end(), [](double v) { return std::isfinite(v); });
        if (!finite) {
            std::fill(resid.begin(), resid.end(), std::numeric_limits<double>::infinity());
            break;
        }
        const Vector img = op.apply(Vector(out));
        for (std::size_t i = 0; i < m; ++i)
            resid[i] = img[i] - x[i];
        break;
    }
    }
    double f = 0.0;
    for (double r : resid)
        f += r * r;
    return 0.5 * f;
}

void raw_backward(const GeneratorNetwork& net, const ForwardOperator& op, const Workspace& ws,
                  const std::vector<double>& resid, std::vector<double>& grad)
{
    const std::size_t d = net.depth();
    std::vector<double> upstream(net.output_dim(), 0.0);
    switch (op.kind()) {
    case ForwardOperator::Kind::Identity: upstream = resid; break;
    case ForwardOperator::Kind::Mask:
        for (std::size_t i = 0; i < resid.size(); ++i)
            upstream[op.kept()[i]] += resid[i];
        break;
    case ForwardOperator::Kind::Dense: upstream = op.apply_transposed(Vector(resid)).values(); break;
    }
    for (std::size_t i = d; i-- > 0;) {
        const Layer& layer = net.layers()[i];
        const Matrix& w = layer.weights();
        for (std::size_t r = 0; r < w.rows(); ++r)
            upstream[r] *= layer.activation().derivative(ws.pre[i][r]);
        std::vector<double> down(w.cols(), 0.0);
        for (std::size_t r = 0; r < w.rows(); ++r) {
            const double g = upstream[r];
            if (g == 0.0)
                continue;
            const auto row = w.row(r);
            for (std::size_t c = 0; c < row.size(); ++c)
                down[c] += g * row[c];
        }
        upstream = std::move(down);
    }
    grad = std::move(upstream);
}

struct RunResult {
    std::vector<double> z;
    double objective = std::numeric_limits<double>::infinity();
    std::size_t iterations = 0;
    bool converged = false;
};

RunResult run_gd(const GeneratorNetwork& net, const Vector& x, const ForwardOperator& op, const GdConfig& cfg,
                 std::vector<double> z)
{
    Workspace ws;
    std::vector<double> resid;
    std::vector<double> grad;
    std::vector<double> trial(z.size());
    RunResult best;

    raw_forward(net, z, ws);
    double f = raw_residual(op, x, ws, resid);
    auto consider = [&](const std::vector<double>& point, double value) {
        if (std::isfinite(value) && value < best.objective) {
            best.objective = value;
            best.z = point;
        }
    };
    consider(z, f);

    std::size_t it = 0;
    for (; it < cfg.max_iters; ++it) {
        if (!std::isfinite(f))
            break;
        raw_backward(net, op, ws, resid, grad);
        const double gnorm = norm2(grad);
        if (!std::isfinite(gnorm))
            break;
        if (gnorm <= cfg.grad_norm_stop) {
            best.converged = true;
            break;
        }
        double step = cfg.learning_rate;
        for (int halvings = 0;; ++halvings) {
            for (std::size_t c = 0; c < z.size(); ++c)
                trial[c] = z[c] - step * grad[c];
            raw_forward(net, trial, ws);
            const double f_new = raw_residual(op, x, ws, resid);
            if (!cfg.line_halving || f_new <= f || halvings >= 50) {
                z.swap(trial);
                f = f_new;
                break;
            }
            step *= 0.5;
        }
        consider(z, f);
    }
    best.iterations = it;
    if (best.z.empty())
        best.z = std::vector<double>(z.size(), 0.0);
    // A converged run ends at its last iterate, which is also the best one
    // unless the objective rose along the way; report the final point then.
    if (best.converged && std::isfinite(f)) {
        best.z = z;
        best.objective = f;
    }
    return best;
}

InversionReport report_from(const GeneratorNetwork& net, const Vector& x, const ForwardOperator& op,
                            const RunResult& run, std::size_t total_iters)
{
    InversionReport report;
    report.latent = Vector(run.z);
    report.gd_iterations = total_iters;
    report.success = run.converged;
    report.residuals = residuals(op.apply(forward(net, report.latent)), x);
    if (!run.converged)
        report.notes.push_back("gradient-norm stop not reached");
    return report;
}

}  // namespace

double gd_objective(const GeneratorNetwork& net, const Vector& x, const ForwardOperator& op, const Vector& z)
{
    check_dims(net, x, op);
    const Vector r = subtract(op.apply(forward(net, z)), x);
    const double n = norm2(r.span());
    return 0.5 * n * n;
}

Vector gd_gradient(const GeneratorNetwork& net, const Vector& x, const ForwardOperator& op, const Vector& z)
{
    check_dims(net, x, op);
    if (z.dim() != net.input_dim())
        throw Error(ErrorCode::DimensionMismatch, "latent dimension");
    Workspace ws;
    std::vector<double> resid;
    std::vector<double> grad;
    raw_forward(net, z.span(), ws);
    raw_residual(op, x, ws, resid);
    raw_backward(net, op, ws, resid, grad);
    return Vector(std::move(grad));
}

Vector finite_diff_grad(const GeneratorNetwork& net, const Vector& x, const ForwardOperator& op, const Vector& z,
                        double h)
{
    if (!(h > 0.0) || !std::isfinite(h))
        throw Error(ErrorCode::InvalidArgument, "finite-difference step must be positive");
    check_dims(net, x, op);
    Vector grad(z.dim());
    Vector probe = z;
    for (std::size_t i = 0; i < z.dim(); ++i) {
        probe[i] = z[i] + h;
        const double up = gd_objective(net, x, op, probe);
        probe[i] = z[i] - h;
        const double down = gd_objective(net, x, op, probe);
        probe[i] = z[i];
        grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

InversionReport gd_invert_from(const GeneratorNetwork& net, const Vector& x, const ForwardOperator& op,
                               const GdConfig& cfg, const Vector& start)
{
    cfg.validate();
    check_dims(net, x, op);
    if (start.dim() != net.input_dim())
        throw Error(ErrorCode::DimensionMismatch, "start point dimension");
    const RunResult run = run_gd(net, x, op, cfg, start.values());
    return report_from(net, x, op, run, run.iterations);
}

InversionReport gd_invert(const GeneratorNetwork& net, const Vector& x, const ForwardOperator& op,
                          const GdConfig& cfg)
{
    cfg.validate();
    check_dims(net, x, op);
    const std::size_t k = net.input_dim();
    RunResult best;
    std::size_t total = 0;
    for (std::size_t r = 0; r < cfg.restarts; ++r) {
        std::vector<double> start(k, 0.0);
        if (cfg.init_seed) {
            Rng rng(derive_seed(*cfg.init_seed, r));
            for (double& v : start)
                v = rng.normal();
        }
        RunResult run = run_gd(net, x, op, cfg, std::move(start));
        total += run.iterations;
        if (r == 0 || run.objective < best.objective)
            best = std::move(run);
        if (!cfg.init_seed)
            break;  // every restart from zero is identical
    }
    return report_from(net, x, op, best, total);
}

namespace {

Vector project(const GeneratorNetwork& net, const Vector& img, const Projector& projector, InversionReport& inner)
{
    if (projector.kind == Projector::Kind::Realizable) {
        inner = net.layers().front().activation().is_leaky() ? invert_leaky_exact(net, img)
                                                              : invert_realizable(net, img);
    } else {
        inner = invert_network(net, img, projector.method, projector.lp);
    }
    return inner.latent;
}

}  // namespace

InversionReport pgd_sense(const GeneratorNetwork& net, const Vector& y, const ForwardOperator& op,
                          const Projector& projector, const PgdConfig& cfg)
{
    check_dims(net, y, op);
    if (cfg.outer_iters < 1)
        throw Error(ErrorCode::InvalidArgument, "outer_iters must be at least 1");
    if (!(cfg.step > 0.0) || !std::isfinite(cfg.step))
        throw Error(ErrorCode::InvalidArgument, "step must be positive");

    InversionReport best;
    double best_objective = std::numeric_limits<double>::infinity();
    std::vector<std::string> notes;
    std::size_t lp_solves = 0;
    std::exception_ptr last_error;

    Vector img = op.apply_transposed(y);
    for (std::size_t t = 0; t < cfg.outer_iters; ++t) {
        if (t > 0) {
            const Vector grad = op.apply_transposed(subtract(op.apply(img), y));
            img = combine(1.0, img, -cfg.step, grad);
        }
        InversionReport inner;
        try {
            const Vector z = project(net, img, projector, inner);
            lp_solves += inner.lp_solves;
            img = forward(net, z);
        } catch (const Error& e) {
            notes.push_back("outer iteration " + std::to_string(t + 1) + ": projection failed: " + e.what());
            last_error = std::current_exception();
            continue;
        }
        const double r = norm2(subtract(op.apply(img), y).span());
        const double objective = 0.5 * r * r;
        if (objective < best_objective) {
            best_objective = objective;
            best = std::move(inner);
        }
        // Exact data: nothing left to gain.
        if (objective == 0.0)
            break;
    }
    if (!std::isfinite(best_objective))
        std::rethrow_exception(last_error);
    best.residuals = residuals(op.apply(forward(net, best.latent)), y);
    best.lp_solves = lp_solves;
    best.success = true;
    for (auto& n : notes)
        best.notes.push_back(std::move(n));
    return best;
}

}  // namespace genvert
