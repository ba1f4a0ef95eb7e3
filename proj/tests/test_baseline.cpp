#include <cmath>

#include <gtest/gtest.h>

#include <genvert/baseline.hpp>
#include <genvert/errors.hpp>
#include <genvert/random.hpp>

using namespace genvert;

namespace {

Vector gaussian(std::size_t n, Rng& rng)
{
    Vector v(n);
    for (double& x : v) x = rng.normal();
    return v;
}

double rel_err(const Vector& z, const Vector& truth)
{
    return norm2(subtract(z, truth).span()) / norm2(truth.span());
}

/// Smallest |pre-activation| over every layer at z.
double min_abs_pre(const GeneratorNetwork& net, const Vector& z)
{
    double m = INFINITY;
    Vector a = z;
    for (const auto& l : net.layers()) {
        Vector pre = l.pre_activation(a);
        for (double v : pre) m = std::min(m, std::abs(v));
        a = l.forward(a);
    }
    return m;
}

}  // namespace

TEST(Gradient, MatchesFiniteDifferences)
{
    std::vector<std::size_t> dims{5, 20, 40};
    Rng rng(31);
    std::size_t checked = 0;
    for (std::uint64_t s = 0; checked < 40; ++s) {
        auto net = random_gaussian_net(dims, WeightStdRule::InvSqrtFanout, s,
                                       s % 2 ? Activation::relu() : Activation::leaky(0.2));
        Vector z = gaussian(5, rng);
        Vector x = gaussian(40, rng);
        const double h = 1e-6;
        if (min_abs_pre(net, z) < 1e3 * h) continue;
        for (auto op : {ForwardOperator::identity(40), ForwardOperator::mask(40, {0, 3, 5, 39, 17})}) {
            Vector g = gd_gradient(net, op.kind() == ForwardOperator::Kind::Identity ? x : op.apply(x), op, z);
            Vector fd = finite_diff_grad(net, op.kind() == ForwardOperator::Kind::Identity ? x : op.apply(x), op, z, h);
            EXPECT_LE(norm_inf(subtract(g, fd).span()), 1e-4 * std::max(1.0, norm_inf(fd.span())));
        }
        ++checked;
    }
}

TEST(Gradient, DeadUnitWithZeroDownstreamWeight)
{
    // Hidden unit 2 sits exactly at zero and feeds nothing downstream.
    GeneratorNetwork net({Layer(Matrix{{1.0, 0.0}, {1.0, -1.0}}, Activation::relu()),
                          Layer(Matrix{{2.0, 0.0}}, Activation::relu())});
    Vector z{1.0, 1.0};
    Vector x{0.5};
    auto op = ForwardOperator::identity(1);
    Vector g = gd_gradient(net, x, op, z);
    Vector fd = finite_diff_grad(net, x, op, z, 1e-6);
    EXPECT_NEAR(g[0], fd[0], 1e-6);
    EXPECT_NEAR(g[1], fd[1], 1e-6);
    EXPECT_THROW(finite_diff_grad(net, x, op, z, 0.0), Error);
}

TEST(Gd, StartAtTruthIsStationary)
{
    std::vector<std::size_t> dims{10, 40, 80};
    auto net = random_gaussian_net(dims, WeightStdRule::InvSqrtFanout, 2);
    Rng rng(3);
    Vector truth = gaussian(10, rng);
    auto op = ForwardOperator::identity(80);
    Vector x = forward(net, truth);
    EXPECT_LE(norm2(gd_gradient(net, x, op, truth).span()), 1e-12);
    auto rep = gd_invert_from(net, x, op, GdConfig{}, truth);
    EXPECT_EQ(rep.latent, truth);
    EXPECT_EQ(rep.gd_iterations, 0u);
    EXPECT_TRUE(rep.success);
}

TEST(Gd, IdentityLayerConverges)
{
    GeneratorNetwork net({Layer(Matrix::identity(4), Activation::relu())});
    Vector x{0.5, 1.0, 2.0, 0.25};
    GdConfig cfg;
    cfg.learning_rate = 0.1;
    cfg.init_seed.reset();
    cfg.max_iters = 2000;
    // Zero start is a kink of every coordinate; a small positive start is
    // inside the active orthant where the objective is a plain quadratic.
    auto rep = gd_invert_from(net, x, ForwardOperator::identity(4), cfg, Vector(4, 0.01));
    EXPECT_TRUE(rep.success);
    EXPECT_LT(norm_inf(subtract(rep.latent, x).span()), 1e-8);
}

TEST(Gd, SmallLatentSucceeds)
{
    std::vector<std::size_t> dims{5, 60, 150};
    std::size_t ok = 0;
    for (std::uint64_t s = 0; s < 5; ++s) {
        auto net = random_gaussian_net(dims, WeightStdRule::InvSqrtFanout, s);
        Rng rng(50 + s);
        Vector truth = gaussian(5, rng);
        GdConfig cfg;
        cfg.init_seed = s;
        cfg.max_iters = 5000;
        auto rep = gd_invert(net, forward(net, truth), ForwardOperator::identity(150), cfg);
        ok += rel_err(rep.latent, truth) <= 1e-3;
    }
    EXPECT_GE(ok, 4u);
}

TEST(Operator, MaskAndDense)
{
    auto m = ForwardOperator::mask(4, {3, 1});
    EXPECT_EQ(m.apply(Vector{1.0, 2.0, 3.0, 4.0}), (Vector{4.0, 2.0}));
    EXPECT_EQ(m.apply_transposed(Vector{1.0, 2.0}), (Vector{0.0, 2.0, 0.0, 1.0}));
    auto d = ForwardOperator::dense(Matrix{{1.0, 1.0, 0.0}});
    EXPECT_EQ(d.apply(Vector{1.0, 2.0, 3.0}), Vector{3.0});
    EXPECT_EQ(d.apply_transposed(Vector{2.0}), (Vector{2.0, 2.0, 0.0}));
    EXPECT_THROW(ForwardOperator::mask(3, {3}), Error);
}

TEST(Pgd, IdentityOperatorEqualsInversion)
{
    std::vector<std::size_t> dims{5, 25, 60};
    auto net = random_gaussian_net(dims, WeightStdRule::Unit, 4);
    Rng rng(8);
    Vector truth = gaussian(5, rng);
    Vector y = forward(net, truth);
    Projector proj;
    PgdConfig cfg;
    cfg.outer_iters = 1;
    cfg.step = 1.0;
    auto rep = pgd_sense(net, y, ForwardOperator::identity(60), proj, cfg);
    auto direct = invert_network(net, y, InversionMethod::Linf, proj.lp);
    EXPECT_LT(norm_inf(subtract(rep.latent, direct.latent).span()), 1e-9);

    std::vector<std::size_t> all(60);
    for (std::size_t i = 0; i < 60; ++i) all[i] = i;
    auto masked = pgd_sense(net, y, ForwardOperator::mask(60, all), proj, cfg);
    EXPECT_EQ(masked.latent, rep.latent);
}

TEST(Pgd, MaskedRecovery)
{
    // 30% of the outputs hidden, noiseless.
    std::vector<std::size_t> dims{5, 30, 120};
    std::size_t ok = 0;
    const std::size_t seeds = 20;
    for (std::uint64_t s = 0; s < seeds; ++s) {
        auto net = random_gaussian_net(dims, WeightStdRule::InvSqrtFanout, 300 + s);
        Rng rng(400 + s);
        Vector truth = gaussian(5, rng);
        std::vector<std::size_t> kept;
        for (std::size_t i = 0; i < 120; ++i)
            if (rng.uniform01() >= 0.3) kept.push_back(i);
        auto op = ForwardOperator::mask(120, kept);
        Vector y = op.apply(forward(net, truth));
        Projector proj;
        proj.lp.epsilon_init = 1e-6;
        proj.lp.max_epsilon_rounds = 200;
        PgdConfig cfg;
        cfg.outer_iters = 60;
        cfg.step = 1.0;
        try {
            auto rep = pgd_sense(net, y, op, proj, cfg);
            ok += rel_err(rep.latent, truth) <= 1e-2;
        } catch (const Error&) {
        }
    }
    EXPECT_GE(ok, seeds * 8 / 10);
}
