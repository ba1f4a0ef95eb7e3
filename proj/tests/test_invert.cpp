#include <cmath>

#include <gtest/gtest.h>

#include <genvert/errors.hpp>
#include <genvert/invert.hpp>
#include <genvert/random.hpp>

#include "oracles.hpp"

using namespace genvert;

namespace {

ErrorCode code_of(auto&& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorCode::InvalidArgument;
}

Layer relu_layer(Matrix w) { return Layer(std::move(w), Activation::relu()); }
Layer leaky_layer(Matrix w, double c = 0.1) { return Layer(std::move(w), Activation::leaky(c)); }

double rel_err(const Vector& z, const Vector& truth)
{
    return norm2(subtract(z, truth).span()) / norm2(truth.span());
}

Vector gaussian(std::size_t n, std::uint64_t seed)
{
    Rng rng(seed);
    Vector v(n);
    for (double& x : v) x = rng.normal();
    return v;
}

}  // namespace

TEST(Realizable, HandSolvedLayers)
{
    Layer l = relu_layer(Matrix{{1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}});
    Vector z = invert_layer_realizable(l, Vector{2.0, 3.0, 5.0});
    EXPECT_NEAR(z[0], 2.0, 1e-14);
    EXPECT_NEAR(z[1], 3.0, 1e-14);

    // Active rows 2 and 3; row 1 is inactive and -1 <= 0 holds.
    z = invert_layer_realizable(l, Vector{0.0, 2.0, 1.0});
    EXPECT_NEAR(z[0], -1.0, 1e-14);
    EXPECT_NEAR(z[1], 2.0, 1e-14);

    EXPECT_EQ(code_of([&] { invert_layer_realizable(l, Vector{0.0, 0.0, 0.0}); }), ErrorCode::InsufficientActiveRows);
    // Active rows agree on z = (1, 1) but the inactive row would then be 2 > 0.
    EXPECT_EQ(code_of([&] { invert_layer_realizable(relu_layer(Matrix{{1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}}), Vector{2.0, 3.0, 9.0}); }),
              ErrorCode::NotRealizable);
}

TEST(Realizable, RandomNetworks)
{
    std::vector<std::size_t> dims{20, 100, 500};
    std::size_t ok = 0;
    for (std::uint64_t s = 0; s < 10; ++s) {
        auto net = random_gaussian_net(dims, WeightStdRule::Unit, s);
        Vector truth = gaussian(20, 1000 + s);
        auto rep = invert_realizable(net, forward(net, truth));
        ok += rep.success && rel_err(rep.latent, truth) <= 1e-8;
    }
    EXPECT_GE(ok, 9u);

    GeneratorNetwork depth1({relu_layer(Matrix{{1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}, {0.0, -1.0}})});
    Vector truth{0.3, -2.0};
    auto rep = invert_realizable(depth1, forward(depth1, truth));
    EXPECT_LT(rel_err(rep.latent, truth), 1e-15);

    auto net = random_gaussian_net(dims, WeightStdRule::Unit, 3);
    try {
        invert_realizable(net, Vector(500, 0.0));
        ADD_FAILURE();
    } catch (const LayerError& e) {
        EXPECT_EQ(e.code(), ErrorCode::InsufficientActiveRows);
        EXPECT_EQ(e.layer(), 2u);
    }
}

TEST(LeakyExact, HandSolved)
{
    Layer l = leaky_layer(Matrix{{1.0}, {2.0}});
    EXPECT_NEAR(invert_layer_leaky_exact(l, Vector{-0.3, -0.6})[0], -3.0, 1e-14);
    EXPECT_EQ(code_of([&] { invert_layer_leaky_exact(l, Vector{5.0, -0.2}); }), ErrorCode::NotRealizable);
    Layer r = leaky_layer(Matrix{{1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}});
    Vector z = invert_layer_leaky_exact(r, Vector{2.0, 3.0, 5.0});
    EXPECT_NEAR(z[0], 2.0, 1e-14);
    EXPECT_NEAR(z[1], 3.0, 1e-14);
}

TEST(LinfRound, HandSolved)
{
    Layer l = relu_layer(Matrix{{1.0}, {-1.0}});
    auto r = linf_round(l, Vector{2.1, 0.0}, 0.15, std::nullopt);
    ASSERT_EQ(r.status, lp::Status::Optimal);
    EXPECT_NEAR(r.objective, 0.0, 1e-12);
    EXPECT_NEAR((*r.z)[0], 2.1, 1e-12);
    EXPECT_EQ(r.active_set_size, 1u);
}

TEST(LinfRound, MatchesVertexOracle)
{
    // Same program written out by hand: variables (z, delta).
    Layer l = relu_layer(Matrix{{1.0}, {1.0}});
    lp::LpProblem p(2);
    p.set_objective(Vector{0.0, 1.0});
    p.add_constraint(Vector{1.0, 1.0}, lp::Relation::GreaterEqual, 2.0);
    p.add_constraint(Vector{1.0, -1.0}, lp::Relation::LessEqual, 2.0);
    p.add_constraint(Vector{1.0, -1.0}, lp::Relation::LessEqual, 0.0);
    p.set_bounds(0, -10.0, 10.0);
    p.set_bounds(1, 0.0, 10.0);
    auto ref = oracle::enumerate_vertices(p);
    ASSERT_TRUE(ref.feasible);
    auto r = linf_round(l, Vector{2.0, 0.0}, 0.01, std::nullopt);
    ASSERT_EQ(r.status, lp::Status::Optimal);
    EXPECT_NEAR(r.objective, ref.objective, 1e-12);
    EXPECT_NEAR(r.objective, 1.0, 1e-12);
}

TEST(LinfLoop, ContradictoryObservationGrowsEpsilon)
{
    // delta >= 1 is needed while the cap keeps delta <= eps, so the first
    // feasible round is the first t with 0.1 * 1.2^t >= 1, i.e. t = 13.
    Layer l = relu_layer(Matrix{{1.0}, {1.0}});
    for (auto search : {EpsilonSearch::Sequential, EpsilonSearch::Bisection}) {
        LpInvertConfig cfg;
        cfg.search = search;
        auto out = invert_layer_linf(l, Vector{2.0, 0.0}, cfg);
        EXPECT_NEAR(out.epsilon_used, 0.1 * std::pow(1.2, 13), 1e-12);
        EXPECT_NEAR(out.delta_or_l1, 1.0, 1e-9);
        EXPECT_NEAR(out.recovered[0], 1.0, 1e-9);
    }
    LpInvertConfig tight;
    tight.max_epsilon_rounds = 5;
    EXPECT_EQ(code_of([&] { invert_layer_linf(l, Vector{2.0, 0.0}, tight); }), ErrorCode::NeverFeasible);
}

TEST(LinfLoop, NoiselessLayerIsExact)
{
    std::vector<std::size_t> dims{10, 60};
    auto net = random_gaussian_net(dims, WeightStdRule::Unit, 17);
    Vector truth = gaussian(10, 4);
    Vector x = forward(net, truth);
    auto out = invert_layer_linf(net.layer(1), x, LpInvertConfig{});
    EXPECT_NEAR(out.delta_or_l1, 0.0, 1e-10);
    EXPECT_LT(rel_err(out.recovered, truth), 1e-9);
}

TEST(LinfLeaky, HandSolved)
{
    Layer l = leaky_layer(Matrix{{1.0}, {-1.0}});
    auto r = linf_round(l, Vector{2.0, -0.2}, 0.05, std::nullopt);
    ASSERT_EQ(r.status, lp::Status::Optimal);
    EXPECT_NEAR(r.objective, 0.0, 1e-12);
    EXPECT_NEAR((*r.z)[0], 2.0, 1e-12);

    // Band 1 wants z = 2, the negative band wants z = 3; the balance point
    // 2 + delta = 3 - delta / c gives delta = c / (1 + c).
    auto s = linf_round(l, Vector{2.0, -0.3}, 0.05, std::nullopt);
    ASSERT_EQ(s.status, lp::Status::Optimal);
    EXPECT_NEAR(s.objective, 0.1 / 1.1, 1e-12);
    EXPECT_NEAR((*s.z)[0], 2.0 + 0.1 / 1.1, 1e-12);

    // Nonnegative observations: same answer as the ReLU program.
    Layer w = leaky_layer(Matrix{{1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}});
    Layer wr = relu_layer(Matrix{{1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}});
    auto a = linf_round(w, Vector{2.0, 3.0, 5.0}, 0.1, std::nullopt);
    auto b = linf_round(wr, Vector{2.0, 3.0, 5.0}, 0.1, std::nullopt);
    EXPECT_NEAR(a.objective, b.objective, 1e-12);
    EXPECT_NEAR((*a.z)[1], (*b.z)[1], 1e-12);
}

TEST(L1Round, HandSolved)
{
    // |z - 1.2| + |z - 1| is flat on [1, 1.2]; the third row is inactive.
    auto r = l1_round(relu_layer(Matrix{{1.0}, {1.0}, {-1.0}}), Vector{1.2, 1.0, 0.0}, 0.5);
    ASSERT_EQ(r.status, lp::Status::Optimal);
    EXPECT_NEAR(r.objective, 0.2, 1e-12);
    double z = (*r.z)[0];
    EXPECT_TRUE(std::abs(z - 1.0) < 1e-12 || std::abs(z - 1.2) < 1e-12) << z;

    auto one = l1_round(relu_layer(Matrix{{1.0}}), Vector{3.0}, 1.0);
    EXPECT_NEAR((*one.z)[0], 3.0, 1e-12);
    EXPECT_NEAR(one.objective, 0.0, 1e-12);
}

TEST(L1Loop, NoiselessAndLeaky)
{
    std::vector<std::size_t> dims{8, 40};
    auto net = random_gaussian_net(dims, WeightStdRule::Unit, 23);
    Vector truth = gaussian(8, 9);
    auto out = invert_layer_l1(net.layer(1), forward(net, truth), LpInvertConfig{});
    EXPECT_NEAR(out.delta_or_l1, 0.0, 1e-9);
    EXPECT_LT(rel_err(out.recovered, truth), 1e-9);

    auto lnet = random_gaussian_net(dims, WeightStdRule::Unit, 23, Activation::leaky(0.1));
    auto lout = invert_layer_l1_leaky(lnet.layer(1), forward(lnet, truth), LpInvertConfig{});
    EXPECT_NEAR(lout.delta_or_l1, 0.0, 1e-9);
    EXPECT_LT(rel_err(lout.recovered, truth), 1e-9);

    // Two-band mismatch from the l_inf test: |z - 2| + |0.1 z - 0.3| has its
    // kink minimum at z = 2 with value 0.1.
    auto r = l1_round(leaky_layer(Matrix{{1.0}, {-1.0}}), Vector{2.0, -0.3}, 0.05);
    ASSERT_EQ(r.status, lp::Status::Optimal);
    EXPECT_NEAR(r.objective, 0.1, 1e-12);
    EXPECT_NEAR((*r.z)[0], 2.0, 1e-12);
}

TEST(RelaxedRound, HandSolved)
{
    auto r = relaxed_round(relu_layer(Matrix{{1.0}, {-1.0}}), Vector{2.0, 0.0}, 0.0);
    ASSERT_EQ(r.status, lp::Status::Optimal);
    EXPECT_NEAR((*r.z)[0], 2.0, 1e-12);

    // x = 0 inside a bounded polytope: the objective vanishes.
    Layer box = relu_layer(Matrix{{1.0, 0.0}, {0.0, 1.0}, {-1.0, -1.0}});
    auto zero = relaxed_round(box, Vector{0.0, 0.0, 0.0}, 0.5);
    ASSERT_EQ(zero.status, lp::Status::Optimal);
    EXPECT_NEAR(zero.objective, 0.0, 1e-12);

    Layer w1 = relu_layer(Matrix{{1.0, 2.0}, {3.0, 1.0}});
    auto ex = relaxed_round(w1, Vector{1.0, 0.0}, 0.0);
    ASSERT_EQ(ex.status, lp::Status::Optimal);
    Vector pre = matvec(w1.weights(), *ex.z);
    EXPECT_NEAR(pre[0], 1.0, 1e-12);
    EXPECT_LE(pre[1], 1e-12);
}

TEST(Network, LinfNoiselessRecovery)
{
    std::vector<std::size_t> dims{10, 50, 200};
    std::size_t ok = 0;
    for (std::uint64_t s = 0; s < 10; ++s) {
        auto net = random_gaussian_net(dims, WeightStdRule::Unit, 100 + s);
        Vector truth = gaussian(10, 200 + s);
        auto rep = invert_network(net, forward(net, truth), InversionMethod::Linf, LpInvertConfig{});
        ok += rel_err(rep.latent, truth) <= 1e-6;
        EXPECT_EQ(rep.layers.size(), 2u);
    }
    EXPECT_GE(ok, 9u);
}

TEST(Network, DepthOneMatchesLayerLoop)
{
    std::vector<std::size_t> dims{6, 30};
    auto net = random_gaussian_net(dims, WeightStdRule::Unit, 8);
    Vector x = forward(net, gaussian(6, 1));
    Rng noise(2);
    for (double& v : x) v += noise.uniform(-1e-3, 1e-3);
    LpInvertConfig cfg;
    auto rep = invert_network(net, x, InversionMethod::Linf, cfg);
    auto lay = invert_layer_linf(net.layer(1), x, cfg);
    EXPECT_EQ(rep.latent, lay.recovered);
}

TEST(Network, EpsilonRules)
{
    LpInvertConfig cfg;
    cfg.epsilon_init = 0.01;
    EXPECT_DOUBLE_EQ(layer_epsilon(cfg, 3, 1), 0.01);
    cfg.epsilon_rule = EpsilonRule::Theoretical;
    cfg.assumed_c = 1.0;
    EXPECT_NEAR(layer_epsilon(cfg, 3, 1), 0.04, 1e-15);
    EXPECT_NEAR(layer_epsilon(cfg, 3, 3), 0.01, 1e-15);
    EXPECT_EQ(parse_epsilon_rule(to_string(EpsilonRule::Theoretical)), EpsilonRule::Theoretical);

    LpInvertConfig bad;
    bad.alpha = 1.0;
    EXPECT_EQ(code_of([&] { bad.validate(); }), ErrorCode::InvalidArgument);
}

TEST(Bound, TheoreticalValues)
{
    EXPECT_DOUBLE_EQ(theoretical_bound(1, 0.5, 2.0, BoundNorm::Linf).bound, 0.5);
    EXPECT_NEAR(theoretical_bound(3, 0.1, 1.0, BoundNorm::Linf).bound, 0.8, 1e-15);
    EXPECT_DOUBLE_EQ(theoretical_bound(2, 1.0, 0.5, BoundNorm::L1).bound, 16.0);
}
