#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include <genvert/errors.hpp>
#include <genvert/lp.hpp>

#include "oracles.hpp"

using namespace genvert;
using namespace genvert::lp;

namespace {

SolverOptions with(Formulation f, Pricing pr = Pricing::DantzigWithBlandFallback)
{
    SolverOptions o;
    o.formulation = f;
    o.pricing = pr;
    return o;
}

}  // namespace

TEST(Lp, LowerBoundConstraint)
{
    LpProblem p(1);
    p.set_objective(Vector{1.0});
    p.add_constraint(Vector{1.0}, Relation::GreaterEqual, 3.0);
    auto s = solve(p);
    ASSERT_EQ(s.status, Status::Optimal);
    EXPECT_NEAR((*s.point)[0], 3.0, 1e-12);
    EXPECT_NEAR(*s.objective, 3.0, 1e-12);
}

TEST(Lp, MaximizeFreeVariables)
{
    LpProblem p(2, Sense::Maximize);
    p.set_objective(Vector{1.0, 1.0});
    p.add_constraint(Vector{1.0, 0.0}, Relation::LessEqual, 1.0);
    p.add_constraint(Vector{0.0, 1.0}, Relation::LessEqual, 1.0);
    for (auto f : {Formulation::Primal, Formulation::Dual, Formulation::Automatic}) {
        auto s = solve(p, with(f));
        ASSERT_EQ(s.status, Status::Optimal);
        EXPECT_NEAR(*s.objective, 2.0, 1e-12);
        EXPECT_NEAR((*s.point)[0], 1.0, 1e-12);
        EXPECT_NEAR((*s.point)[1], 1.0, 1e-12);
    }
}

TEST(Lp, ContradictoryBoundsInfeasible)
{
    LpProblem p(1);
    p.set_objective(Vector{0.0});
    p.add_constraint(Vector{1.0}, Relation::LessEqual, -1.0);
    p.add_constraint(Vector{1.0}, Relation::GreaterEqual, 0.0);
    for (auto f : {Formulation::Primal, Formulation::Dual}) {
        auto s = solve(p, with(f));
        EXPECT_EQ(s.status, Status::Infeasible);
        EXPECT_FALSE(s.point);
    }
}

TEST(Lp, UnboundedDetected)
{
    LpProblem p(2, Sense::Maximize);
    p.set_objective(Vector{1.0, 1.0});
    p.add_constraint(Vector{1.0, -1.0}, Relation::LessEqual, 1.0);
    p.set_bounds(0, 0.0, std::nullopt);
    p.set_bounds(1, 0.0, std::nullopt);
    EXPECT_EQ(solve(p, with(Formulation::Primal)).status, Status::Unbounded);
    EXPECT_EQ(solve(p, with(Formulation::Dual)).status, Status::Unbounded);
}

TEST(Lp, RejectsMalformedInput)
{
    LpProblem p(2);
    EXPECT_THROW(p.add_constraint(Vector{1.0}, Relation::LessEqual, 0.0), Error);
    EXPECT_THROW(p.set_objective(Vector{1.0}), Error);
    EXPECT_THROW(p.set_bounds(5, 0.0, 1.0), Error);
    EXPECT_THROW(p.add_constraint(Vector{1.0, 1.0}, Relation::LessEqual, std::nan("")), Error);
}

TEST(Lp, VertexEnumerationOracleAgreement)
{
    std::size_t optimal = 0, infeasible = 0;
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        LpProblem p = oracle::random_boxed_lp(seed);
        auto ref = oracle::enumerate_vertices(p);
        for (auto f : {Formulation::Primal, Formulation::Dual}) {
            for (auto pr : {Pricing::DantzigWithBlandFallback, Pricing::Bland}) {
                auto s = solve(p, with(f, pr));
                if (!ref.feasible) {
                    EXPECT_EQ(s.status, Status::Infeasible) << "seed " << seed;
                    continue;
                }
                ASSERT_EQ(s.status, Status::Optimal) << "seed " << seed;
                EXPECT_NEAR(*s.objective, ref.objective, 1e-6) << "seed " << seed;
                EXPECT_LE(feasibility_check(p, *s.point).max_violation, 1e-8) << "seed " << seed;
            }
        }
        (ref.feasible ? optimal : infeasible) += 1;
    }
    // The generator must exercise both outcomes.
    EXPECT_GT(optimal, 100u);
    EXPECT_GT(infeasible, 5u);
}

TEST(Lp, DualsMatchFiniteDifferences)
{
    // d(objective)/d(rhs) against re-solves with a shifted rhs.
    std::size_t checked = 0;
    for (std::uint64_t seed = 1000; seed < 1100; ++seed) {
        LpProblem p = oracle::random_boxed_lp(seed);
        auto s = solve(p);
        if (s.status != Status::Optimal || p.constraints().empty()) continue;
        const double h = 1e-6;
        for (std::size_t r = 0; r < p.constraints().size(); ++r) {
            auto shifted = [&](double dh) {
                LpProblem q(p.num_variables(), p.sense());
                q.set_objective(p.objective());
                for (std::size_t j = 0; j < p.num_variables(); ++j)
                    q.set_bounds(j, p.bounds()[j].lower, p.bounds()[j].upper);
                for (std::size_t i = 0; i < p.constraints().size(); ++i) {
                    const auto& c = p.constraints()[i];
                    q.add_constraint(c.coefficients, c.relation, c.rhs + (i == r ? dh : 0.0));
                }
                return solve(q);
            };
            auto up = shifted(h), down = shifted(-h);
            if (up.status != Status::Optimal || down.status != Status::Optimal) continue;
            double fwd = (*up.objective - *s.objective) / h;
            double bwd = (*s.objective - *down.objective) / h;
            // Only where the value function is differentiable.
            if (std::abs(fwd - bwd) > 1e-5) continue;
            EXPECT_NEAR((*s.duals)[r], 0.5 * (fwd + bwd), 1e-4) << "seed " << seed << " row " << r;
            ++checked;
        }
    }
    EXPECT_GT(checked, 50u);
}

TEST(Lp, BealeCyclingExampleTerminates)
{
    // Textbook instance on which Dantzig pricing with naive tie breaking cycles.
    LpProblem p(4);
    p.set_objective(Vector{-0.75, 150.0, -0.02, 6.0});
    p.add_constraint(Vector{0.25, -60.0, -0.04, 9.0}, Relation::LessEqual, 0.0);
    p.add_constraint(Vector{0.5, -90.0, -0.02, 3.0}, Relation::LessEqual, 0.0);
    p.add_constraint(Vector{0.0, 0.0, 1.0, 0.0}, Relation::LessEqual, 1.0);
    for (std::size_t j = 0; j < 4; ++j) p.set_bounds(j, 0.0, std::nullopt);
    for (auto f : {Formulation::Primal, Formulation::Dual}) {
        for (auto pr : {Pricing::DantzigWithBlandFallback, Pricing::Bland}) {
            auto s = solve(p, with(f, pr));
            ASSERT_EQ(s.status, Status::Optimal);
            EXPECT_NEAR(*s.objective, -0.05, 1e-10);
        }
    }
}

TEST(Lp, DuplicatedConstraintsTerminate)
{
    // Every row repeated three times and many rows through the optimum.
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        LpProblem base = oracle::random_boxed_lp(seed + 5000, 4, 4);
        LpProblem p(base.num_variables(), base.sense());
        p.set_objective(base.objective());
        for (std::size_t j = 0; j < base.num_variables(); ++j)
            p.set_bounds(j, base.bounds()[j].lower, base.bounds()[j].upper);
        for (int rep = 0; rep < 3; ++rep)
            for (const auto& c : base.constraints()) p.add_constraint(c.coefficients, c.relation, c.rhs);
        auto ref = oracle::enumerate_vertices(base);
        for (auto f : {Formulation::Primal, Formulation::Dual}) {
            auto s = solve(p, with(f));
            if (!ref.feasible) {
                EXPECT_EQ(s.status, Status::Infeasible);
            } else {
                ASSERT_EQ(s.status, Status::Optimal) << "seed " << seed;
                EXPECT_NEAR(*s.objective, ref.objective, 1e-6);
            }
        }
    }

    // Pyramid apex: 8 facets meet at the origin of a 3-d problem.
    LpProblem apex(3, Sense::Maximize);
    apex.set_objective(Vector{0.0, 0.0, 1.0});
    for (int sx : {-1, 1})
        for (int sy : {-1, 1})
            for (double t : {1.0, 2.0}) apex.add_constraint(Vector{sx * t, sy * t, 1.0}, Relation::LessEqual, 0.0);
    apex.add_constraint(Vector{0.0, 0.0, 1.0}, Relation::GreaterEqual, -5.0);
    auto s = solve(apex);
    ASSERT_EQ(s.status, Status::Optimal);
    EXPECT_NEAR(*s.objective, 0.0, 1e-12);
}

TEST(Lp, IterationLimitThrows)
{
    LpProblem p = oracle::random_boxed_lp(7);
    for (std::uint64_t seed = 7; p.constraints().size() < 4; ++seed) p = oracle::random_boxed_lp(seed);
    SolverOptions o;
    o.max_iterations = 1;
    o.formulation = Formulation::Primal;
    try {
        auto s = solve(p, o);
        // A one-pivot solve is legitimate; anything else must have thrown.
        EXPECT_LE(s.iterations, 1u);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::IterationLimit);
    }
}

TEST(FeasibilityCheck, Basic)
{
    LpProblem p(1);
    p.add_constraint(Vector{1.0}, Relation::LessEqual, 1.0);
    EXPECT_LE(feasibility_check(p, Vector{0.5}).max_violation, 0.0);
    auto r = feasibility_check(p, Vector{2.0});
    EXPECT_DOUBLE_EQ(r.max_violation, 1.0);
    EXPECT_EQ(r.worst, 0u);
}

TEST(FeasibilityCheck, WitnessNetworkPolytope)
{
    // Layer 1 of the two-layer example with observed hidden output (1, 0):
    // row 1 active (equality), row 2 inactive (<= 0).
    LpProblem p(2);
    p.add_constraint(Vector{1.0, 2.0}, Relation::Equal, 1.0);
    p.add_constraint(Vector{3.0, 1.0}, Relation::LessEqual, 0.0);
    EXPECT_LE(feasibility_check(p, Vector{-1.0, 1.0}).max_violation, 0.0);
    EXPECT_GT(feasibility_check(p, Vector{1.0, 3.0}).max_violation, 0.0);
}

TEST(Lp, WriteText)
{
    LpProblem p(2, Sense::Maximize);
    p.set_objective(Vector{1.0, -2.5});
    p.set_bounds(1, 0.0, std::nullopt);
    p.add_constraint(Vector{1.0, 1.0}, Relation::Equal, 3.0);
    std::ostringstream out;
    write_text(out, p);
    EXPECT_EQ(out.str(),
              "lp v1\nsense maximize\nvariables 2\nobjective 1 -2.5\nbound 1 0 inf\nrow 1 1 = 3\n");
}
