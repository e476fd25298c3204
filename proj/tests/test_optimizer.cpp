#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "czforge/optimizer.hpp"

using namespace czforge;
using namespace czforge::optimizer;

namespace {

double bowl(const Point& x) {
    const double c[3] = {1.5, -0.5, 2.25};
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        s += (x[i] - c[i]) * (x[i] - c[i]);
    }
    return s;
}

double rosenbrock(const Point& x) { return 100 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1 - x[0], 2); }

}  // namespace

TEST(NelderMead, ConvexBowl) {
    NelderMeadConfig cfg;
    cfg.p0 = {-3.0, 4.0, 0.0};
    cfg.bounds = {{-5, 5}, {-5, 5}, {-5, 5}};
    cfg.tol_f = 1e-16;
    cfg.tol_x = {1e-8, 1e-8, 1e-8};
    const auto run = minimize(bowl, cfg);
    EXPECT_TRUE(run.converged);
    EXPECT_LT(run.iterations, 200u);
    EXPECT_NEAR(run.best_p[0], 1.5, 1e-6);
    EXPECT_NEAR(run.best_p[1], -0.5, 1e-6);
    EXPECT_NEAR(run.best_p[2], 2.25, 1e-6);
}

TEST(NelderMead, Rosenbrock) {
    NelderMeadConfig cfg;
    cfg.p0 = {-1.2, 1.0};
    cfg.initial_steps = {0.1, 0.1};
    cfg.tol_f = 1e-20;
    cfg.tol_x = {1e-9, 1e-9};
    const auto run = minimize(rosenbrock, cfg);
    EXPECT_LT(run.iterations, 500u);
    EXPECT_NEAR(run.best_p[0], 1.0, 1e-4);
    EXPECT_NEAR(run.best_p[1], 1.0, 1e-4);
}

TEST(NelderMead, TraceInvariants) {
    NelderMeadConfig cfg;
    cfg.p0 = {0.0, 0.0};
    cfg.bounds = {{-0.5, 0.8}, {0.0, 3.0}};
    const auto run = minimize(rosenbrock, cfg);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& e : run.trace) {
        EXPECT_EQ(e.cost, rosenbrock(e.p));
        EXPECT_TRUE(cfg.bounds[0].contains(e.p[0]));
        EXPECT_TRUE(cfg.bounds[1].contains(e.p[1]));
        const double next = std::min(best, e.cost);
        EXPECT_LE(next, best);
        best = next;
    }
    EXPECT_EQ(run.best_cost, best);
    // Minimum (1, 1) is outside; the constrained optimum sits on x = 0.8.
    EXPECT_NEAR(run.best_p[0], 0.8, 1e-3);
}

TEST(NelderMead, Deterministic) {
    NelderMeadConfig cfg;
    cfg.p0 = {0.3, -0.7};
    const auto a = minimize(rosenbrock, cfg);
    const auto b = minimize(rosenbrock, cfg);
    ASSERT_EQ(a.trace.size(), b.trace.size());
    for (std::size_t i = 0; i < a.trace.size(); ++i) {
        EXPECT_EQ(a.trace[i].p, b.trace[i].p);
        EXPECT_EQ(a.trace[i].cost, b.trace[i].cost);
    }
}

TEST(NelderMead, IterationCapIsNotAnError) {
    NelderMeadConfig cfg;
    cfg.p0 = {-1.2, 1.0};
    cfg.max_iterations = 5;
    cfg.tol_f = 0.0;
    const auto run = minimize(rosenbrock, cfg);
    EXPECT_FALSE(run.converged);
    EXPECT_EQ(run.stop_reason, "iteration cap");
    EXPECT_EQ(run.iterations, 5u);
}

TEST(NelderMead, NonFiniteCostsAreAvoided) {
    NelderMeadConfig cfg;
    cfg.p0 = {0.5};
    cfg.bounds = {{0.0, 2.0}};
    cfg.tol_x = {1e-6};
    const auto run = minimize(
        [](const Point& x) {
            return x[0] > 1.2 ? std::numeric_limits<double>::quiet_NaN() : (x[0] - 1.0) * (x[0] - 1.0);
        },
        cfg);
    EXPECT_NEAR(run.best_p[0], 1.0, 1e-4);
    for (const auto& e : run.trace) {
        EXPECT_FALSE(std::isnan(e.cost));
    }
}

TEST(NelderMead, RejectsBadStart) {
    NelderMeadConfig cfg;
    cfg.p0 = {3.0};
    cfg.bounds = {{0.0, 1.0}};
    EXPECT_THROW(minimize(bowl, cfg), ParameterDomainError);
    cfg.p0 = {};
    EXPECT_THROW(minimize(bowl, cfg), ParameterDomainError);
    cfg.p0 = {0.5, 0.5};
    EXPECT_THROW(minimize(bowl, cfg), ParameterDomainError);
}

TEST(FoldInto, MirrorsAtBounds) {
    const Bounds b{0.0, 1.0};
    EXPECT_DOUBLE_EQ(fold_into(1.2, b), 0.8);
    EXPECT_DOUBLE_EQ(fold_into(-0.3, b), 0.3);
    EXPECT_DOUBLE_EQ(fold_into(0.4, b), 0.4);
    EXPECT_TRUE(b.contains(fold_into(17.3, b)));
}

TEST(Trace, CsvColumns) {
    NelderMeadConfig cfg;
    cfg.p0 = {0.0, 0.0, 0.0};
    cfg.max_iterations = 3;
    const auto run = minimize(bowl, cfg);
    std::ostringstream os;
    run.write_csv(os, {"t_hold", "omega_c_on", "omega_q_on"});
    EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "iteration,t_hold,omega_c_on,omega_q_on,cost");
}
