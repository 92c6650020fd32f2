#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "kspl/error.hpp"
#include "kspl/metrics.hpp"
#include "kspl/splitting.hpp"

using namespace kspl;

namespace {

SemilinearProblem semilinear(int d, double T, PhiFunction phi, NonlinearityFunction f,
                             double a = 0.0, double b = 1.0) {
    HeatProblem base;
    base.d = d;
    base.T = T;
    base.rho = 1.0;
    base.domain = {a, b, d};
    base.phi = std::move(phi);
    return SemilinearProblem{base, std::move(f)};
}

TrainingPlan small_plan(int d, std::vector<int> hidden, long long steps, int batch,
                        double step_size, std::uint64_t seed) {
    TrainingPlan plan;
    std::vector<int> sizes;
    sizes.push_back(d);
    for (int h : hidden) sizes.push_back(h);
    sizes.push_back(1);
    plan.architecture = NetworkArchitecture(sizes);
    plan.batch_size = batch;
    plan.total_steps = steps;
    plan.eval_every = 200;
    plan.optimizer = OptimizerConfig::default_adam(steps, step_size);
    plan.seed = seed;
    return plan;
}

} // namespace

TEST_CASE("frozen target applies the jump U + tau f(U)") {
    // f(u) = u, U_0 = 3, T/N = 0.1: G_0 = 3.3
    auto p = semilinear(2, 1.0, PhiFunction::constant(3.0), NonlinearityFunction::linear(1.0));
    SplittingState state(p, 10);
    const std::vector<double> y = {0.4, 0.4};
    CHECK(state.tau() == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(state.frozen_target(y) == doctest::Approx(3.3).epsilon(1e-15));

    // f = 0 degenerates to U_n itself, bit for bit
    auto p0 = semilinear(2, 1.0, PhiFunction::sqnorm(), NonlinearityFunction::zero());
    SplittingState state0(p0, 4);
    CHECK(state0.frozen_target(y) == state0.value(0, y));
}

TEST_CASE("state guards level access and step count") {
    auto p = semilinear(1, 1.0, PhiFunction::constant(1.0), NonlinearityFunction::zero());
    SplittingState state(p, 2);
    const std::vector<double> y = {0.0};
    CHECK_THROWS_AS(state.value(1, y), ValidationError); // U_1 not built yet
    CHECK_THROWS_AS(SplittingState(p, 0), ValidationError);
}

TEST_CASE("mc splitting reproduces (1 + T/N)^N for f(u)=u, phi=1") {
    auto p = semilinear(3, 1.0, PhiFunction::constant(1.0), NonlinearityFunction::linear(1.0));
    const std::vector<double> x = {0.2, 0.5, 0.8};
    for (int N : {2, 4, 10}) {
        SplittingState state(p, N);
        NestedMcBudget budget;
        budget.top = 5000;
        budget.inner = 1;
        const McEstimate est = splitting_mc_value(state, N, x, budget, 7, 0);
        const double expected = std::pow(1.0 + 1.0 / N, N);
        CHECK(est.value == doctest::Approx(expected).epsilon(1e-11));
        CHECK(est.ci_halfwidth < 1e-8); // all samples identical
    }
    // N = 10 exhibits the splitting error vs e
    SplittingState state(p, 10);
    NestedMcBudget budget;
    budget.top = 1000;
    const McEstimate est = splitting_mc_value(state, 10, x, budget, 7, 0);
    CHECK(std::fabs(est.value - std::exp(1.0)) == doctest::Approx(0.12454).epsilon(1e-3));
}

TEST_CASE("intermediate levels follow (1 + T/N)^{n+1}") {
    auto p = semilinear(1, 1.0, PhiFunction::constant(1.0), NonlinearityFunction::linear(1.0));
    SplittingState state(p, 5);
    NestedMcBudget budget;
    budget.top = 0; // set by split_step_mc
    const std::vector<std::vector<double>> queries = {{0.1}, {0.9}};
    const auto values = split_step_mc(state, 200, queries, budget, 3);
    REQUIRE(values.size() == 2);
    for (const auto& v : values) {
        CHECK(v.value == doctest::Approx(1.2).epsilon(1e-12)); // (1 + 1/5)^1
    }
}

TEST_CASE("mc splitting preserves constants exactly when f = 0") {
    auto p = semilinear(2, 1.0, PhiFunction::constant(5.0), NonlinearityFunction::zero());
    SplittingState state(p, 8);
    NestedMcBudget budget;
    budget.top = 300;
    const std::vector<double> x = {0.5, 0.5};
    for (int level : {1, 4, 8}) {
        const McEstimate est = splitting_mc_value(state, level, x, budget, 11, 0);
        CHECK(est.value == 5.0);
        CHECK(est.ci_halfwidth == 0.0);
    }
}

TEST_CASE("mc splitting is a martingale for linear phi and f = 0") {
    auto p = semilinear(2, 1.0, PhiFunction::linear({1.0, 1.0}), NonlinearityFunction::zero());
    SplittingState state(p, 4);
    NestedMcBudget budget;
    budget.top = 40000;
    const std::vector<double> x = {0.3, 0.4};
    const McEstimate est = splitting_mc_value(state, 4, x, budget, 13, 0);
    CHECK(std::fabs(est.value - 0.7) <= est.ci_halfwidth);
}

TEST_CASE("mc splitting CI shrinks like 1/sqrt(n)") {
    auto p = semilinear(2, 0.5, PhiFunction::sqnorm(), NonlinearityFunction::linear(1.0));
    SplittingState state(p, 4);
    NestedMcBudget small_budget, big_budget;
    small_budget.top = 20000;
    big_budget.top = 80000;
    const std::vector<double> x = {0.0, 0.0};
    const McEstimate small = splitting_mc_value(state, 4, x, small_budget, 17, 0);
    const McEstimate big = splitting_mc_value(state, 4, x, big_budget, 18, 0);
    CHECK(big.ci_halfwidth == doctest::Approx(small.ci_halfwidth / 2.0).epsilon(0.2));
}

TEST_CASE("nested budgets hit the cost guard") {
    auto p = semilinear(1, 1.0, PhiFunction::constant(1.0), NonlinearityFunction::sine());
    SplittingState state(p, 12);
    NestedMcBudget budget;
    budget.top = 100000;
    budget.inner = 8; // 1e5 * 8^11 nodes: far over any cap
    const std::vector<double> x = {0.0};
    CHECK_THROWS_AS(splitting_mc_value(state, 12, x, budget, 1, 0), NumericError);
}

TEST_CASE("mc evaluation is deterministic per query index") {
    auto p = semilinear(2, 0.5, PhiFunction::sqnorm(), NonlinearityFunction::sine());
    SplittingState state(p, 3);
    NestedMcBudget budget;
    budget.top = 500;
    budget.inner = 2;
    const std::vector<double> x = {0.25, 0.75};
    const McEstimate a = splitting_mc_value(state, 3, x, budget, 23, 4);
    const McEstimate b = splitting_mc_value(state, 3, x, budget, 23, 4);
    const McEstimate c = splitting_mc_value(state, 3, x, budget, 23, 5);
    CHECK(a.value == b.value);
    CHECK(a.value != c.value);
}

TEST_CASE("N=1 with f=0 reduces to the linear solver bit for bit") {
    auto p = semilinear(2, 0.8, PhiFunction::sqnorm(), NonlinearityFunction::zero());
    const TrainingPlan plan = small_plan(2, {10, 10}, 250, 32, 1e-3, 12345);

    TrainedSurrogate direct = train(p.base, plan);

    SplittingRunConfig cfg;
    cfg.n_steps = 1;
    cfg.mode = SplitMode::nn;
    cfg.plan.step_plan = plan;
    cfg.plan.inflation = 3.0; // irrelevant for the last step, which trains on [a,b]
    cfg.seed = plan.seed;
    SplittingRun run = solve_splitting(p, cfg);

    REQUIRE(run.state().surrogates().size() == 1);
    CHECK(run.state().surrogates()[0].params.theta == direct.params.theta);
}

TEST_CASE("nn splitting keeps constants within training tolerance") {
    auto p = semilinear(2, 0.6, PhiFunction::constant(2.0), NonlinearityFunction::zero());
    SplittingRunConfig cfg;
    cfg.n_steps = 3;
    cfg.mode = SplitMode::nn;
    cfg.plan.step_plan = small_plan(2, {8, 8}, 1200, 64, 3e-2, 5);
    cfg.plan.warm_start = true;
    cfg.plan.warm_start_steps = 400;
    cfg.seed = 5;
    SplittingRun run = solve_splitting(p, cfg);
    RandomStream eval(200, 1);
    double worst = 0.0;
    for (int i = 0; i < 300; ++i) {
        const auto x = sample_uniform_cube(eval, p.base.domain);
        worst = std::max(worst, std::fabs(run.evaluate(x) - 2.0));
    }
    CHECK(worst < 0.01);
    // warm-started steps use the reduced budget
    CHECK(run.state().surrogates()[0].log.back().step == 1200);
    CHECK(run.state().surrogates()[1].log.back().step == 400);
}

TEST_CASE("training domains shrink toward [a,b] as steps advance") {
    auto p = semilinear(1, 1.0, PhiFunction::sqnorm(), NonlinearityFunction::zero());
    SplittingState state(p, 4);
    const double sigma = state.sigma();
    const CubeDomain first = state.next_training_domain(3.0);
    CHECK(first.a == doctest::Approx(0.0 - 3.0 * sigma * std::sqrt(3.0)));
    CHECK(first.b == doctest::Approx(1.0 + 3.0 * sigma * std::sqrt(3.0)));
    // a state at the final step trains on the base cube itself
    SplittingState last(p, 1);
    const CubeDomain dom = last.next_training_domain(3.0);
    CHECK(dom.a == 0.0);
    CHECK(dom.b == 1.0);
}

TEST_CASE("provenance records the run shape") {
    auto p = semilinear(1, 1.0, PhiFunction::constant(1.0), NonlinearityFunction::linear(1.0));
    SplittingRunConfig cfg;
    cfg.n_steps = 6;
    cfg.mode = SplitMode::mc;
    cfg.mc.top = 100;
    cfg.seed = 9;
    SplittingRun run = solve_splitting(p, cfg);
    const auto j = run.provenance();
    CHECK(j.at("N").get<int>() == 6);
    CHECK(j.at("mode").get<std::string>() == "mc");
    CHECK(j.at("sigma").get<double>() == doctest::Approx(std::sqrt(2.0 / 6.0)));
}
