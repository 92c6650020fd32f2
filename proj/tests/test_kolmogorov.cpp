#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "kspl/error.hpp"
#include "kspl/kolmogorov.hpp"
#include "kspl/metrics.hpp"
#include "kspl/parallel.hpp"

using namespace kspl;

namespace {

HeatProblem heat(int d, double T, double rho, PhiFunction phi, double a = 0.0, double b = 1.0) {
    HeatProblem p;
    p.d = d;
    p.T = T;
    p.rho = rho;
    p.domain = {a, b, d};
    p.phi = std::move(phi);
    return p;
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

TEST_CASE("regression target combines xi and W as phi(varrho W + xi)") {
    // phi = sum(x), d=1, rho=1, T=0.5: varrho = 1, y = 0.3 + 1.0
    auto p = heat(1, 0.5, 1.0, PhiFunction::linear({1.0}));
    CHECK(p.varrho() == doctest::Approx(1.0).epsilon(1e-15));
    const double xi = 0.3, w = 1.0;
    CHECK(regression_target(p, {&xi, 1}, {&w, 1}) == doctest::Approx(1.3).epsilon(1e-15));
}

TEST_CASE("regression target limits") {
    // T -> 0: y -> phi(xi)
    auto p = heat(2, 1e-12, 1.0, PhiFunction::sqnorm());
    const std::vector<double> xi = {0.5, 0.5}, w = {10.0, -10.0};
    CHECK(regression_target(p, xi, w) == doctest::Approx(0.5).epsilon(1e-4));

    // constant phi: y = c for every draw
    auto pc = heat(3, 1.0, 1.0, PhiFunction::constant(4.2));
    RandomStream a(1, 1), b(1, 2);
    for (int i = 0; i < 10; ++i) {
        const RegressionSample s = make_regression_sample(pc, a, b);
        CHECK(s.y == 4.2);
        for (double v : s.x) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("regression target aborts on non-finite phi") {
    // exp overflows for huge arguments
    auto p = heat(1, 1.0, 1.0, PhiFunction::exp_inner({1000.0}));
    const double xi = 0.5, w = 40.0;
    CHECK_THROWS_AS(regression_target(p, {&xi, 1}, {&w, 1}), NumericError);
}

TEST_CASE("training fits a constant initial condition") {
    auto p = heat(2, 1.0, 1.0, PhiFunction::constant(5.0));
    TrainedSurrogate s = train(p, small_plan(2, {8, 8}, 1200, 64, 3e-2, 42));
    const Realization net = s.realize();
    RandomStream eval(100, 1);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const auto x = sample_uniform_cube(eval, p.domain);
        worst = std::max(worst, std::fabs(net(x) - 5.0));
    }
    CHECK(worst < 0.01);
}

TEST_CASE("training fits the linear problem to under 1% relative error") {
    // E[phi(varrho W + xi) | xi] = sum(xi): the exact solution is linear
    auto p = heat(5, 0.7, 1.0, PhiFunction::linear({1, 1, 1, 1, 1}));
    TrainedSurrogate s = train(p, small_plan(5, {16, 16}, 4000, 128, 1e-2, 7));
    const Realization net = s.realize();
    const auto net_fn = [net](std::span<const double> x) { return net(x); };
    const auto exact_fn = [](std::span<const double> x) {
        double acc = 0;
        for (double v : x) acc += v;
        return acc;
    };
    const auto zero_fn = [](std::span<const double>) { return 0.0; };
    const ErrorReport err = l2_error(net_fn, exact_fn, p.domain, 50000, RandomStream(8, 1));
    const ErrorReport norm = l2_error(exact_fn, zero_fn, p.domain, 50000, RandomStream(8, 1));
    CHECK(err.l2_error / norm.l2_error < 0.01);
}

TEST_CASE("training recovers |x|^2 + 2 rho T d at a point") {
    auto p = heat(3, 0.5, 1.0, PhiFunction::sqnorm());
    TrainedSurrogate s = train(p, small_plan(3, {24, 24}, 4000, 128, 1e-2, 11));
    const Realization net = s.realize();
    const std::vector<double> probe = {0.5, 0.5, 0.5};
    // u(T, probe) = 0.75 + 3
    CHECK(net(probe) == doctest::Approx(3.75).epsilon(0.02));
}

TEST_CASE("training is deterministic and thread-count invariant") {
    auto p = heat(2, 1.0, 1.0, PhiFunction::sqnorm());
    const TrainingPlan plan = small_plan(2, {8, 8}, 150, 32, 1e-3, 99);
    const int saved = max_threads();
    set_max_threads(1);
    TrainedSurrogate a = train(p, plan);
    set_max_threads(4);
    TrainedSurrogate b = train(p, plan);
    set_max_threads(saved);
    TrainedSurrogate c = train(p, plan);
    CHECK(a.params.theta == b.params.theta);
    CHECK(a.params.theta == c.params.theta);
    CHECK(a.log.size() == b.log.size());
    for (std::size_t i = 0; i < a.log.size(); ++i) {
        CHECK(a.log[i].loss_estimate == b.log[i].loss_estimate);
    }
}

TEST_CASE("divergence guard aborts a blown-up run") {
    auto p = heat(2, 1.0, 1.0, PhiFunction::sqnorm());
    TrainingPlan plan = small_plan(2, {8, 8}, 5000, 16, 1e-3, 5);
    plan.optimizer = OptimizerConfig::plain_sgd(15.0); // far above any stable step size
    CHECK_THROWS_AS(train(p, plan), NumericError);
}

TEST_CASE("plan validation") {
    auto p = heat(3, 1.0, 1.0, PhiFunction::sqnorm());
    TrainingPlan plan = small_plan(2, {8}, 100, 16, 1e-3, 1); // wrong input dim
    CHECK_THROWS_AS(train(p, plan), ValidationError);
    TrainingPlan bad = small_plan(3, {8}, 100, 1, 1e-3, 1);
    bad.batch_size = 0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("loss_of is exact for the constant problem") {
    auto p = heat(4, 1.0, 1.0, PhiFunction::constant(3.0));
    const auto exact = [](std::span<const double>) { return 3.0; };
    const McEstimate est = loss_of(exact, p, 1000, RandomStream(3, 1));
    CHECK(est.value == 0.0);
    CHECK(est.ci_halfwidth == 0.0);
}

TEST_CASE("loss_of satisfies the conditional-expectation orthogonality") {
    // loss(v) - loss(U) = E|U - v|^2 when U is the conditional mean;
    // checked with common random numbers on phi = |x|^2.
    auto p = heat(3, 0.5, 1.0, PhiFunction::sqnorm());
    const double shift = 2.0 * 0.5 * 3.0; // 2 rho T d
    const auto exact = [shift](std::span<const double> x) {
        double acc = shift;
        for (double v : x) acc += v * v;
        return acc;
    };
    const auto off = [&exact](std::span<const double> x) { return exact(x) + 0.1; };
    const RandomStream stream(17, 4);
    const McEstimate lu = loss_of(exact, p, 200000, stream);
    const McEstimate lv = loss_of(off, p, 200000, stream);
    // the gap must equal E|U - v|^2 = 0.01 within combined CIs
    CHECK(std::fabs((lv.value - lu.value) - 0.01) <= lu.ci_halfwidth + lv.ci_halfwidth);
    // and the optimality gap is nonnegative up to CI
    CHECK(lv.value - lu.value >= -(lu.ci_halfwidth + lv.ci_halfwidth));
}

TEST_CASE("loss_of CI shrinks like 1/sqrt(n)") {
    auto p = heat(2, 1.0, 1.0, PhiFunction::sqnorm());
    const auto zero_candidate = [](std::span<const double>) { return 0.0; };
    const McEstimate small = loss_of(zero_candidate, p, 25000, RandomStream(21, 1));
    const McEstimate big = loss_of(zero_candidate, p, 100000, RandomStream(21, 2));
    CHECK(big.ci_halfwidth == doctest::Approx(small.ci_halfwidth / 2.0).epsilon(0.2));
}

TEST_CASE("fresh batches: the training log records decreasing loss") {
    auto p = heat(2, 1.0, 1.0, PhiFunction::sqnorm());
    TrainedSurrogate s = train(p, small_plan(2, {12, 12}, 2000, 64, 1e-2, 31));
    REQUIRE(s.log.size() >= 4);
    CHECK(s.log.back().loss_estimate < s.log.front().loss_estimate);
    CHECK(s.log.back().step == 2000);
}
