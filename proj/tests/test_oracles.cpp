#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "kspl/error.hpp"
#include "kspl/oracles.hpp"
#include "kspl/parallel.hpp"
#include "kspl/problem.hpp"

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

} // namespace

TEST_CASE("closed forms at hand-checked points") {
    // |x|^2: u(t,0) = 2 rho t d
    auto sq = closed_form(heat(10, 0.5, 1.0, PhiFunction::sqnorm()));
    REQUIRE(sq.has_value());
    const std::vector<double> zero10(10, 0.0);
    CHECK((*sq)(0.5, zero10) == doctest::Approx(10.0).epsilon(1e-14));

    // <1,x> is invariant under the heat flow
    auto lin = closed_form(heat(3, 2.0, 0.7, PhiFunction::linear({1, 1, 1})));
    REQUIRE(lin.has_value());
    const std::vector<double> x = {0.2, -1.5, 4.0};
    CHECK((*lin)(2.0, x) == doctest::Approx(2.7).epsilon(1e-14));

    // exp(x_1): u(1, 0) = e^{rho t |c|^2} = e
    auto ex = closed_form(heat(3, 1.0, 1.0, PhiFunction::exp_inner({1, 0, 0})));
    REQUIRE(ex.has_value());
    const std::vector<double> zero3(3, 0.0);
    CHECK((*ex)(1.0, zero3) == doctest::Approx(std::exp(1.0)).epsilon(1e-14));

    // expression phi has no closed form
    auto e = closed_form(heat(2, 1.0, 1.0,
                              PhiFunction::expression(Expr::max_of({Expr::coord(0), Expr::coord(1)}))));
    CHECK(!e.has_value());
}

TEST_CASE("semilinear closed form composes exp(lambda t)") {
    SemilinearProblem sp{heat(5, 0.5, 1.0, PhiFunction::sqnorm()), NonlinearityFunction::linear(1.0)};
    auto cf = closed_form(sp);
    REQUIRE(cf.has_value());
    const std::vector<double> zero(5, 0.0);
    // e^{0.5} * (0 + 2*0.5*5) = 8.2436...
    CHECK((*cf)(0.5, zero) == doctest::Approx(std::exp(0.5) * 5.0).epsilon(1e-13));

    SemilinearProblem sine{heat(2, 0.5, 1.0, PhiFunction::sqnorm()), NonlinearityFunction::sine()};
    CHECK(!closed_form(sine).has_value());
}

TEST_CASE("closed forms satisfy the PDE to finite-difference residual 1e-6") {
    const CubeDomain dom{0.0, 1.0, 5};
    const std::vector<std::pair<std::string, PhiFunction>> catalog = {
        {"constant", PhiFunction::constant(3.0)},
        {"linear", PhiFunction::linear({1, -2, 0.5, 1, 1})},
        {"sqnorm", PhiFunction::sqnorm()},
        {"exp_inner", PhiFunction::exp_inner({0.2, 0.2, 0.2, 0.2, 0.2})},
    };
    int probe_seed = 0;
    for (const auto& [name, phi] : catalog) {
        auto cf = closed_form(heat(5, 1.0, 1.0, phi));
        REQUIRE(cf.has_value());
        const double res = cf->max_pde_residual(1.0, dom, 100, RandomStream(400 + probe_seed++, 0));
        INFO(name);
        CHECK(res <= 1e-6);
    }
    // semilinear f = lambda u composition
    SemilinearProblem sp{heat(3, 1.0, 1.0, PhiFunction::sqnorm()), NonlinearityFunction::linear(0.8)};
    auto cf = closed_form(sp);
    CHECK(cf->max_pde_residual(1.0, {0.0, 1.0, 3}, 100, RandomStream(999, 0)) <= 1e-6);
}

TEST_CASE("fk_mc on a constant returns the constant exactly") {
    auto p = heat(4, 1.0, 1.0, PhiFunction::constant(2.5));
    const std::vector<double> x(4, 0.3);
    const McEstimate est = fk_mc(p, 1.0, x, 1000, RandomStream(1, 1));
    CHECK(est.value == 2.5);
    CHECK(est.ci_halfwidth == 0.0);
}

TEST_CASE("fk_mc recovers |x|^2 + 2 rho t d within CI") {
    auto p = heat(10, 0.5, 1.0, PhiFunction::sqnorm());
    const std::vector<double> zero(10, 0.0);
    const McEstimate est = fk_mc(p, 0.5, zero, 100000, RandomStream(2, 1));
    CHECK(est.ci_halfwidth < 0.06);
    CHECK(std::fabs(est.value - 10.0) <= est.ci_halfwidth);
}

TEST_CASE("fk_mc CI shrinks like 1/sqrt(n)") {
    auto p = heat(3, 1.0, 1.0, PhiFunction::sqnorm());
    const std::vector<double> x(3, 0.5);
    const McEstimate small = fk_mc(p, 1.0, x, 50000, RandomStream(3, 1));
    const McEstimate big = fk_mc(p, 1.0, x, 200000, RandomStream(3, 2));
    // quadrupling n halves the CI within 20%
    CHECK(big.ci_halfwidth == doctest::Approx(small.ci_halfwidth / 2.0).epsilon(0.2));
}

TEST_CASE("fk_mc is invariant under the thread count") {
    auto p = heat(5, 1.0, 1.0, PhiFunction::exp_inner({0.3, 0.3, 0.3, 0.3, 0.3}));
    const std::vector<double> x(5, 0.25);
    const int saved = max_threads();
    set_max_threads(1);
    const McEstimate a = fk_mc(p, 1.0, x, 40000, RandomStream(4, 1));
    set_max_threads(4);
    const McEstimate b = fk_mc(p, 1.0, x, 40000, RandomStream(4, 1));
    set_max_threads(saved);
    CHECK(a.value == b.value);
    CHECK(a.ci_halfwidth == b.ci_halfwidth);
}

TEST_CASE("picard with f = 0 equals plain Feynman-Kac within combined CIs") {
    auto p = heat(2, 1.0, 1.0, PhiFunction::sqnorm());
    SemilinearProblem sp{p, NonlinearityFunction::zero()};
    PicardConfig cfg;
    cfg.phi_samples = 2000;
    cfg.replicates = 16;
    const std::vector<double> x = {0.5, 0.5};
    const McEstimate pic = picard_mc(sp, 1.0, x, cfg, RandomStream(5, 100));
    const McEstimate fk = fk_mc(p, 1.0, x, 100000, RandomStream(5, 200));
    CHECK(std::fabs(pic.value - fk.value) <= pic.ci_halfwidth + fk.ci_halfwidth);
}

TEST_CASE("picard iterates of f(u) = u truncate the exponential series") {
    // phi = 1 makes every integrand spatially constant, so the value is
    // deterministic: the degree-K Taylor sum perturbed only by the O(M^-2)
    // midpoint-quadrature bias. Expectations frozen from an exact
    // rational-arithmetic evaluation of the same recursion.
    SemilinearProblem sp{heat(1, 1.0, 1.0, PhiFunction::constant(1.0)),
                         NonlinearityFunction::linear(1.0)};
    PicardConfig cfg;
    cfg.quad_nodes = 8;
    cfg.inner_samples = 1;
    cfg.phi_samples = 1;
    cfg.replicates = 2;
    cfg.eval_cap = 200000000;
    const std::vector<double> x0 = {0.0};

    const double frozen_k[8] = {2.0, 2.5, 2.666015625000, 2.707195281982,
                                2.715324267920, 2.716652782078, 2.716837427490, 2.716859678131};
    double prev_err = 1e9;
    for (int K = 1; K <= 8; ++K) {
        cfg.picard_iterations = K;
        const McEstimate est = picard_mc(sp, 1.0, x0, cfg, RandomStream(6, 10 * K));
        CHECK(est.value == doctest::Approx(frozen_k[K - 1]).epsilon(1e-9));
        CHECK(est.ci_halfwidth == 0.0); // zero variance
        const double err = std::fabs(est.value - std::exp(1.0));
        CHECK(err < prev_err); // monotone convergence through K = 8
        prev_err = err;
    }

    // finer quadrature at K = 6 moves the value toward the series sum
    cfg.picard_iterations = 6;
    cfg.quad_nodes = 16;
    const McEstimate fine = picard_mc(sp, 1.0, x0, cfg, RandomStream(6, 999));
    CHECK(fine.value == doctest::Approx(2.717704075522096).epsilon(1e-9));
}

TEST_CASE("picard composition for f(u)=u, phi=x1^2 at d=1") {
    SemilinearProblem sp{heat(1, 0.5, 1.0, PhiFunction::sqnorm()),
                         NonlinearityFunction::linear(1.0)};
    PicardConfig cfg;
    cfg.picard_iterations = 3;
    cfg.quad_nodes = 6;
    cfg.inner_samples = 2;
    cfg.phi_samples = 64;
    cfg.replicates = 24;
    const std::vector<double> x0 = {0.0};
    const McEstimate est = picard_mc(sp, 0.5, x0, cfg, RandomStream(7, 0));
    // e^{0.5} * (0 + 2*0.5*1) = 1.6487...
    const double exact = std::exp(0.5);
    CHECK(std::fabs(est.value - exact) <= est.ci_halfwidth + 0.01);
}

TEST_CASE("picard refuses budgets over the evaluation cap") {
    SemilinearProblem sp{heat(1, 1.0, 1.0, PhiFunction::constant(1.0)),
                         NonlinearityFunction::linear(1.0)};
    PicardConfig cfg;
    cfg.picard_iterations = 8;
    cfg.quad_nodes = 64;
    cfg.inner_samples = 8;
    cfg.phi_samples = 64;
    cfg.eval_cap = 100000000;
    const std::vector<double> x0 = {0.0};
    CHECK_THROWS_AS(picard_mc(sp, 1.0, x0, cfg, RandomStream(8, 0)), NumericError);
}

TEST_CASE("oracle triangle on the linear catalog") {
    for (int d : {1, 5}) {
        const std::vector<PhiFunction> phis = {
            PhiFunction::constant(2.5),
            PhiFunction::linear(std::vector<double>(static_cast<std::size_t>(d), 1.0)),
            PhiFunction::sqnorm(),
            PhiFunction::exp_inner(std::vector<double>(static_cast<std::size_t>(d), 0.25)),
        };
        int id = 0;
        for (const auto& phi : phis) {
            auto p = heat(d, 1.0, 1.0, phi);
            const std::vector<double> x(static_cast<std::size_t>(d), 0.5);
            auto cf = closed_form(p);
            REQUIRE(cf.has_value());
            const double exact = (*cf)(1.0, x);
            const McEstimate fk = fk_mc(p, 1.0, x, 200000, RandomStream(9, 10 + id));
            SemilinearProblem sp{p, NonlinearityFunction::zero()};
            PicardConfig cfg;
            cfg.phi_samples = 4000;
            cfg.replicates = 32;
            const McEstimate pic = picard_mc(sp, 1.0, x, cfg, RandomStream(9, 1000 + 100 * id));
            INFO("d=" << d << " phi=" << phi.name());
            CHECK(std::fabs(fk.value - exact) <= fk.ci_halfwidth);
            CHECK(std::fabs(pic.value - exact) <= pic.ci_halfwidth);
            CHECK(std::fabs(fk.value - pic.value) <= fk.ci_halfwidth + pic.ci_halfwidth);
            ++id;
        }
    }
}

TEST_CASE("nonlinearity catalog values") {
    CHECK(NonlinearityFunction::zero()(3.2) == 0.0);
    CHECK(NonlinearityFunction::linear(2.0)(3.0) == 6.0);
    CHECK(NonlinearityFunction::sine()(0.0) == 0.0);
    const auto cubic = NonlinearityFunction::cubic_clipped(1.5);
    CHECK(cubic(0.5) == doctest::Approx(0.5 - 0.125));
    CHECK(cubic(10.0) == doctest::Approx(1.5 - 3.375)); // clipped at the bound
    CHECK(cubic.lipschitz() == doctest::Approx(5.75));
}
