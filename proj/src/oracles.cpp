#include "kspl/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "kspl/csv.hpp"
#include "kspl/error.hpp"
#include "kspl/parallel.hpp"

namespace kspl {

namespace {

std::string point_string(std::span<const double> x) {
    std::string s = "(";
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (i > 0) s += ',';
        s += format_double(x[i]);
    }
    s += ')';
    return s;
}

McEstimate mean_and_ci(double sum, double sum_sq, long long n) {
    McEstimate est;
    est.n = n;
    est.value = sum / static_cast<double>(n);
    if (n > 1) {
        const double var =
            std::max(0.0, (sum_sq - static_cast<double>(n) * est.value * est.value) /
                              static_cast<double>(n - 1));
        est.ci_halfwidth = 1.959963984540054 * std::sqrt(var / static_cast<double>(n));
    }
    return est;
}

} // namespace

ClosedFormSolution::ClosedFormSolution(std::function<double(double, std::span<const double>)> u,
                                       double rho, NonlinearityFunction f, std::string fingerprint,
                                       std::string note)
    : u_(std::move(u)), rho_(rho), f_(std::move(f)), fingerprint_(std::move(fingerprint)),
      note_(std::move(note)) {}

double ClosedFormSolution::max_pde_residual(double T, const CubeDomain& domain, int n_probes,
                                            RandomStream stream) const {
    const double ht = 1e-5;
    const double hx = 1e-3;
    double worst = 0.0;
    std::vector<double> x(static_cast<std::size_t>(domain.d));
    for (int probe = 0; probe < n_probes; ++probe) {
        const double t = T * stream.next_double();
        sample_uniform_cube(stream, domain, x);
        const double u0 = u_(t, x);
        const double dudt = (u_(t + ht, x) - u_(t - ht, x)) / (2.0 * ht);
        double lap = 0.0;
        for (int i = 0; i < domain.d; ++i) {
            const double xi = x[static_cast<std::size_t>(i)];
            x[static_cast<std::size_t>(i)] = xi + hx;
            const double up = u_(t, x);
            x[static_cast<std::size_t>(i)] = xi - hx;
            const double um = u_(t, x);
            x[static_cast<std::size_t>(i)] = xi;
            lap += (up - 2.0 * u0 + um) / (hx * hx);
        }
        worst = std::max(worst, std::fabs(dudt - rho_ * lap - f_(u0)));
    }
    return worst;
}

std::optional<ClosedFormSolution> closed_form(const HeatProblem& problem) {
    problem.validate();
    const double rho = problem.rho;
    const int d = problem.d;
    const auto& phi = problem.phi;
    switch (phi.kind()) {
        case PhiFunction::Kind::constant: {
            const double c = phi.constant_value();
            return ClosedFormSolution([c](double, std::span<const double>) { return c; }, rho,
                                      NonlinearityFunction::zero(), problem.fingerprint(),
                                      "constant initial condition: u(t,x) = c");
        }
        case PhiFunction::Kind::linear: {
            const std::vector<double> c = phi.coeffs();
            return ClosedFormSolution(
                [c](double, std::span<const double> x) {
                    double acc = 0.0;
                    for (std::size_t i = 0; i < c.size(); ++i) acc += c[i] * x[i];
                    return acc;
                },
                rho, NonlinearityFunction::zero(), problem.fingerprint(),
                "linear initial condition: u(t,x) = <c,x> (heat flow preserves affine maps)");
        }
        case PhiFunction::Kind::sqnorm: {
            return ClosedFormSolution(
                [rho, d](double t, std::span<const double> x) {
                    double acc = 2.0 * rho * t * d;
                    for (double xi : x) acc += xi * xi;
                    return acc;
                },
                rho, NonlinearityFunction::zero(), problem.fingerprint(),
                "squared norm: u(t,x) = |x|^2 + 2 rho t d");
        }
        case PhiFunction::Kind::exp_inner: {
            const std::vector<double> c = phi.coeffs();
            double c2 = 0.0;
            for (double ci : c) c2 += ci * ci;
            return ClosedFormSolution(
                [c, c2, rho](double t, std::span<const double> x) {
                    double acc = rho * t * c2;
                    for (std::size_t i = 0; i < c.size(); ++i) acc += c[i] * x[i];
                    return std::exp(acc);
                },
                rho, NonlinearityFunction::zero(), problem.fingerprint(),
                "exponential: u(t,x) = exp(<c,x> + rho t |c|^2) (Gaussian mgf)");
        }
        case PhiFunction::Kind::expr: return std::nullopt;
    }
    return std::nullopt;
}

std::optional<ClosedFormSolution> closed_form(const SemilinearProblem& problem) {
    problem.validate();
    auto base = closed_form(problem.base);
    if (!base) return std::nullopt;
    if (problem.f.is_zero()) return base;
    if (!problem.f.is_linear()) return std::nullopt;
    const double lambda = problem.f.linear_rate();
    auto base_fn = *base;
    return ClosedFormSolution(
        [base_fn, lambda](double t, std::span<const double> x) {
            return std::exp(lambda * t) * base_fn(t, x);
        },
        problem.base.rho, problem.f, problem.fingerprint(),
        "linear nonlinearity: u(t,x) = exp(lambda t) * (heat solution), " + base->note());
}

McEstimate fk_mc(const HeatProblem& problem, double t, std::span<const double> x,
                 long long n_samples, const RandomStream& stream) {
    problem.validate();
    if (n_samples < 2) throw ValidationError("fk_mc requires n_samples >= 2");
    if (static_cast<int>(x.size()) != problem.d) throw ValidationError("fk_mc: point dimension mismatch");
    if (t < 0.0) throw ValidationError("fk_mc: t must be >= 0");
    const double scale = std::sqrt(2.0 * problem.rho * t);
    const int d = problem.d;
    const auto n = static_cast<std::size_t>(n_samples);

    struct Part {
        double sum = 0.0, sum_sq = 0.0;
    };
    std::vector<Part> parts(std::min<std::size_t>(kMcChunks, n));
    parallel_for_chunks(n, parts.size(), [&](std::size_t c, std::size_t lo, std::size_t hi) {
        auto& part = parts[c];
        std::vector<double> y(static_cast<std::size_t>(d));
        RandomStream rs = stream.at(lo * static_cast<std::size_t>(d));
        for (std::size_t k = lo; k < hi; ++k) {
            for (int i = 0; i < d; ++i) {
                y[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)] + scale * rs.next_normal();
            }
            const double v = problem.phi(y);
            if (!std::isfinite(v)) {
                throw NumericError("fk_mc: phi returned a non-finite value at " + point_string(y));
            }
            part.sum += v;
            part.sum_sq += v * v;
        }
    });
    Part total = merge_pairwise(parts, [](Part& a, Part& b) {
        a.sum += b.sum;
        a.sum_sq += b.sum_sq;
    });
    return mean_and_ci(total.sum, total.sum_sq, n_samples);
}

void PicardConfig::validate() const {
    if (picard_iterations < 1) throw ValidationError("picard_iterations must be >= 1");
    if (quad_nodes < 1) throw ValidationError("quad_nodes must be >= 1");
    if (inner_samples < 1) throw ValidationError("inner_samples must be >= 1");
    if (phi_samples < 1) throw ValidationError("phi_samples must be >= 1");
    if (replicates < 2) throw ValidationError("replicates must be >= 2");
    if (eval_cap < 1) throw ValidationError("eval_cap must be >= 1");
}

double PicardConfig::estimated_evals(bool f_is_zero) const {
    if (f_is_zero) return static_cast<double>(phi_samples) * replicates;
    // E_k = phi_samples + M*inner*(1 + E_{k-1}), E_0 = phi_samples
    double e = phi_samples;
    const double fan = static_cast<double>(quad_nodes) * inner_samples;
    for (int k = 1; k <= picard_iterations; ++k) e = phi_samples + fan * (1.0 + e);
    return e * replicates;
}

namespace {

struct PicardCtx {
    const SemilinearProblem& problem;
    const PicardConfig& cfg;
};

// phi term: mean over phi_samples of phi(x + sqrt(2t) W)
double picard_phi_term(const PicardCtx& ctx, double t, std::span<const double> x,
                       RandomStream& rs) {
    const double scale = std::sqrt(2.0 * t);
    const int d = ctx.problem.base.d;
    std::vector<double> y(static_cast<std::size_t>(d));
    double acc = 0.0;
    for (int s = 0; s < ctx.cfg.phi_samples; ++s) {
        for (int i = 0; i < d; ++i) {
            y[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)] + scale * rs.next_normal();
        }
        const double v = ctx.problem.base.phi(y);
        if (!std::isfinite(v)) {
            throw NumericError("picard_mc: phi returned a non-finite value at " + point_string(y));
        }
        acc += v;
    }
    return acc / ctx.cfg.phi_samples;
}

double picard_iterate(const PicardCtx& ctx, int k, double t, std::span<const double> x,
                      RandomStream& rs) {
    double value = picard_phi_term(ctx, t, x, rs);
    if (k == 0 || ctx.problem.f.is_zero()) return value;
    const int M = ctx.cfg.quad_nodes;
    const int d = ctx.problem.base.d;
    std::vector<double> y(static_cast<std::size_t>(d));
    double integral = 0.0;
    for (int j = 0; j < M; ++j) {
        const double s = (j + 0.5) * t / M;
        const double scale = std::sqrt(2.0 * (t - s));
        double node = 0.0;
        for (int i = 0; i < ctx.cfg.inner_samples; ++i) {
            for (int c = 0; c < d; ++c) {
                y[static_cast<std::size_t>(c)] = x[static_cast<std::size_t>(c)] + scale * rs.next_normal();
            }
            node += ctx.problem.f(picard_iterate(ctx, k - 1, s, y, rs));
        }
        integral += node / ctx.cfg.inner_samples;
    }
    return value + integral * t / M;
}

} // namespace

McEstimate picard_mc(const SemilinearProblem& problem, double t, std::span<const double> x,
                     const PicardConfig& config, const RandomStream& stream) {
    problem.validate();
    config.validate();
    if (static_cast<int>(x.size()) != problem.base.d) {
        throw ValidationError("picard_mc: point dimension mismatch");
    }
    if (t < 0.0) throw ValidationError("picard_mc: t must be >= 0");
    const double evals = config.estimated_evals(problem.f.is_zero());
    if (evals > static_cast<double>(config.eval_cap)) {
        throw NumericError("picard_mc budget of about " + format_double(evals) +
                           " evaluations exceeds the cap of " + std::to_string(config.eval_cap));
    }

    const int R = config.replicates;
    std::vector<double> replicate_values(static_cast<std::size_t>(R));
    PicardCtx ctx{problem, config};
    parallel_for_chunks(static_cast<std::size_t>(R), std::min<std::size_t>(kMcChunks, static_cast<std::size_t>(R)),
                        [&](std::size_t, std::size_t lo, std::size_t hi) {
                            for (std::size_t r = lo; r < hi; ++r) {
                                RandomStream rs(stream.seed(), stream.stream_id() + r);
                                replicate_values[r] =
                                    picard_iterate(ctx, config.picard_iterations, t, x, rs);
                            }
                        });

    double sum = 0.0;
    for (double v : replicate_values) sum += v;
    McEstimate est;
    est.n = R;
    est.value = sum / R;

    // Bootstrap percentile interval over the replicate values.
    const int B = 1000;
    RandomStream boot(stream.seed(), stream.stream_id() + static_cast<std::uint64_t>(R));
    std::vector<double> boot_means(B);
    for (int b = 0; b < B; ++b) {
        double acc = 0.0;
        for (int r = 0; r < R; ++r) {
            const auto idx = static_cast<std::size_t>(boot.next_double() * R);
            acc += replicate_values[std::min(idx, static_cast<std::size_t>(R - 1))];
        }
        boot_means[static_cast<std::size_t>(b)] = acc / R;
    }
    std::sort(boot_means.begin(), boot_means.end());
    const double lo = boot_means[static_cast<std::size_t>(0.025 * (B - 1))];
    const double hi = boot_means[static_cast<std::size_t>(0.975 * (B - 1))];
    est.ci_halfwidth = (hi - lo) / 2.0;
    return est;
}

} // namespace kspl
