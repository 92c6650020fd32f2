#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>

#include "kspl/problem.hpp"
#include "kspl/random_stream.hpp"

namespace kspl {

struct McEstimate {
    double value = 0.0;
    double ci_halfwidth = 0.0; // 95% half-width
    long long n = 0;
};

/// An exact solution u(t,x) for a catalog problem, carrying enough context
/// (rho, f) to self-test the defining PDE by finite differences.
class ClosedFormSolution {
public:
    ClosedFormSolution(std::function<double(double, std::span<const double>)> u, double rho,
                       NonlinearityFunction f, std::string fingerprint, std::string note);

    double operator()(double t, std::span<const double> x) const { return u_(t, x); }
    const std::string& fingerprint() const { return fingerprint_; }
    const std::string& note() const { return note_; }

    /// Max |du/dt - rho*Lap(u) - f(u)| over random probes (t,x) with t in
    /// (0,T] and x in the cube; central differences, h_t=1e-5, h_x=1e-3.
    double max_pde_residual(double T, const CubeDomain& domain, int n_probes,
                            RandomStream stream) const;

private:
    std::function<double(double, std::span<const double>)> u_;
    double rho_;
    NonlinearityFunction f_;
    std::string fingerprint_;
    std::string note_;
};

/// Closed-form solutions per catalog entry:
///   constant c        -> u = c
///   linear <c,x>      -> u = <c,x>
///   sqnorm |x|^2      -> u = |x|^2 + 2 rho t d
///   exp_inner         -> u = exp(<c,x> + rho t |c|^2)
/// Returns nullopt for anything else.
std::optional<ClosedFormSolution> closed_form(const HeatProblem& problem);

/// Semilinear composition: for f = 0 the linear solution; for f(u) =
/// lambda*u the factor exp(lambda t) times the linear solution. Other f
/// have no closed form here.
std::optional<ClosedFormSolution> closed_form(const SemilinearProblem& problem);

/// Plain Feynman-Kac Monte Carlo: mean of phi(x + sqrt(2 rho t) W) with a
/// 95% normal CI. Draw k is addressed at stream counter k*d, so the result
/// is independent of worker count.
McEstimate fk_mc(const HeatProblem& problem, double t, std::span<const double> x,
                 long long n_samples, const RandomStream& stream);

struct PicardConfig {
    int picard_iterations = 3; // K
    int quad_nodes = 8;        // M, midpoint rule on [0,t]
    int inner_samples = 2;     // MC samples per quadrature node
    int phi_samples = 32;      // MC samples for the heat-semigroup term
    int replicates = 16;       // independent replicates, basis of the bootstrap CI
    long long eval_cap = 100000000; // refuse budgets above this many phi/f evaluations

    void validate() const;
    /// Total phi/f evaluations the configuration will consume.
    double estimated_evals(bool f_is_zero) const;
};

/// Picard iteration of the semilinear fixed point
///   u(t,x) = E[phi(x + sqrt(2t) W)] + int_0^t E[f(u(s, x + sqrt(2(t-s)) W))] ds
/// with u_0 the heat-semigroup term, midpoint time quadrature, and fresh
/// inner Monte Carlo per node (nothing memoized across iterates). The
/// estimate averages independent replicates; the CI is a bootstrap
/// percentile interval over the replicate values. Replicate r draws from
/// stream_id + r; the bootstrap uses stream_id + replicates.
McEstimate picard_mc(const SemilinearProblem& problem, double t, std::span<const double> x,
                     const PicardConfig& config, const RandomStream& stream);

} // namespace kspl
