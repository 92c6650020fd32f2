#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "kspl/oracles.hpp"
#include "kspl/problem.hpp"
#include "kspl/splitting.hpp"

namespace kspl {

using ScalarField = std::function<double(std::span<const double>)>;

struct ErrorReport {
    double l2_error = 0.0;      // root mean squared gap over the cube
    double ci_halfwidth = 0.0;  // delta-method CI on the RMS value
    long long n_eval_points = 0;
    CubeDomain domain;
};

/// Monte Carlo estimate of [ (1/|D|) int_D |approx - exact|^2 ]^{1/2} via
/// uniform samples on the cube, CI propagated from the squared error by
/// the delta method. Point k draws at stream counter k*d.
ErrorReport l2_error(const ScalarField& approx, const ScalarField& exact, const CubeDomain& domain,
                     long long n_points, const RandomStream& stream);

struct RatePoint {
    int n_subintervals = 0;
    double error = 0.0;
    double ci = 0.0;
    double envelope_ratio = 0.0; // error * sqrt(N) / C, C fitted at the smallest N
};

struct RateFit {
    std::vector<RatePoint> points;
    double slope = 0.0;              // least-squares slope of log error vs log N
    double envelope_constant = 0.0;  // C = error(N_min) * sqrt(N_min)
    bool errors_all_positive = true;
    bool errors_monotone = true;     // non-increasing in N (flagged, not enforced)
};

/// Envelope fit over measured (N, error) points.
RateFit fit_rate(std::vector<RatePoint> points);

struct RateExperimentConfig {
    std::vector<int> n_list;            // strictly increasing, length >= 4
    SplitMode mode = SplitMode::mc;
    NestedMcBudget mc;                  // mc mode
    SplittingPlan plan;                 // nn mode
    std::vector<double> query_point;    // pointwise error location (default: origin)
    std::uint64_t seed = 0;
};

/// Runs the splitting solver per N and measures the terminal pointwise
/// error against the best available oracle (closed form when the catalog
/// provides one, else the Picard evaluator at small d).
RateFit rate_experiment(const SemilinearProblem& problem, const RateExperimentConfig& config);

struct AuditRow {
    int d = 0;
    double eps = 0.0;
    bool achieved = false;
    std::vector<int> architecture;   // empty when unachieved
    std::int64_t p_count = 0;
    double error = 0.0;              // independently re-verified error (best error if unachieved)
    double first_error = 0.0;        // error under the training-time evaluation seed
    long long budget_steps = 0;
};

struct AuditFit {
    std::string kind;   // "P_vs_d" (fixed eps) or "P_vs_inv_eps" (fixed d)
    double fixed_value = 0.0;
    double slope = 0.0; // log-log slope over achieved rows; NaN when underdetermined
    int points = 0;
};

struct AuditConfig {
    std::vector<int> d_list;
    std::vector<double> eps_list;
    std::vector<int> widths = {10, 25, 50, 100, 200};
    std::vector<int> hidden_depths = {2, 3};
    double T = 0.25;
    double rho = 1.0;
    double domain_a = 0.0;
    double domain_b = 1.0;
    std::string phi_name = "sqnorm";
    nlohmann::json phi_params = nlohmann::json::object();
    int batch_size = 128;
    long long steps_per_rung = 4000;
    long long eval_points = 20000;
    std::uint64_t seed = 0;

    void validate() const;
    /// Ladder of architectures for dimension d, ordered so the parameter
    /// count strictly increases: (width, depth) pairs with depth minor.
    std::vector<NetworkArchitecture> ladder(int d) const;
};

struct AuditResult {
    std::vector<AuditRow> rows;
    std::vector<AuditFit> fits;
};

/// Trains up the ladder per (d, eps) until the Monte Carlo L2 error against
/// the closed-form solution reaches eps; every achieved row is re-verified
/// with an independent evaluation seed. Rungs are trained once per d and
/// shared across the eps targets.
AuditResult param_audit(const AuditConfig& config);

} // namespace kspl
