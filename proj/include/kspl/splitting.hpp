#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "kspl/kolmogorov.hpp"
#include "kspl/problem.hpp"

namespace kspl {

enum class SplitMode { nn, mc };

struct SplittingPlan {
    TrainingPlan step_plan;           // per-step training budget; seed is the run seed
    double inflation = 3.0;           // sampling-cube growth per remaining step
    bool warm_start = true;           // start step n+1 from U_n's parameters
    long long warm_start_steps = 0;   // optional smaller budget for warm-started steps (0 = same)

    void validate() const;
};

struct NestedMcBudget {
    long long top = 100000;           // samples at the queried level
    int inner = 1;                    // samples per node at deeper simulated levels
    long long eval_cap = 100000000;   // refuse recursions beyond this many evaluations

    void validate() const;
};

/// The splitting-time state: tau_n = n*T/N, U_0 = phi, and the trained
/// per-step value functions U_1..U_n. U_{n+1} is only built after U_n.
class SplittingState {
public:
    SplittingState(SemilinearProblem problem, int n_steps);

    const SemilinearProblem& problem() const { return problem_; }
    int n_steps() const { return n_steps_; }                       // N
    int current() const { return static_cast<int>(surrogates_.size()); } // n
    double tau() const { return problem_.base.T / n_steps_; }      // T/N
    double sigma() const;                                          // sqrt(2 T/N)

    /// U_k(x) for k <= current(); k = 0 evaluates phi itself.
    double value(int k, std::span<const double> x) const;

    /// G_n(y) = U_n(y) + tau * f(U_n(y)) at the current n. For the zero
    /// nonlinearity this is exactly U_n(y).
    double frozen_target(std::span<const double> y) const;

    /// Sampling cube for training U_{n+1}: [a,b] grown by
    /// inflation * sigma * sqrt(N-1-n) per side, so the diffusion keeps
    /// queries of earlier-step networks inside their training region and
    /// the final step trains on [a,b] itself.
    CubeDomain next_training_domain(double inflation) const;

    void append(TrainedSurrogate surrogate);
    const std::vector<TrainedSurrogate>& surrogates() const { return surrogates_; }

private:
    SemilinearProblem problem_;
    int n_steps_;
    std::vector<TrainedSurrogate> surrogates_;
};

/// Trains U_{n+1} by regressing G_n(xi + sigma W) on xi over the inflated
/// cube and appends it to the state. Training streams use context n, so
/// step 0 consumes exactly the streams of a direct `train` call.
void split_step_train(SplittingState& state, const SplittingPlan& plan);

/// Nested Feynman-Kac evaluation of U_{n_target} at x: levels above
/// state.current() are simulated recursively with `budget.top` samples at
/// the queried level and `budget.inner` per node below; stored surrogates
/// (and U_0 = phi) are evaluated directly. The CI covers the top-level
/// average only; with inner = 1 and a linear nonlinearity the estimator is
/// unbiased for the splitting value.
McEstimate splitting_mc_value(const SplittingState& state, int n_target, std::span<const double> x,
                              const NestedMcBudget& budget, std::uint64_t seed,
                              std::uint64_t query_index = 0);

/// Per-point values of U_{n+1} with n_inner samples at the top level.
std::vector<McEstimate> split_step_mc(const SplittingState& state, long long n_inner,
                                      std::span<const std::vector<double>> query_points,
                                      const NestedMcBudget& budget, std::uint64_t seed);

struct SplittingRunConfig {
    int n_steps = 10;
    SplitMode mode = SplitMode::nn;
    SplittingPlan plan;     // nn mode
    NestedMcBudget mc;      // mc mode
    std::uint64_t seed = 0;
};

/// Result of solve(): an evaluator for U_N ~ u(T, .) plus provenance.
class SplittingRun {
public:
    SplittingRun(SplittingState state, SplittingRunConfig config);

    const SplittingState& state() const { return state_; }
    const SplittingRunConfig& config() const { return config_; }
    SplitMode mode() const { return config_.mode; }

    /// Terminal approximation U_N. In mc mode this runs the nested
    /// recursion (query_index addresses independent draws per point).
    double evaluate(std::span<const double> x, std::uint64_t query_index = 0) const;
    McEstimate evaluate_mc(std::span<const double> x, std::uint64_t query_index = 0) const;

    /// N, tau, sigma, seeds, per-step budgets and training curves.
    nlohmann::json provenance() const;

private:
    SplittingState state_;
    SplittingRunConfig config_;
};

/// Runs the N sequential splitting steps (training in nn mode; bookkeeping
/// only in mc mode, where evaluation defers to the nested recursion).
SplittingRun solve_splitting(const SemilinearProblem& problem, const SplittingRunConfig& config);

} // namespace kspl
