#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "kspl/network.hpp"
#include "kspl/optimizer.hpp"
#include "kspl/oracles.hpp"
#include "kspl/problem.hpp"

namespace kspl {

struct TrainingPlan {
    NetworkArchitecture architecture = NetworkArchitecture({1, 1, 1}); // l_0 = d, l_L = 1
    int batch_size = 256;
    long long total_steps = 20000;
    OptimizerConfig optimizer;
    std::uint64_t seed = 0;
    long long eval_every = 500;

    void validate() const;
    /// Default desk-scale plan: architecture (d, 50, 50, 1), batch 256,
    /// 20000 adam steps with the standard decay schedule.
    static TrainingPlan defaults(int d, std::uint64_t seed);
};

struct TrainLogEntry {
    long long step;          // 1-based step count at the end of the window
    double loss_estimate;    // mean batch loss over the window
};

struct TrainedSurrogate {
    FlatParams params;
    std::string problem_fingerprint;
    std::vector<TrainLogEntry> log;

    Realization realize() const { return Realization(params); }
};

/// The value phi(varrho*w + xi) paired with input xi; aborts on a
/// non-finite target naming the offending input.
double regression_target(const HeatProblem& problem, std::span<const double> xi,
                         std::span<const double> w);

struct RegressionSample {
    std::vector<double> x;
    double y;
};

/// One regression pair; xi and W come from the two independent streams.
RegressionSample make_regression_sample(const HeatProblem& problem, RandomStream& xi_stream,
                                        RandomStream& w_stream);

// Generic regression task y = g(xi + noise_scale * W), xi uniform on the
// sample domain. Both the linear-problem training and the per-step
// splitting regressions are instances of this.
struct RegressionTask {
    int d = 1;
    CubeDomain sample_domain;
    double noise_scale = 1.0;
    std::function<double(std::span<const double>)> target; // g, applied to xi + s*W
    std::string fingerprint;
};

// stream_context distinguishes independent training runs under one seed
// (the splitting solver passes its step index). Streams consumed:
// net_init/train_xi/train_w, each with this context. Sample k of the run
// draws xi and W at counter k*d of the respective stream.
TrainedSurrogate train_regression(const RegressionTask& task, const TrainingPlan& plan,
                                  std::uint64_t stream_context,
                                  const std::optional<FlatParams>& warm_start);

/// Trains the network to minimize the empirical version of
/// E[ |phi(varrho W + xi) - N_theta(xi)|^2 ] with a fresh i.i.d. batch per
/// step; fully deterministic given plan.seed. Aborts with diagnostics if
/// the running loss exceeds 1e6 times its step-100 level.
TrainedSurrogate train(const HeatProblem& problem, const TrainingPlan& plan);

/// Monte Carlo estimate of the objective E[|phi(varrho W + xi) - v(xi)|^2]
/// at a candidate v, with a 95% normal-approximation half-width.
McEstimate loss_of(const std::function<double(std::span<const double>)>& candidate,
                   const HeatProblem& problem, long long n_samples, const RandomStream& stream);

} // namespace kspl
