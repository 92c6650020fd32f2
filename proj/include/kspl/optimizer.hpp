#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kspl/network.hpp"

namespace kspl {

enum class OptimizerKind { sgd, adam };

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::adam;
    double step_size = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    // Piecewise-constant schedule: (from_step, multiplier). The effective
    // step size at step t is step_size times the multiplier of the last
    // entry with from_step <= t (1 before any entry). Entries sorted.
    std::vector<std::pair<long long, double>> decay;

    void validate() const;
    double step_size_at(long long step) const;

    /// Default training schedule: x0.1 drops at 60% and 85% of the budget.
    static OptimizerConfig default_adam(long long total_steps, double step_size = 1e-3);
    static OptimizerConfig plain_sgd(double step_size);
};

struct OptimizerState {
    long long step_index = 0;
    std::vector<double> first_moment;  // adam only
    std::vector<double> second_moment; // adam only

    static OptimizerState init(const OptimizerConfig& config, std::int64_t n_params);
};

/// One optimizer step in place. sgd: theta -= eta * grad. adam: standard
/// bias-corrected moment update, theta -= eta * mhat / (sqrt(vhat) + eps).
/// Non-finite gradient entries abort with a diagnostic naming the index.
void optimizer_step(FlatParams& params, std::span<const double> grad, OptimizerState& state,
                    const OptimizerConfig& config);

std::string to_string(OptimizerKind kind);
OptimizerKind optimizer_kind_from_string(const std::string& name);

} // namespace kspl
