#include "kspl/optimizer.hpp"

#include <cmath>

#include "kspl/error.hpp"

namespace kspl {

void OptimizerConfig::validate() const {
    if (!(step_size > 0.0)) throw ValidationError("optimizer step_size must be > 0");
    if (kind == OptimizerKind::adam) {
        if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0)) throw ValidationError("adam_beta1 must be in (0,1)");
        if (!(adam_beta2 > 0.0 && adam_beta2 < 1.0)) throw ValidationError("adam_beta2 must be in (0,1)");
        if (!(adam_epsilon > 0.0)) throw ValidationError("adam_epsilon must be > 0");
    }
    long long prev = -1;
    for (const auto& [from, scale] : decay) {
        if (from < 0 || from <= prev) throw ValidationError("decay schedule must be sorted by step");
        if (!(scale > 0.0)) throw ValidationError("decay multipliers must be > 0");
        prev = from;
    }
}

double OptimizerConfig::step_size_at(long long step) const {
    double scale = 1.0;
    for (const auto& [from, s] : decay) {
        if (step >= from) scale = s;
        else break;
    }
    return step_size * scale;
}

OptimizerConfig OptimizerConfig::default_adam(long long total_steps, double step_size) {
    OptimizerConfig cfg;
    cfg.kind = OptimizerKind::adam;
    cfg.step_size = step_size;
    cfg.decay = {{total_steps * 60 / 100, 0.1}, {total_steps * 85 / 100, 0.01}};
    return cfg;
}

OptimizerConfig OptimizerConfig::plain_sgd(double step_size) {
    OptimizerConfig cfg;
    cfg.kind = OptimizerKind::sgd;
    cfg.step_size = step_size;
    return cfg;
}

OptimizerState OptimizerState::init(const OptimizerConfig& config, std::int64_t n_params) {
    OptimizerState state;
    if (config.kind == OptimizerKind::adam) {
        state.first_moment.assign(static_cast<std::size_t>(n_params), 0.0);
        state.second_moment.assign(static_cast<std::size_t>(n_params), 0.0);
    }
    return state;
}

void optimizer_step(FlatParams& params, std::span<const double> grad, OptimizerState& state,
                    const OptimizerConfig& config) {
    const std::size_t n = params.theta.size();
    if (grad.size() != n) throw ValidationError("gradient length does not match theta");
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(grad[i])) {
            throw NumericError("non-finite gradient entry at index " + std::to_string(i));
        }
    }

    const double eta = config.step_size_at(state.step_index);
    if (config.kind == OptimizerKind::sgd) {
        for (std::size_t i = 0; i < n; ++i) params.theta[i] -= eta * grad[i];
    } else {
        if (state.first_moment.size() != n || state.second_moment.size() != n) {
            throw ValidationError("optimizer state does not match theta length");
        }
        const double b1 = config.adam_beta1;
        const double b2 = config.adam_beta2;
        const long long t = state.step_index + 1;
        const double corr1 = 1.0 - std::pow(b1, static_cast<double>(t));
        const double corr2 = 1.0 - std::pow(b2, static_cast<double>(t));
        for (std::size_t i = 0; i < n; ++i) {
            double& m = state.first_moment[i];
            double& v = state.second_moment[i];
            m = b1 * m + (1.0 - b1) * grad[i];
            v = b2 * v + (1.0 - b2) * grad[i] * grad[i];
            const double mhat = m / corr1;
            const double vhat = v / corr2;
            params.theta[i] -= eta * mhat / (std::sqrt(vhat) + config.adam_epsilon);
        }
    }
    state.step_index += 1;

    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(params.theta[i])) {
            throw NumericError("non-finite parameter after optimizer step at index " +
                               std::to_string(i));
        }
    }
}

std::string to_string(OptimizerKind kind) {
    return kind == OptimizerKind::sgd ? "plain-sgd" : "adam";
}

OptimizerKind optimizer_kind_from_string(const std::string& name) {
    if (name == "plain-sgd" || name == "sgd") return OptimizerKind::sgd;
    if (name == "adam") return OptimizerKind::adam;
    throw ValidationError("unknown optimizer kind: " + name);
}

} // namespace kspl
