#include "kspl/splitting.hpp"

#include <algorithm>
#include <cmath>

#include "kspl/csv.hpp"
#include "kspl/error.hpp"
#include "kspl/log.hpp"
#include "kspl/parallel.hpp"

namespace kspl {

void SplittingPlan::validate() const {
    step_plan.validate();
    if (!(inflation >= 0.0)) throw ValidationError("inflation must be >= 0");
    if (warm_start_steps < 0) throw ValidationError("warm_start_steps must be >= 0");
}

void NestedMcBudget::validate() const {
    if (top < 1) throw ValidationError("mc budget: top must be >= 1");
    if (inner < 1) throw ValidationError("mc budget: inner must be >= 1");
    if (eval_cap < 1) throw ValidationError("mc budget: eval_cap must be >= 1");
}

SplittingState::SplittingState(SemilinearProblem problem, int n_steps)
    : problem_(std::move(problem)), n_steps_(n_steps) {
    problem_.validate();
    if (n_steps_ < 1) throw ValidationError("splitting requires N >= 1");
}

double SplittingState::sigma() const { return std::sqrt(2.0 * problem_.base.T / n_steps_); }

double SplittingState::value(int k, std::span<const double> x) const {
    if (k < 0 || k > current()) {
        throw ValidationError("U_" + std::to_string(k) + " is not available yet");
    }
    if (k == 0) return problem_.base.phi(x);
    return forward_scalar(surrogates_[static_cast<std::size_t>(k - 1)].params, x);
}

double SplittingState::frozen_target(std::span<const double> y) const {
    const double u = value(current(), y);
    if (problem_.f.is_zero()) return u;
    return u + tau() * problem_.f(u);
}

CubeDomain SplittingState::next_training_domain(double inflation) const {
    const int remaining = n_steps_ - 1 - current();
    const double extra = inflation * sigma() * std::sqrt(static_cast<double>(remaining));
    return problem_.base.domain.inflated(extra);
}

void SplittingState::append(TrainedSurrogate surrogate) {
    if (current() >= n_steps_) throw ValidationError("all N splitting steps already built");
    surrogates_.push_back(std::move(surrogate));
}

void split_step_train(SplittingState& state, const SplittingPlan& plan) {
    plan.validate();
    const auto& problem = state.problem();
    if (plan.step_plan.architecture.input_dim() != problem.base.d) {
        throw ValidationError("splitting plan architecture does not match problem dimension");
    }
    if (state.current() >= state.n_steps()) {
        throw ValidationError("split_step_train: all N steps already built");
    }

    const int n = state.current();
    const double tau = state.tau();
    const double sigma = state.sigma();
    const auto& f = problem.f;
    const bool f_zero = f.is_zero();

    // Freeze U_n for the target closure. U_0 is phi; later levels are nets.
    const PhiFunction phi = problem.base.phi;
    std::shared_ptr<const FlatParams> prev;
    if (n > 0) prev = std::make_shared<FlatParams>(state.surrogates().back().params);

    RegressionTask task;
    task.d = problem.base.d;
    task.sample_domain = state.next_training_domain(plan.inflation);
    task.noise_scale = sigma;
    task.target = [phi, prev, f, f_zero, tau](std::span<const double> y) {
        const double u = prev ? forward_scalar(*prev, y) : phi(y);
        if (f_zero) return u;
        return u + tau * f(u);
    };
    task.fingerprint = problem.fingerprint();

    TrainingPlan step_plan = plan.step_plan;
    std::optional<FlatParams> warm;
    if (plan.warm_start && n > 0 &&
        state.surrogates().back().params.arch == step_plan.architecture) {
        warm = state.surrogates().back().params;
        if (plan.warm_start_steps > 0) {
            const long long full = step_plan.total_steps;
            step_plan.total_steps = plan.warm_start_steps;
            // rescale the decay schedule to the reduced budget
            if (step_plan.optimizer.decay.size() == 2 &&
                step_plan.optimizer.decay[0].first == full * 60 / 100 &&
                step_plan.optimizer.decay[1].first == full * 85 / 100) {
                step_plan.optimizer = OptimizerConfig::default_adam(step_plan.total_steps,
                                                                    step_plan.optimizer.step_size);
            }
        }
    }

    log_info("splitting step " + std::to_string(n + 1) + "/" + std::to_string(state.n_steps()) +
             ": training on " + std::to_string(step_plan.total_steps) + " steps, cube [" +
             format_double(task.sample_domain.a) + "," + format_double(task.sample_domain.b) + "]");
    state.append(train_regression(task, step_plan, static_cast<std::uint64_t>(n), warm));
}

namespace {

struct McRecursion {
    const SplittingState& state;
    const NestedMcBudget& budget;
    std::uint64_t seed;
    std::uint64_t query_index;
    int n_target;

    double sigma;
    double tau;

    // G_{level-1} applied to U_{level-1}(y)
    double jumped(double u) const {
        const auto& f = state.problem().f;
        if (f.is_zero()) return u;
        return u + tau * f(u);
    }

    long long samples_at(int level) const {
        return level == n_target ? budget.top : static_cast<long long>(budget.inner);
    }

    // U_level at x; node_index addresses this node's draws within the level
    // stream, so the recursion is reproducible and order-independent.
    double eval_level(int level, std::span<const double> x, std::uint64_t node_index) const {
        if (level <= state.current()) return state.value(level, x);
        const int d = state.problem().base.d;
        const long long m = samples_at(level);
        RandomStream rs(seed, make_stream_id(StreamPurpose::split_mc,
                                             static_cast<std::uint64_t>(level), query_index));
        rs = rs.at(node_index * static_cast<std::uint64_t>(m) * static_cast<std::uint64_t>(d));
        std::vector<double> y(static_cast<std::size_t>(d));
        double acc = 0.0;
        for (long long k = 0; k < m; ++k) {
            for (int i = 0; i < d; ++i) {
                y[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)] + sigma * rs.next_normal();
            }
            const std::uint64_t child = node_index * static_cast<std::uint64_t>(m) +
                                        static_cast<std::uint64_t>(k);
            acc += jumped(eval_level(level - 1, y, child));
        }
        return acc / static_cast<double>(m);
    }
};

} // namespace

McEstimate splitting_mc_value(const SplittingState& state, int n_target, std::span<const double> x,
                              const NestedMcBudget& budget, std::uint64_t seed,
                              std::uint64_t query_index) {
    budget.validate();
    if (n_target < 1 || n_target > state.n_steps()) {
        throw ValidationError("splitting_mc_value: target level out of range");
    }
    if (n_target <= state.current()) {
        // already materialized; exact evaluation, no MC error
        return {state.value(n_target, x), 0.0, 1};
    }
    const int simulated_levels = n_target - state.current();

    // cost guard: top * (1 + inner + inner^2 + ...) node evaluations
    long double evals = 0.0L;
    long double level_count = static_cast<long double>(budget.top);
    for (int l = 0; l < simulated_levels; ++l) {
        evals += level_count;
        level_count *= budget.inner;
        if (evals > static_cast<long double>(budget.eval_cap)) {
            throw NumericError("nested MC budget exceeds the evaluation cap of " +
                               std::to_string(budget.eval_cap));
        }
    }

    McRecursion rec{state, budget, seed, query_index, n_target, state.sigma(), state.tau()};
    const int d = state.problem().base.d;
    const auto m = static_cast<std::size_t>(budget.top);

    struct Part {
        double sum = 0.0, sum_sq = 0.0;
    };
    std::vector<Part> parts(std::min<std::size_t>(kMcChunks, m));
    parallel_for_chunks(m, parts.size(), [&](std::size_t c, std::size_t lo, std::size_t hi) {
        auto& part = parts[c];
        std::vector<double> y(static_cast<std::size_t>(d));
        RandomStream rs(seed, make_stream_id(StreamPurpose::split_mc,
                                             static_cast<std::uint64_t>(n_target), query_index));
        rs = rs.at(lo * static_cast<std::uint64_t>(d));
        for (std::size_t k = lo; k < hi; ++k) {
            for (int i = 0; i < d; ++i) {
                y[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)] + rec.sigma * rs.next_normal();
            }
            const double v = rec.jumped(rec.eval_level(n_target - 1, y, static_cast<std::uint64_t>(k)));
            part.sum += v;
            part.sum_sq += v * v;
        }
    });
    Part total = merge_pairwise(parts, [](Part& a, Part& b) {
        a.sum += b.sum;
        a.sum_sq += b.sum_sq;
    });

    McEstimate est;
    est.n = budget.top;
    est.value = total.sum / static_cast<double>(budget.top);
    if (budget.top > 1) {
        const double var = std::max(0.0, (total.sum_sq - static_cast<double>(budget.top) * est.value * est.value) /
                                             static_cast<double>(budget.top - 1));
        est.ci_halfwidth = 1.959963984540054 * std::sqrt(var / static_cast<double>(budget.top));
    }
    return est;
}

std::vector<McEstimate> split_step_mc(const SplittingState& state, long long n_inner,
                                      std::span<const std::vector<double>> query_points,
                                      const NestedMcBudget& budget, std::uint64_t seed) {
    if (state.current() >= state.n_steps()) {
        throw ValidationError("split_step_mc: all N steps already built");
    }
    NestedMcBudget top_budget = budget;
    top_budget.top = n_inner;
    std::vector<McEstimate> out;
    out.reserve(query_points.size());
    for (std::size_t q = 0; q < query_points.size(); ++q) {
        out.push_back(splitting_mc_value(state, state.current() + 1, query_points[q], top_budget,
                                         seed, static_cast<std::uint64_t>(q)));
    }
    return out;
}

SplittingRun::SplittingRun(SplittingState state, SplittingRunConfig config)
    : state_(std::move(state)), config_(std::move(config)) {}

double SplittingRun::evaluate(std::span<const double> x, std::uint64_t query_index) const {
    if (config_.mode == SplitMode::nn) return state_.value(state_.n_steps(), x);
    return evaluate_mc(x, query_index).value;
}

McEstimate SplittingRun::evaluate_mc(std::span<const double> x, std::uint64_t query_index) const {
    if (config_.mode == SplitMode::nn) return {state_.value(state_.n_steps(), x), 0.0, 1};
    return splitting_mc_value(state_, state_.n_steps(), x, config_.mc, config_.seed, query_index);
}

nlohmann::json SplittingRun::provenance() const {
    nlohmann::json j;
    j["N"] = state_.n_steps();
    j["tau"] = state_.tau();
    j["sigma"] = state_.sigma();
    j["mode"] = config_.mode == SplitMode::nn ? "nn" : "mc";
    j["seed"] = config_.seed;
    j["problem"] = nlohmann::json::parse(state_.problem().fingerprint());
    if (config_.mode == SplitMode::nn) {
        j["inflation"] = config_.plan.inflation;
        j["warm_start"] = config_.plan.warm_start;
        nlohmann::json steps = nlohmann::json::array();
        for (std::size_t i = 0; i < state_.surrogates().size(); ++i) {
            const auto& s = state_.surrogates()[i];
            nlohmann::json step;
            step["step"] = i + 1;
            step["final_loss"] = s.log.empty() ? 0.0 : s.log.back().loss_estimate;
            step["log_points"] = s.log.size();
            steps.push_back(step);
        }
        j["steps"] = steps;
    } else {
        j["mc_budget"] = {{"top", config_.mc.top}, {"inner", config_.mc.inner},
                          {"eval_cap", config_.mc.eval_cap}};
    }
    return j;
}

SplittingRun solve_splitting(const SemilinearProblem& problem, const SplittingRunConfig& config) {
    SplittingState state(problem, config.n_steps);
    if (config.mode == SplitMode::nn) {
        SplittingPlan plan = config.plan;
        plan.step_plan.seed = config.seed;
        for (int n = 0; n < config.n_steps; ++n) {
            split_step_train(state, plan);
        }
    } else {
        config.mc.validate();
    }
    return SplittingRun(std::move(state), config);
}

} // namespace kspl
