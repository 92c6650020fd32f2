#include "kspl/kolmogorov.hpp"

#include <algorithm>
#include <cmath>

#include "kspl/csv.hpp"
#include "kspl/error.hpp"
#include "kspl/log.hpp"
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

} // namespace

void TrainingPlan::validate() const {
    if (architecture.output_dim() != 1) throw ValidationError("training plan requires l_L = 1");
    if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
    if (total_steps < 1) throw ValidationError("total_steps must be >= 1");
    if (eval_every < 1) throw ValidationError("eval_every must be >= 1");
    optimizer.validate();
}

TrainingPlan TrainingPlan::defaults(int d, std::uint64_t seed) {
    TrainingPlan plan;
    plan.architecture = NetworkArchitecture({d, 50, 50, 1});
    plan.optimizer = OptimizerConfig::default_adam(plan.total_steps);
    plan.seed = seed;
    return plan;
}

double regression_target(const HeatProblem& problem, std::span<const double> xi,
                         std::span<const double> w) {
    const double varrho = problem.varrho();
    thread_local std::vector<double> point;
    point.resize(xi.size());
    for (std::size_t i = 0; i < xi.size(); ++i) point[i] = varrho * w[i] + xi[i];
    const double y = problem.phi(point);
    if (!std::isfinite(y)) {
        throw NumericError("regression target is non-finite: phi" + point_string(point));
    }
    return y;
}

RegressionSample make_regression_sample(const HeatProblem& problem, RandomStream& xi_stream,
                                        RandomStream& w_stream) {
    problem.validate();
    RegressionSample sample;
    sample.x = sample_uniform_cube(xi_stream, problem.domain);
    const std::vector<double> w = sample_normal(w_stream, problem.d);
    sample.y = regression_target(problem, sample.x, w);
    return sample;
}

TrainedSurrogate train_regression(const RegressionTask& task, const TrainingPlan& plan,
                                  std::uint64_t stream_context,
                                  const std::optional<FlatParams>& warm_start) {
    plan.validate();
    task.sample_domain.validate();
    if (plan.architecture.input_dim() != task.d) {
        throw ValidationError("plan architecture l_0 = " + std::to_string(plan.architecture.input_dim()) +
                              " does not match task dimension " + std::to_string(task.d));
    }

    FlatParams params = [&] {
        if (warm_start && warm_start->arch == plan.architecture) return *warm_start;
        RandomStream init_stream(plan.seed, make_stream_id(StreamPurpose::net_init, stream_context));
        return init_params(plan.architecture, init_stream);
    }();

    OptimizerState opt_state = OptimizerState::init(plan.optimizer, plan.architecture.param_count());
    const RandomStream xi_base(plan.seed, make_stream_id(StreamPurpose::train_xi, stream_context));
    const RandomStream w_base(plan.seed, make_stream_id(StreamPurpose::train_w, stream_context));

    const int d = task.d;
    const auto m = static_cast<std::size_t>(plan.batch_size);
    Batch batch;
    batch.d = d;
    batch.x.resize(m * static_cast<std::size_t>(d));
    batch.y.resize(m);

    std::vector<TrainLogEntry> log;
    double window_sum = 0.0;
    long long window_count = 0;
    double early_sum = 0.0; // mean batch loss over the first 100 steps
    double guard_reference = -1.0;

    for (long long step = 0; step < plan.total_steps; ++step) {
        const std::uint64_t sample_base = static_cast<std::uint64_t>(step) * m;
        parallel_for_chunks(m, std::min<std::size_t>(kGradChunks, m),
                            [&](std::size_t, std::size_t lo, std::size_t hi) {
            std::vector<double> w(static_cast<std::size_t>(d));
            RandomStream xi_rs = xi_base.at((sample_base + lo) * static_cast<std::uint64_t>(d));
            RandomStream w_rs = w_base.at((sample_base + lo) * static_cast<std::uint64_t>(d));
            std::vector<double> point(static_cast<std::size_t>(d));
            for (std::size_t j = lo; j < hi; ++j) {
                double* xj = batch.x.data() + j * static_cast<std::size_t>(d);
                for (int i = 0; i < d; ++i) xj[i] = task.sample_domain.a + task.sample_domain.side() * xi_rs.next_double();
                for (int i = 0; i < d; ++i) point[static_cast<std::size_t>(i)] = xj[i] + task.noise_scale * w_rs.next_normal();
                const double y = task.target(point);
                if (!std::isfinite(y)) {
                    throw NumericError("regression target is non-finite at " + point_string(point));
                }
                batch.y[j] = y;
            }
        });

        auto [loss, grad] = loss_and_grad(params, batch);
        optimizer_step(params, grad, opt_state, plan.optimizer);

        window_sum += loss;
        window_count += 1;
        if (step < 100) {
            early_sum += loss;
            if (step == 99 || step == plan.total_steps - 1) guard_reference = early_sum / (step + 1);
        } else if (guard_reference > 0.0 && loss > 1e6 * guard_reference) {
            throw NumericError("training diverged at step " + std::to_string(step + 1) +
                               ": batch loss " + format_double(loss) + " exceeds 1e6 x " +
                               format_double(guard_reference) + " (the step-100 running loss)");
        }

        if ((step + 1) % plan.eval_every == 0 || step + 1 == plan.total_steps) {
            log.push_back({step + 1, window_sum / static_cast<double>(window_count)});
            log_debug("step " + std::to_string(step + 1) + " loss " +
                      format_double(log.back().loss_estimate));
            window_sum = 0.0;
            window_count = 0;
        }
    }

    return TrainedSurrogate{std::move(params), task.fingerprint, std::move(log)};
}

TrainedSurrogate train(const HeatProblem& problem, const TrainingPlan& plan) {
    problem.validate();
    if (plan.architecture.input_dim() != problem.d) {
        throw ValidationError("plan architecture does not match problem dimension");
    }
    RegressionTask task;
    task.d = problem.d;
    task.sample_domain = problem.domain;
    task.noise_scale = problem.varrho();
    const PhiFunction phi = problem.phi;
    task.target = [phi](std::span<const double> point) { return phi(point); };
    task.fingerprint = problem.fingerprint();
    auto surrogate = train_regression(task, plan, 0, std::nullopt);
    // the unified task computes phi at xi + varrho*W, which must stay finite
    return surrogate;
}

McEstimate loss_of(const std::function<double(std::span<const double>)>& candidate,
                   const HeatProblem& problem, long long n_samples, const RandomStream& stream) {
    problem.validate();
    if (n_samples < 2) throw ValidationError("loss_of requires n_samples >= 2");
    const int d = problem.d;
    const double varrho = problem.varrho();
    const auto n = static_cast<std::size_t>(n_samples);

    struct Part {
        double sum = 0.0, sum_sq = 0.0;
    };
    std::vector<Part> parts(std::min<std::size_t>(kMcChunks, n));
    parallel_for_chunks(n, parts.size(), [&](std::size_t c, std::size_t lo, std::size_t hi) {
        auto& part = parts[c];
        // sample k draws xi at counter 2kd and W at 2kd + d
        std::vector<double> xi(static_cast<std::size_t>(d)), point(static_cast<std::size_t>(d));
        RandomStream rs = stream.at(0);
        for (std::size_t k = lo; k < hi; ++k) {
            rs = stream.at(2 * k * static_cast<std::size_t>(d));
            sample_uniform_cube(rs, problem.domain, xi);
            for (int i = 0; i < d; ++i) {
                point[static_cast<std::size_t>(i)] = xi[static_cast<std::size_t>(i)] + varrho * rs.next_normal();
            }
            const double y = problem.phi(point);
            if (!std::isfinite(y)) {
                throw NumericError("loss_of: phi returned a non-finite value at " + point_string(point));
            }
            const double r = y - candidate(xi);
            const double sq = r * r;
            part.sum += sq;
            part.sum_sq += sq * sq;
        }
    });
    Part total = merge_pairwise(parts, [](Part& a, Part& b) {
        a.sum += b.sum;
        a.sum_sq += b.sum_sq;
    });

    McEstimate est;
    est.n = n_samples;
    est.value = total.sum / static_cast<double>(n_samples);
    const double var = std::max(0.0, (total.sum_sq - static_cast<double>(n_samples) * est.value * est.value) /
                                         static_cast<double>(n_samples - 1));
    est.ci_halfwidth = 1.959963984540054 * std::sqrt(var / static_cast<double>(n_samples));
    return est;
}

} // namespace kspl
