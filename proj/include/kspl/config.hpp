#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "kspl/kolmogorov.hpp"
#include "kspl/metrics.hpp"
#include "kspl/oracles.hpp"
#include "kspl/problem.hpp"
#include "kspl/splitting.hpp"

namespace kspl {

enum class ExperimentKind { kolmogorov, splitting, rate, audit, oracle_check };

std::string to_string(ExperimentKind kind);

/// A fully resolved experiment: schema-validated, unknown keys rejected,
/// defaults filled in. `resolved_json()` round-trips everything needed to
/// recompute the outputs (it is what lands in manifest.json).
struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::kolmogorov;
    std::uint64_t seed = 0;
    std::string out_dir = "runs/out";

    // problem (kolmogorov, splitting, rate)
    std::optional<HeatProblem> problem;
    std::optional<SemilinearProblem> semilinear;

    // plan (kolmogorov, splitting nn mode, rate nn mode)
    std::optional<TrainingPlan> plan;

    // splitting / rate
    int n_steps = 10;
    SplitMode mode = SplitMode::nn;
    double inflation = 3.0;
    bool warm_start = true;
    long long warm_start_steps = 0;
    NestedMcBudget mc_budget;
    std::vector<int> rate_n_list;
    std::vector<double> query_point;

    // audit
    std::optional<AuditConfig> audit;

    // evaluation knobs (kolmogorov report, splitting report, oracle check)
    long long eval_points = 100000;
    long long loss_samples = 100000;
    long long oracle_fk_samples = 200000;
    PicardConfig picard;

    nlohmann::json resolved_json() const;

    /// Parses and validates a config file; throws ValidationError with the
    /// failing JSON path.
    static ExperimentConfig load(const std::string& path);
    static ExperimentConfig parse(const nlohmann::json& j);
};

} // namespace kspl
