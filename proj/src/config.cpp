#include "kspl/config.hpp"

#include <fstream>
#include <set>

#include "kspl/error.hpp"

namespace kspl {

namespace {

void require_keys(const nlohmann::json& j, const std::string& path,
                  std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ValidationError(path + ": expected a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || it.key() == a;
        if (!ok) throw ValidationError(path + ": unknown key '" + it.key() + "'");
    }
}

double get_number(const nlohmann::json& j, const std::string& path, const char* key,
                  std::optional<double> fallback = std::nullopt) {
    if (!j.contains(key)) {
        if (fallback) return *fallback;
        throw ValidationError(path + ": missing required field '" + key + "'");
    }
    if (!j.at(key).is_number()) throw ValidationError(path + "." + key + ": must be a number");
    return j.at(key).get<double>();
}

long long get_integer(const nlohmann::json& j, const std::string& path, const char* key,
                      std::optional<long long> fallback = std::nullopt) {
    if (!j.contains(key)) {
        if (fallback) return *fallback;
        throw ValidationError(path + ": missing required field '" + key + "'");
    }
    if (!j.at(key).is_number_integer()) throw ValidationError(path + "." + key + ": must be an integer");
    return j.at(key).get<long long>();
}

std::string get_string(const nlohmann::json& j, const std::string& path, const char* key,
                       std::optional<std::string> fallback = std::nullopt) {
    if (!j.contains(key)) {
        if (fallback) return *fallback;
        throw ValidationError(path + ": missing required field '" + key + "'");
    }
    if (!j.at(key).is_string()) throw ValidationError(path + "." + key + ": must be a string");
    return j.at(key).get<std::string>();
}

bool get_bool(const nlohmann::json& j, const std::string& path, const char* key, bool fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_boolean()) throw ValidationError(path + "." + key + ": must be a boolean");
    return j.at(key).get<bool>();
}

HeatProblem parse_problem(const nlohmann::json& j, const std::string& path, bool with_f) {
    require_keys(j, path, with_f
                              ? std::initializer_list<const char*>{"d", "T", "rho", "domain", "phi", "f"}
                              : std::initializer_list<const char*>{"d", "T", "rho", "domain", "phi"});
    HeatProblem p;
    p.d = static_cast<int>(get_integer(j, path, "d"));
    p.T = get_number(j, path, "T");
    p.rho = get_number(j, path, "rho", 1.0);
    if (j.contains("domain")) {
        require_keys(j.at("domain"), path + ".domain", {"a", "b"});
        p.domain.a = get_number(j.at("domain"), path + ".domain", "a");
        p.domain.b = get_number(j.at("domain"), path + ".domain", "b");
    }
    p.domain.d = p.d;
    if (!j.contains("phi")) throw ValidationError(path + ": missing required field 'phi'");
    require_keys(j.at("phi"), path + ".phi", {"name", "params"});
    const std::string phi_name = get_string(j.at("phi"), path + ".phi", "name");
    const nlohmann::json phi_params =
        j.at("phi").contains("params") ? j.at("phi").at("params") : nlohmann::json::object();
    p.phi = PhiFunction::from_json(phi_name, phi_params, p.d);
    p.validate();
    return p;
}

NonlinearityFunction parse_f(const nlohmann::json& j, const std::string& path) {
    if (!j.contains("f")) throw ValidationError(path + ": missing required field 'f'");
    require_keys(j.at("f"), path + ".f", {"name", "params"});
    const std::string name = get_string(j.at("f"), path + ".f", "name");
    const nlohmann::json params =
        j.at("f").contains("params") ? j.at("f").at("params") : nlohmann::json::object();
    return NonlinearityFunction::from_json(name, params);
}

TrainingPlan parse_plan(const nlohmann::json& j, const std::string& path, int d,
                        std::uint64_t seed) {
    require_keys(j, path,
                 {"architecture", "batch_size", "total_steps", "eval_every", "optimizer"});
    if (!j.contains("architecture") || !j.at("architecture").is_array()) {
        throw ValidationError(path + ": missing 'architecture' (array of hidden layer sizes)");
    }
    std::vector<int> sizes;
    sizes.push_back(d);
    for (const auto& v : j.at("architecture")) {
        if (!v.is_number_integer()) throw ValidationError(path + ".architecture: entries must be integers");
        sizes.push_back(v.get<int>());
    }
    sizes.push_back(1);
    TrainingPlan plan;
    plan.architecture = NetworkArchitecture(std::move(sizes));
    plan.batch_size = static_cast<int>(get_integer(j, path, "batch_size", 256));
    plan.total_steps = get_integer(j, path, "total_steps", 20000);
    plan.eval_every = get_integer(j, path, "eval_every", 500);
    plan.seed = seed;

    if (j.contains("optimizer")) {
        const auto& opt = j.at("optimizer");
        require_keys(opt, path + ".optimizer",
                     {"kind", "step_size", "beta1", "beta2", "epsilon", "decay", "default_decay"});
        OptimizerConfig cfg;
        cfg.kind = optimizer_kind_from_string(get_string(opt, path + ".optimizer", "kind", "adam"));
        cfg.step_size = get_number(opt, path + ".optimizer", "step_size", 1e-3);
        cfg.adam_beta1 = get_number(opt, path + ".optimizer", "beta1", 0.9);
        cfg.adam_beta2 = get_number(opt, path + ".optimizer", "beta2", 0.999);
        cfg.adam_epsilon = get_number(opt, path + ".optimizer", "epsilon", 1e-8);
        if (get_bool(opt, path + ".optimizer", "default_decay", true)) {
            cfg.decay = OptimizerConfig::default_adam(plan.total_steps, cfg.step_size).decay;
        }
        if (opt.contains("decay")) {
            cfg.decay.clear();
            if (!opt.at("decay").is_array()) {
                throw ValidationError(path + ".optimizer.decay: must be an array");
            }
            for (std::size_t i = 0; i < opt.at("decay").size(); ++i) {
                const auto& e = opt.at("decay")[i];
                const std::string epath = path + ".optimizer.decay[" + std::to_string(i) + "]";
                require_keys(e, epath, {"from_step", "scale"});
                cfg.decay.push_back({get_integer(e, epath, "from_step"), get_number(e, epath, "scale")});
            }
        }
        plan.optimizer = cfg;
    } else {
        plan.optimizer = OptimizerConfig::default_adam(plan.total_steps);
    }
    plan.validate();
    return plan;
}

} // namespace

std::string to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::kolmogorov: return "kolmogorov";
        case ExperimentKind::splitting: return "splitting";
        case ExperimentKind::rate: return "rate";
        case ExperimentKind::audit: return "audit";
        case ExperimentKind::oracle_check: return "oracle-check";
    }
    return "?";
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError("config is not valid JSON: " + std::string(e.what()));
    }
    return parse(j);
}

ExperimentConfig ExperimentConfig::parse(const nlohmann::json& j) {
    require_keys(j, "config",
                 {"kind", "seed", "out", "problem", "plan", "splitting", "rate", "audit", "eval"});
    ExperimentConfig cfg;

    const std::string kind = get_string(j, "config", "kind");
    if (kind == "kolmogorov") cfg.kind = ExperimentKind::kolmogorov;
    else if (kind == "splitting") cfg.kind = ExperimentKind::splitting;
    else if (kind == "rate") cfg.kind = ExperimentKind::rate;
    else if (kind == "audit") cfg.kind = ExperimentKind::audit;
    else if (kind == "oracle-check") cfg.kind = ExperimentKind::oracle_check;
    else throw ValidationError("config.kind: unknown experiment kind '" + kind + "'");

    cfg.seed = static_cast<std::uint64_t>(get_integer(j, "config", "seed", 0));
    cfg.out_dir = get_string(j, "config", "out", "runs/out");

    const bool needs_f =
        cfg.kind == ExperimentKind::splitting || cfg.kind == ExperimentKind::rate;
    const bool needs_problem = cfg.kind != ExperimentKind::audit;

    if (needs_problem) {
        if (!j.contains("problem")) throw ValidationError("config: missing required section 'problem'");
        if (cfg.kind == ExperimentKind::oracle_check) {
            // oracle-check runs its own catalog sweep; a problem section is
            // accepted for the picard spot value but only d/T are used.
            HeatProblem p = parse_problem(j.at("problem"), "problem", j.at("problem").contains("f"));
            cfg.problem = p;
            if (j.at("problem").contains("f")) {
                SemilinearProblem sp{p, parse_f(j.at("problem"), "problem")};
                cfg.semilinear = sp;
            }
        } else {
            HeatProblem p = parse_problem(j.at("problem"), "problem", needs_f);
            cfg.problem = p;
            if (needs_f) {
                SemilinearProblem sp{p, parse_f(j.at("problem"), "problem")};
                sp.validate();
                cfg.semilinear = sp;
            }
        }
    }

    if (j.contains("plan")) {
        if (!cfg.problem) throw ValidationError("config.plan given without a problem section");
        cfg.plan = parse_plan(j.at("plan"), "plan", cfg.problem->d, cfg.seed);
    }

    if (j.contains("splitting")) {
        const auto& s = j.at("splitting");
        require_keys(s, "splitting",
                     {"N", "mode", "inflation", "warm_start", "warm_start_steps", "mc"});
        cfg.n_steps = static_cast<int>(get_integer(s, "splitting", "N", 10));
        const std::string mode = get_string(s, "splitting", "mode", "nn");
        if (mode == "nn") cfg.mode = SplitMode::nn;
        else if (mode == "mc") cfg.mode = SplitMode::mc;
        else throw ValidationError("splitting.mode: must be 'nn' or 'mc'");
        cfg.inflation = get_number(s, "splitting", "inflation", 3.0);
        cfg.warm_start = get_bool(s, "splitting", "warm_start", true);
        cfg.warm_start_steps = get_integer(s, "splitting", "warm_start_steps", 0);
        if (s.contains("mc")) {
            require_keys(s.at("mc"), "splitting.mc", {"top", "inner", "eval_cap"});
            cfg.mc_budget.top = get_integer(s.at("mc"), "splitting.mc", "top", 100000);
            cfg.mc_budget.inner = static_cast<int>(get_integer(s.at("mc"), "splitting.mc", "inner", 1));
            cfg.mc_budget.eval_cap = get_integer(s.at("mc"), "splitting.mc", "eval_cap", 100000000);
        }
    }

    if (j.contains("rate")) {
        const auto& r = j.at("rate");
        require_keys(r, "rate", {"N_list", "mode", "query_point", "mc"});
        if (!r.contains("N_list") || !r.at("N_list").is_array()) {
            throw ValidationError("rate.N_list: required array of integers");
        }
        for (const auto& v : r.at("N_list")) {
            if (!v.is_number_integer()) throw ValidationError("rate.N_list: entries must be integers");
            cfg.rate_n_list.push_back(v.get<int>());
        }
        const std::string mode = get_string(r, "rate", "mode", "mc");
        if (mode == "nn") cfg.mode = SplitMode::nn;
        else if (mode == "mc") cfg.mode = SplitMode::mc;
        else throw ValidationError("rate.mode: must be 'nn' or 'mc'");
        if (r.contains("query_point")) {
            if (!r.at("query_point").is_array()) throw ValidationError("rate.query_point: must be an array");
            for (const auto& v : r.at("query_point")) {
                if (!v.is_number()) throw ValidationError("rate.query_point: entries must be numbers");
                cfg.query_point.push_back(v.get<double>());
            }
        }
        if (r.contains("mc")) {
            require_keys(r.at("mc"), "rate.mc", {"top", "inner", "eval_cap"});
            cfg.mc_budget.top = get_integer(r.at("mc"), "rate.mc", "top", 100000);
            cfg.mc_budget.inner = static_cast<int>(get_integer(r.at("mc"), "rate.mc", "inner", 1));
            cfg.mc_budget.eval_cap = get_integer(r.at("mc"), "rate.mc", "eval_cap", 100000000);
        }
    }

    if (j.contains("audit")) {
        const auto& a = j.at("audit");
        require_keys(a, "audit",
                     {"d_list", "eps_list", "widths", "depths", "T", "rho", "domain", "phi",
                      "batch_size", "steps_per_rung", "eval_points"});
        AuditConfig ac;
        ac.seed = cfg.seed;
        if (!a.contains("d_list") || !a.at("d_list").is_array()) {
            throw ValidationError("audit.d_list: required array of integers");
        }
        for (const auto& v : a.at("d_list")) ac.d_list.push_back(v.get<int>());
        if (!a.contains("eps_list") || !a.at("eps_list").is_array()) {
            throw ValidationError("audit.eps_list: required array of numbers");
        }
        for (const auto& v : a.at("eps_list")) ac.eps_list.push_back(v.get<double>());
        if (a.contains("widths")) {
            ac.widths.clear();
            for (const auto& v : a.at("widths")) ac.widths.push_back(v.get<int>());
        }
        if (a.contains("depths")) {
            ac.hidden_depths.clear();
            for (const auto& v : a.at("depths")) ac.hidden_depths.push_back(v.get<int>());
        }
        ac.T = get_number(a, "audit", "T", 0.25);
        ac.rho = get_number(a, "audit", "rho", 1.0);
        if (a.contains("domain")) {
            require_keys(a.at("domain"), "audit.domain", {"a", "b"});
            ac.domain_a = get_number(a.at("domain"), "audit.domain", "a");
            ac.domain_b = get_number(a.at("domain"), "audit.domain", "b");
        }
        if (a.contains("phi")) {
            require_keys(a.at("phi"), "audit.phi", {"name", "params"});
            ac.phi_name = get_string(a.at("phi"), "audit.phi", "name");
            if (a.at("phi").contains("params")) ac.phi_params = a.at("phi").at("params");
        }
        ac.batch_size = static_cast<int>(get_integer(a, "audit", "batch_size", 128));
        ac.steps_per_rung = get_integer(a, "audit", "steps_per_rung", 4000);
        ac.eval_points = get_integer(a, "audit", "eval_points", 20000);
        ac.validate();
        cfg.audit = ac;
    }

    if (j.contains("eval")) {
        const auto& e = j.at("eval");
        require_keys(e, "eval",
                     {"n_points", "loss_samples", "fk_samples", "picard"});
        cfg.eval_points = get_integer(e, "eval", "n_points", 100000);
        cfg.loss_samples = get_integer(e, "eval", "loss_samples", 100000);
        cfg.oracle_fk_samples = get_integer(e, "eval", "fk_samples", 200000);
        if (e.contains("picard")) {
            const auto& pc = e.at("picard");
            require_keys(pc, "eval.picard",
                         {"iterations", "quad_nodes", "inner_samples", "phi_samples", "replicates",
                          "eval_cap"});
            cfg.picard.picard_iterations = static_cast<int>(get_integer(pc, "eval.picard", "iterations", 3));
            cfg.picard.quad_nodes = static_cast<int>(get_integer(pc, "eval.picard", "quad_nodes", 8));
            cfg.picard.inner_samples = static_cast<int>(get_integer(pc, "eval.picard", "inner_samples", 2));
            cfg.picard.phi_samples = static_cast<int>(get_integer(pc, "eval.picard", "phi_samples", 32));
            cfg.picard.replicates = static_cast<int>(get_integer(pc, "eval.picard", "replicates", 16));
            cfg.picard.eval_cap = get_integer(pc, "eval.picard", "eval_cap", 100000000);
            cfg.picard.validate();
        }
    }

    // kind-specific requirements
    switch (cfg.kind) {
        case ExperimentKind::kolmogorov:
            if (!cfg.plan) throw ValidationError("kolmogorov experiments require a 'plan' section");
            break;
        case ExperimentKind::splitting:
            if (cfg.mode == SplitMode::nn && !cfg.plan) {
                throw ValidationError("nn-mode splitting requires a 'plan' section");
            }
            break;
        case ExperimentKind::rate:
            if (cfg.rate_n_list.empty()) throw ValidationError("rate experiments require a 'rate' section");
            if (cfg.mode == SplitMode::nn && !cfg.plan) {
                throw ValidationError("nn-mode rate experiments require a 'plan' section");
            }
            break;
        case ExperimentKind::audit:
            if (!cfg.audit) throw ValidationError("audit experiments require an 'audit' section");
            break;
        case ExperimentKind::oracle_check: break;
    }
    return cfg;
}

nlohmann::json ExperimentConfig::resolved_json() const {
    nlohmann::json j;
    j["kind"] = to_string(kind);
    j["seed"] = seed;
    j["out"] = out_dir;
    if (problem) {
        nlohmann::json p;
        p["d"] = problem->d;
        p["T"] = problem->T;
        p["rho"] = problem->rho;
        p["domain"] = {{"a", problem->domain.a}, {"b", problem->domain.b}};
        p["phi"] = {{"name", problem->phi.name()}, {"params", problem->phi.params_json()}};
        if (semilinear) {
            p["f"] = {{"name", semilinear->f.name()}, {"params", semilinear->f.params_json()}};
        }
        j["problem"] = p;
    }
    if (plan) {
        nlohmann::json p;
        p["architecture"] = plan->architecture.layer_sizes();
        p["batch_size"] = plan->batch_size;
        p["total_steps"] = plan->total_steps;
        p["eval_every"] = plan->eval_every;
        nlohmann::json opt;
        opt["kind"] = to_string(plan->optimizer.kind);
        opt["step_size"] = plan->optimizer.step_size;
        opt["beta1"] = plan->optimizer.adam_beta1;
        opt["beta2"] = plan->optimizer.adam_beta2;
        opt["epsilon"] = plan->optimizer.adam_epsilon;
        nlohmann::json decay = nlohmann::json::array();
        for (const auto& [from, scale] : plan->optimizer.decay) {
            decay.push_back({{"from_step", from}, {"scale", scale}});
        }
        opt["decay"] = decay;
        p["optimizer"] = opt;
        j["plan"] = p;
    }
    if (kind == ExperimentKind::splitting) {
        j["splitting"] = {{"N", n_steps},
                          {"mode", mode == SplitMode::nn ? "nn" : "mc"},
                          {"inflation", inflation},
                          {"warm_start", warm_start},
                          {"warm_start_steps", warm_start_steps},
                          {"mc", {{"top", mc_budget.top}, {"inner", mc_budget.inner}, {"eval_cap", mc_budget.eval_cap}}}};
    }
    if (kind == ExperimentKind::rate) {
        j["rate"] = {{"N_list", rate_n_list},
                     {"mode", mode == SplitMode::nn ? "nn" : "mc"},
                     {"query_point", query_point},
                     {"mc", {{"top", mc_budget.top}, {"inner", mc_budget.inner}, {"eval_cap", mc_budget.eval_cap}}}};
    }
    if (audit) {
        j["audit"] = {{"d_list", audit->d_list},
                      {"eps_list", audit->eps_list},
                      {"widths", audit->widths},
                      {"depths", audit->hidden_depths},
                      {"T", audit->T},
                      {"rho", audit->rho},
                      {"domain", {{"a", audit->domain_a}, {"b", audit->domain_b}}},
                      {"phi", {{"name", audit->phi_name}, {"params", audit->phi_params}}},
                      {"batch_size", audit->batch_size},
                      {"steps_per_rung", audit->steps_per_rung},
                      {"eval_points", audit->eval_points}};
    }
    j["eval"] = {{"n_points", eval_points},
                 {"loss_samples", loss_samples},
                 {"fk_samples", oracle_fk_samples},
                 {"picard",
                  {{"iterations", picard.picard_iterations},
                   {"quad_nodes", picard.quad_nodes},
                   {"inner_samples", picard.inner_samples},
                   {"phi_samples", picard.phi_samples},
                   {"replicates", picard.replicates},
                   {"eval_cap", picard.eval_cap}}}};
    return j;
}

} // namespace kspl
