#include "kspl/problem.hpp"

#include <algorithm>
#include <cmath>

#include "kspl/csv.hpp"
#include "kspl/error.hpp"

namespace kspl {

namespace {

std::vector<double> coeffs_from_json(const nlohmann::json& params, int d, const std::string& who) {
    if (!params.contains("coeffs")) {
        return std::vector<double>(static_cast<std::size_t>(d), 1.0);
    }
    const auto& c = params.at("coeffs");
    if (c.is_number()) {
        return std::vector<double>(static_cast<std::size_t>(d), c.get<double>());
    }
    if (c.is_array()) {
        std::vector<double> out;
        for (const auto& v : c) {
            if (!v.is_number()) throw ValidationError(who + ".coeffs entries must be numbers");
            out.push_back(v.get<double>());
        }
        if (static_cast<int>(out.size()) != d) {
            throw ValidationError(who + ".coeffs length " + std::to_string(out.size()) +
                                  " does not match d = " + std::to_string(d));
        }
        return out;
    }
    throw ValidationError(who + ".coeffs must be a number or an array");
}

void reject_unknown(const nlohmann::json& params, std::initializer_list<const char*> allowed,
                    const std::string& who) {
    if (!params.is_object()) {
        if (params.is_null()) return;
        throw ValidationError(who + ": params must be an object");
    }
    for (auto it = params.begin(); it != params.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || it.key() == a;
        if (!ok) throw ValidationError(who + ": unknown param '" + it.key() + "'");
    }
}

} // namespace

PhiFunction PhiFunction::constant(double c) {
    PhiFunction p;
    p.kind_ = Kind::constant;
    p.name_ = "constant";
    p.value_ = c;
    return p;
}

PhiFunction PhiFunction::linear(std::vector<double> coeffs) {
    PhiFunction p;
    p.kind_ = Kind::linear;
    p.name_ = "linear";
    p.coeffs_ = std::move(coeffs);
    return p;
}

PhiFunction PhiFunction::sqnorm() {
    PhiFunction p;
    p.kind_ = Kind::sqnorm;
    p.name_ = "sqnorm";
    return p;
}

PhiFunction PhiFunction::exp_inner(std::vector<double> coeffs) {
    PhiFunction p;
    p.kind_ = Kind::exp_inner;
    p.name_ = "exp_inner";
    p.coeffs_ = std::move(coeffs);
    return p;
}

PhiFunction PhiFunction::expression(Expr e) {
    PhiFunction p;
    p.kind_ = Kind::expr;
    p.name_ = "expr";
    p.expr_ = std::move(e);
    return p;
}

PhiFunction PhiFunction::from_json(const std::string& name, const nlohmann::json& params, int d) {
    if (name == "constant") {
        reject_unknown(params, {"c"}, "phi.constant");
        if (!params.contains("c") || !params.at("c").is_number()) {
            throw ValidationError("phi.constant requires numeric param 'c'");
        }
        return constant(params.at("c").get<double>());
    }
    if (name == "linear") {
        reject_unknown(params, {"coeffs"}, "phi.linear");
        return linear(coeffs_from_json(params, d, "phi.linear"));
    }
    if (name == "sqnorm") {
        reject_unknown(params, {}, "phi.sqnorm");
        return sqnorm();
    }
    if (name == "exp_inner") {
        reject_unknown(params, {"coeffs"}, "phi.exp_inner");
        return exp_inner(coeffs_from_json(params, d, "phi.exp_inner"));
    }
    if (name == "expr") {
        reject_unknown(params, {"expr"}, "phi.expr");
        if (!params.contains("expr")) throw ValidationError("phi.expr requires param 'expr'");
        return expression(Expr::parse(params.at("expr"), d, "phi.expr"));
    }
    throw ValidationError("unknown phi catalog entry: " + name);
}

double PhiFunction::operator()(std::span<const double> x) const {
    switch (kind_) {
        case Kind::constant: return value_;
        case Kind::linear: {
            double acc = 0.0;
            for (std::size_t i = 0; i < coeffs_.size(); ++i) acc += coeffs_[i] * x[i];
            return acc;
        }
        case Kind::sqnorm: {
            double acc = 0.0;
            for (double xi : x) acc += xi * xi;
            return acc;
        }
        case Kind::exp_inner: {
            double acc = 0.0;
            for (std::size_t i = 0; i < coeffs_.size(); ++i) acc += coeffs_[i] * x[i];
            return std::exp(acc);
        }
        case Kind::expr: return expr_->eval(x);
    }
    return 0.0; // unreachable
}

nlohmann::json PhiFunction::params_json() const {
    nlohmann::json j = nlohmann::json::object();
    switch (kind_) {
        case Kind::constant: j["c"] = value_; break;
        case Kind::linear:
        case Kind::exp_inner: j["coeffs"] = coeffs_; break;
        case Kind::sqnorm: break;
        case Kind::expr: j["expr"] = expr_->to_json(); break;
    }
    return j;
}

double HeatProblem::varrho() const { return std::sqrt(2.0 * rho * T); }

void HeatProblem::validate() const {
    if (d < 1) throw ValidationError("problem dimension must be >= 1");
    if (!(T > 0.0) || !std::isfinite(T)) throw ValidationError("time horizon T must be positive");
    if (!(rho > 0.0) || !std::isfinite(rho)) throw ValidationError("diffusivity rho must be positive");
    domain.validate();
    if (domain.d != d) throw ValidationError("domain dimension does not match problem dimension");
    if (!std::isfinite(varrho()) || !(varrho() > 0.0)) {
        throw ValidationError("varrho = sqrt(2 rho T) must be finite and positive");
    }
}

std::string HeatProblem::fingerprint() const {
    nlohmann::json j;
    j["d"] = d;
    j["T"] = format_double(T);
    j["rho"] = format_double(rho);
    j["domain"] = {format_double(domain.a), format_double(domain.b)};
    j["phi"] = {{"name", phi.name()}, {"params", phi.params_json()}};
    return j.dump();
}

NonlinearityFunction NonlinearityFunction::zero() {
    NonlinearityFunction f;
    f.kind_ = Kind::zero;
    f.name_ = "zero";
    f.lipschitz_ = 1.0;
    return f;
}

NonlinearityFunction NonlinearityFunction::linear(double lambda) {
    NonlinearityFunction f;
    f.kind_ = Kind::linear;
    f.name_ = "linear";
    f.lambda_ = lambda;
    f.lipschitz_ = std::max(std::fabs(lambda), 1e-12);
    return f;
}

NonlinearityFunction NonlinearityFunction::sine() {
    NonlinearityFunction f;
    f.kind_ = Kind::sine;
    f.name_ = "sine";
    f.lipschitz_ = 1.0;
    return f;
}

NonlinearityFunction NonlinearityFunction::cubic_clipped(double bound) {
    if (!(bound > 0.0)) throw ValidationError("cubic_clipped bound must be > 0");
    NonlinearityFunction f;
    f.kind_ = Kind::cubic_clipped;
    f.name_ = "cubic_clipped";
    f.bound_ = bound;
    f.lipschitz_ = std::max(1.0, 3.0 * bound * bound - 1.0);
    return f;
}

NonlinearityFunction NonlinearityFunction::expression(Expr e, double lipschitz) {
    if (!(lipschitz > 0.0)) throw ValidationError("expr nonlinearity requires declared lipschitz > 0");
    NonlinearityFunction f;
    f.kind_ = Kind::expr;
    f.name_ = "expr";
    f.expr_ = std::move(e);
    f.lipschitz_ = lipschitz;
    return f;
}

NonlinearityFunction NonlinearityFunction::from_json(const std::string& name,
                                                     const nlohmann::json& params) {
    if (name == "zero") {
        reject_unknown(params, {}, "f.zero");
        return zero();
    }
    if (name == "linear") {
        reject_unknown(params, {"lambda"}, "f.linear");
        if (!params.contains("lambda") || !params.at("lambda").is_number()) {
            throw ValidationError("f.linear requires numeric param 'lambda'");
        }
        return linear(params.at("lambda").get<double>());
    }
    if (name == "sine") {
        reject_unknown(params, {}, "f.sine");
        return sine();
    }
    if (name == "cubic_clipped") {
        reject_unknown(params, {"bound"}, "f.cubic_clipped");
        double bound = 1.5;
        if (params.contains("bound")) {
            if (!params.at("bound").is_number()) throw ValidationError("f.cubic_clipped 'bound' must be a number");
            bound = params.at("bound").get<double>();
        }
        return cubic_clipped(bound);
    }
    if (name == "expr") {
        reject_unknown(params, {"expr", "lipschitz"}, "f.expr");
        if (!params.contains("expr")) throw ValidationError("f.expr requires param 'expr'");
        if (!params.contains("lipschitz") || !params.at("lipschitz").is_number()) {
            throw ValidationError("f.expr requires numeric param 'lipschitz'");
        }
        return expression(Expr::parse(params.at("expr"), 1, "f.expr"),
                          params.at("lipschitz").get<double>());
    }
    throw ValidationError("unknown f catalog entry: " + name);
}

double NonlinearityFunction::operator()(double u) const {
    switch (kind_) {
        case Kind::zero: return 0.0;
        case Kind::linear: return lambda_ * u;
        case Kind::sine: return std::sin(u);
        case Kind::cubic_clipped: {
            const double v = std::clamp(u, -bound_, bound_);
            return v - v * v * v;
        }
        case Kind::expr: return expr_->eval({&u, 1});
    }
    return 0.0; // unreachable
}

nlohmann::json NonlinearityFunction::params_json() const {
    nlohmann::json j = nlohmann::json::object();
    switch (kind_) {
        case Kind::zero:
        case Kind::sine: break;
        case Kind::linear: j["lambda"] = lambda_; break;
        case Kind::cubic_clipped: j["bound"] = bound_; break;
        case Kind::expr:
            j["expr"] = expr_->to_json();
            j["lipschitz"] = lipschitz_;
            break;
    }
    return j;
}

void SemilinearProblem::validate() const {
    base.validate();
    if (base.rho != 1.0) {
        throw ValidationError("semilinear problems use the unit Laplacian; rho must be 1");
    }
    if (!(f.lipschitz() > 0.0)) throw ValidationError("declared Lipschitz constant must be > 0");
}

std::string SemilinearProblem::fingerprint() const {
    nlohmann::json j;
    j["base"] = nlohmann::json::parse(base.fingerprint());
    j["f"] = {{"name", f.name()}, {"params", f.params_json()}};
    return j.dump();
}

std::vector<CatalogEntry> phi_catalog() {
    return {
        {"constant", "{\"c\": number}"},
        {"linear", "{\"coeffs\": number | [number x d]} (default 1)"},
        {"sqnorm", "{}"},
        {"exp_inner", "{\"coeffs\": number | [number x d]} (default 1)"},
        {"expr", "{\"expr\": expression over coords (const/coord/sum/product/min/max/exp/affine)}"},
    };
}

std::vector<CatalogEntry> f_catalog() {
    return {
        {"zero", "{}"},
        {"linear", "{\"lambda\": number}"},
        {"sine", "{}"},
        {"cubic_clipped", "{\"bound\": number > 0 (default 1.5)}"},
        {"expr", "{\"expr\": expression in u (coord 0), \"lipschitz\": number > 0}"},
    };
}

} // namespace kspl
