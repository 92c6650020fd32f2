#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "kspl/expression.hpp"
#include "kspl/random_stream.hpp"

namespace kspl {

/// Initial condition phi: R^d -> R, registered by name. Catalog entries:
///   constant  - phi(x) = c                          params: {"c": number}
///   linear    - phi(x) = sum_i c_i x_i              params: {"coeffs": number|array}
///   sqnorm    - phi(x) = |x|^2
///   exp_inner - phi(x) = exp(sum_i c_i x_i)         params: {"coeffs": number|array}
///   expr      - composed expression                 params: {"expr": expression}
class PhiFunction {
public:
    enum class Kind { constant, linear, sqnorm, exp_inner, expr };

    static PhiFunction constant(double c);
    static PhiFunction linear(std::vector<double> coeffs);
    static PhiFunction sqnorm();
    static PhiFunction exp_inner(std::vector<double> coeffs);
    static PhiFunction expression(Expr e);

    /// Builds a catalog entry from its JSON params; scalar "coeffs"
    /// broadcast to all d coordinates.
    static PhiFunction from_json(const std::string& name, const nlohmann::json& params, int d);

    double operator()(std::span<const double> x) const;

    Kind kind() const { return kind_; }
    const std::string& name() const { return name_; }
    const std::vector<double>& coeffs() const { return coeffs_; }
    double constant_value() const { return value_; }
    nlohmann::json params_json() const;

private:
    PhiFunction() = default;
    Kind kind_ = Kind::constant;
    std::string name_;
    double value_ = 0.0;
    std::vector<double> coeffs_;
    std::optional<Expr> expr_;
};

/// A linear heat problem du/dt = rho * Laplace u, u(0,.) = phi, posed on
/// the sampling cube [a,b]^d with horizon T.
struct HeatProblem {
    int d = 1;
    double T = 1.0;
    double rho = 1.0;
    CubeDomain domain;
    PhiFunction phi = PhiFunction::sqnorm();

    /// Diffusion scale sqrt(2 rho T) of the terminal-time Gaussian.
    double varrho() const;
    void validate() const;
    std::string fingerprint() const;
};

/// Scalar nonlinearity f: R -> R with a declared Lipschitz constant.
/// Catalog: zero; linear (lambda*u); sine (sin u); cubic_clipped
/// (v - v^3 with v = clamp(u, -bound, bound)); expr.
class NonlinearityFunction {
public:
    enum class Kind { zero, linear, sine, cubic_clipped, expr };

    static NonlinearityFunction zero();
    static NonlinearityFunction linear(double lambda);
    static NonlinearityFunction sine();
    static NonlinearityFunction cubic_clipped(double bound);
    static NonlinearityFunction expression(Expr e, double lipschitz);

    static NonlinearityFunction from_json(const std::string& name, const nlohmann::json& params);

    double operator()(double u) const;

    Kind kind() const { return kind_; }
    const std::string& name() const { return name_; }
    bool is_zero() const { return kind_ == Kind::zero; }
    bool is_linear() const { return kind_ == Kind::linear; }
    double linear_rate() const { return lambda_; }
    double lipschitz() const { return lipschitz_; }
    nlohmann::json params_json() const;

private:
    NonlinearityFunction() = default;
    Kind kind_ = Kind::zero;
    std::string name_;
    double lambda_ = 0.0;
    double bound_ = 1.0;
    double lipschitz_ = 0.0;
    std::optional<Expr> expr_;
};

/// Semilinear heat problem du/dt = Laplace u + f(u); the diffusion
/// coefficient is fixed to 1.
struct SemilinearProblem {
    HeatProblem base;
    NonlinearityFunction f = NonlinearityFunction::zero();

    void validate() const;
    std::string fingerprint() const;
};

struct CatalogEntry {
    std::string name;
    std::string params_schema;
};

std::vector<CatalogEntry> phi_catalog();
std::vector<CatalogEntry> f_catalog();

} // namespace kspl
