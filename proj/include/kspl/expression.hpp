#pragma once

#include <memory>
#include <span>
#include <vector>

#include <json.hpp>

namespace kspl {

// Small expression language over the coordinates of a point: constants,
// coordinates, sum/product/min/max of subexpressions, exp, and affine
// combinations sum_i w_i x_i + b. JSON form, e.g.
//   {"op":"exp","arg":{"op":"affine","weights":[1,-2],"bias":0.5}}
//   {"op":"max","args":[{"op":"coord","i":0},{"op":"const","v":0}]}
class Expr {
public:
    static Expr constant(double v);
    static Expr coord(int i);
    static Expr sum(std::vector<Expr> args);
    static Expr product(std::vector<Expr> args);
    static Expr min_of(std::vector<Expr> args);
    static Expr max_of(std::vector<Expr> args);
    static Expr exp_of(Expr arg);
    static Expr affine(std::vector<double> weights, double bias);

    double eval(std::span<const double> x) const;

    /// Parses the JSON form; `dim` bounds coordinate indices and affine
    /// weight lengths. Throws ValidationError with the offending path.
    static Expr parse(const nlohmann::json& j, int dim, const std::string& path = "expr");
    nlohmann::json to_json() const;

    struct Node; // implementation detail, defined in expression.cpp

private:
    explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
    std::shared_ptr<const Node> node_;
};

} // namespace kspl
