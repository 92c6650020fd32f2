#include "kspl/expression.hpp"

#include <algorithm>
#include <cmath>

#include "kspl/error.hpp"

namespace kspl {

struct Expr::Node {
    enum class Op { constant, coord, sum, product, min_of, max_of, exp_of, affine };
    Op op;
    double value = 0.0;          // constant
    int index = 0;               // coord
    std::vector<Expr> args;      // sum/product/min/max/exp
    std::vector<double> weights; // affine
    double bias = 0.0;           // affine
};

namespace {

std::shared_ptr<Expr::Node> make_node(Expr::Node::Op op) {
    auto n = std::make_shared<Expr::Node>();
    n->op = op;
    return n;
}

} // namespace

double Expr::eval(std::span<const double> x) const {
    const Node& n = *node_;
    switch (n.op) {
        case Node::Op::constant: return n.value;
        case Node::Op::coord: return x[static_cast<std::size_t>(n.index)];
        case Node::Op::sum: {
            double acc = 0.0;
            for (const Expr& e : n.args) acc += e.eval(x);
            return acc;
        }
        case Node::Op::product: {
            double acc = 1.0;
            for (const Expr& e : n.args) acc *= e.eval(x);
            return acc;
        }
        case Node::Op::min_of: {
            double acc = n.args.front().eval(x);
            for (std::size_t i = 1; i < n.args.size(); ++i) acc = std::min(acc, n.args[i].eval(x));
            return acc;
        }
        case Node::Op::max_of: {
            double acc = n.args.front().eval(x);
            for (std::size_t i = 1; i < n.args.size(); ++i) acc = std::max(acc, n.args[i].eval(x));
            return acc;
        }
        case Node::Op::exp_of: return std::exp(n.args.front().eval(x));
        case Node::Op::affine: {
            double acc = n.bias;
            for (std::size_t i = 0; i < n.weights.size(); ++i) acc += n.weights[i] * x[i];
            return acc;
        }
    }
    return 0.0; // unreachable
}

Expr Expr::constant(double v) {
    auto n = make_node(Node::Op::constant);
    n->value = v;
    return Expr(std::move(n));
}

Expr Expr::coord(int i) {
    auto n = make_node(Node::Op::coord);
    n->index = i;
    return Expr(std::move(n));
}

Expr Expr::sum(std::vector<Expr> args) {
    auto n = make_node(Node::Op::sum);
    n->args = std::move(args);
    return Expr(std::move(n));
}

Expr Expr::product(std::vector<Expr> args) {
    auto n = make_node(Node::Op::product);
    n->args = std::move(args);
    return Expr(std::move(n));
}

Expr Expr::min_of(std::vector<Expr> args) {
    auto n = make_node(Node::Op::min_of);
    n->args = std::move(args);
    return Expr(std::move(n));
}

Expr Expr::max_of(std::vector<Expr> args) {
    auto n = make_node(Node::Op::max_of);
    n->args = std::move(args);
    return Expr(std::move(n));
}

Expr Expr::exp_of(Expr arg) {
    auto n = make_node(Node::Op::exp_of);
    n->args.push_back(std::move(arg));
    return Expr(std::move(n));
}

Expr Expr::affine(std::vector<double> weights, double bias) {
    auto n = make_node(Node::Op::affine);
    n->weights = std::move(weights);
    n->bias = bias;
    return Expr(std::move(n));
}

Expr Expr::parse(const nlohmann::json& j, int dim, const std::string& path) {
    if (!j.is_object()) throw ValidationError(path + ": expression must be a JSON object");
    if (!j.contains("op") || !j.at("op").is_string()) {
        throw ValidationError(path + ": missing string field 'op'");
    }
    const std::string op = j.at("op").get<std::string>();

    auto check_keys = [&](std::initializer_list<const char*> allowed) {
        for (auto it = j.begin(); it != j.end(); ++it) {
            bool ok = it.key() == "op";
            for (const char* a : allowed) ok = ok || it.key() == a;
            if (!ok) throw ValidationError(path + ": unknown key '" + it.key() + "'");
        }
    };
    auto parse_args = [&](std::size_t min_count) {
        check_keys({"args"});
        if (!j.contains("args") || !j.at("args").is_array() || j.at("args").size() < min_count) {
            throw ValidationError(path + ": '" + op + "' needs an 'args' array with at least " +
                                  std::to_string(min_count) + " entries");
        }
        std::vector<Expr> args;
        for (std::size_t i = 0; i < j.at("args").size(); ++i) {
            args.push_back(parse(j.at("args")[i], dim, path + ".args[" + std::to_string(i) + "]"));
        }
        return args;
    };

    if (op == "const") {
        check_keys({"v"});
        if (!j.contains("v") || !j.at("v").is_number()) {
            throw ValidationError(path + ": 'const' needs numeric field 'v'");
        }
        return constant(j.at("v").get<double>());
    }
    if (op == "coord") {
        check_keys({"i"});
        if (!j.contains("i") || !j.at("i").is_number_integer()) {
            throw ValidationError(path + ": 'coord' needs integer field 'i'");
        }
        const int i = j.at("i").get<int>();
        if (i < 0 || i >= dim) {
            throw ValidationError(path + ": coordinate index " + std::to_string(i) +
                                  " out of range for dimension " + std::to_string(dim));
        }
        return coord(i);
    }
    if (op == "sum") return sum(parse_args(1));
    if (op == "product") return product(parse_args(1));
    if (op == "min") return min_of(parse_args(1));
    if (op == "max") return max_of(parse_args(1));
    if (op == "exp") {
        check_keys({"arg"});
        if (!j.contains("arg")) throw ValidationError(path + ": 'exp' needs field 'arg'");
        return exp_of(parse(j.at("arg"), dim, path + ".arg"));
    }
    if (op == "affine") {
        check_keys({"weights", "bias"});
        if (!j.contains("weights") || !j.at("weights").is_array()) {
            throw ValidationError(path + ": 'affine' needs array field 'weights'");
        }
        std::vector<double> w;
        for (const auto& v : j.at("weights")) {
            if (!v.is_number()) throw ValidationError(path + ": affine weights must be numbers");
            w.push_back(v.get<double>());
        }
        if (static_cast<int>(w.size()) != dim) {
            throw ValidationError(path + ": affine weights length " + std::to_string(w.size()) +
                                  " does not match dimension " + std::to_string(dim));
        }
        double bias = 0.0;
        if (j.contains("bias")) {
            if (!j.at("bias").is_number()) throw ValidationError(path + ": 'bias' must be a number");
            bias = j.at("bias").get<double>();
        }
        return affine(std::move(w), bias);
    }
    throw ValidationError(path + ": unknown op '" + op + "'");
}

nlohmann::json Expr::to_json() const {
    const Node& n = *node_;
    nlohmann::json j;
    switch (n.op) {
        case Node::Op::constant:
            j["op"] = "const";
            j["v"] = n.value;
            break;
        case Node::Op::coord:
            j["op"] = "coord";
            j["i"] = n.index;
            break;
        case Node::Op::sum:
        case Node::Op::product:
        case Node::Op::min_of:
        case Node::Op::max_of: {
            j["op"] = n.op == Node::Op::sum       ? "sum"
                      : n.op == Node::Op::product ? "product"
                      : n.op == Node::Op::min_of  ? "min"
                                                  : "max";
            nlohmann::json args = nlohmann::json::array();
            for (const Expr& e : n.args) args.push_back(e.to_json());
            j["args"] = args;
            break;
        }
        case Node::Op::exp_of:
            j["op"] = "exp";
            j["arg"] = n.args.front().to_json();
            break;
        case Node::Op::affine:
            j["op"] = "affine";
            j["weights"] = n.weights;
            j["bias"] = n.bias;
            break;
    }
    return j;
}

} // namespace kspl
