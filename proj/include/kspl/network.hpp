#pragma once

#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "kspl/architecture.hpp"
#include "kspl/random_stream.hpp"

namespace kspl {

/// A network's parameters as one flat vector theta. Layer i (1-based)
/// occupies theta[d_i .. d_{i+1}): first the l_i x l_{i-1} weight matrix in
/// row-major order (entry (r,c) at d_i + r*l_{i-1} + c with 0-based r,c),
/// then the l_i biases. This is the 0-based translation of the 1-based
/// indexing d_i + (r-1)*l_{i-1} + c for weights and d_i + l_i*l_{i-1} + r
/// for biases.
struct FlatParams {
    NetworkArchitecture arch;
    std::vector<double> theta;

    static FlatParams zeros(const NetworkArchitecture& arch);
    static FlatParams from_values(const NetworkArchitecture& arch, std::vector<double> theta);

    /// Checks theta length and that every entry is finite.
    void validate() const;
};

/// Fan-scaled uniform init: layer-i weights drawn from
/// U[-sqrt(6/(l_{i-1}+l_i)), +sqrt(6/(l_{i-1}+l_i))], biases zero.
FlatParams init_params(const NetworkArchitecture& arch, RandomStream& stream);

/// Evaluates the network: affine layers interleaved with componentwise
/// ReLU max(z,0) on all hidden layers; no activation after the last layer.
void forward(const FlatParams& params, std::span<const double> x, std::span<double> out);
std::vector<double> forward(const FlatParams& params, std::span<const double> x);

/// Scalar-output convenience (requires l_L = 1). Thread-safe; uses
/// thread-local scratch so hot loops do not allocate.
double forward_scalar(const FlatParams& params, std::span<const double> x);

/// A regression batch with flat input storage: row j is x[j*d .. (j+1)*d).
struct Batch {
    int d = 0;
    std::vector<double> x;
    std::vector<double> y;

    std::size_t size() const { return y.size(); }
    std::span<const double> input(std::size_t j) const {
        return {x.data() + j * static_cast<std::size_t>(d), static_cast<std::size_t>(d)};
    }
};

/// Mean squared error (1/m) sum_j (y_j - N_theta(x_j))^2 over the batch and
/// its exact reverse-mode gradient with respect to theta. The ReLU
/// subgradient at 0 is taken as 0. Batch elements are processed in fixed
/// chunks whose partial gradients merge in a fixed pairwise order, so the
/// result is independent of the worker-thread count.
std::pair<double, std::vector<double>> loss_and_grad(const FlatParams& params, const Batch& batch);

/// The realization operator: the input-output function of a parameter
/// vector. Copies share the underlying parameters.
class Realization {
public:
    explicit Realization(FlatParams params)
        : params_(std::make_shared<const FlatParams>(std::move(params))) {}

    int input_dim() const { return params_->arch.input_dim(); }
    int output_dim() const { return params_->arch.output_dim(); }
    const FlatParams& params() const { return *params_; }

    double operator()(std::span<const double> x) const { return forward_scalar(*params_, x); }
    void eval(std::span<const double> x, std::span<double> out) const {
        forward(*params_, x, out);
    }

private:
    std::shared_ptr<const FlatParams> params_;
};

} // namespace kspl
