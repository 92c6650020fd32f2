#include "kspl/network.hpp"

#include <cmath>
#include <string>

#include "kspl/error.hpp"
#include "kspl/parallel.hpp"

namespace kspl {

FlatParams FlatParams::zeros(const NetworkArchitecture& arch) {
    return {arch, std::vector<double>(static_cast<std::size_t>(arch.param_count()), 0.0)};
}

FlatParams FlatParams::from_values(const NetworkArchitecture& arch, std::vector<double> theta) {
    FlatParams p{arch, std::move(theta)};
    p.validate();
    return p;
}

void FlatParams::validate() const {
    if (theta.size() != static_cast<std::size_t>(arch.param_count())) {
        throw ValidationError("theta length " + std::to_string(theta.size()) +
                              " does not match architecture parameter count " +
                              std::to_string(arch.param_count()));
    }
    for (std::size_t i = 0; i < theta.size(); ++i) {
        if (!std::isfinite(theta[i])) {
            throw NumericError("non-finite parameter at index " + std::to_string(i));
        }
    }
}

FlatParams init_params(const NetworkArchitecture& arch, RandomStream& stream) {
    FlatParams p = FlatParams::zeros(arch);
    const int L = arch.depth();
    for (int i = 1; i <= L; ++i) {
        const int fan_in = arch.layer_size(i - 1);
        const int fan_out = arch.layer_size(i);
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        double* w = p.theta.data() + arch.offset(i);
        const std::int64_t n_weights = static_cast<std::int64_t>(fan_out) * fan_in;
        for (std::int64_t j = 0; j < n_weights; ++j) {
            w[j] = bound * (2.0 * stream.next_double() - 1.0);
        }
        // biases stay zero
    }
    return p;
}

namespace {

// Writes the affine map of layer i into out; in must hold a_{i-1}.
void affine_layer(const FlatParams& p, int i, std::span<const double> in, std::span<double> out) {
    const auto& arch = p.arch;
    const int rows = arch.layer_size(i);
    const int cols = arch.layer_size(i - 1);
    const double* w = p.theta.data() + arch.offset(i);
    const double* b = w + static_cast<std::int64_t>(rows) * cols;
    for (int r = 0; r < rows; ++r) {
        const double* wr = w + static_cast<std::int64_t>(r) * cols;
        double acc = b[r];
        for (int c = 0; c < cols; ++c) acc += wr[c] * in[static_cast<std::size_t>(c)];
        out[static_cast<std::size_t>(r)] = acc;
    }
}

// Per-layer activations a_0..a_L and pre-activations z_1..z_L for one
// sample; reused across the samples of a chunk.
struct NetWorkspace {
    std::vector<std::vector<double>> a;
    std::vector<std::vector<double>> z;
    std::vector<double> delta, delta_next;

    explicit NetWorkspace(const NetworkArchitecture& arch) {
        const int L = arch.depth();
        a.resize(static_cast<std::size_t>(L) + 1);
        z.resize(static_cast<std::size_t>(L) + 1);
        int widest = 0;
        for (int k = 0; k <= L; ++k) {
            a[static_cast<std::size_t>(k)].resize(static_cast<std::size_t>(arch.layer_size(k)));
            if (k >= 1) z[static_cast<std::size_t>(k)].resize(static_cast<std::size_t>(arch.layer_size(k)));
            widest = std::max(widest, arch.layer_size(k));
        }
        delta.resize(static_cast<std::size_t>(widest));
        delta_next.resize(static_cast<std::size_t>(widest));
    }
};

// Forward pass storing intermediates; returns the scalar output.
double forward_stored(const FlatParams& p, std::span<const double> x, NetWorkspace& ws) {
    const int L = p.arch.depth();
    std::copy(x.begin(), x.end(), ws.a[0].begin());
    for (int i = 1; i <= L; ++i) {
        affine_layer(p, i, ws.a[static_cast<std::size_t>(i - 1)], ws.z[static_cast<std::size_t>(i)]);
        auto& ai = ws.a[static_cast<std::size_t>(i)];
        const auto& zi = ws.z[static_cast<std::size_t>(i)];
        if (i < L) {
            for (std::size_t j = 0; j < zi.size(); ++j) ai[j] = zi[j] > 0.0 ? zi[j] : 0.0;
        } else {
            ai = zi;
        }
    }
    return ws.a[static_cast<std::size_t>(L)][0];
}

// Accumulates d/dtheta of (residual)^2 for one sample into grad.
// upstream = 2 * residual; ReLU derivative at 0 is 0.
void backward_accumulate(const FlatParams& p, double upstream, NetWorkspace& ws,
                         std::span<double> grad) {
    const auto& arch = p.arch;
    const int L = arch.depth();
    ws.delta[0] = upstream;
    for (int i = L; i >= 1; --i) {
        const int rows = arch.layer_size(i);
        const int cols = arch.layer_size(i - 1);
        const double* w = p.theta.data() + arch.offset(i);
        double* gw = grad.data() + arch.offset(i);
        double* gb = gw + static_cast<std::int64_t>(rows) * cols;
        const auto& a_prev = ws.a[static_cast<std::size_t>(i - 1)];
        for (int r = 0; r < rows; ++r) {
            const double dr = ws.delta[static_cast<std::size_t>(r)];
            double* gwr = gw + static_cast<std::int64_t>(r) * cols;
            for (int c = 0; c < cols; ++c) gwr[c] += dr * a_prev[static_cast<std::size_t>(c)];
            gb[r] += dr;
        }
        if (i > 1) {
            const auto& z_prev = ws.z[static_cast<std::size_t>(i - 1)];
            for (int c = 0; c < cols; ++c) {
                if (z_prev[static_cast<std::size_t>(c)] > 0.0) {
                    double acc = 0.0;
                    for (int r = 0; r < rows; ++r) {
                        acc += ws.delta[static_cast<std::size_t>(r)] *
                               w[static_cast<std::int64_t>(r) * cols + c];
                    }
                    ws.delta_next[static_cast<std::size_t>(c)] = acc;
                } else {
                    ws.delta_next[static_cast<std::size_t>(c)] = 0.0;
                }
            }
            std::swap(ws.delta, ws.delta_next);
        }
    }
}

} // namespace

void forward(const FlatParams& params, std::span<const double> x, std::span<double> out) {
    const auto& arch = params.arch;
    if (static_cast<int>(x.size()) != arch.input_dim()) {
        throw ValidationError("forward: input length " + std::to_string(x.size()) +
                              " does not match l_0 = " + std::to_string(arch.input_dim()));
    }
    if (static_cast<int>(out.size()) != arch.output_dim()) {
        throw ValidationError("forward: output length does not match l_L");
    }
    thread_local std::vector<double> cur, next;
    const int L = arch.depth();
    cur.assign(x.begin(), x.end());
    for (int i = 1; i <= L; ++i) {
        next.resize(static_cast<std::size_t>(arch.layer_size(i)));
        affine_layer(params, i, cur, next);
        if (i < L) {
            for (double& v : next) v = v > 0.0 ? v : 0.0;
        }
        std::swap(cur, next);
    }
    std::copy(cur.begin(), cur.end(), out.begin());
}

std::vector<double> forward(const FlatParams& params, std::span<const double> x) {
    std::vector<double> out(static_cast<std::size_t>(params.arch.output_dim()));
    forward(params, x, out);
    return out;
}

double forward_scalar(const FlatParams& params, std::span<const double> x) {
    if (params.arch.output_dim() != 1) {
        throw ValidationError("forward_scalar requires l_L = 1");
    }
    double out;
    forward(params, x, {&out, 1});
    return out;
}

std::pair<double, std::vector<double>> loss_and_grad(const FlatParams& params, const Batch& batch) {
    const auto& arch = params.arch;
    if (arch.output_dim() != 1) throw ValidationError("loss_and_grad requires l_L = 1");
    if (batch.size() == 0) throw ValidationError("loss_and_grad: empty batch");
    if (batch.d != arch.input_dim()) {
        throw ValidationError("loss_and_grad: batch dimension " + std::to_string(batch.d) +
                              " does not match l_0 = " + std::to_string(arch.input_dim()));
    }
    if (batch.x.size() != batch.size() * static_cast<std::size_t>(batch.d)) {
        throw ValidationError("loss_and_grad: ragged batch storage");
    }

    const std::size_t n = batch.size();
    const std::size_t n_chunks = std::min<std::size_t>(kGradChunks, n);
    const std::size_t n_params = static_cast<std::size_t>(arch.param_count());

    struct Partial {
        double sq_sum = 0.0;
        std::vector<double> grad;
    };
    std::vector<Partial> parts(n_chunks);
    parallel_for_chunks(n, n_chunks, [&](std::size_t c, std::size_t lo, std::size_t hi) {
        auto& part = parts[c];
        part.grad.assign(n_params, 0.0);
        NetWorkspace ws(arch);
        for (std::size_t j = lo; j < hi; ++j) {
            const double yhat = forward_stored(params, batch.input(j), ws);
            const double r = yhat - batch.y[j];
            part.sq_sum += r * r;
            backward_accumulate(params, 2.0 * r, ws, part.grad);
        }
    });

    Partial total = merge_pairwise(parts, [](Partial& a, Partial& b) {
        a.sq_sum += b.sq_sum;
        for (std::size_t i = 0; i < a.grad.size(); ++i) a.grad[i] += b.grad[i];
        std::vector<double>().swap(b.grad);
    });

    const double inv_m = 1.0 / static_cast<double>(n);
    for (double& g : total.grad) g *= inv_m;
    return {total.sq_sum * inv_m, std::move(total.grad)};
}

} // namespace kspl
