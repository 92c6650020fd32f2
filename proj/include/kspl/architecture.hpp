#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace kspl {

/// Layer sizes (l_0, l_1, ..., l_L) of a fully connected ReLU network with
/// L affine layers. Construction validates L >= 2 and every l_k >= 1 and
/// precomputes the flat-parameter offsets.
class NetworkArchitecture {
public:
    explicit NetworkArchitecture(std::vector<int> layer_sizes);

    int depth() const { return static_cast<int>(layer_sizes_.size()) - 1; } // L
    int input_dim() const { return layer_sizes_.front(); }                  // l_0
    int output_dim() const { return layer_sizes_.back(); }                  // l_L
    int layer_size(int k) const { return layer_sizes_[static_cast<std::size_t>(k)]; }
    const std::vector<int>& layer_sizes() const { return layer_sizes_; }

    // Cumulative offsets (d_1, ..., d_{L+1}) with d_1 = 0 and
    // d_i = sum_{k=1}^{i-1} l_k (l_{k-1} + 1). Layer i's parameter block is
    // theta[d_i .. d_{i+1}); the last offset is the total parameter count.
    const std::vector<std::int64_t>& offsets() const { return offsets_; }
    std::int64_t offset(int i) const { return offsets_[static_cast<std::size_t>(i - 1)]; } // d_i, i in 1..L+1
    std::int64_t param_count() const { return offsets_.back(); }

    std::string describe() const; // e.g. "(2,50,50,1)"

    bool operator==(const NetworkArchitecture& other) const {
        return layer_sizes_ == other.layer_sizes_;
    }

private:
    std::vector<int> layer_sizes_;
    std::vector<std::int64_t> offsets_;
};

/// The offsets (d_1, ..., d_{L+1}) of a valid architecture.
std::vector<std::int64_t> param_offsets(const NetworkArchitecture& arch);

/// Total number of stored weights and biases, sum_k l_k (l_{k-1} + 1).
std::int64_t param_count(const NetworkArchitecture& arch);

} // namespace kspl
