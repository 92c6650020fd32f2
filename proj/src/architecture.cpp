#include "kspl/architecture.hpp"

#include "kspl/error.hpp"

namespace kspl {

NetworkArchitecture::NetworkArchitecture(std::vector<int> layer_sizes)
    : layer_sizes_(std::move(layer_sizes)) {
    if (layer_sizes_.size() < 3) {
        throw ValidationError("network depth L must be at least 2 (got " +
                              std::to_string(static_cast<int>(layer_sizes_.size()) - 1) + ")");
    }
    for (int l : layer_sizes_) {
        if (l < 1) throw ValidationError("every layer size must be >= 1");
    }
    offsets_.reserve(layer_sizes_.size());
    std::int64_t acc = 0;
    offsets_.push_back(acc); // d_1 = 0
    for (std::size_t k = 1; k < layer_sizes_.size(); ++k) {
        acc += static_cast<std::int64_t>(layer_sizes_[k]) * (layer_sizes_[k - 1] + 1);
        offsets_.push_back(acc);
    }
}

std::string NetworkArchitecture::describe() const {
    std::string s = "(";
    for (std::size_t i = 0; i < layer_sizes_.size(); ++i) {
        if (i > 0) s += ',';
        s += std::to_string(layer_sizes_[i]);
    }
    s += ')';
    return s;
}

std::vector<std::int64_t> param_offsets(const NetworkArchitecture& arch) { return arch.offsets(); }

std::int64_t param_count(const NetworkArchitecture& arch) { return arch.param_count(); }

} // namespace kspl
