#pragma once

#include <string>

#include <json.hpp>

#include "kspl/network.hpp"

namespace kspl {

// Flat binary snapshot: magic bytes "KSPL1", then L and l_0..l_L as 64-bit
// little-endian unsigned integers, then theta as 64-bit little-endian IEEE
// doubles. A JSON sidecar at <path>.json carries the architecture and
// caller-supplied metadata.
void save_params(const std::string& path, const FlatParams& params,
                 const nlohmann::json& metadata);

FlatParams load_params(const std::string& path);

nlohmann::json load_params_sidecar(const std::string& path);

} // namespace kspl
