#pragma once

#include <array>
#include <cstdint>

namespace kspl {

// Philox-4x64 with 10 rounds: a counter-based keyed block function. Each
// (counter, key) pair maps to four statistically independent 64-bit words,
// so random draws can be addressed by index instead of generated in
// sequence. Verified against the frozen known-answer vectors in the tests.
std::array<std::uint64_t, 4> philox4x64_10(const std::array<std::uint64_t, 4>& counter,
                                           const std::array<std::uint64_t, 2>& key);

} // namespace kspl
