#include "kspl/philox.hpp"

namespace kspl {

namespace {

constexpr std::uint64_t kMult0 = 0xD2E7470EE14C6C93ull;
constexpr std::uint64_t kMult1 = 0xCA5A826395121157ull;
constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ull;
constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73Bull;

inline std::uint64_t mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi) {
    unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
    hi = static_cast<std::uint64_t>(p >> 64);
    return static_cast<std::uint64_t>(p);
}

inline void round_once(std::array<std::uint64_t, 4>& c, const std::array<std::uint64_t, 2>& k) {
    std::uint64_t hi0, hi1;
    const std::uint64_t lo0 = mulhilo(kMult0, c[0], hi0);
    const std::uint64_t lo1 = mulhilo(kMult1, c[2], hi1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

} // namespace

std::array<std::uint64_t, 4> philox4x64_10(const std::array<std::uint64_t, 4>& counter,
                                           const std::array<std::uint64_t, 2>& key) {
    std::array<std::uint64_t, 4> c = counter;
    std::array<std::uint64_t, 2> k = key;
    round_once(c, k);
    for (int i = 1; i < 10; ++i) {
        k[0] += kWeyl0;
        k[1] += kWeyl1;
        round_once(c, k);
    }
    return c;
}

} // namespace kspl
