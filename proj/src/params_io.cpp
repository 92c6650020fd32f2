#include "kspl/params_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "kspl/error.hpp"
#include "kspl/version.hpp"

namespace kspl {

namespace {

constexpr char kMagic[5] = {'K', 'S', 'P', 'L', '1'};

void put_u64(std::ofstream& out, std::uint64_t v) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(buf, 8);
}

std::uint64_t get_u64(std::ifstream& in) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

} // namespace

void save_params(const std::string& path, const FlatParams& params,
                 const nlohmann::json& metadata) {
    params.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open parameter file for writing: " + path);
    out.write(kMagic, sizeof(kMagic));
    const auto& sizes = params.arch.layer_sizes();
    put_u64(out, static_cast<std::uint64_t>(params.arch.depth()));
    for (int l : sizes) put_u64(out, static_cast<std::uint64_t>(l));
    for (double v : params.theta) put_u64(out, std::bit_cast<std::uint64_t>(v));
    if (!out) throw ValidationError("write failed: " + path);
    out.close();

    nlohmann::json side;
    side["format"] = "kspl-params-v1";
    side["layer_sizes"] = sizes;
    side["param_count"] = params.arch.param_count();
    side["toolkit_version"] = kToolkitVersion;
    side["metadata"] = metadata;
    std::ofstream js(path + ".json", std::ios::binary);
    if (!js) throw ValidationError("cannot open sidecar for writing: " + path + ".json");
    js << side.dump(2) << '\n';
}

FlatParams load_params(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open parameter file: " + path);
    char magic[5];
    in.read(magic, 5);
    if (!in || std::memcmp(magic, kMagic, 5) != 0) {
        throw ValidationError("bad magic in parameter file: " + path);
    }
    const std::uint64_t L = get_u64(in);
    if (!in || L < 2 || L > 1024) throw ValidationError("bad depth in parameter file: " + path);
    std::vector<int> sizes(L + 1);
    for (auto& l : sizes) l = static_cast<int>(get_u64(in));
    NetworkArchitecture arch(std::move(sizes));
    std::vector<double> theta(static_cast<std::size_t>(arch.param_count()));
    for (auto& v : theta) v = std::bit_cast<double>(get_u64(in));
    if (!in) throw ValidationError("truncated parameter file: " + path);
    return FlatParams::from_values(arch, std::move(theta));
}

nlohmann::json load_params_sidecar(const std::string& path) {
    std::ifstream js(path + ".json");
    if (!js) throw ValidationError("cannot open sidecar: " + path + ".json");
    return nlohmann::json::parse(js);
}

} // namespace kspl
