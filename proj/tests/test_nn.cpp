#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "kspl/architecture.hpp"
#include "kspl/error.hpp"
#include "kspl/network.hpp"
#include "kspl/params_io.hpp"
#include "kspl/random_stream.hpp"

using namespace kspl;

namespace {

// Finite-difference oracle for the batch loss gradient, built on forward
// evaluation only (independent of the reverse-mode path it checks).
double numeric_loss(const FlatParams& p, const Batch& batch) {
    double acc = 0.0;
    for (std::size_t j = 0; j < batch.size(); ++j) {
        const double r = forward_scalar(p, batch.input(j)) - batch.y[j];
        acc += r * r;
    }
    return acc / static_cast<double>(batch.size());
}

std::vector<double> fd_gradient(const FlatParams& p, const Batch& batch, double h) {
    std::vector<double> grad(p.theta.size());
    FlatParams probe = p;
    for (std::size_t i = 0; i < p.theta.size(); ++i) {
        probe.theta[i] = p.theta[i] + h;
        const double up = numeric_loss(probe, batch);
        probe.theta[i] = p.theta[i] - h;
        const double down = numeric_loss(probe, batch);
        probe.theta[i] = p.theta[i];
        grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

// Hidden pre-activations of one input; used to keep FD probes away from
// ReLU kinks.
double min_abs_preactivation(const FlatParams& p, std::span<const double> x) {
    const auto& arch = p.arch;
    std::vector<double> cur(x.begin(), x.end());
    double smallest = 1e300;
    for (int i = 1; i <= arch.depth(); ++i) {
        const int rows = arch.layer_size(i);
        const int cols = arch.layer_size(i - 1);
        const double* w = p.theta.data() + arch.offset(i);
        const double* b = w + static_cast<std::int64_t>(rows) * cols;
        std::vector<double> next(static_cast<std::size_t>(rows));
        for (int r = 0; r < rows; ++r) {
            double acc = b[r];
            for (int c = 0; c < cols; ++c) acc += w[r * cols + c] * cur[static_cast<std::size_t>(c)];
            next[static_cast<std::size_t>(r)] = acc;
        }
        if (i < arch.depth()) {
            for (double z : next) smallest = std::min(smallest, std::fabs(z));
            for (double& z : next) z = z > 0.0 ? z : 0.0;
        }
        cur = next;
    }
    return smallest;
}

} // namespace

TEST_CASE("parameter offsets") {
    NetworkArchitecture a({2, 3, 1});
    CHECK(param_offsets(a) == std::vector<std::int64_t>{0, 9, 13});
    CHECK(param_count(a) == 13);

    // (d, l, 1) -> (0, l(d+1), l(d+1)+l+1)
    NetworkArchitecture b({4, 7, 1});
    CHECK(param_offsets(b) == std::vector<std::int64_t>{0, 35, 43});

    CHECK(param_count(NetworkArchitecture({1, 1, 1})) == 4);
    CHECK(param_count(NetworkArchitecture({10, 50, 50, 1})) == 3151);
}

TEST_CASE("architecture validation rejects L < 2 and empty layers") {
    CHECK_THROWS_AS(NetworkArchitecture({1, 1}), ValidationError); // L = 1
    CHECK_THROWS_AS(NetworkArchitecture({3}), ValidationError);
    CHECK_THROWS_AS(NetworkArchitecture({2, 0, 1}), ValidationError);
}

TEST_CASE("offset consistency on random architectures") {
    RandomStream rng(11, 0);
    for (int trial = 0; trial < 50; ++trial) {
        const int L = 2 + static_cast<int>(rng.next_double() * 3);
        std::vector<int> sizes;
        for (int k = 0; k <= L; ++k) sizes.push_back(1 + static_cast<int>(rng.next_double() * 20));
        NetworkArchitecture arch(sizes);
        std::int64_t total = 0;
        for (int k = 1; k <= L; ++k) total += static_cast<std::int64_t>(sizes[k]) * (sizes[k - 1] + 1);
        CHECK(arch.param_count() == total);
        CHECK(arch.offsets().back() == total);
        CHECK(arch.offsets().front() == 0);
    }
}

TEST_CASE("forward on the 4-parameter network") {
    NetworkArchitecture arch({1, 1, 1});
    FlatParams p = FlatParams::from_values(arch, {1, 0, 1, 0});
    const double x1 = 2.0, x2 = -3.0;
    CHECK(forward_scalar(p, {&x1, 1}) == 2.0);
    CHECK(forward_scalar(p, {&x2, 1}) == 0.0);

    FlatParams q = FlatParams::from_values(arch, {1, 0, -1, 5});
    CHECK(forward_scalar(q, {&x1, 1}) == 3.0); // -1*max(2,0) + 5
}

TEST_CASE("forward weight layout is row-major with trailing biases") {
    // layer 1 of (2,2,1): W = [[1,2],[3,4]], b = (5,6); layer 2: W = [[1,1]], b = 0
    NetworkArchitecture arch({2, 2, 1});
    FlatParams p = FlatParams::from_values(arch, {1, 2, 3, 4, 5, 6, 1, 1, 0});
    const std::vector<double> x = {1.0, 1.0};
    // hidden: relu(1+2+5, 3+4+6) = (8, 13); output: 8 + 13
    CHECK(forward_scalar(p, x) == 21.0);
}

TEST_CASE("forward dimension mismatch throws") {
    NetworkArchitecture arch({2, 2, 1});
    FlatParams p = FlatParams::zeros(arch);
    const std::vector<double> x = {1.0};
    CHECK_THROWS_AS(forward_scalar(p, x), ValidationError);
}

TEST_CASE("loss and gradient on hand-checked batches") {
    NetworkArchitecture arch({1, 1, 1});
    FlatParams p = FlatParams::from_values(arch, {1, 0, 1, 0});

    Batch fit;
    fit.d = 1;
    fit.x = {2.0};
    fit.y = {2.0};
    auto [loss0, grad0] = loss_and_grad(p, fit);
    CHECK(loss0 == 0.0);
    CHECK(grad0 == std::vector<double>{0, 0, 0, 0});

    Batch off;
    off.d = 1;
    off.x = {1.0};
    off.y = {0.0};
    auto [loss1, grad1] = loss_and_grad(p, off);
    CHECK(loss1 == 1.0);
    CHECK(grad1 == std::vector<double>{2, 2, 2, 2});
}

TEST_CASE("loss_and_grad rejects empty batch") {
    NetworkArchitecture arch({1, 1, 1});
    FlatParams p = FlatParams::zeros(arch);
    Batch empty;
    empty.d = 1;
    CHECK_THROWS_AS(loss_and_grad(p, empty), ValidationError);
}

TEST_CASE("reverse-mode gradient matches central finite differences") {
    RandomStream rng(31337, 0);
    int done = 0;
    while (done < 25) {
        const int L = 2 + static_cast<int>(rng.next_double() * 3);
        std::vector<int> sizes;
        sizes.push_back(1 + static_cast<int>(rng.next_double() * 10)); // d <= 10
        for (int k = 1; k < L; ++k) sizes.push_back(1 + static_cast<int>(rng.next_double() * 20));
        sizes.push_back(1);
        NetworkArchitecture arch(sizes);

        RandomStream init(rng.next_u64(), 1);
        FlatParams p = init_params(arch, init);
        // random biases move pre-activations off zero
        for (int i = 1; i <= arch.depth(); ++i) {
            double* b = p.theta.data() + arch.offset(i) +
                        static_cast<std::int64_t>(arch.layer_size(i)) * arch.layer_size(i - 1);
            for (int r = 0; r < arch.layer_size(i); ++r) b[r] = rng.next_double() - 0.5;
        }

        Batch batch;
        batch.d = sizes[0];
        const int m = 1 + static_cast<int>(rng.next_double() * 4);
        bool away_from_kinks = true;
        for (int j = 0; j < m; ++j) {
            std::vector<double> x(static_cast<std::size_t>(batch.d));
            for (double& v : x) v = 2.0 * rng.next_double() - 1.0;
            away_from_kinks = away_from_kinks && min_abs_preactivation(p, x) > 1e-3;
            batch.x.insert(batch.x.end(), x.begin(), x.end());
            batch.y.push_back(2.0 * rng.next_double() - 1.0);
        }
        if (!away_from_kinks) continue; // resample; kink crossings void the FD oracle
        ++done;

        auto [loss, grad] = loss_and_grad(p, batch);
        CHECK(loss == doctest::Approx(numeric_loss(p, batch)).epsilon(1e-12));
        const std::vector<double> fd = fd_gradient(p, batch, 1e-5);
        for (std::size_t i = 0; i < grad.size(); ++i) {
            // floor guards the ratio where FD itself loses precision
            const double rel = std::fabs(fd[i] - grad[i]) /
                               std::max({std::fabs(fd[i]), std::fabs(grad[i]), 1e-2});
            CHECK(rel <= 1e-6);
        }
    }
}

TEST_CASE("positive homogeneity for depth-2 nets with zero biases") {
    RandomStream rng(77, 0);
    for (int trial = 0; trial < 20; ++trial) {
        const int d = 1 + static_cast<int>(rng.next_double() * 6);
        const int l = 1 + static_cast<int>(rng.next_double() * 10);
        NetworkArchitecture arch({d, l, 1});
        RandomStream init(rng.next_u64(), 1);
        FlatParams p = init_params(arch, init); // biases are zero by construction

        const double c = 0.1 + 3.0 * rng.next_double();
        FlatParams scaled = p;
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(l) * d; ++i) {
            scaled.theta[static_cast<std::size_t>(i)] *= c;
        }

        std::vector<double> x(static_cast<std::size_t>(d)), cx(static_cast<std::size_t>(d));
        for (int i = 0; i < d; ++i) {
            x[static_cast<std::size_t>(i)] = 2.0 * rng.next_double() - 1.0;
            cx[static_cast<std::size_t>(i)] = c * x[static_cast<std::size_t>(i)];
        }
        CHECK(forward_scalar(scaled, x) == doctest::Approx(forward_scalar(p, cx)).epsilon(1e-12));
    }
}

TEST_CASE("forward is deterministic") {
    NetworkArchitecture arch({3, 8, 8, 1});
    RandomStream init(5, 1);
    FlatParams p = init_params(arch, init);
    const std::vector<double> x = {0.3, -0.7, 1.1};
    const double a = forward_scalar(p, x);
    const double b = forward_scalar(p, x);
    CHECK(a == b);
}

TEST_CASE("flat params validation") {
    NetworkArchitecture arch({1, 1, 1});
    CHECK_THROWS_AS(FlatParams::from_values(arch, {1, 2, 3}), ValidationError);
    CHECK_THROWS_AS(FlatParams::from_values(arch, {1, 2, 3, std::nan("")}), NumericError);
}

TEST_CASE("binary snapshot round-trips bit-exactly") {
    NetworkArchitecture arch({3, 5, 4, 1});
    RandomStream init(123, 9);
    FlatParams p = init_params(arch, init);
    p.theta[0] = -0.0;
    p.theta[1] = 1e-308; // subnormal-adjacent values must survive

    const std::string path = (std::filesystem::temp_directory_path() / "kspl_test_params.bin").string();
    save_params(path, p, {{"purpose", "unit-test"}});
    const FlatParams q = load_params(path);
    CHECK(q.arch == p.arch);
    CHECK(q.theta == p.theta);

    // header layout: magic, then L and layer sizes as 64-bit LE integers
    std::ifstream in(path, std::ios::binary);
    char magic[5];
    in.read(magic, 5);
    CHECK(std::string(magic, 5) == "KSPL1");
    unsigned char u[8];
    in.read(reinterpret_cast<char*>(u), 8);
    CHECK(u[0] == 3); // L = 3, little-endian
    CHECK(u[7] == 0);

    const auto side = load_params_sidecar(path);
    CHECK(side.at("layer_sizes") == std::vector<int>{3, 5, 4, 1});
    CHECK(side.at("param_count").get<std::int64_t>() == p.arch.param_count());
    std::filesystem::remove(path);
    std::filesystem::remove(path + ".json");
}

TEST_CASE("realization exposes dimensions and shares parameters") {
    NetworkArchitecture arch({4, 6, 1});
    RandomStream init(9, 2);
    Realization r(init_params(arch, init));
    CHECK(r.input_dim() == 4);
    CHECK(r.output_dim() == 1);
    const std::vector<double> x = {0.1, 0.2, 0.3, 0.4};
    Realization copy = r;
    CHECK(copy(x) == r(x));
}
