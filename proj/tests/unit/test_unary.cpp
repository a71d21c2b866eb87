#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "doctest.h"
#include "gradcheck.hpp"
#include "oracles.hpp"
#include "selfstereo/error.hpp"
#include "selfstereo/synthgen.hpp"
#include "selfstereo/unary_model.hpp"

using namespace selfstereo;

namespace {

UnaryModel single_layer(int out, int in, int k, Activation act) {
    UnaryModel m;
    m.layers.emplace_back(out, in, k, act);
    m.d_max = 4;
    return m;
}

// One output channel per tap of a k x k window: features are raw patches.
UnaryModel patch_model(int k, int d_max) {
    UnaryModel m = single_layer(k * k, 1, k, Activation::none);
    for (int ky = 0; ky < k; ++ky)
        for (int kx = 0; kx < k; ++kx) m.layers[0].weight[m.layers[0].weight_index(ky * k + kx, 0, ky, kx)] = 1.0;
    m.d_max = d_max;
    return m;
}

FeatureMap l2_normalized(FeatureMap f) {
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x) {
            double n = 0.0;
            for (int c = 0; c < f.dim; ++c) n += f.at(c, x, y) * f.at(c, x, y);
            n = std::sqrt(n);
            if (n > 0)
                for (int c = 0; c < f.dim; ++c) f.at(c, x, y) /= n;
        }
    return f;
}

int argmin_at(const CostVolume& v, int x, int y) {
    int best = 0;
    for (int d = 1; d < v.d_max; ++d)
        if (v.at(x, y, d) < v.at(x, y, best)) best = d;
    return best;
}

}  // namespace

TEST_CASE("identity 1x1 kernel reproduces the input") {
    UnaryModel m = single_layer(1, 1, 1, Activation::none);
    m.layers[0].weight[0] = 1.0;
    std::mt19937_64 rng(1);
    const Image img = oracle::random_image(9, 6, 1, rng);
    const FeatureMap f = extract_features(img, m);
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 9; ++x) CHECK(f.at(0, x, y) == img.at(x, y));
}

TEST_CASE("zero parameters with tanh give zero features") {
    UnaryModel m = single_layer(4, 3, 3, Activation::tanh);
    std::mt19937_64 rng(2);
    const FeatureMap f = extract_features(oracle::random_image(7, 5, 3, rng), m);
    for (double v : f.data) CHECK(v == 0.0);
}

TEST_CASE("3x3 averaging of a constant image with zero padding") {
    UnaryModel m = single_layer(1, 1, 3, Activation::none);
    for (double& w : m.layers[0].weight) w = 1.0 / 9.0;
    const FeatureMap f = extract_features(Image(6, 5, 1, 0.9), m);
    CHECK(f.at(0, 2, 2) == doctest::Approx(0.9));
    CHECK(f.at(0, 0, 0) == doctest::Approx(0.9 * 4 / 9));
    CHECK(f.at(0, 3, 0) == doctest::Approx(0.9 * 6 / 9));
    CHECK(f.at(0, 0, 2) == doctest::Approx(0.9 * 6 / 9));
    CHECK(f.at(0, 5, 4) == doctest::Approx(0.9 * 4 / 9));
}

TEST_CASE("channel mismatch is rejected") {
    UnaryModel m = single_layer(2, 3, 3, Activation::none);
    CHECK_THROWS_AS(extract_features(Image(5, 5, 1), m), UsageError);
}

TEST_CASE("distinct unit features self-match at zero disparity") {
    FeatureMap f(12, 3, 2);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 12; ++x) {
            const double a = 0.23 * x + 0.71 * y;
            f.at(0, x, y) = std::cos(a);
            f.at(1, x, y) = std::sin(a);
        }
    const CostVolume v = build_cost_volume(f, f, 6);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 12; ++x) CHECK(argmin_at(v, x, y) == 0);
}

TEST_CASE("normalized patch features recover a constant disparity of 3") {
    CorpusSpec spec;
    spec.width = 48;
    spec.height = 16;
    spec.d_max = 8;
    spec.noise_sigma = 0.0;
    const SceneLayout layout{{0, 0, spec.width, spec.height, 3.0, 0.0, 0.0}};
    const SyntheticScene scene = render_scene(spec, layout, 31);
    const UnaryModel m = patch_model(3, spec.d_max);
    const FeatureMap fl = l2_normalized(extract_features(scene.pair.left, m));
    const FeatureMap fr = l2_normalized(extract_features(scene.pair.right, m));
    const CostVolume v = build_cost_volume(fl, fr, spec.d_max);
    // Interior pixels whose 3x3 match lies fully inside the warped region.
    for (int y = 1; y < spec.height - 1; ++y)
        for (int x = 4; x < spec.width - 1; ++x) CHECK(argmin_at(v, x, y) == 3);
}

TEST_CASE("zero features give an all-zero volume") {
    const FeatureMap z(10, 4, 3);
    const CostVolume v = build_cost_volume(z, z, 5);
    for (double c : v.cost) CHECK(c == 0.0);
    CHECK_THROWS_AS(build_cost_volume(z, z, 11), UsageError);
    CHECK_THROWS_AS(build_cost_volume(z, FeatureMap(10, 5, 3), 4), UsageError);
}

TEST_CASE("out-of-bounds entries copy the worst in-bounds cost") {
    std::mt19937_64 rng(5);
    const FeatureMap fl = [&] {
        FeatureMap f(9, 3, 4);
        std::normal_distribution<double> n;
        for (double& v : f.data) v = n(rng);
        return f;
    }();
    FeatureMap fr = fl;
    for (double& v : fr.data) v = -0.5 * v + 0.1;
    const CostVolume v = build_cost_volume(fl, fr, 6);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 9; ++x) {
            double worst = -1e300;
            for (int d = 0; d <= std::min(x, 5); ++d) {
                double dot = 0.0;
                for (int c = 0; c < 4; ++c) dot += fl.at(c, x, y) * fr.at(c, x - d, y);
                CHECK(v.at(x, y, d) == doctest::Approx(-dot).epsilon(1e-12));
                worst = std::max(worst, -dot);
            }
            for (int d = x + 1; d < 6; ++d) CHECK(v.at(x, y, d) == doctest::Approx(worst).epsilon(1e-12));
            const int wi = worst_in_bounds(v, x, y);
            CHECK(wi <= x);
            CHECK(v.at(x, y, wi) == doctest::Approx(worst).epsilon(1e-12));
        }
}

TEST_CASE("right-reference volume transposes the left one on in-bounds entries") {
    std::mt19937_64 rng(6);
    FeatureMap fl(11, 4, 3), fr(11, 4, 3);
    std::normal_distribution<double> n;
    for (double& v : fl.data) v = n(rng);
    for (double& v : fr.data) v = n(rng);
    const CostVolume left = build_cost_volume(fl, fr, 5);
    const CostVolume right = build_right_cost_volume(fl, fr, 5);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 11; ++x)
            for (int d = 0; d < 5; ++d) {
                if (x + d < 11) CHECK(right.at(x, y, d) == doctest::Approx(left.at(x + d, y, d)).epsilon(1e-12));
            }
}

TEST_CASE("census costs") {
    std::mt19937_64 rng(8);
    const Image a = oracle::random_image(20, 9, 1, rng);
    const CostVolume same = census_cost_volume({a, a}, 5, 6);
    for (int y = 0; y < 9; ++y)
        for (int x = 0; x < 20; ++x) CHECK(same.at(x, y, 0) == 0.0);

    const Image flat(20, 9, 1, 0.4);
    for (double c : census_cost_volume({flat, flat}, 5, 6).cost) CHECK(c == 0.0);

    const Image b = oracle::random_image(20, 9, 1, rng);
    const CostVolume v = census_cost_volume({a, b}, 5, 6);
    for (double c : v.cost) CHECK((c >= 0.0 && c <= 24.0 && c == std::floor(c)));

    // Direct Hamming distance at one in-bounds entry.
    auto bit = [&](const Image& img, int cx, int cy, int dx, int dy) {
        const int x = std::clamp(cx + dx, 0, 19), y = std::clamp(cy + dy, 0, 8);
        return img.at(x, y) < img.at(cx, cy);
    };
    int ham = 0;
    for (int dy = -2; dy <= 2; ++dy)
        for (int dx = -2; dx <= 2; ++dx)
            if (dx || dy) ham += bit(a, 10, 4, dx, dy) != bit(b, 7, 4, dx, dy);
    CHECK(v.at(10, 4, 3) == ham);

    const CostVolume r = census_cost_volume_right({a, b}, 5, 6);
    for (int y = 0; y < 9; ++y)
        for (int x = 0; x + 5 < 20; ++x)
            for (int d = 0; d < 6; ++d) CHECK(r.at(x, y, d) == v.at(x + d, y, d));

    CHECK_THROWS_AS(census_cost_volume({a, b}, 4, 6), UsageError);
    CHECK_THROWS_AS(census_cost_volume({a, b}, 11, 6), UsageError);
    CHECK(census_transform(a, 9).words_per_pixel == 2);
}

TEST_CASE("zero adjoint gives zero gradients") {
    const UnaryModel m = make_model({1, 4, 2, 3, 4}, 3);
    std::mt19937_64 rng(9);
    const ImagePair pair{oracle::random_image(10, 6, 1, rng), oracle::random_image(10, 6, 1, rng)};
    const auto [cost, grads] = forward_backward(pair, m, CostVolume(10, 6, 4));
    for (const auto& g : grads) {
        for (double v : g.weight) CHECK(v == 0.0);
        for (double v : g.bias) CHECK(v == 0.0);
    }
}

TEST_CASE("single-layer, single-pixel gradient matches finite differences") {
    UnaryModel m = single_layer(3, 1, 1, Activation::tanh);
    m.d_max = 1;
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> u(-1, 1);
    for (double& w : m.layers[0].weight) w = u(rng);
    for (double& b : m.layers[0].bias) b = u(rng);
    const ImagePair pair{Image(1, 1, 1, 0.7), Image(1, 1, 1, 0.2)};
    // Loss = 1.7 * cost so the adjoint is a constant.
    CostVolume adj(1, 1, 1, 1.7);
    const auto [cost, grads] = forward_backward(pair, m, adj);
    const double step = 1e-3;
    for (std::size_t i = 0; i < 6; ++i) {
        double& p = i < 3 ? m.layers[0].weight[i] : m.layers[0].bias[i - 3];
        const double analytic = i < 3 ? grads[0].weight[i] : grads[0].bias[i - 3];
        const double numeric = oracle::central_difference([&] { return 1.7 * forward(pair, m).cost.cost[0]; }, p, step);
        CHECK(std::abs(analytic - numeric) <= std::max(1e-7, 1e-4 * std::abs(numeric)));
    }
}

TEST_CASE("a bias shared by both views accumulates both paths") {
    UnaryModel m = single_layer(2, 1, 3, Activation::tanh);
    m.d_max = 3;
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (double& w : m.layers[0].weight) w = u(rng);
    m.layers[0].bias = {0.3, -0.2};
    const ImagePair pair{oracle::random_image(6, 4, 1, rng), oracle::random_image(6, 4, 1, rng)};
    const CostVolume ones(6, 4, 3, 1.0);
    const auto [cost, grads] = forward_backward(pair, m, ones);
    auto total = [&] {
        double s = 0.0;
        for (double c : forward(pair, m).cost.cost) s += c;
        return s;
    };
    for (int b = 0; b < 2; ++b) {
        const double numeric = oracle::central_difference(total, m.layers[0].bias[b], 1e-5);
        CHECK(std::abs(grads[0].bias[b] - numeric) <= std::max(1e-7, 1e-4 * std::abs(numeric)));
    }
}

TEST_CASE("random small models pass the gradient check") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 8; ++trial) {
        const auto inst = oracle::random_gradcheck_instance(rng);
        const auto r = oracle::check_loss_gradient(inst.pair, inst.model, inst.target, 1.0, 1e-5, 1e-4, 1e-7);
        CHECK(r.violations == 0);
        CHECK(r.parameters == inst.model.parameter_count());
    }
}

TEST_CASE("forward is deterministic and model init is seeded") {
    const UnaryModel a = make_model({}, 17), b = make_model({}, 17), c = make_model({}, 18);
    CHECK(a == b);
    CHECK_FALSE(a == c);
    CHECK(a.receptive_field() == 7);
    CHECK(a.layers.back().activation == Activation::none);
    CHECK(a.layers.front().activation == Activation::tanh);
    for (const auto& l : a.layers)
        for (double w : l.weight) CHECK(static_cast<double>(static_cast<float>(w)) == w);
    std::mt19937_64 rng(13);
    const ImagePair pair{oracle::random_image(40, 8, 1, rng), oracle::random_image(40, 8, 1, rng)};
    CHECK(forward(pair, a).cost == forward(pair, b).cost);
}

TEST_CASE("checkpoint round trip and byte layout") {
    const auto dir = oracle::temp_dir("ckpt");
    const UnaryModel m = make_model({3, 5, 2, 3, 12}, 21);
    save_checkpoint(m, dir / "m.bin");
    CHECK(load_checkpoint(dir / "m.bin") == m);
    CHECK(load_checkpoint(dir / "m.bin", ModelSpec{3, 5, 2, 3, 12}) == m);

    std::ifstream in(dir / "m.bin", std::ios::binary);
    const std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in), {}};
    const std::size_t params = m.parameter_count();
    CHECK(bytes.size() == 16 + 16 * 2 + 4 * params);
    CHECK(std::memcmp(bytes.data(), "SSTM", 4) == 0);
    auto u32 = [&](std::size_t off) {
        return static_cast<std::uint32_t>(bytes[off]) | static_cast<std::uint32_t>(bytes[off + 1]) << 8 |
               static_cast<std::uint32_t>(bytes[off + 2]) << 16 | static_cast<std::uint32_t>(bytes[off + 3]) << 24;
    };
    CHECK(u32(4) == 1);
    CHECK(u32(8) == 12);
    CHECK(u32(12) == 2);
    CHECK(u32(16) == 5);
    CHECK(u32(20) == 3);
    CHECK(u32(24) == 3);
    CHECK(u32(28) == 1);
    CHECK(u32(44) == 0);
    float first = 0;
    const std::uint32_t raw = u32(48);
    std::memcpy(&first, &raw, 4);
    CHECK(static_cast<double>(first) == m.layers[0].weight[0]);
}

TEST_CASE("checkpoint errors") {
    const auto dir = oracle::temp_dir("ckpt_err");
    const UnaryModel m = make_model({1, 4, 2, 3, 8}, 1);
    save_checkpoint(m, dir / "m.bin");

    std::vector<char> bytes;
    {
        std::ifstream in(dir / "m.bin", std::ios::binary);
        bytes.assign(std::istreambuf_iterator<char>(in), {});
    }
    auto write = [&](const std::string& name, const std::vector<char>& b) {
        std::ofstream out(dir / name, std::ios::binary);
        out.write(b.data(), static_cast<std::streamsize>(b.size()));
    };
    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    write("magic.bin", bad_magic);
    auto bad_version = bytes;
    bad_version[4] = 2;
    write("version.bin", bad_version);
    write("short.bin", std::vector<char>(bytes.begin(), bytes.end() - 3));

    auto message = [&](const std::string& name) {
        try {
            load_checkpoint(dir / name);
        } catch (const DataError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    CHECK(message("magic.bin").find("checkpoint version mismatch") != std::string::npos);
    CHECK(message("version.bin").find("checkpoint version mismatch") != std::string::npos);
    CHECK_THROWS_AS(load_checkpoint(dir / "short.bin"), DataError);
    CHECK_THROWS_AS(load_checkpoint(dir / "missing.bin"), DataError);
    try {
        load_checkpoint(dir / "m.bin", ModelSpec{1, 4, 3, 3, 8});
        FAIL("expected a mismatch");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("model/architecture mismatch with checkpoint header") != std::string::npos);
    }
}
