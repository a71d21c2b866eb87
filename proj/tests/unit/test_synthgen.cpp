#include <cmath>
#include <fstream>

#include "doctest.h"
#include "oracles.hpp"
#include "selfstereo/error.hpp"
#include "selfstereo/image_io.hpp"
#include "selfstereo/synthgen.hpp"

using namespace selfstereo;

namespace {

CorpusSpec small_spec() {
    CorpusSpec spec;
    spec.width = 96;
    spec.height = 40;
    spec.d_max = 16;
    return spec;
}

// Mutual consistency and occlusion bookkeeping checked pixel by pixel.
void check_scene_invariants(const SyntheticScene& s) {
    const int w = s.gt_left.width, h = s.gt_left.height;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const auto i = s.gt_left.index(x, y);
            CHECK(s.gt_left.is_valid(x, y) == (s.occlusion_left[i] == 0));
            CHECK(s.gt_right.is_valid(x, y) == (s.occlusion_right[i] == 0));
            if (!s.gt_left.is_valid(x, y)) continue;
            const double d = s.gt_left.at(x, y);
            REQUIRE(d == std::floor(d));
            const int xr = x - static_cast<int>(d);
            REQUIRE(xr >= 0);
            REQUIRE(s.gt_right.is_valid(xr, y));
            CHECK(s.gt_right.at(xr, y) == d);
        }
}

}  // namespace

TEST_CASE("ground plane at zero disparity gives identical views") {
    CorpusSpec spec = small_spec();
    spec.noise_sigma = 0.0;
    const SceneLayout layout{{0, 0, spec.width, spec.height, 0.0, 0.0, 0.0}};
    const SyntheticScene s = render_scene(spec, layout, 4);
    CHECK(s.pair.left == s.pair.right);
    for (double d : s.gt_left.disparity) CHECK(d == 0.0);
    CHECK(s.gt_left.valid_count() == s.gt_left.pixel_count());
    CHECK(s.gt_right.valid_count() == s.gt_right.pixel_count());
    for (auto o : s.occlusion_left) CHECK(o == 0);
    for (auto o : s.occlusion_right) CHECK(o == 0);
}

TEST_CASE("a rectangle at disparity 5 over a zero plane leaves 5-wide occlusion bands") {
    CorpusSpec spec = small_spec();
    spec.noise_sigma = 0.0;
    const int x0 = 30, x1 = 60, y0 = 10, y1 = 25;
    const SceneLayout layout{{0, 0, spec.width, spec.height, 0.0, 0.0, 0.0}, {x0, y0, x1, y1, 5.0, 0.0, 0.0}};
    const SyntheticScene s = render_scene(spec, layout, 8);
    check_scene_invariants(s);
    for (int y = 0; y < spec.height; ++y)
        for (int x = 0; x < spec.width; ++x) {
            const auto i = s.gt_left.index(x, y);
            const bool row_hit = y >= y0 && y < y1;
            // Background just left of the box is hidden by it in the right view.
            CHECK(s.occlusion_left[i] == (row_hit && x >= x0 - 5 && x < x0 ? 1 : 0));
            // Right-view background uncovered by the shifted box.
            CHECK(s.occlusion_right[i] == (row_hit && x >= x1 - 5 && x < x1 ? 1 : 0));
        }
    // Warped texture: the box appears 5 columns to the left in the right view.
    for (int x = x0; x < x1; ++x) CHECK(s.pair.right.at(x - 5, 12) == s.pair.left.at(x, 12));
}

TEST_CASE("scene generation is deterministic") {
    CorpusSpec spec = small_spec();
    spec.channels = 3;
    CHECK(generate_scene(spec, 42) == generate_scene(spec, 42));
    CHECK_FALSE(generate_scene(spec, 42) == generate_scene(spec, 43));
}

TEST_CASE("corpus scenes satisfy mutual consistency and have occlusions") {
    for (TextureStyle tex : {TextureStyle::random_dot, TextureStyle::smooth_noise, TextureStyle::blocks}) {
        CorpusSpec spec = small_spec();
        spec.texture = tex;
        spec.n_pairs = 20;
        const auto scenes = generate_corpus(spec, 77);
        REQUIRE(scenes.size() == 20);
        for (std::size_t k = 0; k < scenes.size(); ++k) {
            const SyntheticScene& s = scenes[k];
            CHECK(s.rng_seed == derive_seed(77, k));
            check_scene_invariants(s);
            bool distinct = false;
            for (double d : s.gt_left.disparity) distinct |= d != s.gt_left.disparity[0];
            if (distinct) CHECK(s.gt_left.valid_count() < s.gt_left.pixel_count());
            for (double v : s.pair.left.data) REQUIRE((v >= 0.0 && v <= 1.0));
            for (double v : s.pair.right.data) REQUIRE((v >= 0.0 && v <= 1.0));
        }
    }
}

TEST_CASE("empty corpus") {
    CorpusSpec spec = small_spec();
    spec.n_pairs = 0;
    const auto scenes = generate_corpus(spec, 1);
    CHECK(scenes.empty());
    const auto dir = oracle::temp_dir("empty_corpus");
    const auto manifest_path = write_corpus(dir / "c", spec, 1, scenes);
    const Manifest m = read_manifest(manifest_path);
    CHECK(m.entries.empty());
    CHECK_FALSE(m.header.empty());
}

TEST_CASE("CorpusSpec validation") {
    CorpusSpec spec = small_spec();
    spec.d_max = spec.width;
    CHECK_THROWS_AS(generate_scene(spec, 1), UsageError);
    spec = small_spec();
    spec.d_max = 1;
    CHECK_THROWS_AS(spec.validate(), UsageError);
    spec = small_spec();
    spec.noise_sigma = -0.1;
    CHECK_THROWS_AS(spec.validate(), UsageError);
    CHECK_THROWS_AS(parse_texture_style("plaid"), UsageError);
    CHECK_THROWS_AS(parse_domain_shift("sepia"), UsageError);
    for (auto t : {TextureStyle::random_dot, TextureStyle::smooth_noise, TextureStyle::blocks})
        CHECK(parse_texture_style(to_string(t)) == t);
    for (auto d : {DomainShift::none, DomainShift::channel_swap, DomainShift::noise_boost, DomainShift::contrast_shift})
        CHECK(parse_domain_shift(to_string(d)) == d);
}

TEST_CASE("noise-boost triples the noise level") {
    CorpusSpec spec = small_spec();
    spec.texture = TextureStyle::smooth_noise;
    spec.noise_sigma = 0.02;
    spec.domain_shift = DomainShift::noise_boost;
    CHECK(effective_noise_sigma(spec) == doctest::Approx(0.06));

    CorpusSpec clean = spec;
    clean.noise_sigma = 0.0;
    const SceneLayout layout = random_layout(spec, 3);
    const SyntheticScene a = render_scene(clean, layout, 3);
    const SyntheticScene b = render_scene(spec, layout, 3);
    double sum = 0.0, sq = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < a.pair.left.data.size(); ++i) {
        const double v = a.pair.left.data[i];
        if (v < 0.3 || v > 0.7) continue;  // away from clamping
        const double e = b.pair.left.data[i] - v;
        sum += e;
        sq += e * e;
        ++n;
    }
    REQUIRE(n > 500);
    const double mean = sum / n;
    const double sd = std::sqrt(sq / n - mean * mean);
    CHECK(sd == doctest::Approx(0.06).epsilon(0.1));
}

TEST_CASE("photometric shifts") {
    CorpusSpec spec = small_spec();
    spec.noise_sigma = 0.0;
    const SceneLayout layout = random_layout(spec, 5);
    const SyntheticScene base = render_scene(spec, layout, 5);

    CorpusSpec swap = spec;
    swap.domain_shift = DomainShift::channel_swap;
    const SyntheticScene inv = render_scene(swap, layout, 5);
    for (std::size_t i = 0; i < base.pair.left.data.size(); ++i)
        CHECK(inv.pair.left.data[i] == doctest::Approx(1.0 - base.pair.left.data[i]));
    CHECK(inv.gt_left == base.gt_left);

    CorpusSpec rgb = spec;
    rgb.channels = 3;
    CorpusSpec rgb_swap = rgb;
    rgb_swap.domain_shift = DomainShift::channel_swap;
    const SyntheticScene c0 = render_scene(rgb, layout, 5);
    const SyntheticScene c1 = render_scene(rgb_swap, layout, 5);
    for (int y = 0; y < spec.height; y += 7)
        for (int x = 0; x < spec.width; x += 5) {
            CHECK(c1.pair.right.at(x, y, 0) == c0.pair.right.at(x, y, 2));
            CHECK(c1.pair.right.at(x, y, 2) == c0.pair.right.at(x, y, 0));
        }

    CorpusSpec contrast = spec;
    contrast.domain_shift = DomainShift::contrast_shift;
    const SyntheticScene cs = render_scene(contrast, layout, 5);
    for (std::size_t i = 0; i < base.pair.left.data.size(); i += 13) {
        CHECK(cs.pair.left.data[i] == doctest::Approx(0.2 + 0.6 * std::pow(base.pair.left.data[i], 1.5)));
        CHECK(cs.pair.right.data[i] == doctest::Approx(0.3 + 0.45 * std::pow(base.pair.right.data[i], 1.5)));
    }
}

TEST_CASE("corpus round trip through disk") {
    CorpusSpec spec = small_spec();
    spec.n_pairs = 3;
    spec.channels = 3;
    const auto scenes = generate_corpus(spec, 19);
    const auto dir = oracle::temp_dir("corpus_rt");
    const auto path = write_corpus(dir / "nested" / "corpus", spec, 19, scenes);
    const Manifest m = read_manifest(path);
    REQUIRE(m.entries.size() == 3);
    const auto items = load_corpus_pairs(m);
    const auto refs = load_corpus_references(m);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(m.entries[k].seed == scenes[k].rng_seed);
        // Views are stored at 16 bits; compare at that quantization.
        for (std::size_t i = 0; i < scenes[k].pair.left.data.size(); ++i)
            CHECK(std::abs(items[k].pair.left.data[i] - scenes[k].pair.left.data[i]) <= 0.5 / 65535 + 1e-12);
        CHECK(refs[k].valid == scenes[k].gt_left.valid);
        for (std::size_t i = 0; i < refs[k].pixel_count(); ++i)
            if (refs[k].valid[i]) CHECK(refs[k].disparity[i] == scenes[k].gt_left.disparity[i]);
        const DisparityMap right = load_pfm(*m.entries[k].gt_right);
        CHECK(right.valid == scenes[k].gt_right.valid);
        const Image occ = load_image(*m.entries[k].occ_left);
        for (std::size_t i = 0; i < occ.data.size(); ++i) CHECK((occ.data[i] > 0.5) == (scenes[k].occlusion_left[i] == 1));
    }
    // Writing the same corpus twice gives identical bytes.
    const auto again = write_corpus(dir / "again", spec, 19, scenes);
    for (const auto& name : {"manifest.txt"}) {
        std::ifstream a(path.parent_path() / name), b(again.parent_path() / name);
        std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
        CHECK(sa == sb);
    }
}

TEST_CASE("manifest errors") {
    const auto dir = oracle::temp_dir("manifest_err");
    CHECK_THROWS_AS(read_manifest(dir / "manifest.txt"), DataError);
    {
        std::ofstream out(dir / "manifest.txt");
        out << "garbage line without fields\n";
    }
    CHECK_THROWS_AS(read_manifest(dir / "manifest.txt"), DataError);
}
