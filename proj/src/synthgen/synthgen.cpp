#include "selfstereo/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "selfstereo/error.hpp"

namespace selfstereo {
namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int uniform_int(Rng& rng, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

// Single-channel texture field of the requested style, values in [0,1].
std::vector<double> texture_field(TextureStyle style, int w, int h, Rng& rng) {
    std::vector<double> out(static_cast<std::size_t>(w) * h, 0.0);
    switch (style) {
        case TextureStyle::random_dot:
            for (double& v : out) v = uniform(rng);
            break;
        case TextureStyle::blocks: {
            constexpr int kCell = 4;
            const int cw = (w + kCell - 1) / kCell;
            const int ch = (h + kCell - 1) / kCell;
            std::vector<double> cells(static_cast<std::size_t>(cw) * ch);
            for (double& v : cells) v = uniform(rng);
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    out[static_cast<std::size_t>(y) * w + x] = cells[(y / kCell) * cw + x / kCell];
            break;
        }
        case TextureStyle::smooth_noise: {
            // value noise: bilinearly interpolated random lattices
            constexpr int kCells[] = {8, 4, 2};
            constexpr double kAmp[] = {0.5, 0.3, 0.2};
            for (int o = 0; o < 3; ++o) {
                const int s = kCells[o];
                const int gw = w / s + 2;
                const int gh = h / s + 2;
                std::vector<double> lattice(static_cast<std::size_t>(gw) * gh);
                for (double& v : lattice) v = uniform(rng);
                for (int y = 0; y < h; ++y) {
                    const int gy = y / s;
                    const double fy = static_cast<double>(y % s) / s;
                    for (int x = 0; x < w; ++x) {
                        const int gx = x / s;
                        const double fx = static_cast<double>(x % s) / s;
                        const double a = lattice[gy * gw + gx];
                        const double b = lattice[gy * gw + gx + 1];
                        const double c = lattice[(gy + 1) * gw + gx];
                        const double d = lattice[(gy + 1) * gw + gx + 1];
                        const double v = (a * (1 - fx) + b * fx) * (1 - fy) + (c * (1 - fx) + d * fx) * fy;
                        out[static_cast<std::size_t>(y) * w + x] += kAmp[o] * v;
                    }
                }
            }
            // value noise concentrates around 0.5; stretch to use the range
            for (double& v : out) v = std::clamp(0.5 + 2.0 * (v - 0.5), 0.0, 1.0);
            break;
        }
    }
    return out;
}

Image texture_image(TextureStyle style, int w, int h, int channels, Rng& rng) {
    Image image(w, h, channels);
    const auto base = texture_field(style, w, h, rng);
    if (channels == 1) {
        image.data = base;
        return image;
    }
    for (int c = 0; c < channels; ++c) {
        const auto own = texture_field(style, w, h, rng);
        for (std::size_t i = 0; i < base.size(); ++i)
            image.data[i * channels + c] = 0.6 * base[i] + 0.4 * own[i];
    }
    return image;
}

void apply_photometric_shift(Image& image, DomainShift shift, bool right_view) {
    switch (shift) {
        case DomainShift::none:
        case DomainShift::noise_boost:
            return;
        case DomainShift::channel_swap:
            if (image.channels == 1) {
                for (double& v : image.data) v = 1.0 - v;
            } else {
                for (std::size_t p = 0; p < image.pixel_count(); ++p)
                    std::reverse(image.data.begin() + p * image.channels,
                                 image.data.begin() + (p + 1) * image.channels);
            }
            return;
        case DomainShift::contrast_shift: {
            // compressed, gamma-distorted response with a view-dependent gain
            const double gain = right_view ? 0.45 : 0.6;
            const double offset = right_view ? 0.3 : 0.2;
            for (double& v : image.data) v = offset + gain * std::pow(v, 1.5);
            return;
        }
    }
}

void add_noise(Image& image, double sigma, Rng& rng) {
    std::normal_distribution<double> noise(0.0, sigma > 0.0 ? sigma : 1.0);
    for (double& v : image.data) {
        const double n = noise(rng);
        if (sigma > 0.0) v = std::clamp(v + n, 0.0, 1.0);
    }
}

}  // namespace

std::string to_string(TextureStyle style) {
    switch (style) {
        case TextureStyle::random_dot: return "random-dot";
        case TextureStyle::smooth_noise: return "smooth-noise";
        case TextureStyle::blocks: return "blocks";
    }
    return "?";
}

std::string to_string(DomainShift shift) {
    switch (shift) {
        case DomainShift::none: return "none";
        case DomainShift::channel_swap: return "channel-swap";
        case DomainShift::noise_boost: return "noise-boost";
        case DomainShift::contrast_shift: return "contrast-shift";
    }
    return "?";
}

TextureStyle parse_texture_style(const std::string& name) {
    if (name == "random-dot") return TextureStyle::random_dot;
    if (name == "smooth-noise") return TextureStyle::smooth_noise;
    if (name == "blocks") return TextureStyle::blocks;
    throw UsageError("unknown texture style '" + name + "'");
}

DomainShift parse_domain_shift(const std::string& name) {
    if (name == "none") return DomainShift::none;
    if (name == "channel-swap") return DomainShift::channel_swap;
    if (name == "noise-boost") return DomainShift::noise_boost;
    if (name == "contrast-shift") return DomainShift::contrast_shift;
    throw UsageError("unknown domain shift '" + name + "'");
}

void CorpusSpec::validate() const {
    if (n_pairs < 0) throw UsageError("n_pairs must be non-negative");
    if (width < 2 || height < 2) throw UsageError("corpus images must be at least 2x2");
    if (channels < 1 || channels > 4) throw UsageError("channels must be in 1..4");
    if (d_max < 2) throw UsageError("d_max must be at least 2");
    if (d_max >= width) throw UsageError("d_max must be smaller than the image width");
    if (!(noise_sigma >= 0.0)) throw UsageError("noise_sigma must be non-negative");
    if (min_objects < 0 || max_objects < min_objects)
        throw UsageError("object count range is invalid");
}

int PlanarPatch::disparity_at(int x, int y, int d_max) const {
    const double d = base + grad_x * (x - x0) + grad_y * (y - y0);
    return std::clamp(static_cast<int>(std::lround(d)), 0, d_max - 1);
}

double effective_noise_sigma(const CorpusSpec& spec) {
    return spec.domain_shift == DomainShift::noise_boost ? 3.0 * spec.noise_sigma : spec.noise_sigma;
}

SceneLayout random_layout(const CorpusSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(seed);
    const int w = spec.width;
    const int h = spec.height;
    const double top = uniform(rng, 0.0, spec.d_max / 4.0);
    const double bottom = spec.slanted ? uniform(rng, top, spec.d_max / 3.0) : top;

    SceneLayout layout;
    layout.push_back({0, 0, w, h, top, 0.0, h > 1 ? (bottom - top) / (h - 1) : 0.0});

    const int n = uniform_int(rng, spec.min_objects, spec.max_objects);
    std::vector<PlanarPatch> objects;
    for (int i = 0; i < n; ++i) {
        const int ow = uniform_int(rng, std::max(2, w / 12), std::max(2, w / 4));
        const int oh = uniform_int(rng, std::max(2, h / 8), std::max(2, h / 3));
        const int ox = uniform_int(rng, 0, w - ow);
        const int oy = uniform_int(rng, 0, h - oh);
        const double ground = top + (bottom - top) * (oy + 0.5 * oh) / std::max(1, h - 1);
        const double lift = uniform(rng, 3.0, std::max(3.0, spec.d_max - 1.0 - ground));
        PlanarPatch p{ox, oy, ox + ow, oy + oh, ground + lift, 0.0, 0.0};
        if (spec.slanted && uniform(rng) < 0.5) {
            p.grad_x = uniform(rng, -0.05, 0.05);
            p.grad_y = uniform(rng, -0.05, 0.05);
        }
        objects.push_back(p);
    }
    std::stable_sort(objects.begin(), objects.end(),
                     [](const PlanarPatch& a, const PlanarPatch& b) { return a.base < b.base; });
    layout.insert(layout.end(), objects.begin(), objects.end());
    return layout;
}

SyntheticScene render_scene(const CorpusSpec& spec, const SceneLayout& layout, std::uint64_t seed) {
    spec.validate();
    const int w = spec.width;
    const int h = spec.height;
    Rng rng(seed ^ 0xA5A5A5A5DEADBEEFULL);

    std::vector<int> disp(static_cast<std::size_t>(w) * h, 0);
    for (const PlanarPatch& p : layout)
        for (int y = std::max(0, p.y0); y < std::min(h, p.y1); ++y)
            for (int x = std::max(0, p.x0); x < std::min(w, p.x1); ++x)
                disp[static_cast<std::size_t>(y) * w + x] = p.disparity_at(x, y, spec.d_max);

    const Image left_tex = texture_image(spec.texture, w, h, spec.channels, rng);
    const Image fresh_tex = texture_image(spec.texture, w, h, spec.channels, rng);

    SyntheticScene scene;
    scene.rng_seed = seed;
    scene.pair.left = left_tex;
    scene.pair.right = Image(w, h, spec.channels);
    scene.gt_left = DisparityMap(w, h, 0.0, true);
    scene.gt_right = DisparityMap(w, h, 0.0, false);
    scene.occlusion_left.assign(disp.size(), 0);
    scene.occlusion_right.assign(disp.size(), 0);

    std::vector<int> zbuf(static_cast<std::size_t>(w));
    std::vector<int> source(static_cast<std::size_t>(w));
    for (int y = 0; y < h; ++y) {
        std::fill(zbuf.begin(), zbuf.end(), -1);
        for (int x = 0; x < w; ++x) {
            const int d = disp[static_cast<std::size_t>(y) * w + x];
            const int xr = x - d;
            if (xr >= 0 && d > zbuf[xr]) {
                zbuf[xr] = d;
                source[xr] = x;
            }
        }
        for (int x = 0; x < w; ++x) {
            const auto i = static_cast<std::size_t>(y) * w + x;
            const int d = disp[i];
            const int xr = x - d;
            const bool visible = xr >= 0 && zbuf[xr] == d;
            scene.gt_left.disparity[i] = d;
            scene.gt_left.valid[i] = visible ? 1 : 0;
            scene.occlusion_left[i] = visible ? 0 : 1;
        }
        for (int xr = 0; xr < w; ++xr) {
            const auto i = static_cast<std::size_t>(y) * w + xr;
            if (zbuf[xr] >= 0) {
                scene.gt_right.disparity[i] = zbuf[xr];
                scene.gt_right.valid[i] = 1;
                for (int c = 0; c < spec.channels; ++c)
                    scene.pair.right.at(xr, y, c) = left_tex.at(source[xr], y, c);
            } else {
                scene.occlusion_right[i] = 1;
                for (int c = 0; c < spec.channels; ++c)
                    scene.pair.right.at(xr, y, c) = fresh_tex.at(xr, y, c);
            }
        }
    }

    apply_photometric_shift(scene.pair.left, spec.domain_shift, false);
    apply_photometric_shift(scene.pair.right, spec.domain_shift, true);
    const double sigma = effective_noise_sigma(spec);
    add_noise(scene.pair.left, sigma, rng);
    add_noise(scene.pair.right, sigma, rng);
    return scene;
}

SyntheticScene generate_scene(const CorpusSpec& spec, std::uint64_t seed) {
    return render_scene(spec, random_layout(spec, seed), seed);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    // splitmix64 finalizer over (seed, index)
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::vector<SyntheticScene> generate_corpus(const CorpusSpec& spec, std::uint64_t seed) {
    spec.validate();
    std::vector<SyntheticScene> scenes;
    scenes.reserve(static_cast<std::size_t>(spec.n_pairs));
    for (int i = 0; i < spec.n_pairs; ++i) scenes.push_back(generate_scene(spec, derive_seed(seed, i)));
    return scenes;
}

}  // namespace selfstereo
