#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "selfstereo/disparity_map.hpp"
#include "selfstereo/image.hpp"

namespace selfstereo {

enum class TextureStyle { random_dot, smooth_noise, blocks };
enum class DomainShift { none, channel_swap, noise_boost, contrast_shift };

std::string to_string(TextureStyle style);
std::string to_string(DomainShift shift);
TextureStyle parse_texture_style(const std::string& name);
DomainShift parse_domain_shift(const std::string& name);

struct CorpusSpec {
    int n_pairs = 20;
    int width = 256;
    int height = 128;
    int channels = 1;
    int d_max = 32;
    double noise_sigma = 0.02;
    TextureStyle texture = TextureStyle::random_dot;
    DomainShift domain_shift = DomainShift::none;
    int min_objects = 3;
    int max_objects = 8;
    bool slanted = true;

    void validate() const;
};

/// A planar disparity patch over the rectangle [x0,x1) x [y0,y1):
/// d(x, y) = round(base + grad_x * (x - x0) + grad_y * (y - y0)), clamped to
/// [0, d_max).
struct PlanarPatch {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    double base = 0.0;
    double grad_x = 0.0;
    double grad_y = 0.0;

    int disparity_at(int x, int y, int d_max) const;
};

/// Patches are painted in order onto the left view; the first patch should
/// cover the whole image (the ground).
using SceneLayout = std::vector<PlanarPatch>;

struct SyntheticScene {
    ImagePair pair;
    DisparityMap gt_left;   // invalid where occluded; values kept for inspection
    DisparityMap gt_right;  // invalid where no left pixel projects
    std::vector<std::uint8_t> occlusion_left;   // 1 = visible in the left view only
    std::vector<std::uint8_t> occlusion_right;  // 1 = visible in the right view only
    std::uint64_t rng_seed = 0;

    bool operator==(const SyntheticScene&) const = default;
};

/// Noise sigma after applying the domain shift (noise-boost triples it).
double effective_noise_sigma(const CorpusSpec& spec);

SceneLayout random_layout(const CorpusSpec& spec, std::uint64_t seed);

/// Renders the layout: textures the left view, forward-warps it into the right
/// view with a z-buffer (larger disparity wins), fills right-only pixels with
/// fresh texture, applies the domain shift and per-view Gaussian noise.
SyntheticScene render_scene(const CorpusSpec& spec, const SceneLayout& layout, std::uint64_t seed);

SyntheticScene generate_scene(const CorpusSpec& spec, std::uint64_t seed);

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

std::vector<SyntheticScene> generate_corpus(const CorpusSpec& spec, std::uint64_t seed);

// ---- on-disk corpus ---------------------------------------------------------

struct ManifestEntry {
    std::string id;
    std::uint64_t seed = 0;
    std::filesystem::path left, right;
    std::optional<std::filesystem::path> gt_left, gt_right, occ_left, occ_right;
};

struct Manifest {
    std::vector<std::string> header;  // "key=value" lines describing the generator
    std::vector<ManifestEntry> entries;
};

/// Writes views as 16-bit PGM/PPM/PNG (by channel count), GT as PFM, occlusion
/// masks as PGM and a plain-text manifest.txt. Creates the directory.
std::filesystem::path write_corpus(const std::filesystem::path& dir, const CorpusSpec& spec,
                                   std::uint64_t seed, const std::vector<SyntheticScene>& scenes);

/// Paths in the returned entries are resolved against the manifest directory.
Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);

struct CorpusItem {
    std::string id;
    ImagePair pair;
};

std::vector<CorpusItem> load_corpus_pairs(const Manifest& manifest);

/// Left-reference ground truth for each entry (throws if an entry has none).
std::vector<DisparityMap> load_corpus_references(const Manifest& manifest);

}  // namespace selfstereo
