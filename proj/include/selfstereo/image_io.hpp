#pragma once

#include <filesystem>

#include "selfstereo/disparity_map.hpp"
#include "selfstereo/image.hpp"

namespace selfstereo {

enum class BitDepth { k8 = 8, k16 = 16 };

/// Reads PGM (P2/P5), PPM (P3/P6) or PNG (8/16-bit). Samples are divided by
/// the file's maximum sample value.
Image load_image(const std::filesystem::path& path);

/// Format is chosen by extension (.pgm, .ppm, .png). Samples are quantized as
/// round(v * maxval) with maxval 255 or 65535.
void save_image(const Image& image, const std::filesystem::path& path,
                BitDepth depth = BitDepth::k8);

/// Middlebury PFM ("Pf", scale -1 => little-endian, rows stored bottom-up).
/// Invalid pixels are written as +infinity and any non-finite value reads back
/// as invalid.
DisparityMap load_pfm(const std::filesystem::path& path);
void save_pfm(const DisparityMap& map, const std::filesystem::path& path);

/// Validity mask as 8-bit PGM: 255 valid, 0 invalid.
void save_mask(const DisparityMap& map, const std::filesystem::path& path);

/// Cold-to-warm color coding of valid disparities in [0, d_max); invalid
/// pixels are black.
Image colorize_disparity(const DisparityMap& map, double d_max);

}  // namespace selfstereo
