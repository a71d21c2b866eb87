#pragma once

#include <string>
#include <vector>

#include "selfstereo/disparity_map.hpp"
#include "selfstereo/image.hpp"

namespace selfstereo {

struct TilingConfig {
    int tile_h = 128;
    int tile_w = 128;
    int overlap = 32;
    int d_max = 32;
};

struct Tile {
    std::string source_id;
    int row = 0;  // origin in the source image
    int col = 0;
    ImagePair pair;
};

/// Tile origins along one axis: stride (tile - overlap), with the last tile
/// flush against the far edge. A length no larger than the tile gives {0}.
std::vector<int> tile_origins(int length, int tile, int overlap);

/// Covers the pair with overlapping tiles. Requires overlap >= d_max and
/// tile dimensions > 2 * overlap (unless the image fits in one tile).
std::vector<Tile> tile_pair(const ImagePair& pair, const TilingConfig& cfg,
                            const std::string& source_id = {});

/// Reassembles per-tile disparity maps; each output pixel comes from the tile
/// whose center is nearest (first tile on ties).
DisparityMap stitch_tiles(const std::vector<Tile>& tiles,
                          const std::vector<DisparityMap>& maps, int width, int height);

}  // namespace selfstereo
