#include "selfstereo/tiling.hpp"

#include <limits>

#include "selfstereo/error.hpp"

namespace selfstereo {

std::vector<int> tile_origins(int length, int tile, int overlap) {
    if (length <= tile) return {0};
    const int stride = tile - overlap;
    std::vector<int> origins;
    int pos = 0;
    while (true) {
        if (pos + tile >= length) {
            origins.push_back(length - tile);
            break;
        }
        origins.push_back(pos);
        pos += stride;
    }
    return origins;
}

std::vector<Tile> tile_pair(const ImagePair& pair, const TilingConfig& cfg,
                            const std::string& source_id) {
    pair.validate();
    if (cfg.overlap < cfg.d_max)
        throw UsageError("tile overlap must be at least d_max");
    const int w = pair.width();
    const int h = pair.height();
    const bool split_x = w > cfg.tile_w;
    const bool split_y = h > cfg.tile_h;
    if ((split_x && cfg.tile_w <= 2 * cfg.overlap) || (split_y && cfg.tile_h <= 2 * cfg.overlap))
        throw UsageError("tile smaller than overlap requirement (tile > 2 * overlap)");

    std::vector<Tile> tiles;
    for (int row : tile_origins(h, cfg.tile_h, cfg.overlap)) {
        for (int col : tile_origins(w, cfg.tile_w, cfg.overlap)) {
            const int tw = split_x ? cfg.tile_w : w;
            const int th = split_y ? cfg.tile_h : h;
            tiles.push_back({source_id, row, col,
                             {crop(pair.left, col, row, tw, th), crop(pair.right, col, row, tw, th)}});
        }
    }
    return tiles;
}

DisparityMap stitch_tiles(const std::vector<Tile>& tiles, const std::vector<DisparityMap>& maps,
                          int width, int height) {
    if (tiles.size() != maps.size() || tiles.empty())
        throw UsageError("stitch_tiles: tile/map count mismatch");
    DisparityMap out(width, height, 0.0, false);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            double best = std::numeric_limits<double>::infinity();
            std::size_t chosen = tiles.size();
            for (std::size_t t = 0; t < tiles.size(); ++t) {
                const Tile& tile = tiles[t];
                const int tw = tile.pair.width();
                const int th = tile.pair.height();
                if (x < tile.col || x >= tile.col + tw || y < tile.row || y >= tile.row + th) continue;
                const double cx = tile.col + 0.5 * (tw - 1);
                const double cy = tile.row + 0.5 * (th - 1);
                const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
                if (d2 < best) {
                    best = d2;
                    chosen = t;
                }
            }
            if (chosen == tiles.size()) continue;
            const DisparityMap& m = maps[chosen];
            const int lx = x - tiles[chosen].col;
            const int ly = y - tiles[chosen].row;
            out.at(x, y) = m.at(lx, ly);
            out.set_valid(x, y, m.is_valid(lx, ly));
        }
    }
    return out;
}

}  // namespace selfstereo
