#include "selfstereo/cost_volume.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "selfstereo/error.hpp"

namespace selfstereo {

bool CostVolume::all_finite() const {
    return std::all_of(cost.begin(), cost.end(), [](double v) { return std::isfinite(v); });
}

int worst_in_bounds(const CostVolume& volume, int x, int y) {
    const double* c = volume.pixel(x, y);
    const int last = std::min(x, volume.d_max - 1);
    int best = 0;
    for (int d = 1; d <= last; ++d)
        if (c[d] > c[best]) best = d;
    return best;
}

void fill_out_of_bounds(CostVolume& volume) {
    const int limit = std::min(volume.width, volume.d_max - 1);
    for (int y = 0; y < volume.height; ++y)
        for (int x = 0; x < limit; ++x) {
            double* c = volume.pixel(x, y);
            const double worst = c[worst_in_bounds(volume, x, y)];
            for (int d = x + 1; d < volume.d_max; ++d) c[d] = worst;
        }
}

CostVolume flip_horizontal(const CostVolume& volume) {
    CostVolume out(volume.width, volume.height, volume.d_max);
    for (int y = 0; y < volume.height; ++y)
        for (int x = 0; x < volume.width; ++x)
            std::copy_n(volume.pixel(x, y), volume.d_max, out.pixel(volume.width - 1 - x, y));
    return out;
}

CensusImage census_transform(const Image& image, int window) {
    if (window < 1 || window % 2 == 0) throw UsageError("census window must be odd");
    if (window > image.width || window > image.height)
        throw UsageError("census window larger than image");
    const int r = window / 2;
    const int bits = window * window - 1;
    CensusImage out;
    out.width = image.width;
    out.height = image.height;
    out.words_per_pixel = std::max(1, (bits + 63) / 64);
    out.bits.assign(image.pixel_count() * out.words_per_pixel, 0ULL);

    std::vector<double> gray(image.pixel_count());
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x) gray[static_cast<std::size_t>(y) * image.width + x] = image.gray(x, y);

    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x) {
            const double center = gray[static_cast<std::size_t>(y) * image.width + x];
            unsigned long long* word = out.bits.data() + (static_cast<std::size_t>(y) * image.width + x) * out.words_per_pixel;
            int bit = 0;
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    const int sx = std::clamp(x + dx, 0, image.width - 1);
                    const int sy = std::clamp(y + dy, 0, image.height - 1);
                    if (gray[static_cast<std::size_t>(sy) * image.width + sx] < center)
                        word[bit / 64] |= 1ULL << (bit % 64);
                    ++bit;
                }
        }
    return out;
}

namespace {

int hamming(const CensusImage& a, std::size_t pa, const CensusImage& b, std::size_t pb) {
    int n = 0;
    for (int w = 0; w < a.words_per_pixel; ++w)
        n += std::popcount(a.bits[pa * a.words_per_pixel + w] ^ b.bits[pb * b.words_per_pixel + w]);
    return n;
}

CostVolume census_volume(const CensusImage& ref, const CensusImage& other, int d_max) {
    if (d_max < 1 || d_max > ref.width) throw UsageError("d_max must be in 1..width");
    CostVolume volume(ref.width, ref.height, d_max);
    for (int y = 0; y < ref.height; ++y)
        for (int x = 0; x < ref.width; ++x) {
            const std::size_t p = static_cast<std::size_t>(y) * ref.width + x;
            for (int d = 0; d <= std::min(x, d_max - 1); ++d)
                volume.at(x, y, d) = hamming(ref, p, other, p - d);
        }
    fill_out_of_bounds(volume);
    return volume;
}

}  // namespace

CostVolume census_cost_volume(const ImagePair& pair, int window, int d_max) {
    pair.validate();
    return census_volume(census_transform(pair.left, window), census_transform(pair.right, window), d_max);
}

CostVolume census_cost_volume_right(const ImagePair& pair, int window, int d_max) {
    pair.validate();
    // mirror: flipped right becomes the reference, flipped left the target
    const ImagePair mirrored = mirror_pair(pair);
    return flip_horizontal(census_volume(census_transform(mirrored.left, window),
                                         census_transform(mirrored.right, window), d_max));
}

}  // namespace selfstereo
