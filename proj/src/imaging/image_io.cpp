#include "selfstereo/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <memory>
#include <string>

#include "selfstereo/error.hpp"

namespace selfstereo {
namespace {

constexpr std::size_t kMaxSamples = std::size_t{1} << 31;

std::string lower_extension(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext;
}

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void check_dimensions(long long w, long long h, long long c, const std::filesystem::path& path) {
    if (w <= 0 || h <= 0)
        throw DataError(path.string() + ": invalid dimensions");
    if (static_cast<unsigned long long>(w) * static_cast<unsigned long long>(h) *
            static_cast<unsigned long long>(c) >= kMaxSamples ||
        w > std::numeric_limits<int>::max() || h > std::numeric_limits<int>::max())
        throw DataError(path.string() + ": dimension overflow");
}

// ---- PNM -------------------------------------------------------------------

class HeaderReader {
public:
    HeaderReader(const std::vector<unsigned char>& bytes, const std::filesystem::path& path)
        : bytes_(bytes), path_(path) {}

    std::string token() {
        skip_space_and_comments();
        std::string out;
        while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_])) out.push_back(static_cast<char>(bytes_[pos_++]));
        if (out.empty()) throw DataError(path_.string() + ": truncated header");
        return out;
    }

    long long number() {
        const std::string t = token();
        long long v = 0;
        for (char ch : t) {
            if (!std::isdigit(static_cast<unsigned char>(ch)))
                throw DataError(path_.string() + ": malformed header value '" + t + "'");
            v = v * 10 + (ch - '0');
            if (v > (1LL << 40)) throw DataError(path_.string() + ": dimension overflow");
        }
        return v;
    }

    // Binary rasters start after exactly one whitespace byte.
    std::size_t raster_start() {
        if (pos_ >= bytes_.size()) throw DataError(path_.string() + ": missing raster");
        return pos_ + 1;
    }

private:
    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else if (std::isspace(bytes_[pos_])) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    const std::vector<unsigned char>& bytes_;
    const std::filesystem::path& path_;
    std::size_t pos_ = 0;
};

Image load_pnm(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    HeaderReader header(bytes, path);
    const std::string magic = header.token();
    int channels = 0;
    bool ascii = false;
    if (magic == "P2") { channels = 1; ascii = true; }
    else if (magic == "P5") { channels = 1; }
    else if (magic == "P3") { channels = 3; ascii = true; }
    else if (magic == "P6") { channels = 3; }
    else throw DataError(path.string() + ": unsupported format '" + magic + "'");

    const long long w = header.number();
    const long long h = header.number();
    const long long maxval = header.number();
    check_dimensions(w, h, channels, path);
    if (maxval < 1 || maxval > 65535) throw DataError(path.string() + ": invalid maxval");

    Image image(static_cast<int>(w), static_cast<int>(h), channels);
    const std::size_t n = image.data.size();
    const double scale = static_cast<double>(maxval);
    if (ascii) {
        for (std::size_t i = 0; i < n; ++i) {
            const long long v = header.number();
            if (v > maxval) throw DataError(path.string() + ": sample exceeds maxval");
            image.data[i] = static_cast<double>(v) / scale;
        }
    } else {
        const std::size_t start = header.raster_start();
        const std::size_t bps = maxval > 255 ? 2 : 1;
        if (bytes.size() < start + n * bps) throw DataError(path.string() + ": truncated raster");
        for (std::size_t i = 0; i < n; ++i) {
            unsigned v = bytes[start + i * bps];
            if (bps == 2) v = (v << 8) | bytes[start + i * bps + 1];
            if (v > maxval) throw DataError(path.string() + ": sample exceeds maxval");
            image.data[i] = static_cast<double>(v) / scale;
        }
    }
    return image;
}

unsigned quantize(double v, unsigned maxval) {
    const double q = std::round(std::clamp(v, 0.0, 1.0) * maxval);
    return static_cast<unsigned>(q);
}

void save_pnm(const Image& image, const std::filesystem::path& path, BitDepth depth) {
    const unsigned maxval = depth == BitDepth::k16 ? 65535u : 255u;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << (image.channels == 1 ? "P5" : "P6") << "\n"
        << image.width << " " << image.height << "\n" << maxval << "\n";
    std::vector<unsigned char> raster;
    raster.reserve(image.data.size() * (maxval > 255 ? 2 : 1));
    for (double v : image.data) {
        const unsigned q = quantize(v, maxval);
        if (maxval > 255) raster.push_back(static_cast<unsigned char>(q >> 8));
        raster.push_back(static_cast<unsigned char>(q & 0xff));
    }
    out.write(reinterpret_cast<const char*>(raster.data()), static_cast<std::streamsize>(raster.size()));
    if (!out) throw DataError("failed writing " + path.string());
}

// ---- PNG -------------------------------------------------------------------

struct FileCloser {
    void operator()(std::FILE* f) const { if (f) std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_error_handler(png_structp png, png_const_charp msg) {
    auto* buffer = static_cast<std::string*>(png_get_error_ptr(png));
    if (buffer) *buffer = msg;
    png_longjmp(png, 1);
}

void png_warning_handler(png_structp, png_const_charp) {}

Image load_png(const std::filesystem::path& path) {
    FilePtr file(std::fopen(path.string().c_str(), "rb"));
    if (!file) throw DataError("cannot open " + path.string());
    std::string message;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &message,
                                             png_error_handler, png_warning_handler);
    if (!png) throw DataError("libpng initialization failed");
    png_infop info = png_create_info_struct(png);
    Image image;
    volatile bool failed = false;
    if (setjmp(png_jmpbuf(png))) {
        failed = true;
    } else {
        png_init_io(png, file.get());
        png_read_png(png, info, PNG_TRANSFORM_EXPAND | PNG_TRANSFORM_PACKING, nullptr);
        const png_uint_32 w = png_get_image_width(png, info);
        const png_uint_32 h = png_get_image_height(png, info);
        const int channels = png_get_channels(png, info);
        const int depth = png_get_bit_depth(png, info);
        check_dimensions(w, h, channels, path);
        image = Image(static_cast<int>(w), static_cast<int>(h), channels);
        const double scale = depth == 16 ? 65535.0 : 255.0;
        png_bytepp rows = png_get_rows(png, info);
        for (png_uint_32 y = 0; y < h; ++y) {
            const png_bytep row = rows[y];
            for (std::size_t i = 0; i < static_cast<std::size_t>(w) * channels; ++i) {
                const unsigned v = depth == 16 ? (unsigned{row[2 * i]} << 8) | row[2 * i + 1] : row[i];
                image.data[y * static_cast<std::size_t>(w) * channels + i] = v / scale;
            }
        }
    }
    png_destroy_read_struct(&png, &info, nullptr);
    if (failed) throw DataError(path.string() + ": " + (message.empty() ? "invalid PNG" : message));
    return image;
}

void save_png(const Image& image, const std::filesystem::path& path, BitDepth depth) {
    static constexpr std::array<int, 4> kColorType = {PNG_COLOR_TYPE_GRAY, PNG_COLOR_TYPE_GRAY_ALPHA,
                                                      PNG_COLOR_TYPE_RGB, PNG_COLOR_TYPE_RGB_ALPHA};
    FilePtr file(std::fopen(path.string().c_str(), "wb"));
    if (!file) throw DataError("cannot write " + path.string());
    const bool wide = depth == BitDepth::k16;
    const unsigned maxval = wide ? 65535u : 255u;
    const std::size_t row_bytes = static_cast<std::size_t>(image.width) * image.channels * (wide ? 2 : 1);
    std::vector<unsigned char> buffer(row_bytes * image.height);
    for (std::size_t i = 0; i < image.data.size(); ++i) {
        const unsigned q = quantize(image.data[i], maxval);
        if (wide) {
            buffer[2 * i] = static_cast<unsigned char>(q >> 8);
            buffer[2 * i + 1] = static_cast<unsigned char>(q & 0xff);
        } else {
            buffer[i] = static_cast<unsigned char>(q);
        }
    }
    std::string message;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &message,
                                              png_error_handler, png_warning_handler);
    if (!png) throw DataError("libpng initialization failed");
    png_infop info = png_create_info_struct(png);
    std::vector<png_bytep> rows(image.height);
    for (int y = 0; y < image.height; ++y) rows[y] = buffer.data() + y * row_bytes;
    volatile bool failed = false;
    if (setjmp(png_jmpbuf(png))) {
        failed = true;
    } else {
        png_init_io(png, file.get());
        png_set_IHDR(png, info, image.width, image.height, wide ? 16 : 8,
                     kColorType[image.channels - 1], PNG_INTERLACE_NONE,
                     PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);
        png_write_image(png, rows.data());
        png_write_end(png, nullptr);
    }
    png_destroy_write_struct(&png, &info);
    if (failed) throw DataError(path.string() + ": " + message);
}

// ---- PFM -------------------------------------------------------------------

std::uint32_t float_bits_le(const unsigned char* p) {
    return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
           (std::uint32_t{p[3]} << 24);
}

std::uint32_t float_bits_be(const unsigned char* p) {
    return std::uint32_t{p[3]} | (std::uint32_t{p[2]} << 8) | (std::uint32_t{p[1]} << 16) |
           (std::uint32_t{p[0]} << 24);
}

}  // namespace

Image load_image(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw DataError("cannot open " + path.string());
    const std::string ext = lower_extension(path);
    if (ext == ".png") return load_png(path);
    if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return load_pnm(path);
    throw DataError(path.string() + ": unsupported format");
}

void save_image(const Image& image, const std::filesystem::path& path, BitDepth depth) {
    image.validate();
    const std::string ext = lower_extension(path);
    if (ext == ".pgm") {
        if (image.channels != 1) throw DataError("channel mismatch: PGM needs 1 channel");
        save_pnm(image, path, depth);
    } else if (ext == ".ppm") {
        if (image.channels != 3) throw DataError("channel mismatch: PPM needs 3 channels");
        save_pnm(image, path, depth);
    } else if (ext == ".png") {
        save_png(image, path, depth);
    } else {
        throw DataError(path.string() + ": unsupported format");
    }
}

DisparityMap load_pfm(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    HeaderReader header(bytes, path);
    const std::string magic = header.token();
    if (magic != "Pf") throw DataError(path.string() + ": expected single-channel PFM");
    const long long w = header.number();
    const long long h = header.number();
    check_dimensions(w, h, 1, path);
    const std::string scale_token = header.token();
    double scale = 0.0;
    try {
        scale = std::stod(scale_token);
    } catch (const std::exception&) {
        throw DataError(path.string() + ": malformed PFM scale");
    }
    if (scale == 0.0) throw DataError(path.string() + ": malformed PFM scale");
    const bool little = scale < 0.0;
    const std::size_t start = header.raster_start();
    const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    if (bytes.size() < start + 4 * n) throw DataError(path.string() + ": truncated raster");

    DisparityMap map(static_cast<int>(w), static_cast<int>(h));
    for (int row = 0; row < map.height; ++row) {
        const int y = map.height - 1 - row;
        for (int x = 0; x < map.width; ++x) {
            const unsigned char* p = bytes.data() + start + 4 * (static_cast<std::size_t>(row) * map.width + x);
            const float v = std::bit_cast<float>(little ? float_bits_le(p) : float_bits_be(p));
            const auto i = map.index(x, y);
            if (std::isfinite(v)) {
                map.disparity[i] = v;
                map.valid[i] = 1;
            } else {
                map.disparity[i] = 0.0;
                map.valid[i] = 0;
            }
        }
    }
    return map;
}

void save_pfm(const DisparityMap& map, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << "Pf\n" << map.width << " " << map.height << "\n-1\n";
    std::vector<unsigned char> raster(4 * map.pixel_count());
    std::size_t k = 0;
    for (int row = 0; row < map.height; ++row) {
        const int y = map.height - 1 - row;
        for (int x = 0; x < map.width; ++x) {
            const float v = map.is_valid(x, y) ? static_cast<float>(map.at(x, y))
                                               : std::numeric_limits<float>::infinity();
            const auto bits = std::bit_cast<std::uint32_t>(v);
            for (int b = 0; b < 4; ++b) raster[k++] = static_cast<unsigned char>(bits >> (8 * b));
        }
    }
    out.write(reinterpret_cast<const char*>(raster.data()), static_cast<std::streamsize>(raster.size()));
    if (!out) throw DataError("failed writing " + path.string());
}

void save_mask(const DisparityMap& map, const std::filesystem::path& path) {
    Image mask(map.width, map.height, 1);
    for (std::size_t i = 0; i < map.pixel_count(); ++i) mask.data[i] = map.valid[i] ? 1.0 : 0.0;
    save_image(mask, path, BitDepth::k8);
}

Image colorize_disparity(const DisparityMap& map, double d_max) {
    Image out(map.width, map.height, 3);
    const double span = d_max > 1.0 ? d_max - 1.0 : 1.0;
    for (int y = 0; y < map.height; ++y)
        for (int x = 0; x < map.width; ++x) {
            if (!map.is_valid(x, y)) continue;
            const double t = std::clamp(map.at(x, y) / span, 0.0, 1.0);
            // jet: blue (small) -> cyan -> yellow -> red (large)
            out.at(x, y, 0) = std::clamp(1.5 - std::abs(4.0 * t - 3.0), 0.0, 1.0);
            out.at(x, y, 1) = std::clamp(1.5 - std::abs(4.0 * t - 2.0), 0.0, 1.0);
            out.at(x, y, 2) = std::clamp(1.5 - std::abs(4.0 * t - 1.0), 0.0, 1.0);
        }
    return out;
}

}  // namespace selfstereo
