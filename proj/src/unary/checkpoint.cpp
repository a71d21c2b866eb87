#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "selfstereo/error.hpp"
#include "selfstereo/unary_model.hpp"

namespace selfstereo {
namespace {

constexpr std::array<char, 4> kMagic = {'S', 'S', 'T', 'M'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kMaxDim = 1u << 16;

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<unsigned char>(v >> (8 * b)));
}

void put_f32(std::vector<unsigned char>& out, double v) {
    put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

class Reader {
public:
    Reader(const std::vector<unsigned char>& bytes, const std::filesystem::path& path)
        : bytes_(bytes), path_(path) {}

    std::uint32_t u32() {
        if (pos_ + 4 > bytes_.size()) throw DataError(path_.string() + ": truncated checkpoint");
        std::uint32_t v = 0;
        for (int b = 0; b < 4; ++b) v |= std::uint32_t{bytes_[pos_ + b]} << (8 * b);
        pos_ += 4;
        return v;
    }
    double f32() { return std::bit_cast<float>(u32()); }
    bool at_end() const { return pos_ == bytes_.size(); }

private:
    const std::vector<unsigned char>& bytes_;
    const std::filesystem::path& path_;
    std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const UnaryModel& model, const std::filesystem::path& path) {
    model.validate();
    std::vector<unsigned char> out(kMagic.begin(), kMagic.end());
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(model.d_max));
    put_u32(out, static_cast<std::uint32_t>(model.layers.size()));
    for (const auto& l : model.layers) {
        put_u32(out, static_cast<std::uint32_t>(l.out_ch));
        put_u32(out, static_cast<std::uint32_t>(l.in_ch));
        put_u32(out, static_cast<std::uint32_t>(l.kernel));
        put_u32(out, static_cast<std::uint32_t>(l.activation));
    }
    for (const auto& l : model.layers) {
        for (double v : l.weight) put_f32(out, v);
        for (double v : l.bias) put_f32(out, v);
    }
    std::ofstream file(path, std::ios::binary);
    if (!file) throw DataError("cannot write " + path.string());
    file.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!file) throw DataError("failed writing " + path.string());
}

UnaryModel load_checkpoint(const std::filesystem::path& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw DataError("cannot open checkpoint " + path.string());
    const std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(file), std::istreambuf_iterator<char>()};
    if (bytes.size() < 8 || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin()))
        throw DataError(path.string() + ": checkpoint version mismatch (bad magic)");
    std::vector<unsigned char> body(bytes.begin() + 4, bytes.end());
    Reader in(body, path);
    const std::uint32_t version = in.u32();
    if (version != kVersion)
        throw DataError(path.string() + ": checkpoint version mismatch (found " + std::to_string(version) + ")");
    UnaryModel model;
    model.d_max = static_cast<int>(in.u32());
    const std::uint32_t n = in.u32();
    if (n == 0 || n > 256 || model.d_max < 1 || static_cast<std::uint32_t>(model.d_max) > kMaxDim)
        throw DataError(path.string() + ": corrupt checkpoint header");
    for (std::uint32_t i = 0; i < n; ++i) {
        const std::uint32_t out = in.u32(), inc = in.u32(), k = in.u32(), act = in.u32();
        if (out == 0 || inc == 0 || out > kMaxDim || inc > kMaxDim || k == 0 || k > 63 || act > 1)
            throw DataError(path.string() + ": corrupt layer header");
        model.layers.emplace_back(static_cast<int>(out), static_cast<int>(inc), static_cast<int>(k),
                                  static_cast<Activation>(act));
    }
    for (auto& l : model.layers) {
        for (double& v : l.weight) v = in.f32();
        for (double& v : l.bias) v = in.f32();
    }
    if (!in.at_end()) throw DataError(path.string() + ": trailing bytes in checkpoint");
    model.validate();
    return model;
}

UnaryModel load_checkpoint(const std::filesystem::path& path, const ModelSpec& expected) {
    UnaryModel model = load_checkpoint(path);
    bool match = model.d_max == expected.d_max && static_cast<int>(model.layers.size()) == expected.layers &&
                 model.in_channels() == expected.in_channels;
    for (const auto& l : model.layers) match = match && l.kernel == expected.kernel && l.out_ch == expected.hidden;
    if (!match)
        throw DataError(path.string() + ": model/architecture mismatch with checkpoint header");
    return model;
}

}  // namespace selfstereo
