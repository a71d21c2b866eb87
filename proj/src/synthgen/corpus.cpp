#include <cstdio>
#include <fstream>
#include <sstream>

#include "selfstereo/error.hpp"
#include "selfstereo/image_io.hpp"
#include "selfstereo/synthgen.hpp"

namespace selfstereo {
namespace {

constexpr const char* kManifestMagic = "# selfstereo corpus v1";

std::string optional_path(const std::optional<std::filesystem::path>& p) {
    return p ? p->generic_string() : "-";
}

DisparityMap occlusion_as_map(const std::vector<std::uint8_t>& occ, int w, int h) {
    DisparityMap m(w, h, 0.0, false);
    for (std::size_t i = 0; i < occ.size(); ++i) m.valid[i] = occ[i];
    return m;
}

}  // namespace

void write_manifest(const std::filesystem::path& path, const Manifest& manifest) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << kManifestMagic << "\n";
    for (const auto& line : manifest.header) out << "# " << line << "\n";
    out << "# id seed left right gt_left gt_right occ_left occ_right\n";
    for (const auto& e : manifest.entries) {
        out << e.id << " " << e.seed << " " << e.left.generic_string() << " "
            << e.right.generic_string() << " " << optional_path(e.gt_left) << " "
            << optional_path(e.gt_right) << " " << optional_path(e.occ_left) << " "
            << optional_path(e.occ_right) << "\n";
    }
    if (!out) throw DataError("failed writing " + path.string());
}

Manifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest " + path.string());
    const auto base = path.parent_path();
    auto resolve = [&](const std::string& s) -> std::optional<std::filesystem::path> {
        if (s == "-") return std::nullopt;
        const std::filesystem::path p(s);
        return p.is_absolute() ? p : base / p;
    };

    Manifest manifest;
    std::string line;
    bool first = true;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (first) {
            if (line != kManifestMagic) throw DataError(path.string() + ": not a corpus manifest");
            first = false;
            continue;
        }
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto text = line.substr(line.find_first_not_of("# "));
            if (text.find('=') != std::string::npos) manifest.header.push_back(text);
            continue;
        }
        std::istringstream fields(line);
        std::string id, seed, left, right, gl, gr, ol, orr;
        if (!(fields >> id >> seed >> left >> right >> gl >> gr >> ol >> orr))
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": malformed record");
        ManifestEntry e;
        e.id = id;
        try {
            e.seed = std::stoull(seed);
        } catch (const std::exception&) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": malformed seed");
        }
        e.left = *resolve(left);
        e.right = *resolve(right);
        e.gt_left = resolve(gl);
        e.gt_right = resolve(gr);
        e.occ_left = resolve(ol);
        e.occ_right = resolve(orr);
        manifest.entries.push_back(std::move(e));
    }
    if (first) throw DataError(path.string() + ": empty manifest");
    return manifest;
}

std::filesystem::path write_corpus(const std::filesystem::path& dir, const CorpusSpec& spec,
                                   std::uint64_t seed, const std::vector<SyntheticScene>& scenes) {
    std::filesystem::create_directories(dir);
    const std::string ext = spec.channels == 1 ? ".pgm" : spec.channels == 3 ? ".ppm" : ".png";

    Manifest manifest;
    manifest.header = {
        "seed=" + std::to_string(seed),
        "n_pairs=" + std::to_string(spec.n_pairs),
        "width=" + std::to_string(spec.width),
        "height=" + std::to_string(spec.height),
        "channels=" + std::to_string(spec.channels),
        "d_max=" + std::to_string(spec.d_max),
        "noise_sigma=" + std::to_string(spec.noise_sigma),
        "texture=" + to_string(spec.texture),
        "domain_shift=" + to_string(spec.domain_shift),
    };
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        const auto& s = scenes[i];
        char id[32];
        std::snprintf(id, sizeof id, "pair_%03zu", i);
        const std::string stem(id);
        ManifestEntry e;
        e.id = stem;
        e.seed = s.rng_seed;
        e.left = stem + "_left" + ext;
        e.right = stem + "_right" + ext;
        e.gt_left = stem + "_gt_left.pfm";
        e.gt_right = stem + "_gt_right.pfm";
        e.occ_left = stem + "_occ_left.pgm";
        e.occ_right = stem + "_occ_right.pgm";
        save_image(s.pair.left, dir / e.left, BitDepth::k16);
        save_image(s.pair.right, dir / e.right, BitDepth::k16);
        save_pfm(s.gt_left, dir / *e.gt_left);
        save_pfm(s.gt_right, dir / *e.gt_right);
        const int w = s.gt_left.width, h = s.gt_left.height;
        save_mask(occlusion_as_map(s.occlusion_left, w, h), dir / *e.occ_left);
        save_mask(occlusion_as_map(s.occlusion_right, w, h), dir / *e.occ_right);
        manifest.entries.push_back(std::move(e));
    }
    const auto path = dir / "manifest.txt";
    write_manifest(path, manifest);
    return path;
}

std::vector<CorpusItem> load_corpus_pairs(const Manifest& manifest) {
    std::vector<CorpusItem> items;
    items.reserve(manifest.entries.size());
    for (const auto& e : manifest.entries) {
        CorpusItem item{e.id, {load_image(e.left), load_image(e.right)}};
        item.pair.validate();
        items.push_back(std::move(item));
    }
    return items;
}

std::vector<DisparityMap> load_corpus_references(const Manifest& manifest) {
    std::vector<DisparityMap> refs;
    refs.reserve(manifest.entries.size());
    for (const auto& e : manifest.entries) {
        if (!e.gt_left) throw DataError("manifest entry " + e.id + " has no ground truth");
        refs.push_back(load_pfm(*e.gt_left));
    }
    return refs;
}

}  // namespace selfstereo
