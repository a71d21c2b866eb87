#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "selfstereo/cost_volume.hpp"
#include "selfstereo/image.hpp"

namespace selfstereo {

enum class Activation : std::uint32_t { none = 0, tanh = 1 };

struct ConvLayer {
    int out_ch = 0;
    int in_ch = 0;
    int kernel = 1;
    Activation activation = Activation::none;
    std::vector<double> weight;  // (out_ch, in_ch, kernel, kernel)
    std::vector<double> bias;    // out_ch

    ConvLayer() = default;
    ConvLayer(int out, int in, int k, Activation act);

    std::size_t weight_index(int o, int i, int ky, int kx) const {
        return ((static_cast<std::size_t>(o) * in_ch + i) * kernel + ky) * kernel + kx;
    }

    bool operator==(const ConvLayer&) const = default;
};

/// Architecture description; parameters are held by UnaryModel.
struct ModelSpec {
    int in_channels = 1;
    int hidden = 16;
    int layers = 3;
    int kernel = 3;
    int d_max = 32;
};

/// Shared-weight feature extractor applied to both views, followed by a
/// correlation cost volume. Parameters are stored as doubles but are kept
/// float32-representable so checkpoints round-trip exactly.
struct UnaryModel {
    std::vector<ConvLayer> layers;
    int d_max = 32;

    int in_channels() const { return layers.empty() ? 0 : layers.front().in_ch; }
    int feature_dim() const { return layers.empty() ? 0 : layers.back().out_ch; }
    int receptive_field() const;
    std::size_t parameter_count() const;
    bool all_finite() const;

    /// Rounds every parameter to the nearest float32.
    void quantize_to_storage();

    /// Throws if layer shapes do not chain or kernels are even.
    void validate() const;

    bool operator==(const UnaryModel&) const = default;
};

/// Glorot-uniform weights, zero biases, tanh on all but the last layer.
UnaryModel make_model(const ModelSpec& spec, std::uint64_t seed);

/// Planar (channel, row, column) feature tensor with the input's spatial size.
struct FeatureMap {
    int width = 0;
    int height = 0;
    int dim = 0;
    std::vector<double> data;

    FeatureMap() = default;
    FeatureMap(int w, int h, int d, double fill = 0.0)
        : width(w), height(h), dim(d), data(static_cast<std::size_t>(w) * h * d, fill) {}

    std::size_t index(int c, int x, int y) const {
        return (static_cast<std::size_t>(c) * height + y) * width + x;
    }
    double at(int c, int x, int y) const { return data[index(c, x, y)]; }
    double& at(int c, int x, int y) { return data[index(c, x, y)]; }
    const double* row(int c, int y) const { return data.data() + index(c, 0, y); }
    double* row(int c, int y) { return data.data() + index(c, 0, y); }

    bool operator==(const FeatureMap&) const = default;
};

FeatureMap to_feature_map(const Image& image);
FeatureMap flip_horizontal(const FeatureMap& map);

/// Same-padded (zero) convolution stack.
FeatureMap extract_features(const Image& image, const UnaryModel& model);

/// cost(x, d) = -<feat_l(x), feat_r(x - d)>, out-of-bounds entries per
/// fill_out_of_bounds.
CostVolume build_cost_volume(const FeatureMap& feat_l, const FeatureMap& feat_r, int d_max);

/// Right-reference volume from the same features: cost(x, d) =
/// -<feat_r(x), feat_l(x + d)>, built by mirroring.
CostVolume build_right_cost_volume(const FeatureMap& feat_l, const FeatureMap& feat_r, int d_max);

struct LayerGradient {
    std::vector<double> weight;
    std::vector<double> bias;
};

using ModelGradients = std::vector<LayerGradient>;

ModelGradients zero_gradients(const UnaryModel& model);
void accumulate(ModelGradients& into, const ModelGradients& from);
void scale(ModelGradients& grads, double factor);
bool all_finite(const ModelGradients& grads);

/// Activations of one view: activations[0] is the input, activations[l + 1]
/// the output of layer l.
struct ViewActivations {
    std::vector<FeatureMap> activations;
    const FeatureMap& features() const { return activations.back(); }
};

struct ForwardState {
    ViewActivations left;
    ViewActivations right;
    CostVolume cost;
};

ViewActivations forward_view(const Image& image, const UnaryModel& model);
ForwardState forward(const ImagePair& pair, const UnaryModel& model);

/// Reverse-mode pass from an adjoint of the cost volume to parameter
/// gradients. Throws NumericalError on non-finite input or output.
ModelGradients backward(const ForwardState& state, const UnaryModel& model,
                        const CostVolume& grad_cost);

std::pair<CostVolume, ModelGradients> forward_backward(const ImagePair& pair, const UnaryModel& model,
                                                       const CostVolume& grad_cost);

// ---- checkpoints -----------------------------------------------------------

/// Byte layout (all little-endian):
///   "SSTM" | u32 version (=1) | u32 d_max | u32 layer count L
///   L x { u32 out_ch, u32 in_ch, u32 kernel, u32 activation (0 none, 1 tanh) }
///   L x { float32 weights in (out, in, ky, kx) order, float32 biases }
void save_checkpoint(const UnaryModel& model, const std::filesystem::path& path);

UnaryModel load_checkpoint(const std::filesystem::path& path);

/// Also checks the stored architecture against `expected`.
UnaryModel load_checkpoint(const std::filesystem::path& path, const ModelSpec& expected);

}  // namespace selfstereo
