#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "selfstereo/error.hpp"
#include "selfstereo/unary_model.hpp"

namespace selfstereo {

ConvLayer::ConvLayer(int out, int in, int k, Activation act)
    : out_ch(out), in_ch(in), kernel(k), activation(act),
      weight(static_cast<std::size_t>(out) * in * k * k, 0.0), bias(static_cast<std::size_t>(out), 0.0) {}

int UnaryModel::receptive_field() const {
    int rf = 1;
    for (const auto& l : layers) rf += l.kernel - 1;
    return rf;
}

std::size_t UnaryModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weight.size() + l.bias.size();
    return n;
}

bool UnaryModel::all_finite() const {
    for (const auto& l : layers) {
        for (double v : l.weight) if (!std::isfinite(v)) return false;
        for (double v : l.bias) if (!std::isfinite(v)) return false;
    }
    return true;
}

void UnaryModel::quantize_to_storage() {
    for (auto& l : layers) {
        for (double& v : l.weight) v = static_cast<float>(v);
        for (double& v : l.bias) v = static_cast<float>(v);
    }
}

void UnaryModel::validate() const {
    if (layers.empty()) throw DataError("model has no layers");
    if (d_max < 1) throw DataError("model d_max must be positive");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        if (l.kernel < 1 || l.kernel % 2 == 0) throw DataError("layer kernel must be odd");
        if (l.out_ch < 1 || l.in_ch < 1) throw DataError("layer channel counts must be positive");
        if (i > 0 && l.in_ch != layers[i - 1].out_ch)
            throw DataError("layer " + std::to_string(i) + " input channels do not match previous output");
        if (l.weight.size() != static_cast<std::size_t>(l.out_ch) * l.in_ch * l.kernel * l.kernel ||
            l.bias.size() != static_cast<std::size_t>(l.out_ch))
            throw DataError("layer " + std::to_string(i) + " parameter size mismatch");
    }
    if (!all_finite()) throw NumericalError("model parameters are not finite");
}

UnaryModel make_model(const ModelSpec& spec, std::uint64_t seed) {
    if (spec.layers < 1 || spec.hidden < 1 || spec.kernel < 1 || spec.kernel % 2 == 0 || spec.in_channels < 1)
        throw UsageError("invalid model architecture");
    std::mt19937_64 rng(seed);
    UnaryModel model;
    model.d_max = spec.d_max;
    int in = spec.in_channels;
    for (int l = 0; l < spec.layers; ++l) {
        const bool last = l + 1 == spec.layers;
        ConvLayer layer(spec.hidden, in, spec.kernel, last ? Activation::none : Activation::tanh);
        const double fan = static_cast<double>(spec.kernel * spec.kernel) * (in + spec.hidden);
        const double limit = std::sqrt(6.0 / fan);
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (double& w : layer.weight) w = dist(rng);
        model.layers.push_back(std::move(layer));
        in = spec.hidden;
    }
    model.quantize_to_storage();
    return model;
}

FeatureMap to_feature_map(const Image& image) {
    FeatureMap map(image.width, image.height, image.channels);
    for (int c = 0; c < image.channels; ++c)
        for (int y = 0; y < image.height; ++y)
            for (int x = 0; x < image.width; ++x) map.at(c, x, y) = image.at(x, y, c);
    return map;
}

FeatureMap flip_horizontal(const FeatureMap& map) {
    FeatureMap out(map.width, map.height, map.dim);
    for (int c = 0; c < map.dim; ++c)
        for (int y = 0; y < map.height; ++y) {
            const double* src = map.row(c, y);
            double* dst = out.row(c, y);
            for (int x = 0; x < map.width; ++x) dst[map.width - 1 - x] = src[x];
        }
    return out;
}

namespace {

FeatureMap conv_forward(const FeatureMap& in, const ConvLayer& layer) {
    const int w = in.width;
    const int h = in.height;
    const int r = layer.kernel / 2;
    FeatureMap out(w, h, layer.out_ch);
    for (int o = 0; o < layer.out_ch; ++o) {
        for (int y = 0; y < h; ++y) {
            double* dst = out.row(o, y);
            std::fill(dst, dst + w, layer.bias[o]);
            for (int i = 0; i < layer.in_ch; ++i) {
                for (int ky = 0; ky < layer.kernel; ++ky) {
                    const int sy = y + ky - r;
                    if (sy < 0 || sy >= h) continue;
                    const double* src = in.row(i, sy);
                    for (int kx = 0; kx < layer.kernel; ++kx) {
                        const int dx = kx - r;
                        const double wv = layer.weight[layer.weight_index(o, i, ky, kx)];
                        const int x0 = std::max(0, -dx);
                        const int x1 = std::min(w, w - dx);
                        for (int x = x0; x < x1; ++x) dst[x] += wv * src[x + dx];
                    }
                }
            }
            if (layer.activation == Activation::tanh)
                for (int x = 0; x < w; ++x) dst[x] = std::tanh(dst[x]);
        }
    }
    return out;
}

// grad_out is dL/d(layer output); converted in place to dL/d(pre-activation).
void conv_backward(const FeatureMap& in, const FeatureMap& out, FeatureMap& grad_out,
                   const ConvLayer& layer, LayerGradient& grad, FeatureMap* grad_in) {
    const int w = in.width;
    const int h = in.height;
    const int r = layer.kernel / 2;
    if (layer.activation == Activation::tanh)
        for (std::size_t i = 0; i < grad_out.data.size(); ++i)
            grad_out.data[i] *= 1.0 - out.data[i] * out.data[i];

    for (int o = 0; o < layer.out_ch; ++o) {
        for (int y = 0; y < h; ++y) {
            const double* g = grad_out.row(o, y);
            double bsum = 0.0;
            for (int x = 0; x < w; ++x) bsum += g[x];
            grad.bias[o] += bsum;
            for (int i = 0; i < layer.in_ch; ++i) {
                for (int ky = 0; ky < layer.kernel; ++ky) {
                    const int sy = y + ky - r;
                    if (sy < 0 || sy >= h) continue;
                    const double* src = in.row(i, sy);
                    double* gsrc = grad_in ? grad_in->row(i, sy) : nullptr;
                    for (int kx = 0; kx < layer.kernel; ++kx) {
                        const int dx = kx - r;
                        const std::size_t wi = layer.weight_index(o, i, ky, kx);
                        const double wv = layer.weight[wi];
                        const int x0 = std::max(0, -dx);
                        const int x1 = std::min(w, w - dx);
                        double acc = 0.0;
                        for (int x = x0; x < x1; ++x) acc += g[x] * src[x + dx];
                        grad.weight[wi] += acc;
                        if (gsrc)
                            for (int x = x0; x < x1; ++x) gsrc[x + dx] += wv * g[x];
                    }
                }
            }
        }
    }
}

void require_finite(const FeatureMap& map, const char* what) {
    for (double v : map.data)
        if (!std::isfinite(v)) throw NumericalError(std::string("non-finite value in ") + what);
}

}  // namespace

ViewActivations forward_view(const Image& image, const UnaryModel& model) {
    if (model.layers.empty()) throw UsageError("model has no layers");
    if (image.channels != model.in_channels())
        throw UsageError("channel mismatch: image has " + std::to_string(image.channels) +
                         " channels, model expects " + std::to_string(model.in_channels()));
    ViewActivations view;
    view.activations.reserve(model.layers.size() + 1);
    view.activations.push_back(to_feature_map(image));
    for (const auto& layer : model.layers) view.activations.push_back(conv_forward(view.activations.back(), layer));
    require_finite(view.features(), "features");
    return view;
}

FeatureMap extract_features(const Image& image, const UnaryModel& model) {
    return std::move(forward_view(image, model).activations.back());
}

CostVolume build_cost_volume(const FeatureMap& feat_l, const FeatureMap& feat_r, int d_max) {
    if (feat_l.width != feat_r.width || feat_l.height != feat_r.height || feat_l.dim != feat_r.dim)
        throw UsageError("feature maps differ in shape");
    if (d_max < 1 || d_max > feat_l.width) throw UsageError("d_max must be in 1..width");
    const int w = feat_l.width;
    CostVolume volume(w, feat_l.height, d_max);
    std::vector<double> acc(static_cast<std::size_t>(w));
    for (int y = 0; y < feat_l.height; ++y) {
        for (int d = 0; d < d_max; ++d) {
            std::fill(acc.begin(), acc.end(), 0.0);
            for (int c = 0; c < feat_l.dim; ++c) {
                const double* l = feat_l.row(c, y);
                const double* r = feat_r.row(c, y);
                for (int x = d; x < w; ++x) acc[x] += l[x] * r[x - d];
            }
            for (int x = d; x < w; ++x) volume.at(x, y, d) = -acc[x];
        }
    }
    fill_out_of_bounds(volume);
    return volume;
}

CostVolume build_right_cost_volume(const FeatureMap& feat_l, const FeatureMap& feat_r, int d_max) {
    return flip_horizontal(build_cost_volume(flip_horizontal(feat_r), flip_horizontal(feat_l), d_max));
}

ModelGradients zero_gradients(const UnaryModel& model) {
    ModelGradients g;
    for (const auto& l : model.layers)
        g.push_back({std::vector<double>(l.weight.size(), 0.0), std::vector<double>(l.bias.size(), 0.0)});
    return g;
}

void accumulate(ModelGradients& into, const ModelGradients& from) {
    for (std::size_t l = 0; l < into.size(); ++l) {
        for (std::size_t i = 0; i < into[l].weight.size(); ++i) into[l].weight[i] += from[l].weight[i];
        for (std::size_t i = 0; i < into[l].bias.size(); ++i) into[l].bias[i] += from[l].bias[i];
    }
}

void scale(ModelGradients& grads, double factor) {
    for (auto& g : grads) {
        for (double& v : g.weight) v *= factor;
        for (double& v : g.bias) v *= factor;
    }
}

bool all_finite(const ModelGradients& grads) {
    for (const auto& g : grads) {
        for (double v : g.weight) if (!std::isfinite(v)) return false;
        for (double v : g.bias) if (!std::isfinite(v)) return false;
    }
    return true;
}

ForwardState forward(const ImagePair& pair, const UnaryModel& model) {
    pair.validate();
    ForwardState state;
    state.left = forward_view(pair.left, model);
    state.right = forward_view(pair.right, model);
    state.cost = build_cost_volume(state.left.features(), state.right.features(), model.d_max);
    return state;
}

ModelGradients backward(const ForwardState& state, const UnaryModel& model, const CostVolume& grad_cost) {
    const CostVolume& cost = state.cost;
    if (!grad_cost.same_shape(cost)) throw UsageError("cost adjoint has the wrong shape");
    if (!grad_cost.all_finite()) throw NumericalError("non-finite cost adjoint");
    const int w = cost.width;
    const int h = cost.height;
    const int dmax = cost.d_max;

    // Out-of-bounds slots copy the worst in-bounds entry; route their adjoint there.
    CostVolume g = grad_cost;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < std::min(w, dmax - 1); ++x) {
            double* gp = g.pixel(x, y);
            double extra = 0.0;
            for (int d = x + 1; d < dmax; ++d) {
                extra += gp[d];
                gp[d] = 0.0;
            }
            gp[worst_in_bounds(cost, x, y)] += extra;
        }

    const FeatureMap& fl = state.left.features();
    const FeatureMap& fr = state.right.features();
    FeatureMap gl(w, h, fl.dim);
    FeatureMap gr(w, h, fr.dim);
    std::vector<double> gd(static_cast<std::size_t>(w));
    for (int y = 0; y < h; ++y) {
        for (int d = 0; d < dmax; ++d) {
            for (int x = 0; x < w; ++x) gd[x] = x >= d ? -g.at(x, y, d) : 0.0;
            for (int c = 0; c < fl.dim; ++c) {
                const double* l = fl.row(c, y);
                const double* r = fr.row(c, y);
                double* dl = gl.row(c, y);
                double* dr = gr.row(c, y);
                for (int x = d; x < w; ++x) {
                    dl[x] += gd[x] * r[x - d];
                    dr[x - d] += gd[x] * l[x];
                }
            }
        }
    }

    ModelGradients grads = zero_gradients(model);
    const std::size_t n = model.layers.size();
    for (auto* view : {&state.left, &state.right}) {
        FeatureMap upstream = view == &state.left ? std::move(gl) : std::move(gr);
        for (std::size_t l = n; l-- > 0;) {
            FeatureMap grad_in;
            FeatureMap* grad_in_ptr = nullptr;
            if (l > 0) {
                grad_in = FeatureMap(w, h, model.layers[l].in_ch);
                grad_in_ptr = &grad_in;
            }
            conv_backward(view->activations[l], view->activations[l + 1], upstream, model.layers[l],
                          grads[l], grad_in_ptr);
            if (l > 0) upstream = std::move(grad_in);
        }
    }
    if (!all_finite(grads)) throw NumericalError("non-finite parameter gradient");
    return grads;
}

std::pair<CostVolume, ModelGradients> forward_backward(const ImagePair& pair, const UnaryModel& model,
                                                       const CostVolume& grad_cost) {
    ForwardState state = forward(pair, model);
    ModelGradients grads = backward(state, model, grad_cost);
    return {std::move(state.cost), std::move(grads)};
}

}  // namespace selfstereo
