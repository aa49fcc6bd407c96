#include "rectseg/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace rectseg {

void ModelConfig::validate() const {
    if (classes < 2) throw std::invalid_argument("model: classes must be >= 2");
    if (trunk_widths.empty()) throw std::invalid_argument("model: trunk must have at least one layer");
    const int depth = static_cast<int>(trunk_widths.size());
    if (aux_tap < 1 || aux_tap >= depth)
        throw std::invalid_argument("model: aux_tap must satisfy 1 <= tap < depth, got tap " +
                                    std::to_string(aux_tap) + " with depth " + std::to_string(depth));
    if (kernel % 2 == 0 || kernel < 1) throw std::invalid_argument("model: kernel extent must be odd");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
        throw std::invalid_argument("model: dropout rate must be in [0,1)");
    for (int w : trunk_widths)
        if (w < 1) throw std::invalid_argument("model: trunk widths must be positive");
}

namespace {

Tensor init_conv_weight(int kh, int kw, int cin, int cout, Rng& rng) {
    // zero-mean uniform scaled by fan-in (He-style bound for relu trunks)
    const double bound = std::sqrt(6.0 / (static_cast<double>(kh) * kw * cin));
    std::vector<double> w(static_cast<std::size_t>(kh) * kw * cin * cout);
    for (auto& v : w) v = rng.uniform(-bound, bound);
    return Tensor::from_data({kh, kw, cin, cout}, std::move(w), true);
}

} // namespace

TwoHeadSegNet::TwoHeadSegNet(const ModelConfig& cfg, Rng& rng) : cfg_(cfg) {
    cfg_.validate();
    int cin = 3;
    for (int width : cfg_.trunk_widths) {
        ConvLayer layer;
        layer.weight = init_conv_weight(cfg_.kernel, cfg_.kernel, cin, width, rng);
        layer.bias = Tensor::zeros({width}, true);
        trunk_.push_back(std::move(layer));
        cin = width;
    }
    const int aux_cin = cfg_.trunk_widths[cfg_.aux_tap - 1];
    aux_head_.weight = init_conv_weight(1, 1, aux_cin, cfg_.classes, rng);
    aux_head_.bias = Tensor::zeros({cfg_.classes}, true);
    primary_head_.weight = init_conv_weight(1, 1, cfg_.trunk_widths.back(), cfg_.classes, rng);
    primary_head_.bias = Tensor::zeros({cfg_.classes}, true);
}

ForwardResult TwoHeadSegNet::forward(const Tensor& image, Mode mode, Rng& rng) const {
    if (image.shape().size() != 3 || image.shape()[2] != 3)
        throw std::invalid_argument("forward: image must be [H,W,3], got " + shape_str(image.shape()));

    Tensor h = image;
    Tensor tap;
    for (std::size_t i = 0; i < trunk_.size(); ++i) {
        h = relu(conv2d(h, trunk_[i].weight, trunk_[i].bias));
        if (static_cast<int>(i) + 1 == cfg_.aux_tap) tap = h;
    }

    auto head = [&](const ConvLayer& layer, const Tensor& input) {
        HeadOut out;
        out.logits = conv2d(dropout(input, cfg_.dropout_rate, mode, rng), layer.weight, layer.bias);
        out.log_probs = log_softmax(out.logits);
        out.probs = exp(out.log_probs);
        return out;
    };

    // aux head first: its dropout draws come from the shallower activation
    ForwardResult result;
    result.aux = head(aux_head_, tap);
    result.primary = head(primary_head_, h);
    return result;
}

std::vector<Tensor> TwoHeadSegNet::parameters() const {
    std::vector<Tensor> out;
    for (const auto& layer : trunk_) {
        out.push_back(layer.weight);
        out.push_back(layer.bias);
    }
    out.push_back(aux_head_.weight);
    out.push_back(aux_head_.bias);
    out.push_back(primary_head_.weight);
    out.push_back(primary_head_.bias);
    return out;
}

TwoHeadSegNet TwoHeadSegNet::clone() const {
    TwoHeadSegNet copy;
    copy.cfg_ = cfg_;
    auto clone_layer = [](const ConvLayer& src) {
        ConvLayer dst;
        dst.weight = Tensor::from_data(src.weight.shape(), src.weight.data(), true);
        dst.bias = Tensor::from_data(src.bias.shape(), src.bias.data(), true);
        return dst;
    };
    for (const auto& layer : trunk_) copy.trunk_.push_back(clone_layer(layer));
    copy.aux_head_ = clone_layer(aux_head_);
    copy.primary_head_ = clone_layer(primary_head_);
    return copy;
}

ProbMap to_probmap(const Tensor& probs) {
    if (probs.shape().size() != 3)
        throw std::invalid_argument("to_probmap: expected [H,W,C], got " + shape_str(probs.shape()));
    ProbMap pm;
    pm.h = probs.shape()[0];
    pm.w = probs.shape()[1];
    pm.c = probs.shape()[2];
    pm.p = probs.data();
    return pm;
}

LabelMap combined_prediction(const ProbMap& primary, const ProbMap& aux, double alpha, double beta) {
    if (primary.h != aux.h || primary.w != aux.w || primary.c != aux.c)
        throw std::invalid_argument("combined_prediction: probability map shapes differ");
    if (alpha < 0.0 || beta < 0.0 || (alpha == 0.0 && beta == 0.0))
        throw std::invalid_argument("combined_prediction: weights must be nonnegative and not both zero");
    LabelMap out;
    out.h = primary.h;
    out.w = primary.w;
    out.ids.resize(static_cast<std::size_t>(out.h) * out.w);
    for (std::size_t px = 0; px < out.ids.size(); ++px) {
        const double* pp = &primary.p[px * primary.c];
        const double* pa = &aux.p[px * primary.c];
        int best = 0;
        double best_v = alpha * pp[0] + beta * pa[0];
        for (int c = 1; c < primary.c; ++c) {
            const double v = alpha * pp[c] + beta * pa[c];
            if (v > best_v) {
                best_v = v;
                best = c;
            }
        }
        out.ids[px] = static_cast<std::uint8_t>(best);
    }
    return out;
}

LabelMap argmax_map(const ProbMap& pm) {
    return combined_prediction(pm, pm, 1.0, 0.0);
}

// ---------------------------------------------------------------------------
// checkpoint io

namespace {

constexpr char kMagic[4] = {'R', 'S', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f64(std::ostream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

} // namespace

void save_checkpoint(const TwoHeadSegNet& net, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint " + path);
    out.write(kMagic, 4);
    put_u32(out, kVersion);
    const auto& cfg = net.config();
    put_u32(out, static_cast<std::uint32_t>(cfg.classes));
    put_u32(out, static_cast<std::uint32_t>(cfg.trunk_widths.size()));
    put_u32(out, static_cast<std::uint32_t>(cfg.aux_tap));
    put_u32(out, static_cast<std::uint32_t>(cfg.kernel));
    put_f64(out, cfg.dropout_rate);
    for (int w : cfg.trunk_widths) put_u32(out, static_cast<std::uint32_t>(w));
    std::uint64_t total = 0;
    for (const auto& p : net.parameters()) total += static_cast<std::uint64_t>(p.size());
    put_u32(out, static_cast<std::uint32_t>(total));
    for (const auto& p : net.parameters())
        for (double v : p.data()) put_f64(out, v);
    if (!out) throw std::runtime_error("short write on checkpoint " + path);
}

TwoHeadSegNet load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error(path + ": not a checkpoint file");
    if (get_u32(in) != kVersion) throw std::runtime_error(path + ": unsupported checkpoint version");

    ModelConfig cfg;
    cfg.classes = static_cast<int>(get_u32(in));
    const int depth = static_cast<int>(get_u32(in));
    cfg.aux_tap = static_cast<int>(get_u32(in));
    cfg.kernel = static_cast<int>(get_u32(in));
    cfg.dropout_rate = get_f64(in);
    cfg.trunk_widths.clear();
    for (int i = 0; i < depth; ++i) cfg.trunk_widths.push_back(static_cast<int>(get_u32(in)));
    cfg.validate();

    Rng scratch(0);
    TwoHeadSegNet net(cfg, scratch);
    const std::uint64_t expected = get_u32(in);
    std::uint64_t total = 0;
    for (auto& p : net.parameters()) {
        for (auto& v : p.data()) v = get_f64(in);
        total += static_cast<std::uint64_t>(p.size());
    }
    if (!in) throw std::runtime_error(path + ": truncated checkpoint payload");
    if (total != expected) throw std::runtime_error(path + ": parameter count mismatch");
    return net;
}

} // namespace rectseg
