#pragma once

#include <string>
#include <vector>

#include "rectseg/tensor.hpp"

namespace rectseg {

// Per-pixel class probability field; each pixel sums to 1.
struct ProbMap {
    int h = 0, w = 0, c = 0;
    std::vector<double> p; // h*w*c row-major

    double at(int y, int x, int k) const { return p[(static_cast<std::size_t>(y) * w + x) * c + k]; }
    double& at(int y, int x, int k) { return p[(static_cast<std::size_t>(y) * w + x) * c + k]; }
};

struct LabelMap {
    int h = 0, w = 0;
    std::vector<std::uint8_t> ids;
};

struct ModelConfig {
    int classes = 5;
    std::vector<int> trunk_widths = {16, 16, 32, 32};
    int aux_tap = 3; // 1-based trunk layer whose activation feeds the aux head
    int kernel = 3;
    double dropout_rate = 0.1;

    void validate() const;
};

struct HeadOut {
    Tensor logits;    // [H,W,C]
    Tensor log_probs; // log_softmax(logits)
    Tensor probs;     // exp(log_probs)
};

struct ForwardResult {
    HeadOut primary;
    HeadOut aux;
};

// Shared convolutional trunk with a primary classifier on the final
// activation and an auxiliary classifier tapped at a shallower layer. Both
// heads are dropout followed by a 1x1 convolution to class channels.
class TwoHeadSegNet {
public:
    TwoHeadSegNet(const ModelConfig& cfg, Rng& rng);

    ForwardResult forward(const Tensor& image, Mode mode, Rng& rng) const;

    std::vector<Tensor> parameters() const;
    const ModelConfig& config() const { return cfg_; }

    // deep copy (fresh parameter storage)
    TwoHeadSegNet clone() const;

private:
    struct ConvLayer {
        Tensor weight; // [kh,kw,cin,cout]
        Tensor bias;   // [cout]
    };

    TwoHeadSegNet() = default;

    ModelConfig cfg_;
    std::vector<ConvLayer> trunk_;
    ConvLayer aux_head_;
    ConvLayer primary_head_;

    friend TwoHeadSegNet load_checkpoint(const std::string& path);
    friend void save_checkpoint(const TwoHeadSegNet& net, const std::string& path);
};

ProbMap to_probmap(const Tensor& probs);

// argmax of alpha*P + beta*P_aux per pixel; ties go to the lowest class index
LabelMap combined_prediction(const ProbMap& primary, const ProbMap& aux, double alpha, double beta);

LabelMap argmax_map(const ProbMap& pm);

// Binary checkpoint: magic + version + architecture fields, then all
// parameters as little-endian float64. Round-trips bit-exactly.
void save_checkpoint(const TwoHeadSegNet& net, const std::string& path);
TwoHeadSegNet load_checkpoint(const std::string& path);

} // namespace rectseg
