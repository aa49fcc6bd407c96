#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rectseg/loss.hpp"
#include "rectseg/model.hpp"
#include "rectseg/pseudo.hpp"
#include "rectseg/synthdata.hpp"

namespace rectseg {

enum class LossMode { plain_ce, rectified, thresholded };

std::string loss_mode_name(LossMode m);

struct ExperimentConfig {
    std::uint64_t seed = 1;
    int source_iters = 3000;
    int adapt_iters = 2000;
    double early_stop = 0.5; // fraction of adapt_iters actually run
    int batch = 8;
    double base_lr = 1e-4;
    double poly_power = 0.9;
    double momentum = 0.9;
    ModelConfig model;
    AugmentPolicy augment;
    LossMode loss_mode = LossMode::rectified;
    double tau = 0.9; // thresholded mode only
    RectifiedLossConfig rect;
    double pretrain_aux_ce_weight = 0.5;
    double alpha = 1.0, beta = 0.5; // combined-head inference weights
    bool tie_heads = false;         // debug: aux output forced equal to primary

    void validate() const;
};

// base * (1 - iter/total)^power; rejects iter outside [0, total]
double poly_lr(int iter, int total, double base, double power);

struct TrainLogRow {
    int iter = 0;
    double lr = 0, loss = 0, ce_term = 0, var_term = 0;
};

struct TrainResult {
    TwoHeadSegNet net;
    std::vector<TrainLogRow> history;
    int skipped_batches = 0;
};

// Supervised pretraining on the labeled source domain; both heads receive
// cross-entropy on the true labels (aux weighted by pretrain_aux_ce_weight).
TrainResult pretrain_source(const std::vector<LabeledImage>& source, const ExperimentConfig& cfg);

// Target images without any annotation; adapt() can only see these plus the
// frozen pseudo labels.
struct ImageOnly {
    int h = 0, w = 0;
    std::vector<double> image;
};

std::vector<ImageOnly> strip_labels(const std::vector<LabeledImage>& data);

// Fine-tunes a copy of the source model on target crops with the configured
// loss under the poly schedule, stopping at early_stop * adapt_iters.
TrainResult adapt(const TwoHeadSegNet& source_net, const std::vector<ImageOnly>& target_images,
                  const PseudoLabelSet& pl, const ExperimentConfig& cfg);

} // namespace rectseg
