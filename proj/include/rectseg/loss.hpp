#pragma once

#include <vector>

#include "rectseg/tensor.hpp"
#include "rectseg/uncertainty.hpp"

namespace rectseg {

// Hard per-pixel training targets plus a validity mask (ground-truth labels
// during pretraining, frozen pseudo labels during adaptation).
struct TargetLabels {
    int h = 0, w = 0, classes = 0;
    std::vector<std::uint8_t> labels;
    std::vector<std::uint8_t> valid;

    std::int64_t valid_count() const;
};

enum class VarianceGradMode { detached, full };

struct RectifiedLossConfig {
    VarianceKind distance = VarianceKind::kl_forward; // kl_forward, kl_reversed or mse
    VarianceGradMode variance_grad = VarianceGradMode::detached;
    double aux_ce_weight = 0.0;
};

// Mean over valid pixels of -log P[label], probabilities clamped before the
// log. Rejects an empty valid mask.
Tensor cross_entropy(const Tensor& probs, const TargetLabels& targets);

struct RectifiedParts {
    Tensor loss;         // scalar graph tensor
    double ce_term = 0;  // value of the damped cross-entropy part
    double var_term = 0; // value of the additive variance part
};

// Per valid pixel: exp(-D) * ce + D, mean-reduced. With variance_grad ==
// detached the exp(-D) factor is a constant during backward while the
// additive D term stays differentiable. Passing the same tensor for both
// heads collapses to cross_entropy bit-for-bit.
RectifiedParts rectified_loss(const Tensor& probs_primary, const Tensor& probs_aux,
                              const TargetLabels& targets, const RectifiedLossConfig& cfg);

struct LossFloorReport {
    bool converged_to_zero = false;
    double floor = 0.0; // mean of the last 10% of the history
};

LossFloorReport loss_floor_probe(const std::vector<double>& history);

} // namespace rectseg
