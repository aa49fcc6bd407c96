#include "rectseg/loss.hpp"

#include <stdexcept>

namespace rectseg {

std::int64_t TargetLabels::valid_count() const {
    std::int64_t n = 0;
    for (auto v : valid) n += v ? 1 : 0;
    return n;
}

namespace {

void check_targets(const Tensor& probs, const TargetLabels& t, const char* op) {
    if (probs.shape().size() != 3)
        throw std::invalid_argument(std::string(op) + ": probabilities must be [H,W,C]");
    if (probs.shape()[0] != t.h || probs.shape()[1] != t.w || probs.shape()[2] != t.classes)
        throw std::invalid_argument(std::string(op) + ": target shape " + std::to_string(t.h) + "x" +
                                    std::to_string(t.w) + "x" + std::to_string(t.classes) +
                                    " does not match probabilities " + shape_str(probs.shape()));
    const std::size_t n = static_cast<std::size_t>(t.h) * t.w;
    if (t.labels.size() != n || t.valid.size() != n)
        throw std::invalid_argument(std::string(op) + ": label/mask buffers have the wrong length");
    for (std::size_t i = 0; i < n; ++i)
        if (t.valid[i] && t.labels[i] >= t.classes)
            throw std::invalid_argument(std::string(op) + ": label id out of range");
}

Tensor onehot_constant(const TargetLabels& t) {
    std::vector<double> v(static_cast<std::size_t>(t.h) * t.w * t.classes, 0.0);
    for (std::size_t px = 0; px < t.labels.size(); ++px)
        if (t.valid[px]) v[px * t.classes + t.labels[px]] = 1.0;
    return Tensor::from_data({t.h, t.w, t.classes}, std::move(v));
}

Tensor valid_mean_weights(const TargetLabels& t, std::int64_t nvalid) {
    std::vector<double> v(static_cast<std::size_t>(t.h) * t.w, 0.0);
    const double inv = 1.0 / static_cast<double>(nvalid);
    for (std::size_t px = 0; px < t.valid.size(); ++px)
        if (t.valid[px]) v[px] = inv;
    return Tensor::from_data({t.h, t.w}, std::move(v));
}

// -sum_c onehot_c * log(clamp(P_c)) per pixel; zero at invalid pixels
Tensor ce_map_from(const Tensor& log_probs_clamped, const TargetLabels& t) {
    return scale(sum_last_axis(mul(onehot_constant(t), log_probs_clamped)), -1.0);
}

} // namespace

Tensor cross_entropy(const Tensor& probs, const TargetLabels& targets) {
    check_targets(probs, targets, "cross_entropy");
    const auto nvalid = targets.valid_count();
    if (nvalid == 0) throw std::invalid_argument("cross_entropy: empty valid mask, no training signal");
    Tensor lc = log(clamp(probs, kProbFloor, 1.0));
    return sum(mul(ce_map_from(lc, targets), valid_mean_weights(targets, nvalid)));
}

RectifiedParts rectified_loss(const Tensor& probs_primary, const Tensor& probs_aux,
                              const TargetLabels& targets, const RectifiedLossConfig& cfg) {
    check_targets(probs_primary, targets, "rectified_loss");
    if (probs_primary.shape() != probs_aux.shape())
        throw std::invalid_argument("rectified_loss: head shapes differ");
    if (cfg.distance != VarianceKind::kl_forward && cfg.distance != VarianceKind::kl_reversed &&
        cfg.distance != VarianceKind::mse)
        throw std::invalid_argument("rectified_loss: distance must be kl_forward, kl_reversed or mse");
    if (cfg.aux_ce_weight < 0.0)
        throw std::invalid_argument("rectified_loss: aux_ce_weight must be >= 0");
    const auto nvalid = targets.valid_count();
    if (nvalid == 0) throw std::invalid_argument("rectified_loss: empty valid mask, no training signal");

    const bool tied = probs_primary.same_state(probs_aux);
    Tensor lc_primary = log(clamp(probs_primary, kProbFloor, 1.0));
    Tensor lc_aux = tied ? lc_primary : log(clamp(probs_aux, kProbFloor, 1.0));

    Tensor distance_map; // [H,W]
    switch (cfg.distance) {
        case VarianceKind::kl_forward:
            distance_map = sum_last_axis(mul(probs_primary, sub(lc_primary, lc_aux)));
            break;
        case VarianceKind::kl_reversed:
            distance_map = sum_last_axis(mul(probs_aux, sub(lc_aux, lc_primary)));
            break;
        default:
            distance_map = [&] {
                Tensor diff = sub(probs_primary, probs_aux);
                return sum_last_axis(mul(diff, diff));
            }();
            break;
    }

    Tensor damping_input =
        cfg.variance_grad == VarianceGradMode::detached ? detach(distance_map) : distance_map;
    Tensor damping = exp(scale(damping_input, -1.0));

    Tensor ce_map = ce_map_from(lc_primary, targets);
    Tensor weights = valid_mean_weights(targets, nvalid);
    Tensor damped_ce = mul(ce_map, damping);
    Tensor pixel_loss = add(damped_ce, distance_map);
    Tensor total = sum(mul(pixel_loss, weights));

    RectifiedParts parts;
    for (std::size_t px = 0; px < weights.data().size(); ++px) {
        parts.ce_term += damped_ce.data()[px] * weights.data()[px];
        parts.var_term += distance_map.data()[px] * weights.data()[px];
    }
    if (cfg.aux_ce_weight > 0.0) {
        Tensor aux_ce = cross_entropy(probs_aux, targets);
        parts.ce_term += cfg.aux_ce_weight * aux_ce.item();
        total = add(total, scale(aux_ce, cfg.aux_ce_weight));
    }
    parts.loss = total;
    return parts;
}

LossFloorReport loss_floor_probe(const std::vector<double>& history) {
    if (history.size() < 100)
        throw std::invalid_argument("loss_floor_probe: need at least 100 loss values");
    const std::size_t tail = history.size() / 10;
    double acc = 0.0;
    for (std::size_t i = history.size() - tail; i < history.size(); ++i) acc += history[i];
    LossFloorReport rep;
    rep.floor = acc / static_cast<double>(tail);
    rep.converged_to_zero = rep.floor < 1e-3;
    return rep;
}

} // namespace rectseg
