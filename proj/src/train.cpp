#include "rectseg/train.hpp"

#include <cmath>
#include <stdexcept>

namespace rectseg {

std::string loss_mode_name(LossMode m) {
    switch (m) {
        case LossMode::plain_ce: return "plain_ce";
        case LossMode::rectified: return "rectified";
        case LossMode::thresholded: return "thresholded";
    }
    return "?";
}

void ExperimentConfig::validate() const {
    model.validate();
    if (source_iters < 0 || adapt_iters < 0) throw std::invalid_argument("config: iteration counts must be >= 0");
    if (!(early_stop > 0.0 && early_stop <= 1.0))
        throw std::invalid_argument("config: early_stop must be in (0,1]");
    if (batch < 1) throw std::invalid_argument("config: batch must be >= 1");
    if (!(base_lr > 0.0)) throw std::invalid_argument("config: base_lr must be positive");
    if (momentum < 0.0 || momentum >= 1.0) throw std::invalid_argument("config: momentum must be in [0,1)");
    if (tau < 0.0 || tau > 1.0) throw std::invalid_argument("config: tau must be in [0,1]");
    if (pretrain_aux_ce_weight < 0.0) throw std::invalid_argument("config: pretrain_aux_ce_weight must be >= 0");
    if (alpha < 0.0 || beta < 0.0 || (alpha == 0.0 && beta == 0.0))
        throw std::invalid_argument("config: inference weights must be nonnegative and not both zero");
}

double poly_lr(int iter, int total, double base, double power) {
    if (total <= 0) throw std::invalid_argument("poly_lr: total must be positive");
    if (iter < 0 || iter > total)
        throw std::invalid_argument("poly_lr: iter " + std::to_string(iter) + " outside [0," +
                                    std::to_string(total) + "]");
    return base * std::pow(1.0 - static_cast<double>(iter) / static_cast<double>(total), power);
}

namespace {

constexpr std::uint64_t kInitSalt = 0x11;
constexpr std::uint64_t kPretrainSalt = 0x22;
constexpr std::uint64_t kAdaptSalt = 0x33;

TargetLabels targets_from(const LabeledImage& img, int classes) {
    TargetLabels t;
    t.h = img.h;
    t.w = img.w;
    t.classes = classes;
    t.labels = img.labels;
    t.valid = img.mask;
    return t;
}

} // namespace

std::vector<ImageOnly> strip_labels(const std::vector<LabeledImage>& data) {
    std::vector<ImageOnly> out;
    out.reserve(data.size());
    for (const auto& img : data) out.push_back(ImageOnly{img.h, img.w, img.image});
    return out;
}

TrainResult pretrain_source(const std::vector<LabeledImage>& source, const ExperimentConfig& cfg) {
    cfg.validate();
    if (source.empty()) throw std::invalid_argument("pretrain_source: empty dataset");

    Rng seed_rng(cfg.seed);
    Rng init_rng = seed_rng.child(kInitSalt);
    Rng rng = seed_rng.child(kPretrainSalt);

    TrainResult result{TwoHeadSegNet(cfg.model, init_rng), {}, 0};
    SgdOptimizer opt(result.net.parameters(), cfg.momentum);
    const int classes = cfg.model.classes;

    for (int it = 0; it < cfg.source_iters; ++it) {
        const double lr = poly_lr(it, cfg.source_iters, cfg.base_lr, cfg.poly_power);
        Graph graph;
        Tensor total;
        int used = 0;
        for (int b = 0; b < cfg.batch; ++b) {
            const auto& img = source[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(source.size())))];
            const LabeledImage sample = augment(img, rng, cfg.augment);
            TargetLabels t = targets_from(sample, classes);
            if (t.valid_count() == 0) continue;
            auto x = Tensor::from_data({sample.h, sample.w, 3}, sample.image);
            auto fwd = result.net.forward(x, Mode::train, rng);
            Tensor crop_loss = cross_entropy(fwd.primary.probs, t);
            if (cfg.pretrain_aux_ce_weight > 0.0)
                crop_loss = add(crop_loss, scale(cross_entropy(fwd.aux.probs, t), cfg.pretrain_aux_ce_weight));
            total = total.defined() ? add(total, crop_loss) : crop_loss;
            ++used;
        }
        if (used == 0) {
            ++result.skipped_batches;
            continue;
        }
        Tensor loss = scale(total, 1.0 / used);
        const double loss_v = loss.item();
        if (!std::isfinite(loss_v))
            throw std::runtime_error("pretrain diverged at iteration " + std::to_string(it) +
                                     " (loss is not finite)");
        graph.backward(loss);
        opt.step(lr);
        result.history.push_back({it, lr, loss_v, loss_v, 0.0});
    }
    return result;
}

TrainResult adapt(const TwoHeadSegNet& source_net, const std::vector<ImageOnly>& target_images,
                  const PseudoLabelSet& pl, const ExperimentConfig& cfg) {
    cfg.validate();
    if (target_images.empty()) throw std::invalid_argument("adapt: empty target set");
    if (pl.image_count() != target_images.size())
        throw std::invalid_argument("adapt: pseudo labels cover " + std::to_string(pl.image_count()) +
                                    " images but the target set has " + std::to_string(target_images.size()));

    Rng seed_rng(cfg.seed);
    Rng rng = seed_rng.child(kAdaptSalt);

    TrainResult result{source_net.clone(), {}, 0};
    SgdOptimizer opt(result.net.parameters(), cfg.momentum);
    const int classes = source_net.config().classes;

    const PseudoLabelSet working =
        cfg.loss_mode == LossMode::thresholded ? threshold_filter(pl, cfg.tau) : pl;

    const int run_iters = static_cast<int>(std::lround(cfg.early_stop * cfg.adapt_iters));
    for (int it = 0; it < run_iters; ++it) {
        const double lr = poly_lr(it, cfg.adapt_iters, cfg.base_lr, cfg.poly_power);
        Graph graph;
        Tensor total;
        double ce_term = 0.0, var_term = 0.0;
        int used = 0;
        for (int b = 0; b < cfg.batch; ++b) {
            const int idx = rng.uniform_int(static_cast<int>(target_images.size()));
            const auto& img = target_images[static_cast<std::size_t>(idx)];
            LabeledImage carrier;
            carrier.h = img.h;
            carrier.w = img.w;
            carrier.image = img.image;
            carrier.labels = working.labels[static_cast<std::size_t>(idx)];
            carrier.mask = working.valid[static_cast<std::size_t>(idx)];
            const LabeledImage sample = augment(carrier, rng, cfg.augment);
            TargetLabels t = targets_from(sample, classes);
            if (t.valid_count() == 0) continue;

            auto x = Tensor::from_data({sample.h, sample.w, 3}, sample.image);
            auto fwd = result.net.forward(x, Mode::train, rng);
            const Tensor& probs_aux = cfg.tie_heads ? fwd.primary.probs : fwd.aux.probs;

            Tensor crop_loss;
            if (cfg.loss_mode == LossMode::rectified) {
                RectifiedParts parts = rectified_loss(fwd.primary.probs, probs_aux, t, cfg.rect);
                crop_loss = parts.loss;
                ce_term += parts.ce_term;
                var_term += parts.var_term;
            } else {
                crop_loss = cross_entropy(fwd.primary.probs, t);
                ce_term += crop_loss.item();
            }
            total = total.defined() ? add(total, crop_loss) : crop_loss;
            ++used;
        }
        if (used == 0) {
            ++result.skipped_batches;
            continue;
        }
        Tensor loss = scale(total, 1.0 / used);
        const double loss_v = loss.item();
        if (!std::isfinite(loss_v))
            throw std::runtime_error("adapt diverged at iteration " + std::to_string(it) +
                                     " (loss is not finite)");
        graph.backward(loss);
        opt.step(lr);
        result.history.push_back({it, lr, loss_v, ce_term / used, var_term / used});
    }
    if (run_iters > 0 && result.history.empty())
        throw std::runtime_error("adapt: every batch was skipped (no valid pseudo labels under tau=" +
                                 std::to_string(cfg.tau) + ")");
    return result;
}

} // namespace rectseg
