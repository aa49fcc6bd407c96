#include "rectseg/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "rectseg/pnm.hpp"

namespace rectseg {

std::string variance_kind_name(VarianceKind k) {
    switch (k) {
        case VarianceKind::kl_forward: return "kl_forward";
        case VarianceKind::kl_reversed: return "kl_reversed";
        case VarianceKind::mse: return "mse";
        case VarianceKind::naive: return "naive";
        case VarianceKind::true_label: return "true";
        case VarianceKind::mc_dropout: return "mc_dropout";
    }
    return "?";
}

namespace {

void check_pair(const ProbMap& a, const ProbMap& b, const char* op) {
    if (a.h != b.h || a.w != b.w || a.c != b.c)
        throw std::invalid_argument(std::string(op) + ": probability map shapes differ");
}

double clamped(double p) { return std::min(std::max(p, kProbFloor), 1.0); }

VarianceMap blank(int h, int w, VarianceKind kind) {
    VarianceMap vm;
    vm.h = h;
    vm.w = w;
    vm.kind = kind;
    vm.values.assign(static_cast<std::size_t>(h) * w, 0.0);
    vm.defined.assign(static_cast<std::size_t>(h) * w, 1);
    return vm;
}

} // namespace

VarianceMap kl_variance(const ProbMap& primary, const ProbMap& aux, KlDirection direction) {
    check_pair(primary, aux, "kl_variance");
    VarianceMap vm = blank(primary.h, primary.w,
                           direction == KlDirection::forward ? VarianceKind::kl_forward
                                                             : VarianceKind::kl_reversed);
    const ProbMap& p = direction == KlDirection::forward ? primary : aux;
    const ProbMap& q = direction == KlDirection::forward ? aux : primary;
    for (std::size_t px = 0; px < vm.values.size(); ++px) {
        double d = 0.0;
        for (int c = 0; c < primary.c; ++c) {
            const double pc = p.p[px * primary.c + c];
            const double qc = q.p[px * primary.c + c];
            d += pc * (std::log(clamped(pc)) - std::log(clamped(qc)));
        }
        vm.values[px] = std::max(0.0, d);
    }
    return vm;
}

VarianceMap mse_variance(const ProbMap& primary, const ProbMap& aux) {
    check_pair(primary, aux, "mse_variance");
    VarianceMap vm = blank(primary.h, primary.w, VarianceKind::mse);
    for (std::size_t px = 0; px < vm.values.size(); ++px) {
        double d = 0.0;
        for (int c = 0; c < primary.c; ++c) {
            const double diff = primary.p[px * primary.c + c] - aux.p[px * primary.c + c];
            d += diff * diff;
        }
        vm.values[px] = d;
    }
    return vm;
}

VarianceMap naive_variance(const ProbMap& primary, const std::vector<std::uint8_t>& pseudo_labels,
                           const std::vector<std::uint8_t>& valid) {
    const std::size_t n = static_cast<std::size_t>(primary.h) * primary.w;
    if (pseudo_labels.size() != n || valid.size() != n)
        throw std::invalid_argument("naive_variance: label/mask shapes differ from the probability map");
    VarianceMap vm = blank(primary.h, primary.w, VarianceKind::naive);
    for (std::size_t px = 0; px < n; ++px) {
        if (!valid[px]) {
            vm.defined[px] = 0;
            vm.values[px] = 0.0;
            continue;
        }
        double d = 0.0;
        for (int c = 0; c < primary.c; ++c) {
            const double target = pseudo_labels[px] == c ? 1.0 : 0.0;
            const double diff = primary.p[px * primary.c + c] - target;
            d += diff * diff;
        }
        vm.values[px] = d;
    }
    return vm;
}

VarianceMap true_variance(const ProbMap& primary, const std::vector<std::uint8_t>& gt_labels) {
    const std::size_t n = static_cast<std::size_t>(primary.h) * primary.w;
    if (gt_labels.size() != n)
        throw std::invalid_argument("true_variance: label shape differs from the probability map");
    std::vector<std::uint8_t> all_valid(n, 1);
    VarianceMap vm = naive_variance(primary, gt_labels, all_valid);
    vm.kind = VarianceKind::true_label;
    return vm;
}

VarianceMap mc_dropout_variance(const TwoHeadSegNet& net, const LabeledImage& img, double rate, int samples,
                                Rng& rng) {
    if (rate < 0.0 || rate >= 1.0)
        throw std::invalid_argument("mc_dropout_variance: rate must be in [0,1)");
    if (samples < 1) throw std::invalid_argument("mc_dropout_variance: need at least one sample");

    auto x = Tensor::from_data({img.h, img.w, 3}, img.image);
    Rng eval_rng(0);
    const ProbMap base = to_probmap(net.forward(x, Mode::eval, eval_rng).primary.probs);

    // same weights, dropout forced to the requested rate for the stochastic passes
    ModelConfig mc_cfg = net.config();
    mc_cfg.dropout_rate = rate;
    TwoHeadSegNet stochastic = [&] {
        Rng scratch(0);
        TwoHeadSegNet n2(mc_cfg, scratch);
        auto src = net.parameters();
        auto dst = n2.parameters();
        for (std::size_t i = 0; i < src.size(); ++i) dst[i].data() = src[i].data();
        return n2;
    }();

    VarianceMap vm = blank(img.h, img.w, VarianceKind::mc_dropout);
    for (int t = 0; t < samples; ++t) {
        const ProbMap drop = to_probmap(stochastic.forward(x, Mode::train, rng).primary.probs);
        for (std::size_t px = 0; px < vm.values.size(); ++px) {
            double d = 0.0;
            for (int c = 0; c < base.c; ++c) {
                const double pc = base.p[px * base.c + c];
                const double qc = drop.p[px * base.c + c];
                d += pc * (std::log(clamped(pc)) - std::log(clamped(qc)));
            }
            vm.values[px] += std::max(0.0, d);
        }
    }
    for (auto& v : vm.values) v /= static_cast<double>(samples);
    return vm;
}

CertaintyMap certainty(const VarianceMap& vm) {
    CertaintyMap cm;
    cm.h = vm.h;
    cm.w = vm.w;
    cm.defined = vm.defined;
    cm.values.resize(vm.values.size());
    for (std::size_t i = 0; i < vm.values.size(); ++i) {
        if (vm.values[i] < 0.0)
            throw std::invalid_argument("certainty: variance must be nonnegative");
        cm.values[i] = std::exp(-vm.values[i]);
    }
    return cm;
}

UncertaintyGapReport uncertainty_gap(const CertaintyMap& cm, const LabelMap& pred, const LabelMap& gt,
                                     std::optional<double> confidence_floor,
                                     const std::vector<double>* confidence) {
    if (pred.h != cm.h || pred.w != cm.w || gt.h != cm.h || gt.w != cm.w)
        throw std::invalid_argument("uncertainty_gap: shape mismatch");
    if (confidence_floor && !confidence)
        throw std::invalid_argument("uncertainty_gap: confidence map required with a confidence floor");
    double right_sum = 0.0, wrong_sum = 0.0;
    UncertaintyGapReport rep;
    for (std::size_t px = 0; px < cm.values.size(); ++px) {
        if (!cm.defined[px]) continue;
        if (confidence_floor && !((*confidence)[px] > *confidence_floor)) continue;
        if (pred.ids[px] == gt.ids[px]) {
            right_sum += cm.values[px];
            ++rep.right_count;
        } else {
            wrong_sum += cm.values[px];
            ++rep.wrong_count;
        }
    }
    if (rep.right_count) rep.right_certainty = right_sum / static_cast<double>(rep.right_count);
    if (rep.wrong_count) rep.wrong_certainty = wrong_sum / static_cast<double>(rep.wrong_count);
    if (rep.right_certainty && rep.wrong_certainty) rep.gap = *rep.right_certainty - *rep.wrong_certainty;
    return rep;
}

void export_heatmap(const std::string& path, const std::vector<double>& values, int h, int w) {
    if (values.size() != static_cast<std::size_t>(h) * w)
        throw std::invalid_argument("export_heatmap: value count does not match h*w");
    double lo = values.empty() ? 0.0 : values[0];
    double hi = lo;
    for (double v : values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double span = hi - lo;
    Pgm16 img;
    img.w = w;
    img.h = h;
    img.pixels.resize(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double unit = span > 0.0 ? (values[i] - lo) / span : 0.0;
        img.pixels[i] = static_cast<std::uint16_t>(std::lround(unit * 65535.0));
    }
    write_pgm16(path, img);
    std::ofstream side(path + ".range.txt", std::ios::binary);
    if (!side) throw std::runtime_error("cannot write heatmap sidecar for " + path);
    side << "min=" << lo << "\n" << "max=" << hi << "\n";
}

} // namespace rectseg
