#include "rectseg/eval.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace rectseg {

std::int64_t ConfusionMatrix::total() const {
    std::int64_t t = 0;
    for (auto v : counts) t += v;
    return t;
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
    if (other.classes != classes) throw std::invalid_argument("confusion merge: class counts differ");
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
}

ConfusionMatrix confusion(const LabelMap& pred, const std::vector<std::uint8_t>& gt,
                          const std::vector<std::uint8_t>& mask, int classes) {
    const std::size_t n = static_cast<std::size_t>(pred.h) * pred.w;
    if (gt.size() != n || mask.size() != n)
        throw std::invalid_argument("confusion: prediction and ground truth shapes differ");
    ConfusionMatrix cm;
    cm.classes = classes;
    cm.counts.assign(static_cast<std::size_t>(classes) * classes, 0);
    for (std::size_t px = 0; px < n; ++px) {
        if (!mask[px]) continue;
        const int t = gt[px], p = pred.ids[px];
        if (t >= classes || p >= classes)
            throw std::invalid_argument("confusion: label id " + std::to_string(std::max(t, p)) +
                                        " out of range for " + std::to_string(classes) + " classes");
        ++cm.at(t, p);
    }
    return cm;
}

IoUReport iou_report(const ConfusionMatrix& cm) {
    IoUReport rep;
    double acc = 0.0;
    int defined = 0;
    for (int c = 0; c < cm.classes; ++c) {
        std::int64_t row = 0, col = 0;
        for (int j = 0; j < cm.classes; ++j) {
            row += cm.at(c, j);
            col += cm.at(j, c);
        }
        const std::int64_t denom = row + col - cm.at(c, c);
        if (denom == 0) {
            rep.per_class.push_back(std::numeric_limits<double>::quiet_NaN());
            rep.defined.push_back(false);
            continue;
        }
        const double iou = static_cast<double>(cm.at(c, c)) / static_cast<double>(denom);
        rep.per_class.push_back(iou);
        rep.defined.push_back(true);
        acc += iou;
        ++defined;
    }
    if (defined == 0) throw std::invalid_argument("iou_report: every class is absent, empty evaluation");
    rep.miou = acc / defined;
    return rep;
}

BiasDecomposition bias_decomposition(const ProbMap& primary, const std::vector<std::uint8_t>& pseudo_labels,
                                     const std::vector<std::uint8_t>& gt_labels) {
    const std::size_t n = static_cast<std::size_t>(primary.h) * primary.w;
    if (pseudo_labels.size() != n || gt_labels.size() != n)
        throw std::invalid_argument("bias_decomposition: shape mismatch");
    BiasDecomposition out;
    for (std::size_t px = 0; px < n; ++px) {
        for (int c = 0; c < primary.c; ++c) {
            const double ps = pseudo_labels[px] == c ? 1.0 : 0.0;
            const double tr = gt_labels[px] == c ? 1.0 : 0.0;
            out.term_pred_vs_pseudo += std::abs(primary.p[px * primary.c + c] - ps);
            out.term_pseudo_vs_true += std::abs(ps - tr);
        }
    }
    const double denom = static_cast<double>(n) * primary.c;
    out.term_pred_vs_pseudo /= denom;
    out.term_pseudo_vs_true /= denom;
    return out;
}

IoUReport evaluate_checkpoint(const TwoHeadSegNet& net, const std::vector<LabeledImage>& dataset,
                              double alpha, double beta) {
    if (dataset.empty()) throw std::invalid_argument("evaluate_checkpoint: empty dataset");
    ConfusionMatrix cm;
    cm.classes = net.config().classes;
    cm.counts.assign(static_cast<std::size_t>(cm.classes) * cm.classes, 0);
    Rng rng(0); // eval mode, unused
    for (const auto& img : dataset) {
        auto x = Tensor::from_data({img.h, img.w, 3}, img.image);
        auto fwd = net.forward(x, Mode::eval, rng);
        const LabelMap pred =
            combined_prediction(to_probmap(fwd.primary.probs), to_probmap(fwd.aux.probs), alpha, beta);
        cm.merge(confusion(pred, img.labels, img.mask, cm.classes));
    }
    return iou_report(cm);
}

std::string iou_report_text(const IoUReport& rep, const std::string& title) {
    std::ostringstream os;
    os << title << "\n";
    for (std::size_t c = 0; c < rep.per_class.size(); ++c) {
        os << "  class " << c << ": ";
        if (rep.defined[c])
            os << rep.per_class[c];
        else
            os << "undefined";
        os << "\n";
    }
    os << "  mIoU: " << rep.miou << "\n";
    return os.str();
}

} // namespace rectseg
