#include "rectseg/pseudo.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "rectseg/pnm.hpp"

namespace fs = std::filesystem;

namespace rectseg {

PseudoLabelSet generate_pseudo_labels(const TwoHeadSegNet& net, const std::vector<LabeledImage>& targets,
                                      const std::string& provenance) {
    if (targets.empty()) throw std::invalid_argument("generate_pseudo_labels: empty target set");
    PseudoLabelSet pl;
    pl.h = targets.front().h;
    pl.w = targets.front().w;
    pl.classes = net.config().classes;
    pl.provenance = provenance;
    Rng rng(0); // eval mode consumes no randomness
    for (const auto& img : targets) {
        auto x = Tensor::from_data({img.h, img.w, 3}, img.image);
        auto fwd = net.forward(x, Mode::eval, rng);
        const ProbMap pm = to_probmap(fwd.primary.probs);
        std::vector<std::uint8_t> labels(static_cast<std::size_t>(pm.h) * pm.w);
        std::vector<double> conf(labels.size());
        for (std::size_t px = 0; px < labels.size(); ++px) {
            const double* pp = &pm.p[px * pm.c];
            int best = 0;
            for (int c = 1; c < pm.c; ++c)
                if (pp[c] > pp[best]) best = c;
            labels[px] = static_cast<std::uint8_t>(best);
            conf[px] = pp[best];
        }
        pl.labels.push_back(std::move(labels));
        pl.confidence.push_back(std::move(conf));
        pl.valid.emplace_back(static_cast<std::size_t>(pm.h) * pm.w, 1);
    }
    return pl;
}

PseudoLabelSet threshold_filter(const PseudoLabelSet& pl, double tau) {
    PseudoLabelSet out = pl;
    for (std::size_t i = 0; i < out.valid.size(); ++i)
        for (std::size_t px = 0; px < out.valid[i].size(); ++px)
            if (!(out.confidence[i][px] > tau)) out.valid[i][px] = 0;
    out.tau_history.push_back(tau);
    return out;
}

PseudoQuality pseudo_quality_report(const PseudoLabelSet& pl, const std::vector<LabeledImage>& ground_truth) {
    if (pl.image_count() != ground_truth.size())
        throw std::invalid_argument("pseudo_quality_report: image count mismatch");
    PseudoQuality q;
    std::vector<std::int64_t> class_total(static_cast<std::size_t>(pl.classes), 0);
    std::vector<std::int64_t> class_hit(static_cast<std::size_t>(pl.classes), 0);
    std::int64_t valid = 0, hit = 0, total = 0;
    for (std::size_t i = 0; i < pl.image_count(); ++i) {
        const auto& gt = ground_truth[i];
        if (gt.h != pl.h || gt.w != pl.w)
            throw std::invalid_argument("pseudo_quality_report: shape mismatch at image " + std::to_string(i));
        for (std::size_t px = 0; px < pl.labels[i].size(); ++px) {
            ++total;
            if (!pl.valid[i][px]) continue;
            ++valid;
            const int g = gt.labels[px];
            ++class_total[static_cast<std::size_t>(g)];
            if (pl.labels[i][px] == g) {
                ++hit;
                ++class_hit[static_cast<std::size_t>(g)];
            }
        }
    }
    q.fraction_valid = total ? static_cast<double>(valid) / static_cast<double>(total) : 0.0;
    q.accuracy = valid ? static_cast<double>(hit) / static_cast<double>(valid) : 0.0;
    for (int c = 0; c < pl.classes; ++c)
        q.per_class_accuracy.push_back(class_total[static_cast<std::size_t>(c)]
                                           ? static_cast<double>(class_hit[static_cast<std::size_t>(c)]) /
                                                 static_cast<double>(class_total[static_cast<std::size_t>(c)])
                                           : -1.0);
    return q;
}

void save_pseudo_labels(const std::string& dir, const PseudoLabelSet& pl) {
    fs::create_directories(dir);
    char name[64];
    std::ostringstream manifest;
    manifest << "# rectseg pseudo labels\n";
    manifest << "count=" << pl.image_count() << "\n";
    manifest << "classes=" << pl.classes << "\n";
    manifest << "provenance=" << pl.provenance << "\n";
    manifest << "tau_history=";
    for (std::size_t i = 0; i < pl.tau_history.size(); ++i) {
        if (i) manifest << ",";
        manifest << pl.tau_history[i];
    }
    manifest << "\n";
    for (std::size_t i = 0; i < pl.image_count(); ++i) {
        std::snprintf(name, sizeof(name), "plab_%05zu.pgm", i);
        const std::string lab_name = name;
        std::snprintf(name, sizeof(name), "conf_%05zu.pgm", i);
        const std::string conf_name = name;
        std::snprintf(name, sizeof(name), "pmsk_%05zu.pgm", i);
        const std::string msk_name = name;
        write_pgm8(dir + "/" + lab_name, Pgm8{pl.w, pl.h, pl.labels[i]});
        Pgm16 conf;
        conf.w = pl.w;
        conf.h = pl.h;
        conf.pixels.resize(pl.confidence[i].size());
        for (std::size_t px = 0; px < conf.pixels.size(); ++px)
            conf.pixels[px] = static_cast<std::uint16_t>(std::lround(pl.confidence[i][px] * 65535.0));
        write_pgm16(dir + "/" + conf_name, conf);
        write_pgm8(dir + "/" + msk_name, Pgm8{pl.w, pl.h, pl.valid[i]});
        manifest << lab_name << " " << conf_name << " " << msk_name << "\n";
    }
    std::ofstream out(dir + "/manifest.txt", std::ios::binary);
    out << manifest.str();
}

PseudoLabelSet load_pseudo_labels(const std::string& dir) {
    std::ifstream in(dir + "/manifest.txt");
    if (!in) throw std::runtime_error("cannot open pseudo-label manifest in " + dir);
    PseudoLabelSet pl;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq != std::string::npos) {
            const std::string key = line.substr(0, eq);
            const std::string val = line.substr(eq + 1);
            if (key == "classes") pl.classes = std::stoi(val);
            if (key == "provenance") pl.provenance = val;
            if (key == "tau_history" && !val.empty()) {
                std::istringstream ss(val);
                std::string tok;
                while (std::getline(ss, tok, ',')) pl.tau_history.push_back(std::stod(tok));
            }
            continue;
        }
        std::istringstream ss(line);
        std::string lab_name, conf_name, msk_name;
        if (!(ss >> lab_name >> conf_name >> msk_name))
            throw std::runtime_error("malformed pseudo-label manifest line: " + line);
        const Pgm8 lab = read_pgm8(dir + "/" + lab_name);
        const Pgm16 conf = read_pgm16(dir + "/" + conf_name);
        const Pgm8 msk = read_pgm8(dir + "/" + msk_name);
        pl.h = lab.h;
        pl.w = lab.w;
        pl.labels.push_back(lab.pixels);
        std::vector<double> c(conf.pixels.size());
        for (std::size_t px = 0; px < c.size(); ++px) c[px] = static_cast<double>(conf.pixels[px]) / 65535.0;
        pl.confidence.push_back(std::move(c));
        pl.valid.push_back(msk.pixels);
    }
    if (pl.image_count() == 0) throw std::runtime_error("pseudo-label set " + dir + " lists no images");
    return pl;
}

} // namespace rectseg
