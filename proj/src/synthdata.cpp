#include "rectseg/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "rectseg/pnm.hpp"

namespace fs = std::filesystem;

namespace rectseg {

void DomainParams::validate(int classes) const {
    if (static_cast<int>(base_colors.size()) != classes)
        throw std::invalid_argument("domain: need one base color per class");
    if (static_cast<int>(class_freq.size()) != classes - 1)
        throw std::invalid_argument("domain: need one frequency weight per non-background class");
    for (double f : class_freq)
        if (!(f > 0.0)) throw std::invalid_argument("domain: frequency weights must be positive");
    if (noise_sigma < 0.0) throw std::invalid_argument("domain: noise sigma must be >= 0");
    if (texture_amplitude < 0.0) throw std::invalid_argument("domain: texture amplitude must be >= 0");
}

namespace {

// rgb <-> hsv in [0,1]; exact inverses away from the hexagon edges
std::array<double, 3> rgb_to_hsv(double r, double g, double b) {
    const double mx = std::max({r, g, b});
    const double mn = std::min({r, g, b});
    const double d = mx - mn;
    double h = 0.0;
    if (d > 0.0) {
        if (mx == r)
            h = std::fmod((g - b) / d, 6.0);
        else if (mx == g)
            h = (b - r) / d + 2.0;
        else
            h = (r - g) / d + 4.0;
        h /= 6.0;
        if (h < 0.0) h += 1.0;
    }
    const double s = mx > 0.0 ? d / mx : 0.0;
    return {h, s, mx};
}

std::array<double, 3> hsv_to_rgb(double h, double s, double v) {
    const double hh = std::fmod(h, 1.0) * 6.0;
    const int i = static_cast<int>(hh) % 6;
    const double f = hh - std::floor(hh);
    const double p = v * (1.0 - s);
    const double q = v * (1.0 - s * f);
    const double t = v * (1.0 - s * (1.0 - f));
    switch (i) {
        case 0: return {v, t, p};
        case 1: return {q, v, p};
        case 2: return {p, v, t};
        case 3: return {p, q, v};
        case 4: return {t, p, v};
        default: return {v, p, q};
    }
}

int sample_class(Rng& rng, const std::vector<double>& freq) {
    double total = 0.0;
    for (double f : freq) total += f;
    double u = rng.uniform() * total;
    for (std::size_t i = 0; i < freq.size(); ++i) {
        u -= freq[i];
        if (u < 0.0) return static_cast<int>(i) + 1;
    }
    return static_cast<int>(freq.size());
}

std::vector<std::array<double, 3>> palette(int classes) {
    // class 4 sits close to class 1 in color space; combined with its low
    // source-domain frequency it reproduces the rare-category confusion that
    // fixed confidence thresholds handle poorly
    static const std::array<double, 3> table[] = {
        {0.34, 0.40, 0.36}, // background: muted green-grey
        {0.72, 0.21, 0.18}, // red
        {0.18, 0.32, 0.70}, // blue
        {0.74, 0.66, 0.18}, // yellow
        {0.64, 0.27, 0.30}, // dusky red, confusable with class 1
        {0.20, 0.62, 0.58}, // teal
        {0.80, 0.48, 0.18}, // orange
        {0.46, 0.46, 0.46}, // grey
    };
    if (classes > static_cast<int>(std::size(table)))
        throw std::invalid_argument("palette supports up to 8 classes");
    return {table, table + classes};
}

} // namespace

DomainParams default_source_domain(int classes) {
    DomainParams d;
    d.base_colors = palette(classes);
    d.hue_shift = 0.0;
    d.noise_sigma = 0.05;
    d.texture_amplitude = 0.04;
    d.class_freq.assign(static_cast<std::size_t>(classes - 1), 1.0);
    d.class_freq.back() = 0.08; // last class is rare in the source domain
    return d;
}

DomainParams default_target_domain(int classes) {
    DomainParams d = default_source_domain(classes);
    d.hue_shift = 0.30;
    d.noise_sigma = 0.15;
    d.class_freq.assign(static_cast<std::size_t>(classes - 1), 1.0);
    return d;
}

DomainParams no_shift_target_domain(int classes) {
    return default_source_domain(classes);
}

std::vector<LabeledImage> gen_domain(std::uint64_t seed, int n, const SceneParams& params) {
    if (n < 1) throw std::invalid_argument("gen_domain: n must be >= 1");
    params.domain.validate(params.classes);
    if (params.shapes_min < 1 || params.shapes_max < params.shapes_min)
        throw std::invalid_argument("gen_domain: bad shape count range");

    const int H = params.canvas, W = params.canvas;
    const auto& dom = params.domain;
    std::vector<LabeledImage> out;
    out.reserve(static_cast<std::size_t>(n));

    Rng master(seed);
    for (int idx = 0; idx < n; ++idx) {
        Rng rng = master.child(static_cast<std::uint64_t>(idx) + 1);
        LabeledImage img;
        img.h = H;
        img.w = W;
        img.labels.assign(static_cast<std::size_t>(H) * W, 0);
        img.mask.assign(static_cast<std::size_t>(H) * W, 1);
        img.image.resize(static_cast<std::size_t>(H) * W * 3);

        // geometry draws come first so the scene layout law is shared by all
        // domains regardless of appearance parameters
        const int count = params.shapes_min + rng.uniform_int(params.shapes_max - params.shapes_min + 1);
        for (int s = 0; s < count; ++s) {
            const bool disk = rng.uniform() < 0.5;
            const int cy = rng.uniform_int(H);
            const int cx = rng.uniform_int(W);
            const int r = 4 + rng.uniform_int(std::max(1, H / 4));
            const int cls = sample_class(rng, dom.class_freq);
            for (int y = std::max(0, cy - r); y <= std::min(H - 1, cy + r); ++y) {
                for (int x = std::max(0, cx - r); x <= std::min(W - 1, cx + r); ++x) {
                    if (disk) {
                        const double dy = y - cy, dx = x - cx;
                        if (dy * dy + dx * dx > static_cast<double>(r) * r) continue;
                    }
                    img.labels[static_cast<std::size_t>(y) * W + x] = static_cast<std::uint8_t>(cls);
                }
            }
        }

        const double tex_fy = rng.uniform(0.05, 0.25);
        const double tex_fx = rng.uniform(0.05, 0.25);
        const double tex_phase = rng.uniform(0.0, 6.283185307179586);
        for (int y = 0; y < H; ++y) {
            for (int x = 0; x < W; ++x) {
                const int cls = img.labels[static_cast<std::size_t>(y) * W + x];
                std::array<double, 3> c = dom.base_colors[static_cast<std::size_t>(cls)];
                const double tex = dom.texture_amplitude *
                                   std::sin(6.283185307179586 * (tex_fy * y + tex_fx * x) + tex_phase);
                for (auto& ch : c) ch += tex;
                if (dom.hue_shift != 0.0) {
                    auto hsv = rgb_to_hsv(c[0], c[1], c[2]);
                    // hue_shift is in radians of hue angle
                    double hh = hsv[0] + dom.hue_shift / 6.283185307179586;
                    hh -= std::floor(hh);
                    c = hsv_to_rgb(hh, hsv[1], hsv[2]);
                }
                double* px = &img.image[(static_cast<std::size_t>(y) * W + x) * 3];
                for (int ch = 0; ch < 3; ++ch) {
                    double v = c[static_cast<std::size_t>(ch)];
                    if (dom.noise_sigma > 0.0) v += dom.noise_sigma * rng.normal();
                    px[ch] = std::clamp(v, 0.0, 1.0);
                }
            }
        }
        out.push_back(std::move(img));
    }
    return out;
}

// ---------------------------------------------------------------------------
// augmentation

LabeledImage hflip(const LabeledImage& img) {
    LabeledImage out = img;
    for (int y = 0; y < img.h; ++y) {
        for (int x = 0; x < img.w; ++x) {
            const std::size_t src = static_cast<std::size_t>(y) * img.w + (img.w - 1 - x);
            const std::size_t dst = static_cast<std::size_t>(y) * img.w + x;
            out.labels[dst] = img.labels[src];
            out.mask[dst] = img.mask[src];
            for (int c = 0; c < 3; ++c) out.image[dst * 3 + c] = img.image[src * 3 + c];
        }
    }
    return out;
}

LabeledImage rescale(const LabeledImage& img, double s) {
    if (!(s > 0.0)) throw std::invalid_argument("rescale: factor must be positive");
    const int oh = std::max(1, static_cast<int>(std::lround(img.h * s)));
    const int ow = std::max(1, static_cast<int>(std::lround(img.w * s)));
    LabeledImage out;
    out.h = oh;
    out.w = ow;
    out.labels.resize(static_cast<std::size_t>(oh) * ow);
    out.mask.resize(static_cast<std::size_t>(oh) * ow);
    out.image.resize(static_cast<std::size_t>(oh) * ow * 3);
    const double sy = static_cast<double>(img.h) / oh;
    const double sx = static_cast<double>(img.w) / ow;
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            // nearest-neighbor position for labels/mask
            const int ny = std::min(img.h - 1, static_cast<int>((y + 0.5) * sy));
            const int nx = std::min(img.w - 1, static_cast<int>((x + 0.5) * sx));
            const std::size_t dst = static_cast<std::size_t>(y) * ow + x;
            out.labels[dst] = img.labels[static_cast<std::size_t>(ny) * img.w + nx];
            out.mask[dst] = img.mask[static_cast<std::size_t>(ny) * img.w + nx];

            // bilinear for the image
            const double fy = (y + 0.5) * sy - 0.5;
            const double fx = (x + 0.5) * sx - 0.5;
            const int y0 = static_cast<int>(std::floor(fy));
            const int x0 = static_cast<int>(std::floor(fx));
            const double wy = fy - y0;
            const double wx = fx - x0;
            auto at = [&](int yy, int xx, int c) {
                yy = std::clamp(yy, 0, img.h - 1);
                xx = std::clamp(xx, 0, img.w - 1);
                return img.image[(static_cast<std::size_t>(yy) * img.w + xx) * 3 + c];
            };
            for (int c = 0; c < 3; ++c) {
                const double v = (1 - wy) * ((1 - wx) * at(y0, x0, c) + wx * at(y0, x0 + 1, c)) +
                                 wy * ((1 - wx) * at(y0 + 1, x0, c) + wx * at(y0 + 1, x0 + 1, c));
                out.image[dst * 3 + c] = v;
            }
        }
    }
    return out;
}

LabeledImage crop(const LabeledImage& img, int y0, int x0, int ch, int cw) {
    if (y0 < 0 || x0 < 0 || y0 + ch > img.h || x0 + cw > img.w)
        throw std::invalid_argument("crop: window does not fit the canvas");
    LabeledImage out;
    out.h = ch;
    out.w = cw;
    out.labels.resize(static_cast<std::size_t>(ch) * cw);
    out.mask.resize(static_cast<std::size_t>(ch) * cw);
    out.image.resize(static_cast<std::size_t>(ch) * cw * 3);
    for (int y = 0; y < ch; ++y) {
        for (int x = 0; x < cw; ++x) {
            const std::size_t src = static_cast<std::size_t>(y + y0) * img.w + (x + x0);
            const std::size_t dst = static_cast<std::size_t>(y) * cw + x;
            out.labels[dst] = img.labels[src];
            out.mask[dst] = img.mask[src];
            for (int c = 0; c < 3; ++c) out.image[dst * 3 + c] = img.image[src * 3 + c];
        }
    }
    return out;
}

LabeledImage augment(const LabeledImage& img, Rng& rng, const AugmentPolicy& policy) {
    LabeledImage work = rng.uniform() < policy.flip_p ? hflip(img) : img;
    const double s = rng.uniform(policy.scale_min, policy.scale_max);
    work = rescale(work, s);
    if (policy.crop_h > work.h || policy.crop_w > work.w)
        throw std::invalid_argument("augment: crop larger than the (rescaled) canvas");
    const int y0 = rng.uniform_int(work.h - policy.crop_h + 1);
    const int x0 = rng.uniform_int(work.w - policy.crop_w + 1);
    return crop(work, y0, x0, policy.crop_h, policy.crop_w);
}

// ---------------------------------------------------------------------------
// dataset io

void save_dataset(const std::string& dir, const std::vector<LabeledImage>& data,
                  std::uint64_t seed, const SceneParams& params) {
    fs::create_directories(dir);
    std::ostringstream manifest;
    manifest << "# rectseg dataset\n";
    manifest << "count=" << data.size() << "\n";
    manifest << "seed=" << seed << "\n";
    manifest << "canvas=" << params.canvas << "\n";
    manifest << "classes=" << params.classes << "\n";
    manifest << "hue_shift=" << params.domain.hue_shift << "\n";
    manifest << "noise_sigma=" << params.domain.noise_sigma << "\n";
    manifest << "texture_amplitude=" << params.domain.texture_amplitude << "\n";
    manifest << "class_freq=";
    for (std::size_t i = 0; i < params.domain.class_freq.size(); ++i) {
        if (i) manifest << ",";
        manifest << params.domain.class_freq[i];
    }
    manifest << "\n";

    char name[64];
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& img = data[i];
        std::snprintf(name, sizeof(name), "img_%05zu.ppm", i);
        const std::string img_name = name;
        std::snprintf(name, sizeof(name), "lab_%05zu.pgm", i);
        const std::string lab_name = name;
        std::snprintf(name, sizeof(name), "msk_%05zu.pgm", i);
        const std::string msk_name = name;

        Ppm8 ppm;
        ppm.w = img.w;
        ppm.h = img.h;
        ppm.pixels.resize(img.image.size());
        for (std::size_t j = 0; j < img.image.size(); ++j)
            ppm.pixels[j] = static_cast<std::uint8_t>(std::lround(std::clamp(img.image[j], 0.0, 1.0) * 255.0));
        write_ppm8(dir + "/" + img_name, ppm);
        write_pgm8(dir + "/" + lab_name, Pgm8{img.w, img.h, img.labels});
        write_pgm8(dir + "/" + msk_name, Pgm8{img.w, img.h, img.mask});
        manifest << img_name << " " << lab_name << " " << msk_name << "\n";
    }
    std::ofstream out(dir + "/manifest.txt", std::ios::binary);
    out << manifest.str();
}

std::vector<LabeledImage> load_dataset(const std::string& dir) {
    std::ifstream in(dir + "/manifest.txt");
    if (!in) throw std::runtime_error("cannot open dataset manifest in " + dir);
    std::vector<LabeledImage> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line.find('=') != std::string::npos) continue;
        std::istringstream ss(line);
        std::string img_name, lab_name, msk_name;
        if (!(ss >> img_name >> lab_name >> msk_name))
            throw std::runtime_error("malformed dataset manifest line: " + line);
        const Ppm8 ppm = read_ppm8(dir + "/" + img_name);
        const Pgm8 lab = read_pgm8(dir + "/" + lab_name);
        const Pgm8 msk = read_pgm8(dir + "/" + msk_name);
        if (lab.w != ppm.w || lab.h != ppm.h || msk.w != ppm.w || msk.h != ppm.h)
            throw std::runtime_error("dataset triple shape mismatch for " + img_name);
        LabeledImage img;
        img.h = ppm.h;
        img.w = ppm.w;
        img.labels = lab.pixels;
        img.mask = msk.pixels;
        img.image.resize(ppm.pixels.size());
        for (std::size_t j = 0; j < ppm.pixels.size(); ++j)
            img.image[j] = static_cast<double>(ppm.pixels[j]) / 255.0;
        out.push_back(std::move(img));
    }
    if (out.empty()) throw std::runtime_error("dataset " + dir + " lists no images");
    return out;
}

} // namespace rectseg
