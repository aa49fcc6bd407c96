#include "rectseg/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rectseg {

void PipelineConfig::validate() const {
    exp.validate();
    if (canvas < 8) throw std::invalid_argument("config: canvas must be >= 8");
    if (n_source < 1 || n_target < 1 || n_target_test < 1 || n_source_test < 1)
        throw std::invalid_argument("config: dataset sizes must be >= 1");
    if (shift_preset != "default" && shift_preset != "none")
        throw std::invalid_argument("config: shift_preset must be 'default' or 'none'");
    if (pseudo_source != "strong" && pseudo_source != "weak")
        throw std::invalid_argument("config: pseudo_source must be 'strong' or 'weak'");
    if (!(weak_fraction > 0.0 && weak_fraction <= 1.0))
        throw std::invalid_argument("config: weak_fraction must be in (0,1]");
    if (exp.augment.crop_h > canvas || exp.augment.crop_w > canvas)
        throw std::invalid_argument("config: crop larger than canvas");
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double parse_num(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (...) {
        throw std::invalid_argument("config: bad numeric value '" + v + "' for key " + key);
    }
}

int parse_int(const std::string& key, const std::string& v) {
    const double x = parse_num(key, v);
    const int i = static_cast<int>(x);
    if (static_cast<double>(i) != x)
        throw std::invalid_argument("config: key " + key + " expects an integer, got " + v);
    return i;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "0" || v == "false") return false;
    if (v == "1" || v == "true") return true;
    throw std::invalid_argument("config: key " + key + " expects 0/1, got " + v);
}

VarianceKind parse_distance(const std::string& v) {
    if (v == "kl_forward") return VarianceKind::kl_forward;
    if (v == "kl_reversed") return VarianceKind::kl_reversed;
    if (v == "mse") return VarianceKind::mse;
    throw std::invalid_argument("config: distance must be kl_forward, kl_reversed or mse, got " + v);
}

LossMode parse_loss_mode(const std::string& v) {
    if (v == "plain_ce") return LossMode::plain_ce;
    if (v == "rectified") return LossMode::rectified;
    if (v == "thresholded") return LossMode::thresholded;
    throw std::invalid_argument("config: loss must be plain_ce, rectified or thresholded, got " + v);
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
    std::vector<int> out;
    std::istringstream ss(v);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(parse_int(key, trim(tok)));
    if (out.empty()) throw std::invalid_argument("config: key " + key + " expects a comma list");
    return out;
}

} // namespace

PipelineConfig parse_config_text(const std::string& text) {
    PipelineConfig cfg;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: line " + std::to_string(lineno) + " is not key=value: " + raw);
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));

        if (key == "seed") cfg.exp.seed = static_cast<std::uint64_t>(std::stoull(val));
        else if (key == "canvas") cfg.canvas = parse_int(key, val);
        else if (key == "classes") cfg.exp.model.classes = parse_int(key, val);
        else if (key == "n_source") cfg.n_source = parse_int(key, val);
        else if (key == "n_source_test") cfg.n_source_test = parse_int(key, val);
        else if (key == "n_target") cfg.n_target = parse_int(key, val);
        else if (key == "n_target_test") cfg.n_target_test = parse_int(key, val);
        else if (key == "shift_preset") cfg.shift_preset = val;
        else if (key == "trunk_widths") cfg.exp.model.trunk_widths = parse_int_list(key, val);
        else if (key == "aux_tap") cfg.exp.model.aux_tap = parse_int(key, val);
        else if (key == "dropout_rate") cfg.exp.model.dropout_rate = parse_num(key, val);
        else if (key == "source_iters") cfg.exp.source_iters = parse_int(key, val);
        else if (key == "adapt_iters") cfg.exp.adapt_iters = parse_int(key, val);
        else if (key == "early_stop") cfg.exp.early_stop = parse_num(key, val);
        else if (key == "batch") cfg.exp.batch = parse_int(key, val);
        else if (key == "base_lr") cfg.exp.base_lr = parse_num(key, val);
        else if (key == "poly_power") cfg.exp.poly_power = parse_num(key, val);
        else if (key == "momentum") cfg.exp.momentum = parse_num(key, val);
        else if (key == "flip_p") cfg.exp.augment.flip_p = parse_num(key, val);
        else if (key == "scale_min") cfg.exp.augment.scale_min = parse_num(key, val);
        else if (key == "scale_max") cfg.exp.augment.scale_max = parse_num(key, val);
        else if (key == "crop") {
            cfg.exp.augment.crop_h = parse_int(key, val);
            cfg.exp.augment.crop_w = cfg.exp.augment.crop_h;
        } else if (key == "loss") cfg.exp.loss_mode = parse_loss_mode(val);
        else if (key == "tau") cfg.exp.tau = parse_num(key, val);
        else if (key == "distance") cfg.exp.rect.distance = parse_distance(val);
        else if (key == "variance_grad") {
            if (val == "detached") cfg.exp.rect.variance_grad = VarianceGradMode::detached;
            else if (val == "full") cfg.exp.rect.variance_grad = VarianceGradMode::full;
            else throw std::invalid_argument("config: variance_grad must be detached or full, got " + val);
        } else if (key == "adapt_aux_ce_weight") cfg.exp.rect.aux_ce_weight = parse_num(key, val);
        else if (key == "pretrain_aux_ce_weight") cfg.exp.pretrain_aux_ce_weight = parse_num(key, val);
        else if (key == "pseudo_source") cfg.pseudo_source = val;
        else if (key == "weak_fraction") cfg.weak_fraction = parse_num(key, val);
        else if (key == "alpha") cfg.exp.alpha = parse_num(key, val);
        else if (key == "beta") cfg.exp.beta = parse_num(key, val);
        else if (key == "tie_heads") cfg.exp.tie_heads = parse_bool(key, val);
        else throw std::invalid_argument("config: unknown key '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

PipelineConfig load_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open config " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

std::string serialize_config(const PipelineConfig& cfg) {
    std::ostringstream os;
    os << "seed=" << cfg.exp.seed << "\n";
    os << "canvas=" << cfg.canvas << "\n";
    os << "classes=" << cfg.exp.model.classes << "\n";
    os << "n_source=" << cfg.n_source << "\n";
    os << "n_source_test=" << cfg.n_source_test << "\n";
    os << "n_target=" << cfg.n_target << "\n";
    os << "n_target_test=" << cfg.n_target_test << "\n";
    os << "shift_preset=" << cfg.shift_preset << "\n";
    os << "trunk_widths=";
    for (std::size_t i = 0; i < cfg.exp.model.trunk_widths.size(); ++i) {
        if (i) os << ",";
        os << cfg.exp.model.trunk_widths[i];
    }
    os << "\n";
    os << "aux_tap=" << cfg.exp.model.aux_tap << "\n";
    os << "dropout_rate=" << format_double(cfg.exp.model.dropout_rate) << "\n";
    os << "source_iters=" << cfg.exp.source_iters << "\n";
    os << "adapt_iters=" << cfg.exp.adapt_iters << "\n";
    os << "early_stop=" << format_double(cfg.exp.early_stop) << "\n";
    os << "batch=" << cfg.exp.batch << "\n";
    os << "base_lr=" << format_double(cfg.exp.base_lr) << "\n";
    os << "poly_power=" << format_double(cfg.exp.poly_power) << "\n";
    os << "momentum=" << format_double(cfg.exp.momentum) << "\n";
    os << "flip_p=" << format_double(cfg.exp.augment.flip_p) << "\n";
    os << "scale_min=" << format_double(cfg.exp.augment.scale_min) << "\n";
    os << "scale_max=" << format_double(cfg.exp.augment.scale_max) << "\n";
    os << "crop=" << cfg.exp.augment.crop_h << "\n";
    os << "loss=" << loss_mode_name(cfg.exp.loss_mode) << "\n";
    os << "tau=" << format_double(cfg.exp.tau) << "\n";
    os << "distance=" << variance_kind_name(cfg.exp.rect.distance) << "\n";
    os << "variance_grad="
       << (cfg.exp.rect.variance_grad == VarianceGradMode::detached ? "detached" : "full") << "\n";
    os << "adapt_aux_ce_weight=" << format_double(cfg.exp.rect.aux_ce_weight) << "\n";
    os << "pretrain_aux_ce_weight=" << format_double(cfg.exp.pretrain_aux_ce_weight) << "\n";
    os << "pseudo_source=" << cfg.pseudo_source << "\n";
    os << "weak_fraction=" << format_double(cfg.weak_fraction) << "\n";
    os << "alpha=" << format_double(cfg.exp.alpha) << "\n";
    os << "beta=" << format_double(cfg.exp.beta) << "\n";
    os << "tie_heads=" << (cfg.exp.tie_heads ? 1 : 0) << "\n";
    return os.str();
}

std::uint64_t fnv1a64_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t fnv1a64_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot hash missing file " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[65536];
    while (in) {
        in.read(buf, sizeof(buf));
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

std::string config_run_id(const PipelineConfig& cfg) {
    const std::string s = serialize_config(cfg);
    char buf[24];
    std::snprintf(buf, sizeof(buf), "run-%016llx",
                  static_cast<unsigned long long>(fnv1a64_bytes(s.data(), s.size())));
    return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

void write_history_csv(const std::string& path, const std::vector<TrainLogRow>& history) {
    std::ostringstream os;
    os << "iter,lr,loss,ce_term,var_term\n";
    for (const auto& row : history)
        os << row.iter << "," << format_double(row.lr) << "," << format_double(row.loss) << ","
           << format_double(row.ce_term) << "," << format_double(row.var_term) << "\n";
    write_text_file(path, os.str());
}

void write_svg_lines(const std::string& path, const std::vector<std::vector<double>>& series,
                     const std::vector<std::string>& names, const std::string& title) {
    if (series.size() != names.size())
        throw std::invalid_argument("write_svg_lines: one name per series required");
    const int W = 640, H = 360, pad = 40;
    double lo = 0.0, hi = 1e-12;
    std::size_t len = 1;
    for (const auto& s : series) {
        for (double v : s) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        len = std::max(len, s.size());
    }
    static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                   "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
    std::ostringstream os;
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n";
    os << "<rect width='100%' height='100%' fill='white'/>\n";
    os << "<text x='" << W / 2 << "' y='18' text-anchor='middle' font-size='14'>" << title << "</text>\n";
    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        if (s.empty()) continue;
        os << "<polyline fill='none' stroke='" << colors[si % 8] << "' stroke-width='1.2' points='";
        for (std::size_t i = 0; i < s.size(); ++i) {
            const double x = pad + (W - 2.0 * pad) * (len > 1 ? static_cast<double>(i) / (len - 1) : 0.0);
            const double y = H - pad - (H - 2.0 * pad) * ((s[i] - lo) / (hi - lo));
            os << format_double(x) << "," << format_double(y) << " ";
        }
        os << "'/>\n";
        os << "<text x='" << pad << "' y='" << (20 + 14 * (si + 1)) << "' fill='" << colors[si % 8]
           << "' font-size='12'>" << names[si] << "</text>\n";
    }
    os << "</svg>\n";
    write_text_file(path, os.str());
}

SceneParams scene_params_for(const PipelineConfig& cfg, const std::string& split) {
    SceneParams sp;
    sp.canvas = cfg.canvas;
    sp.classes = cfg.exp.model.classes;
    if (split == "source" || split == "source_test") {
        sp.domain = default_source_domain(sp.classes);
    } else if (split == "target" || split == "target_test") {
        sp.domain = cfg.shift_preset == "none" ? no_shift_target_domain(sp.classes)
                                               : default_target_domain(sp.classes);
    } else {
        throw std::invalid_argument("unknown dataset split " + split);
    }
    return sp;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
    return Rng(base).child(salt).next_u64();
}

} // namespace rectseg
