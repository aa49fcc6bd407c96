#include "rectseg/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "rectseg/pnm.hpp"
#include "rectseg/uncertainty.hpp"

namespace fs = std::filesystem;

namespace rectseg {

namespace {

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void append_metrics_rows(std::ostringstream& csv, const std::string& run_id, const std::string& split,
                         const IoUReport& rep) {
    for (std::size_t c = 0; c < rep.per_class.size(); ++c)
        if (rep.defined[c])
            csv << run_id << "," << split << ",class_" << c << "," << format_double(rep.per_class[c]) << "\n";
    csv << run_id << "," << split << ",miou," << format_double(rep.miou) << "\n";
}

struct StageGuard {
    const char* name;
    template <typename Fn>
    auto operator()(Fn&& fn) -> decltype(fn()) {
        try {
            return fn();
        } catch (const std::exception& e) {
            throw std::runtime_error("stage " + std::string(name) + ": " + e.what());
        }
    }
};

void export_error_mask(const std::string& path, const LabelMap& pred, const std::vector<std::uint8_t>& gt) {
    Pgm8 img;
    img.w = pred.w;
    img.h = pred.h;
    img.pixels.resize(pred.ids.size());
    for (std::size_t i = 0; i < pred.ids.size(); ++i)
        img.pixels[i] = pred.ids[i] == gt[i] ? 0 : 255;
    write_pgm8(path, img);
}

TrainResult pretrain_variant(const PipelineConfig& cfg, const std::vector<LabeledImage>& source,
                             bool weak) {
    ExperimentConfig exp = cfg.exp;
    if (weak)
        exp.source_iters = static_cast<int>(std::lround(exp.source_iters * cfg.weak_fraction));
    return pretrain_source(source, exp);
}

} // namespace

void generate_datasets(const PipelineConfig& cfg, const std::string& data_dir) {
    const struct {
        const char* split;
        int count;
        std::uint64_t salt;
    } jobs[] = {
        {"source", cfg.n_source, 1},
        {"source_test", cfg.n_source_test, 2},
        {"target", cfg.n_target, 3},
        {"target_test", cfg.n_target_test, 4},
    };
    for (const auto& job : jobs) {
        const SceneParams sp = scene_params_for(cfg, job.split);
        const std::uint64_t seed = derive_seed(cfg.exp.seed, job.salt);
        save_dataset(data_dir + "/" + job.split, gen_domain(seed, job.count, sp), seed, sp);
    }
}

PipelineOutputs run_pipeline(const PipelineConfig& cfg, const std::string& out_dir) {
    cfg.validate();
    const auto t_start = std::chrono::steady_clock::now();
    fs::create_directories(out_dir);
    fs::create_directories(out_dir + "/checkpoints");
    fs::create_directories(out_dir + "/heatmaps");

    PipelineOutputs out;
    out.run_id = config_run_id(cfg);

    const std::string data_dir = out_dir + "/data";
    StageGuard{"gen-data"}([&] { generate_datasets(cfg, data_dir); });

    std::vector<LabeledImage> source, source_test, target, target_test;
    StageGuard{"load-data"}([&] {
        source = load_dataset(data_dir + "/source");
        source_test = load_dataset(data_dir + "/source_test");
        target = load_dataset(data_dir + "/target");
        target_test = load_dataset(data_dir + "/target_test");
    });

    // source pretraining (plus the weaker variant when it provides labels)
    TrainResult strong = StageGuard{"pretrain"}([&] { return pretrain_variant(cfg, source, false); });
    out.theta_s_path = out_dir + "/checkpoints/theta_s.ckpt";
    save_checkpoint(strong.net, out.theta_s_path);
    write_history_csv(out_dir + "/pretrain_history.csv", strong.history);

    const bool weak = cfg.pseudo_source == "weak";
    TwoHeadSegNet pseudo_net = strong.net;
    std::string pseudo_ckpt = out.theta_s_path;
    if (weak) {
        TrainResult weak_model =
            StageGuard{"pretrain-weak"}([&] { return pretrain_variant(cfg, source, true); });
        pseudo_ckpt = out_dir + "/checkpoints/theta_weak.ckpt";
        save_checkpoint(weak_model.net, pseudo_ckpt);
        pseudo_net = weak_model.net;
    }

    PseudoLabelSet pl = StageGuard{"pseudo-label"}([&] {
        return generate_pseudo_labels(pseudo_net, target,
                                      fs::path(pseudo_ckpt).filename().string() + ":" +
                                          hex64(fnv1a64_file(pseudo_ckpt)));
    });
    save_pseudo_labels(out_dir + "/pseudo", pl);

    TrainResult adapted = StageGuard{"adapt"}([&] {
        return adapt(weak ? pseudo_net : strong.net, strip_labels(target), pl, cfg.exp);
    });
    out.theta_t_path = out_dir + "/checkpoints/theta_t.ckpt";
    save_checkpoint(adapted.net, out.theta_t_path);
    out.adapt_history = adapted.history;
    write_history_csv(out_dir + "/loss_history.csv", adapted.history);
    {
        std::vector<double> losses;
        for (const auto& row : adapted.history) losses.push_back(row.loss);
        write_svg_lines(out_dir + "/loss_curve.svg", {losses}, {loss_mode_name(cfg.exp.loss_mode)},
                        "adaptation loss");
    }

    StageGuard{"evaluate"}([&] {
        const auto& base_net = weak ? pseudo_net : strong.net;
        out.source_model_on_source_test =
            evaluate_checkpoint(base_net, source_test, cfg.exp.alpha, cfg.exp.beta);
        out.source_model_on_target_test =
            evaluate_checkpoint(base_net, target_test, cfg.exp.alpha, cfg.exp.beta);
        out.adapted_on_target_test =
            evaluate_checkpoint(adapted.net, target_test, cfg.exp.alpha, cfg.exp.beta);
        return 0;
    });

    const PseudoQuality pq = pseudo_quality_report(pl, target);

    std::ostringstream csv;
    csv << "run_id,split,metric,value\n";
    append_metrics_rows(csv, out.run_id, "source_test@theta_s", out.source_model_on_source_test);
    append_metrics_rows(csv, out.run_id, "target_test@theta_s", out.source_model_on_target_test);
    append_metrics_rows(csv, out.run_id, "target_test@theta_t", out.adapted_on_target_test);
    csv << out.run_id << ",target,pseudo_accuracy," << format_double(pq.accuracy) << "\n";
    csv << out.run_id << ",target,pseudo_fraction_valid," << format_double(pq.fraction_valid) << "\n";
    write_text_file(out_dir + "/metrics.csv", csv.str());

    std::ostringstream report;
    report << "run " << out.run_id << " (loss=" << loss_mode_name(cfg.exp.loss_mode) << ")\n\n";
    report << iou_report_text(out.source_model_on_source_test, "source model on held-out source");
    report << iou_report_text(out.source_model_on_target_test, "source model on target test");
    report << iou_report_text(out.adapted_on_target_test, "adapted model on target test");
    write_text_file(out_dir + "/report.txt", report.str());

    // variance/certainty heatmaps beside ground-truth error masks
    StageGuard{"heatmaps"}([&] {
        Rng rng(0);
        const int count = std::min<std::size_t>(4, target_test.size());
        for (int i = 0; i < count; ++i) {
            const auto& img = target_test[static_cast<std::size_t>(i)];
            auto x = Tensor::from_data({img.h, img.w, 3}, img.image);
            auto fwd = adapted.net.forward(x, Mode::eval, rng);
            const ProbMap p = to_probmap(fwd.primary.probs);
            const ProbMap pa = to_probmap(fwd.aux.probs);
            const VarianceMap vm = kl_variance(p, pa, KlDirection::forward);
            char name[64];
            std::snprintf(name, sizeof(name), "/heatmaps/var_kl_%03d.pgm", i);
            export_heatmap(out_dir + name, vm.values, vm.h, vm.w);
            const LabelMap pred = combined_prediction(p, pa, cfg.exp.alpha, cfg.exp.beta);
            std::snprintf(name, sizeof(name), "/heatmaps/err_%03d.pgm", i);
            export_error_mask(out_dir + name, pred, img.labels);
        }
        return 0;
    });

    // manifest: resolved config plus provenance comments; feeding this file
    // back through --config replays the run
    const auto t_end = std::chrono::steady_clock::now();
    std::ostringstream manifest;
    manifest << "# " << out.run_id << " manifest (replayable config)\n";
    manifest << serialize_config(cfg);
    manifest << "# input checksum data/source/manifest.txt "
             << hex64(fnv1a64_file(data_dir + "/source/manifest.txt")) << "\n";
    manifest << "# input checksum data/target/manifest.txt "
             << hex64(fnv1a64_file(data_dir + "/target/manifest.txt")) << "\n";
    for (const char* f : {"checkpoints/theta_s.ckpt", "checkpoints/theta_t.ckpt", "metrics.csv",
                          "loss_history.csv", "pseudo/manifest.txt"})
        manifest << "# output " << f << " " << hex64(fnv1a64_file(out_dir + "/" + f)) << "\n";
    manifest << "# wallclock_seconds "
             << std::chrono::duration<double>(t_end - t_start).count() << "\n";
    write_text_file(out_dir + "/manifest.txt", manifest.str());
    return out;
}

// ---------------------------------------------------------------------------
// subcommands

namespace {

PipelineConfig config_from(const std::string& config_path, std::uint64_t seed, bool seed_set) {
    PipelineConfig cfg = config_path.empty() ? PipelineConfig{} : load_config_file(config_path);
    if (seed_set) cfg.exp.seed = seed;
    cfg.validate();
    return cfg;
}

int cmd_gen_data(const std::string& config_path, std::uint64_t seed, bool seed_set,
                 const std::string& out, const std::string& preset) {
    PipelineConfig cfg = config_from(config_path, seed, seed_set);
    if (!preset.empty()) cfg.shift_preset = preset;
    cfg.validate();
    generate_datasets(cfg, out);
    std::cout << "wrote source/source_test/target/target_test under " << out << "\n";
    return 0;
}

int cmd_pretrain(const std::string& config_path, std::uint64_t seed, bool seed_set,
                 const std::string& data, const std::string& out, bool weak) {
    PipelineConfig cfg = config_from(config_path, seed, seed_set);
    const auto source = load_dataset(data + "/source");
    TrainResult r = pretrain_variant(cfg, source, weak);
    fs::create_directories(out);
    const std::string ckpt = out + (weak ? "/theta_weak.ckpt" : "/theta_s.ckpt");
    save_checkpoint(r.net, ckpt);
    write_history_csv(out + "/pretrain_history.csv", r.history);
    write_text_file(out + "/manifest.txt", serialize_config(cfg));
    std::cout << "checkpoint " << ckpt << " (" << r.history.size() << " iterations)\n";
    return 0;
}

int cmd_pseudo_label(const std::string& checkpoint, const std::string& data, const std::string& out,
                     double tau, bool tau_set) {
    TwoHeadSegNet net = load_checkpoint(checkpoint);
    const auto target = load_dataset(data + "/target");
    PseudoLabelSet pl = generate_pseudo_labels(
        net, target, fs::path(checkpoint).filename().string() + ":" + hex64(fnv1a64_file(checkpoint)));
    if (tau_set) pl = threshold_filter(pl, tau);
    save_pseudo_labels(out, pl);
    const PseudoQuality pq = pseudo_quality_report(pl, target);
    std::cout << "pseudo labels for " << pl.image_count() << " images, accuracy "
              << format_double(pq.accuracy) << ", valid fraction " << format_double(pq.fraction_valid)
              << "\n";
    return 0;
}

int cmd_adapt(const std::string& config_path, std::uint64_t seed, bool seed_set,
              const std::string& checkpoint, const std::string& data, const std::string& pseudo,
              const std::string& out) {
    PipelineConfig cfg = config_from(config_path, seed, seed_set);
    TwoHeadSegNet net = load_checkpoint(checkpoint);
    const auto target = load_dataset(data + "/target");
    const PseudoLabelSet pl = load_pseudo_labels(pseudo);
    TrainResult r = adapt(net, strip_labels(target), pl, cfg.exp);
    fs::create_directories(out);
    save_checkpoint(r.net, out + "/theta_t.ckpt");
    write_history_csv(out + "/loss_history.csv", r.history);
    write_text_file(out + "/manifest.txt", serialize_config(cfg));
    std::cout << "adapted checkpoint " << out << "/theta_t.ckpt (skipped batches: " << r.skipped_batches
              << ")\n";
    return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& data, double alpha, double beta,
             const std::string& out) {
    TwoHeadSegNet net = load_checkpoint(checkpoint);
    const auto dataset = load_dataset(data);
    const IoUReport rep = evaluate_checkpoint(net, dataset, alpha, beta);
    if (!out.empty()) {
        fs::create_directories(out);
        std::ostringstream csv;
        csv << "run_id,split,metric,value\n";
        append_metrics_rows(csv, "eval", fs::path(data).filename().string(), rep);
        write_text_file(out + "/metrics.csv", csv.str());
        write_text_file(out + "/report.txt", iou_report_text(rep, "evaluation of " + checkpoint));
    }
    std::cout << iou_report_text(rep, checkpoint + " on " + data);
    return 0;
}

int cmd_pipeline(const std::string& config_path, std::uint64_t seed, bool seed_set,
                 const std::string& out) {
    PipelineConfig cfg = config_from(config_path, seed, seed_set);
    PipelineOutputs res = run_pipeline(cfg, out);
    std::cout << res.run_id << " source->target miou " << format_double(res.source_model_on_target_test.miou)
              << " adapted miou " << format_double(res.adapted_on_target_test.miou) << "\n";
    return 0;
}

int cmd_sweep_threshold(const std::string& config_path, std::uint64_t seed, bool seed_set,
                        const std::string& out) {
    PipelineConfig cfg = config_from(config_path, seed, seed_set);
    fs::create_directories(out);

    const std::string data_dir = out + "/data";
    generate_datasets(cfg, data_dir);
    const auto source = load_dataset(data_dir + "/source");
    const auto target = load_dataset(data_dir + "/target");
    const auto target_test = load_dataset(data_dir + "/target_test");

    TrainResult strong = pretrain_variant(cfg, source, false);
    save_checkpoint(strong.net, out + "/theta_s.ckpt");
    PseudoLabelSet pl = generate_pseudo_labels(strong.net, target, "theta_s");
    const auto images = strip_labels(target);

    std::ostringstream csv;
    csv << "run_id,variant,miou\n";
    const IoUReport source_rep = evaluate_checkpoint(strong.net, target_test, cfg.exp.alpha, cfg.exp.beta);
    csv << config_run_id(cfg) << ",source_only," << format_double(source_rep.miou) << "\n";

    std::vector<double> sweep_mious;
    std::vector<std::string> sweep_names;
    auto run_variant = [&](const std::string& name, const ExperimentConfig& exp) {
        TrainResult r = adapt(strong.net, images, pl, exp);
        const IoUReport rep = evaluate_checkpoint(r.net, target_test, exp.alpha, exp.beta);
        csv << config_run_id(cfg) << "," << name << "," << format_double(rep.miou) << "\n";
        write_history_csv(out + "/history_" + name + ".csv", r.history);
        sweep_mious.push_back(rep.miou);
        sweep_names.push_back(name);
    };

    for (double tau : {0.99, 0.95, 0.9, 0.8, 0.7, 0.0}) {
        ExperimentConfig exp = cfg.exp;
        exp.loss_mode = LossMode::thresholded;
        exp.tau = tau;
        char name[32];
        std::snprintf(name, sizeof(name), "tau_%.2f", tau);
        run_variant(name, exp);
    }
    {
        ExperimentConfig exp = cfg.exp;
        exp.loss_mode = LossMode::rectified;
        run_variant("rectified", exp);
    }
    write_text_file(out + "/sweep.csv", csv.str());
    write_svg_lines(out + "/sweep.svg", {sweep_mious}, {"target-test miou"}, "threshold sweep");
    std::cout << csv.str();
    return 0;
}

int cmd_compare_uncertainty(const std::string& checkpoint, const std::string& data,
                            const std::string& methods, std::uint64_t seed, const std::string& out) {
    TwoHeadSegNet net = load_checkpoint(checkpoint);
    const auto dataset = load_dataset(data);
    fs::create_directories(out + "/heatmaps");

    std::ostringstream csv;
    csv << "method,right,wrong,gap\n";
    std::istringstream ms(methods);
    std::string token;
    while (std::getline(ms, token, ',')) {
        double right_sum = 0.0, wrong_sum = 0.0;
        std::int64_t right_n = 0, wrong_n = 0;
        Rng rng(seed);
        for (std::size_t i = 0; i < dataset.size(); ++i) {
            const auto& img = dataset[i];
            auto x = Tensor::from_data({img.h, img.w, 3}, img.image);
            Rng eval_rng(0);
            auto fwd = net.forward(x, Mode::eval, eval_rng);
            const ProbMap p = to_probmap(fwd.primary.probs);
            const ProbMap pa = to_probmap(fwd.aux.probs);

            VarianceMap vm;
            if (token == "kl") {
                vm = kl_variance(p, pa, KlDirection::forward);
            } else if (token == "kl_reversed") {
                vm = kl_variance(p, pa, KlDirection::reversed);
            } else if (token == "mse") {
                vm = mse_variance(p, pa);
            } else if (token.rfind("mc:", 0) == 0) {
                const auto c1 = token.find(':');
                const auto c2 = token.find(':', c1 + 1);
                if (c2 == std::string::npos)
                    throw std::invalid_argument("method token '" + token + "' must be mc:<rate>:<samples>");
                const double rate = std::stod(token.substr(c1 + 1, c2 - c1 - 1));
                const int samples = std::stoi(token.substr(c2 + 1));
                vm = mc_dropout_variance(net, img, rate, samples, rng);
            } else {
                throw std::invalid_argument("unknown uncertainty method '" + token + "'");
            }
            const CertaintyMap cm = certainty(vm);
            const LabelMap pred = argmax_map(p);
            LabelMap gt{img.h, img.w, img.labels};
            const auto rep = uncertainty_gap(cm, pred, gt);
            if (rep.right_certainty) {
                right_sum += *rep.right_certainty * static_cast<double>(rep.right_count);
                right_n += rep.right_count;
            }
            if (rep.wrong_certainty) {
                wrong_sum += *rep.wrong_certainty * static_cast<double>(rep.wrong_count);
                wrong_n += rep.wrong_count;
            }
            if (i < 4) {
                char name[96];
                std::snprintf(name, sizeof(name), "/heatmaps/%s_%03zu.pgm", token.c_str(), i);
                std::string path = out + name;
                for (auto& ch : path)
                    if (ch == ':') ch = '_';
                export_heatmap(path, vm.values, vm.h, vm.w);
                std::snprintf(name, sizeof(name), "/heatmaps/err_%03zu.pgm", i);
                export_error_mask(out + name, pred, img.labels);
            }
        }
        const double right = right_n ? right_sum / static_cast<double>(right_n) : 0.0;
        const double wrong = wrong_n ? wrong_sum / static_cast<double>(wrong_n) : 0.0;
        csv << token << "," << format_double(right) << "," << format_double(wrong) << ","
            << format_double(right - wrong) << "\n";
    }
    write_text_file(out + "/uncertainty.csv", csv.str());
    std::cout << csv.str();
    return 0;
}

int cmd_report(const std::string& in_dir) {
    bool found = false;
    for (const char* name : {"sweep.csv", "metrics.csv", "uncertainty.csv"}) {
        const std::string path = in_dir + "/" + name;
        std::ifstream in(path);
        if (!in) continue;
        found = true;
        std::cout << "== " << name << " ==\n";
        std::string line;
        std::getline(in, line); // header
        std::vector<std::vector<std::string>> rows;
        while (std::getline(in, line)) {
            std::vector<std::string> cells;
            std::istringstream ss(line);
            std::string cell;
            while (std::getline(ss, cell, ',')) cells.push_back(cell);
            rows.push_back(cells);
        }
        for (const auto& cells : rows) {
            for (std::size_t i = 0; i < cells.size(); ++i)
                std::printf("%-24s", cells[i].c_str());
            std::printf("\n");
        }
        std::printf("\n");
    }
    if (!found) throw std::runtime_error("no metrics/sweep/uncertainty csv found under " + in_dir);
    return 0;
}

} // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"uncertainty-rectified pseudo-label self-training toolkit"};
    app.require_subcommand(1);

    std::string config_path, out = "runs/out", data, checkpoint, pseudo, preset, methods = "kl";
    std::uint64_t seed = 0;
    double tau = 0.9, alpha = 1.0, beta = 0.5;
    bool weak = false;

    std::vector<CLI::Option*> seed_opts;
    auto add_common = [&](CLI::App* sub, bool with_config = true) {
        seed_opts.push_back(sub->add_option("--seed", seed, "master seed override"));
        sub->add_option("--out", out, "output directory");
        if (with_config) sub->add_option("--config", config_path, "flat key=value config file");
    };

    auto* gen = app.add_subcommand("gen-data", "generate the synthetic source/target datasets");
    add_common(gen);
    gen->add_option("--shift-preset", preset, "default | none");

    auto* pre = app.add_subcommand("pretrain", "train the source model");
    add_common(pre);
    pre->add_option("--data", data, "dataset root (contains source/)")->required();
    pre->add_flag("--weak", weak, "train the weak variant (weak_fraction of the iterations)");

    auto* pl = app.add_subcommand("pseudo-label", "generate pseudo labels from a checkpoint");
    add_common(pl, false);
    pl->add_option("--checkpoint", checkpoint)->required();
    pl->add_option("--data", data, "dataset root (contains target/)")->required();
    auto* tau_opt = pl->add_option("--tau", tau, "confidence threshold filter");

    auto* ad = app.add_subcommand("adapt", "adapt a source checkpoint on target pseudo labels");
    add_common(ad);
    ad->add_option("--checkpoint", checkpoint)->required();
    ad->add_option("--data", data, "dataset root (contains target/)")->required();
    ad->add_option("--pseudo", pseudo, "pseudo-label directory")->required();

    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a dataset directory");
    add_common(ev, false);
    ev->add_option("--checkpoint", checkpoint)->required();
    ev->add_option("--data", data, "dataset directory")->required();
    ev->add_option("--alpha", alpha, "primary head weight");
    ev->add_option("--beta", beta, "aux head weight");

    auto* pipe = app.add_subcommand("pipeline", "full experiment: gen-data through evaluation");
    add_common(pipe);

    auto* sweep = app.add_subcommand("sweep-threshold", "fixed-threshold baselines vs the rectified loss");
    add_common(sweep);

    auto* cu = app.add_subcommand("compare-uncertainty", "kl / mse / mc-dropout uncertainty comparison");
    add_common(cu, false);
    cu->add_option("--checkpoint", checkpoint)->required();
    cu->add_option("--data", data, "labeled dataset directory")->required();
    cu->add_option("--methods", methods, "comma list: kl, kl_reversed, mse, mc:<rate>:<samples>");

    auto* rep = app.add_subcommand("report", "pretty-print emitted csv metrics");
    rep->add_option("--in", data, "directory with metrics/sweep csv files")->required();

    try {
        // CLI11's vector overload expects the arguments reversed
        app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return 0; // --help
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        bool seed_set = false;
        for (const auto* opt : seed_opts)
            if (opt->count() > 0) seed_set = true;
        if (gen->parsed()) return cmd_gen_data(config_path, seed, seed_set, out, preset);
        if (pre->parsed()) return cmd_pretrain(config_path, seed, seed_set, data, out, weak);
        if (pl->parsed()) return cmd_pseudo_label(checkpoint, data, out, tau, tau_opt->count() > 0);
        if (ad->parsed()) return cmd_adapt(config_path, seed, seed_set, checkpoint, data, pseudo, out);
        if (ev->parsed()) return cmd_eval(checkpoint, data, alpha, beta, out);
        if (pipe->parsed()) return cmd_pipeline(config_path, seed, seed_set, out);
        if (sweep->parsed()) return cmd_sweep_threshold(config_path, seed, seed_set, out);
        if (cu->parsed()) return cmd_compare_uncertainty(checkpoint, data, methods, seed, out);
        if (rep->parsed()) return cmd_report(data);
        std::cerr << "error: no subcommand\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace rectseg
