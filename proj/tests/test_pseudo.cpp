#include <doctest.h>

#include <filesystem>

#include "rectseg/pseudo.hpp"

using namespace rectseg;

namespace {

struct Fixture {
    SceneParams sp;
    std::vector<LabeledImage> targets;
    TwoHeadSegNet net;

    Fixture()
        : sp([] {
              SceneParams s;
              s.canvas = 12;
              s.classes = 5;
              s.domain = default_target_domain(5);
              return s;
          }()),
          targets(gen_domain(41, 4, sp)),
          net([] {
              ModelConfig cfg;
              cfg.trunk_widths = {6, 6, 8, 8};
              Rng rng(2);
              return TwoHeadSegNet(cfg, rng);
          }()) {}
};

} // namespace

TEST_CASE("pseudo labels are the primary-head argmax with max-prob confidence") {
    Fixture f;
    const auto pl = generate_pseudo_labels(f.net, f.targets, "test");
    REQUIRE(pl.image_count() == f.targets.size());
    CHECK(pl.provenance == "test");

    Rng rng(0);
    for (std::size_t i = 0; i < f.targets.size(); ++i) {
        auto x = Tensor::from_data({f.targets[i].h, f.targets[i].w, 3}, f.targets[i].image);
        const ProbMap pm = to_probmap(f.net.forward(x, Mode::eval, rng).primary.probs);
        for (std::size_t px = 0; px < pl.labels[i].size(); ++px) {
            int best = 0;
            for (int c = 1; c < pm.c; ++c)
                if (pm.p[px * pm.c + c] > pm.p[px * pm.c + best]) best = c;
            CHECK(pl.labels[i][px] == best);
            CHECK(pl.confidence[i][px] == pm.p[px * pm.c + best]);
            CHECK(pl.confidence[i][px] >= 1.0 / pm.c);
            CHECK(pl.confidence[i][px] <= 1.0);
            CHECK(pl.valid[i][px] == 1);
        }
    }

    // determinism
    const auto again = generate_pseudo_labels(f.net, f.targets, "test");
    CHECK(again.labels == pl.labels);
    CHECK(again.confidence == pl.confidence);
}

TEST_CASE("uniform probabilities tie to class 0 with confidence 1/C") {
    // zeroed weights give exactly uniform class probabilities
    Fixture f;
    for (auto& p : f.net.parameters()) std::fill(p.data().begin(), p.data().end(), 0.0);
    const auto pl = generate_pseudo_labels(f.net, f.targets, "uniform");
    for (std::size_t i = 0; i < pl.image_count(); ++i)
        for (std::size_t px = 0; px < pl.labels[i].size(); ++px) {
            CHECK(pl.labels[i][px] == 0);
            CHECK(pl.confidence[i][px] == doctest::Approx(0.2).epsilon(1e-12));
        }
}

TEST_CASE("threshold_filter semantics") {
    PseudoLabelSet pl;
    pl.h = 1;
    pl.w = 3;
    pl.classes = 2;
    pl.labels = {{1, 0, 1}};
    pl.confidence = {{0.99, 0.85, 0.5}};
    pl.valid = {{1, 1, 1}};

    const auto filtered = threshold_filter(pl, 0.9);
    CHECK(filtered.valid[0] == std::vector<std::uint8_t>{1, 0, 0});
    CHECK(filtered.labels == pl.labels);
    CHECK(filtered.confidence == pl.confidence);
    CHECK(filtered.tau_history == std::vector<double>{0.9});

    CHECK(threshold_filter(pl, 0.0).valid[0] == std::vector<std::uint8_t>{1, 1, 1});
    CHECK(threshold_filter(pl, 1.0).valid[0] == std::vector<std::uint8_t>{0, 0, 0});
}

TEST_CASE("threshold_filter is monotone in tau") {
    Fixture f;
    const auto pl = generate_pseudo_labels(f.net, f.targets, "mono");
    double prev_tau = -1.0;
    std::vector<std::vector<std::uint8_t>> prev_valid;
    for (double tau : {0.0, 0.2, 0.21, 0.25, 0.5, 0.9, 1.0}) {
        const auto cur = threshold_filter(pl, tau);
        if (!prev_valid.empty()) {
            for (std::size_t i = 0; i < cur.valid.size(); ++i)
                for (std::size_t px = 0; px < cur.valid[i].size(); ++px)
                    if (cur.valid[i][px]) CHECK(prev_valid[i][px]); // valid(tau2) subset of valid(tau1)
        }
        prev_valid = cur.valid;
        CHECK(tau > prev_tau);
        prev_tau = tau;
    }
}

TEST_CASE("pseudo quality report counts masked accuracy") {
    PseudoLabelSet pl;
    pl.h = 2;
    pl.w = 2;
    pl.classes = 3;
    pl.labels = {{0, 1, 2, 1}};
    pl.confidence = {{0.9, 0.8, 0.7, 0.6}};
    pl.valid = {{1, 1, 1, 1}};

    LabeledImage gt;
    gt.h = 2;
    gt.w = 2;
    gt.labels = {0, 1, 2, 1};
    gt.mask = {1, 1, 1, 1};
    gt.image.assign(12, 0.0);

    CHECK(pseudo_quality_report(pl, {gt}).accuracy == 1.0);

    gt.labels = {0, 1, 2, 2}; // one wrong pixel
    const auto q = pseudo_quality_report(pl, {gt});
    CHECK(q.accuracy == doctest::Approx(0.75));
    CHECK(q.fraction_valid == 1.0);
    CHECK(q.per_class_accuracy[0] == 1.0);
    CHECK(q.per_class_accuracy[2] == doctest::Approx(0.5));

    // masked pixels leave the accuracy computation entirely
    pl.valid = {{1, 1, 1, 0}};
    const auto q2 = pseudo_quality_report(pl, {gt});
    CHECK(q2.accuracy == 1.0);
    CHECK(q2.fraction_valid == doctest::Approx(0.75));

    LabeledImage bad = gt;
    bad.h = 3;
    bad.labels.resize(6);
    bad.mask.resize(6);
    CHECK_THROWS_AS(pseudo_quality_report(pl, {bad}), std::invalid_argument);
}

TEST_CASE("pseudo label io round trip") {
    namespace fs = std::filesystem;
    Fixture f;
    auto pl = generate_pseudo_labels(f.net, f.targets, "theta_s.ckpt:deadbeef");
    pl = threshold_filter(pl, 0.25);
    const auto dir = (fs::temp_directory_path() / "rectseg_pl_test").string();
    fs::remove_all(dir);
    save_pseudo_labels(dir, pl);
    const auto back = load_pseudo_labels(dir);
    CHECK(back.labels == pl.labels);
    CHECK(back.valid == pl.valid);
    CHECK(back.provenance == pl.provenance);
    REQUIRE(back.tau_history.size() == 1);
    CHECK(back.tau_history[0] == doctest::Approx(0.25));
    for (std::size_t i = 0; i < pl.image_count(); ++i)
        for (std::size_t px = 0; px < pl.confidence[i].size(); ++px)
            CHECK(back.confidence[i][px] ==
                  doctest::Approx(pl.confidence[i][px]).epsilon(1.0 / 65535.0 + 1e-9));
    fs::remove_all(dir);
}
