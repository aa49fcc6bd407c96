#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "rectseg/model.hpp"
#include "rectseg/uncertainty.hpp"

using namespace rectseg;

namespace {

std::vector<double> flat_params(const TwoHeadSegNet& net) {
    std::vector<double> out;
    for (const auto& p : net.parameters()) out.insert(out.end(), p.data().begin(), p.data().end());
    return out;
}

Tensor random_image(int h, int w, Rng& rng) {
    std::vector<double> v(static_cast<std::size_t>(h) * w * 3);
    for (auto& x : v) x = rng.uniform(0, 1);
    return Tensor::from_data({h, w, 3}, v);
}

} // namespace

TEST_CASE("init is deterministic and seed sensitive") {
    ModelConfig cfg;
    Rng a(42), b(42), c(43);
    const auto pa = flat_params(TwoHeadSegNet(cfg, a));
    CHECK(pa == flat_params(TwoHeadSegNet(cfg, b)));
    CHECK(pa != flat_params(TwoHeadSegNet(cfg, c)));
}

TEST_CASE("invalid architectures are rejected") {
    Rng rng(1);
    ModelConfig cfg;
    cfg.aux_tap = 4; // == depth
    CHECK_THROWS_AS(TwoHeadSegNet(cfg, rng), std::invalid_argument);
    cfg.aux_tap = 0;
    CHECK_THROWS_AS(TwoHeadSegNet(cfg, rng), std::invalid_argument);
    cfg = ModelConfig{};
    cfg.dropout_rate = 1.0;
    CHECK_THROWS_AS(TwoHeadSegNet(cfg, rng), std::invalid_argument);
}

TEST_CASE("both heads produce HxWxC maps on the default config") {
    ModelConfig cfg;
    Rng rng(3);
    TwoHeadSegNet net(cfg, rng);
    auto x = random_image(32, 32, rng);
    auto fwd = net.forward(x, Mode::eval, rng);
    CHECK(fwd.primary.probs.shape() == Shape{32, 32, cfg.classes});
    CHECK(fwd.aux.probs.shape() == Shape{32, 32, cfg.classes});

    // per-pixel softmax normalization
    const ProbMap pm = to_probmap(fwd.primary.probs);
    for (int y = 0; y < pm.h; ++y)
        for (int x2 = 0; x2 < pm.w; ++x2) {
            double s = 0.0;
            for (int c = 0; c < pm.c; ++c) {
                s += pm.at(y, x2, c);
                CHECK(pm.at(y, x2, c) >= 0.0);
                CHECK(pm.at(y, x2, c) <= 1.0);
            }
            CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
        }
}

TEST_CASE("eval forward is pure; train forward varies with dropout draws") {
    ModelConfig cfg;
    Rng rng(5);
    TwoHeadSegNet net(cfg, rng);
    auto x = random_image(16, 16, rng);

    Rng e1(0), e2(99);
    auto a = net.forward(x, Mode::eval, e1);
    auto b = net.forward(x, Mode::eval, e2);
    CHECK(a.primary.probs.data() == b.primary.probs.data());
    CHECK(a.aux.probs.data() == b.aux.probs.data());

    Rng t(7);
    auto c = net.forward(x, Mode::train, t);
    auto d = net.forward(x, Mode::train, t); // same generator, later draws
    CHECK(c.primary.probs.data() != d.primary.probs.data());
}

TEST_CASE("prediction discrepancy exists with random weights") {
    ModelConfig cfg;
    Rng rng(11);
    TwoHeadSegNet net(cfg, rng);
    double mean_kl = 0.0;
    for (int i = 0; i < 4; ++i) {
        auto x = random_image(12, 12, rng);
        auto fwd = net.forward(x, Mode::eval, rng);
        const auto vm = kl_variance(to_probmap(fwd.primary.probs), to_probmap(fwd.aux.probs),
                                    KlDirection::forward);
        for (double v : vm.values) mean_kl += v;
    }
    CHECK(mean_kl > 0.0);
}

TEST_CASE("combined_prediction weighting") {
    ProbMap p{1, 1, 2, {0.4, 0.6}};
    ProbMap a{1, 1, 2, {0.9, 0.1}};
    CHECK(combined_prediction(p, a, 1.0, 0.5).ids[0] == 0); // 0.85 vs 0.65
    CHECK(combined_prediction(p, a, 1.0, 0.0).ids[0] == 1); // argmax of P alone
    CHECK(combined_prediction(p, a, 0.0, 1.0).ids[0] == 0);
    CHECK_THROWS_AS(combined_prediction(p, a, 0.0, 0.0), std::invalid_argument);

    // ties break to the lowest class index
    ProbMap u{1, 1, 2, {0.5, 0.5}};
    CHECK(combined_prediction(u, u, 1.0, 1.0).ids[0] == 0);
}

TEST_CASE("combined_prediction is invariant to joint positive rescaling") {
    Rng rng(13);
    for (int trial = 0; trial < 50; ++trial) {
        ProbMap p{2, 2, 3, {}}, a{2, 2, 3, {}};
        auto fill = [&](ProbMap& m) {
            m.p.resize(12);
            for (int px = 0; px < 4; ++px) {
                double s = 0.0;
                for (int c = 0; c < 3; ++c) {
                    m.p[px * 3 + c] = rng.uniform(0.01, 1.0);
                    s += m.p[px * 3 + c];
                }
                for (int c = 0; c < 3; ++c) m.p[px * 3 + c] /= s;
            }
        };
        fill(p);
        fill(a);
        const double alpha = rng.uniform(0.1, 2.0), beta = rng.uniform(0.0, 2.0);
        const double k = rng.uniform(0.25, 8.0);
        CHECK(combined_prediction(p, a, alpha, beta).ids ==
              combined_prediction(p, a, k * alpha, k * beta).ids);
    }
}

TEST_CASE("checkpoint round-trips bit-exactly") {
    ModelConfig cfg;
    cfg.trunk_widths = {6, 6, 10, 10};
    cfg.classes = 4;
    cfg.dropout_rate = 0.25;
    Rng rng(17);
    TwoHeadSegNet net(cfg, rng);
    const auto path = std::filesystem::temp_directory_path() / "rectseg_ckpt_test.bin";
    save_checkpoint(net, path.string());
    TwoHeadSegNet back = load_checkpoint(path.string());
    CHECK(back.config().classes == cfg.classes);
    CHECK(back.config().trunk_widths == cfg.trunk_widths);
    CHECK(back.config().aux_tap == cfg.aux_tap);
    CHECK(back.config().dropout_rate == cfg.dropout_rate);
    CHECK(flat_params(back) == flat_params(net));
    std::filesystem::remove(path);

    CHECK_THROWS_AS(load_checkpoint("/nonexistent/nope.ckpt"), std::runtime_error);
}

TEST_CASE("corrupt checkpoints are rejected") {
    const auto path = std::filesystem::temp_directory_path() / "rectseg_bad_ckpt.bin";
    {
        std::FILE* f = std::fopen(path.string().c_str(), "wb");
        std::fputs("not a checkpoint at all", f);
        std::fclose(f);
    }
    CHECK_THROWS_AS(load_checkpoint(path.string()), std::runtime_error);
    std::filesystem::remove(path);
}
