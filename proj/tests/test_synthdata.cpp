#include <doctest.h>

#include <filesystem>
#include <set>

#include "rectseg/synthdata.hpp"

using namespace rectseg;

namespace {

bool images_equal(const LabeledImage& a, const LabeledImage& b) {
    return a.h == b.h && a.w == b.w && a.image == b.image && a.labels == b.labels && a.mask == b.mask;
}

SceneParams small_params() {
    SceneParams sp;
    sp.canvas = 16;
    sp.classes = 5;
    sp.domain = default_source_domain(5);
    return sp;
}

} // namespace

TEST_CASE("generation is deterministic in (seed, n, params)") {
    const SceneParams sp = small_params();
    const auto a = gen_domain(99, 6, sp);
    const auto b = gen_domain(99, 6, sp);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(images_equal(a[i], b[i]));
    const auto c = gen_domain(100, 6, sp);
    CHECK_FALSE(images_equal(a[0], c[0]));
}

TEST_CASE("a single shape of a forced class yields labels {0, class}") {
    SceneParams sp = small_params();
    sp.shapes_min = sp.shapes_max = 1;
    sp.domain.class_freq = {1e-300, 1.0, 1e-300, 1e-300}; // class 2 effectively certain
    const auto data = gen_domain(5, 8, sp);
    for (const auto& img : data) {
        std::set<int> ids(img.labels.begin(), img.labels.end());
        CHECK(ids == std::set<int>{0, 2});
    }
}

TEST_CASE("zero noise and texture render exact base colors") {
    SceneParams sp = small_params();
    sp.domain.noise_sigma = 0.0;
    sp.domain.texture_amplitude = 0.0;
    sp.domain.hue_shift = 0.0;
    const auto data = gen_domain(7, 3, sp);
    for (const auto& img : data) {
        for (int px = 0; px < img.h * img.w; ++px) {
            const auto& base = sp.domain.base_colors[img.labels[static_cast<std::size_t>(px)]];
            for (int c = 0; c < 3; ++c)
                CHECK(img.image[static_cast<std::size_t>(px) * 3 + c] == base[static_cast<std::size_t>(c)]);
        }
    }
}

TEST_CASE("hue shift changes appearance but not labels") {
    SceneParams sp = small_params();
    SceneParams shifted = sp;
    shifted.domain.hue_shift = 0.15;
    const auto a = gen_domain(3, 2, sp);
    const auto b = gen_domain(3, 2, shifted);
    CHECK(a[0].labels == b[0].labels); // same geometry stream
    CHECK(a[0].image != b[0].image);
}

TEST_CASE("flip is an involution") {
    const auto data = gen_domain(1, 1, small_params());
    CHECK(images_equal(hflip(hflip(data[0])), data[0]));
}

TEST_CASE("identity augmentation policy returns the input") {
    const auto data = gen_domain(2, 1, small_params());
    AugmentPolicy policy;
    policy.flip_p = 0.0;
    policy.scale_min = policy.scale_max = 1.0;
    policy.crop_h = policy.crop_w = data[0].h;
    Rng rng(4);
    CHECK(images_equal(augment(data[0], rng, policy), data[0]));
}

TEST_CASE("augmentation never invents label ids") {
    const SceneParams sp = small_params();
    const auto data = gen_domain(11, 4, sp);
    AugmentPolicy policy;
    policy.crop_h = policy.crop_w = 12;
    Rng rng(6);
    for (const auto& img : data) {
        std::set<int> orig(img.labels.begin(), img.labels.end());
        for (int trial = 0; trial < 25; ++trial) {
            const auto aug = augment(img, rng, policy);
            CHECK(aug.h == 12);
            CHECK(aug.w == 12);
            for (auto id : aug.labels) CHECK(orig.count(id) == 1);
        }
    }
}

TEST_CASE("oversized crops are rejected") {
    const auto data = gen_domain(1, 1, small_params());
    AugmentPolicy policy;
    policy.scale_min = policy.scale_max = 1.0;
    policy.crop_h = policy.crop_w = 64;
    Rng rng(1);
    CHECK_THROWS_AS(augment(data[0], rng, policy), std::invalid_argument);
    CHECK_THROWS_AS(crop(data[0], 0, 0, 64, 64), std::invalid_argument);
}

TEST_CASE("scale jitter resamples labels nearest-neighbor") {
    const auto data = gen_domain(13, 1, small_params());
    const auto up = rescale(data[0], 1.2);
    CHECK(up.h == 19); // round(16*1.2)
    std::set<int> orig(data[0].labels.begin(), data[0].labels.end());
    for (auto id : up.labels) CHECK(orig.count(id) == 1);
}

TEST_CASE("dataset io round trip") {
    namespace fs = std::filesystem;
    const SceneParams sp = small_params();
    const auto data = gen_domain(21, 5, sp);
    const auto dir = (fs::temp_directory_path() / "rectseg_ds_test").string();
    fs::remove_all(dir);
    save_dataset(dir, data, 21, sp);
    const auto back = load_dataset(dir);
    REQUIRE(back.size() == data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        CHECK(back[i].labels == data[i].labels);
        CHECK(back[i].mask == data[i].mask);
        for (std::size_t j = 0; j < data[i].image.size(); ++j)
            CHECK(back[i].image[j] == doctest::Approx(data[i].image[j]).epsilon(0.003)); // 8-bit quantization
    }
    fs::remove_all(dir);
}

TEST_CASE("'none' shift preset draws target from the source distribution") {
    SceneParams src = small_params();
    src.canvas = 32;
    SceneParams tgt = src;
    tgt.domain = no_shift_target_domain(5);
    const auto a = gen_domain(31, 60, src);
    const auto b = gen_domain(77, 60, tgt); // different seed, same law
    auto mean_pixel = [](const std::vector<LabeledImage>& d) {
        double s = 0.0;
        std::size_t n = 0;
        for (const auto& img : d) {
            for (double v : img.image) s += v;
            n += img.image.size();
        }
        return s / static_cast<double>(n);
    };
    auto bg_fraction = [](const std::vector<LabeledImage>& d) {
        std::size_t bg = 0, n = 0;
        for (const auto& img : d) {
            for (auto id : img.labels) bg += id == 0 ? 1 : 0;
            n += img.labels.size();
        }
        return static_cast<double>(bg) / static_cast<double>(n);
    };
    CHECK(mean_pixel(a) == doctest::Approx(mean_pixel(b)).epsilon(0.08));
    CHECK(bg_fraction(a) == doctest::Approx(bg_fraction(b)).epsilon(0.12));
}
