#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "cst/image.hpp"
#include "cst/imaging.hpp"
#include "cst/rng.hpp"
#include "oracles.hpp"

using cst::DiffusionParams;
using cst::GradientField;
using cst::HistEqOptions;
using cst::PatchGrid;
using cst::RealImage;
using cst::Rng;
using cst::ScanImage;

namespace {

ScanImage make_image(int rows, int cols, int levels, const std::vector<std::uint16_t>& px) {
    return ScanImage::from_pixels(rows, cols, levels, px);
}

}  // namespace

TEST_SUITE("imaging") {

TEST_CASE("patch spans tile exactly with the last span absorbing the remainder") {
    const auto spans = PatchGrid::spans(3, 10);
    REQUIRE(spans.size() == 3);
    CHECK(spans[0] == std::pair<int, int>{0, 3});
    CHECK(spans[1] == std::pair<int, int>{3, 6});
    CHECK(spans[2] == std::pair<int, int>{6, 10});
    CHECK_THROWS_AS(PatchGrid::spans(11, 10), std::invalid_argument);
    CHECK_THROWS_AS(PatchGrid::spans(0, 10), std::invalid_argument);
}

TEST_CASE("uniform histogram is a fixed point of equalization") {
    // 2x2 patch [0,1,2,3] with 4 levels: cdf = 1,2,3,4, cdf_min = 1,
    // mapping v -> (cdf(v)-1)/(4-1)*3 = 0,1,2,3.
    const ScanImage img = make_image(2, 2, 4, {0, 1, 2, 3});
    const ScanImage out = cst::enhance_contrast(img, PatchGrid{1, 1});
    CHECK(out.pixels() == std::vector<std::uint16_t>{0, 1, 2, 3});
}

TEST_CASE("constant patch maps to a single level") {
    const ScanImage img = make_image(2, 2, 16, {5, 5, 5, 5});
    const ScanImage out = cst::enhance_contrast(img, PatchGrid{1, 1});
    CHECK(out.at(0, 0) == out.at(0, 1));
    CHECK(out.at(0, 0) == out.at(1, 0));
    CHECK(out.at(0, 0) == out.at(1, 1));
}

TEST_CASE("equalized output stays within the level range") {
    Rng rng(7);
    std::vector<std::uint16_t> px(20 * 20);
    for (auto& v : px) {
        v = static_cast<std::uint16_t>(rng.uniform_below(256));
    }
    const ScanImage img = make_image(20, 20, 256, px);
    const ScanImage out = cst::enhance_contrast(img, PatchGrid{3, 3});
    for (auto v : out.pixels()) {
        CHECK(v <= 255);
    }
}

TEST_CASE("equalization matches the hand cumulative-count table") {
    Rng rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        const int levels = 16;
        std::vector<std::uint16_t> px(36);
        std::vector<int> patch;
        for (auto& v : px) {
            v = static_cast<std::uint16_t>(rng.uniform_below(levels));
            patch.push_back(static_cast<int>(v));
        }
        const ScanImage img = make_image(6, 6, levels, px);
        const ScanImage out = cst::enhance_contrast(img, PatchGrid{1, 1});
        const std::vector<int> expected = oracle::hand_equalize(patch, levels);
        for (std::size_t i = 0; i < patch.size(); ++i) {
            CHECK(static_cast<int>(out.pixels()[i]) == expected[i]);
        }
    }
}

TEST_CASE("patches equalize independently") {
    // Left patch constant, right patch a two-level split: the right patch
    // must spread to the full range regardless of the left patch.
    const ScanImage img = make_image(2, 4, 256, {7, 7, 10, 200, 7, 7, 10, 200});
    const ScanImage out = cst::enhance_contrast(img, PatchGrid{1, 2});
    CHECK(out.at(0, 2) == out.at(1, 2));
    CHECK(out.at(0, 3) == 255);
    CHECK(out.at(1, 3) == 255);
}

TEST_CASE("whole-image denominator crushes small-patch output") {
    // With the literal whole-image denominator, a patch holding a tiny
    // fraction of the pixels maps to low levels only.
    std::vector<std::uint16_t> px(64 * 64, 100);
    px[0] = 3;
    const ScanImage img = make_image(64, 64, 256, px);
    HistEqOptions literal;
    literal.image_area_denominator = true;
    const ScanImage out = cst::enhance_contrast(img, PatchGrid{8, 8}, literal);
    // Patch (0,0) holds 64 of 4096 pixels; its top level maps to at most
    // ceil(64/4096 * 255) = 4.
    CHECK(out.at(0, 0) <= 4);
    CHECK(out.at(7, 7) <= 4);
}

TEST_CASE("clip limit reduces the contrast stretch between levels") {
    // A patch dominated by one level: unclipped equalization stretches the
    // two occupied levels to the full range; clipping flattens the jump.
    std::vector<std::uint16_t> px(16, 8);
    px[15] = 12;
    const ScanImage img = make_image(4, 4, 16, px);

    const ScanImage plain = cst::enhance_contrast(img, PatchGrid{1, 1});
    HistEqOptions clipped;
    clipped.clip_limit = 2.0;
    const ScanImage limited = cst::enhance_contrast(img, PatchGrid{1, 1}, clipped);

    const int plain_gap = std::abs(static_cast<int>(plain.at(3, 3)) -
                                   static_cast<int>(plain.at(0, 0)));
    const int limited_gap = std::abs(static_cast<int>(limited.at(3, 3)) -
                                     static_cast<int>(limited.at(0, 0)));
    CHECK(plain_gap == 15);  // full stretch: dominant level to 0, rare to top
    CHECK(limited_gap < plain_gap);
    for (auto v : limited.pixels()) {
        CHECK(v <= 15);
    }
}

TEST_CASE("orientation set follows 2*pi*k/K") {
    using std::numbers::pi;
    const auto two = cst::orientation_set(2);
    REQUIRE(two.size() == 2);
    CHECK(two[0] == doctest::Approx(0.0));
    CHECK(two[1] == doctest::Approx(pi));

    const auto one = cst::orientation_set(1);
    REQUIRE(one.size() == 1);
    CHECK(one[0] == doctest::Approx(0.0));

    const auto four = cst::orientation_set(4);
    REQUIRE(four.size() == 4);
    CHECK(four[0] == doctest::Approx(0.0));
    CHECK(four[1] == doctest::Approx(pi / 2));
    CHECK(four[2] == doctest::Approx(pi));
    CHECK(four[3] == doctest::Approx(3 * pi / 2));

    CHECK_THROWS_AS(cst::orientation_set(0), std::invalid_argument);
}

TEST_CASE("orientation set is ascending with spacing 2*pi/K") {
    for (int k = 1; k <= 8; ++k) {
        const auto set = cst::orientation_set(k);
        REQUIRE(set.size() == static_cast<std::size_t>(k));
        for (std::size_t i = 1; i < set.size(); ++i) {
            CHECK(set[i] - set[i - 1] ==
                  doctest::Approx(2.0 * std::numbers::pi / k).epsilon(1e-12));
        }
    }
}

TEST_CASE("gradient of a constant image is zero") {
    const ScanImage img(5, 5, 256, 77);
    const GradientField g = cst::directional_gradient(img, 1.234);
    for (double v : g.values.values()) {
        CHECK(v == doctest::Approx(0.0).epsilon(1e-12));
    }
}

TEST_CASE("gradient at theta + pi is the elementwise negation") {
    Rng rng(3);
    RealImage img(7, 9);
    for (double& v : img.values()) {
        v = rng.uniform(0.0, 255.0);
    }
    const double theta = 0.7;
    const GradientField a = cst::directional_gradient(img, theta);
    const GradientField b = cst::directional_gradient(img, theta + std::numbers::pi);
    for (std::size_t i = 0; i < a.values.values().size(); ++i) {
        CHECK(b.values.values()[i] == doctest::Approx(-a.values.values()[i]).epsilon(1e-9));
    }
}

TEST_CASE("vertical step edge responds at theta=0 and not at theta=pi/2") {
    // 5x5 image, columns 0-1 dark, columns 2-4 bright.
    RealImage img(5, 5);
    for (int r = 0; r < 5; ++r) {
        for (int c = 0; c < 5; ++c) {
            img.at(r, c) = c >= 2 ? 100.0 : 0.0;
        }
    }
    const GradientField horizontal = cst::directional_gradient(img, 0.0);
    const GradientField vertical = cst::directional_gradient(img, std::numbers::pi / 2);

    // Hand-convolved Sobel x response at the edge column (r=2, c=2):
    // column c=1 contributes -(0)*1 -(0)*2 -(0)*1, column c=3 contributes
    // 100*1 + 100*2 + 100*1 = 400.
    CHECK(horizontal.values.at(2, 2) == doctest::Approx(400.0));
    CHECK(std::abs(horizontal.values.at(2, 1)) > 0.0);
    for (double v : vertical.values.values()) {
        CHECK(v == doctest::Approx(0.0).epsilon(1e-9));
    }
}

TEST_CASE("directional gradient is linear in the image") {
    Rng rng(11);
    RealImage a(6, 6);
    RealImage b(6, 6);
    for (double& v : a.values()) {
        v = rng.uniform(0.0, 50.0);
    }
    for (double& v : b.values()) {
        v = rng.uniform(0.0, 50.0);
    }
    const double alpha = 2.5;
    const double beta = -1.25;
    RealImage combo(6, 6);
    for (std::size_t i = 0; i < combo.values().size(); ++i) {
        combo.values()[i] = alpha * a.values()[i] + beta * b.values()[i];
    }
    const double theta = 2.1;
    const GradientField ga = cst::directional_gradient(a, theta);
    const GradientField gb = cst::directional_gradient(b, theta);
    const GradientField gc = cst::directional_gradient(combo, theta);
    for (std::size_t i = 0; i < gc.values.values().size(); ++i) {
        const double expected = alpha * ga.values.values()[i] + beta * gb.values.values()[i];
        CHECK(gc.values.values()[i] == doctest::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("diffusion with zero iterations is the identity") {
    Rng rng(5);
    RealImage img(8, 8);
    for (double& v : img.values()) {
        v = rng.uniform(-10.0, 10.0);
    }
    DiffusionParams params;
    params.iterations = 0;
    const RealImage out = cst::diffuse(img, params);
    CHECK(out.values() == img.values());
}

TEST_CASE("diffusion leaves constants unchanged") {
    RealImage img(6, 7);
    for (double& v : img.values()) {
        v = 42.0;
    }
    const RealImage out = cst::diffuse(img, DiffusionParams{});
    for (double v : out.values()) {
        CHECK(v == doctest::Approx(42.0).epsilon(1e-12));
    }
}

TEST_CASE("diffusion reduces the variance of seeded noise") {
    Rng rng(17);
    RealImage img(16, 16);
    for (double& v : img.values()) {
        v = 100.0 + rng.gaussian() * 5.0;
    }
    const double before = oracle::variance(img.values());
    const RealImage out = cst::diffuse(img, DiffusionParams{});
    const double after = oracle::variance(out.values());
    CHECK(after < before);
}

TEST_CASE("diffusion respects the input min/max bounds") {
    Rng rng(23);
    RealImage img(12, 12);
    for (double& v : img.values()) {
        v = rng.uniform(-3.0, 9.0);
    }
    double lo = img.values()[0];
    double hi = img.values()[0];
    for (double v : img.values()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const RealImage out = cst::diffuse(img, DiffusionParams{});
    for (double v : out.values()) {
        CHECK(v >= lo - 1e-12);
        CHECK(v <= hi + 1e-12);
    }
}

TEST_CASE("diffusion rejects invalid parameters") {
    const RealImage img(4, 4);
    DiffusionParams bad;
    bad.step = 0.0;
    CHECK_THROWS_AS(cst::diffuse(img, bad), std::invalid_argument);
    bad.step = 0.3;
    CHECK_THROWS_AS(cst::diffuse(img, bad), std::invalid_argument);
    bad.step = 0.2;
    bad.kappa = 0.0;
    CHECK_THROWS_AS(cst::diffuse(img, bad), std::invalid_argument);
    bad.kappa = 30.0;
    bad.iterations = -1;
    CHECK_THROWS_AS(cst::diffuse(img, bad), std::invalid_argument);
}

TEST_CASE("scan image validation") {
    CHECK_THROWS_AS(ScanImage(0, 4, 256), std::invalid_argument);
    CHECK_THROWS_AS(ScanImage(4, 4, 1), std::invalid_argument);
    CHECK_THROWS_AS(ScanImage::from_pixels(2, 2, 4, {0, 1, 2}), std::invalid_argument);
    CHECK_THROWS_AS(ScanImage::from_pixels(2, 2, 4, {0, 1, 2, 4}), std::invalid_argument);
}

TEST_CASE("quantize rounds and clamps; min-max normalization maps constants to zero") {
    RealImage img(1, 4);
    img.values() = {-5.0, 0.4, 0.6, 300.0};
    const ScanImage q = cst::quantize(img, 256);
    CHECK(q.pixels() == std::vector<std::uint16_t>{0, 0, 1, 255});

    RealImage flat(2, 2);
    for (double& v : flat.values()) {
        v = 9.0;
    }
    const RealImage normalized = cst::normalize_min_max(flat);
    for (double v : normalized.values()) {
        CHECK(v == 0.0);
    }
}

}  // TEST_SUITE
