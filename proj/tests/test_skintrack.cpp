#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "gp/skintrack.hpp"
#include "oracles.hpp"

using namespace gp;

namespace {

Frame uniform_hue(int w, int h, int hue, int s = 200, int v = 200) {
    return Frame(w, h, oracle::hsv_to_rgb(hue, s, v));
}

// Gaussian blob with peak 255 at (mx, my).
GrayImage blob(int w, int h, double mx, double my, double sigma) {
    GrayImage g(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double d2 = (x - mx) * (x - mx) + (y - my) * (y - my);
            g.at(x, y) = static_cast<std::uint8_t>(std::lround(255.0 * std::exp(-d2 / (2 * sigma * sigma))));
        }
    return g;
}

Rect centred(double cx, double cy, int w, int h) {
    return Rect(static_cast<int>(std::lround(cx - (w - 1) / 2.0)), static_cast<int>(std::lround(cy - (h - 1) / 2.0)), w, h);
}

}  // namespace

TEST(SkinModel, UniformHue) {
    const Frame f = uniform_hue(40, 40, 10);
    const HueHistogram h = sample_skin_model(f, Rect(0, 0, 40, 40));
    const int b = HueHistogram::bin_of(rgb_to_hsv(f.at(0, 0)).h);
    for (int i = 0; i < kHueBins; ++i) EXPECT_EQ(h.bins[i], i == b ? 1.0 : 0.0);
}

TEST(SkinModel, GrayFaceIsDegenerate) {
    const Frame f(30, 30, Rgb{128, 128, 128});
    EXPECT_THROW(sample_skin_model(f, Rect(0, 0, 30, 30)), DegenerateSkinSample);
    EXPECT_THROW(sample_skin_model(f, Rect(20, 20, 30, 30)), Error);
}

TEST(SkinModel, TwoToneRatio) {
    // Central 50% of a 40x40 face is the 20x20 block at (10, 10): 14 rows of hue A, 6 of hue B.
    Frame f = uniform_hue(40, 40, 100);
    const Rgb a = oracle::hsv_to_rgb(15, 180, 200), b = oracle::hsv_to_rgb(60, 180, 200);
    for (int y = 10; y < 30; ++y)
        for (int x = 10; x < 30; ++x) f.set(x, y, y < 24 ? a : b);
    const HueHistogram h = sample_skin_model(f, Rect(0, 0, 40, 40));
    EXPECT_NEAR(h.bins[HueHistogram::bin_of(rgb_to_hsv(a).h)], 1.0, 1e-6);
    EXPECT_NEAR(h.bins[HueHistogram::bin_of(rgb_to_hsv(b).h)], 3.0 / 7.0, 1e-6);
    EXPECT_EQ(h.bins[HueHistogram::bin_of(100)], 0.0);
}

TEST(SkinModel, BrightnessScalingInvariance) {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> hue(0, 40), sat(80, 255), val(45, 120);
    Frame f(32, 32);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) f.set(x, y, oracle::hsv_to_rgb(hue(rng), sat(rng), val(rng)));
    Frame doubled = f;
    for (auto& v : doubled.bytes()) v = static_cast<std::uint8_t>(v * 2);
    const HueHistogram a = sample_skin_model(f, Rect(0, 0, 32, 32));
    const HueHistogram b = sample_skin_model(doubled, Rect(0, 0, 32, 32));
    EXPECT_EQ(std::max_element(a.bins.begin(), a.bins.end()) - a.bins.begin(),
              std::max_element(b.bins.begin(), b.bins.end()) - b.bins.begin());
    for (int i = 0; i < kHueBins; ++i) EXPECT_NEAR(a.bins[i], b.bins[i], 1e-6);
}

TEST(Backproject, MatchesPerPixelLookup) {
    std::mt19937_64 rng(5);
    const Frame f = oracle::random_frame(50, 40, rng);
    HueHistogram h;
    std::uniform_real_distribution<double> u(0, 1);
    for (auto& b : h.bins) b = u(rng);
    h.bins[3] = 1.0;
    const SkinGates gates;
    const GrayImage p = backproject(f, h, gates);
    for (int y = 0; y < 40; ++y)
        for (int x = 0; x < 50; ++x) {
            const Hsv c = rgb_to_hsv(f.at(x, y));
            const int expect = gates.pass(c) ? static_cast<int>(std::lround(255 * h.bins[c.h * 16 / 180])) : 0;
            ASSERT_EQ(p.at(x, y), expect);
        }
}

TEST(Backproject, UniformAndAbsentHue) {
    const Frame f = uniform_hue(10, 10, 20);
    const HueHistogram h = sample_skin_model(f, Rect(0, 0, 10, 10));
    const GrayImage same = backproject(f, h), other = backproject(uniform_hue(10, 10, 120), h);
    for (auto v : same.values()) EXPECT_EQ(v, 255);
    for (auto v : other.values()) EXPECT_EQ(v, 0);
}

TEST(Backproject, PixelOrderPermutation) {
    std::mt19937_64 rng(8);
    const Frame f = oracle::random_frame(30, 30, rng);
    HueHistogram h;
    for (int i = 0; i < kHueBins; ++i) h.bins[i] = (i % 5) / 4.0;
    const GrayImage p = backproject(f, h);
    std::vector<std::size_t> perm(900);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Frame g(30, 30);
    for (std::size_t i = 0; i < 900; ++i) g.set(perm[i] % 30, perm[i] / 30, f.at(i % 30, i / 30));
    const GrayImage q = backproject(g, h);
    for (std::size_t i = 0; i < 900; ++i)
        ASSERT_EQ(q.at(perm[i] % 30, perm[i] / 30), p.at(i % 30, i / 30));
}

TEST(MeanShift, ConvergesToBlobMode) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> mode(45, 75), angle(0, 2 * 3.141592653589793);
    for (int trial = 0; trial < 50; ++trial) {
        const double mx = mode(rng), my = mode(rng), a = angle(rng);
        const GrayImage g = blob(120, 120, mx, my, 8.0);
        const Rect start = centred(mx + 10 * std::cos(a), my + 10 * std::sin(a), 41, 41);
        const MeanShiftResult r = mean_shift(g, start, 20, 1.0);
        EXPECT_LE(r.iterations, 20);
        EXPECT_LE(std::abs(r.window.center_x() - mx), 1.0) << trial;
        EXPECT_LE(std::abs(r.window.center_y() - my), 1.0) << trial;
        EXPECT_EQ(r.window.w, 41);
    }
}

TEST(MeanShift, MassNondecreasingAndInsideFrame) {
    const GrayImage g = blob(100, 80, 30, 60, 7.0);
    double prev = -1;
    for (int k = 1; k <= 10; ++k) {
        const MeanShiftResult r = mean_shift(g, Rect(40, 10, 31, 31), k, 0.0);
        EXPECT_TRUE(r.window.inside(100, 80));
        EXPECT_GE(r.m00, prev);
        prev = r.m00;
    }
    // A mode on the border pulls the window to the edge, not past it.
    const GrayImage edge = blob(60, 60, 0, 0, 6.0);
    EXPECT_TRUE(mean_shift(edge, Rect(10, 10, 21, 21)).window.inside(60, 60));
}

TEST(MeanShift, UniformAndZero) {
    const Rect w(10, 10, 21, 21);
    EXPECT_EQ(mean_shift(GrayImage(60, 60, 90), w).window, w);
    EXPECT_EQ(mean_shift(GrayImage(60, 60, 0), w).window, w);
    EXPECT_THROW(mean_shift(GrayImage(20, 20, 0), w), Error);
}

TEST(CamShift, AdaptsSizeToMass) {
    TrackState s;
    s.window = Rect(40, 40, 41, 41);
    const TrackState big = camshift_step(blob(160, 160, 60, 60, 12.0), s);
    const TrackState small = camshift_step(blob(160, 160, 60, 60, 6.0), big);
    EXPECT_FALSE(big.lost);
    EXPECT_LT(small.window.area(), big.window.area());
    EXPECT_GE(small.window.w, 8);
    EXPECT_TRUE(small.window.inside(160, 160));
    EXPECT_GT(big.orientation, -3.141592653589793 / 2);
    EXPECT_LE(big.orientation, 3.141592653589793 / 2);
}

TEST(CamShift, SizeFormula) {
    // Solid 20x20 square of 255: M00/255 = 400, s = 40.
    GrayImage g(100, 100);
    for (int y = 40; y < 60; ++y)
        for (int x = 30; x < 50; ++x) g.at(x, y) = 255;
    TrackState s;
    s.window = Rect(25, 35, 30, 30);
    const TrackState t = camshift_step(g, s);
    EXPECT_EQ(t.window.w, 44);
    EXPECT_EQ(t.window.h, 56);
    EXPECT_NEAR(t.window.center_x(), 39.5, 0.5);
    EXPECT_NEAR(t.window.center_y(), 49.5, 0.5);
}

TEST(CamShift, OrientationOfElongatedBlob) {
    GrayImage g(100, 100);
    for (int i = -20; i <= 20; ++i)
        for (int d = -2; d <= 2; ++d) g.at(50 + i, 50 + i + d) = 255;  // diagonal bar, +45 degrees in image axes
    TrackState s;
    s.window = Rect(25, 25, 51, 51);
    EXPECT_NEAR(camshift_step(g, s).orientation, 3.141592653589793 / 4, 0.05);
}

TEST(CamShift, ZeroProbabilityIsLost) {
    TrackState s;
    s.window = Rect(5, 5, 20, 20);
    const TrackState t = camshift_step(GrayImage(50, 50), s);
    EXPECT_TRUE(t.lost);
    EXPECT_EQ(t.window, s.window);
    EXPECT_EQ(t.confidence, 0.0);
}

TEST(SkinMask, ThresholdAndClosing) {
    EXPECT_EQ(skin_mask(GrayImage(20, 20)).count(), 0u);
    GrayImage g(30, 30);
    for (int y = 5; y < 25; ++y)
        for (int x = 5; x < 25; ++x) g.at(x, y) = 200;
    for (int y = 7; y < 23; y += 4)
        for (int x = 7; x < 23; x += 4) g.at(x, y) = 0;  // isolated 1-px holes
    const Mask m = skin_mask(g, 60, 3);
    for (int y = 5; y < 25; ++y)
        for (int x = 5; x < 25; ++x) EXPECT_TRUE(m.test(x, y));

    GrayImage edge(9, 9, 59);
    for (int y = 3; y < 6; ++y)
        for (int x = 3; x < 6; ++x) edge.at(x, y) = 60;
    EXPECT_EQ(skin_mask(edge, 60, 1).count(), 9u);
}

TEST(Fuse, Basics) {
    std::mt19937_64 rng(1);
    const Mask skin = oracle::random_mask(20, 20, 0.5, rng);
    EXPECT_EQ(fuse_masks(Mask(20, 20), skin).count(), 0u);
    EXPECT_EQ(fuse_masks(skin, skin), skin);
    EXPECT_THROW(fuse_masks(skin, Mask(21, 20)), Error);
}

TEST(Fuse, FaceSuppressionKeepsHandOnly) {
    Mask motion(60, 40), skin(60, 40), hand(60, 40);
    for (int y = 0; y < 40; ++y)
        for (int x = 0; x < 60; ++x) {
            const bool face = (x - 15) * (x - 15) + (y - 20) * (y - 20) <= 100;
            const bool h = x >= 24 && x < 40 && y >= 12 && y < 30;
            if (face || h) motion.set(x, y), skin.set(x, y);
            if (h && !(x >= 5 && x <= 25 && y >= 10 && y <= 30)) hand.set(x, y);
        }
    const Mask fused = fuse_masks(motion, skin, Rect(5, 10, 21, 21));
    EXPECT_EQ(fused, hand);
}

TEST(Fuse, InclusionProperty) {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> d(0, 1);
    for (int i = 0; i < 1000; ++i) {
        const Mask a = oracle::random_mask(17, 13, d(rng), rng);
        const Mask b = oracle::random_mask(17, 13, d(rng), rng);
        const Mask f = fuse_masks(a, b, i % 3 ? std::nullopt : std::optional<Rect>(Rect(2, 2, 5, 5)));
        ASSERT_TRUE(f.subset_of(a));
        ASSERT_TRUE(f.subset_of(b));
    }
}
