#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gp/codebook.hpp"
#include "oracles.hpp"

using namespace gp;

namespace {

Frame textured(int w, int h, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> d(40, 140);
    Frame f(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const int base = d(rng);
            f.set(x, y, {static_cast<std::uint8_t>(base / 2), static_cast<std::uint8_t>(base * 3 / 4),
                         static_cast<std::uint8_t>(base)});
        }
    return f;
}

void paint(Frame& f, const Rect& r, Rgb c) {
    for (int y = r.y; y < r.bottom(); ++y)
        for (int x = r.x; x < r.right(); ++x) f.set(x, y, c);
}

// Rejection-by-projection reference: |x - proj_v(x)|.
double distortion_oracle(const Vec3& x, const Vec3& v) {
    const double vv = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
    const double k = (x[0] * v[0] + x[1] * v[1] + x[2] * v[2]) / vv;
    const double r0 = x[0] - k * v[0], r1 = x[1] - k * v[1], r2 = x[2] - k * v[2];
    return std::sqrt(r0 * r0 + r1 * r1 + r2 * r2);
}

}  // namespace

TEST(ColorDistortion, Cases) {
    const Vec3 v{10, 20, 30};
    EXPECT_NEAR(color_distortion({20, 40, 60}, v), 0.0, 1e-9);
    EXPECT_NEAR(color_distortion({1, 0, 0}, {0, 1, 0}), 1.0, 1e-12);
    EXPECT_NEAR(color_distortion({3, 4, 0}, {0, 0, 0}), 5.0, 1e-12);

    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> d(0, 255);
    for (int i = 0; i < 1000; ++i) {
        const Vec3 x{d(rng), d(rng), d(rng)}, w{d(rng) + 1, d(rng), d(rng)};
        ASSERT_NEAR(color_distortion(x, w), distortion_oracle(x, w), 1e-9);
        const double k = d(rng) / 50 + 0.1;
        ASSERT_NEAR(color_distortion({k * w[0], k * w[1], k * w[2]}, w), 0.0, 1e-9);
    }
}

TEST(BrightnessOk, ClosedInterval) {
    CodebookParams p;
    Codeword cw;
    cw.i_min = 90;
    cw.i_max = 100;
    EXPECT_TRUE(brightness_ok(100, cw, p));
    EXPECT_FALSE(brightness_ok(0, cw, p));
    EXPECT_TRUE(brightness_ok(p.alpha * 100, cw, p));
    EXPECT_FALSE(brightness_ok(p.alpha * 100 - 1e-9, cw, p));
    EXPECT_TRUE(brightness_ok(p.beta * 100, cw, p));
    EXPECT_FALSE(brightness_ok(p.beta * 100 + 1e-9, cw, p));
    cw.i_min = 60;  // i_min / alpha = 109.09 < beta * i_max
    EXPECT_FALSE(brightness_ok(110, cw, p));
    EXPECT_TRUE(brightness_ok(109, cw, p));
}

TEST(Params, Validation) {
    CodebookParams p;
    EXPECT_NO_THROW(p.validate());
    p.alpha = 0;
    EXPECT_THROW(p.validate(), Error);
    p = {};
    p.beta = 0.9;
    EXPECT_THROW(p.validate(), Error);
    p = {};
    p.eps_detect = 0;
    EXPECT_THROW(p.validate(), Error);
}

TEST(Train, IdenticalFrames) {
    const Frame f = textured(12, 9, 3);
    const std::vector<Frame> frames(7, f);
    const CodebookModel m = train(frames, {});
    for (int y = 0; y < 9; ++y)
        for (int x = 0; x < 12; ++x) {
            ASSERT_EQ(m.at(x, y).size(), 1u);
            EXPECT_EQ(m.at(x, y)[0].freq, 7u);
            EXPECT_EQ(m.at(x, y)[0].mnrl, 0u);
            EXPECT_EQ(m.at(x, y)[0].first_seen, 0u);
            EXPECT_EQ(m.at(x, y)[0].last_seen, 6u);
        }
}

TEST(Train, FlickeringSquare) {
    const Frame bg = textured(20, 20, 5);
    Frame fg = bg;
    const Rect sq(6, 6, 5, 5);
    paint(fg, sq, {230, 40, 40});
    std::vector<Frame> frames;
    for (int t = 0; t < 10; ++t) frames.push_back(t % 2 ? fg : bg);
    const CodebookModel m = train(frames, {});
    for (int y = 0; y < 20; ++y)
        for (int x = 0; x < 20; ++x) {
            const std::size_t expect = sq.contains(x, y) ? 2 : 1;
            ASSERT_EQ(m.at(x, y).size(), expect) << x << "," << y;
        }
    // Alternating codewords miss every other frame: mnrl 1.
    for (const auto& cw : m.at(8, 8)) EXPECT_EQ(cw.mnrl, 1u);
}

TEST(Train, TransientObjectAndPrune) {
    const Frame bg = textured(16, 16, 8);
    Frame obj = bg;
    const Rect sq(4, 4, 4, 4);
    paint(obj, sq, {250, 250, 20});
    std::vector<Frame> frames(100, bg);
    frames[40] = obj;
    frames[41] = obj;
    const CodebookModel m = train(frames, {});
    ASSERT_EQ(m.at(5, 5).size(), 2u);
    const Codeword& transient = m.at(5, 5)[1];
    EXPECT_EQ(transient.freq, 2u);
    EXPECT_GE(transient.mnrl, 97u);
    EXPECT_EQ(transient.mnrl, 98u);  // 58 after + 40 before
    EXPECT_EQ(m.at(5, 5)[0].mnrl, 2u);

    const CodebookModel pruned = prune(m);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) ASSERT_EQ(pruned.at(x, y).size(), 1u);
    EXPECT_EQ(pruned.at(5, 5)[0].freq, 98u);

    // Pruning must not add foreground on re-presented training frames.
    for (std::size_t t : {0u, 40u, 99u}) {
        const auto before = subtract(m, frames[t]).count();
        const auto after = subtract(pruned, frames[t]).count();
        EXPECT_LE(after, before + (t == 40 ? sq.area() : 0));
    }
}

TEST(Prune, AllStaticAndFallback) {
    const Frame f = textured(8, 8, 1);
    const CodebookModel m = train(std::vector<Frame>(6, f), {});
    EXPECT_TRUE(prune(m).same_codewords(m));

    CodebookModel odd(1, 1, {});
    Codeword a, b;
    a.freq = 3;
    a.mnrl = 90;
    b.freq = 7;
    b.mnrl = 80;
    odd.at(0, 0) = {a, b};
    const CodebookModel p = prune(odd, 100);
    ASSERT_EQ(p.at(0, 0).size(), 1u);
    EXPECT_EQ(p.at(0, 0)[0].freq, 7u);
}

TEST(Train, Errors) {
    EXPECT_THROW(train(std::vector<Frame>{}, {}), Error);
    const std::vector<Frame> mixed{Frame(4, 4), Frame(5, 4)};
    EXPECT_THROW(train(mixed, {}), Error);
    const CodebookModel m = train(std::vector<Frame>{Frame(4, 4)}, {});
    EXPECT_THROW(subtract(m, Frame(4, 5)), Error);
}

TEST(Subtract, SelfMatchAndBlackVersusWhite) {
    std::vector<Frame> frames;
    for (int i = 0; i < 5; ++i) frames.push_back(textured(15, 10, 100 + i));
    const CodebookModel m = train(frames, {});
    for (const auto& f : frames) EXPECT_EQ(subtract(m, f).count(), 0u);

    const CodebookModel black = train(std::vector<Frame>{Frame(6, 6, Rgb{0, 0, 0})}, {});
    EXPECT_EQ(subtract(black, Frame(6, 6, Rgb{255, 255, 255})).count(), 36u);
}

TEST(Subtract, CodewordsBoundedByDistinctFrames) {
    std::mt19937_64 rng(12);
    std::vector<Frame> frames;
    for (int i = 0; i < 4; ++i) frames.push_back(oracle::random_frame(10, 10, rng));
    frames.push_back(frames[0]);
    const CodebookModel m = train(frames, {});
    for (int y = 0; y < 10; ++y)
        for (int x = 0; x < 10; ++x) ASSERT_LE(m.at(x, y).size(), 4u);
    for (const auto& f : frames) EXPECT_EQ(subtract(m, f).count(), 0u);
}

TEST(Subtract, MovingSquareOverTexture) {
    std::vector<Frame> train_frames;
    std::mt19937_64 rng(21);
    std::normal_distribution<double> noise(0, 2);
    const Frame base = textured(64, 48, 77);
    auto noisy = [&](Frame f) {
        for (auto& v : f.bytes()) v = static_cast<std::uint8_t>(std::clamp(v + std::lround(noise(rng)), 0L, 255L));
        return f;
    };
    for (int i = 0; i < 30; ++i) train_frames.push_back(noisy(base));
    const CodebookModel m = prune(train(train_frames, {}));
    for (int t = 0; t < 5; ++t) {
        Frame f = noisy(base);
        const Rect sq(5 + 8 * t, 10 + 2 * t, 12, 12);
        paint(f, sq, {220, 176, 120});
        const Mask fg = subtract(m, f);
        std::size_t inter = 0, uni = 0;
        for (int y = 0; y < 48; ++y)
            for (int x = 0; x < 64; ++x) {
                const bool a = fg.test(x, y), b = sq.contains(x, y);
                inter += a && b;
                uni += a || b;
            }
        EXPECT_GE(static_cast<double>(inter) / uni, 0.95);
    }
}

TEST(Persistence, RoundTripIsBitExact) {
    std::vector<Frame> frames;
    for (int i = 0; i < 3; ++i) frames.push_back(textured(7, 5, 50 + i));
    const CodebookModel m = train(frames, {});
    const std::string bytes = encode_codebook(m);
    ASSERT_EQ(bytes.substr(0, 4), "CBKM");
    const CodebookModel back = decode_codebook(bytes);
    EXPECT_TRUE(back.same_codewords(m));
    EXPECT_EQ(encode_codebook(back), bytes);

    EXPECT_THROW(decode_codebook(bytes.substr(0, bytes.size() - 1)), Error);
    EXPECT_THROW(decode_codebook("XBKM" + bytes.substr(4)), Error);
    std::string bad_version = bytes;
    bad_version[4] = 2;
    EXPECT_THROW(decode_codebook(bad_version), Error);
}
