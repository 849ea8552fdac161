#include "oracles.hpp"

#include <cmath>

namespace oracle {

gp::GrayImage random_gray(int w, int h, std::mt19937_64& rng, int lo, int hi) {
    std::uniform_int_distribution<int> d(lo, hi);
    gp::GrayImage img(w, h);
    for (auto& v : img.values()) v = static_cast<std::uint8_t>(d(rng));
    return img;
}

gp::Mask random_mask(int w, int h, double density, std::mt19937_64& rng) {
    std::bernoulli_distribution d(density);
    gp::Mask m(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (d(rng)) m.set(x, y);
    return m;
}

gp::Frame random_frame(int w, int h, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> d(0, 255);
    gp::Frame f(w, h);
    for (auto& v : f.bytes()) v = static_cast<std::uint8_t>(d(rng));
    return f;
}

std::uint64_t rect_sum(const gp::GrayImage& img, const gp::Rect& r) {
    std::uint64_t s = 0;
    for (int y = r.y; y < r.y + r.h; ++y)
        for (int x = r.x; x < r.x + r.w; ++x) s += img.at(x, y);
    return s;
}

RawMoments moments(const gp::GrayImage& img, const gp::Rect& r) {
    RawMoments m;
    for (int y = r.y; y < r.y + r.h; ++y)
        for (int x = r.x; x < r.x + r.w; ++x) {
            const double v = img.at(x, y);
            m.m00 += v;
            m.m10 += v * x;
            m.m01 += v * y;
            m.m11 += v * x * y;
            m.m20 += v * x * x;
            m.m02 += v * y * y;
        }
    return m;
}

namespace {

bool get(const gp::Mask& m, int x, int y) {
    return x >= 0 && y >= 0 && x < m.width() && y < m.height() && m.test(x, y);
}

}  // namespace

gp::Mask erode(const gp::Mask& m, int k) {
    gp::Mask out(m.width(), m.height());
    const int r = k / 2;
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x) {
            bool all = true;
            for (int dy = -r; dy <= r && all; ++dy)
                for (int dx = -r; dx <= r && all; ++dx) all = get(m, x + dx, y + dy);
            out.set(x, y, all);
        }
    return out;
}

gp::Mask dilate(const gp::Mask& m, int k) {
    gp::Mask out(m.width(), m.height());
    const int r = k / 2;
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x) {
            bool any = false;
            for (int dy = -r; dy <= r && !any; ++dy)
                for (int dx = -r; dx <= r && !any; ++dx) any = get(m, x + dx, y + dy);
            out.set(x, y, any);
        }
    return out;
}

std::size_t border_pixel_count(const gp::Mask& m) {
    std::size_t n = 0;
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x) {
            if (!m.test(x, y)) continue;
            bool border = false;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx)
                    if ((dx || dy) && !get(m, x + dx, y + dy)) border = true;
            n += border;
        }
    return n;
}

gp::Rgb hsv_to_rgb(int h_half_deg, int s, int v) {
    const double h = h_half_deg * 2.0, sf = s / 255.0, vf = v;
    const double c = vf * sf;
    const double hp = h / 60.0;
    const double x = c * (1 - std::abs(std::fmod(hp, 2.0) - 1));
    double r = 0, g = 0, b = 0;
    if (hp < 1) { r = c; g = x; }
    else if (hp < 2) { r = x; g = c; }
    else if (hp < 3) { g = c; b = x; }
    else if (hp < 4) { g = x; b = c; }
    else if (hp < 5) { r = x; b = c; }
    else { r = c; b = x; }
    const double m = vf - c;
    auto q = [](double u) { return static_cast<std::uint8_t>(std::lround(u)); };
    return {q(r + m), q(g + m), q(b + m)};
}

}  // namespace oracle
