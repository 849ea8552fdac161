#include "gp/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gp {

namespace {

void check_dims(int width, int height) {
    if (width <= 0 || height <= 0 || width > kMaxImageDim || height > kMaxImageDim)
        throw Error("image dimensions out of range: " + std::to_string(width) + "x" + std::to_string(height));
}

std::size_t pixel_count(int width, int height) {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
}

void check_kernel(int k) {
    if (k < 1 || k % 2 == 0)
        throw Error("morphology kernel size must be odd and >= 1, got " + std::to_string(k));
}

template <class Plane>
void check_window(const Plane& p, const Rect& r) {
    if (!r.inside(p.width(), p.height()))
        throw Error("window outside image");
}

template <class Plane>
Moments moments_impl(const Plane& p, const Rect& r) {
    check_window(p, r);
    std::uint64_t m00 = 0, m10 = 0, m01 = 0, m11 = 0, m20 = 0, m02 = 0;
    for (int y = r.y; y < r.bottom(); ++y) {
        std::uint64_t row = 0, row_x = 0, row_xx = 0;
        for (int x = r.x; x < r.right(); ++x) {
            const std::uint64_t v = p.at(x, y);
            if (v == 0) continue;
            const auto ux = static_cast<std::uint64_t>(x);
            row += v;
            row_x += v * ux;
            row_xx += v * ux * ux;
        }
        const auto uy = static_cast<std::uint64_t>(y);
        m00 += row;
        m10 += row_x;
        m01 += row * uy;
        m11 += row_x * uy;
        m20 += row_xx;
        m02 += row * uy * uy;
    }
    Moments m;
    m.m00 = static_cast<double>(m00);
    m.m10 = static_cast<double>(m10);
    m.m01 = static_cast<double>(m01);
    m.m11 = static_cast<double>(m11);
    m.m20 = static_cast<double>(m20);
    m.m02 = static_cast<double>(m02);
    return m;
}

// Separable min/max filter over a square window, with zero padding.
template <bool Erode>
Mask morph(const Mask& m, int k) {
    check_kernel(k);
    if (k == 1) return m;
    const int w = m.width(), h = m.height(), r = k / 2;
    std::vector<std::uint8_t> tmp(pixel_count(w, h)), out(pixel_count(w, h));
    const auto src = m.values();
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            std::uint8_t acc = Erode ? 255 : 0;
            for (int dx = -r; dx <= r; ++dx) {
                const int xx = x + dx;
                const std::uint8_t v = (xx < 0 || xx >= w) ? 0 : src[static_cast<std::size_t>(y) * w + xx];
                acc = Erode ? std::min(acc, v) : std::max(acc, v);
            }
            tmp[static_cast<std::size_t>(y) * w + x] = acc;
        }
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            std::uint8_t acc = Erode ? 255 : 0;
            for (int dy = -r; dy <= r; ++dy) {
                const int yy = y + dy;
                const std::uint8_t v = (yy < 0 || yy >= h) ? 0 : tmp[static_cast<std::size_t>(yy) * w + x];
                acc = Erode ? std::min(acc, v) : std::max(acc, v);
            }
            out[static_cast<std::size_t>(y) * w + x] = acc;
        }
    }
    return Mask::from_values(w, h, out);
}

}  // namespace

bool intersect(const Rect& a, const Rect& b, Rect& out) {
    const int x0 = std::max(a.x, b.x), y0 = std::max(a.y, b.y);
    const int x1 = std::min(a.right(), b.right()), y1 = std::min(a.bottom(), b.bottom());
    if (x1 <= x0 || y1 <= y0) return false;
    out = Rect(x0, y0, x1 - x0, y1 - y0);
    return true;
}

bool clip(const Rect& r, int width, int height, Rect& out) {
    return intersect(r, Rect(0, 0, width, height), out);
}

Frame::Frame(int width, int height, Rgb fill) : width_(width), height_(height) {
    check_dims(width, height);
    pixels_.resize(pixel_count(width, height) * 3);
    for (std::size_t i = 0; i < pixels_.size(); i += 3) {
        pixels_[i] = fill.r;
        pixels_[i + 1] = fill.g;
        pixels_[i + 2] = fill.b;
    }
}

Frame::Frame(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
    check_dims(width, height);
    if (pixels_.size() != pixel_count(width, height) * 3)
        throw Error("frame buffer length does not match dimensions");
}

GrayImage::GrayImage(int width, int height, std::uint8_t fill)
    : width_(width), height_(height) {
    check_dims(width, height);
    values_.assign(pixel_count(width, height), fill);
}

GrayImage::GrayImage(int width, int height, std::vector<std::uint8_t> values)
    : width_(width), height_(height), values_(std::move(values)) {
    check_dims(width, height);
    if (values_.size() != pixel_count(width, height))
        throw Error("gray buffer length does not match dimensions");
}

Mask::Mask(int width, int height, bool fill) : width_(width), height_(height) {
    check_dims(width, height);
    bits_.assign(pixel_count(width, height), fill ? kOn : 0);
}

Mask Mask::from_values(int width, int height, std::span<const std::uint8_t> values) {
    Mask m(width, height);
    if (values.size() != m.bits_.size())
        throw Error("mask buffer length does not match dimensions");
    std::transform(values.begin(), values.end(), m.bits_.begin(),
                   [](std::uint8_t v) { return v ? kOn : std::uint8_t{0}; });
    return m;
}

std::size_t Mask::count() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), kOn));
}

bool Mask::subset_of(const Mask& other) const {
    if (width_ != other.width_ || height_ != other.height_) return false;
    for (std::size_t i = 0; i < bits_.size(); ++i)
        if (bits_[i] && !other.bits_[i]) return false;
    return true;
}

IntegralImage::IntegralImage(const GrayImage& img) : width_(img.width()), height_(img.height()) {
    const std::size_t stride = static_cast<std::size_t>(width_) + 1;
    sum_.assign(stride * (height_ + 1), 0);
    sq_.assign(stride * (height_ + 1), 0);
    for (int y = 0; y < height_; ++y) {
        std::uint64_t row = 0, row_sq = 0;
        for (int x = 0; x < width_; ++x) {
            const std::uint64_t v = img.at(x, y);
            row += v;
            row_sq += v * v;
            sum_[(y + 1) * stride + x + 1] = sum_[y * stride + x + 1] + row;
            sq_[(y + 1) * stride + x + 1] = sq_[y * stride + x + 1] + row_sq;
        }
    }
}

std::uint64_t IntegralImage::rect_sum(const Rect& r) const {
    if (!r.inside(width_, height_)) throw Error("rect_sum: rect outside image");
    return sum_unchecked(r.x, r.y, r.w, r.h);
}

std::uint64_t IntegralImage::rect_sq_sum(const Rect& r) const {
    if (!r.inside(width_, height_)) throw Error("rect_sq_sum: rect outside image");
    return sq_sum_unchecked(r.x, r.y, r.w, r.h);
}

IntegralImage integral(const GrayImage& img) { return IntegralImage(img); }

std::uint64_t rect_sum(const IntegralImage& ii, const Rect& r) { return ii.rect_sum(r); }

std::uint8_t luminance(Rgb c) {
    const double y = 0.299 * c.r + 0.587 * c.g + 0.114 * c.b;
    return static_cast<std::uint8_t>(std::clamp<long>(std::lround(y), 0, 255));
}

GrayImage to_gray(const Frame& frame) {
    GrayImage out(frame.width(), frame.height());
    auto src = frame.bytes();
    auto dst = out.values();
    for (std::size_t i = 0; i < dst.size(); ++i)
        dst[i] = luminance({src[3 * i], src[3 * i + 1], src[3 * i + 2]});
    return out;
}

Hsv rgb_to_hsv(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    const int mx = std::max({r, g, b});
    const int mn = std::min({r, g, b});
    const int delta = mx - mn;
    Hsv out;
    out.v = static_cast<std::uint8_t>(mx);
    if (mx == 0 || delta == 0) return out;
    out.s = static_cast<std::uint8_t>(std::lround(255.0 * delta / mx));
    double deg;
    if (mx == r)
        deg = 60.0 * (g - b) / delta;
    else if (mx == g)
        deg = 120.0 + 60.0 * (b - r) / delta;
    else
        deg = 240.0 + 60.0 * (r - g) / delta;
    if (deg < 0) deg += 360.0;
    long half = std::lround(deg / 2.0);
    if (half >= 180) half -= 180;
    out.h = static_cast<std::uint8_t>(half);
    return out;
}

Mask threshold(const GrayImage& map, std::uint8_t t) {
    Mask out(map.width(), map.height());
    for (int y = 0; y < map.height(); ++y)
        for (int x = 0; x < map.width(); ++x)
            if (map.at(x, y) >= t) out.set(x, y);
    return out;
}

Mask erode(const Mask& m, int k) { return morph<true>(m, k); }
Mask dilate(const Mask& m, int k) { return morph<false>(m, k); }
Mask close(const Mask& m, int k) { return erode(dilate(m, k), k); }

Mask mask_and(const Mask& a, const Mask& b) {
    if (a.width() != b.width() || a.height() != b.height())
        throw Error("mask dimensions differ");
    Mask out(a.width(), a.height());
    for (int y = 0; y < a.height(); ++y)
        for (int x = 0; x < a.width(); ++x)
            if (a.test(x, y) && b.test(x, y)) out.set(x, y);
    return out;
}

Moments moments(const GrayImage& img, const Rect& window) { return moments_impl(img, window); }
Moments moments(const Mask& m, const Rect& window) { return moments_impl(m, window); }

namespace {

constexpr int kDx[8] = {1, 1, 0, -1, -1, -1, 0, 1};
constexpr int kDy[8] = {0, 1, 1, 1, 0, -1, -1, -1};

}  // namespace

std::vector<Contour> trace_boundary(const Mask& m, std::size_t min_area) {
    const int w = m.width(), h = m.height();
    std::vector<Contour> out;
    if (m.empty()) return out;

    std::vector<int> label(pixel_count(w, h), 0);
    auto idx = [w](int x, int y) { return static_cast<std::size_t>(y) * w + x; };
    int next_label = 0;
    std::vector<Point> stack;

    for (int y0 = 0; y0 < h; ++y0) {
        for (int x0 = 0; x0 < w; ++x0) {
            if (!m.test(x0, y0) || label[idx(x0, y0)] != 0) continue;

            const int id = ++next_label;
            std::size_t area = 0;
            int bx0 = x0, by0 = y0, bx1 = x0, by1 = y0;
            stack.assign(1, {x0, y0});
            label[idx(x0, y0)] = id;
            while (!stack.empty()) {
                const Point p = stack.back();
                stack.pop_back();
                ++area;
                bx0 = std::min(bx0, p.x);
                bx1 = std::max(bx1, p.x);
                by0 = std::min(by0, p.y);
                by1 = std::max(by1, p.y);
                for (int d = 0; d < 8; ++d) {
                    const int nx = p.x + kDx[d], ny = p.y + kDy[d];
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                    if (!m.test(nx, ny) || label[idx(nx, ny)] != 0) continue;
                    label[idx(nx, ny)] = id;
                    stack.push_back({nx, ny});
                }
            }
            if (area < min_area) continue;

            auto in_component = [&](int x, int y) {
                return x >= 0 && y >= 0 && x < w && y < h && label[idx(x, y)] == id;
            };
            // Clockwise Moore neighbour search starting at direction `from`.
            auto next = [&](Point p, int from, Point& q, int& dir) {
                for (int i = 0; i < 8; ++i) {
                    const int d = (from + i) % 8;
                    if (in_component(p.x + kDx[d], p.y + kDy[d])) {
                        q = {p.x + kDx[d], p.y + kDy[d]};
                        dir = d;
                        return true;
                    }
                }
                return false;
            };

            Contour c;
            c.area = area;
            c.bounds = Rect(bx0, by0, bx1 - bx0 + 1, by1 - by0 + 1);
            // (x0, y0) is the first pixel in raster order, so its west neighbour is background.
            const Point start{x0, y0};
            c.points.push_back(start);
            Point q;
            int dir = 0;
            if (next(start, 4, q, dir)) {
                const Point first = q;
                Point p = start;
                const std::size_t guard = 4 * area + 16;
                for (std::size_t steps = 0; steps < guard; ++steps) {
                    const int from = (dir % 2 == 0) ? (dir + 6) % 8 : (dir + 5) % 8;
                    p = q;
                    Point q2;
                    int d2 = 0;
                    next(p, from, q2, d2);
                    if (p == start && q2 == first) break;
                    c.points.push_back(p);
                    q = q2;
                    dir = d2;
                }
            }
            out.push_back(std::move(c));
        }
    }
    return out;
}

}  // namespace gp
