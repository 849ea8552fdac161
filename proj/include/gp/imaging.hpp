#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gp {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr int kMaxImageDim = 8192;

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
    friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Axis-aligned rectangle with strictly positive extent.
class Rect {
public:
    int x = 0, y = 0, w = 1, h = 1;

    Rect() = default;
    Rect(int x_, int y_, int w_, int h_) : x(x_), y(y_), w(w_), h(h_) {
        if (w <= 0 || h <= 0)
            throw Error("Rect: width and height must be positive");
    }

    int right() const { return x + w; }
    int bottom() const { return y + h; }
    long long area() const { return static_cast<long long>(w) * h; }
    double center_x() const { return x + (w - 1) / 2.0; }
    double center_y() const { return y + (h - 1) / 2.0; }
    bool inside(int width, int height) const {
        return x >= 0 && y >= 0 && right() <= width && bottom() <= height;
    }
    bool contains(int px, int py) const {
        return px >= x && py >= y && px < right() && py < bottom();
    }

    friend bool operator==(const Rect&, const Rect&) = default;
};

/// Intersection of two rects, or nullopt-like empty result signalled by false.
bool intersect(const Rect& a, const Rect& b, Rect& out);
/// Clips r to [0,width)x[0,height); returns false when nothing remains.
bool clip(const Rect& r, int width, int height, Rect& out);

/// Interleaved 8-bit RGB raster, row-major.
class Frame {
public:
    Frame() = default;
    Frame(int width, int height, Rgb fill = {});
    Frame(int width, int height, std::vector<std::uint8_t> pixels);

    int width() const { return width_; }
    int height() const { return height_; }
    bool empty() const { return pixels_.empty(); }

    Rgb at(int x, int y) const {
        const std::uint8_t* p = &pixels_[(static_cast<std::size_t>(y) * width_ + x) * 3];
        return {p[0], p[1], p[2]};
    }
    void set(int x, int y, Rgb c) {
        std::uint8_t* p = &pixels_[(static_cast<std::size_t>(y) * width_ + x) * 3];
        p[0] = c.r;
        p[1] = c.g;
        p[2] = c.b;
    }

    std::span<const std::uint8_t> bytes() const { return pixels_; }
    std::span<std::uint8_t> bytes() { return pixels_; }

    friend bool operator==(const Frame&, const Frame&) = default;

private:
    int width_ = 0, height_ = 0;
    std::vector<std::uint8_t> pixels_;
};

/// Single-channel 8-bit raster.
class GrayImage {
public:
    GrayImage() = default;
    GrayImage(int width, int height, std::uint8_t fill = 0);
    GrayImage(int width, int height, std::vector<std::uint8_t> values);

    int width() const { return width_; }
    int height() const { return height_; }
    bool empty() const { return values_.empty(); }

    std::uint8_t at(int x, int y) const { return values_[static_cast<std::size_t>(y) * width_ + x]; }
    std::uint8_t& at(int x, int y) { return values_[static_cast<std::size_t>(y) * width_ + x]; }

    std::span<const std::uint8_t> values() const { return values_; }
    std::span<std::uint8_t> values() { return values_; }

    friend bool operator==(const GrayImage&, const GrayImage&) = default;

private:
    int width_ = 0, height_ = 0;
    std::vector<std::uint8_t> values_;
};

/// Binary raster; every value is 0 or 255.
class Mask {
public:
    static constexpr std::uint8_t kOn = 255;

    Mask() = default;
    Mask(int width, int height, bool fill = false);
    /// Nonzero input values become 255.
    static Mask from_values(int width, int height, std::span<const std::uint8_t> values);

    int width() const { return width_; }
    int height() const { return height_; }
    bool empty() const { return bits_.empty(); }

    bool test(int x, int y) const { return bits_[static_cast<std::size_t>(y) * width_ + x] != 0; }
    std::uint8_t at(int x, int y) const { return bits_[static_cast<std::size_t>(y) * width_ + x]; }
    void set(int x, int y, bool on = true) {
        bits_[static_cast<std::size_t>(y) * width_ + x] = on ? kOn : 0;
    }

    std::span<const std::uint8_t> values() const { return bits_; }
    std::size_t count() const;
    /// True when every on-pixel of *this is also on in other.
    bool subset_of(const Mask& other) const;

    friend bool operator==(const Mask&, const Mask&) = default;

private:
    int width_ = 0, height_ = 0;
    std::vector<std::uint8_t> bits_;
};

/// Summed-area table of a gray image plus its squared companion.
/// Entry (x, y) holds the sum of all pixels with column < x and row < y.
class IntegralImage {
public:
    IntegralImage() = default;
    explicit IntegralImage(const GrayImage& img);

    int width() const { return width_; }
    int height() const { return height_; }

    std::uint64_t sum_at(int x, int y) const { return sum_[index(x, y)]; }
    std::uint64_t sq_sum_at(int x, int y) const { return sq_[index(x, y)]; }

    /// Throws gp::Error when r is not inside the image.
    std::uint64_t rect_sum(const Rect& r) const;
    std::uint64_t rect_sq_sum(const Rect& r) const;

    // Unchecked variants for the cascade inner loop.
    std::uint64_t sum_unchecked(int x, int y, int w, int h) const {
        const std::size_t stride = static_cast<std::size_t>(width_) + 1;
        const std::size_t a = static_cast<std::size_t>(y) * stride + x;
        const std::size_t b = a + w;
        const std::size_t c = a + static_cast<std::size_t>(h) * stride;
        return sum_[c + w] - sum_[c] - sum_[b] + sum_[a];
    }
    std::uint64_t sq_sum_unchecked(int x, int y, int w, int h) const {
        const std::size_t stride = static_cast<std::size_t>(width_) + 1;
        const std::size_t a = static_cast<std::size_t>(y) * stride + x;
        const std::size_t b = a + w;
        const std::size_t c = a + static_cast<std::size_t>(h) * stride;
        return sq_[c + w] - sq_[c] - sq_[b] + sq_[a];
    }

private:
    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * (width_ + 1) + x; }

    int width_ = 0, height_ = 0;
    std::vector<std::uint64_t> sum_, sq_;
};

IntegralImage integral(const GrayImage& img);
std::uint64_t rect_sum(const IntegralImage& ii, const Rect& r);

std::uint8_t luminance(Rgb c);
GrayImage to_gray(const Frame& frame);

struct Hsv {
    std::uint8_t h = 0;  // half-degrees, [0, 179]
    std::uint8_t s = 0;
    std::uint8_t v = 0;
    friend bool operator==(const Hsv&, const Hsv&) = default;
};
Hsv rgb_to_hsv(std::uint8_t r, std::uint8_t g, std::uint8_t b);
inline Hsv rgb_to_hsv(Rgb c) { return rgb_to_hsv(c.r, c.g, c.b); }

/// 255 where value >= t.
Mask threshold(const GrayImage& map, std::uint8_t t);

/// Square structuring element of odd size k; pixels outside the image count as background.
Mask erode(const Mask& m, int k);
Mask dilate(const Mask& m, int k);
/// dilate then erode.
Mask close(const Mask& m, int k);
Mask mask_and(const Mask& a, const Mask& b);

struct Moments {
    double m00 = 0, m10 = 0, m01 = 0, m11 = 0, m20 = 0, m02 = 0;

    double cx() const { return m10 / m00; }
    double cy() const { return m01 / m00; }
    double mu20() const { return m20 / m00 - cx() * cx(); }
    double mu02() const { return m02 / m00 - cy() * cy(); }
    double mu11() const { return m11 / m00 - cx() * cy(); }
};

/// Raw moments in absolute image coordinates; pixel values are the weights.
Moments moments(const GrayImage& img, const Rect& window);
Moments moments(const Mask& m, const Rect& window);

struct Point {
    int x = 0, y = 0;
    friend bool operator==(const Point&, const Point&) = default;
};

struct Contour {
    std::vector<Point> points;  // closed 8-connected cycle, start not repeated
    std::size_t area = 0;       // pixel count of the traced component
    Rect bounds;
};

/// Outer boundaries of the 8-connected components of m, in raster order of
/// each component's first pixel. Components smaller than min_area are skipped.
std::vector<Contour> trace_boundary(const Mask& m, std::size_t min_area = 4);

}  // namespace gp
