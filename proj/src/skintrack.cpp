#include "gp/skintrack.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace gp {

bool HueHistogram::empty() const {
    return std::all_of(bins.begin(), bins.end(), [](double b) { return b == 0; });
}

HueHistogram sample_skin_region(const Frame& frame, const Rect& region, const SkinGates& gates) {
    if (!region.inside(frame.width(), frame.height())) throw Error("skin sample region outside frame");
    std::array<std::uint64_t, kHueBins> counts{};
    for (int y = region.y; y < region.bottom(); ++y)
        for (int x = region.x; x < region.right(); ++x) {
            const Hsv c = rgb_to_hsv(frame.at(x, y));
            if (gates.pass(c)) ++counts[HueHistogram::bin_of(c.h)];
        }
    const std::uint64_t peak = *std::max_element(counts.begin(), counts.end());
    if (peak == 0) throw DegenerateSkinSample();
    HueHistogram h;
    for (int i = 0; i < kHueBins; ++i) h.bins[i] = static_cast<double>(counts[i]) / static_cast<double>(peak);
    return h;
}

HueHistogram sample_skin_model(const Frame& frame, const Rect& face, const SkinGates& gates) {
    if (!face.inside(frame.width(), frame.height())) throw Error("face rect outside frame");
    const Rect inner(face.x + face.w / 4, face.y + face.h / 4, std::max(1, face.w / 2), std::max(1, face.h / 2));
    return sample_skin_region(frame, inner, gates);
}

GrayImage backproject(const Frame& frame, const HueHistogram& hist, const SkinGates& gates) {
    std::array<std::uint8_t, kHueBins> lut{};
    for (int i = 0; i < kHueBins; ++i)
        lut[i] = static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(hist.bins[i], 0.0, 1.0)));
    GrayImage out(frame.width(), frame.height());
    for (int y = 0; y < frame.height(); ++y)
        for (int x = 0; x < frame.width(); ++x) {
            const Hsv c = rgb_to_hsv(frame.at(x, y));
            if (gates.pass(c)) out.at(x, y) = lut[HueHistogram::bin_of(c.h)];
        }
    return out;
}

namespace {

Rect place(double cx, double cy, int w, int h, int img_w, int img_h) {
    w = std::min(w, img_w);
    h = std::min(h, img_h);
    int x = static_cast<int>(std::lround(cx - (w - 1) / 2.0));
    int y = static_cast<int>(std::lround(cy - (h - 1) / 2.0));
    x = std::clamp(x, 0, img_w - w);
    y = std::clamp(y, 0, img_h - h);
    return Rect(x, y, w, h);
}

}  // namespace

MeanShiftResult mean_shift(const GrayImage& prob, const Rect& win, int max_iter, double eps) {
    if (!win.inside(prob.width(), prob.height())) throw Error("mean_shift: window outside image");
    MeanShiftResult r;
    r.window = win;
    for (int it = 0; it < max_iter; ++it) {
        const Moments m = moments(prob, r.window);
        r.m00 = m.m00;
        if (m.m00 == 0) return r;
        ++r.iterations;
        const Rect next = place(m.cx(), m.cy(), r.window.w, r.window.h, prob.width(), prob.height());
        const double shift = std::hypot(next.center_x() - r.window.center_x(), next.center_y() - r.window.center_y());
        r.window = next;
        if (shift < eps) {
            r.converged = true;
            r.m00 = moments(prob, r.window).m00;
            return r;
        }
    }
    r.m00 = moments(prob, r.window).m00;
    return r;
}

TrackState camshift_step(const GrayImage& prob, const TrackState& state, const CamShiftParams& p) {
    TrackState out = state;
    const MeanShiftResult ms = mean_shift(prob, state.window, p.max_iter, p.eps);
    const Moments m = moments(prob, ms.window);
    out.confidence = std::clamp(m.m00 / (255.0 * static_cast<double>(ms.window.area())), 0.0, 1.0);
    out.lost = out.confidence < p.lost_threshold;
    if (m.m00 == 0) {
        out.window = state.window;
        return out;
    }

    const double s = 2.0 * std::sqrt(m.m00 / 255.0);
    const int w = std::max(p.min_size, static_cast<int>(std::floor(1.1 * s)));
    const int h = std::max(p.min_size, static_cast<int>(std::floor(1.4 * s)));
    out.window = place(m.cx(), m.cy(), w, h, prob.width(), prob.height());

    const double mu20 = m.mu20(), mu02 = m.mu02(), mu11 = m.mu11();
    double theta = 0.5 * std::atan2(2.0 * mu11, mu20 - mu02);
    if (theta <= -std::numbers::pi / 2) theta += std::numbers::pi;
    out.orientation = theta;
    return out;
}

Mask skin_mask(const GrayImage& prob, std::uint8_t t, int close_k) { return close(threshold(prob, t), close_k); }

Mask fuse_masks(const Mask& motion, const Mask& skin, const std::optional<Rect>& face) {
    Mask out = mask_and(motion, skin);
    if (face) {
        Rect f;
        if (clip(*face, out.width(), out.height(), f))
            for (int y = f.y; y < f.bottom(); ++y)
                for (int x = f.x; x < f.right(); ++x) out.set(x, y, false);
    }
    return out;
}

}  // namespace gp
