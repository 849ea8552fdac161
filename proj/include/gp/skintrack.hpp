#pragma once

#include <array>
#include <optional>

#include "gp/imaging.hpp"

namespace gp {

inline constexpr int kHueBins = 16;

/// Hue histogram over [0, 179], max-normalised so the largest bin is 1.
struct HueHistogram {
    std::array<double, kHueBins> bins{};

    static int bin_of(std::uint8_t hue) { return hue * kHueBins / 180; }
    bool empty() const;
    friend bool operator==(const HueHistogram&, const HueHistogram&) = default;
};

struct SkinGates {
    int s_min = 40;
    int v_min = 40;
    int v_max = 250;

    bool pass(const Hsv& c) const { return c.s >= s_min && c.v >= v_min && c.v <= v_max; }
};

class DegenerateSkinSample : public Error {
public:
    DegenerateSkinSample() : Error("degenerate skin sample") {}
};

/// Samples the central 50% x 50% of the face rect.
HueHistogram sample_skin_model(const Frame& frame, const Rect& face, const SkinGates& gates = {});
/// Same, but over the whole of region (used when no face is available).
HueHistogram sample_skin_region(const Frame& frame, const Rect& region, const SkinGates& gates = {});

/// round(255 * hist[bin(hue)]) for pixels passing the gates, else 0.
GrayImage backproject(const Frame& frame, const HueHistogram& hist, const SkinGates& gates = {});

struct MeanShiftResult {
    Rect window;
    int iterations = 0;
    bool converged = false;
    double m00 = 0;  // mass inside the final window
};

MeanShiftResult mean_shift(const GrayImage& prob, const Rect& win, int max_iter = 20, double eps = 1.0);

struct TrackState {
    Rect window;
    double orientation = 0;  // radians, (-pi/2, pi/2]
    double confidence = 0;   // M00 / (255 * area), [0, 1]
    bool lost = false;
    friend bool operator==(const TrackState&, const TrackState&) = default;
};

struct CamShiftParams {
    int max_iter = 20;
    double eps = 1.0;
    double lost_threshold = 0.05;
    int min_size = 8;
};

TrackState camshift_step(const GrayImage& prob, const TrackState& state, const CamShiftParams& p = {});

/// threshold(prob, t) followed by a closing with a k x k square.
Mask skin_mask(const GrayImage& prob, std::uint8_t t = 60, int close_k = 3);

/// Pixelwise AND; pixels inside face (when given) are cleared.
Mask fuse_masks(const Mask& motion, const Mask& skin, const std::optional<Rect>& face = std::nullopt);

}  // namespace gp
