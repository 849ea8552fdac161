#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "gp/cascade.hpp"

namespace gp::detail {

struct ScaledRect {
    int x = 0, y = 0, w = 1, h = 1;
    double weight = 0;
};

struct ScaledStump {
    std::array<ScaledRect, 3> rects{};
    int n = 0;
    double threshold = 0, left = 0, right = 0;
};

struct ScaledStage {
    std::vector<ScaledStump> stumps;
    double threshold = 0;
};

ScaledStump scale_stump(const Stump& s, int base_w, int base_h, int win_w, int win_h);

/// A cascade with rectangles resolved for one window size.
class ScaledCascade {
public:
    ScaledCascade(const CascadeModel& model, int win_w, int win_h);

    int win_w() const { return win_w_; }
    int win_h() const { return win_h_; }
    std::size_t stage_count() const { return stages_.size(); }

    /// 1 / (area * sigma), sigma floored at 1.
    double norm(const IntegralImage& ii, int x, int y) const {
        const double s = static_cast<double>(ii.sum_unchecked(x, y, win_w_, win_h_));
        const double sq = static_cast<double>(ii.sq_sum_unchecked(x, y, win_w_, win_h_));
        const double mean = s * inv_area_;
        const double var = sq * inv_area_ - mean * mean;
        double sigma = var > 0 ? std::sqrt(var) : 0.0;
        if (sigma < 1.0) sigma = 1.0;
        return inv_area_ / sigma;
    }

    static double stump_value(const ScaledStump& st, const IntegralImage& ii, int x, int y, double norm) {
        double acc = 0;
        for (int i = 0; i < st.n; ++i) {
            const ScaledRect& r = st.rects[i];
            acc += r.weight * static_cast<double>(ii.sum_unchecked(x + r.x, y + r.y, r.w, r.h));
        }
        return acc * norm;
    }

    double stage_sum(std::size_t stage, const IntegralImage& ii, int x, int y, double norm) const {
        double sum = 0;
        for (const auto& st : stages_[stage].stumps)
            sum += stump_value(st, ii, x, y, norm) < st.threshold ? st.left : st.right;
        return sum;
    }

    WindowResult eval(const IntegralImage& ii, int x, int y) const {
        const double nrm = norm(ii, x, y);
        for (std::size_t s = 0; s < stages_.size(); ++s)
            if (stage_sum(s, ii, x, y, nrm) < stages_[s].threshold) return {false, s};
        return {true, stages_.size()};
    }

private:
    int win_w_, win_h_;
    double inv_area_;
    std::vector<ScaledStage> stages_;
};

}  // namespace gp::detail
