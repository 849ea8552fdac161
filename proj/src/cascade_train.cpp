#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <random>

#include "cascade_internal.hpp"
#include "gp/cascade.hpp"

namespace gp {

std::vector<HaarFeature> feature_pool(int base_w, int base_h, int stride) {
    if (stride < 1) throw Error("feature pool stride must be >= 1");
    std::vector<HaarFeature> pool;
    auto add = [&](std::initializer_list<WeightedRect> rs) { pool.push_back(HaarFeature{std::vector<WeightedRect>(rs)}); };
    for (int y = 0; y < base_h; y += stride) {
        for (int x = 0; x < base_w; x += stride) {
            for (int ch = stride; y + ch <= base_h; ch += stride) {
                for (int cw = stride; x + 2 * cw <= base_w; cw += stride)
                    add({{Rect(x, y, cw, ch), 1.0}, {Rect(x + cw, y, cw, ch), -1.0}});
                for (int cw = stride; x + 3 * cw <= base_w; cw += stride)
                    add({{Rect(x, y, cw, ch), 1.0}, {Rect(x + cw, y, cw, ch), -2.0}, {Rect(x + 2 * cw, y, cw, ch), 1.0}});
            }
            for (int ch = stride; y + 2 * ch <= base_h; ch += stride)
                for (int cw = stride; x + cw <= base_w; cw += stride)
                    add({{Rect(x, y, cw, ch), 1.0}, {Rect(x, y + ch, cw, ch), -1.0}});
        }
    }
    return pool;
}

namespace {

struct Sample {
    IntegralImage ii;
    double norm = 0;
    bool positive = false;
};

struct BestStump {
    std::size_t feature = 0;
    double threshold = 0;
    bool left_positive = true;
    double error = 1.0;
};

// Largest canonical value not above v.
double canonical_floor(double v) {
    double q = canonical_real(v);
    double step = 1e-8 * std::max(1.0, std::abs(v));
    while (q > v) {
        q = canonical_real(v - step);
        step *= 2;
    }
    return q;
}

}  // namespace

CascadeModel train_toy_cascade(std::span<const GrayImage> positives, std::span<const GrayImage> negatives,
                               int stages, double per_stage_fpr, const ToyTrainOptions& opts) {
    if (positives.size() < 10 || negatives.size() < 10)
        throw Error("toy cascade training needs at least 10 positives and 10 negatives");
    if (stages < 1) throw Error("stage count must be >= 1");
    if (!(per_stage_fpr > 0 && per_stage_fpr < 1)) throw Error("per-stage false-positive rate must lie in (0, 1)");
    const int bw = positives[0].width(), bh = positives[0].height();
    if (bw < 8 || bh < 8) throw Error("base window must be at least 8x8");
    for (auto set : {positives, negatives})
        for (const auto& p : set)
            if (p.width() != bw || p.height() != bh) throw Error("training patches must all match the base window size");

    std::vector<HaarFeature> pool = feature_pool(bw, bh, opts.grid_stride);
    if (opts.max_features > 0 && pool.size() > opts.max_features) {
        std::mt19937_64 rng(opts.seed);
        for (std::size_t i = 0; i < opts.max_features; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
            std::swap(pool[i], pool[pick(rng)]);
        }
        pool.resize(opts.max_features);
    }

    CascadeModel model;
    model.base_w = bw;
    model.base_h = bh;
    model.label = opts.label;

    const detail::ScaledCascade unit(CascadeModel{bw, bh, {}, {}}, bw, bh);
    std::vector<Sample> pos;
    std::deque<Sample> neg_all;  // grows when mining; pointers into it stay valid
    for (const auto& p : positives) {
        Sample s{IntegralImage(p), 0, true};
        s.norm = unit.norm(s.ii, 0, 0);
        pos.push_back(std::move(s));
    }
    for (const auto& p : negatives) {
        Sample s{IntegralImage(p), 0, false};
        s.norm = unit.norm(s.ii, 0, 0);
        neg_all.push_back(std::move(s));
    }

    std::vector<detail::ScaledStump> pool_scaled;
    pool_scaled.reserve(pool.size());
    for (const auto& f : pool) pool_scaled.push_back(detail::scale_stump(Stump{f, 0, 0, 0}, bw, bh, bw, bh));

    for (int stage_idx = 0; stage_idx < stages; ++stage_idx) {
        // Negatives that still pass the cascade built so far.
        std::vector<const Sample*> neg;
        {
            const detail::ScaledCascade sc(model, bw, bh);
            for (const auto& s : neg_all)
                if (sc.eval(s.ii, 0, 0).pass) neg.push_back(&s);
            if (opts.mine_negatives && stage_idx > 0 && neg.size() < negatives.size()) {
                for (const auto& p : opts.mine_negatives(model, negatives.size() - neg.size())) {
                    if (p.width() != bw || p.height() != bh) throw Error("mined negative does not match the base window");
                    Sample s{IntegralImage(p), 0, false};
                    s.norm = unit.norm(s.ii, 0, 0);
                    if (!sc.eval(s.ii, 0, 0).pass) continue;
                    neg_all.push_back(std::move(s));
                    neg.push_back(&neg_all.back());
                }
            }
        }
        // Too few survivors to estimate a false-positive rate from.
        if (neg.size() < 10) break;

        std::vector<const Sample*> samples;
        for (const auto& s : pos) samples.push_back(&s);
        samples.insert(samples.end(), neg.begin(), neg.end());
        const std::size_t n = samples.size(), np = pos.size(), nn = neg.size();

        // Feature responses and per-feature sort order, fixed for the stage.
        std::vector<float> values(pool.size() * n);
        std::vector<std::uint32_t> order(pool.size() * n);
        for (std::size_t f = 0; f < pool.size(); ++f) {
            float* row = &values[f * n];
            for (std::size_t i = 0; i < n; ++i)
                row[i] = static_cast<float>(
                    detail::ScaledCascade::stump_value(pool_scaled[f], samples[i]->ii, 0, 0, samples[i]->norm));
            std::uint32_t* ord = &order[f * n];
            std::iota(ord, ord + n, 0u);
            std::stable_sort(ord, ord + n, [row](std::uint32_t a, std::uint32_t b) { return row[a] < row[b]; });
        }

        std::vector<double> weight(n);
        for (std::size_t i = 0; i < n; ++i) weight[i] = i < np ? 0.5 / np : 0.5 / nn;

        Stage stage;
        std::vector<double> score(n, 0.0);
        bool done = false;
        while (!done) {
            if (static_cast<int>(stage.stumps.size()) >= opts.max_stumps)
                throw TrainingStarvation("stage " + std::to_string(stage_idx) + " cannot reach its targets within " +
                                         std::to_string(opts.max_stumps) + " stumps");

            double total_pos = 0, total_neg = 0;
            for (std::size_t i = 0; i < n; ++i) (i < np ? total_pos : total_neg) += weight[i];

            BestStump best;
            for (std::size_t f = 0; f < pool.size(); ++f) {
                const float* row = &values[f * n];
                const std::uint32_t* ord = &order[f * n];
                double below_pos = 0, below_neg = 0;
                for (std::size_t k = 0; k <= n; ++k) {
                    // Split between ord[k-1] and ord[k]; only where values differ.
                    if (k > 0 && k < n && row[ord[k - 1]] == row[ord[k]]) {
                        const std::uint32_t i = ord[k];
                        (i < np ? below_pos : below_neg) += weight[i];
                        continue;
                    }
                    const double err_lp = below_neg + (total_pos - below_pos);
                    const double err_ln = below_pos + (total_neg - below_neg);
                    const double err = std::min(err_lp, err_ln);
                    if (err < best.error - 1e-15) {
                        best.error = err;
                        best.feature = f;
                        best.left_positive = err_lp <= err_ln;
                        if (k == 0)
                            best.threshold = static_cast<double>(row[ord[0]]) - 1.0;
                        else if (k == n)
                            best.threshold = static_cast<double>(row[ord[n - 1]]) + 1.0;
                        else
                            best.threshold = 0.5 * (static_cast<double>(row[ord[k - 1]]) + row[ord[k]]);
                    }
                    if (k < n) {
                        const std::uint32_t i = ord[k];
                        (i < np ? below_pos : below_neg) += weight[i];
                    }
                }
            }

            const double total = total_pos + total_neg;
            const double eps = best.error / total;
            if (eps >= 0.5 - 1e-9)
                throw TrainingStarvation("stage " + std::to_string(stage_idx) + ": no feature separates the classes");

            const double e = std::clamp(eps, 1e-10, 1.0);
            const double alpha = canonical_real(0.5 * std::log((1.0 - e) / e));
            Stump st;
            st.feature = pool[best.feature];
            st.threshold = canonical_real(best.threshold);
            st.left_val = best.left_positive ? alpha : -alpha;
            st.right_val = -st.left_val;

            const auto scaled = detail::scale_stump(st, bw, bh, bw, bh);
            double wsum = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const double v = detail::ScaledCascade::stump_value(scaled, samples[i]->ii, 0, 0, samples[i]->norm);
                const double vote = v < st.threshold ? st.left_val : st.right_val;
                score[i] += vote;
                const double y = i < np ? 1.0 : -1.0;
                const double h = vote > 0 ? 1.0 : -1.0;
                weight[i] *= std::exp(-alpha * y * h);
                wsum += weight[i];
            }
            for (auto& w : weight) w /= wsum;
            stage.stumps.push_back(std::move(st));

            // Stage threshold keeps min_detection of the positives.
            std::vector<double> ps(score.begin(), score.begin() + static_cast<std::ptrdiff_t>(np));
            std::sort(ps.begin(), ps.end());
            const auto allowed = static_cast<std::size_t>(std::floor((1.0 - opts.min_detection) * np + 1e-9));
            stage.threshold = canonical_floor(ps[std::min(allowed, np - 1)]);
            std::size_t fp = 0;
            for (std::size_t i = np; i < n; ++i)
                if (score[i] >= stage.threshold) ++fp;
            done = static_cast<double>(fp) / static_cast<double>(nn) <= per_stage_fpr;
        }
        model.stages.push_back(std::move(stage));
    }
    if (model.stages.empty()) throw TrainingStarvation("no stage could be trained");
    return model;
}

}  // namespace gp
