#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gp/imaging.hpp"

namespace gp {

struct WeightedRect {
    Rect rect;  // relative to the base window
    double weight = 0;
    friend bool operator==(const WeightedRect&, const WeightedRect&) = default;
};

/// Haar-like feature: 2 or 3 weighted rectangles with sum(weight * area) == 0.
struct HaarFeature {
    std::vector<WeightedRect> rects;
    double weighted_area() const;
    friend bool operator==(const HaarFeature&, const HaarFeature&) = default;
};

struct Stump {
    HaarFeature feature;
    double threshold = 0;
    double left_val = 0;   // vote when value < threshold
    double right_val = 0;  // vote otherwise
    friend bool operator==(const Stump&, const Stump&) = default;
};

struct Stage {
    std::vector<Stump> stumps;
    double threshold = 0;
    friend bool operator==(const Stage&, const Stage&) = default;
};

struct CascadeModel {
    int base_w = 0, base_h = 0;
    std::vector<Stage> stages;
    std::string label;
    friend bool operator==(const CascadeModel&, const CascadeModel&) = default;
};

enum class CascadeErrorKind {
    syntax,             // malformed number or wrong arity
    unknown_directive,
    rect_out_of_window,
    non_zero_mean,
    empty_stage,
    structure,          // misplaced directive, wrong rect count, missing header
};

const char* to_string(CascadeErrorKind kind);

class CascadeParseError : public Error {
public:
    CascadeParseError(CascadeErrorKind kind, std::size_t line, const std::string& what);
    CascadeErrorKind kind() const { return kind_; }
    std::size_t line() const { return line_; }

private:
    CascadeErrorKind kind_;
    std::size_t line_;
};

/// Line-oriented text format:
///   cascade <base_w> <base_h> [label]
///   stage <threshold>
///   stump <threshold> <left> <right>
///   rect <x> <y> <w> <h> <weight>      (2-3 per stump)
/// '#' starts a comment.
CascadeModel parse_cascade(std::string_view text);
/// Canonical text: fixed field order, reals with 9 significant digits.
std::string serialize_cascade(const CascadeModel& model);
/// 64-bit FNV-1a over the canonical text.
std::uint64_t cascade_digest(const CascadeModel& model);

CascadeModel load_cascade(const std::filesystem::path& path);
void save_cascade(const std::filesystem::path& path, const CascadeModel& model);

/// Round to the 9 significant digits the text format carries.
double canonical_real(double v);

struct WindowResult {
    bool pass = false;
    std::size_t last_stage = 0;  // first failing stage, or stage count when all pass
};

/// Throws gp::Error when win leaves the image or its aspect differs from the base window.
WindowResult eval_window(const CascadeModel& model, const IntegralImage& ii, const Rect& win);

/// Variance-normalised value of one feature over a window; used by the trainer too.
double feature_value(const HaarFeature& feature, const CascadeModel& model, const IntegralImage& ii,
                     const Rect& win);

struct DetectParams {
    double scale0 = 1.0;
    double scale_step = 1.25;
    int min_neighbors = 3;
    double group_eps = 0.2;
    double max_scale = 0;  // 0 = unbounded
    // Drop clusters whose centre falls inside a better supported cluster (or vice versa).
    bool suppress_overlaps = true;
};

struct Detection {
    Rect rect;
    int count = 0;  // raw windows in the cluster
};

/// Every accepted window before grouping.
std::vector<Rect> detect_raw(const CascadeModel& model, const GrayImage& gray, const DetectParams& p = {});
std::vector<Detection> detect_scored(const CascadeModel& model, const GrayImage& gray, const DetectParams& p = {});
std::vector<Rect> detect(const CascadeModel& model, const GrayImage& gray, const DetectParams& p = {});

/// Clusters similar rectangles; clusters smaller than min_neighbors + 1 are dropped.
/// Output is sorted by cluster size (descending), then by top-left (y, x).
std::vector<Detection> group_rectangles_scored(std::span<const Rect> rects, int min_neighbors, double eps = 0.2);
std::vector<Rect> group_rectangles(std::span<const Rect> rects, int min_neighbors, double eps = 0.2);

class TrainingStarvation : public Error {
public:
    using Error::Error;
};

struct ToyTrainOptions {
    std::uint64_t seed = 1;
    int max_stumps = 50;          // per stage
    double min_detection = 0.99;  // per stage, on positives
    std::size_t max_features = 0;  // 0 = full pool, else a seeded random subset
    int grid_stride = 2;
    std::string label;
    // Bootstrapping: called before each stage after the first to top the
    // negative set back up with patches the cascade so far still accepts.
    std::function<std::vector<GrayImage>(const CascadeModel&, std::size_t want)> mine_negatives;
};

/// Discrete AdaBoost over a pool of 2-rect and 3-rect features.
/// Patches must all be base-window sized; at least 10 of each class.
CascadeModel train_toy_cascade(std::span<const GrayImage> positives, std::span<const GrayImage> negatives,
                               int stages, double per_stage_fpr, const ToyTrainOptions& opts = {});

/// The trainer's feature pool for a base window.
std::vector<HaarFeature> feature_pool(int base_w, int base_h, int stride);

}  // namespace gp
