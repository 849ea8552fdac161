#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gp/cascade.hpp"
#include "gp/codebook.hpp"
#include "gp/cpdh.hpp"
#include "gp/imaging.hpp"
#include "gp/skintrack.hpp"

namespace gp {

struct PipelineConfig {
    CodebookParams codebook;
    std::filesystem::path hand_cascade, face_cascade, gallery;  // used by the CLI loaders

    SkinGates gates;
    int skin_threshold = 60;
    int morph_k = 3;
    CamShiftParams camshift;
    DetectParams hand_detect;
    DetectParams face_detect;

    int n_rho = 5;
    int n_theta = 12;
    double tau = 0.25;
    bool allow_mirror = false;

    int debounce_frames = 3;
    int cooldown_frames = 15;
    double fps_assumed = 15;
    int face_every = 10;
    double roi_scale = 1.5;
    std::uint32_t learner_id = 1;

    /// Throws gp::Error naming the offending field.
    void validate() const;
};

struct PipelineModels {
    CodebookModel background;
    CascadeModel hand;
    std::optional<CascadeModel> face;
    Gallery gallery;
};

struct GestureEvent {
    std::uint32_t learner_id = 0;
    std::uint32_t frame = 0;
    std::uint64_t timestamp_ms = 0;
    int class_id = 0;
    std::string class_name;
    double confidence = 0;

    friend bool operator==(const GestureEvent&, const GestureEvent&) = default;
};

enum class Mode { detecting, tracking };

struct PipelineState {
    Mode mode = Mode::detecting;
    std::optional<TrackState> track;
    std::optional<HueHistogram> skin;
    std::optional<Rect> face;
    int pending_class = kUnknownClass;
    int pending_count = 0;
    int cooldown = 0;
    std::uint64_t frame_index = 0;  // index of the next frame

    friend bool operator==(const PipelineState&, const PipelineState&) = default;
};

/// Intermediate products of one frame, for debugging and tests.
struct StageDebug {
    Mask motion;
    GrayImage prob;
    Mask skin;
    Mask fused;
    std::optional<Rect> hand_hit;
    std::optional<Classification> classification;
    std::string absorbed;  // message of a swallowed stage error, if any
};

struct FrameResult {
    PipelineState state;
    std::optional<GestureEvent> event;
    StageDebug debug;
};

/// One step of the detect/track/classify/debounce machine. Stage errors on
/// frame content are absorbed; a frame whose size differs from the background
/// model is a caller error and throws.
FrameResult process_frame(const PipelineState& state, const Frame& frame, const PipelineModels& models,
                          const PipelineConfig& cfg);

class FrameSource {
public:
    virtual ~FrameSource() = default;
    /// Next frame, or nullopt at the end. Throws gp::Error naming the frame on read failure.
    virtual std::optional<Frame> next() = 0;
};

/// frame_000001.ppm, frame_000002.ppm, ... in numeric order.
class DirectoryFrameSource : public FrameSource {
public:
    explicit DirectoryFrameSource(const std::filesystem::path& dir);
    std::optional<Frame> next() override;
    std::size_t size() const { return files_.size(); }

private:
    std::vector<std::filesystem::path> files_;
    std::size_t pos_ = 0;
};

class VectorFrameSource : public FrameSource {
public:
    explicit VectorFrameSource(std::vector<Frame> frames) : frames_(std::move(frames)) {}
    std::optional<Frame> next() override;

private:
    std::vector<Frame> frames_;
    std::size_t pos_ = 0;
};

struct SessionSummary {
    std::uint64_t frames = 0;
    std::uint64_t events = 0;
    double mean_latency_ms = 0;
    double fps() const { return mean_latency_ms > 0 ? 1000.0 / mean_latency_ms : 0.0; }
};

using EventSink = std::function<void(const GestureEvent&)>;

/// Runs frames in order through process_frame. When dump_dir is set, each
/// frame's motion, probability, skin and fused maps are written there as PGM.
SessionSummary run_session(const PipelineConfig& cfg, const PipelineModels& models, FrameSource& frames,
                           const EventSink& sink, const std::optional<std::filesystem::path>& dump_dir = std::nullopt);

std::string frame_file_name(std::uint64_t one_based_index);

}  // namespace gp
