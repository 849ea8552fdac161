#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "gp/cascade.hpp"
#include "gp/cpdh.hpp"
#include "gp/imaging.hpp"

namespace gp {

enum class Pose { open_palm, fist, point };

const char* pose_name(Pose p);  // OPEN_PALM, FIST, POINT
std::optional<Pose> parse_pose(std::string_view s);  // case-insensitive
int pose_class_id(Pose p);      // 1, 2, 3

inline constexpr Rgb kSkin{220, 176, 120};

/// Closed outline of a hand pose centred at (cx, cy); size is the outline diameter.
std::vector<Point2> hand_polygon(Pose pose, double cx, double cy, double size, double rotation = 0.0);

/// Even-odd fill sampled at integer pixel centres.
void fill_polygon(Mask& m, std::span<const Point2> poly);
Mask rasterize_polygon(int width, int height, std::span<const Point2> poly);

struct FaceSpec {
    double cx = 0, cy = 0, radius = 0;
};

struct HandSpec {
    Pose pose = Pose::open_palm;
    double cx = 0, cy = 0, size = 0;
};

/// One scripted step. Directives: version, seed, bg, face, hand, pose, move, frames.
struct SceneDirective {
    enum class Kind { seed, bg, face, face_none, hand, hand_none, pose, move_hand, move_face, frames } kind;
    std::uint64_t seed = 0;
    int width = 0, height = 0;
    double noise_sigma = 0, texture_amplitude = 25;
    double x = 0, y = 0, size = 0;
    Pose pose = Pose::open_palm;
    int count = 0;
    std::size_t line = 0;
};

struct SceneScript {
    std::vector<SceneDirective> steps;
};

/// Throws gp::Error naming the line on invalid input.
SceneScript parse_scene_script(std::string_view text);
std::string serialize_scene_script(const SceneScript& s);

struct FrameTruth {
    Mask hand;                  // exact hand raster
    std::optional<Pose> pose;   // none when no hand is visible
    std::optional<Rect> face;   // bounding box of the face disk
    std::optional<Rect> hand_box;
};

struct SynthSequence {
    std::vector<Frame> frames;
    std::vector<FrameTruth> truth;
};

SynthSequence synth_sequence(const SceneScript& script);

/// Static background texture used by the scene generator.
Frame background_texture(int width, int height, std::uint64_t seed, double amplitude = 25);
void draw_face(Frame& f, const FaceSpec& face);
void add_noise(Frame& f, double sigma, std::mt19937_64& rng);

/// Training patches for the toy cascades (gray, base_w x base_h).
struct PatchSet {
    std::vector<GrayImage> positives, negatives;
};
PatchSet hand_patches(int base, std::size_t n_pos, std::size_t n_neg, std::uint64_t seed);
PatchSet face_patches(int base, std::size_t n_pos, std::size_t n_neg, std::uint64_t seed);

/// Renders one hand of pose at (cx, cy) into f.
void draw_hand(Frame& f, const HandSpec& hand);

/// Gallery with one class per pose built from clean rasterised outlines.
Gallery synthetic_gallery(int n_rho = 5, int n_theta = 12);

/// Toy 24x24 cascade for "hand" or "face" trained on synthetic patches (a few seconds).
CascadeModel synthetic_cascade(std::string_view kind, std::uint64_t seed = 7);

}  // namespace gp
