#include "gp/synth.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numbers>
#include <sstream>

namespace gp {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kOutlineVertices = 180;
constexpr Rgb kFeatureDark{25, 25, 25};

std::uint8_t clamp8(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

double radial(Pose pose, double phi) {
    // phi is measured from the pose's "up" direction.
    switch (pose) {
        case Pose::open_palm: {
            const double c = std::max(0.0, std::cos(5.0 * phi));
            return 0.5 + 0.5 * c * c;
        }
        case Pose::fist:
            return 0.8;
        case Pose::point: {
            const double c = std::max(0.0, std::cos(phi));
            return 0.5 + 0.5 * std::pow(c, 16);
        }
    }
    return 0.0;
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return out;
}

}  // namespace

const char* pose_name(Pose p) {
    switch (p) {
        case Pose::open_palm: return "OPEN_PALM";
        case Pose::fist: return "FIST";
        case Pose::point: return "POINT";
    }
    return "?";
}

std::optional<Pose> parse_pose(std::string_view s) {
    const std::string l = lower(s);
    if (l == "open_palm") return Pose::open_palm;
    if (l == "fist") return Pose::fist;
    if (l == "point") return Pose::point;
    return std::nullopt;
}

int pose_class_id(Pose p) { return static_cast<int>(p) + 1; }

std::vector<Point2> hand_polygon(Pose pose, double cx, double cy, double size, double rotation) {
    const double r = size / 2.0;
    std::vector<Point2> poly;
    poly.reserve(kOutlineVertices);
    for (int i = 0; i < kOutlineVertices; ++i) {
        const double phi = 2.0 * kPi * i / kOutlineVertices;
        const double rho = r * radial(pose, phi);
        // Up is -y in image coordinates.
        const double a = phi - kPi / 2 + rotation;
        poly.push_back({cx + rho * std::cos(a), cy + rho * std::sin(a)});
    }
    return poly;
}

void fill_polygon(Mask& m, std::span<const Point2> poly) {
    if (poly.size() < 3) return;
    double ymin = poly[0].y, ymax = poly[0].y;
    for (const auto& p : poly) {
        ymin = std::min(ymin, p.y);
        ymax = std::max(ymax, p.y);
    }
    const int y0 = std::max(0, static_cast<int>(std::floor(ymin)));
    const int y1 = std::min(m.height() - 1, static_cast<int>(std::ceil(ymax)));
    std::vector<double> xs;
    for (int y = y0; y <= y1; ++y) {
        const double py = y;
        xs.clear();
        for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
            const Point2& a = poly[i];
            const Point2& b = poly[j];
            if ((a.y > py) != (b.y > py)) xs.push_back((b.x - a.x) * (py - a.y) / (b.y - a.y) + a.x);
        }
        std::sort(xs.begin(), xs.end());
        for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
            const int xa = std::max(0, static_cast<int>(std::ceil(xs[k])));
            // Pixel x is inside when xs[k] <= x < xs[k+1].
            int xb = static_cast<int>(std::ceil(xs[k + 1])) - 1;
            xb = std::min(xb, m.width() - 1);
            for (int x = xa; x <= xb; ++x) m.set(x, y);
        }
    }
}

Mask rasterize_polygon(int width, int height, std::span<const Point2> poly) {
    Mask m(width, height);
    fill_polygon(m, poly);
    return m;
}

Frame background_texture(int width, int height, std::uint64_t seed, double amplitude) {
    // Weak low-frequency shading under fine static grain.
    constexpr int cell = 32;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const int gw = width / cell + 2, gh = height / cell + 2;
    std::vector<double> grid(static_cast<std::size_t>(gw) * gh);
    for (auto& g : grid) g = u(rng);
    std::uniform_real_distribution<double> grain(-amplitude * 0.6, amplitude * 0.6);

    Frame f(width, height);
    for (int y = 0; y < height; ++y) {
        const int gy = y / cell;
        const double fy = static_cast<double>(y % cell) / cell;
        for (int x = 0; x < width; ++x) {
            const int gx = x / cell;
            const double fx = static_cast<double>(x % cell) / cell;
            auto g = [&](int i, int j) { return grid[static_cast<std::size_t>(j) * gw + i]; };
            const double t = (1 - fy) * ((1 - fx) * g(gx, gy) + fx * g(gx + 1, gy)) +
                             fy * ((1 - fx) * g(gx, gy + 1) + fx * g(gx + 1, gy + 1));
            const double d = t * amplitude * 0.2 + grain(rng);
            f.set(x, y, {clamp8(70 + 0.8 * d), clamp8(95 + 0.9 * d), clamp8(125 + d)});
        }
    }
    return f;
}

namespace {

void fill_disk(Frame& f, double cx, double cy, double r, Rgb c) {
    const int y0 = std::max(0, static_cast<int>(std::floor(cy - r)));
    const int y1 = std::min(f.height() - 1, static_cast<int>(std::ceil(cy + r)));
    const int x0 = std::max(0, static_cast<int>(std::floor(cx - r)));
    const int x1 = std::min(f.width() - 1, static_cast<int>(std::ceil(cx + r)));
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x)
            if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) f.set(x, y, c);
}

std::optional<Rect> disk_bounds(int width, int height, double cx, double cy, double r) {
    int x0 = width, y0 = height, x1 = -1, y1 = -1;
    const int ya = std::max(0, static_cast<int>(std::floor(cy - r)));
    const int yb = std::min(height - 1, static_cast<int>(std::ceil(cy + r)));
    const int xa = std::max(0, static_cast<int>(std::floor(cx - r)));
    const int xb = std::min(width - 1, static_cast<int>(std::ceil(cx + r)));
    for (int y = ya; y <= yb; ++y)
        for (int x = xa; x <= xb; ++x)
            if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) {
                x0 = std::min(x0, x);
                x1 = std::max(x1, x);
                y0 = std::min(y0, y);
                y1 = std::max(y1, y);
            }
    if (x1 < 0) return std::nullopt;
    return Rect(x0, y0, x1 - x0 + 1, y1 - y0 + 1);
}

std::optional<Rect> mask_bounds(const Mask& m) {
    int x0 = m.width(), y0 = m.height(), x1 = -1, y1 = -1;
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x)
            if (m.test(x, y)) {
                x0 = std::min(x0, x);
                x1 = std::max(x1, x);
                y0 = std::min(y0, y);
                y1 = std::max(y1, y);
            }
    if (x1 < 0) return std::nullopt;
    return Rect(x0, y0, x1 - x0 + 1, y1 - y0 + 1);
}

void paint_mask(Frame& f, const Mask& m, Rgb c) {
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x)
            if (m.test(x, y)) f.set(x, y, c);
}

}  // namespace

void draw_face(Frame& f, const FaceSpec& face) {
    const double r = face.radius;
    fill_disk(f, face.cx, face.cy, r, kSkin);
    fill_disk(f, face.cx - 0.38 * r, face.cy - 0.25 * r, 0.16 * r, kFeatureDark);
    fill_disk(f, face.cx + 0.38 * r, face.cy - 0.25 * r, 0.16 * r, kFeatureDark);
    const int my0 = static_cast<int>(std::lround(face.cy + 0.35 * r));
    const int my1 = static_cast<int>(std::lround(face.cy + 0.5 * r));
    const int mx0 = static_cast<int>(std::lround(face.cx - 0.4 * r));
    const int mx1 = static_cast<int>(std::lround(face.cx + 0.4 * r));
    for (int y = std::max(0, my0); y <= std::min(f.height() - 1, my1); ++y)
        for (int x = std::max(0, mx0); x <= std::min(f.width() - 1, mx1); ++x) f.set(x, y, kFeatureDark);
}

void draw_hand(Frame& f, const HandSpec& hand) {
    const auto poly = hand_polygon(hand.pose, hand.cx, hand.cy, hand.size);
    paint_mask(f, rasterize_polygon(f.width(), f.height(), poly), kSkin);
}

void add_noise(Frame& f, double sigma, std::mt19937_64& rng) {
    if (sigma <= 0) return;
    std::normal_distribution<double> n(0.0, sigma);
    for (auto& v : f.bytes()) v = clamp8(v + n(rng));
}

// ---- scene script ----

namespace {

[[noreturn]] void script_error(std::size_t line, const std::string& what) {
    throw Error("scene script line " + std::to_string(line) + ": " + what);
}

double to_real(const std::string& tok, std::size_t line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(tok, &used);
        if (used != tok.size() || !std::isfinite(v)) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        script_error(line, "not a number: '" + tok + "'");
    }
}

long long to_int(const std::string& tok, std::size_t line) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        script_error(line, "not an integer: '" + tok + "'");
    }
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

SceneScript parse_scene_script(std::string_view text) {
    SceneScript out;
    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t line = 0;
    bool seen_directive = false;
    while (std::getline(in, raw)) {
        ++line;
        if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        std::istringstream ls(raw);
        std::vector<std::string> tok;
        for (std::string t; ls >> t;) tok.push_back(t);
        if (tok.empty()) continue;

        const std::string& cmd = tok[0];
        auto arity = [&](std::size_t lo, std::size_t hi) {
            if (tok.size() - 1 < lo || tok.size() - 1 > hi)
                script_error(line, "'" + cmd + "' takes " + std::to_string(lo) +
                                       (lo == hi ? "" : "-" + std::to_string(hi)) + " arguments");
        };
        auto positive_count = [&](const std::string& t) {
            const long long n = to_int(t, line);
            if (n < 1 || n > 1000000) script_error(line, "frame count must lie in [1, 1000000]");
            return static_cast<int>(n);
        };

        if (cmd == "version") {
            arity(1, 1);
            if (seen_directive) script_error(line, "'version' must come first");
            if (tok[1] != "1") script_error(line, "unsupported script version " + tok[1]);
            seen_directive = true;
            continue;
        }
        seen_directive = true;
        SceneDirective d{};
        d.line = line;
        if (cmd == "seed") {
            arity(1, 1);
            const long long s = to_int(tok[1], line);
            if (s < 0) script_error(line, "seed must be non-negative");
            d.kind = SceneDirective::Kind::seed;
            d.seed = static_cast<std::uint64_t>(s);
        } else if (cmd == "bg") {
            arity(3, 4);
            d.kind = SceneDirective::Kind::bg;
            const long long w = to_int(tok[1], line), h = to_int(tok[2], line);
            if (w < 8 || h < 8 || w > kMaxImageDim || h > kMaxImageDim)
                script_error(line, "background size must lie in [8, " + std::to_string(kMaxImageDim) + "]");
            d.width = static_cast<int>(w);
            d.height = static_cast<int>(h);
            d.noise_sigma = to_real(tok[3], line);
            if (d.noise_sigma < 0 || d.noise_sigma > 100) script_error(line, "noise sigma must lie in [0, 100]");
            if (tok.size() == 5) {
                d.texture_amplitude = to_real(tok[4], line);
                if (d.texture_amplitude < 0 || d.texture_amplitude > 100)
                    script_error(line, "texture amplitude must lie in [0, 100]");
            }
        } else if (cmd == "face") {
            if (tok.size() == 2 && tok[1] == "none") {
                d.kind = SceneDirective::Kind::face_none;
            } else {
                arity(3, 3);
                d.kind = SceneDirective::Kind::face;
                d.x = to_real(tok[1], line);
                d.y = to_real(tok[2], line);
                d.size = to_real(tok[3], line);
                if (d.size <= 0) script_error(line, "face radius must be positive");
            }
        } else if (cmd == "hand") {
            if (tok.size() == 2 && tok[1] == "none") {
                d.kind = SceneDirective::Kind::hand_none;
            } else {
                arity(4, 4);
                d.kind = SceneDirective::Kind::hand;
                const auto p = parse_pose(tok[1]);
                if (!p) script_error(line, "unknown pose '" + tok[1] + "'");
                d.pose = *p;
                d.x = to_real(tok[2], line);
                d.y = to_real(tok[3], line);
                d.size = to_real(tok[4], line);
                if (d.size <= 0) script_error(line, "hand size must be positive");
            }
        } else if (cmd == "pose") {
            arity(1, 1);
            const auto p = parse_pose(tok[1]);
            if (!p) script_error(line, "unknown pose '" + tok[1] + "'");
            d.kind = SceneDirective::Kind::pose;
            d.pose = *p;
        } else if (cmd == "move") {
            arity(4, 4);
            if (tok[1] == "hand")
                d.kind = SceneDirective::Kind::move_hand;
            else if (tok[1] == "face")
                d.kind = SceneDirective::Kind::move_face;
            else
                script_error(line, "can only move 'hand' or 'face'");
            d.x = to_real(tok[2], line);
            d.y = to_real(tok[3], line);
            d.count = positive_count(tok[4]);
        } else if (cmd == "frames") {
            arity(1, 1);
            d.kind = SceneDirective::Kind::frames;
            d.count = positive_count(tok[1]);
        } else {
            script_error(line, "unknown directive '" + cmd + "'");
        }
        out.steps.push_back(d);
    }
    return out;
}

std::string serialize_scene_script(const SceneScript& s) {
    std::string out = "version 1\n";
    using K = SceneDirective::Kind;
    for (const auto& d : s.steps) {
        switch (d.kind) {
            case K::seed: out += "seed " + std::to_string(d.seed); break;
            case K::bg:
                out += "bg " + std::to_string(d.width) + " " + std::to_string(d.height) + " " + fmt(d.noise_sigma) +
                       " " + fmt(d.texture_amplitude);
                break;
            case K::face: out += "face " + fmt(d.x) + " " + fmt(d.y) + " " + fmt(d.size); break;
            case K::face_none: out += "face none"; break;
            case K::hand:
                out += std::string("hand ") + pose_name(d.pose) + " " + fmt(d.x) + " " + fmt(d.y) + " " + fmt(d.size);
                break;
            case K::hand_none: out += "hand none"; break;
            case K::pose: out += std::string("pose ") + pose_name(d.pose); break;
            case K::move_hand:
            case K::move_face:
                out += std::string("move ") + (d.kind == K::move_hand ? "hand " : "face ") + fmt(d.x) + " " + fmt(d.y) +
                       " " + std::to_string(d.count);
                break;
            case K::frames: out += "frames " + std::to_string(d.count); break;
        }
        out += '\n';
    }
    return out;
}

SynthSequence synth_sequence(const SceneScript& script) {
    using K = SceneDirective::Kind;
    SynthSequence out;
    std::uint64_t seed = 1;
    std::optional<Frame> texture;
    double sigma = 0;
    std::optional<FaceSpec> face;
    std::optional<HandSpec> hand;
    std::mt19937_64 noise_rng;

    auto emit = [&]() {
        Frame f = *texture;
        FrameTruth truth;
        truth.hand = Mask(f.width(), f.height());
        if (face) {
            draw_face(f, *face);
            truth.face = disk_bounds(f.width(), f.height(), face->cx, face->cy, face->radius);
        }
        if (hand) {
            const auto poly = hand_polygon(hand->pose, hand->cx, hand->cy, hand->size);
            fill_polygon(truth.hand, poly);
            paint_mask(f, truth.hand, kSkin);
            truth.hand_box = mask_bounds(truth.hand);
            if (truth.hand_box) truth.pose = hand->pose;
        }
        add_noise(f, sigma, noise_rng);
        out.frames.push_back(std::move(f));
        out.truth.push_back(std::move(truth));
    };

    for (const auto& d : script.steps) {
        switch (d.kind) {
            case K::seed:
                seed = d.seed;
                break;
            case K::bg:
                texture = background_texture(d.width, d.height, seed, d.texture_amplitude);
                sigma = d.noise_sigma;
                noise_rng.seed(seed ^ 0x9e3779b97f4a7c15ULL);
                break;
            case K::face: face = FaceSpec{d.x, d.y, d.size}; break;
            case K::face_none: face.reset(); break;
            case K::hand: hand = HandSpec{d.pose, d.x, d.y, d.size}; break;
            case K::hand_none: hand.reset(); break;
            case K::pose:
                if (!hand) script_error(d.line, "'pose' needs a hand");
                hand->pose = d.pose;
                break;
            case K::move_hand:
            case K::move_face: {
                if (!texture) script_error(d.line, "frames requested before 'bg'");
                const bool is_hand = d.kind == K::move_hand;
                if (is_hand ? !hand : !face) script_error(d.line, is_hand ? "no hand to move" : "no face to move");
                double& x = is_hand ? hand->cx : face->cx;
                double& y = is_hand ? hand->cy : face->cy;
                const double x0 = x, y0 = y;
                for (int i = 1; i <= d.count; ++i) {
                    x = x0 + (d.x - x0) * i / d.count;
                    y = y0 + (d.y - y0) * i / d.count;
                    emit();
                }
                break;
            }
            case K::frames:
                if (!texture) script_error(d.line, "frames requested before 'bg'");
                for (int i = 0; i < d.count; ++i) emit();
                break;
        }
    }
    return out;
}

// ---- cascade training patches ----

namespace {

// Area-averaged resample of a square gray image to base x base.
GrayImage shrink(const GrayImage& g, int base) {
    if (g.width() == base) return g;
    const double k = static_cast<double>(g.width()) / base;
    GrayImage out(base, base);
    for (int y = 0; y < base; ++y)
        for (int x = 0; x < base; ++x) {
            const int x0 = static_cast<int>(std::floor(x * k)), x1 = std::max(x0 + 1, static_cast<int>(std::floor((x + 1) * k)));
            const int y0 = static_cast<int>(std::floor(y * k)), y1 = std::max(y0 + 1, static_cast<int>(std::floor((y + 1) * k)));
            double sum = 0;
            for (int yy = y0; yy < y1; ++yy)
                for (int xx = x0; xx < x1; ++xx) sum += g.at(xx, yy);
            out.at(x, y) = clamp8(sum / ((x1 - x0) * (y1 - y0)));
        }
    return out;
}

// Renders a window of side round(base * zoom) and shrinks it to the base size;
// object coordinates are given in base-window units.
GrayImage patch(int base, std::mt19937_64& rng, std::optional<HandSpec> hand, std::optional<FaceSpec> face,
                double zoom = 1.0) {
    const int side = static_cast<int>(std::lround(base * zoom));
    Frame f = background_texture(side, side, rng());
    if (face) draw_face(f, {face->cx * zoom, face->cy * zoom, face->radius * zoom});
    if (hand) draw_hand(f, {hand->pose, hand->cx * zoom, hand->cy * zoom, hand->size * zoom});
    add_noise(f, 2.0, rng);
    return shrink(to_gray(f), base);
}

double random_zoom(std::mt19937_64& rng) {
    return std::exp(std::uniform_real_distribution<double>(0.0, std::log(4.0))(rng));
}

Pose random_pose(std::mt19937_64& rng) {
    return static_cast<Pose>(std::uniform_int_distribution<int>(0, 2)(rng));
}

// Centre offset that puts the object clearly off-centre.
double far_offset(int base, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.15 * base, 0.6 * base);
    return std::bernoulli_distribution(0.5)(rng) ? u(rng) : -u(rng);
}

// Random square crops of full scenes holding a face and a hand, shrunk to the
// base size. Crops that frame the target object as a positive would are skipped.
enum class Target { hand, face };

struct CropScene {
    GrayImage gray;
    double ox = 0, oy = 0, window = 0;  // where the target sits, as a positive window

    bool frames_target(const Rect& r) const {
        const bool centred = std::abs(r.center_x() - ox) < 0.2 * window && std::abs(r.center_y() - oy) < 0.2 * window;
        const bool sized = r.w > 0.8 * window && r.w < 1.25 * window;
        return centred && sized;
    }
};

CropScene crop_scene(Target target, std::mt19937_64& rng) {
    constexpr int kW = 320, kH = 240;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Frame f = background_texture(kW, kH, rng());
    const FaceSpec face{40 + 240 * u(rng), 40 + 160 * u(rng), 20 + 20 * u(rng)};
    const HandSpec hand{random_pose(rng), 40 + 240 * u(rng), 40 + 160 * u(rng), 40 + 40 * u(rng)};
    draw_face(f, face);
    draw_hand(f, hand);
    add_noise(f, 2.0, rng);
    CropScene s;
    s.gray = to_gray(f);
    s.ox = target == Target::hand ? hand.cx : face.cx;
    s.oy = target == Target::hand ? hand.cy : face.cy;
    s.window = target == Target::hand ? hand.size / 0.8 : 2 * face.radius / 0.84;
    return s;
}

GrayImage crop(const GrayImage& g, const Rect& r, int base) {
    GrayImage c(r.w, r.h);
    for (int y = 0; y < r.h; ++y)
        for (int x = 0; x < r.w; ++x) c.at(x, y) = g.at(r.x + x, r.y + y);
    return shrink(c, base);
}

void scene_crops(int base, std::size_t n, Target target, std::mt19937_64& rng, std::vector<GrayImage>& out) {
    constexpr int kPerScene = 25;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    while (n > 0) {
        const CropScene sc = crop_scene(target, rng);
        for (int k = 0; k < kPerScene && n > 0; ++k) {
            const int side = static_cast<int>(std::lround(base * std::exp(u(rng) * std::log(6.0))));
            const Rect r(static_cast<int>(u(rng) * (sc.gray.width() - side)),
                         static_cast<int>(u(rng) * (sc.gray.height() - side)), side, side);
            if (sc.frames_target(r)) continue;
            out.push_back(crop(sc.gray, r, base));
            --n;
        }
    }
}

// False positives of the cascade so far on fresh scenes, at most a few per
// scene so one texture cannot dominate.
std::vector<GrayImage> mine_scene_negatives(const CascadeModel& model, std::size_t want, Target target,
                                            std::mt19937_64& rng) {
    constexpr int kScenes = 40, kPerScene = 40;
    std::vector<GrayImage> out;
    for (int i = 0; i < kScenes && out.size() < want; ++i) {
        const CropScene sc = crop_scene(target, rng);
        std::vector<Rect> hits;
        for (const auto& r : detect_raw(model, sc.gray))
            if (!sc.frames_target(r)) hits.push_back(r);
        std::shuffle(hits.begin(), hits.end(), rng);
        for (std::size_t k = 0; k < hits.size() && k < kPerScene && out.size() < want; ++k)
            out.push_back(crop(sc.gray, hits[k], model.base_w));
    }
    return out;
}

}  // namespace

PatchSet hand_patches(int base, std::size_t n_pos, std::size_t n_neg, std::uint64_t seed) {
    if (base < 8) throw Error("base window must be at least 8");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(-1.5, 1.5), scale(0.95, 1.05);
    const double c = (base - 1) / 2.0;
    const double nominal = 0.8 * base;
    PatchSet out;
    for (std::size_t i = 0; i < n_pos; ++i) {
        HandSpec h{random_pose(rng), c + jitter(rng), c + jitter(rng), nominal * scale(rng)};
        out.positives.push_back(patch(base, rng, h, std::nullopt));
    }
    const std::size_t n_crops = n_neg * 2 / 5;
    scene_crops(base, n_crops, Target::hand, rng, out.negatives);
    std::uniform_int_distribution<int> kind(0, 99);
    for (std::size_t i = n_crops; i < n_neg; ++i) {
        const int k = kind(rng);
        std::optional<HandSpec> h;
        std::optional<FaceSpec> fc;
        if (k < 10) {
            // plain background
        } else if (k < 40) {
            const double dx = far_offset(base, rng), dy = jitter(rng) * 3;
            const bool vertical = std::bernoulli_distribution(0.5)(rng);
            h = HandSpec{random_pose(rng), c + (vertical ? dy : dx), c + (vertical ? dx : dy), nominal * scale(rng)};
        } else if (k < 85) {
            const double s = std::array{0.45, 0.65, 0.8, 0.8, 0.8, 1.22, 1.22, 1.5}[std::uniform_int_distribution<int>(0, 7)(rng)];
            h = HandSpec{random_pose(rng), c + jitter(rng), c + jitter(rng), nominal * s * scale(rng)};
        } else {
            fc = FaceSpec{c + jitter(rng), c + jitter(rng), 0.42 * base * scale(rng)};
        }
        out.negatives.push_back(patch(base, rng, h, fc, random_zoom(rng)));
    }
    return out;
}

PatchSet face_patches(int base, std::size_t n_pos, std::size_t n_neg, std::uint64_t seed) {
    if (base < 8) throw Error("base window must be at least 8");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(-1.5, 1.5), scale(0.92, 1.08);
    const double c = (base - 1) / 2.0;
    const double nominal = 0.42 * base;
    PatchSet out;
    for (std::size_t i = 0; i < n_pos; ++i)
        out.positives.push_back(patch(base, rng, std::nullopt, FaceSpec{c + jitter(rng), c + jitter(rng), nominal * scale(rng)}));
    const std::size_t n_crops = n_neg * 2 / 5;
    scene_crops(base, n_crops, Target::face, rng, out.negatives);
    std::uniform_int_distribution<int> kind(0, 99);
    for (std::size_t i = n_crops; i < n_neg; ++i) {
        const int k = kind(rng);
        std::optional<HandSpec> h;
        std::optional<FaceSpec> fc;
        if (k < 20) {
        } else if (k < 45) {
            // Hands at the face scale and zoomed in far enough that a palm fills the window.
            static constexpr double kHandScales[] = {0.7, 1.0, 1.0, 1.4, 1.8, 2.4};
            const double s = kHandScales[std::uniform_int_distribution<int>(0, 5)(rng)];
            h = HandSpec{random_pose(rng), c + jitter(rng) * 2, c + jitter(rng) * 2, 0.8 * base * s * scale(rng)};
        } else if (k < 65) {
            fc = FaceSpec{c + far_offset(base, rng), c + jitter(rng) * 3, nominal * scale(rng)};
        } else {
            static constexpr double kFaceScales[] = {0.45, 0.6, 1.5, 1.8, 2.2, 2.8};
            const double s = kFaceScales[std::uniform_int_distribution<int>(0, 5)(rng)];
            fc = FaceSpec{c + jitter(rng) * 2, c + jitter(rng) * 2, nominal * s * scale(rng)};
        }
        out.negatives.push_back(patch(base, rng, h, fc, random_zoom(rng)));
    }
    return out;
}

Gallery synthetic_gallery(int n_rho, int n_theta) {
    Gallery g;
    g.n_rho = n_rho;
    g.n_theta = n_theta;
    for (Pose p : {Pose::open_palm, Pose::fist, Pose::point}) {
        GestureClass cls;
        cls.id = pose_class_id(p);
        cls.name = pose_name(p);
        for (double size : {40.0, 56.0, 72.0}) {
            const int dim = static_cast<int>(size) + 16;
            const double c = (dim - 1) / 2.0;
            const Mask m = rasterize_polygon(dim, dim, hand_polygon(p, c, c, size));
            if (auto d = describe_mask(m, n_rho, n_theta)) cls.templates.push_back(std::move(*d));
        }
        g.classes.push_back(std::move(cls));
    }
    g.validate();
    return g;
}

CascadeModel synthetic_cascade(std::string_view kind, std::uint64_t seed) {
    PatchSet set;
    if (kind == "hand")
        set = hand_patches(24, 200, 1000, seed);
    else if (kind == "face")
        set = face_patches(24, 200, 1000, seed);
    else
        throw Error("unknown synthetic cascade kind: " + std::string(kind));
    ToyTrainOptions opts;
    opts.seed = seed;
    opts.label = std::string(kind);
    opts.max_features = 4000;
    opts.min_detection = 0.995;
    auto rng = std::make_shared<std::mt19937_64>(seed ^ 0x5bd1e995ULL);
    const Target target = kind == "hand" ? Target::hand : Target::face;
    opts.mine_negatives = [rng, target](const CascadeModel& m, std::size_t want) {
        return mine_scene_negatives(m, want, target, *rng);
    };
    return train_toy_cascade(set.positives, set.negatives, 10, 0.01, opts);
}

}  // namespace gp
