#include "gp/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <regex>

#include "gp/pnm.hpp"

namespace gp {

void PipelineConfig::validate() const {
    codebook.validate();
    auto need = [](bool ok, const char* field, const char* rule) {
        if (!ok) throw Error(std::string("pipeline config: ") + field + " " + rule);
    };
    need(debounce_frames >= 1, "debounce_frames", "must be >= 1");
    need(cooldown_frames >= debounce_frames, "cooldown_frames", "must be >= debounce_frames");
    need(fps_assumed > 0, "fps_assumed", "must be > 0");
    need(face_every >= 1, "face_every", "must be >= 1");
    need(skin_threshold >= 0 && skin_threshold <= 255, "skin_threshold", "must lie in [0, 255]");
    need(morph_k >= 1 && morph_k % 2 == 1, "morph_k", "must be odd and >= 1");
    need(n_rho >= 1 && n_theta >= 1, "n_rho/n_theta", "must be >= 1");
    need(tau >= 0, "tau", "must be >= 0");
    need(roi_scale >= 1, "roi_scale", "must be >= 1");
    need(gates.s_min >= 0 && gates.v_min >= 0 && gates.v_max <= 255 && gates.v_min <= gates.v_max, "skin gates",
         "must satisfy 0 <= v_min <= v_max <= 255 and s_min >= 0");
    need(camshift.lost_threshold >= 0 && camshift.lost_threshold <= 1, "lost_threshold", "must lie in [0, 1]");
    need(camshift.max_iter >= 1 && camshift.min_size >= 1, "camshift", "max_iter and min_size must be >= 1");
}

namespace {

bool overlaps(const Rect& a, const Rect& b) {
    Rect tmp;
    return intersect(a, b, tmp);
}

Rect scaled_about_centre(const Rect& r, double k) {
    const int w = std::max(1, static_cast<int>(std::lround(r.w * k)));
    const int h = std::max(1, static_cast<int>(std::lround(r.h * k)));
    return Rect(static_cast<int>(std::lround(r.center_x() - (w - 1) / 2.0)),
                static_cast<int>(std::lround(r.center_y() - (h - 1) / 2.0)), w, h);
}

Mask restrict_to(const Mask& m, const Rect& roi) {
    Mask out(m.width(), m.height());
    Rect c;
    if (!clip(roi, m.width(), m.height(), c)) return out;
    for (int y = c.y; y < c.bottom(); ++y)
        for (int x = c.x; x < c.right(); ++x)
            if (m.test(x, y)) out.set(x, y);
    return out;
}

void lose_track(PipelineState& s) {
    s.mode = Mode::detecting;
    s.track.reset();
    s.skin.reset();
}

}  // namespace

FrameResult process_frame(const PipelineState& state, const Frame& frame, const PipelineModels& models,
                          const PipelineConfig& cfg) {
    if (frame.width() != models.background.width() || frame.height() != models.background.height())
        throw Error("frame size " + std::to_string(frame.width()) + "x" + std::to_string(frame.height()) +
                    " does not match the background model");

    FrameResult r;
    PipelineState& s = r.state;
    s = state;
    const std::uint64_t index = s.frame_index++;
    if (s.cooldown > 0) --s.cooldown;

    StageDebug& dbg = r.debug;
    dbg.motion = subtract(models.background, frame);
    std::optional<GrayImage> gray;
    auto gray_frame = [&]() -> const GrayImage& {
        if (!gray) gray = to_gray(frame);
        return *gray;
    };

    if (models.face && index % static_cast<std::uint64_t>(cfg.face_every) == 0) {
        const auto faces = detect(*models.face, gray_frame(), cfg.face_detect);
        s.face = faces.empty() ? std::nullopt : std::optional<Rect>(faces.front());
    }

    std::optional<int> observed;  // class seen this frame, if any
    double observed_conf = 0;
    try {
        if (s.mode == Mode::detecting) {
            for (const auto& hit : detect(models.hand, gray_frame(), cfg.hand_detect)) {
                if (s.face && overlaps(hit, *s.face)) continue;
                dbg.hand_hit = hit;
                break;
            }
            if (dbg.hand_hit) {
                const Rect& h = *dbg.hand_hit;
                if (s.face) {
                    s.skin = sample_skin_model(frame, *s.face, cfg.gates);
                } else {
                    Rect inner(h.x + h.w / 4, h.y + h.h / 4, std::max(1, h.w / 2), std::max(1, h.h / 2));
                    s.skin = sample_skin_region(frame, inner, cfg.gates);
                }
                TrackState t;
                t.window = h;
                t.confidence = 1;
                s.track = t;
                s.mode = Mode::tracking;
            }
        }

        if (s.mode == Mode::tracking) {
            dbg.prob = backproject(frame, *s.skin, cfg.gates);
            if (s.face) {
                // The face is skin too; keep CamShift from drifting onto it.
                Rect f;
                if (clip(*s.face, dbg.prob.width(), dbg.prob.height(), f))
                    for (int y = f.y; y < f.bottom(); ++y)
                        for (int x = f.x; x < f.right(); ++x) dbg.prob.at(x, y) = 0;
            }
            const TrackState t = camshift_step(dbg.prob, *s.track, cfg.camshift);
            if (t.lost) {
                lose_track(s);
            } else {
                s.track = t;
                dbg.skin = skin_mask(dbg.prob, static_cast<std::uint8_t>(cfg.skin_threshold), cfg.morph_k);
                dbg.fused = fuse_masks(dbg.motion, dbg.skin, s.face);
                const Mask roi = restrict_to(dbg.fused, scaled_about_centre(t.window, cfg.roi_scale));
                if (auto d = describe_mask(roi, cfg.n_rho, cfg.n_theta)) {
                    dbg.classification = classify(*d, models.gallery, cfg.tau, cfg.allow_mirror);
                    if (dbg.classification->class_id != kUnknownClass) {
                        observed = dbg.classification->class_id;
                        observed_conf = dbg.classification->confidence;
                    }
                }
            }
        }
    } catch (const DegenerateSkinSample& e) {
        dbg.absorbed = e.what();
        lose_track(s);
    } catch (const DegenerateContour& e) {
        dbg.absorbed = e.what();
    }

    if (!observed) {
        s.pending_class = kUnknownClass;
        s.pending_count = 0;
        return r;
    }
    if (*observed == s.pending_class) {
        s.pending_count = std::min(s.pending_count + 1, cfg.debounce_frames);
    } else {
        s.pending_class = *observed;
        s.pending_count = 1;
    }
    if (s.pending_count >= cfg.debounce_frames && s.cooldown == 0) {
        GestureEvent e;
        e.learner_id = cfg.learner_id;
        e.frame = static_cast<std::uint32_t>(index);
        e.timestamp_ms = static_cast<std::uint64_t>(std::llround(static_cast<double>(index) * 1000.0 / cfg.fps_assumed));
        e.class_id = *observed;
        const GestureClass* c = models.gallery.find(*observed);
        e.class_name = c ? c->name : std::to_string(*observed);
        e.confidence = std::clamp(observed_conf, 0.0, 1.0);
        r.event = std::move(e);
        s.cooldown = cfg.cooldown_frames;
    }
    return r;
}

std::string frame_file_name(std::uint64_t one_based_index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "frame_%06llu.ppm", static_cast<unsigned long long>(one_based_index));
    return buf;
}

DirectoryFrameSource::DirectoryFrameSource(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw Error("not a directory: " + dir.string());
    static const std::regex name(R"(frame_(\d+)\.ppm)");
    std::vector<std::pair<unsigned long long, std::filesystem::path>> found;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        std::smatch m;
        const std::string fn = entry.path().filename().string();
        if (std::regex_match(fn, m, name)) found.emplace_back(std::stoull(m[1].str()), entry.path());
    }
    std::sort(found.begin(), found.end());
    for (auto& f : found) files_.push_back(std::move(f.second));
}

std::optional<Frame> DirectoryFrameSource::next() {
    if (pos_ >= files_.size()) return std::nullopt;
    const auto& path = files_[pos_++];
    try {
        return read_ppm(path);
    } catch (const std::exception& e) {
        throw Error("frame " + std::to_string(pos_ - 1) + " (" + path.filename().string() + "): " + e.what());
    }
}

std::optional<Frame> VectorFrameSource::next() {
    if (pos_ >= frames_.size()) return std::nullopt;
    return frames_[pos_++];
}

SessionSummary run_session(const PipelineConfig& cfg, const PipelineModels& models, FrameSource& frames,
                           const EventSink& sink, const std::optional<std::filesystem::path>& dump_dir) {
    cfg.validate();
    if (dump_dir) std::filesystem::create_directories(*dump_dir);
    SessionSummary summary;
    PipelineState state;
    double total_ms = 0;
    while (true) {
        std::optional<Frame> f;
        try {
            f = frames.next();
        } catch (const Error&) {
            throw;
        } catch (const std::exception& e) {
            throw Error("frame " + std::to_string(summary.frames) + ": " + e.what());
        }
        if (!f) break;
        const auto t0 = std::chrono::steady_clock::now();
        FrameResult res;
        try {
            res = process_frame(state, *f, models, cfg);
        } catch (const std::exception& e) {
            throw Error("frame " + std::to_string(summary.frames) + ": " + e.what());
        }
        total_ms += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        state = std::move(res.state);
        if (dump_dir) {
            const std::string stem = frame_file_name(summary.frames + 1);
            const std::string base = stem.substr(0, stem.size() - 4);
            const auto& d = res.debug;
            write_pgm(*dump_dir / (base + "_motion.pgm"), d.motion);
            write_pgm(*dump_dir / (base + "_prob.pgm"), d.prob.empty() ? GrayImage(f->width(), f->height()) : d.prob);
            write_pgm(*dump_dir / (base + "_skin.pgm"), d.skin.empty() ? Mask(f->width(), f->height()) : d.skin);
            write_pgm(*dump_dir / (base + "_fused.pgm"), d.fused.empty() ? Mask(f->width(), f->height()) : d.fused);
        }
        ++summary.frames;
        if (res.event) {
            ++summary.events;
            if (sink) sink(*res.event);
        }
    }
    summary.mean_latency_ms = summary.frames ? total_ms / static_cast<double>(summary.frames) : 0.0;
    return summary;
}

}  // namespace gp
