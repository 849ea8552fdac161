#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "gp/pipeline.hpp"
#include "gp/pnm.hpp"
#include "gp/synth.hpp"
#include "oracles.hpp"

using namespace gp;

namespace {

const PipelineModels& base_models() {
    static const PipelineModels m = [] {
        PipelineModels out;
        out.hand = synthetic_cascade("hand", 7);
        out.face = synthetic_cascade("face", 7);
        out.gallery = synthetic_gallery();
        return out;
    }();
    return m;
}

// Scene with a face; the first 20 frames are empty and train the background.
struct SceneRun {
    SynthSequence seq;
    PipelineModels models;
    std::vector<GestureEvent> events;
    std::vector<FrameResult> results;
};

SceneRun run_scene(const std::string& body, const PipelineConfig& cfg = {}) {
    SceneRun r;
    r.seq = synth_sequence(parse_scene_script("version 1\nseed 11\nbg 320 240 2\nface 80 90 30\nframes 20\n" + body));
    r.models = base_models();
    r.models.background = train(std::span(r.seq.frames).first(20), cfg.codebook);
    PipelineState s;
    for (const auto& f : r.seq.frames) {
        auto res = process_frame(s, f, r.models, cfg);
        s = res.state;
        if (res.event) r.events.push_back(*res.event);
        r.results.push_back(std::move(res));
    }
    return r;
}

std::filesystem::path temp_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("gp_test_pipeline_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace

TEST(Pipeline, BackgroundFrameLeavesStateAlone) {
    const SceneRun r = run_scene("frames 5\n");
    EXPECT_TRUE(r.events.empty());
    for (const auto& res : r.results) {
        EXPECT_EQ(res.state.mode, Mode::detecting);
        EXPECT_EQ(res.state.pending_count, 0);
        EXPECT_EQ(res.state.cooldown, 0);
        EXPECT_FALSE(res.debug.hand_hit);
    }
    // The face itself is found but never taken for a hand.
    ASSERT_TRUE(r.results.back().state.face);
    EXPECT_TRUE(r.results.back().state.face->contains(80, 90));
}

TEST(Pipeline, SingleEventAtDebounceFrame) {
    PipelineConfig cfg;
    const SceneRun r = run_scene("hand OPEN_PALM 230 140 60\nframes 3\nhand none\nframes 5\n", cfg);
    ASSERT_EQ(r.events.size(), 1u);
    const GestureEvent& e = r.events[0];
    EXPECT_EQ(e.class_id, pose_class_id(Pose::open_palm));
    EXPECT_EQ(e.class_name, "OPEN_PALM");
    EXPECT_EQ(e.frame, 20u + cfg.debounce_frames - 1);
    EXPECT_EQ(e.timestamp_ms, static_cast<std::uint64_t>(std::llround(e.frame * 1000.0 / cfg.fps_assumed)));
    EXPECT_EQ(e.learner_id, cfg.learner_id);
    EXPECT_GT(e.confidence, 0.5);
    EXPECT_LE(e.confidence, 1.0);
    // Tracking is dropped once the hand is gone.
    EXPECT_EQ(r.results.back().state.mode, Mode::detecting);
}

TEST(Pipeline, HeldGestureRepeatsAfterCooldown) {
    for (auto [d, c] : {std::pair{3, 15}, std::pair{1, 1}, std::pair{5, 10}}) {
        PipelineConfig cfg;
        cfg.debounce_frames = d;
        cfg.cooldown_frames = c;
        const SceneRun r = run_scene("hand FIST 230 140 60\nframes 100\n", cfg);
        const std::size_t expected = 1 + (100 - d) / c;
        EXPECT_EQ(r.events.size(), expected) << "d=" << d << " c=" << c;
        for (std::size_t k = 0; k < r.events.size(); ++k)
            EXPECT_EQ(r.events[k].frame, 20u + static_cast<std::uint32_t>(d - 1 + k * c));
    }
}

TEST(Pipeline, TwoGesturesInOrder) {
    const SceneRun r = run_scene("hand OPEN_PALM 230 140 60\nframes 10\npose FIST\nframes 10\n");
    ASSERT_EQ(r.events.size(), 2u);
    EXPECT_EQ(r.events[0].class_name, "OPEN_PALM");
    EXPECT_EQ(r.events[1].class_name, "FIST");
    EXPECT_LT(r.events[0].frame, r.events[1].frame);
}

TEST(Pipeline, HandOnlyWithoutFaceModel) {
    SceneRun r;
    r.seq = synth_sequence(parse_scene_script("version 1\nseed 3\nbg 320 240 2\nframes 10\nhand POINT 160 120 64\nframes 5\n"));
    r.models = base_models();
    r.models.face.reset();
    r.models.background = train(std::span(r.seq.frames).first(10), CodebookParams{});
    PipelineConfig cfg;
    VectorFrameSource src(r.seq.frames);
    std::vector<GestureEvent> events;
    const auto sum = run_session(cfg, r.models, src, [&](const GestureEvent& e) { events.push_back(e); });
    EXPECT_EQ(sum.frames, 15u);
    ASSERT_EQ(events.size(), 1u);
    EXPECT_EQ(events[0].class_name, "POINT");
    EXPECT_EQ(events[0].frame, 12u);
}

TEST(Pipeline, NoiseFramesNeverThrow) {
    std::mt19937_64 rng(5);
    std::vector<Frame> bg;
    for (int i = 0; i < 5; ++i) bg.push_back(oracle::random_frame(160, 120, rng));
    PipelineModels m = base_models();
    m.background = train(bg, CodebookParams{});
    PipelineConfig cfg;
    PipelineState s;
    for (int i = 0; i < 1000; ++i) {
        const Frame f = oracle::random_frame(160, 120, rng);
        FrameResult res;
        ASSERT_NO_THROW(res = process_frame(s, f, m, cfg)) << "frame " << i;
        s = res.state;
        ASSERT_LE(s.pending_count, cfg.debounce_frames);
        ASSERT_GE(s.cooldown, 0);
    }
    EXPECT_EQ(s.frame_index, 1000u);
}

TEST(Pipeline, FrameSizeMismatchThrows) {
    PipelineModels m = base_models();
    m.background = train(std::vector<Frame>{Frame(64, 48)}, CodebookParams{});
    EXPECT_THROW(process_frame({}, Frame(32, 48), m, {}), Error);
}

TEST(Pipeline, ConfigValidation) {
    PipelineConfig ok;
    EXPECT_NO_THROW(ok.validate());
    auto bad = [](auto mutate) {
        PipelineConfig c;
        mutate(c);
        EXPECT_THROW(c.validate(), Error);
    };
    bad([](PipelineConfig& c) { c.debounce_frames = 0; });
    bad([](PipelineConfig& c) { c.cooldown_frames = 1; });
    bad([](PipelineConfig& c) { c.fps_assumed = 0; });
    bad([](PipelineConfig& c) { c.morph_k = 4; });
    bad([](PipelineConfig& c) { c.skin_threshold = 300; });
    bad([](PipelineConfig& c) { c.tau = -1; });
    bad([](PipelineConfig& c) { c.gates.v_min = 200, c.gates.v_max = 100; });
}

TEST(Session, DirectorySourceMatchesInMemoryAndDumpsStages) {
    const auto seq = synth_sequence(
        parse_scene_script("version 1\nseed 11\nbg 320 240 2\nface 80 90 30\nframes 10\nhand FIST 230 140 60\nframes 4\n"));
    PipelineModels m = base_models();
    m.background = train(std::span(seq.frames).first(10), CodebookParams{});

    const auto dir = temp_dir("frames");
    for (std::size_t i = 0; i < seq.frames.size(); ++i) write_ppm(dir / frame_file_name(i + 1), seq.frames[i]);
    std::ofstream(dir / "notes.txt") << "ignored";

    DirectoryFrameSource from_disk(dir);
    EXPECT_EQ(from_disk.size(), seq.frames.size());
    VectorFrameSource in_memory(seq.frames);
    std::vector<GestureEvent> a, b;
    const auto dump = temp_dir("dump");
    const auto sa = run_session({}, m, from_disk, [&](const GestureEvent& e) { a.push_back(e); }, dump);
    run_session({}, m, in_memory, [&](const GestureEvent& e) { b.push_back(e); });
    EXPECT_EQ(a, b);
    ASSERT_EQ(a.size(), 1u);
    EXPECT_EQ(sa.frames, 14u);
    EXPECT_EQ(sa.events, 1u);
    EXPECT_GT(sa.mean_latency_ms, 0);

    for (const char* stage : {"motion", "prob", "skin", "fused"}) {
        const GrayImage g = read_pgm(dump / (std::string("frame_000012_") + stage + ".pgm"));
        EXPECT_EQ(g.width(), 320);
    }
    // The hand shows up in the fused mask of a tracking frame.
    const GrayImage fused = read_pgm(dump / "frame_000014_fused.pgm");
    EXPECT_GT(std::count(fused.values().begin(), fused.values().end(), 255), 1000);
}

TEST(Session, UnreadableFrameNamesItsIndex) {
    const auto dir = temp_dir("corrupt");
    write_ppm(dir / frame_file_name(1), Frame(32, 24));
    std::ofstream(dir / frame_file_name(2)) << "P6\n32 24\n255\nshort";
    PipelineModels m = base_models();
    m.background = train(std::vector<Frame>{Frame(32, 24)}, CodebookParams{});
    DirectoryFrameSource src(dir);
    try {
        run_session({}, m, src, {});
        FAIL() << "corrupt frame accepted";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("frame 1"), std::string::npos) << e.what();
        EXPECT_NE(std::string(e.what()).find("frame_000002.ppm"), std::string::npos) << e.what();
    }
    EXPECT_THROW(DirectoryFrameSource(dir / "missing"), Error);
}
