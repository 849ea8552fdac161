#include <gtest/gtest.h>

#include <random>

#include "gp/config.hpp"

using namespace gp;

namespace {

std::string error_of(std::string_view text) {
    try {
        parse_config(text);
    } catch (const Error& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(Config, DefaultsRoundTrip) {
    const AppConfig def;
    const std::string text = dump_config(def);
    EXPECT_EQ(text.substr(0, 10), "version=1\n");
    EXPECT_EQ(dump_config(parse_config(text)), text);
    EXPECT_NE(text.find("pipeline.debounce_frames=3\n"), std::string::npos);
    EXPECT_NE(text.find("pipeline.cooldown_frames=15\n"), std::string::npos);
}

TEST(Config, RandomConfigsRoundTrip) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0, 1);
    for (int i = 0; i < 200; ++i) {
        AppConfig c;
        c.pipeline.codebook.eps_train = 1 + 30 * u(rng);
        c.pipeline.codebook.alpha = 0.1 + 0.8 * u(rng);
        c.pipeline.tau = u(rng);
        c.pipeline.debounce_frames = 1 + static_cast<int>(rng() % 5);
        c.pipeline.cooldown_frames = c.pipeline.debounce_frames + static_cast<int>(rng() % 20);
        c.pipeline.fps_assumed = 1 + 59 * u(rng);
        c.pipeline.allow_mirror = rng() % 2;
        c.pipeline.hand_detect.scale_step = 1.05 + u(rng);
        c.pipeline.face_detect.suppress_overlaps = rng() % 2;
        c.pipeline.hand_cascade = "models/hand " + std::to_string(i) + ".txt";
        c.indicator.window_s = 1 + 100 * u(rng);
        c.indicator.weights[static_cast<int>(rng() % 4)] = 0.01 + 0.99 * u(rng);
        c.supervisor.port = static_cast<std::uint16_t>(rng());
        c.supervisor.heartbeat_interval_s = 0.01 + u(rng);
        c.export_format = rng() % 2 ? ExportFormat::csv : ExportFormat::jsonl;
        const std::string text = dump_config(c);
        const AppConfig back = parse_config(text);
        ASSERT_EQ(dump_config(back), text);
        ASSERT_EQ(back.pipeline.tau, c.pipeline.tau);  // bit-exact doubles
        ASSERT_EQ(back.indicator.weights, c.indicator.weights);
    }
}

TEST(Config, CommentsBlanksAndOverrides) {
    const AppConfig c = parse_config("# header\n\nversion = 1\n  # indented comment\ncpdh.tau = 0.3\r\ncpdh.tau=0.4\n");
    EXPECT_EQ(c.pipeline.tau, 0.4);
    AppConfig d = c;
    apply_setting(d, "pipeline.debounce_frames=5");
    EXPECT_EQ(d.pipeline.debounce_frames, 5);
    EXPECT_THROW(apply_setting(d, "nope=1"), Error);
    EXPECT_THROW(apply_setting(d, "no equals sign"), Error);
}

TEST(Config, ErrorsNameTheLine) {
    EXPECT_NE(error_of("version=1\n\nbogus.key=3\n").find("line 3: unknown key 'bogus.key'"), std::string::npos);
    EXPECT_NE(error_of("version=1\ncpdh.tau=abc\n").find("line 2"), std::string::npos);
    EXPECT_NE(error_of("version=1\ncpdh.n_rho=5.5\n").find("line 2"), std::string::npos);
    EXPECT_NE(error_of("version=1\ncpdh.allow_mirror=maybe\n").find("line 2"), std::string::npos);
    EXPECT_NE(error_of("version=1\nsupervisor.port=70000\n").find("line 2"), std::string::npos);
    EXPECT_NE(error_of("cpdh.tau=1\n").find("line 1"), std::string::npos);
    EXPECT_NE(error_of("version=2\n").find("unsupported version"), std::string::npos);
    EXPECT_NE(error_of("").find("missing version"), std::string::npos);
    EXPECT_NE(error_of("version=1\nexport.format=xml\n").find("line 2"), std::string::npos);
}

TEST(Config, InvariantsChecked) {
    EXPECT_NE(error_of("version=1\npipeline.debounce_frames=0\n").find("debounce_frames"), std::string::npos);
    EXPECT_NE(error_of("version=1\npipeline.debounce_frames=5\npipeline.cooldown_frames=4\n").find("cooldown_frames"),
              std::string::npos);
    EXPECT_FALSE(error_of("version=1\nindicator.weight.2=1.5\n").empty());
    EXPECT_FALSE(error_of("version=1\nexport.bin_width_s=0\n").empty());
    EXPECT_FALSE(error_of("version=1\nsupervisor.missed_heartbeats=0\n").empty());
}

TEST(Config, KeysListIsComplete) {
    const auto text = dump_config(AppConfig{});
    for (const auto& k : config_keys()) {
        if (k.find('<') != std::string::npos) continue;
        EXPECT_NE(text.find("\n" + k + "="), std::string::npos) << k;
    }
}
