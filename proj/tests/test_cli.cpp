#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gp/cascade.hpp"
#include "gp/synth.hpp"
#include "gp/telemetry.hpp"

using namespace gp;
namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code = -1;
    std::string out, err;
};

const fs::path& workdir() {
    static const fs::path d = [] {
        auto p = fs::temp_directory_path() / "gp_test_cli";
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

CliResult gp_cli(const std::string& args, const std::string& env = "GP_CONFIG=") {
    const fs::path out = workdir() / "stdout.txt", err = workdir() / "stderr.txt";
    const std::string cmd = "cd '" + workdir().string() + "' && " + env + " '" GP_CLI_PATH "' " + args + " >'" +
                            out.string() + "' 2>'" + err.string() + "'";
    const int st = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

// Cascades are trained once and shared; the CLI would otherwise retrain them per run.
const std::string& model_flags() {
    static const std::string flags = [] {
        save_cascade(workdir() / "hand.txt", synthetic_cascade("hand", 7));
        save_cascade(workdir() / "face.txt", synthetic_cascade("face", 7));
        return std::string("--set models.hand_cascade=hand.txt --set models.face_cascade=face.txt ");
    }();
    return flags;
}

const char* kScript =
    "version 1\nseed 11\nbg 320 240 2\nface 80 90 30\nframes 20\n"
    "hand OPEN_PALM 230 140 60\nframes 10\npose FIST\nframes 10\nhand none\nframes 5\n";

std::vector<nlohmann::json> lines(const std::string& text) {
    std::vector<nlohmann::json> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);)
        if (!l.empty()) out.push_back(nlohmann::json::parse(l));
    return out;
}

}  // namespace

TEST(Cli, NoSubcommandPrintsUsage) {
    const auto r = gp_cli("");
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("Usage"), std::string::npos);
    EXPECT_EQ(gp_cli("--help").code, 0);
    EXPECT_EQ(gp_cli("run --no-such-flag").code, 1);
}

TEST(Cli, ExportEmptyStoreIsHeaderOnly) {
    const auto r = gp_cli("export --store never_written.jsonl --format csv -o empty.csv");
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(slurp(workdir() / "empty.csv"), "learner_id,bin_start_s,indicator\n");
}

TEST(Cli, DumpConfigRoundTrips) {
    const auto a = gp_cli("--set cpdh.tau=0.3 --set indicator.weight.2=0.5 dump-config");
    ASSERT_EQ(a.code, 0) << a.err;
    std::ofstream(workdir() / "dumped.cfg") << a.out;
    const auto b = gp_cli("--config dumped.cfg dump-config");
    EXPECT_EQ(b.code, 0) << b.err;
    EXPECT_EQ(b.out, a.out);
    // GP_CONFIG names the default file; flags still win over it.
    const auto c = gp_cli("dump-config --set cpdh.tau=0.4", "GP_CONFIG=dumped.cfg");
    EXPECT_NE(c.out.find("cpdh.tau=0.4\n"), std::string::npos);
    EXPECT_NE(c.out.find("indicator.weight.2=0.5\n"), std::string::npos);
}

TEST(Cli, ConfigErrorsAreUsageErrors) {
    std::ofstream(workdir() / "bad.cfg") << "version=1\n# fine\nnot.a.key=3\n";
    const auto r = gp_cli("--config bad.cfg dump-config");
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;
    EXPECT_NE(r.err.find("not.a.key"), std::string::npos);
}

TEST(Cli, RuntimeErrorsExitTwo) {
    EXPECT_EQ(gp_cli("bg-subtract --model missing.cb --frame missing.ppm -o m.pgm").code, 2);
    std::ofstream(workdir() / "broken.jsonl") << "{\"learner\":1}\n";
    const auto r = gp_cli("export --store broken.jsonl");
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("line 1"), std::string::npos);
}

TEST(Cli, SynthThenRunReportsScriptedGestures) {
    std::ofstream(workdir() / "scene.txt") << kScript;
    const auto s = gp_cli("synth --script scene.txt -o frames");
    ASSERT_EQ(s.code, 0) << s.err;
    EXPECT_TRUE(fs::exists(workdir() / "frames" / "frame_000045.ppm"));
    EXPECT_EQ(lines(slurp(workdir() / "frames" / "truth.jsonl")).size(), 45u);

    const auto r = gp_cli(model_flags() + "run --frames frames --dump-stages stages");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto ev = lines(r.out);
    ASSERT_EQ(ev.size(), 2u) << r.out;
    EXPECT_EQ(ev[0]["class_name"], "OPEN_PALM");
    EXPECT_EQ(ev[1]["class_name"], "FIST");
    EXPECT_EQ(ev[0]["frame"], 22);
    EXPECT_EQ(ev[0]["timestamp_ms"], 1467);  // llround(22 * 1000 / 15)
    EXPECT_NE(r.err.find("fps"), std::string::npos);
    EXPECT_TRUE(fs::exists(workdir() / "stages" / "frame_000030_fused.pgm"));

    // The script path gives the same events as the rendered frames.
    const auto r2 = gp_cli(model_flags() + "run --script scene.txt");
    EXPECT_EQ(r2.out, r.out);
}

TEST(Cli, RunFeedsSupervisorAndJsonlReplays) {
    std::ofstream(workdir() / "scene2.txt") << kScript;
    std::uint16_t port;
    SupervisorConfig sc;
    sc.store = workdir() / "live.jsonl";
    fs::remove(sc.store);
    std::string run_out;
    {
        Supervisor sup(sc);
        sup.start();
        port = sup.port();
        const auto r = gp_cli(model_flags() + "--set pipeline.learner_id=4 run --script scene2.txt --supervisor 127.0.0.1:" +
                              std::to_string(port));
        ASSERT_EQ(r.code, 0) << r.err;
        run_out = r.out;
        sup.stop();
    }
    const auto live = load_store(sc.store);
    ASSERT_EQ(live.size(), 2u);
    EXPECT_EQ(live[0].learner, 4u);

    std::ofstream(workdir() / "events.jsonl") << run_out;
    SupervisorConfig sc2 = sc;
    sc2.store = workdir() / "replayed.jsonl";
    fs::remove(sc2.store);
    {
        Supervisor sup(sc2);
        sup.start();
        const auto r = gp_cli("simulate --from-jsonl events.jsonl --supervisor 127.0.0.1:" + std::to_string(sup.port()));
        ASSERT_EQ(r.code, 0) << r.err;
        sup.stop();
    }
    EXPECT_EQ(load_store(sc2.store), live);
}

TEST(Cli, SimulatedRatesExportInOrder) {
    SupervisorConfig sc;
    sc.store = workdir() / "rates.jsonl";
    fs::remove(sc.store);
    Supervisor sup(sc);
    sup.start();
    const auto r = gp_cli("simulate --rates 12,8,4,1 --duration 600 --seed 5 --supervisor 127.0.0.1:" +
                          std::to_string(sup.port()));
    ASSERT_EQ(r.code, 0) << r.err;
    sup.stop();
    const auto e = gp_cli("export --format jsonl --bin-width 10 --store rates.jsonl");
    ASSERT_EQ(e.code, 0) << e.err;
    std::vector<double> means;
    for (const auto& j : lines(e.out))
        if (j["type"] == "summary") means.push_back(j["mean_indicator"].get<double>());
    ASSERT_EQ(means.size(), 4u);
    for (std::size_t i = 1; i < means.size(); ++i) EXPECT_GT(means[i - 1], means[i]);
}
