// gp: command-line front end for the gesture participation toolkit.

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gp/cascade.hpp"
#include "gp/codebook.hpp"
#include "gp/config.hpp"
#include "gp/cpdh.hpp"
#include "gp/pipeline.hpp"
#include "gp/pnm.hpp"
#include "gp/synth.hpp"
#include "gp/telemetry.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gp;

namespace {

// Configuration problems are usage errors (exit 1); everything else that goes
// wrong while doing the work is a runtime error (exit 2).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_text(const std::string& path) {
    if (path == "-") {
        std::ostringstream ss;
        ss << std::cin.rdbuf();
        return ss.str();
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Writes to -o FILE, or stdout when no file was given.
void emit(const std::string& out_path, const std::string& data) {
    if (out_path.empty() || out_path == "-") {
        std::cout << data << std::flush;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out || !(out << data)) throw Error("cannot write " + out_path);
}

std::vector<Frame> read_frames(const fs::path& dir, std::size_t limit) {
    DirectoryFrameSource src(dir);
    std::vector<Frame> frames;
    while (frames.size() < limit) {
        auto f = src.next();
        if (!f) break;
        frames.push_back(std::move(*f));
    }
    if (frames.empty()) throw Error("no frame_NNNNNN.ppm files in " + dir.string());
    return frames;
}

GrayImage read_gray_any(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    char magic[2] = {};
    in.read(magic, 2);
    if (magic[0] == 'P' && magic[1] == '6') return to_gray(read_ppm(p));
    return read_pgm(p);
}

std::vector<GrayImage> read_patch_dir(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw Error("not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".pgm") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<GrayImage> out;
    for (const auto& f : files) out.push_back(read_pgm(f));
    return out;
}

CascadeModel cascade_or_synthetic(const fs::path& path, const char* kind) {
    if (!path.empty()) return load_cascade(path);
    std::cerr << "gp: no " << kind << " cascade configured, training the synthetic one\n";
    return synthetic_cascade(kind, 7);
}

std::pair<std::string, std::uint16_t> parse_address(const std::string& s) {
    const auto colon = s.rfind(':');
    if (colon == std::string::npos) throw UsageError("expected HOST:PORT, got '" + s + "'");
    const std::string port = s.substr(colon + 1);
    char* end = nullptr;
    const long p = std::strtol(port.c_str(), &end, 10);
    if (port.empty() || *end || p < 1 || p > 65535) throw UsageError("bad port in '" + s + "'");
    return {s.substr(0, colon), static_cast<std::uint16_t>(p)};
}

json event_json(const GestureEvent& e) {
    return {{"learner", e.learner_id}, {"frame", e.frame},         {"timestamp_ms", e.timestamp_ms},
            {"class", e.class_id},     {"class_name", e.class_name}, {"confidence", e.confidence}};
}

json rect_json(const Rect& r) { return {r.x, r.y, r.w, r.h}; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hand-gesture participation toolkit: background modelling, detection, tracking, "
                 "shape classification and learner telemetry."};
    app.fallthrough();
    std::string config_path;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "Config file (key=value; default: $GP_CONFIG)");
    app.add_option("--set", overrides, "Override one config key, KEY=VALUE (repeatable; wins over the file)");
    std::string keys_help = "Config keys:";
    for (const auto& k : config_keys()) keys_help += "\n  " + k;
    app.footer(keys_help);

    // bg-train
    auto* bg_train = app.add_subcommand("bg-train", "Train and prune a codebook background model from frames");
    std::string bgt_frames, bgt_out;
    std::size_t bgt_count = 100;
    bg_train->add_option("--frames", bgt_frames, "Directory of frame_NNNNNN.ppm")->required();
    bg_train->add_option("-n,--count", bgt_count, "Use at most this many leading frames")->check(CLI::PositiveNumber);
    bg_train->add_option("-o,--output", bgt_out, "Model file")->required();

    // bg-subtract
    auto* bg_sub = app.add_subcommand("bg-subtract", "Foreground mask of one frame against a background model");
    std::string bgs_model, bgs_frame, bgs_out;
    bg_sub->add_option("--model", bgs_model, "Codebook model file")->required();
    bg_sub->add_option("--frame", bgs_frame, "PPM frame")->required();
    bg_sub->add_option("-o,--output", bgs_out, "Output mask PGM")->required();

    // cascade-train
    auto* c_train = app.add_subcommand("cascade-train", "Train a toy Haar cascade");
    std::string ct_synth, ct_pos, ct_neg, ct_out, ct_label;
    int ct_stages = 10;
    double ct_fpr = 0.5;
    std::uint64_t ct_seed = 7;
    c_train->add_option("--synthetic", ct_synth, "Built-in synthetic recipe")->check(CLI::IsMember({"hand", "face"}));
    c_train->add_option("--pos", ct_pos, "Directory of positive PGM patches");
    c_train->add_option("--neg", ct_neg, "Directory of negative PGM patches");
    c_train->add_option("--stages", ct_stages, "Maximum stages (directory training)")->check(CLI::PositiveNumber);
    c_train->add_option("--stage-fpr", ct_fpr, "Per-stage false-positive target (directory training)");
    c_train->add_option("--seed", ct_seed, "Training seed");
    c_train->add_option("--label", ct_label, "Label stored in the cascade file");
    c_train->add_option("-o,--output", ct_out, "Cascade file")->required();

    // cascade-detect
    auto* c_detect = app.add_subcommand("cascade-detect", "Run a cascade over an image; one JSON rect per line");
    std::string cd_cascade, cd_synth, cd_image;
    c_detect->add_option("--cascade", cd_cascade, "Cascade file");
    c_detect->add_option("--synthetic", cd_synth, "Use the synthetic cascade instead")
        ->check(CLI::IsMember({"hand", "face"}));
    c_detect->add_option("--image", cd_image, "PPM or PGM image")->required();

    // gallery-build
    auto* g_build = app.add_subcommand("gallery-build", "Build a CPDH gallery");
    bool gb_synth = false;
    std::string gb_dir, gb_out;
    g_build->add_flag("--synthetic", gb_synth, "Rasterized synthetic poses");
    g_build->add_option("--dir", gb_dir, "Directory of <id>_<NAME>/ subdirectories holding mask PGMs");
    g_build->add_option("-o,--output", gb_out, "Gallery file")->required();

    // classify
    auto* cls = app.add_subcommand("classify", "Classify the largest shape in a mask PGM");
    std::string cl_mask;
    cls->add_option("--mask", cl_mask, "Mask PGM (nonzero = object)")->required();

    // synth
    auto* synth = app.add_subcommand("synth", "Render a scene script to frames plus ground truth");
    std::string sy_script, sy_out;
    bool sy_masks = false;
    synth->add_option("--script", sy_script, "Scene script ('-' for stdin)")->required();
    synth->add_option("-o,--output", sy_out, "Output directory")->required();
    synth->add_flag("--masks", sy_masks, "Also write truth_NNNNNN.pgm hand masks");

    // run
    auto* run = app.add_subcommand("run", "Full pipeline over frames; events as JSONL on stdout");
    std::string rn_frames, rn_script, rn_bg_model, rn_dump, rn_sup;
    std::size_t rn_bg_frames = 20;
    bool rn_no_face = false;
    run->add_option("--frames", rn_frames, "Directory of frame_NNNNNN.ppm");
    run->add_option("--script", rn_script, "Scene script to render and process instead");
    run->add_option("--bg-frames", rn_bg_frames, "Train the background on this many leading frames")
        ->check(CLI::PositiveNumber);
    run->add_option("--bg-model", rn_bg_model, "Codebook model file instead of training");
    run->add_flag("--no-face", rn_no_face, "Skip face detection; the skin model comes from the hand");
    run->add_option("--dump-stages", rn_dump, "Write per-frame stage PGMs here");
    run->add_option("--supervisor", rn_sup, "Also send events to HOST:PORT");

    // supervise
    auto* sup = app.add_subcommand("supervise", "Run the supervisor service");
    double sv_duration = 0;
    sup->add_option("--duration", sv_duration, "Stop after this many seconds (default: until SIGINT/SIGTERM)");

    // simulate
    auto* sim = app.add_subcommand("simulate", "Replay simulated learners against a supervisor");
    std::string sm_rates = "12,8,4,1", sm_jsonl, sm_addr;
    double sm_duration = 600;
    std::uint64_t sm_seed = 1;
    sim->add_option("--supervisor", sm_addr, "HOST:PORT (default: supervisor.host and supervisor.port)");
    sim->add_option("--rates", sm_rates, "Comma-separated events per 10 min, one learner each");
    sim->add_option("--duration", sm_duration, "Simulated session length in seconds");
    sim->add_option("--seed", sm_seed, "Schedule seed");
    sim->add_option("--from-jsonl", sm_jsonl, "Replay events from a 'run' JSONL file ('-' for stdin)");

    // export
    auto* exp = app.add_subcommand("export", "Export participation series from an event store");
    std::string ex_store, ex_format, ex_out;
    double ex_bin = 0;
    exp->add_option("--store", ex_store, "Event store (default: supervisor.store)");
    exp->add_option("--format", ex_format, "csv or jsonl (default: export.format)")
        ->check(CLI::IsMember({"csv", "jsonl"}));
    exp->add_option("--bin-width", ex_bin, "Bin width in seconds (default: export.bin_width_s)");
    exp->add_option("-o,--output", ex_out, "Output file (default: stdout)");

    auto* dump = app.add_subcommand("dump-config", "Print the effective configuration");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }
    if (app.get_subcommands().empty()) {
        std::cerr << app.help();
        return 1;
    }

    AppConfig cfg;
    try {
        if (config_path.empty())
            if (const char* env = std::getenv("GP_CONFIG"); env && *env) config_path = env;
        if (!config_path.empty()) cfg = load_config(config_path);
        for (const auto& o : overrides) apply_setting(cfg, o);
        cfg.validate();
    } catch (const Error& e) {
        std::cerr << "gp: " << e.what() << "\n";
        return 1;
    }
    cfg.supervisor.indicator = cfg.indicator;

    try {
        if (bg_train->parsed()) {
            const auto frames = read_frames(bgt_frames, bgt_count);
            const auto model = prune(train(frames, cfg.pipeline.codebook));
            save_codebook(bgt_out, model);
            std::cerr << "gp: trained on " << frames.size() << " frames, " << model.total_codewords()
                      << " codewords\n";
        } else if (bg_sub->parsed()) {
            const auto model = load_codebook(bgs_model, cfg.pipeline.codebook);
            write_pgm(bgs_out, subtract(model, read_ppm(bgs_frame)));
        } else if (c_train->parsed()) {
            CascadeModel m;
            if (!ct_synth.empty()) {
                if (!ct_pos.empty() || !ct_neg.empty()) throw UsageError("--synthetic excludes --pos/--neg");
                m = synthetic_cascade(ct_synth, ct_seed);
            } else {
                if (ct_pos.empty() || ct_neg.empty()) throw UsageError("need --synthetic, or both --pos and --neg");
                ToyTrainOptions opts;
                opts.seed = ct_seed;
                opts.label = ct_label;
                m = train_toy_cascade(read_patch_dir(ct_pos), read_patch_dir(ct_neg), ct_stages, ct_fpr, opts);
            }
            if (!ct_label.empty()) m.label = ct_label;
            save_cascade(ct_out, m);
            std::cerr << "gp: " << m.stages.size() << " stages\n";
        } else if (c_detect->parsed()) {
            if (cd_cascade.empty() == cd_synth.empty()) throw UsageError("give exactly one of --cascade, --synthetic");
            const CascadeModel m = cd_synth.empty() ? load_cascade(cd_cascade) : synthetic_cascade(cd_synth, 7);
            const DetectParams& dp = cd_synth == "face" ? cfg.pipeline.face_detect : cfg.pipeline.hand_detect;
            for (const auto& d : detect_scored(m, read_gray_any(cd_image), dp))
                std::cout << json{{"rect", rect_json(d.rect)}, {"neighbors", d.count}}.dump() << "\n";
        } else if (g_build->parsed()) {
            if (gb_synth == !gb_dir.empty()) throw UsageError("give exactly one of --synthetic, --dir");
            Gallery g;
            if (gb_synth) {
                g = synthetic_gallery(cfg.pipeline.n_rho, cfg.pipeline.n_theta);
            } else {
                g.n_rho = cfg.pipeline.n_rho;
                g.n_theta = cfg.pipeline.n_theta;
                std::vector<fs::path> dirs;
                for (const auto& e : fs::directory_iterator(gb_dir))
                    if (e.is_directory()) dirs.push_back(e.path());
                std::sort(dirs.begin(), dirs.end());
                for (const auto& d : dirs) {
                    const std::string n = d.filename().string();
                    const auto us = n.find('_');
                    if (us == std::string::npos || us == 0) throw Error("class directory must be <id>_<NAME>: " + n);
                    GestureClass c;
                    c.id = std::stoi(n.substr(0, us));
                    c.name = n.substr(us + 1);
                    std::vector<fs::path> files;
                    for (const auto& f : fs::directory_iterator(d))
                        if (f.path().extension() == ".pgm") files.push_back(f.path());
                    std::sort(files.begin(), files.end());
                    for (const auto& f : files) {
                        auto desc = describe_mask(read_mask(f), g.n_rho, g.n_theta);
                        if (!desc) throw Error("no usable shape in " + f.string());
                        c.templates.push_back(std::move(*desc));
                    }
                    g.classes.push_back(std::move(c));
                }
            }
            g.validate();
            save_gallery(gb_out, g);
        } else if (cls->parsed()) {
            const Gallery g = cfg.pipeline.gallery.empty()
                                  ? synthetic_gallery(cfg.pipeline.n_rho, cfg.pipeline.n_theta)
                                  : load_gallery(cfg.pipeline.gallery);
            const auto desc = describe_mask(read_mask(cl_mask), g.n_rho, g.n_theta);
            if (!desc) throw Error("no usable shape in " + cl_mask);
            const Classification c = classify(*desc, g, cfg.pipeline.tau, cfg.pipeline.allow_mirror);
            const GestureClass* gc = g.find(c.class_id);
            std::cout << json{{"class", c.class_id},
                              {"class_name", gc ? gc->name : "UNKNOWN"},
                              {"confidence", c.confidence},
                              {"distance", c.distance}}
                             .dump()
                      << "\n";
        } else if (synth->parsed()) {
            const SynthSequence seq = synth_sequence(parse_scene_script(read_text(sy_script)));
            fs::create_directories(sy_out);
            std::ofstream truth(fs::path(sy_out) / "truth.jsonl");
            for (std::size_t i = 0; i < seq.frames.size(); ++i) {
                write_ppm(fs::path(sy_out) / frame_file_name(i + 1), seq.frames[i]);
                const FrameTruth& t = seq.truth[i];
                json j = {{"frame", i},
                          {"pose", t.pose ? json(pose_name(*t.pose)) : json(nullptr)},
                          {"face", t.face ? rect_json(*t.face) : json(nullptr)},
                          {"hand_box", t.hand_box ? rect_json(*t.hand_box) : json(nullptr)}};
                truth << j.dump() << "\n";
                if (sy_masks) {
                    char name[32];
                    std::snprintf(name, sizeof name, "truth_%06zu.pgm", i + 1);
                    write_pgm(fs::path(sy_out) / name, t.hand);
                }
            }
            if (!truth) throw Error("cannot write truth.jsonl in " + sy_out);
            std::cerr << "gp: wrote " << seq.frames.size() << " frames to " << sy_out << "\n";
        } else if (run->parsed()) {
            if (rn_frames.empty() == rn_script.empty()) throw UsageError("give exactly one of --frames, --script");
            std::unique_ptr<FrameSource> src;
            std::vector<Frame> bg;
            if (!rn_script.empty()) {
                SynthSequence seq = synth_sequence(parse_scene_script(read_text(rn_script)));
                if (rn_bg_model.empty())
                    bg.assign(seq.frames.begin(),
                              seq.frames.begin() + static_cast<std::ptrdiff_t>(std::min(rn_bg_frames, seq.frames.size())));
                src = std::make_unique<VectorFrameSource>(std::move(seq.frames));
            } else {
                if (rn_bg_model.empty()) bg = read_frames(rn_frames, rn_bg_frames);
                src = std::make_unique<DirectoryFrameSource>(rn_frames);
            }
            PipelineModels models;
            models.background = rn_bg_model.empty() ? prune(train(bg, cfg.pipeline.codebook))
                                                     : load_codebook(rn_bg_model, cfg.pipeline.codebook);
            bg.clear();
            models.hand = cascade_or_synthetic(cfg.pipeline.hand_cascade, "hand");
            if (!rn_no_face) models.face = cascade_or_synthetic(cfg.pipeline.face_cascade, "face");
            models.gallery = cfg.pipeline.gallery.empty() ? synthetic_gallery(cfg.pipeline.n_rho, cfg.pipeline.n_theta)
                                                          : load_gallery(cfg.pipeline.gallery);

            std::optional<LearnerClient> client;
            if (!rn_sup.empty()) {
                const auto [host, port] = parse_address(rn_sup);
                client.emplace(host, port);
                client->hello(1, cfg.pipeline.learner_id, "learner" + std::to_string(cfg.pipeline.learner_id));
            }
            std::optional<fs::path> dump_dir;
            if (!rn_dump.empty()) {
                fs::create_directories(rn_dump);
                dump_dir = rn_dump;
            }
            std::size_t rejected = 0;
            const auto summary = run_session(cfg.pipeline, models, *src, [&](const GestureEvent& e) {
                std::cout << event_json(e).dump() << "\n" << std::flush;
                if (client) {
                    const auto reply = client->request(wire::Event{e.learner_id, e.timestamp_ms, e.frame,
                                                                   static_cast<std::uint8_t>(e.class_id),
                                                                   wire::quantize_confidence(e.confidence)});
                    if (!std::holds_alternative<wire::EventAck>(reply)) ++rejected;
                }
            }, dump_dir);
            if (client) client->send(wire::Bye{});
            char line[160];
            std::snprintf(line, sizeof line, "gp: %llu frames, %llu events, mean latency %.2f ms (%.1f fps)\n",
                          static_cast<unsigned long long>(summary.frames),
                          static_cast<unsigned long long>(summary.events), summary.mean_latency_ms, summary.fps());
            std::cerr << line;
            if (rejected) throw Error(std::to_string(rejected) + " events were rejected by the supervisor");
        } else if (sup->parsed()) {
            if (sv_duration < 0) throw UsageError("--duration must be >= 0");
            // Block the signals before any thread exists so only sigwait sees them.
            sigset_t sigs;
            sigemptyset(&sigs);
            sigaddset(&sigs, SIGINT);
            sigaddset(&sigs, SIGTERM);
            pthread_sigmask(SIG_BLOCK, &sigs, nullptr);
            Supervisor s(cfg.supervisor);
            s.start();
            std::cerr << "gp: listening on " << cfg.supervisor.host << ":" << s.port() << ", store "
                      << cfg.supervisor.store.string() << "\n";
            if (sv_duration > 0) {
                timespec ts{};
                ts.tv_sec = static_cast<time_t>(sv_duration);
                ts.tv_nsec = static_cast<long>((sv_duration - static_cast<double>(ts.tv_sec)) * 1e9);
                sigtimedwait(&sigs, nullptr, &ts);
            } else {
                int sig = 0;
                sigwait(&sigs, &sig);
            }
            s.stop();
            const auto snap = s.snapshot();
            std::size_t events = 0;
            for (const auto& [id, l] : snap) events += l.events.size();
            std::cerr << "gp: stopped; " << snap.size() << " learners, " << events << " events\n";
        } else if (sim->parsed()) {
            std::string host = cfg.supervisor.host;
            std::uint16_t port = cfg.supervisor.port;
            if (!sm_addr.empty()) std::tie(host, port) = parse_address(sm_addr);
            if (port == 0) throw UsageError("no supervisor port: use --supervisor or supervisor.port");
            std::vector<EventSchedule> schedules;
            if (!sm_jsonl.empty()) {
                schedules = schedules_from_jsonl(read_text(sm_jsonl));
            } else {
                std::stringstream ss(sm_rates);
                std::string item;
                for (std::uint32_t id = 1; std::getline(ss, item, ','); ++id) {
                    double rate = 0;
                    try {
                        std::size_t used = 0;
                        rate = std::stod(item, &used);
                        if (used != item.size()) throw std::invalid_argument(item);
                    } catch (const std::exception&) {
                        throw UsageError("bad rate '" + item + "'");
                    }
                    schedules.push_back(rate_schedule(id, rate, sm_duration, sm_seed));
                }
            }
            const auto rep = simulate_learners(schedules, host, port);
            std::cerr << "gp: " << schedules.size() << " learners, " << rep.acks << " acks, " << rep.errors
                      << " errors\n";
            if (rep.errors) return 2;
        } else if (exp->parsed()) {
            const fs::path store = ex_store.empty() ? cfg.supervisor.store : fs::path(ex_store);
            const ExportFormat f = ex_format.empty() ? cfg.export_format : parse_export_format(ex_format);
            const double bw = ex_bin > 0 ? ex_bin : cfg.export_bin_width_s;
            if (ex_bin < 0) throw UsageError("--bin-width must be > 0");
            // A store that was never written to is an empty session, not an error.
            const auto events = fs::exists(store) ? load_store(store) : std::vector<StoredEvent>{};
            emit(ex_out, export_store(events, f, bw, cfg.indicator));
        } else if (dump->parsed()) {
            std::cout << dump_config(cfg);
        }
    } catch (const UsageError& e) {
        std::cerr << "gp: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "gp: error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
