#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gp/telemetry.hpp"

namespace gp {

using nlohmann::json;

EventStore::EventStore(const std::filesystem::path& path) : path_(path) {
    file_ = std::fopen(path.c_str(), "ab");
    if (!file_) throw Error("cannot open store " + path.string() + ": " + std::strerror(errno));
}

EventStore::~EventStore() {
    if (file_) std::fclose(file_);
}

std::string store_line(const StoredEvent& e) {
    const json j = {{"learner", e.learner},
                    {"timestamp_ms", e.timestamp_ms},
                    {"frame", e.frame},
                    {"class", e.class_id},
                    {"confidence", e.confidence}};
    return j.dump();
}

void EventStore::append(const StoredEvent& e) {
    const std::string line = store_line(e) + "\n";
    if (std::fwrite(line.data(), 1, line.size(), file_) != line.size() || std::fflush(file_) != 0)
        throw Error("store append failed: " + path_.string() + ": " + std::strerror(errno));
}

std::vector<StoredEvent> load_store(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read store " + path.string());
    std::vector<StoredEvent> out;
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
        if (line.empty()) continue;
        try {
            const json j = json::parse(line);
            StoredEvent e;
            e.learner = j.at("learner").get<std::uint32_t>();
            e.timestamp_ms = j.at("timestamp_ms").get<std::uint64_t>();
            e.frame = j.at("frame").get<std::uint32_t>();
            e.class_id = j.at("class").get<int>();
            e.confidence = j.at("confidence").get<double>();
            if (!(e.confidence >= 0 && e.confidence <= 1)) throw Error("confidence outside [0, 1]");
            out.push_back(e);
        } catch (const std::exception& ex) {
            throw Error(path.string() + " line " + std::to_string(n) + ": " + ex.what());
        }
    }
    return out;
}

ExportFormat parse_export_format(std::string_view s) {
    if (s == "csv") return ExportFormat::csv;
    if (s == "jsonl") return ExportFormat::jsonl;
    throw Error("unknown export format: " + std::string(s));
}

namespace {

std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

}  // namespace

std::string export_store(std::span<const StoredEvent> events, ExportFormat f, double bin_width_s,
                         const IndicatorParams& p) {
    if (!(bin_width_s > 0)) throw Error("export: bin width must be > 0");
    std::uint64_t last = 0;
    for (const auto& e : events) last = std::max(last, e.timestamp_ms);
    const double span_s = static_cast<double>(last) / 1000.0;

    auto groups = by_learner(events);
    for (auto& [id, log] : groups)
        std::stable_sort(log.begin(), log.end(), [](const StoredEvent& a, const StoredEvent& b) {
            return a.timestamp_ms != b.timestamp_ms ? a.timestamp_ms < b.timestamp_ms : a.frame < b.frame;
        });

    std::ostringstream out;
    if (f == ExportFormat::csv) {
        out << "learner_id,bin_start_s,indicator\n";
        for (const auto& [id, log] : groups) {
            const auto s = series(id, log, span_s, bin_width_s, p);
            for (std::size_t k = 0; k < s.values.size(); ++k)
                out << id << ',' << fixed6(static_cast<double>(k) * bin_width_s) << ',' << fixed6(s.values[k]) << '\n';
        }
        return out.str();
    }
    for (const auto& [id, log] : groups) {
        for (const auto& e : log) {
            json j = json::parse(store_line(e));
            j["type"] = "event";
            out << j.dump() << '\n';
        }
        const auto s = series(id, log, span_s, bin_width_s, p);
        const json summary = {{"type", "summary"},
                              {"learner", id},
                              {"events", log.size()},
                              {"bins", s.values.size()},
                              {"bin_width_s", bin_width_s},
                              {"mean_indicator", s.mean()}};
        out << summary.dump() << '\n';
    }
    return out.str();
}

}  // namespace gp
