#include <algorithm>
#include <cmath>
#include <exception>
#include <random>
#include <sstream>

#include <json.hpp>

#include "gp/telemetry.hpp"

namespace gp {

EventSchedule rate_schedule(std::uint32_t learner, double events_per_10min, double duration_s, std::uint64_t seed) {
    if (!(events_per_10min >= 0) || !(duration_s > 0)) throw Error("rate schedule: rate must be >= 0 and duration > 0");
    EventSchedule s;
    s.learner = learner;
    s.name = "learner" + std::to_string(learner);
    std::mt19937_64 rng(seed ^ (std::uint64_t{learner} * 0x9e3779b97f4a7c15ULL));
    const auto n = static_cast<std::size_t>(std::llround(events_per_10min * duration_s / 600.0));
    const auto span_ms = static_cast<std::uint64_t>(duration_s * 1000.0);
    std::uniform_int_distribution<std::uint64_t> when(0, span_ms - 1);
    std::uniform_int_distribution<int> cls(1, 3);
    std::uniform_int_distribution<int> conf(6000, 10000);
    std::vector<std::uint64_t> times(n);
    for (auto& t : times) t = when(rng);
    std::sort(times.begin(), times.end());
    for (std::size_t i = 0; i < n; ++i)
        s.events.push_back(StoredEvent{learner, times[i], static_cast<std::uint32_t>(i), cls(rng), conf(rng) / 10000.0});
    return s;
}

std::vector<EventSchedule> schedules_from_jsonl(const std::string& text) {
    std::map<std::uint32_t, EventSchedule> by_id;
    std::istringstream in(text);
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            if (j.contains("type") && j.at("type") != "event") continue;
            StoredEvent e;
            e.learner = j.at("learner").get<std::uint32_t>();
            e.timestamp_ms = j.at("timestamp_ms").get<std::uint64_t>();
            e.frame = j.at("frame").get<std::uint32_t>();
            e.class_id = j.at("class").get<int>();
            e.confidence = j.at("confidence").get<double>();
            EventSchedule& s = by_id[e.learner];
            s.learner = e.learner;
            if (s.name.empty()) s.name = "learner" + std::to_string(e.learner);
            s.events.push_back(e);
        } catch (const std::exception& ex) {
            throw Error("event line " + std::to_string(n) + ": " + ex.what());
        }
    }
    std::vector<EventSchedule> out;
    for (auto& [id, s] : by_id) out.push_back(std::move(s));
    return out;
}

SimulationReport simulate_learners(std::span<const EventSchedule> schedules, const std::string& host,
                                   std::uint16_t port, std::uint32_t session, int heartbeat_every) {
    if (heartbeat_every < 1) throw Error("heartbeat_every must be >= 1");
    struct Result {
        SimulationReport report;
        std::exception_ptr error;
    };
    std::vector<Result> results(schedules.size());
    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < schedules.size(); ++i)
        threads.emplace_back([&, i] {
            try {
                const EventSchedule& s = schedules[i];
                LearnerClient c(host, port);
                c.hello(session, s.learner, s.name);
                for (std::size_t k = 0; k < s.events.size(); ++k) {
                    const StoredEvent& e = s.events[k];
                    if (k % static_cast<std::size_t>(heartbeat_every) == 0) c.send(wire::Heartbeat{e.timestamp_ms});
                    const auto r = c.request(wire::Event{e.learner, e.timestamp_ms, e.frame,
                                                         static_cast<std::uint8_t>(e.class_id),
                                                         wire::quantize_confidence(e.confidence)});
                    if (std::holds_alternative<wire::EventAck>(r))
                        ++results[i].report.acks;
                    else
                        ++results[i].report.errors;
                }
                c.send(wire::Bye{});
            } catch (...) {
                results[i].error = std::current_exception();
            }
        });
    for (auto& t : threads) t.join();
    SimulationReport total;
    for (const auto& r : results) {
        if (r.error) std::rethrow_exception(r.error);
        total.acks += r.report.acks;
        total.errors += r.report.errors;
    }
    return total;
}

}  // namespace gp
