#include <algorithm>
#include <cmath>

#include "gp/telemetry.hpp"

namespace gp {

double IndicatorParams::weight(int class_id) const {
    const auto it = weights.find(class_id);
    return it == weights.end() ? 1.0 : it->second;
}

void IndicatorParams::validate() const {
    if (!(window_s > 0)) throw Error("indicator: window_s must be > 0");
    if (!(c_ref >= 1)) throw Error("indicator: c_ref must be >= 1");
    for (const auto& [cls, w] : weights)
        if (!(w > 0 && w <= 1)) throw Error("indicator: weight of class " + std::to_string(cls) + " must lie in (0, 1]");
}

double indicator(std::span<const StoredEvent> events, double t_ms, const IndicatorParams& p) {
    const double lo = t_ms - p.window_s * 1000.0;
    double sum = 0;
    for (const auto& e : events) {
        const auto ts = static_cast<double>(e.timestamp_ms);
        if (ts > lo && ts <= t_ms) sum += p.weight(e.class_id) * e.confidence;
    }
    return std::clamp(sum / p.c_ref, 0.0, 1.0);
}

double ParticipationSeries::mean() const {
    if (values.empty()) return 0;
    double s = 0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
}

ParticipationSeries series(std::uint32_t learner, std::span<const StoredEvent> events, double span_s,
                           double bin_width_s, const IndicatorParams& p) {
    if (!(bin_width_s > 0)) throw Error("series: bin width must be > 0");
    if (!(span_s >= 0)) throw Error("series: span must be >= 0");
    ParticipationSeries out;
    out.learner = learner;
    out.bin_width_s = bin_width_s;
    const auto bins = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(span_s / bin_width_s - 1e-9)));
    out.values.reserve(bins);
    for (std::size_t k = 0; k < bins; ++k)
        out.values.push_back(indicator(events, static_cast<double>(k + 1) * bin_width_s * 1000.0, p));
    return out;
}

IngestOutcome check_event(const SessionState& s, const StoredEvent& e) {
    const auto it = s.find(e.learner);
    if (it == s.end()) return IngestOutcome::unknown_learner;
    const LearnerSession& ls = it->second;
    if (ls.frames.count(e.frame)) return IngestOutcome::duplicate;
    if (!ls.events.empty() && e.timestamp_ms < ls.events.back().timestamp_ms) return IngestOutcome::stale_timestamp;
    return IngestOutcome::accepted;
}

IngestOutcome ingest_event(SessionState& s, const StoredEvent& e) {
    const IngestOutcome r = check_event(s, e);
    if (r == IngestOutcome::accepted) {
        LearnerSession& ls = s.at(e.learner);
        ls.events.push_back(e);
        ls.frames.insert(e.frame);
    }
    return r;
}

std::map<std::uint32_t, std::vector<StoredEvent>> by_learner(std::span<const StoredEvent> events) {
    std::map<std::uint32_t, std::vector<StoredEvent>> out;
    for (const auto& e : events) out[e.learner].push_back(e);
    return out;
}

}  // namespace gp
