#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "gp/imaging.hpp"
#include "gp/protocol.hpp"

namespace gp {

// ---- participation indicator ----

struct IndicatorParams {
    double window_s = 60;
    double c_ref = 5;
    std::map<int, double> weights;  // class id -> weight in (0, 1]; missing classes weigh 1

    double weight(int class_id) const;
    void validate() const;
};

/// An ingested event as the supervisor and its store see it.
struct StoredEvent {
    std::uint32_t learner = 0;
    std::uint64_t timestamp_ms = 0;
    std::uint32_t frame = 0;
    int class_id = 0;
    double confidence = 0;  // quantised to 1e-4 on the wire

    friend bool operator==(const StoredEvent&, const StoredEvent&) = default;
};

/// min(1, sum of w(class) * confidence over events in (t - W, t], / C_ref)
double indicator(std::span<const StoredEvent> events, double t_ms, const IndicatorParams& p);

struct ParticipationSeries {
    std::uint32_t learner = 0;
    double bin_width_s = 10;
    std::vector<double> values;  // bin k evaluated at t = (k + 1) * bin width

    double mean() const;
    friend bool operator==(const ParticipationSeries&, const ParticipationSeries&) = default;
};

/// ceil(span / bin width) bins, at least one.
ParticipationSeries series(std::uint32_t learner, std::span<const StoredEvent> events, double span_s,
                           double bin_width_s, const IndicatorParams& p);

// ---- learner sessions ----

struct LearnerSession {
    std::uint32_t id = 0;
    std::string name;
    bool connected = false;
    std::int64_t last_seen_ms = 0;  // supervisor clock
    std::vector<StoredEvent> events;
    std::set<std::uint32_t> frames;  // for duplicate detection
};

enum class IngestOutcome { accepted, duplicate, unknown_learner, stale_timestamp };

using SessionState = std::map<std::uint32_t, LearnerSession>;

/// Classifies e against the learner's log without changing anything.
IngestOutcome check_event(const SessionState& s, const StoredEvent& e);
/// check_event, and appends e when accepted.
IngestOutcome ingest_event(SessionState& s, const StoredEvent& e);

// ---- store ----

/// Append-only JSON lines, one event object per line.
class EventStore {
public:
    /// Opens for appending, creating the file; throws gp::Error when unwritable.
    explicit EventStore(const std::filesystem::path& path);
    ~EventStore();
    EventStore(const EventStore&) = delete;
    EventStore& operator=(const EventStore&) = delete;

    /// Writes and flushes one line; throws gp::Error on failure.
    void append(const StoredEvent& e);
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    std::FILE* file_ = nullptr;
};

std::string store_line(const StoredEvent& e);
/// Throws gp::Error naming the line for malformed records.
std::vector<StoredEvent> load_store(const std::filesystem::path& path);

/// Events grouped per learner in log order.
std::map<std::uint32_t, std::vector<StoredEvent>> by_learner(std::span<const StoredEvent> events);

// ---- export ----

enum class ExportFormat { csv, jsonl };
ExportFormat parse_export_format(std::string_view s);

/// Session span is the latest timestamp in the store. Output is ordered by
/// learner id, then time.
std::string export_store(std::span<const StoredEvent> events, ExportFormat f, double bin_width_s,
                         const IndicatorParams& p);

// ---- supervisor ----

struct SupervisorConfig {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;  // 0 picks a free port
    std::filesystem::path store = "events.jsonl";
    IndicatorParams indicator;
    double heartbeat_interval_s = 5;
    int missed_heartbeats = 3;
};

class Supervisor {
public:
    /// Binds and opens the store; both failures throw gp::Error.
    explicit Supervisor(SupervisorConfig cfg);
    ~Supervisor();
    Supervisor(const Supervisor&) = delete;
    Supervisor& operator=(const Supervisor&) = delete;

    std::uint16_t port() const { return port_; }

    /// Serves on a background thread until stop().
    void start();
    /// Serves on the calling thread until stop() (from another thread or a signal handler).
    void serve();
    void stop();

    SessionState snapshot() const;
    /// Series computed from the live in-memory logs.
    std::map<std::uint32_t, ParticipationSeries> live_series(double span_s, double bin_width_s) const;

private:
    void handle(int fd);
    void watchdog();
    std::int64_t now_ms() const;

    SupervisorConfig cfg_;
    int listen_fd_ = -1;
    int wake_pipe_[2] = {-1, -1};
    std::uint16_t port_ = 0;
    std::unique_ptr<EventStore> store_;

    mutable std::mutex mu_;  // guards state_ and store_ appends
    SessionState state_;

    std::atomic<bool> stopping_{false};
    std::thread server_thread_;
    std::mutex conn_mu_;
    std::vector<std::thread> conn_threads_;
    std::set<int> conn_fds_;
};

// ---- client ----

class LearnerClient {
public:
    /// Throws gp::Error on connection failure.
    LearnerClient(const std::string& host, std::uint16_t port);
    ~LearnerClient();
    LearnerClient(const LearnerClient&) = delete;
    LearnerClient& operator=(const LearnerClient&) = delete;

    void send(const wire::Message& m);
    /// Blocks for the next message; throws gp::Error on EOF or a decode error.
    wire::Message receive();
    /// send, then receive the reply.
    wire::Message request(const wire::Message& m);

    /// HELLO; throws unless HELLO_ACK comes back for the same learner.
    void hello(std::uint32_t session, std::uint32_t learner, const std::string& name);
    void close();

private:
    int fd_ = -1;
};

/// Reads exactly one framed message from fd. Returns nullopt on clean EOF
/// before the first byte; throws gp::Error on decode errors or mid-message EOF.
std::optional<wire::Message> read_message(int fd);
void write_message(int fd, const wire::Message& m);

// ---- simulated learners ----

struct EventSchedule {
    std::uint32_t learner = 0;
    std::string name;
    std::vector<StoredEvent> events;  // timestamps nondecreasing
};

/// round(rate * duration / 600) events at seeded uniform times in [0, duration),
/// random classes 1..3 and confidences in [0.6, 1].
EventSchedule rate_schedule(std::uint32_t learner, double events_per_10min, double duration_s, std::uint64_t seed);

/// Pipeline JSONL output (one event per line) grouped into per-learner schedules.
std::vector<EventSchedule> schedules_from_jsonl(const std::string& text);

struct SimulationReport {
    std::size_t acks = 0;
    std::size_t errors = 0;
};

/// One client thread per schedule; each sends HELLO, its events (EVENT then
/// wait for the reply) with a HEARTBEAT every heartbeat_every events, then BYE.
/// Throws gp::Error when a connection is refused.
SimulationReport simulate_learners(std::span<const EventSchedule> schedules, const std::string& host,
                                   std::uint16_t port, std::uint32_t session = 1, int heartbeat_every = 10);

}  // namespace gp
