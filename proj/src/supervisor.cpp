#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>

#include "gp/telemetry.hpp"

namespace gp {

namespace {

std::string sys_error(const std::string& what) { return what + ": " + std::strerror(errno); }

// Reads exactly n bytes. Returns the count read before EOF (n on success).
std::size_t read_full(int fd, std::uint8_t* buf, std::size_t n) {
    std::size_t got = 0;
    while (got < n) {
        const ssize_t r = ::recv(fd, buf + got, n - got, 0);
        if (r == 0) break;
        if (r < 0) {
            if (errno == EINTR) continue;
            if (errno == ECONNRESET) break;
            throw Error(sys_error("recv"));
        }
        got += static_cast<std::size_t>(r);
    }
    return got;
}

void write_full(int fd, const std::uint8_t* buf, std::size_t n) {
    while (n > 0) {
        const ssize_t w = ::send(fd, buf, n, MSG_NOSIGNAL);
        if (w < 0) {
            if (errno == EINTR) continue;
            throw Error(sys_error("send"));
        }
        buf += w;
        n -= static_cast<std::size_t>(w);
    }
}

addrinfo* resolve(const std::string& host, std::uint16_t port, bool passive) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    if (passive) hints.ai_flags = AI_PASSIVE;
    addrinfo* res = nullptr;
    const int rc = ::getaddrinfo(host.empty() ? nullptr : host.c_str(), std::to_string(port).c_str(), &hints, &res);
    if (rc != 0) throw Error("cannot resolve " + host + ": " + ::gai_strerror(rc));
    return res;
}

StoredEvent to_stored(const wire::Event& e) {
    return StoredEvent{e.learner, e.timestamp_ms, e.frame, e.class_id, wire::confidence_value(e.confidence)};
}

}  // namespace

std::optional<wire::Message> read_message(int fd) {
    std::uint8_t header[wire::kHeaderSize];
    const std::size_t got = read_full(fd, header, sizeof header);
    if (got == 0) return std::nullopt;
    if (got < sizeof header) throw Error("connection closed inside a message header");
    const auto len = wire::peek_payload_length(header);
    if (const auto* e = std::get_if<wire::DecodeError>(&len))
        throw Error(std::string("protocol: ") + wire::kind_name(e->kind) + " (" + e->field + ")");
    std::vector<std::uint8_t> buf(header, header + sizeof header);
    buf.resize(sizeof header + std::get<std::size_t>(len));
    if (read_full(fd, buf.data() + sizeof header, buf.size() - sizeof header) != buf.size() - sizeof header)
        throw Error("connection closed inside a message payload");
    auto d = wire::decode(buf);
    if (const auto* e = std::get_if<wire::DecodeError>(&d))
        throw Error(std::string("protocol: ") + wire::kind_name(e->kind) + " (" + e->field + ")");
    return std::move(std::get<wire::Decoded>(d).message);
}

void write_message(int fd, const wire::Message& m) {
    const auto bytes = wire::encode(m);
    write_full(fd, bytes.data(), bytes.size());
}

// ---- supervisor ----

Supervisor::Supervisor(SupervisorConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.indicator.validate();
    if (!(cfg_.heartbeat_interval_s > 0) || cfg_.missed_heartbeats < 1)
        throw Error("supervisor: heartbeat interval must be > 0 and missed heartbeats >= 1");
    store_ = std::make_unique<EventStore>(cfg_.store);

    addrinfo* res = resolve(cfg_.host, cfg_.port, true);
    std::string last_error = "no address";
    for (addrinfo* a = res; a; a = a->ai_next) {
        const int fd = ::socket(a->ai_family, a->ai_socktype | SOCK_CLOEXEC, a->ai_protocol);
        if (fd < 0) continue;
        const int one = 1;
        ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        if (::bind(fd, a->ai_addr, a->ai_addrlen) == 0 && ::listen(fd, 64) == 0) {
            listen_fd_ = fd;
            break;
        }
        last_error = std::strerror(errno);
        ::close(fd);
    }
    ::freeaddrinfo(res);
    if (listen_fd_ < 0) throw Error("cannot bind " + cfg_.host + ":" + std::to_string(cfg_.port) + ": " + last_error);

    sockaddr_storage addr{};
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.ss_family == AF_INET6 ? reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port
                                             : reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
    if (::pipe2(wake_pipe_, O_CLOEXEC) != 0) throw Error(sys_error("pipe"));
}

Supervisor::~Supervisor() {
    stop();
    if (listen_fd_ >= 0) ::close(listen_fd_);
    for (int fd : wake_pipe_)
        if (fd >= 0) ::close(fd);
}

std::int64_t Supervisor::now_ms() const {
    using namespace std::chrono;
    return duration_cast<milliseconds>(steady_clock::now().time_since_epoch()).count();
}

void Supervisor::start() { server_thread_ = std::thread([this] { serve(); }); }

void Supervisor::stop() {
    if (!stopping_.exchange(true)) {
        const char c = 0;
        [[maybe_unused]] auto r = ::write(wake_pipe_[1], &c, 1);
    }
    if (server_thread_.joinable() && server_thread_.get_id() != std::this_thread::get_id()) server_thread_.join();
}

void Supervisor::watchdog() {
    const auto limit = static_cast<std::int64_t>(cfg_.heartbeat_interval_s * 1000.0 * cfg_.missed_heartbeats);
    const std::int64_t now = now_ms();
    std::lock_guard lock(mu_);
    for (auto& [id, ls] : state_)
        if (ls.connected && now - ls.last_seen_ms > limit) ls.connected = false;
}

void Supervisor::serve() {
    const int tick_ms = std::clamp(static_cast<int>(cfg_.heartbeat_interval_s * 1000.0 / 5), 10, 1000);
    while (!stopping_) {
        pollfd fds[2] = {{listen_fd_, POLLIN, 0}, {wake_pipe_[0], POLLIN, 0}};
        const int rc = ::poll(fds, 2, tick_ms);
        if (rc < 0 && errno != EINTR) throw Error(sys_error("poll"));
        watchdog();
        if (stopping_ || (fds[1].revents & POLLIN)) break;
        if (rc > 0 && (fds[0].revents & POLLIN)) {
            const int fd = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
            if (fd < 0) continue;
            const int one = 1;
            ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
            std::lock_guard lock(conn_mu_);
            conn_fds_.insert(fd);
            conn_threads_.emplace_back([this, fd] { handle(fd); });
        }
    }
    std::vector<std::thread> threads;
    {
        std::lock_guard lock(conn_mu_);
        for (int fd : conn_fds_) ::shutdown(fd, SHUT_RDWR);
        threads.swap(conn_threads_);
    }
    for (auto& t : threads) t.join();
}

void Supervisor::handle(int fd) {
    std::optional<std::uint32_t> learner;
    auto reply = [fd](const wire::Message& m) {
        try {
            write_message(fd, m);
        } catch (const Error&) {
            // Peer is gone; the read side notices next.
        }
    };
    auto error = [&](wire::ErrorCode code, const std::string& msg) {
        reply(wire::Error{static_cast<std::uint8_t>(code), msg.substr(0, 255)});
    };

    while (!stopping_) {
        std::optional<wire::Message> m;
        try {
            m = read_message(fd);
        } catch (const Error& e) {
            error(wire::ErrorCode::bad_message, e.what());
            break;
        }
        if (!m) break;
        bool done = false;
        std::visit(
            [&](const auto& v) {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, wire::Hello>) {
                    {
                        std::lock_guard lock(mu_);
                        LearnerSession& ls = state_[v.learner];
                        ls.id = v.learner;
                        ls.name = v.name;
                        ls.connected = true;
                        ls.last_seen_ms = now_ms();
                    }
                    learner = v.learner;
                    reply(wire::HelloAck{v.learner});
                } else if constexpr (std::is_same_v<T, wire::Event>) {
                    if (!learner || *learner != v.learner) {
                        error(wire::ErrorCode::unknown_learner, "learner " + std::to_string(v.learner) + " has not said HELLO on this connection");
                        return;
                    }
                    const StoredEvent e = to_stored(v);
                    std::lock_guard lock(mu_);
                    state_[v.learner].last_seen_ms = now_ms();
                    switch (check_event(state_, e)) {
                        case IngestOutcome::accepted:
                            try {
                                store_->append(e);
                            } catch (const Error& ex) {
                                error(wire::ErrorCode::store_failure, ex.what());
                                return;
                            }
                            ingest_event(state_, e);
                            reply(wire::EventAck{v.learner, v.frame});
                            break;
                        case IngestOutcome::duplicate: reply(wire::EventAck{v.learner, v.frame}); break;
                        case IngestOutcome::stale_timestamp:
                            error(wire::ErrorCode::stale_timestamp, "timestamp " + std::to_string(v.timestamp_ms) +
                                                                        " is earlier than the last accepted event");
                            break;
                        case IngestOutcome::unknown_learner:
                            error(wire::ErrorCode::unknown_learner, "unknown learner " + std::to_string(v.learner));
                            break;
                    }
                } else if constexpr (std::is_same_v<T, wire::Heartbeat>) {
                    if (learner) {
                        std::lock_guard lock(mu_);
                        LearnerSession& ls = state_[*learner];
                        ls.last_seen_ms = now_ms();
                        ls.connected = true;
                    }
                } else if constexpr (std::is_same_v<T, wire::Bye>) {
                    done = true;
                } else {
                    error(wire::ErrorCode::bad_message, std::string("unexpected ") + wire::type_name(wire::type_of(*m)));
                }
            },
            *m);
        if (done) break;
    }
    if (learner) {
        std::lock_guard lock(mu_);
        state_[*learner].connected = false;
    }
    std::lock_guard lock(conn_mu_);
    conn_fds_.erase(fd);
    ::close(fd);
}

SessionState Supervisor::snapshot() const {
    std::lock_guard lock(mu_);
    return state_;
}

std::map<std::uint32_t, ParticipationSeries> Supervisor::live_series(double span_s, double bin_width_s) const {
    const SessionState s = snapshot();
    std::map<std::uint32_t, ParticipationSeries> out;
    for (const auto& [id, ls] : s) out[id] = series(id, ls.events, span_s, bin_width_s, cfg_.indicator);
    return out;
}

// ---- client ----

LearnerClient::LearnerClient(const std::string& host, std::uint16_t port) {
    addrinfo* res = resolve(host, port, false);
    std::string last_error = "no address";
    for (addrinfo* a = res; a; a = a->ai_next) {
        const int fd = ::socket(a->ai_family, a->ai_socktype | SOCK_CLOEXEC, a->ai_protocol);
        if (fd < 0) continue;
        if (::connect(fd, a->ai_addr, a->ai_addrlen) == 0) {
            fd_ = fd;
            break;
        }
        last_error = std::strerror(errno);
        ::close(fd);
    }
    ::freeaddrinfo(res);
    if (fd_ < 0) throw Error("cannot connect to " + host + ":" + std::to_string(port) + ": " + last_error);
    const int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

LearnerClient::~LearnerClient() { close(); }

void LearnerClient::close() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
}

void LearnerClient::send(const wire::Message& m) { write_message(fd_, m); }

wire::Message LearnerClient::receive() {
    auto m = read_message(fd_);
    if (!m) throw Error("supervisor closed the connection");
    return std::move(*m);
}

wire::Message LearnerClient::request(const wire::Message& m) {
    send(m);
    return receive();
}

void LearnerClient::hello(std::uint32_t session, std::uint32_t learner, const std::string& name) {
    const auto r = request(wire::Hello{session, learner, name});
    const auto* ack = std::get_if<wire::HelloAck>(&r);
    if (!ack || ack->learner != learner) throw Error("HELLO for learner " + std::to_string(learner) + " was not acknowledged");
}

}  // namespace gp
