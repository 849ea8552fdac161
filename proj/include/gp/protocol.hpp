#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace gp::wire {

inline constexpr std::uint32_t kMagic = 0x47505250;  // "GPRP"
inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::size_t kHeaderSize = 8;
inline constexpr std::size_t kMaxPayload = 4096;

enum class Type : std::uint8_t { hello = 1, hello_ack, event, event_ack, heartbeat, bye, error };

struct Hello {
    std::uint32_t session = 0;
    std::uint32_t learner = 0;
    std::string name;  // at most 255 bytes of UTF-8
    friend bool operator==(const Hello&, const Hello&) = default;
};

struct HelloAck {
    std::uint32_t learner = 0;
    friend bool operator==(const HelloAck&, const HelloAck&) = default;
};

struct Event {
    std::uint32_t learner = 0;
    std::uint64_t timestamp_ms = 0;
    std::uint32_t frame = 0;
    std::uint8_t class_id = 0;
    std::uint16_t confidence = 0;  // value x 10000, at most 10000
    friend bool operator==(const Event&, const Event&) = default;
};

struct EventAck {
    std::uint32_t learner = 0;
    std::uint32_t frame = 0;
    friend bool operator==(const EventAck&, const EventAck&) = default;
};

struct Heartbeat {
    std::uint64_t timestamp_ms = 0;
    friend bool operator==(const Heartbeat&, const Heartbeat&) = default;
};

struct Bye {
    friend bool operator==(const Bye&, const Bye&) = default;
};

enum class ErrorCode : std::uint8_t { unknown_learner = 1, stale_timestamp = 2, bad_message = 3, store_failure = 4 };

struct Error {
    std::uint8_t code = 0;
    std::string message;  // at most 255 bytes of UTF-8
    friend bool operator==(const Error&, const Error&) = default;
};

using Message = std::variant<Hello, HelloAck, Event, EventAck, Heartbeat, Bye, Error>;

Type type_of(const Message& m);
const char* type_name(Type t);

std::uint16_t quantize_confidence(double c);  // round(c * 10000), c clamped to [0, 1]
inline double confidence_value(std::uint16_t q) { return q / 10000.0; }

/// Throws std::invalid_argument for messages that have no valid encoding
/// (strings over 255 bytes or invalid UTF-8, confidence over 10000).
std::vector<std::uint8_t> encode(const Message& m);

enum class DecodeErrorKind { bad_magic, bad_version, bad_type, truncated, oversize, bad_payload };
const char* kind_name(DecodeErrorKind k);

struct DecodeError {
    DecodeErrorKind kind;
    std::string field;  // offending field
    friend bool operator==(const DecodeError&, const DecodeError&) = default;
};

struct Decoded {
    Message message;
    std::size_t consumed = 0;  // header + payload
};

/// Decodes the first message of buf. Trailing bytes after it are left for the caller.
std::variant<Decoded, DecodeError> decode(std::span<const std::uint8_t> buf);

/// Payload length announced by a header, or an error for bad magic/version/type/oversize.
std::variant<std::size_t, DecodeError> peek_payload_length(std::span<const std::uint8_t> header);

bool valid_utf8(std::string_view s);

}  // namespace gp::wire
