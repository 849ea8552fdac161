#include "gp/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gp::wire {

namespace {

class Writer {
public:
    void u8(std::uint8_t v) { out.push_back(v); }
    void u16(std::uint16_t v) { be(v, 2); }
    void u32(std::uint32_t v) { be(v, 4); }
    void u64(std::uint64_t v) { be(v, 8); }
    void str8(const std::string& s, const char* field) {
        if (s.size() > 255) throw std::invalid_argument(std::string(field) + " longer than 255 bytes");
        if (!valid_utf8(s)) throw std::invalid_argument(std::string(field) + " is not valid UTF-8");
        u8(static_cast<std::uint8_t>(s.size()));
        out.insert(out.end(), s.begin(), s.end());
    }
    std::vector<std::uint8_t> out;

private:
    void be(std::uint64_t v, int n) {
        for (int i = n - 1; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
};

struct Truncated {
    const char* field;
};
struct BadPayload {
    const char* field;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> b) : buf(b) {}
    std::uint8_t u8(const char* f) { return static_cast<std::uint8_t>(be(1, f)); }
    std::uint16_t u16(const char* f) { return static_cast<std::uint16_t>(be(2, f)); }
    std::uint32_t u32(const char* f) { return static_cast<std::uint32_t>(be(4, f)); }
    std::uint64_t u64(const char* f) { return be(8, f); }
    std::string str8(const char* f) {
        const std::size_t n = u8(f);
        if (buf.size() - pos < n) throw Truncated{f};
        std::string s(reinterpret_cast<const char*>(buf.data() + pos), n);
        pos += n;
        if (!valid_utf8(s)) throw BadPayload{f};
        return s;
    }
    void finish() const {
        if (pos != buf.size()) throw BadPayload{"payload length"};
    }

private:
    std::uint64_t be(std::size_t n, const char* f) {
        if (buf.size() - pos < n) throw Truncated{f};
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < n; ++i) v = (v << 8) | buf[pos + i];
        pos += n;
        return v;
    }
    std::span<const std::uint8_t> buf;
    std::size_t pos = 0;
};

Message decode_payload(Type t, std::span<const std::uint8_t> payload) {
    Reader r(payload);
    Message m;
    switch (t) {
        case Type::hello: {
            Hello h;
            h.session = r.u32("session");
            h.learner = r.u32("learner");
            h.name = r.str8("name");
            m = std::move(h);
            break;
        }
        case Type::hello_ack: m = HelloAck{r.u32("learner")}; break;
        case Type::event: {
            Event e;
            e.learner = r.u32("learner");
            e.timestamp_ms = r.u64("timestamp_ms");
            e.frame = r.u32("frame");
            e.class_id = r.u8("class");
            e.confidence = r.u16("confidence");
            if (e.confidence > 10000) throw BadPayload{"confidence"};
            m = e;
            break;
        }
        case Type::event_ack: {
            EventAck a;
            a.learner = r.u32("learner");
            a.frame = r.u32("frame");
            m = a;
            break;
        }
        case Type::heartbeat: m = Heartbeat{r.u64("timestamp_ms")}; break;
        case Type::bye: m = Bye{}; break;
        case Type::error: {
            Error e;
            e.code = r.u8("code");
            e.message = r.str8("message");
            m = std::move(e);
            break;
        }
    }
    r.finish();
    return m;
}

}  // namespace

Type type_of(const Message& m) { return static_cast<Type>(m.index() + 1); }

const char* type_name(Type t) {
    switch (t) {
        case Type::hello: return "HELLO";
        case Type::hello_ack: return "HELLO_ACK";
        case Type::event: return "EVENT";
        case Type::event_ack: return "EVENT_ACK";
        case Type::heartbeat: return "HEARTBEAT";
        case Type::bye: return "BYE";
        case Type::error: return "ERROR";
    }
    return "?";
}

const char* kind_name(DecodeErrorKind k) {
    switch (k) {
        case DecodeErrorKind::bad_magic: return "bad magic";
        case DecodeErrorKind::bad_version: return "bad version";
        case DecodeErrorKind::bad_type: return "bad type";
        case DecodeErrorKind::truncated: return "truncated payload";
        case DecodeErrorKind::oversize: return "oversize";
        case DecodeErrorKind::bad_payload: return "bad payload";
    }
    return "?";
}

std::uint16_t quantize_confidence(double c) {
    if (!(c >= 0)) c = 0;  // also NaN
    return static_cast<std::uint16_t>(std::lround(std::min(c, 1.0) * 10000.0));
}

bool valid_utf8(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size()) {
        const auto c = static_cast<unsigned char>(s[i]);
        int n;
        std::uint32_t cp;
        if (c < 0x80) {
            ++i;
            continue;
        } else if ((c & 0xE0) == 0xC0) {
            n = 1, cp = c & 0x1F;
        } else if ((c & 0xF0) == 0xE0) {
            n = 2, cp = c & 0x0F;
        } else if ((c & 0xF8) == 0xF0) {
            n = 3, cp = c & 0x07;
        } else {
            return false;
        }
        if (i + static_cast<std::size_t>(n) >= s.size()) return false;
        for (int k = 1; k <= n; ++k) {
            const auto cc = static_cast<unsigned char>(s[i + k]);
            if ((cc & 0xC0) != 0x80) return false;
            cp = (cp << 6) | (cc & 0x3F);
        }
        // Overlong forms, surrogates and values past U+10FFFF.
        if ((n == 1 && cp < 0x80) || (n == 2 && cp < 0x800) || (n == 3 && cp < 0x10000)) return false;
        if ((cp >= 0xD800 && cp <= 0xDFFF) || cp > 0x10FFFF) return false;
        i += static_cast<std::size_t>(n) + 1;
    }
    return true;
}

std::vector<std::uint8_t> encode(const Message& m) {
    Writer p;
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Hello>) {
                p.u32(v.session);
                p.u32(v.learner);
                p.str8(v.name, "name");
            } else if constexpr (std::is_same_v<T, HelloAck>) {
                p.u32(v.learner);
            } else if constexpr (std::is_same_v<T, Event>) {
                if (v.confidence > 10000) throw std::invalid_argument("confidence above 10000");
                p.u32(v.learner);
                p.u64(v.timestamp_ms);
                p.u32(v.frame);
                p.u8(v.class_id);
                p.u16(v.confidence);
            } else if constexpr (std::is_same_v<T, EventAck>) {
                p.u32(v.learner);
                p.u32(v.frame);
            } else if constexpr (std::is_same_v<T, Heartbeat>) {
                p.u64(v.timestamp_ms);
            } else if constexpr (std::is_same_v<T, Error>) {
                p.u8(v.code);
                p.str8(v.message, "message");
            }
        },
        m);
    Writer w;
    w.u32(kMagic);
    w.u8(kVersion);
    w.u8(static_cast<std::uint8_t>(type_of(m)));
    w.u16(static_cast<std::uint16_t>(p.out.size()));
    w.out.insert(w.out.end(), p.out.begin(), p.out.end());
    return w.out;
}

std::variant<std::size_t, DecodeError> peek_payload_length(std::span<const std::uint8_t> h) {
    if (h.size() < kHeaderSize) return DecodeError{DecodeErrorKind::truncated, "header"};
    const std::uint32_t magic = (std::uint32_t{h[0]} << 24) | (std::uint32_t{h[1]} << 16) | (std::uint32_t{h[2]} << 8) | h[3];
    if (magic != kMagic) return DecodeError{DecodeErrorKind::bad_magic, "magic"};
    if (h[4] != kVersion) return DecodeError{DecodeErrorKind::bad_version, "version"};
    if (h[5] < 1 || h[5] > 7) return DecodeError{DecodeErrorKind::bad_type, "type"};
    const std::size_t len = (std::size_t{h[6]} << 8) | h[7];
    if (len > kMaxPayload) return DecodeError{DecodeErrorKind::oversize, "payload length"};
    return len;
}

std::variant<Decoded, DecodeError> decode(std::span<const std::uint8_t> buf) {
    const auto len = peek_payload_length(buf);
    if (const auto* e = std::get_if<DecodeError>(&len)) return *e;
    const std::size_t n = std::get<std::size_t>(len);
    if (buf.size() - kHeaderSize < n) return DecodeError{DecodeErrorKind::truncated, "payload"};
    const auto t = static_cast<Type>(buf[5]);
    try {
        return Decoded{decode_payload(t, buf.subspan(kHeaderSize, n)), kHeaderSize + n};
    } catch (const Truncated& e) {
        return DecodeError{DecodeErrorKind::truncated, e.field};
    } catch (const BadPayload& e) {
        return DecodeError{DecodeErrorKind::bad_payload, e.field};
    }
}

}  // namespace gp::wire
