#include "gp/pnm.hpp"

#include <cctype>
#include <fstream>
#include <iterator>
#include <sstream>

namespace gp {

namespace {

struct PnmHeader {
    int width = 0, height = 0;
    std::size_t data_offset = 0;
};

PnmHeader parse_header(const std::string& bytes, const char* magic) {
    if (bytes.size() < 2 || bytes.compare(0, 2, magic) != 0)
        throw Error(std::string("not a binary PNM of type ") + magic);
    std::size_t pos = 2;
    auto skip_ws = [&] {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto read_int = [&] {
        skip_ws();
        long v = 0;
        std::size_t digits = 0;
        while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
            v = v * 10 + (bytes[pos] - '0');
            if (v > 1'000'000) throw Error("PNM header value too large");
            ++pos;
            ++digits;
        }
        if (digits == 0) throw Error("malformed PNM header");
        return static_cast<int>(v);
    };
    PnmHeader h;
    h.width = read_int();
    h.height = read_int();
    const int maxval = read_int();
    if (maxval != 255) throw Error("unsupported PNM maxval " + std::to_string(maxval));
    if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos])))
        throw Error("malformed PNM header");
    h.data_offset = pos + 1;
    return h;
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("short write to " + path.string());
}

std::string header(const char* magic, int w, int h) {
    return std::string(magic) + "\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
}

}  // namespace

std::string encode_ppm(const Frame& frame) {
    std::string out = header("P6", frame.width(), frame.height());
    auto b = frame.bytes();
    out.append(reinterpret_cast<const char*>(b.data()), b.size());
    return out;
}

Frame decode_ppm(const std::string& bytes) {
    const PnmHeader h = parse_header(bytes, "P6");
    const std::size_t n = static_cast<std::size_t>(h.width) * h.height * 3;
    if (bytes.size() < h.data_offset + n) throw Error("truncated PPM data");
    std::vector<std::uint8_t> px(bytes.begin() + static_cast<std::ptrdiff_t>(h.data_offset),
                                 bytes.begin() + static_cast<std::ptrdiff_t>(h.data_offset + n));
    return Frame(h.width, h.height, std::move(px));
}

std::string encode_pgm(const GrayImage& img) {
    std::string out = header("P5", img.width(), img.height());
    auto v = img.values();
    out.append(reinterpret_cast<const char*>(v.data()), v.size());
    return out;
}

GrayImage decode_pgm(const std::string& bytes) {
    const PnmHeader h = parse_header(bytes, "P5");
    const std::size_t n = static_cast<std::size_t>(h.width) * h.height;
    if (bytes.size() < h.data_offset + n) throw Error("truncated PGM data");
    std::vector<std::uint8_t> px(bytes.begin() + static_cast<std::ptrdiff_t>(h.data_offset),
                                 bytes.begin() + static_cast<std::ptrdiff_t>(h.data_offset + n));
    return GrayImage(h.width, h.height, std::move(px));
}

Frame read_ppm(const std::filesystem::path& path) {
    try {
        return decode_ppm(slurp(path));
    } catch (const Error& e) {
        throw Error(path.string() + ": " + e.what());
    }
}

void write_ppm(const std::filesystem::path& path, const Frame& frame) { spit(path, encode_ppm(frame)); }

GrayImage read_pgm(const std::filesystem::path& path) {
    try {
        return decode_pgm(slurp(path));
    } catch (const Error& e) {
        throw Error(path.string() + ": " + e.what());
    }
}

void write_pgm(const std::filesystem::path& path, const GrayImage& img) { spit(path, encode_pgm(img)); }

void write_pgm(const std::filesystem::path& path, const Mask& mask) {
    auto v = mask.values();
    write_pgm(path, GrayImage(mask.width(), mask.height(), std::vector<std::uint8_t>(v.begin(), v.end())));
}

Mask read_mask(const std::filesystem::path& path) {
    const GrayImage g = read_pgm(path);
    return Mask::from_values(g.width(), g.height(), g.values());
}

}  // namespace gp
