#include "gp/codebook.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace gp {

void CodebookParams::validate() const {
    if (!(eps_train > 0) || !(eps_detect > 0)) throw Error("codebook eps must be positive");
    if (!(alpha > 0 && alpha <= 1)) throw Error("codebook alpha must lie in (0, 1]");
    if (!(beta >= 1) || !std::isfinite(beta)) throw Error("codebook beta must be >= 1");
}

double color_distortion(const Vec3& x, const Vec3& v) {
    const double vv = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
    if (vv == 0) return brightness(x);
    // |x x v| / |v| equals sqrt(|x|^2 - (x.v)^2/|v|^2) without the cancellation near colinearity.
    const double c0 = x[1] * v[2] - x[2] * v[1];
    const double c1 = x[2] * v[0] - x[0] * v[2];
    const double c2 = x[0] * v[1] - x[1] * v[0];
    return std::sqrt((c0 * c0 + c1 * c1 + c2 * c2) / vv);
}

bool brightness_ok(double i, const Codeword& cw, const CodebookParams& p) {
    const double lo = p.alpha * cw.i_max;
    const double hi = std::min(p.beta * cw.i_max, cw.i_min / p.alpha);
    return lo <= i && i <= hi;
}

CodebookModel::CodebookModel(int width, int height, CodebookParams params)
    : width_(width), height_(height), params_(params) {
    if (width <= 0 || height <= 0 || width > kMaxImageDim || height > kMaxImageDim)
        throw Error("codebook dimensions out of range");
    params_.validate();
    cells_.resize(static_cast<std::size_t>(width) * height);
}

std::size_t CodebookModel::total_codewords() const {
    std::size_t n = 0;
    for (const auto& c : cells_) n += c.size();
    return n;
}

namespace {

Vec3 pixel(const Frame& f, int x, int y) {
    const Rgb c = f.at(x, y);
    return {double(c.r), double(c.g), double(c.b)};
}

template <class Cell>
auto find_match(Cell& cell, const Vec3& x, double i, double eps, const CodebookParams& p) -> decltype(&cell[0]) {
    for (auto& cw : cell)
        if (color_distortion(x, cw.mean_color) <= eps && brightness_ok(i, cw, p)) return &cw;
    return nullptr;
}

}  // namespace

CodebookModel train(std::span<const Frame> frames, const CodebookParams& p) {
    if (frames.empty()) throw Error("codebook training needs at least one frame");
    const int w = frames[0].width(), h = frames[0].height();
    for (const auto& f : frames)
        if (f.width() != w || f.height() != h) throw Error("training frames differ in size");

    CodebookModel model(w, h, p);
    const auto n = static_cast<std::uint32_t>(frames.size());
    for (std::uint32_t t = 0; t < n; ++t) {
        const Frame& f = frames[t];
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const Vec3 px = pixel(f, x, y);
                const double i = brightness(px);
                auto& cell = model.at(x, y);
                Codeword* hit = find_match(cell, px, i, p.eps_train, p);
                if (hit) {
                    const double fr = hit->freq;
                    for (int c = 0; c < 3; ++c) hit->mean_color[c] = (fr * hit->mean_color[c] + px[c]) / (fr + 1);
                    hit->i_min = std::min(hit->i_min, i);
                    hit->i_max = std::max(hit->i_max, i);
                    hit->freq += 1;
                    // Negative run since the previous match.
                    hit->mnrl = std::max(hit->mnrl, t - hit->last_seen - 1);
                    hit->last_seen = t;
                } else {
                    Codeword cw;
                    cw.mean_color = px;
                    cw.i_min = cw.i_max = i;
                    cw.freq = 1;
                    cw.mnrl = t;  // unseen for frames [0, t)
                    cw.first_seen = cw.last_seen = t;
                    cell.push_back(cw);
                }
            }
        }
    }
    // Wrap-around run: frames after last_seen plus frames before first_seen.
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (auto& cw : model.at(x, y))
                cw.mnrl = std::max(cw.mnrl, n - cw.last_seen + cw.first_seen - 1);
    model.set_training_frames(n);
    return model;
}

CodebookModel prune(const CodebookModel& model, std::uint32_t training_frames) {
    CodebookModel out = model;
    const double bound = training_frames / 2.0;
    for (int y = 0; y < out.height(); ++y) {
        for (int x = 0; x < out.width(); ++x) {
            auto& cell = out.at(x, y);
            if (cell.empty()) continue;
            std::vector<Codeword> kept;
            for (const auto& cw : cell)
                if (cw.mnrl <= bound) kept.push_back(cw);
            if (kept.empty()) {
                auto best = std::max_element(cell.begin(), cell.end(), [](const Codeword& a, const Codeword& b) {
                    return a.freq < b.freq;
                });
                kept.push_back(*best);
            }
            cell = std::move(kept);
        }
    }
    return out;
}

Mask subtract(const CodebookModel& model, const Frame& frame) {
    if (frame.width() != model.width() || frame.height() != model.height())
        throw Error("frame size does not match codebook model");
    const auto& p = model.params();
    Mask out(frame.width(), frame.height());
    for (int y = 0; y < frame.height(); ++y) {
        for (int x = 0; x < frame.width(); ++x) {
            const Vec3 px = pixel(frame, x, y);
            if (!find_match(model.at(x, y), px, brightness(px), p.eps_detect, p)) out.set(x, y);
        }
    }
    return out;
}

namespace {

constexpr char kMagic[4] = {'C', 'B', 'K', 'M'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kCodewordBytes = 6 * 8 + 4 * 4;

template <class T>
void put_le(std::string& out, T v) {
    std::uint8_t b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    out.append(reinterpret_cast<const char*>(b), sizeof(T));
}

class LeReader {
public:
    explicit LeReader(const std::string& s) : s_(s) {}
    template <class T>
    T get() {
        if (pos_ + sizeof(T) > s_.size()) throw Error("codebook file truncated");
        std::uint8_t b[sizeof(T)];
        std::memcpy(b, s_.data() + pos_, sizeof(T));
        if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
        pos_ += sizeof(T);
        T v;
        std::memcpy(&v, b, sizeof(T));
        return v;
    }
    std::size_t remaining() const { return s_.size() - pos_; }

private:
    const std::string& s_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string encode_codebook(const CodebookModel& model) {
    std::string out(kMagic, 4);
    put_le<std::uint32_t>(out, kVersion);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.width()));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.height()));
    for (int y = 0; y < model.height(); ++y) {
        for (int x = 0; x < model.width(); ++x) {
            const auto& cell = model.at(x, y);
            if (cell.size() > 0xffff) throw Error("too many codewords for one pixel");
            put_le<std::uint16_t>(out, static_cast<std::uint16_t>(cell.size()));
            for (const auto& cw : cell) {
                put_le(out, cw.mean_color[0]);
                put_le(out, cw.mean_color[1]);
                put_le(out, cw.mean_color[2]);
                put_le(out, cw.i_min);
                put_le(out, cw.i_max);
                put_le(out, 0.0);  // reserved
                put_le(out, cw.freq);
                put_le(out, cw.mnrl);
                put_le(out, cw.first_seen);
                put_le(out, cw.last_seen);
            }
        }
    }
    return out;
}

CodebookModel decode_codebook(const std::string& bytes, const CodebookParams& params) {
    if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw Error("not a codebook file (bad magic)");
    LeReader rd(bytes);
    rd.get<std::uint32_t>();
    const auto version = rd.get<std::uint32_t>();
    if (version != kVersion) throw Error("unsupported codebook version " + std::to_string(version));
    const auto w = rd.get<std::uint32_t>();
    const auto h = rd.get<std::uint32_t>();
    if (w == 0 || h == 0 || w > kMaxImageDim || h > kMaxImageDim) throw Error("codebook dimensions out of range");
    CodebookModel model(static_cast<int>(w), static_cast<int>(h), params);
    for (int y = 0; y < model.height(); ++y) {
        for (int x = 0; x < model.width(); ++x) {
            const auto n = rd.get<std::uint16_t>();
            if (rd.remaining() < n * kCodewordBytes) throw Error("codebook file truncated");
            auto& cell = model.at(x, y);
            cell.resize(n);
            for (auto& cw : cell) {
                cw.mean_color[0] = rd.get<double>();
                cw.mean_color[1] = rd.get<double>();
                cw.mean_color[2] = rd.get<double>();
                cw.i_min = rd.get<double>();
                cw.i_max = rd.get<double>();
                rd.get<double>();
                cw.freq = rd.get<std::uint32_t>();
                cw.mnrl = rd.get<std::uint32_t>();
                cw.first_seen = rd.get<std::uint32_t>();
                cw.last_seen = rd.get<std::uint32_t>();
            }
        }
    }
    if (rd.remaining() != 0) throw Error("trailing bytes after codebook data");
    return model;
}

void save_codebook(const std::filesystem::path& path, const CodebookModel& model) {
    const std::string bytes = encode_codebook(model);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

CodebookModel load_codebook(const std::filesystem::path& path, const CodebookParams& params) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return decode_codebook(bytes, params);
}

}  // namespace gp
