#include "gp/cascade.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>

#include "cascade_internal.hpp"

namespace gp {

double HaarFeature::weighted_area() const {
    double acc = 0;
    for (const auto& r : rects) acc += r.weight * static_cast<double>(r.rect.area());
    return acc;
}

const char* to_string(CascadeErrorKind kind) {
    switch (kind) {
        case CascadeErrorKind::syntax: return "syntax";
        case CascadeErrorKind::unknown_directive: return "unknown directive";
        case CascadeErrorKind::rect_out_of_window: return "rect outside base window";
        case CascadeErrorKind::non_zero_mean: return "feature is not zero-mean";
        case CascadeErrorKind::empty_stage: return "empty stage";
        case CascadeErrorKind::structure: return "structure";
    }
    return "?";
}

CascadeParseError::CascadeParseError(CascadeErrorKind kind, std::size_t line, const std::string& what)
    : Error("line " + std::to_string(line) + ": " + to_string(kind) + ": " + what), kind_(kind), line_(line) {}

namespace {

constexpr double kZeroMeanTol = 1e-6;

std::vector<std::string_view> tokenize(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        if (i >= line.size()) break;
        const std::size_t j = line.find_first_of(" \t\r", i);
        const std::size_t end = j == std::string_view::npos ? line.size() : j;
        out.push_back(line.substr(i, end - i));
        i = end;
    }
    return out;
}

class Parser {
public:
    CascadeModel run(std::string_view text) {
        std::size_t pos = 0;
        while (pos <= text.size()) {
            const std::size_t nl = text.find('\n', pos);
            std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
            ++line_;
            if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
            handle(tokenize(line));
            if (nl == std::string_view::npos) break;
            pos = nl + 1;
        }
        close_stage();
        if (!have_header_) fail(CascadeErrorKind::structure, "missing 'cascade' header");
        if (model_.stages.empty()) fail(CascadeErrorKind::structure, "cascade has no stages");
        return std::move(model_);
    }

private:
    [[noreturn]] void fail(CascadeErrorKind kind, const std::string& what, std::size_t line = 0) const {
        throw CascadeParseError(kind, line ? line : line_, what);
    }

    double real(std::string_view tok) const {
        double v = 0;
        const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v))
            fail(CascadeErrorKind::syntax, "bad number '" + std::string(tok) + "'");
        return v;
    }

    int integer(std::string_view tok) const {
        int v = 0;
        const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc() || ptr != tok.data() + tok.size())
            fail(CascadeErrorKind::syntax, "bad integer '" + std::string(tok) + "'");
        return v;
    }

    void arity(const std::vector<std::string_view>& t, std::size_t lo, std::size_t hi) const {
        if (t.size() < lo || t.size() > hi)
            fail(CascadeErrorKind::syntax, "wrong number of fields for '" + std::string(t[0]) + "'");
    }

    void handle(const std::vector<std::string_view>& t) {
        if (t.empty()) return;
        const std::string_view d = t[0];
        if (d == "cascade") {
            arity(t, 3, 4);
            if (have_header_) fail(CascadeErrorKind::structure, "duplicate 'cascade' header");
            model_.base_w = integer(t[1]);
            model_.base_h = integer(t[2]);
            if (model_.base_w < 8 || model_.base_h < 8 || model_.base_w > kMaxImageDim || model_.base_h > kMaxImageDim)
                fail(CascadeErrorKind::syntax, "base window must be at least 8x8");
            if (t.size() == 4) model_.label = std::string(t[3]);
            have_header_ = true;
        } else if (d == "stage") {
            arity(t, 2, 2);
            require_header();
            close_stage();
            model_.stages.push_back({{}, real(t[1])});
            stage_line_ = line_;
            in_stage_ = true;
        } else if (d == "stump") {
            arity(t, 4, 4);
            require_header();
            if (!in_stage_) fail(CascadeErrorKind::structure, "'stump' outside a stage");
            close_stump();
            Stump s;
            s.threshold = real(t[1]);
            s.left_val = real(t[2]);
            s.right_val = real(t[3]);
            model_.stages.back().stumps.push_back(std::move(s));
            stump_line_ = line_;
            in_stump_ = true;
        } else if (d == "rect") {
            arity(t, 6, 6);
            if (!in_stump_) fail(CascadeErrorKind::structure, "'rect' outside a stump");
            const int x = integer(t[1]), y = integer(t[2]), w = integer(t[3]), h = integer(t[4]);
            const double weight = real(t[5]);
            if (w <= 0 || h <= 0 || x < 0 || y < 0 || x + w > model_.base_w || y + h > model_.base_h)
                fail(CascadeErrorKind::rect_out_of_window, "rect " + std::to_string(x) + "," + std::to_string(y) +
                                                                " " + std::to_string(w) + "x" + std::to_string(h));
            auto& rects = model_.stages.back().stumps.back().feature.rects;
            if (rects.size() == 3) fail(CascadeErrorKind::structure, "more than 3 rects in a stump");
            rects.push_back({Rect(x, y, w, h), weight});
        } else {
            fail(CascadeErrorKind::unknown_directive, "'" + std::string(d) + "'");
        }
    }

    void require_header() const {
        if (!have_header_) fail(CascadeErrorKind::structure, "'cascade' header must come first");
    }

    void close_stump() {
        if (!in_stump_) return;
        in_stump_ = false;
        const auto& f = model_.stages.back().stumps.back().feature;
        if (f.rects.size() < 2) fail(CascadeErrorKind::structure, "stump needs 2 or 3 rects", stump_line_);
        if (std::abs(f.weighted_area()) > kZeroMeanTol)
            fail(CascadeErrorKind::non_zero_mean, "sum(weight*area) != 0", stump_line_);
    }

    void close_stage() {
        close_stump();
        if (!in_stage_) return;
        in_stage_ = false;
        if (model_.stages.back().stumps.empty()) fail(CascadeErrorKind::empty_stage, "stage has no stumps", stage_line_);
    }

    CascadeModel model_;
    std::size_t line_ = 0, stage_line_ = 0, stump_line_ = 0;
    bool have_header_ = false, in_stage_ = false, in_stump_ = false;
};

std::string fmt_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

}  // namespace

CascadeModel parse_cascade(std::string_view text) { return Parser().run(text); }

double canonical_real(double v) {
    const std::string s = fmt_real(v);
    double out = 0;
    std::from_chars(s.data(), s.data() + s.size(), out);
    return out;
}

std::string serialize_cascade(const CascadeModel& model) {
    std::string out = "cascade " + std::to_string(model.base_w) + " " + std::to_string(model.base_h);
    if (!model.label.empty()) out += " " + model.label;
    out += "\n";
    for (const auto& stage : model.stages) {
        out += "stage " + fmt_real(stage.threshold) + "\n";
        for (const auto& s : stage.stumps) {
            out += "stump " + fmt_real(s.threshold) + " " + fmt_real(s.left_val) + " " + fmt_real(s.right_val) + "\n";
            for (const auto& r : s.feature.rects)
                out += "rect " + std::to_string(r.rect.x) + " " + std::to_string(r.rect.y) + " " +
                       std::to_string(r.rect.w) + " " + std::to_string(r.rect.h) + " " + fmt_real(r.weight) + "\n";
        }
    }
    return out;
}

std::uint64_t cascade_digest(const CascadeModel& model) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : serialize_cascade(model)) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

CascadeModel load_cascade(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return parse_cascade(text);
}

void save_cascade(const std::filesystem::path& path, const CascadeModel& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << serialize_cascade(model);
}

namespace detail {

ScaledStump scale_stump(const Stump& s, int base_w, int base_h, int win_w, int win_h) {
    const double sx = static_cast<double>(win_w) / base_w;
    const double sy = static_cast<double>(win_h) / base_h;
    ScaledStump out;
    out.threshold = s.threshold;
    out.left = s.left_val;
    out.right = s.right_val;
    out.n = static_cast<int>(s.feature.rects.size());
    for (int i = 0; i < out.n; ++i) {
        const auto& src = s.feature.rects[i];
        ScaledRect& r = out.rects[i];
        r.x = std::min(static_cast<int>(std::lround(src.rect.x * sx)), win_w - 1);
        r.y = std::min(static_cast<int>(std::lround(src.rect.y * sy)), win_h - 1);
        r.w = std::clamp(static_cast<int>(std::lround(src.rect.w * sx)), 1, win_w - r.x);
        r.h = std::clamp(static_cast<int>(std::lround(src.rect.h * sy)), 1, win_h - r.y);
        r.weight = src.weight;
    }
    // Re-balance the first weight so the scaled feature stays exactly zero-mean.
    double rest = 0;
    for (int i = 1; i < out.n; ++i) rest += out.rects[i].weight * out.rects[i].w * out.rects[i].h;
    out.rects[0].weight = -rest / (static_cast<double>(out.rects[0].w) * out.rects[0].h);
    return out;
}

ScaledCascade::ScaledCascade(const CascadeModel& model, int win_w, int win_h)
    : win_w_(win_w), win_h_(win_h), inv_area_(1.0 / (static_cast<double>(win_w) * win_h)) {
    stages_.reserve(model.stages.size());
    for (const auto& st : model.stages) {
        ScaledStage ss;
        ss.threshold = st.threshold;
        for (const auto& s : st.stumps) ss.stumps.push_back(scale_stump(s, model.base_w, model.base_h, win_w, win_h));
        stages_.push_back(std::move(ss));
    }
}

}  // namespace detail

namespace {

void check_window(const CascadeModel& model, const IntegralImage& ii, const Rect& win) {
    if (!win.inside(ii.width(), ii.height())) throw Error("eval_window: window outside image");
    const double expect_h = static_cast<double>(win.w) * model.base_h / model.base_w;
    if (std::abs(expect_h - win.h) > 1.0) throw Error("eval_window: window aspect differs from base window");
}

}  // namespace

WindowResult eval_window(const CascadeModel& model, const IntegralImage& ii, const Rect& win) {
    check_window(model, ii, win);
    return detail::ScaledCascade(model, win.w, win.h).eval(ii, win.x, win.y);
}

double feature_value(const HaarFeature& feature, const CascadeModel& model, const IntegralImage& ii,
                     const Rect& win) {
    check_window(model, ii, win);
    Stump s;
    s.feature = feature;
    const auto st = detail::scale_stump(s, model.base_w, model.base_h, win.w, win.h);
    const detail::ScaledCascade empty(CascadeModel{model.base_w, model.base_h, {}, {}}, win.w, win.h);
    return detail::ScaledCascade::stump_value(st, ii, win.x, win.y, empty.norm(ii, win.x, win.y));
}

std::vector<Detection> group_rectangles_scored(std::span<const Rect> rects, int min_neighbors, double eps) {
    const std::size_t n = rects.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    auto similar = [eps](const Rect& a, const Rect& b) {
        const double tol = eps * std::min(a.w, b.w);
        if (std::abs(a.x - b.x) > tol || std::abs(a.y - b.y) > tol) return false;
        const double f = 1.0 + eps;
        return std::max(a.w, b.w) <= f * std::min(a.w, b.w) && std::max(a.h, b.h) <= f * std::min(a.h, b.h);
    };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (similar(rects[i], rects[j])) {
                const std::size_t a = find(i), b = find(j);
                if (a != b) parent[std::max(a, b)] = std::min(a, b);
            }

    struct Acc {
        double x = 0, y = 0, r = 0, b = 0;
        int count = 0;
    };
    std::vector<Acc> acc(n);
    for (std::size_t i = 0; i < n; ++i) {
        Acc& a = acc[find(i)];
        a.x += rects[i].x;
        a.y += rects[i].y;
        a.r += rects[i].right();
        a.b += rects[i].bottom();
        ++a.count;
    }
    std::vector<Detection> out;
    for (std::size_t i = 0; i < n; ++i) {
        const Acc& a = acc[i];
        if (a.count == 0 || a.count < min_neighbors + 1) continue;
        const int x = static_cast<int>(std::lround(a.x / a.count));
        const int y = static_cast<int>(std::lround(a.y / a.count));
        const int r = static_cast<int>(std::lround(a.r / a.count));
        const int b = static_cast<int>(std::lround(a.b / a.count));
        out.push_back({Rect(x, y, std::max(1, r - x), std::max(1, b - y)), a.count});
    }
    std::stable_sort(out.begin(), out.end(), [](const Detection& a, const Detection& b) {
        if (a.count != b.count) return a.count > b.count;
        if (a.rect.y != b.rect.y) return a.rect.y < b.rect.y;
        return a.rect.x < b.rect.x;
    });
    return out;
}

std::vector<Rect> group_rectangles(std::span<const Rect> rects, int min_neighbors, double eps) {
    std::vector<Rect> out;
    for (const auto& d : group_rectangles_scored(rects, min_neighbors, eps)) out.push_back(d.rect);
    return out;
}

std::vector<Rect> detect_raw(const CascadeModel& model, const GrayImage& gray, const DetectParams& p) {
    if (gray.width() < model.base_w || gray.height() < model.base_h) return {};
    if (!(p.scale0 > 0) || !(p.scale_step > 1.0)) throw Error("detect: scale0 must be > 0 and scale_step > 1");
    const IntegralImage ii(gray);
    std::vector<Rect> hits;
    for (int k = 0;; ++k) {
        const double s = p.scale0 * std::pow(p.scale_step, k);
        if (p.max_scale > 0 && s > p.max_scale * (1 + 1e-9)) break;
        const int ww = static_cast<int>(std::lround(model.base_w * s));
        const int wh = static_cast<int>(std::lround(model.base_h * s));
        if (ww > gray.width() || wh > gray.height()) break;
        if (ww < 1 || wh < 1) continue;
        const int step = std::max(1, static_cast<int>(std::lround(s)));
        const detail::ScaledCascade sc(model, ww, wh);
        for (int y = 0; y + wh <= gray.height(); y += step)
            for (int x = 0; x + ww <= gray.width(); x += step)
                if (sc.eval(ii, x, y).pass) hits.emplace_back(x, y, ww, wh);
    }
    return hits;
}

std::vector<Detection> detect_scored(const CascadeModel& model, const GrayImage& gray, const DetectParams& p) {
    const auto hits = detect_raw(model, gray, p);
    auto groups = group_rectangles_scored(hits, p.min_neighbors, p.group_eps);
    if (!p.suppress_overlaps) return groups;
    // Clusters of one object at neighbouring scales: keep the best supported one.
    auto centre_in = [](const Rect& a, const Rect& b) {
        return b.contains(static_cast<int>(std::lround(a.center_x())), static_cast<int>(std::lround(a.center_y())));
    };
    std::vector<Detection> kept;
    for (const auto& g : groups) {
        const bool shadowed = std::any_of(kept.begin(), kept.end(), [&](const Detection& k) {
            return centre_in(g.rect, k.rect) || centre_in(k.rect, g.rect);
        });
        if (!shadowed) kept.push_back(g);
    }
    return kept;
}

std::vector<Rect> detect(const CascadeModel& model, const GrayImage& gray, const DetectParams& p) {
    std::vector<Rect> out;
    for (const auto& d : detect_scored(model, gray, p)) out.push_back(d.rect);
    return out;
}

}  // namespace gp
