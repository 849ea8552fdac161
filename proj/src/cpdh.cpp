#include "gp/cpdh.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

namespace gp {

ContourPoints to_points(const Contour& c) {
    ContourPoints out;
    out.reserve(c.points.size());
    for (const auto& p : c.points) out.push_back({double(p.x), double(p.y)});
    return out;
}

Point2 centroid_of(std::span<const Point2> pts) {
    if (pts.empty()) throw DegenerateContour("no points");
    double sx = 0, sy = 0;
    for (const auto& p : pts) {
        sx += p.x;
        sy += p.y;
    }
    const double n = static_cast<double>(pts.size());
    return {sx / n, sy / n};
}

double circumscribed_radius(std::span<const Point2> pts, Point2 c) {
    if (pts.empty()) throw DegenerateContour("no points");
    double r = 0;
    for (const auto& p : pts) r = std::max(r, std::hypot(p.x - c.x, p.y - c.y));
    return r;
}

CpdhDescriptor build_cpdh(std::span<const Point2> pts, int n_rho, int n_theta) {
    if (n_rho < 1 || n_theta < 1) throw Error("CPDH bin counts must be positive");
    if (pts.size() < 8) throw DegenerateContour("fewer than 8 points");
    CpdhDescriptor d;
    d.n_rho = n_rho;
    d.n_theta = n_theta;
    d.centroid = centroid_of(pts);
    d.radius = circumscribed_radius(pts, d.centroid);
    if (!(d.radius > 0)) throw DegenerateContour("zero radius");
    d.bins.assign(static_cast<std::size_t>(n_rho) * n_theta, 0.0);

    constexpr double two_pi = 2.0 * std::numbers::pi;
    for (const auto& p : pts) {
        const double dx = p.x - d.centroid.x, dy = p.y - d.centroid.y;
        const double rho = std::hypot(dx, dy) / d.radius;
        double theta = std::atan2(dy, dx);
        if (theta < 0) theta += two_pi;
        if (theta >= two_pi) theta = 0;
        const int ring = std::min(static_cast<int>(std::floor(rho * n_rho)), n_rho - 1);
        const int sector = std::min(static_cast<int>(std::floor(theta * n_theta / two_pi)), n_theta - 1);
        d.bins[static_cast<std::size_t>(ring) * n_theta + sector] += 1.0;
    }
    const double n = static_cast<double>(pts.size());
    for (auto& b : d.bins) b /= n;
    return d;
}

CpdhDescriptor rotate_sectors(const CpdhDescriptor& b, int k) {
    CpdhDescriptor out = b;
    const int n = b.n_theta;
    k = ((k % n) + n) % n;
    for (int r = 0; r < b.n_rho; ++r)
        for (int s = 0; s < n; ++s)
            out.bins[static_cast<std::size_t>(r) * n + s] = b.bins[static_cast<std::size_t>(r) * n + (s + k) % n];
    return out;
}

CpdhDescriptor mirror_sectors(const CpdhDescriptor& b) {
    CpdhDescriptor out = b;
    const int n = b.n_theta;
    for (int r = 0; r < b.n_rho; ++r)
        for (int s = 0; s < n; ++s)
            out.bins[static_cast<std::size_t>(r) * n + s] = b.bins[static_cast<std::size_t>(r) * n + (n - 1 - s)];
    return out;
}

double chi_square(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) throw Error("chi_square: size mismatch");
    double acc = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double s = u[i] + v[i];
        if (s == 0) continue;
        const double d = u[i] - v[i];
        acc += d * d / s;
    }
    return 0.5 * acc;
}

namespace {

CpdhMatch best_shift(const CpdhDescriptor& a, const CpdhDescriptor& b) {
    CpdhMatch best{std::numeric_limits<double>::infinity(), 0, false};
    const int n = a.n_theta;
    std::vector<double> rotated(b.bins.size());
    for (int k = 0; k < n; ++k) {
        for (int r = 0; r < b.n_rho; ++r)
            for (int s = 0; s < n; ++s)
                rotated[static_cast<std::size_t>(r) * n + s] = b.bins[static_cast<std::size_t>(r) * n + (s + k) % n];
        const double d = chi_square(a.bins, rotated);
        if (d < best.distance) best = {d, k, false};
    }
    return best;
}

}  // namespace

CpdhMatch cpdh_distance(const CpdhDescriptor& a, const CpdhDescriptor& b, bool allow_mirror) {
    if (a.n_rho != b.n_rho || a.n_theta != b.n_theta || a.bins.size() != b.bins.size())
        throw Error("cpdh_distance: descriptor shapes differ");
    CpdhMatch best = best_shift(a, b);
    if (allow_mirror) {
        CpdhMatch m = best_shift(a, mirror_sectors(b));
        if (m.distance < best.distance) {
            m.mirrored = true;
            best = m;
        }
    }
    return best;
}

const GestureClass* Gallery::find(int id) const {
    for (const auto& c : classes)
        if (c.id == id) return &c;
    return nullptr;
}

void Gallery::validate() const {
    if (n_rho < 1 || n_theta < 1) throw Error("gallery bin counts must be positive");
    std::set<int> ids;
    for (const auto& c : classes) {
        if (c.id < 0 || c.id > 255) throw Error("gallery class id out of range [0, 255]: " + std::to_string(c.id));
        if (!ids.insert(c.id).second) throw Error("duplicate gallery class id " + std::to_string(c.id));
        if (c.templates.empty()) throw Error("gallery class '" + c.name + "' has no templates");
        for (const auto& t : c.templates)
            if (t.n_rho != n_rho || t.n_theta != n_theta || t.bins.size() != static_cast<std::size_t>(n_rho) * n_theta)
                throw Error("gallery template shape mismatch in class '" + c.name + "'");
    }
}

Classification classify(const CpdhDescriptor& q, const Gallery& gallery, double tau, bool allow_mirror) {
    if (gallery.classes.empty()) throw Error("classify: empty gallery");
    std::vector<const GestureClass*> by_id;
    for (const auto& c : gallery.classes) by_id.push_back(&c);
    std::sort(by_id.begin(), by_id.end(), [](auto* a, auto* b) { return a->id < b->id; });

    Classification out;
    double best = std::numeric_limits<double>::infinity();
    int best_id = kUnknownClass;
    for (const auto* c : by_id)
        for (const auto& t : c->templates) {
            const double d = cpdh_distance(q, t, allow_mirror).distance;
            if (d < best) {
                best = d;
                best_id = c->id;
            }
        }
    out.distance = best;
    if (best <= tau) {
        out.class_id = best_id;
        out.confidence = tau > 0 ? std::clamp(1.0 - best / tau, 0.0, 1.0) : 1.0;
    }
    return out;
}

namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_real(const std::string& tok, std::size_t line) {
    double v = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v))
        throw Error("gallery line " + std::to_string(line) + ": bad number '" + tok + "'");
    return v;
}

int parse_int(const std::string& tok, std::size_t line) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
        throw Error("gallery line " + std::to_string(line) + ": bad integer '" + tok + "'");
    return v;
}

}  // namespace

std::string serialize_gallery(const Gallery& g) {
    std::string out = "version 1\ngallery " + std::to_string(g.n_rho) + " " + std::to_string(g.n_theta) + "\n";
    for (const auto& c : g.classes) {
        out += "class " + std::to_string(c.id) + " " + c.name + "\n";
        for (const auto& t : c.templates) {
            out += "template";
            for (double b : t.bins) out += " " + fmt17(b);
            out += "\n";
        }
    }
    return out;
}

Gallery parse_gallery(const std::string& text) {
    Gallery g;
    bool have_header = false;
    std::istringstream in(text);
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        if (const auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
        std::istringstream ls(raw);
        std::vector<std::string> t{std::istream_iterator<std::string>(ls), std::istream_iterator<std::string>()};
        if (t.empty()) continue;
        const std::string where = "gallery line " + std::to_string(line) + ": ";
        if (t[0] == "version") {
            if (t.size() != 2 || parse_int(t[1], line) != 1) throw Error(where + "unsupported version");
        } else if (t[0] == "gallery") {
            if (t.size() != 3 || have_header) throw Error(where + "bad gallery header");
            g.n_rho = parse_int(t[1], line);
            g.n_theta = parse_int(t[2], line);
            if (g.n_rho < 1 || g.n_theta < 1) throw Error(where + "bin counts must be positive");
            have_header = true;
        } else if (t[0] == "class") {
            if (!have_header || t.size() != 3) throw Error(where + "bad class line");
            g.classes.push_back({parse_int(t[1], line), t[2], {}});
        } else if (t[0] == "template") {
            if (g.classes.empty()) throw Error(where + "template before any class");
            const std::size_t nb = static_cast<std::size_t>(g.n_rho) * g.n_theta;
            if (t.size() != nb + 1) throw Error(where + "expected " + std::to_string(nb) + " bin values");
            CpdhDescriptor d;
            d.n_rho = g.n_rho;
            d.n_theta = g.n_theta;
            d.radius = 1;
            for (std::size_t i = 1; i < t.size(); ++i) {
                const double v = parse_real(t[i], line);
                if (v < 0) throw Error(where + "negative bin value");
                d.bins.push_back(v);
            }
            g.classes.back().templates.push_back(std::move(d));
        } else {
            throw Error(where + "unknown directive '" + t[0] + "'");
        }
    }
    if (!have_header) throw Error("gallery: missing 'gallery' header");
    g.validate();
    return g;
}

void save_gallery(const std::filesystem::path& path, const Gallery& g) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << serialize_gallery(g);
}

Gallery load_gallery(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    return parse_gallery({std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()});
}

std::optional<CpdhDescriptor> describe_mask(const Mask& m, int n_rho, int n_theta) {
    const auto contours = trace_boundary(m);
    const Contour* best = nullptr;
    for (const auto& c : contours)
        if (!best || c.area > best->area) best = &c;
    if (!best || best->points.size() < 8) return std::nullopt;
    try {
        return build_cpdh(to_points(*best), n_rho, n_theta);
    } catch (const DegenerateContour&) {
        return std::nullopt;
    }
}

}  // namespace gp
