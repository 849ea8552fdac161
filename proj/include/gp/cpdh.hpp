#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gp/imaging.hpp"

namespace gp {

struct Point2 {
    double x = 0, y = 0;
};

using ContourPoints = std::vector<Point2>;

ContourPoints to_points(const Contour& c);

class DegenerateContour : public Error {
public:
    explicit DegenerateContour(const std::string& why) : Error("degenerate contour: " + why) {}
};

/// Polar histogram of contour points: rings of equal width out to the
/// circumscribed radius, sectors of equal angle. bins[ring * n_theta + sector].
struct CpdhDescriptor {
    int n_rho = 5;
    int n_theta = 12;
    std::vector<double> bins;
    Point2 centroid;
    double radius = 0;

    double at(int ring, int sector) const { return bins[static_cast<std::size_t>(ring) * n_theta + sector]; }
};

Point2 centroid_of(std::span<const Point2> pts);
double circumscribed_radius(std::span<const Point2> pts, Point2 c);

/// Requires at least 8 points and a nonzero radius.
CpdhDescriptor build_cpdh(std::span<const Point2> pts, int n_rho = 5, int n_theta = 12);

/// b with its sectors cyclically shifted: out[r][s] = b[r][(s + k) mod n_theta].
CpdhDescriptor rotate_sectors(const CpdhDescriptor& b, int k);
/// b with its sector order reversed (mirror image about the x axis).
CpdhDescriptor mirror_sectors(const CpdhDescriptor& b);

/// 0.5 * sum (u - v)^2 / (u + v), with 0/0 taken as 0.
double chi_square(std::span<const double> u, std::span<const double> v);

struct CpdhMatch {
    double distance = 0;
    int shift = 0;
    bool mirrored = false;
};

/// Minimum chi-square over all cyclic sector shifts of b (smallest shift on ties).
CpdhMatch cpdh_distance(const CpdhDescriptor& a, const CpdhDescriptor& b, bool allow_mirror = false);

struct GestureClass {
    int id = 0;
    std::string name;
    std::vector<CpdhDescriptor> templates;
};

struct Gallery {
    int n_rho = 5;
    int n_theta = 12;
    std::vector<GestureClass> classes;

    const GestureClass* find(int id) const;
    /// Throws on duplicate ids, empty classes or bin-shape mismatches.
    void validate() const;
};

inline constexpr int kUnknownClass = -1;

struct Classification {
    int class_id = kUnknownClass;
    double confidence = 0;
    double distance = 0;  // to the nearest template
};

/// Nearest template; UNKNOWN when it is farther than tau. Ties go to the lowest class id.
Classification classify(const CpdhDescriptor& q, const Gallery& gallery, double tau, bool allow_mirror = false);

// Text format:
//   version 1
//   gallery <n_rho> <n_theta>
//   class <id> <name>
//   template <bin values...>
std::string serialize_gallery(const Gallery& g);
Gallery parse_gallery(const std::string& text);
void save_gallery(const std::filesystem::path& path, const Gallery& g);
Gallery load_gallery(const std::filesystem::path& path);

/// Descriptor of the largest traced component of a mask, if any qualifies.
std::optional<CpdhDescriptor> describe_mask(const Mask& m, int n_rho = 5, int n_theta = 12);

}  // namespace gp
