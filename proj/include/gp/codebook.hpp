#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gp/imaging.hpp"

namespace gp {

using Vec3 = std::array<double, 3>;

struct CodebookParams {
    double eps_train = 10.0;
    double eps_detect = 10.0;
    double alpha = 0.55;  // lower brightness ratio, (0, 1]
    double beta = 1.25;   // upper brightness ratio, >= 1

    /// Throws gp::Error on out-of-range values.
    void validate() const;
};

struct Codeword {
    Vec3 mean_color{};
    double i_min = 0, i_max = 0;
    std::uint32_t freq = 1;
    std::uint32_t mnrl = 0;
    std::uint32_t first_seen = 0, last_seen = 0;

    friend bool operator==(const Codeword&, const Codeword&) = default;
};

/// Distance of x from the line through the origin spanned by v.
/// Falls back to |x| when v is the zero vector.
double color_distortion(const Vec3& x, const Vec3& v);

inline double brightness(const Vec3& x) { return std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]); }

/// alpha * i_max <= i <= min(beta * i_max, i_min / alpha)
bool brightness_ok(double i, const Codeword& cw, const CodebookParams& p);

class CodebookModel {
public:
    CodebookModel() = default;
    CodebookModel(int width, int height, CodebookParams params);

    int width() const { return width_; }
    int height() const { return height_; }
    const CodebookParams& params() const { return params_; }
    void set_params(const CodebookParams& p) {
        p.validate();
        params_ = p;
    }
    /// Number of frames seen by train(); zero for models loaded from disk.
    std::uint32_t training_frames() const { return training_frames_; }
    void set_training_frames(std::uint32_t n) { training_frames_ = n; }

    std::vector<Codeword>& at(int x, int y) { return cells_[static_cast<std::size_t>(y) * width_ + x]; }
    const std::vector<Codeword>& at(int x, int y) const {
        return cells_[static_cast<std::size_t>(y) * width_ + x];
    }
    std::size_t total_codewords() const;

    /// Codewords only; parameters are not compared.
    bool same_codewords(const CodebookModel& other) const {
        return width_ == other.width_ && height_ == other.height_ && cells_ == other.cells_;
    }

private:
    int width_ = 0, height_ = 0;
    CodebookParams params_;
    std::uint32_t training_frames_ = 0;
    std::vector<std::vector<Codeword>> cells_;
};

CodebookModel train(std::span<const Frame> frames, const CodebookParams& p);

/// Drops codewords whose mnrl exceeds training_frames / 2. A pixel whose
/// codewords would all be dropped keeps its most frequent one.
CodebookModel prune(const CodebookModel& model, std::uint32_t training_frames);
inline CodebookModel prune(const CodebookModel& model) { return prune(model, model.training_frames()); }

/// 0 where some codeword matches the pixel, 255 otherwise.
Mask subtract(const CodebookModel& model, const Frame& frame);

// "CBKM" binary persistence, little-endian, version 1.
std::string encode_codebook(const CodebookModel& model);
CodebookModel decode_codebook(const std::string& bytes, const CodebookParams& params = {});
void save_codebook(const std::filesystem::path& path, const CodebookModel& model);
CodebookModel load_codebook(const std::filesystem::path& path, const CodebookParams& params = {});

}  // namespace gp
