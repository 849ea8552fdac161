#pragma once

#include <filesystem>
#include <string>

#include "gp/imaging.hpp"

namespace gp {

// Binary PNM (P6 for RGB frames, P5 for gray images and masks), maxval 255.

Frame read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const Frame& frame);

GrayImage read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const GrayImage& img);
void write_pgm(const std::filesystem::path& path, const Mask& mask);
/// Any nonzero sample becomes 255.
Mask read_mask(const std::filesystem::path& path);

std::string encode_ppm(const Frame& frame);
Frame decode_ppm(const std::string& bytes);
std::string encode_pgm(const GrayImage& img);
GrayImage decode_pgm(const std::string& bytes);

}  // namespace gp
