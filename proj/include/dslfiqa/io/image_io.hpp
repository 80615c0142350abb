#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dslfiqa/core/image.hpp"

namespace dslfiqa {

// File I/O. Format is chosen by sniffing magic bytes on read; writers pick
// the format from the file extension (.png or .jpg/.jpeg).
Image read_image(const std::string& path);
void write_png(const std::string& path, const Image& img);
void write_png_gray(const std::string& path, const Eigen::ArrayXXf& plane);
void write_jpeg(const std::string& path, const Image& img, int quality);
void write_image(const std::string& path, const Image& img);

// In-memory JPEG round trip at the given baseline quality (1..100).
Image jpeg_roundtrip(const Image& img, int quality);

std::vector<uint8_t> to_rgb8(const Image& img);
Image from_rgb8(const std::vector<uint8_t>& rgb, int height, int width);

}  // namespace dslfiqa
