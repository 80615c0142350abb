#pragma once

#include <Eigen/Dense>
#include <array>

#include "dslfiqa/core/error.hpp"

namespace dslfiqa {

using Plane = Eigen::ArrayXXf;  // indexed (row, col) = (y, x)

// RGB image with float pixels in [0, 1], stored as three planes.
struct Image {
  Plane r, g, b;

  Image() = default;
  Image(int height, int width) { resize(height, width); }

  void resize(int height, int width) {
    r.setZero(height, width);
    g.setZero(height, width);
    b.setZero(height, width);
  }

  int height() const { return static_cast<int>(r.rows()); }
  int width() const { return static_cast<int>(r.cols()); }
  bool empty() const { return r.size() == 0; }

  std::array<Plane*, 3> planes() { return {&r, &g, &b}; }
  std::array<const Plane*, 3> planes() const { return {&r, &g, &b}; }

  void fill(float fr, float fg, float fb) {
    r.setConstant(fr);
    g.setConstant(fg);
    b.setConstant(fb);
  }

  void clamp01() {
    for (Plane* p : planes()) *p = p->cwiseMax(0.0f).cwiseMin(1.0f);
  }

  bool all_finite() const {
    for (const Plane* p : planes())
      if (!p->isFinite().all()) return false;
    return true;
  }

  bool same_pixels(const Image& other) const {
    return height() == other.height() && width() == other.width() && (r == other.r).all() &&
           (g == other.g).all() && (b == other.b).all();
  }
};

inline void require_valid(const Image& img, const char* what) {
  if (img.empty()) fail(ErrorCode::ShapeMismatch, std::string(what) + ": empty image");
  if (img.g.rows() != img.r.rows() || img.b.rows() != img.r.rows() || img.g.cols() != img.r.cols() ||
      img.b.cols() != img.r.cols())
    fail(ErrorCode::ShapeMismatch, std::string(what) + ": plane dimensions disagree");
}

// Peak signal-to-noise ratio in dB over all three channels; peak = 1.
double psnr(const Image& a, const Image& b);

}  // namespace dslfiqa
