#include "dslfiqa/degrade/degrade.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "dslfiqa/core/rng.hpp"
#include "dslfiqa/io/image_io.hpp"

namespace dslfiqa::degrade {

namespace {

inline int clamp_idx(int i, int n) { return std::clamp(i, 0, n - 1); }

double get(const DegradationRecipe& r, const char* key) { return r.params.at(key); }

std::vector<float> box_kernel(int k) { return std::vector<float>(static_cast<size_t>(k), 1.0f / static_cast<float>(k)); }

std::vector<float> gaussian_kernel(int k, double sigma) {
  std::vector<float> ker(static_cast<size_t>(k));
  const int half = k / 2;
  double sum = 0.0;
  for (int i = 0; i < k; ++i) {
    const double x = i - half;
    const double v = std::exp(-x * x / (2.0 * sigma * sigma));
    ker[static_cast<size_t>(i)] = static_cast<float>(v);
    sum += v;
  }
  for (auto& v : ker) v = static_cast<float>(v / sum);
  return ker;
}

Eigen::ArrayXXf disk_kernel(double radius) {
  const int half = static_cast<int>(std::ceil(radius));
  const int k = 2 * half + 1;
  Eigen::ArrayXXf ker(k, k);
  double sum = 0.0;
  for (int y = 0; y < k; ++y) {
    for (int x = 0; x < k; ++x) {
      const double d = std::hypot(y - half, x - half);
      // soft half-pixel rim so the kernel varies smoothly with the radius
      const double v = std::clamp(radius + 0.5 - d, 0.0, 1.0);
      ker(y, x) = static_cast<float>(v);
      sum += v;
    }
  }
  ker /= static_cast<float>(sum);
  return ker;
}

Eigen::ArrayXXf motion_kernel(int length, double angle) {
  const int half = length / 2;
  const int k = length;
  Eigen::ArrayXXf ker = Eigen::ArrayXXf::Zero(k, k);
  const double dx = std::cos(angle), dy = std::sin(angle);
  // rasterize the centered line segment with bilinear splats
  const int samples = 4 * length;
  for (int s = 0; s <= samples; ++s) {
    const double t = (static_cast<double>(s) / samples - 0.5) * (length - 1);
    const double x = half + t * dx, y = half + t * dy;
    const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
    const double fx = x - x0, fy = y - y0;
    for (int oy = 0; oy <= 1; ++oy)
      for (int ox = 0; ox <= 1; ++ox) {
        const int xi = x0 + ox, yi = y0 + oy;
        if (xi >= 0 && xi < k && yi >= 0 && yi < k)
          ker(yi, xi) += static_cast<float>((ox ? fx : 1 - fx) * (oy ? fy : 1 - fy));
      }
  }
  ker /= ker.sum();
  return ker;
}

float cubic_weight(float t) {
  // Keys cubic convolution kernel, a = -0.5
  const float a = -0.5f;
  const float at = std::abs(t);
  if (at <= 1.0f) return (a + 2.0f) * at * at * at - (a + 3.0f) * at * at + 1.0f;
  if (at < 2.0f) return a * at * at * at - 5.0f * a * at * at + 8.0f * a * at - 4.0f * a;
  return 0.0f;
}

Plane resize_bicubic_plane(const Plane& src, int out_h, int out_w) {
  const int h = static_cast<int>(src.rows()), w = static_cast<int>(src.cols());
  Plane dst(out_h, out_w);
  const float sy = static_cast<float>(h) / out_h, sx = static_cast<float>(w) / out_w;
  for (int oy = 0; oy < out_h; ++oy) {
    const float fy = (oy + 0.5f) * sy - 0.5f;
    const int y0 = static_cast<int>(std::floor(fy));
    for (int ox = 0; ox < out_w; ++ox) {
      const float fx = (ox + 0.5f) * sx - 0.5f;
      const int x0 = static_cast<int>(std::floor(fx));
      float acc = 0.0f, wsum = 0.0f;
      for (int j = -1; j <= 2; ++j) {
        const float wy = cubic_weight(fy - (y0 + j));
        if (wy == 0.0f) continue;
        for (int i = -1; i <= 2; ++i) {
          const float wx = cubic_weight(fx - (x0 + i));
          if (wx == 0.0f) continue;
          acc += wy * wx * src(clamp_idx(y0 + j, h), clamp_idx(x0 + i, w));
          wsum += wy * wx;
        }
      }
      dst(oy, ox) = acc / wsum;
    }
  }
  return dst;
}

Image map_planes(const Image& img, const std::function<Plane(const Plane&)>& fn) {
  Image out;
  out.r = fn(img.r);
  out.g = fn(img.g);
  out.b = fn(img.b);
  return out;
}

Image blur_separable(const Image& img, const std::vector<float>& kernel) {
  return map_planes(img, [&](const Plane& p) { return convolve_separable(p, kernel); });
}

Image zoom_blur(const Image& img, double factor) {
  const int h = img.height(), w = img.width();
  const int steps = 8;
  Image out(h, w);
  const float cy = (h - 1) / 2.0f, cx = (w - 1) / 2.0f;
  for (int s = 0; s < steps; ++s) {
    const double f = 1.0 + (factor - 1.0) * s / (steps - 1);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const float sy = cy + static_cast<float>((y - cy) / f);
        const float sx = cx + static_cast<float>((x - cx) / f);
        const int y0 = static_cast<int>(std::floor(sy)), x0 = static_cast<int>(std::floor(sx));
        const float fy = sy - y0, fx = sx - x0;
        const auto sample = [&](const Plane& p) {
          const float v00 = p(clamp_idx(y0, h), clamp_idx(x0, w));
          const float v01 = p(clamp_idx(y0, h), clamp_idx(x0 + 1, w));
          const float v10 = p(clamp_idx(y0 + 1, h), clamp_idx(x0, w));
          const float v11 = p(clamp_idx(y0 + 1, h), clamp_idx(x0 + 1, w));
          return (1 - fy) * ((1 - fx) * v00 + fx * v01) + fy * ((1 - fx) * v10 + fx * v11);
        };
        out.r(y, x) += sample(img.r);
        out.g(y, x) += sample(img.g);
        out.b(y, x) += sample(img.b);
      }
    }
  }
  for (Plane* p : out.planes()) *p /= static_cast<float>(steps);
  return out;
}

Image add_gaussian_noise(const Image& img, double sigma, Rng& rng) {
  Image out = img;
  for (Plane* p : out.planes()) {
    for (Eigen::Index y = 0; y < p->rows(); ++y)
      for (Eigen::Index x = 0; x < p->cols(); ++x) (*p)(y, x) += static_cast<float>(rng.normal(0.0, sigma));
  }
  return out;
}

Image iso_noise(const Image& img, double intensity, double color_shift, Rng& rng) {
  // luminance-scaled shot noise plus per-pixel chroma jitter
  Image out = img;
  const int h = img.height(), w = img.width();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float luma = 0.299f * img.r(y, x) + 0.587f * img.g(y, x) + 0.114f * img.b(y, x);
      const double sigma = 0.12 * intensity * std::sqrt(std::max(luma, 0.01f)) + 0.02 * intensity;
      const float shot = static_cast<float>(rng.normal(0.0, sigma));
      out.r(y, x) += shot + static_cast<float>(rng.normal(0.0, color_shift));
      out.g(y, x) += shot + static_cast<float>(rng.normal(0.0, color_shift));
      out.b(y, x) += shot + static_cast<float>(rng.normal(0.0, color_shift));
    }
  }
  return out;
}

Image sun_flare(const Image& img, double cx, double cy, double radius, double intensity) {
  Image out = img;
  const int h = img.height(), w = img.width();
  const double px = cx * (w - 1), py = cy * (h - 1);
  const double sigma = radius * std::min(h, w) / 2.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double d2 = (x - px) * (x - px) + (y - py) * (y - py);
      const float glow = static_cast<float>(intensity * std::exp(-d2 / (2.0 * sigma * sigma)));
      out.r(y, x) += glow;
      out.g(y, x) += glow * 0.95f;
      out.b(y, x) += glow * 0.82f;
    }
  }
  return out;
}

Image shadow(const Image& img, const DegradationRecipe& r) {
  const int h = img.height(), w = img.width();
  const double gain = get(r, "gain");
  const double cx = get(r, "cx") * (w - 1), cy = get(r, "cy") * (h - 1);
  const double hw = get(r, "half_w") * w, hh = get(r, "half_h") * h;
  const double rot = get(r, "rot");
  const double cr = std::cos(rot), sr = std::sin(rot);
  Plane mask(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double dx = x - cx, dy = y - cy;
      const double u = dx * cr + dy * sr, v = -dx * sr + dy * cr;
      mask(y, x) = (std::abs(u) <= hw && std::abs(v) <= hh) ? 1.0f : 0.0f;
    }
  }
  mask = convolve_separable(mask, box_kernel(5));  // feathered edge
  Image out = img;
  const Plane fade = 1.0f - mask * static_cast<float>(1.0 - gain);
  for (Plane* p : out.planes()) *p *= fade;
  return out;
}

Image apply_impl(const Image& image, const DegradationRecipe& r) {
  Rng rng = Rng(r.seed).split("noise").split(static_cast<uint64_t>(r.family));
  switch (r.family) {
    case Family::kClean:
      return image;
    case Family::kLowLight:
    case Family::kHighLight: {
      Image out = image;
      for (Plane* p : out.planes()) *p *= static_cast<float>(get(r, "gain"));
      return out;
    }
    case Family::kBlur:
      return blur_separable(image, box_kernel(static_cast<int>(get(r, "kernel"))));
    case Family::kDefocus: {
      const auto ker = disk_kernel(get(r, "radius"));
      return map_planes(image, [&](const Plane& p) { return convolve_2d(p, ker); });
    }
    case Family::kDownsample2x: {
      const int h = image.height(), w = image.width();
      const Image half = resize_bicubic(image, std::max(1, h / 2), std::max(1, w / 2));
      return resize_bicubic(half, h, w);
    }
    case Family::kGaussianNoise:
      return add_gaussian_noise(image, get(r, "sigma"), rng);
    case Family::kGaussianBlur:
      return blur_separable(image, gaussian_kernel(static_cast<int>(get(r, "kernel")), get(r, "sigma")));
    case Family::kJpegCompression:
      return jpeg_roundtrip(image, static_cast<int>(get(r, "quality")));
    case Family::kMotionBlur: {
      const auto ker = motion_kernel(static_cast<int>(get(r, "length")), get(r, "angle"));
      return map_planes(image, [&](const Plane& p) { return convolve_2d(p, ker); });
    }
    case Family::kSunFlare:
      return sun_flare(image, get(r, "cx"), get(r, "cy"), get(r, "radius"), get(r, "intensity"));
    case Family::kIsoNoise:
      return iso_noise(image, get(r, "intensity"), get(r, "color_shift"), rng);
    case Family::kShadow:
      return shadow(image, r);
    case Family::kZoomBlur:
      return zoom_blur(image, get(r, "factor"));
    case Family::kMixedExtra1: {
      Image out = blur_separable(image, gaussian_kernel(static_cast<int>(get(r, "blur_kernel")), get(r, "blur_sigma")));
      return add_gaussian_noise(out, get(r, "noise_sigma"), rng);
    }
    case Family::kMixedExtra2: {
      Image out = image;
      for (Plane* p : out.planes()) *p *= static_cast<float>(get(r, "gain"));
      out.clamp01();
      return jpeg_roundtrip(out, static_cast<int>(get(r, "quality")));
    }
  }
  fail(ErrorCode::UnknownFamily, "unknown degradation family");
}

}  // namespace

Plane convolve_separable(const Plane& src, const std::vector<float>& kernel) {
  const int h = static_cast<int>(src.rows()), w = static_cast<int>(src.cols());
  const int k = static_cast<int>(kernel.size()), half = k / 2;
  Plane tmp(h, w), dst(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float acc = 0.0f;
      for (int i = 0; i < k; ++i) acc += kernel[static_cast<size_t>(i)] * src(y, clamp_idx(x + i - half, w));
      tmp(y, x) = acc;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float acc = 0.0f;
      for (int i = 0; i < k; ++i) acc += kernel[static_cast<size_t>(i)] * tmp(clamp_idx(y + i - half, h), x);
      dst(y, x) = acc;
    }
  }
  return dst;
}

Plane convolve_2d(const Plane& src, const Eigen::ArrayXXf& kernel) {
  const int h = static_cast<int>(src.rows()), w = static_cast<int>(src.cols());
  const int kh = static_cast<int>(kernel.rows()), kw = static_cast<int>(kernel.cols());
  const int hy = kh / 2, hx = kw / 2;
  Plane dst(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float acc = 0.0f;
      for (int j = 0; j < kh; ++j)
        for (int i = 0; i < kw; ++i)
          acc += kernel(j, i) * src(clamp_idx(y + j - hy, h), clamp_idx(x + i - hx, w));
      dst(y, x) = acc;
    }
  }
  return dst;
}

Image resize_bicubic(const Image& img, int out_h, int out_w) {
  return map_planes(img, [&](const Plane& p) { return resize_bicubic_plane(p, out_h, out_w); });
}

Image apply_degradation(const Image& image, const DegradationRecipe& recipe) {
  require_valid(image, "apply_degradation");
  validate_recipe(recipe);
  Image out = apply_impl(image, recipe);
  out.clamp01();
  return out;
}

SetS build_set_S(const Image& source, uint64_t rng_seed) {
  require_valid(source, "build_set_S");
  SetS set;
  set.source = source;
  Rng rng(rng_seed);
  for (const Family f : all_families()) {
    if (f == Family::kClean) {
      DegradationRecipe clean;
      clean.family = Family::kClean;
      clean.seed = rng_seed;
      set.members.emplace_back(source, clean);
      continue;
    }
    const uint64_t member_seed = rng.split(static_cast<uint64_t>(f)).next_u64();
    const DegradationRecipe recipe = sample_recipe(f, member_seed);
    set.members.emplace_back(apply_degradation(source, recipe), recipe);
  }
  return set;
}

std::vector<int> sample_set_r_indices(const std::vector<float>& mos, uint64_t rng_seed, int n) {
  const int total = static_cast<int>(mos.size());
  if (total < n) fail(ErrorCode::InsufficientImages, "pool smaller than requested Set R size");
  std::vector<int> high_quality;
  for (int i = 0; i < total; ++i)
    if (mos[static_cast<size_t>(i)] > 0.9f) high_quality.push_back(i);
  if (high_quality.empty())
    fail(ErrorCode::InsufficientHighQuality, "Set R requires at least one image with MOS > 0.9");

  Rng rng = Rng(rng_seed).split("set_r");
  std::vector<int> order(static_cast<size_t>(total));
  for (int i = 0; i < total; ++i) order[static_cast<size_t>(i)] = i;
  rng.shuffle(order);
  std::vector<int> picked(order.begin(), order.begin() + n);
  const bool has_high = std::any_of(picked.begin(), picked.end(),
                                    [&](int i) { return mos[static_cast<size_t>(i)] > 0.9f; });
  if (!has_high)
    picked.back() = high_quality[static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(high_quality.size()) - 1))];
  return picked;
}

SetR build_set_R(const RPool& pool, uint64_t rng_seed, int n) {
  if (pool.images.size() != pool.mos.size()) fail(ErrorCode::LengthMismatch, "R pool images and MOS lists disagree");
  SetR set;
  set.pool_indices = sample_set_r_indices(pool.mos, rng_seed, n);
  for (const int i : set.pool_indices)
    set.members.emplace_back(pool.images[static_cast<size_t>(i)], pool.mos[static_cast<size_t>(i)]);
  return set;
}

}  // namespace dslfiqa::degrade
