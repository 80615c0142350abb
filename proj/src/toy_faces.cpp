#include "dslfiqa/data/toy_faces.hpp"

#include <cmath>
#include <filesystem>

#include "dslfiqa/core/rng.hpp"
#include "dslfiqa/degrade/degrade.hpp"
#include "dslfiqa/io/image_io.hpp"

namespace dslfiqa::data {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Rgb {
  float r, g, b;
};

void blend(Image& img, int y, int x, const Rgb& c, float alpha) {
  if (alpha <= 0.0f) return;
  img.r(y, x) += alpha * (c.r - img.r(y, x));
  img.g(y, x) += alpha * (c.g - img.g(y, x));
  img.b(y, x) += alpha * (c.b - img.b(y, x));
}

// Anti-aliased filled ellipse; alpha falls off over ~1px at the rim.
void draw_ellipse(Image& img, float ex, float ey, float ax, float ay, const Rgb& color) {
  const int h = img.height(), w = img.width();
  const int y0 = std::max(0, static_cast<int>(std::floor(ey - ay - 2)));
  const int y1 = std::min(h - 1, static_cast<int>(std::ceil(ey + ay + 2)));
  const int x0 = std::max(0, static_cast<int>(std::floor(ex - ax - 2)));
  const int x1 = std::min(w - 1, static_cast<int>(std::ceil(ex + ax + 2)));
  const float edge = std::min(ax, ay);
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const float dx = (x - ex) / ax, dy = (y - ey) / ay;
      const float v = std::sqrt(dx * dx + dy * dy);
      const float d = (v - 1.0f) * edge;  // approx distance to rim in px
      const float alpha = std::clamp(0.5f - d, 0.0f, 1.0f);
      blend(img, y, x, color, alpha);
    }
  }
}

// Thick anti-aliased segment (capsule).
void draw_capsule(Image& img, float x0, float y0, float x1, float y1, float radius, const Rgb& color) {
  const int h = img.height(), w = img.width();
  const int ymin = std::max(0, static_cast<int>(std::floor(std::min(y0, y1) - radius - 2)));
  const int ymax = std::min(h - 1, static_cast<int>(std::ceil(std::max(y0, y1) + radius + 2)));
  const int xmin = std::max(0, static_cast<int>(std::floor(std::min(x0, x1) - radius - 2)));
  const int xmax = std::min(w - 1, static_cast<int>(std::ceil(std::max(x0, x1) + radius + 2)));
  const float vx = x1 - x0, vy = y1 - y0;
  const float len2 = std::max(vx * vx + vy * vy, 1e-9f);
  for (int y = ymin; y <= ymax; ++y) {
    for (int x = xmin; x <= xmax; ++x) {
      const float t = std::clamp(((x - x0) * vx + (y - y0) * vy) / len2, 0.0f, 1.0f);
      const float px = x0 + t * vx, py = y0 + t * vy;
      const float d = std::hypot(x - px, y - py) - radius;
      const float alpha = std::clamp(0.5f - d, 0.0f, 1.0f);
      blend(img, y, x, color, alpha);
    }
  }
}

Rgb pick(const float c[3]) { return {c[0], c[1], c[2]}; }

std::vector<float> gaussian_kernel_1d(double sigma) {
  const int half = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<float> k(static_cast<size_t>(2 * half + 1));
  double sum = 0.0;
  for (int i = -half; i <= half; ++i) {
    const double v = std::exp(-0.5 * i * i / (sigma * sigma));
    k[static_cast<size_t>(i + half)] = static_cast<float>(v);
    sum += v;
  }
  for (auto& v : k) v = static_cast<float>(v / sum);
  return k;
}

Plane convolve_1d(const Plane& src, const std::vector<float>& kernel, bool horizontal) {
  const int h = static_cast<int>(src.rows()), w = static_cast<int>(src.cols());
  const int half = static_cast<int>(kernel.size()) / 2;
  Plane dst(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      float acc = 0.0f;
      for (int i = 0; i < static_cast<int>(kernel.size()); ++i) {
        const int yy = horizontal ? y : std::clamp(y + i - half, 0, h - 1);
        const int xx = horizontal ? std::clamp(x + i - half, 0, w - 1) : x;
        acc += kernel[static_cast<size_t>(i)] * src(yy, xx);
      }
      dst(y, x) = acc;
    }
  return dst;
}

// In-the-wild counterparts of the synthetic families. Each keeps the family's
// visual identity but with imaging physics the synthetic engine never emits.
Image apply_realistic_degradation(const Image& img, degrade::Family family, double strength, Rng& rng) {
  Image out = img;
  switch (family) {
    case degrade::Family::kGaussianBlur: {
      // anisotropic: distinct horizontal and vertical widths
      const double sx = 0.4 + 4.6 * strength;
      const double sy = sx * rng.uniform(0.35, 0.85);
      const auto kx = gaussian_kernel_1d(sx), ky = gaussian_kernel_1d(sy);
      for (Plane* p : out.planes()) *p = convolve_1d(convolve_1d(*p, kx, true), ky, false);
      break;
    }
    case degrade::Family::kGaussianNoise: {
      // luma-dependent shot noise plus per-row banding
      const double sigma = 0.02 + 0.22 * strength;
      for (int y = 0; y < out.height(); ++y) {
        const float row_offset = static_cast<float>(rng.normal(0.0, 0.35 * sigma));
        for (int x = 0; x < out.width(); ++x) {
          const float luma = 0.299f * img.r(y, x) + 0.587f * img.g(y, x) + 0.114f * img.b(y, x);
          const double s = sigma * (0.5 + 0.8 * std::sqrt(std::max(luma, 0.02f)));
          const float shot = static_cast<float>(rng.normal(0.0, s)) + row_offset;
          out.r(y, x) += shot;
          out.g(y, x) += shot;
          out.b(y, x) += shot + static_cast<float>(rng.normal(0.0, 0.25 * s));
        }
      }
      break;
    }
    case degrade::Family::kJpegCompression: {
      // double compression with mismatched qualities
      const int q1 = std::clamp(static_cast<int>(std::lround(30.0 - 28.0 * strength)), 2, 30);
      const int q2 = std::clamp(q1 + static_cast<int>(rng.uniform_int(-4, 10)), 1, 40);
      out.clamp01();
      out = jpeg_roundtrip(out, q1);
      out = jpeg_roundtrip(out, q2);
      break;
    }
    case degrade::Family::kLowLight: {
      // darkening with shot noise and a cool cast
      const float gain = static_cast<float>(0.5 - 0.32 * strength);
      const double sigma = 0.01 + 0.06 * strength;
      for (Plane* p : out.planes()) *p *= gain;
      out.r *= 0.96f;
      out.g *= 1.0f;
      out.b *= 1.05f;
      for (Plane* p : out.planes())
        for (Eigen::Index y = 0; y < p->rows(); ++y)
          for (Eigen::Index x = 0; x < p->cols(); ++x) (*p)(y, x) += static_cast<float>(rng.normal(0.0, sigma));
      break;
    }
    case degrade::Family::kHighLight: {
      // overexposure with bloom around the clipped highlights
      const float gain = static_cast<float>(1.5 + 1.0 * strength);
      for (Plane* p : out.planes()) *p *= gain;
      Image glow = out;
      for (Plane* p : glow.planes()) *p = (*p - 0.85f).max(0.0f);
      const auto k = gaussian_kernel_1d(1.0 + 2.0 * strength);
      for (Plane* p : glow.planes()) *p = convolve_1d(convolve_1d(*p, k, true), k, false);
      out.r += 0.5f * glow.r;
      out.g += 0.5f * glow.g;
      out.b += 0.45f * glow.b;
      break;
    }
    case degrade::Family::kMotionBlur: {
      // two-segment shake path instead of one straight streak
      const int len = std::clamp(static_cast<int>(std::lround((5.0 + 16.0 * strength) / 2.0)) | 1, 5, 21);
      const double angle = rng.uniform(0.0, kPi);
      const double bend = angle + rng.uniform(0.25, 0.7);
      degrade::DegradationRecipe seg;
      seg.family = degrade::Family::kMotionBlur;
      seg.seed = rng.next_u64();
      seg.params = {{"length", static_cast<double>(len)}, {"angle", std::fmod(angle, kPi)}};
      out = degrade::apply_degradation(out, seg);
      seg.params = {{"length", static_cast<double>(len)}, {"angle", std::fmod(bend, kPi)}};
      seg.seed = rng.next_u64();
      out = degrade::apply_degradation(out, seg);
      break;
    }
    default: {
      const auto recipe = degrade::recipe_at_strength(family, strength, rng.next_u64());
      out = degrade::apply_degradation(out, recipe);
      break;
    }
  }
  out.clamp01();
  return out;
}

}  // namespace

FaceSpec sample_face_spec(uint64_t seed) {
  Rng rng = Rng(seed).split("face_spec");
  FaceSpec s;
  s.cx = 0.5f + static_cast<float>(rng.uniform(-0.04, 0.04));
  s.cy = 0.52f + static_cast<float>(rng.uniform(-0.04, 0.04));
  s.face_rx = static_cast<float>(rng.uniform(0.26, 0.33));
  s.face_ry = static_cast<float>(rng.uniform(0.33, 0.41));
  s.eye_dx = static_cast<float>(rng.uniform(0.11, 0.15));
  s.eye_dy = static_cast<float>(rng.uniform(-0.15, -0.09));
  s.eye_rx = static_cast<float>(rng.uniform(0.045, 0.065));
  s.eye_ry = s.eye_rx * static_cast<float>(rng.uniform(0.5, 0.7));
  s.brow_dy = static_cast<float>(rng.uniform(-0.09, -0.055));
  s.nose_len = static_cast<float>(rng.uniform(0.11, 0.17));
  s.mouth_dy = static_cast<float>(rng.uniform(0.17, 0.24));
  s.mouth_rx = static_cast<float>(rng.uniform(0.09, 0.15));
  s.mouth_ry = static_cast<float>(rng.uniform(0.03, 0.06));

  const int tone = static_cast<int>(rng.uniform_int(0, 2));
  const float tones[3][3] = {{0.95f, 0.80f, 0.69f}, {0.78f, 0.60f, 0.45f}, {0.45f, 0.31f, 0.22f}};
  s.tone = static_cast<SkinTone>(tone);
  for (int c = 0; c < 3; ++c) s.skin[c] = std::clamp(tones[tone][c] + static_cast<float>(rng.uniform(-0.04, 0.04)), 0.0f, 1.0f);
  for (int c = 0; c < 3; ++c) s.hair[c] = static_cast<float>(rng.uniform(0.05, 0.35));
  s.iris[0] = static_cast<float>(rng.uniform(0.1, 0.5));
  s.iris[1] = static_cast<float>(rng.uniform(0.2, 0.6));
  s.iris[2] = static_cast<float>(rng.uniform(0.3, 0.9));
  s.lip[0] = static_cast<float>(rng.uniform(0.55, 0.8));
  s.lip[1] = static_cast<float>(rng.uniform(0.2, 0.4));
  s.lip[2] = static_cast<float>(rng.uniform(0.25, 0.45));
  for (int c = 0; c < 3; ++c) {
    s.bg_top[c] = static_cast<float>(rng.uniform(0.55, 0.95));
    s.bg_bottom[c] = std::clamp(s.bg_top[c] - static_cast<float>(rng.uniform(0.05, 0.3)), 0.0f, 1.0f);
  }
  return s;
}

Image render_face(const FaceSpec& s, int height, int width) {
  Image img(height, width);
  const float W = static_cast<float>(width - 1), H = static_cast<float>(height - 1);
  for (int y = 0; y < height; ++y) {
    const float t = static_cast<float>(y) / std::max(1.0f, H);
    for (int x = 0; x < width; ++x) {
      img.r(y, x) = s.bg_top[0] + t * (s.bg_bottom[0] - s.bg_top[0]);
      img.g(y, x) = s.bg_top[1] + t * (s.bg_bottom[1] - s.bg_top[1]);
      img.b(y, x) = s.bg_top[2] + t * (s.bg_bottom[2] - s.bg_top[2]);
    }
  }

  const float cx = s.cx * W, cy = s.cy * H;
  const float frx = s.face_rx * W, fry = s.face_ry * H;

  draw_ellipse(img, cx, cy - 0.10f * H, frx * 1.12f, fry * 1.05f, pick(s.hair));
  draw_ellipse(img, cx, cy, frx, fry, pick(s.skin));

  const float eye_y = cy + s.eye_dy * H;
  const float eye_lx = cx - s.eye_dx * W, eye_rx_pos = cx + s.eye_dx * W;
  const float erx = s.eye_rx * W, ery = s.eye_ry * H;

  const Rgb brow_color{s.hair[0] * 0.8f, s.hair[1] * 0.8f, s.hair[2] * 0.8f};
  const float brow_y = eye_y + s.brow_dy * H;
  draw_capsule(img, eye_lx - erx * 1.3f, brow_y, eye_lx + erx * 1.3f, brow_y - 0.01f * H, 0.012f * H, brow_color);
  draw_capsule(img, eye_rx_pos - erx * 1.3f, brow_y - 0.01f * H, eye_rx_pos + erx * 1.3f, brow_y, 0.012f * H, brow_color);

  const Rgb sclera{0.97f, 0.97f, 0.95f};
  const Rgb pupil{0.05f, 0.05f, 0.05f};
  for (const float ex : {eye_lx, eye_rx_pos}) {
    draw_ellipse(img, ex, eye_y, erx, ery, sclera);
    draw_ellipse(img, ex, eye_y, ery * 0.8f, ery * 0.8f, pick(s.iris));
    draw_ellipse(img, ex, eye_y, ery * 0.35f, ery * 0.35f, pupil);
  }

  const Rgb nose_color{s.skin[0] * 0.82f, s.skin[1] * 0.78f, s.skin[2] * 0.78f};
  const float nose_base = eye_y + s.nose_len * H;
  draw_capsule(img, cx, eye_y + 0.03f * H, cx, nose_base, 0.008f * W, nose_color);
  draw_ellipse(img, cx - 0.025f * W, nose_base, 0.012f * W, 0.008f * H, nose_color);
  draw_ellipse(img, cx + 0.025f * W, nose_base, 0.012f * W, 0.008f * H, nose_color);

  const float mouth_y = cy + s.mouth_dy * H;
  draw_ellipse(img, cx, mouth_y, s.mouth_rx * W, s.mouth_ry * H, pick(s.lip));
  draw_capsule(img, cx - s.mouth_rx * W * 0.8f, mouth_y, cx + s.mouth_rx * W * 0.8f, mouth_y, 0.004f * H,
               {s.lip[0] * 0.6f, s.lip[1] * 0.6f, s.lip[2] * 0.6f});

  img.clamp01();
  return img;
}

lm::LandmarkSet synthetic_landmark_provider(const FaceSpec& s, int image_h, int image_w) {
  lm::LandmarkSet set;
  set.vocab = 68;
  set.entries.reserve(68);
  const auto push = [&](int id, double x, double y) {
    set.entries.push_back({id, static_cast<float>(std::clamp(x, 0.0, 1.0)), static_cast<float>(std::clamp(y, 0.0, 1.0))});
  };
  (void)image_h;
  (void)image_w;

  // 0-16 jaw: arc over the lower face ellipse from left ear through the chin
  for (int i = 0; i < 17; ++i) {
    const double theta = (170.0 - 160.0 * i / 16.0) * kPi / 180.0;
    push(i, s.cx + s.face_rx * std::cos(theta), s.cy + s.face_ry * std::sin(theta));
  }
  const double eye_y = s.cy + s.eye_dy;
  const double brow_y = eye_y + s.brow_dy;
  const double eye_lx = s.cx - s.eye_dx, eye_rx = s.cx + s.eye_dx;
  // 17-21 left brow, 22-26 right brow
  for (int i = 0; i < 5; ++i) {
    const double t = i / 4.0;
    const double lift = 0.012 * std::sin(t * kPi);
    push(17 + i, eye_lx + (t - 0.5) * 2.6 * s.eye_rx, brow_y - lift);
  }
  for (int i = 0; i < 5; ++i) {
    const double t = i / 4.0;
    const double lift = 0.012 * std::sin(t * kPi);
    push(22 + i, eye_rx + (t - 0.5) * 2.6 * s.eye_rx, brow_y - lift);
  }
  // 27-30 nose bridge, 31-35 nostril line
  const double nose_base = eye_y + s.nose_len;
  for (int i = 0; i < 4; ++i) push(27 + i, s.cx, eye_y + 0.03 + (nose_base - eye_y - 0.03) * i / 3.0);
  for (int i = 0; i < 5; ++i) push(31 + i, s.cx + (i / 4.0 - 0.5) * 0.1, nose_base + 0.012);
  // 36-41 left eye hexagon, 42-47 right eye hexagon
  const auto eye_hex = [&](int base, double ex) {
    push(base + 0, ex - s.eye_rx, eye_y);
    push(base + 1, ex - 0.4 * s.eye_rx, eye_y - s.eye_ry);
    push(base + 2, ex + 0.4 * s.eye_rx, eye_y - s.eye_ry);
    push(base + 3, ex + s.eye_rx, eye_y);
    push(base + 4, ex + 0.4 * s.eye_rx, eye_y + s.eye_ry);
    push(base + 5, ex - 0.4 * s.eye_rx, eye_y + s.eye_ry);
  };
  eye_hex(36, eye_lx);
  eye_hex(42, eye_rx);
  // 48-59 outer lip ring, 60-67 inner lip ring
  const double mouth_y = s.cy + s.mouth_dy;
  for (int i = 0; i < 12; ++i) {
    const double theta = 2.0 * kPi * i / 12.0;
    push(48 + i, s.cx + s.mouth_rx * std::cos(theta), mouth_y + s.mouth_ry * std::sin(theta));
  }
  for (int i = 0; i < 8; ++i) {
    const double theta = 2.0 * kPi * i / 8.0;
    push(60 + i, s.cx + 0.55 * s.mouth_rx * std::cos(theta), mouth_y + 0.45 * s.mouth_ry * std::sin(theta));
  }
  return set;
}

DatasetManifest generate_toy_dataset(const ToyDatasetOptions& options, const std::string& out_dir) {
  if (options.n_images < 10) fail(ErrorCode::ParamOutOfRange, "toy dataset needs at least 10 images");
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(out_dir) / "images", ec);
  if (ec) fail(ErrorCode::IOFailure, "cannot create output directory '" + out_dir + "'");

  Rng root(options.seed);
  DatasetManifest manifest;
  std::vector<std::pair<std::string, lm::LandmarkSet>> landmark_sets;

  for (int i = 0; i < options.n_images; ++i) {
    Rng item = root.split("item").split(static_cast<uint64_t>(i));
    const uint64_t face_seed = item.next_u64();
    const FaceSpec spec = sample_face_spec(face_seed);
    Image img = render_face(spec, options.image_size, options.image_size);

    const bool clean = item.uniform() < options.clean_fraction;
    double strength = 0.0;
    std::string label = "clean";
    if (!clean) {
      const size_t fi = static_cast<size_t>(item.uniform_int(0, static_cast<int64_t>(options.families.size()) - 1));
      const degrade::Family family = options.families[fi];
      strength = item.uniform(options.strength_lo, options.strength_hi);
      if (options.realistic_ops) {
        Rng wild = item.split("wild");
        img = apply_realistic_degradation(img, family, strength, wild);
      } else {
        const auto recipe = degrade::recipe_at_strength(family, strength, item.next_u64());
        img = degrade::apply_degradation(img, recipe);
      }
      label = degrade::family_name(family);
      if (options.compound) {
        const auto& pool =
            options.secondary_families.empty() ? degrade::degrading_families() : options.secondary_families;
        size_t si = static_cast<size_t>(item.uniform_int(0, static_cast<int64_t>(pool.size()) - 1));
        if (pool[si] == family) si = (si + 1) % pool.size();
        const double s2 = strength * item.uniform(options.secondary_rel_lo, options.secondary_rel_hi);
        const auto recipe2 = degrade::recipe_at_strength(pool[si], s2, item.next_u64());
        if (item.uniform() < 0.5) {
          // secondary first: layering order is part of real-world messiness
          img = degrade::apply_degradation(render_face(spec, options.image_size, options.image_size), recipe2);
          const auto recipe1 = degrade::recipe_at_strength(family, strength, item.next_u64());
          img = degrade::apply_degradation(img, recipe1);
        } else {
          img = degrade::apply_degradation(img, recipe2);
        }
      }
    }
    if (options.camera_jitter) {
      const float gain = static_cast<float>(item.uniform(0.92, 1.08));
      const double sensor_sigma = item.uniform(0.002, 0.012);
      Rng noise_rng = item.split("jitter");
      for (Plane* p : img.planes()) {
        *p *= gain;
        for (Eigen::Index y = 0; y < p->rows(); ++y)
          for (Eigen::Index x = 0; x < p->cols(); ++x)
            (*p)(y, x) += static_cast<float>(noise_rng.normal(0.0, sensor_sigma));
      }
      img.clamp01();
    }

    char name[64];
    std::snprintf(name, sizeof(name), "images/face_%05d.png", i);
    const std::string rel_path = name;
    write_png((fs::path(out_dir) / rel_path).string(), img);

    ManifestRecord rec;
    rec.image_path = rel_path;
    const double noise = item.uniform(-options.annotator_noise, options.annotator_noise);
    rec.mos = std::clamp(1.0 - strength + noise, 0.0, 1.0);
    if (options.use_split_fractions) {
      const double u = static_cast<double>(i) / options.n_images;
      rec.split = u < 0.7 ? Split::kTrain : (u < 0.8 ? Split::kVal : Split::kTest);
    } else {
      rec.split = options.fixed_split;
    }
    rec.skin_tone = spec.tone;
    rec.gender = Gender::kUnknown;
    rec.occluded = false;
    rec.label = label;
    rec.strength = strength;
    manifest.records.push_back(rec);

    landmark_sets.emplace_back(rel_path, synthetic_landmark_provider(spec, options.image_size, options.image_size));
  }

  write_manifest((fs::path(out_dir) / "manifest.jsonl").string(), manifest);
  lm::write_landmark_file((fs::path(out_dir) / "landmarks.jsonl").string(), landmark_sets);
  return manifest;
}

DatasetManifest generate_toy_dataset(int n_images, uint64_t rng_seed, const std::string& out_dir) {
  ToyDatasetOptions options;
  options.n_images = n_images;
  options.seed = rng_seed;
  return generate_toy_dataset(options, out_dir);
}

void generate_retrieval_benchmark(const RetrievalBenchmarkOptions& options, const std::string& out_dir) {
  namespace fs = std::filesystem;
  Rng root(options.seed);

  // Training world and gallery carry in-the-wild degradations; the queries
  // are pure synthetic probes from the engine the encoders train Set S with.
  ToyDatasetOptions train;
  train.n_images = options.n_train;
  train.image_size = options.image_size;
  train.seed = root.split("train").next_u64();
  train.families = options.families;
  train.realistic_ops = true;
  train.camera_jitter = true;
  train.clean_fraction = 0.12;
  train.use_split_fractions = false;
  train.fixed_split = Split::kTrain;
  generate_toy_dataset(train, (fs::path(out_dir) / "train").string());

  ToyDatasetOptions gallery = train;
  gallery.n_images = options.n_gallery;
  gallery.seed = root.split("gallery").next_u64();
  gallery.clean_fraction = 0.0;
  gallery.strength_lo = 0.35;
  gallery.strength_hi = 0.95;
  gallery.fixed_split = Split::kTest;
  generate_toy_dataset(gallery, (fs::path(out_dir) / "gallery").string());

  ToyDatasetOptions queries = gallery;
  queries.n_images = options.n_queries;
  queries.seed = root.split("queries").next_u64();
  queries.realistic_ops = false;
  queries.camera_jitter = false;
  generate_toy_dataset(queries, (fs::path(out_dir) / "queries").string());
}

}  // namespace dslfiqa::data
