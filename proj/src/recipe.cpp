#include "dslfiqa/degrade/recipe.hpp"

#include <cmath>

#include "dslfiqa/core/rng.hpp"

namespace dslfiqa::degrade {

namespace {

const char* kFamilyNames[kFamilyCount] = {
    "clean",       "low_light", "high_light",       "blur",        "defocus",   "downsample_2x",
    "gaussian_noise", "gaussian_blur", "jpeg_compression", "motion_blur", "sun_flare", "iso_noise",
    "shadow",      "zoom_blur", "mixed_extra_1",    "mixed_extra_2"};

// Ranges were picked so that each family stays visually distinct across its
// whole span; the kernel-size and JPEG-quality bounds are contractual.
const std::vector<ParamSpec>& table(Family f) {
  static const std::vector<ParamSpec> kClean = {};
  static const std::vector<ParamSpec> kLowLight = {{"gain", 0.2, 0.5, ParamKind::kReal, Severity::kDown}};
  static const std::vector<ParamSpec> kHighLight = {{"gain", 1.5, 2.5, ParamKind::kReal, Severity::kUp}};
  static const std::vector<ParamSpec> kBlur = {{"kernel", 3, 15, ParamKind::kOddInt, Severity::kUp}};
  static const std::vector<ParamSpec> kDefocus = {{"radius", 1.0, 6.0, ParamKind::kReal, Severity::kUp}};
  static const std::vector<ParamSpec> kDownsample = {};
  static const std::vector<ParamSpec> kGaussNoise = {{"sigma", 0.02, 0.25, ParamKind::kReal, Severity::kUp}};
  static const std::vector<ParamSpec> kGaussBlur = {{"kernel", 3, 31, ParamKind::kOddInt, Severity::kUp},
                                                    {"sigma", 0.5, 5.0, ParamKind::kReal, Severity::kUp}};
  static const std::vector<ParamSpec> kJpeg = {{"quality", 1, 30, ParamKind::kInt, Severity::kDown}};
  static const std::vector<ParamSpec> kMotion = {{"length", 5, 21, ParamKind::kOddInt, Severity::kUp},
                                                 {"angle", 0.0, 3.14159265358979, ParamKind::kReal, Severity::kNuisance}};
  static const std::vector<ParamSpec> kFlare = {{"cx", 0.2, 0.8, ParamKind::kReal, Severity::kNuisance},
                                                {"cy", 0.1, 0.6, ParamKind::kReal, Severity::kNuisance},
                                                {"radius", 0.15, 0.45, ParamKind::kReal, Severity::kUp},
                                                {"intensity", 0.3, 0.9, ParamKind::kReal, Severity::kUp}};
  static const std::vector<ParamSpec> kIso = {{"intensity", 0.1, 0.6, ParamKind::kReal, Severity::kUp},
                                              {"color_shift", 0.01, 0.06, ParamKind::kReal, Severity::kUp}};
  static const std::vector<ParamSpec> kShadow = {{"gain", 0.25, 0.7, ParamKind::kReal, Severity::kDown},
                                                 {"cx", 0.2, 0.8, ParamKind::kReal, Severity::kNuisance},
                                                 {"cy", 0.3, 0.8, ParamKind::kReal, Severity::kNuisance},
                                                 {"half_w", 0.15, 0.4, ParamKind::kReal, Severity::kNuisance},
                                                 {"half_h", 0.1, 0.3, ParamKind::kReal, Severity::kNuisance},
                                                 {"rot", 0.0, 3.14159265358979, ParamKind::kReal, Severity::kNuisance}};
  static const std::vector<ParamSpec> kZoom = {{"factor", 1.03, 1.25, ParamKind::kReal, Severity::kUp}};
  static const std::vector<ParamSpec> kMixed1 = {{"blur_kernel", 3, 15, ParamKind::kOddInt, Severity::kUp},
                                                 {"blur_sigma", 0.5, 3.0, ParamKind::kReal, Severity::kUp},
                                                 {"noise_sigma", 0.02, 0.15, ParamKind::kReal, Severity::kUp}};
  static const std::vector<ParamSpec> kMixed2 = {{"gain", 0.25, 0.6, ParamKind::kReal, Severity::kDown},
                                                 {"quality", 5, 30, ParamKind::kInt, Severity::kDown}};
  switch (f) {
    case Family::kClean: return kClean;
    case Family::kLowLight: return kLowLight;
    case Family::kHighLight: return kHighLight;
    case Family::kBlur: return kBlur;
    case Family::kDefocus: return kDefocus;
    case Family::kDownsample2x: return kDownsample;
    case Family::kGaussianNoise: return kGaussNoise;
    case Family::kGaussianBlur: return kGaussBlur;
    case Family::kJpegCompression: return kJpeg;
    case Family::kMotionBlur: return kMotion;
    case Family::kSunFlare: return kFlare;
    case Family::kIsoNoise: return kIso;
    case Family::kShadow: return kShadow;
    case Family::kZoomBlur: return kZoom;
    case Family::kMixedExtra1: return kMixed1;
    case Family::kMixedExtra2: return kMixed2;
  }
  fail(ErrorCode::UnknownFamily, "unknown degradation family");
}

double nearest_odd(double v, double lo, double hi) {
  double o = std::round((v - 1.0) / 2.0) * 2.0 + 1.0;
  if (o < lo) o += 2.0;
  if (o > hi) o -= 2.0;
  return o;
}

double sample_param(const ParamSpec& p, Rng& rng) {
  switch (p.kind) {
    case ParamKind::kReal:
      return rng.uniform(p.lo, p.hi);
    case ParamKind::kInt:
      return static_cast<double>(rng.uniform_int(static_cast<int64_t>(p.lo), static_cast<int64_t>(p.hi)));
    case ParamKind::kOddInt: {
      const int64_t n_odd = (static_cast<int64_t>(p.hi) - static_cast<int64_t>(p.lo)) / 2 + 1;
      return p.lo + 2.0 * static_cast<double>(rng.uniform_int(0, n_odd - 1));
    }
  }
  return p.lo;
}

double graded_param(const ParamSpec& p, double strength) {
  const double t = (p.severity == Severity::kUp) ? strength : 1.0 - strength;
  double v = p.lo + t * (p.hi - p.lo);
  if (p.kind == ParamKind::kInt) v = std::round(v);
  if (p.kind == ParamKind::kOddInt) v = nearest_odd(v, p.lo, p.hi);
  return v;
}

}  // namespace

const char* family_name(Family f) { return kFamilyNames[static_cast<int>(f)]; }

Family family_from_name(const std::string& name) {
  for (int i = 0; i < kFamilyCount; ++i)
    if (name == kFamilyNames[i]) return static_cast<Family>(i);
  fail(ErrorCode::UnknownFamily, "unknown degradation family '" + name + "'");
}

std::vector<Family> all_families() {
  std::vector<Family> out;
  for (int i = 0; i < kFamilyCount; ++i) out.push_back(static_cast<Family>(i));
  return out;
}

std::vector<Family> degrading_families() {
  std::vector<Family> out;
  for (int i = 1; i < kFamilyCount; ++i) out.push_back(static_cast<Family>(i));
  return out;
}

const std::vector<ParamSpec>& family_params(Family f) { return table(f); }

nlohmann::json DegradationRecipe::to_json() const {
  return {{"family", family_name(family)}, {"params", params}, {"seed", seed}};
}

DegradationRecipe DegradationRecipe::from_json(const nlohmann::json& j) {
  DegradationRecipe r;
  r.family = family_from_name(j.at("family").get<std::string>());
  r.params = j.at("params").get<std::map<std::string, double>>();
  r.seed = j.at("seed").get<uint64_t>();
  return r;
}

DegradationRecipe sample_recipe(Family family, uint64_t rng_seed) {
  if (family == Family::kClean) fail(ErrorCode::UnknownFamily, "sample_recipe: clean has no parameters to sample");
  Rng rng = Rng(rng_seed).split("recipe").split(static_cast<uint64_t>(family));
  DegradationRecipe r;
  r.family = family;
  r.seed = rng_seed;
  for (const auto& p : table(family)) r.params[p.name] = sample_param(p, rng);
  return r;
}

DegradationRecipe recipe_at_strength(Family family, double strength, uint64_t rng_seed) {
  if (strength < 0.0 || strength > 1.0) fail(ErrorCode::ParamOutOfRange, "strength must lie in [0,1]");
  Rng rng = Rng(rng_seed).split("strength_recipe").split(static_cast<uint64_t>(family));
  DegradationRecipe r;
  r.family = family;
  r.seed = rng_seed;
  for (const auto& p : table(family))
    r.params[p.name] = (p.severity == Severity::kNuisance) ? sample_param(p, rng) : graded_param(p, strength);
  return r;
}

void validate_recipe(const DegradationRecipe& recipe) {
  const auto& specs = table(recipe.family);
  if (recipe.family == Family::kClean && !recipe.params.empty())
    fail(ErrorCode::ParamOutOfRange, "clean recipe must carry no parameters");
  for (const auto& p : specs) {
    const auto it = recipe.params.find(p.name);
    if (it == recipe.params.end())
      fail(ErrorCode::ParamOutOfRange, std::string("missing parameter '") + p.name + "' for family " +
                                           family_name(recipe.family));
    const double v = it->second;
    if (!(v >= p.lo && v <= p.hi))
      fail(ErrorCode::ParamOutOfRange, std::string("parameter '") + p.name + "' out of range for family " +
                                           family_name(recipe.family));
    if (p.kind != ParamKind::kReal && v != std::round(v))
      fail(ErrorCode::ParamOutOfRange, std::string("parameter '") + p.name + "' must be an integer");
    if (p.kind == ParamKind::kOddInt && static_cast<int64_t>(v) % 2 == 0)
      fail(ErrorCode::ParamOutOfRange, std::string("parameter '") + p.name + "' must be odd");
  }
  for (const auto& [name, _] : recipe.params) {
    bool known = false;
    for (const auto& p : specs) known = known || name == p.name;
    if (!known)
      fail(ErrorCode::ParamOutOfRange,
           "unexpected parameter '" + name + "' for family " + family_name(recipe.family));
  }
}

}  // namespace dslfiqa::degrade
