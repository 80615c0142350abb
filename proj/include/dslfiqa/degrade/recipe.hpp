#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "dslfiqa/core/error.hpp"

namespace dslfiqa::degrade {

// The 16-way taxonomy: one clean family plus 15 synthetic degradations.
enum class Family : int {
  kClean = 0,
  kLowLight,
  kHighLight,
  kBlur,
  kDefocus,
  kDownsample2x,
  kGaussianNoise,
  kGaussianBlur,
  kJpegCompression,
  kMotionBlur,
  kSunFlare,
  kIsoNoise,
  kShadow,
  kZoomBlur,
  kMixedExtra1,
  kMixedExtra2,
};

constexpr int kFamilyCount = 16;

const char* family_name(Family f);
Family family_from_name(const std::string& name);  // throws UnknownFamily
std::vector<Family> all_families();
std::vector<Family> degrading_families();  // everything except kClean

// How a parameter participates in severity grading: kUp grows with strength,
// kDown shrinks, kNuisance is sampled independently of strength.
enum class Severity { kNuisance, kUp, kDown };
enum class ParamKind { kReal, kInt, kOddInt };

struct ParamSpec {
  const char* name;
  double lo;
  double hi;
  ParamKind kind;
  Severity severity;
};

// Single source of truth for every family's parameter ranges.
const std::vector<ParamSpec>& family_params(Family f);

struct DegradationRecipe {
  Family family = Family::kClean;
  std::map<std::string, double> params;
  uint64_t seed = 0;

  nlohmann::json to_json() const;
  static DegradationRecipe from_json(const nlohmann::json& j);
};

// Uniform parameter draw within the family's documented ranges.
DegradationRecipe sample_recipe(Family family, uint64_t rng_seed);

// Severity-graded draw: strength 0 is the mildest end of each graded range,
// strength 1 the harshest; nuisance parameters still come from the seed.
DegradationRecipe recipe_at_strength(Family family, double strength, uint64_t rng_seed);

// Validates parameter presence and ranges; throws ParamOutOfRange naming the
// offending parameter.
void validate_recipe(const DegradationRecipe& recipe);

}  // namespace dslfiqa::degrade
