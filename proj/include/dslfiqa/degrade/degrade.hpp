#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "dslfiqa/core/image.hpp"
#include "dslfiqa/degrade/recipe.hpp"

namespace dslfiqa::degrade {

// Applies a recipe to an image. Output keeps the input dimensions (the 2x
// downsample restores them bicubically) and is clamped to [0,1]. Bit-exact
// for a fixed (recipe, seed) pair.
Image apply_degradation(const Image& image, const DegradationRecipe& recipe);

// One clean source image and its 15 degraded variants, ordered by family.
struct SetS {
  Image source;
  std::vector<std::pair<Image, DegradationRecipe>> members;
};

SetS build_set_S(const Image& source, uint64_t rng_seed);

// Pool of candidate members for Set R, typically materialized from a
// training manifest.
struct RPool {
  std::vector<Image> images;
  std::vector<float> mos;
};

struct SetR {
  std::vector<std::pair<Image, float>> members;
  std::vector<int> pool_indices;
};

// Draws n distinct pool indices; forces one entry with MOS > 0.9 into the
// draw when the shuffle missed them all.
std::vector<int> sample_set_r_indices(const std::vector<float>& mos, uint64_t rng_seed, int n);

SetR build_set_R(const RPool& pool, uint64_t rng_seed, int n);

// Resampling kernels, exposed for reuse by the procedural data generators.
Image resize_bicubic(const Image& img, int out_h, int out_w);
Plane convolve_separable(const Plane& src, const std::vector<float>& kernel);
Plane convolve_2d(const Plane& src, const Eigen::ArrayXXf& kernel);

}  // namespace dslfiqa::degrade
