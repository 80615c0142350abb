#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "dslfiqa/core/error.hpp"

namespace dslfiqa::lm {

struct Landmark {
  int id = 0;        // stable identifier in [0, vocab)
  float x = 0.0f;    // normalized to [0, 1] over the image (or patch) extent
  float y = 0.0f;
};

struct LandmarkSet {
  std::vector<Landmark> entries;
  int vocab = 68;

  bool ids_unique() const;
};

struct PatchRect {
  int x0 = 0, y0 = 0, w = 0, h = 0;
};

// Sinusoidal encoding of a stable landmark identifier: for t = id / vocab,
// [sin(2^0 pi t), cos(2^0 pi t), ..., sin(2^{F-1} pi t), cos(2^{F-1} pi t)].
// Depends only on (id, vocab, bands), never on geometry.
Eigen::VectorXf encode_landmark_id(int id, int vocab, int bands);

// Subset of landmarks whose pixel positions fall inside the rect, with
// coordinates re-normalized to the patch and identifiers untouched.
LandmarkSet landmarks_in_patch(const LandmarkSet& landmarks, const PatchRect& rect, int image_h, int image_w);

// Mean over present landmarks of [encode_landmark_id(id) || (x, y)]; the
// zero vector of size 2*bands + 2 when the patch holds no landmarks.
Eigen::VectorXf pool_landmark_encoding(const LandmarkSet& in_patch, int vocab, int bands);

// Mirrors the set horizontally (x -> 1 - x); identifiers are untouched.
LandmarkSet flip_horizontal(const LandmarkSet& landmarks);

// JSON-lines persistence: one {image_id, landmarks:[{id,x,y}]} object per line.
void write_landmark_file(const std::string& path, const std::vector<std::pair<std::string, LandmarkSet>>& sets);
std::vector<std::pair<std::string, LandmarkSet>> read_landmark_file(const std::string& path);

}  // namespace dslfiqa::lm
