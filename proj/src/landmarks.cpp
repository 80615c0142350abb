#include "dslfiqa/landmarks/landmarks.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

namespace dslfiqa::lm {

bool LandmarkSet::ids_unique() const {
  std::set<int> seen;
  for (const auto& e : entries)
    if (!seen.insert(e.id).second) return false;
  return true;
}

Eigen::VectorXf encode_landmark_id(int id, int vocab, int bands) {
  if (id < 0 || id >= vocab) fail(ErrorCode::IdOutOfRange, "landmark id " + std::to_string(id) + " outside vocabulary");
  if (bands < 1) fail(ErrorCode::ParamOutOfRange, "frequency band count must be >= 1");
  const double t = static_cast<double>(id) / static_cast<double>(vocab);
  Eigen::VectorXf enc(2 * bands);
  double freq = 3.14159265358979323846;  // 2^0 * pi
  for (int f = 0; f < bands; ++f) {
    enc(2 * f) = static_cast<float>(std::sin(freq * t));
    enc(2 * f + 1) = static_cast<float>(std::cos(freq * t));
    freq *= 2.0;
  }
  return enc;
}

LandmarkSet landmarks_in_patch(const LandmarkSet& landmarks, const PatchRect& rect, int image_h, int image_w) {
  if (rect.w <= 0 || rect.h <= 0 || rect.x0 < 0 || rect.y0 < 0 || rect.x0 + rect.w > image_w ||
      rect.y0 + rect.h > image_h)
    fail(ErrorCode::RectOutOfBounds, "patch rect exceeds image bounds");
  LandmarkSet out;
  out.vocab = landmarks.vocab;
  // Containment is judged on the pixel-center grid: the patch spans centers
  // [x0, x0+w-1] x [y0, y0+h-1], so re-normalized locals land exactly in [0,1].
  for (const auto& e : landmarks.entries) {
    const float px = e.x * static_cast<float>(image_w - 1);
    const float py = e.y * static_cast<float>(image_h - 1);
    if (px < rect.x0 || px > rect.x0 + rect.w - 1 || py < rect.y0 || py > rect.y0 + rect.h - 1) continue;
    Landmark local = e;
    local.x = (px - rect.x0) / static_cast<float>(std::max(rect.w - 1, 1));
    local.y = (py - rect.y0) / static_cast<float>(std::max(rect.h - 1, 1));
    out.entries.push_back(local);
  }
  return out;
}

Eigen::VectorXf pool_landmark_encoding(const LandmarkSet& in_patch, int vocab, int bands) {
  Eigen::VectorXf pooled = Eigen::VectorXf::Zero(2 * bands + 2);
  if (in_patch.entries.empty()) return pooled;
  for (const auto& e : in_patch.entries) {
    pooled.head(2 * bands) += encode_landmark_id(e.id, vocab, bands);
    pooled(2 * bands) += e.x;
    pooled(2 * bands + 1) += e.y;
  }
  pooled /= static_cast<float>(in_patch.entries.size());
  return pooled;
}

LandmarkSet flip_horizontal(const LandmarkSet& landmarks) {
  LandmarkSet out = landmarks;
  for (auto& e : out.entries) e.x = 1.0f - e.x;
  return out;
}

void write_landmark_file(const std::string& path, const std::vector<std::pair<std::string, LandmarkSet>>& sets) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::IOFailure, "cannot open '" + path + "' for writing");
  for (const auto& [image_id, set] : sets) {
    nlohmann::json lms = nlohmann::json::array();
    for (const auto& e : set.entries) lms.push_back({{"id", e.id}, {"x", e.x}, {"y", e.y}});
    nlohmann::json line = {{"image_id", image_id}, {"landmarks", lms}, {"vocab", set.vocab}};
    out << line.dump() << "\n";
  }
  if (!out) fail(ErrorCode::IOFailure, "write failed for '" + path + "'");
}

std::vector<std::pair<std::string, LandmarkSet>> read_landmark_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IOFailure, "cannot open '" + path + "'");
  std::vector<std::pair<std::string, LandmarkSet>> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) fail(ErrorCode::IOFailure, "corrupt landmark line in '" + path + "'");
    LandmarkSet set;
    set.vocab = j.value("vocab", 68);
    for (const auto& l : j.at("landmarks"))
      set.entries.push_back({l.at("id").get<int>(), l.at("x").get<float>(), l.at("y").get<float>()});
    out.emplace_back(j.at("image_id").get<std::string>(), std::move(set));
  }
  return out;
}

}  // namespace dslfiqa::lm
