#include "dslfiqa/data/manifest.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

namespace dslfiqa::data {

namespace {
const char* kSplitNames[] = {"train", "val", "test"};
const char* kToneNames[] = {"light", "medium", "dark", "unknown"};
const char* kGenderNames[] = {"male", "female", "unknown"};
}  // namespace

const char* split_name(Split s) { return kSplitNames[static_cast<int>(s)]; }

Split split_from_name(const std::string& name) {
  for (int i = 0; i < 3; ++i)
    if (name == kSplitNames[i]) return static_cast<Split>(i);
  fail(ErrorCode::BadConfig, "unknown split '" + name + "'");
}

const char* skin_tone_name(SkinTone t) { return kToneNames[static_cast<int>(t)]; }

SkinTone skin_tone_from_name(const std::string& name) {
  for (int i = 0; i < 4; ++i)
    if (name == kToneNames[i]) return static_cast<SkinTone>(i);
  fail(ErrorCode::BadConfig, "unknown skin tone '" + name + "'");
}

const char* gender_name(Gender g) { return kGenderNames[static_cast<int>(g)]; }

Gender gender_from_name(const std::string& name) {
  for (int i = 0; i < 3; ++i)
    if (name == kGenderNames[i]) return static_cast<Gender>(i);
  fail(ErrorCode::BadConfig, "unknown gender '" + name + "'");
}

std::vector<const ManifestRecord*> DatasetManifest::split_records(Split s) const {
  std::vector<const ManifestRecord*> out;
  for (const auto& r : records)
    if (r.split == s) out.push_back(&r);
  return out;
}

void DatasetManifest::validate() const {
  std::set<std::string> paths;
  for (const auto& r : records) {
    if (!paths.insert(r.image_path).second)
      fail(ErrorCode::BadConfig, "duplicate manifest path '" + r.image_path + "'");
    if (r.mos && (*r.mos < 0.0 || *r.mos > 1.0))
      fail(ErrorCode::ParamOutOfRange, "MOS outside [0,1] for '" + r.image_path + "'");
  }
}

void write_manifest(const std::string& path, const DatasetManifest& manifest) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::IOFailure, "cannot open '" + path + "' for writing");
  for (const auto& r : manifest.records) {
    nlohmann::json j;
    j["image_path"] = r.image_path;
    if (r.mos)
      j["mos"] = *r.mos;
    else
      j["mos"] = nullptr;
    j["split"] = split_name(r.split);
    j["skin_tone"] = skin_tone_name(r.skin_tone);
    j["gender"] = gender_name(r.gender);
    j["occluded"] = r.occluded;
    if (r.label) j["label"] = *r.label;
    if (r.strength) j["strength"] = *r.strength;
    out << j.dump() << "\n";
  }
  if (!out) fail(ErrorCode::IOFailure, "write failed for '" + path + "'");
}

DatasetManifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IOFailure, "cannot open '" + path + "'");
  DatasetManifest manifest;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded())
      fail(ErrorCode::IOFailure, "corrupt manifest line " + std::to_string(line_no) + " in '" + path + "'");
    ManifestRecord r;
    r.image_path = j.at("image_path").get<std::string>();
    if (j.contains("mos") && !j.at("mos").is_null()) r.mos = j.at("mos").get<double>();
    r.split = split_from_name(j.at("split").get<std::string>());
    r.skin_tone = skin_tone_from_name(j.value("skin_tone", "unknown"));
    r.gender = gender_from_name(j.value("gender", "unknown"));
    r.occluded = j.value("occluded", false);
    if (j.contains("label") && !j.at("label").is_null()) r.label = j.at("label").get<std::string>();
    if (j.contains("strength") && !j.at("strength").is_null()) r.strength = j.at("strength").get<double>();
    manifest.records.push_back(std::move(r));
  }
  return manifest;
}

double acr_to_score(AcrCategory category) {
  switch (category) {
    case AcrCategory::kBad: return 0.10;
    case AcrCategory::kPoor: return 0.30;
    case AcrCategory::kFair: return 0.50;
    case AcrCategory::kGood: return 0.70;
    case AcrCategory::kExcellent: return 0.90;
  }
  fail(ErrorCode::InvalidCategory, "unknown ACR category");
}

double acr_to_score_raw(double raw) {
  if (raw < 0.0 || raw > 100.0) fail(ErrorCode::InvalidCategory, "raw ACR score outside [0,100]");
  return raw / 100.0;
}

double acr_to_score(const AnnotationRecord& record) {
  return record.is_category ? acr_to_score(record.category) : acr_to_score_raw(record.raw_score);
}

double aggregate_mos(const std::vector<AnnotationRecord>& records) {
  if (records.empty()) fail(ErrorCode::NoAnnotations, "aggregate_mos: no annotations");
  double sum = 0.0;
  for (const auto& r : records) sum += acr_to_score(r);
  return sum / static_cast<double>(records.size());
}

QualificationResult qualify_annotator(const std::vector<double>& answers, const std::vector<double>& ground_truth,
                                      double margin, double threshold) {
  if (answers.size() != ground_truth.size() || answers.empty())
    fail(ErrorCode::LengthMismatch, "qualify_annotator: answer and ground-truth lengths disagree");
  int correct = 0;
  // the boundary counts as correct; the epsilon keeps that true in binary
  for (size_t i = 0; i < answers.size(); ++i)
    if (std::abs(answers[i] - ground_truth[i]) <= margin + 1e-12) ++correct;
  QualificationResult result;
  result.accuracy = static_cast<double>(correct) / static_cast<double>(answers.size());
  result.passed = result.accuracy >= threshold;
  return result;
}

}  // namespace dslfiqa::data
