#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dslfiqa/core/error.hpp"

namespace dslfiqa::data {

enum class Split { kTrain, kVal, kTest };
const char* split_name(Split s);
Split split_from_name(const std::string& name);

enum class SkinTone { kLight, kMedium, kDark, kUnknown };
const char* skin_tone_name(SkinTone t);
SkinTone skin_tone_from_name(const std::string& name);

enum class Gender { kMale, kFemale, kUnknown };
const char* gender_name(Gender g);
Gender gender_from_name(const std::string& name);

struct ManifestRecord {
  std::string image_path;
  std::optional<double> mos;           // in [0,1] when present
  Split split = Split::kTrain;
  SkinTone skin_tone = SkinTone::kUnknown;
  Gender gender = Gender::kUnknown;
  bool occluded = false;
  std::optional<std::string> label;    // degradation family, for retrieval sets
  std::optional<double> strength;      // degradation strength used at generation

  bool operator==(const ManifestRecord&) const = default;
};

struct DatasetManifest {
  std::vector<ManifestRecord> records;

  std::vector<const ManifestRecord*> split_records(Split s) const;
  void validate() const;  // unique paths, MOS present where required
};

// JSON-lines persistence, one record per line.
void write_manifest(const std::string& path, const DatasetManifest& manifest);
DatasetManifest read_manifest(const std::string& path);

// ---------------------------------------------------------------------------
// Annotation protocol
// ---------------------------------------------------------------------------

enum class AcrCategory { kBad, kPoor, kFair, kGood, kExcellent };

struct AnnotationRecord {
  std::string image_id;
  std::string annotator_id;
  bool is_category = false;
  AcrCategory category = AcrCategory::kFair;
  double raw_score = 0.0;  // in [0,100] when !is_category
};

// Category entries resolve to their band midpoint (bad=0.10 ... excellent=0.90);
// raw entries map linearly from [0,100] to [0,1].
double acr_to_score(const AnnotationRecord& record);
double acr_to_score(AcrCategory category);
double acr_to_score_raw(double raw_0_to_100);

// Arithmetic mean of the converted scores for one image.
double aggregate_mos(const std::vector<AnnotationRecord>& records);

struct QualificationResult {
  bool passed = false;
  double accuracy = 0.0;
};

// An answer counts as correct when it lies within +-margin of the ground
// truth (inclusive); the annotator passes at accuracy >= threshold.
QualificationResult qualify_annotator(const std::vector<double>& answers, const std::vector<double>& ground_truth,
                                      double margin = 0.15, double threshold = 0.80);

}  // namespace dslfiqa::data
