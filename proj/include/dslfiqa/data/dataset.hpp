#pragma once

#include <string>
#include <vector>

#include "dslfiqa/core/image.hpp"
#include "dslfiqa/data/manifest.hpp"
#include "dslfiqa/landmarks/landmarks.hpp"

namespace dslfiqa::data {

// Manifest plus materialized pixels and landmarks, aligned by record index.
struct LoadedDataset {
  DatasetManifest manifest;
  std::vector<Image> images;
  std::vector<lm::LandmarkSet> landmarks;  // empty set when no landmark file entry exists
  std::string root_dir;

  std::vector<size_t> split_indices(Split s) const {
    std::vector<size_t> out;
    for (size_t i = 0; i < manifest.records.size(); ++i)
      if (manifest.records[i].split == s) out.push_back(i);
    return out;
  }
};

// Reads the manifest, every referenced image (paths resolved relative to the
// manifest's directory), and the sibling landmarks.jsonl when present.
LoadedDataset load_dataset(const std::string& manifest_path);

}  // namespace dslfiqa::data
