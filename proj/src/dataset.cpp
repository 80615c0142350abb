#include "dslfiqa/data/dataset.hpp"

#include <filesystem>
#include <map>

#include "dslfiqa/io/image_io.hpp"

namespace dslfiqa::data {

LoadedDataset load_dataset(const std::string& manifest_path) {
  namespace fs = std::filesystem;
  LoadedDataset ds;
  ds.manifest = read_manifest(manifest_path);
  ds.manifest.validate();
  ds.root_dir = fs::path(manifest_path).parent_path().string();

  std::map<std::string, lm::LandmarkSet> by_path;
  const fs::path lm_path = fs::path(ds.root_dir) / "landmarks.jsonl";
  if (fs::exists(lm_path))
    for (auto& [image_id, set] : lm::read_landmark_file(lm_path.string())) by_path[image_id] = std::move(set);

  ds.images.reserve(ds.manifest.records.size());
  ds.landmarks.reserve(ds.manifest.records.size());
  for (const auto& rec : ds.manifest.records) {
    const fs::path img_path = fs::path(rec.image_path).is_absolute()
                                  ? fs::path(rec.image_path)
                                  : fs::path(ds.root_dir) / rec.image_path;
    ds.images.push_back(read_image(img_path.string()));
    const auto it = by_path.find(rec.image_path);
    ds.landmarks.push_back(it != by_path.end() ? it->second : lm::LandmarkSet{});
  }
  return ds;
}

}  // namespace dslfiqa::data
