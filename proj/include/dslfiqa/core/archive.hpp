#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace dslfiqa {

// Checkpoint container: named float32 arrays plus a free-form JSON metadata
// block, written as one self-describing binary file. The stored content hash
// is the SHA-1 of the raw array bytes in archive order.
struct Archive {
  struct Entry {
    std::string name;
    std::vector<int64_t> shape;       // [rows, cols]; column-major payload
    std::vector<float> data;
  };

  nlohmann::json meta;
  std::vector<Entry> arrays;

  void add(const std::string& name, const std::vector<int64_t>& shape, std::vector<float> data);
  bool has(const std::string& name) const;
  const Entry& get(const std::string& name) const;

  std::string content_hash() const;
  void save(const std::string& path) const;
  static Archive load(const std::string& path);
};

}  // namespace dslfiqa
