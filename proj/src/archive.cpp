#include "dslfiqa/core/archive.hpp"

#include <cstring>
#include <fstream>

#include "dslfiqa/core/error.hpp"
#include "dslfiqa/core/sha1.hpp"

namespace dslfiqa {

namespace {
constexpr char kMagic[4] = {'D', 'S', 'L', 'A'};
constexpr uint32_t kVersion = 1;

int64_t shape_count(const std::vector<int64_t>& shape) {
  int64_t n = 1;
  for (const int64_t d : shape) n *= d;
  return n;
}
}  // namespace

void Archive::add(const std::string& name, const std::vector<int64_t>& shape, std::vector<float> data) {
  if (shape_count(shape) != static_cast<int64_t>(data.size()))
    fail(ErrorCode::ShapeMismatch, "archive array '" + name + "': shape does not match payload size");
  arrays.push_back(Entry{name, shape, std::move(data)});
}

bool Archive::has(const std::string& name) const {
  for (const auto& e : arrays)
    if (e.name == name) return true;
  return false;
}

const Archive::Entry& Archive::get(const std::string& name) const {
  for (const auto& e : arrays)
    if (e.name == name) return e;
  fail(ErrorCode::BadCheckpoint, "archive is missing array '" + name + "'");
}

std::string Archive::content_hash() const {
  Sha1 sha;
  for (const auto& e : arrays) sha.update(e.data.data(), e.data.size() * sizeof(float));
  return sha.hex_digest();
}

void Archive::save(const std::string& path) const {
  nlohmann::json header;
  header["meta"] = meta;
  header["content_hash"] = content_hash();
  nlohmann::json dir = nlohmann::json::array();
  uint64_t offset = 0;
  for (const auto& e : arrays) {
    const uint64_t nbytes = e.data.size() * sizeof(float);
    dir.push_back({{"name", e.name}, {"dtype", "f32"}, {"shape", e.shape}, {"offset", offset}, {"nbytes", nbytes}});
    offset += nbytes;
  }
  header["arrays"] = dir;
  const std::string header_str = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IOFailure, "cannot open '" + path + "' for writing");
  out.write(kMagic, 4);
  const uint32_t version = kVersion;
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  const uint64_t header_len = header_str.size();
  out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
  out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  for (const auto& e : arrays)
    out.write(reinterpret_cast<const char*>(e.data.data()), static_cast<std::streamsize>(e.data.size() * sizeof(float)));
  if (!out) fail(ErrorCode::IOFailure, "write failed for '" + path + "'");
}

Archive Archive::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IOFailure, "cannot open '" + path + "'");
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) fail(ErrorCode::BadCheckpoint, "'" + path + "' is not a checkpoint archive");
  uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (version != kVersion) fail(ErrorCode::BadCheckpoint, "unsupported archive version in '" + path + "'");
  uint64_t header_len = 0;
  in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
  std::string header_str(header_len, '\0');
  in.read(header_str.data(), static_cast<std::streamsize>(header_len));
  if (!in) fail(ErrorCode::BadCheckpoint, "truncated archive header in '" + path + "'");
  nlohmann::json header = nlohmann::json::parse(header_str, nullptr, false);
  if (header.is_discarded()) fail(ErrorCode::BadCheckpoint, "corrupt archive header in '" + path + "'");

  Archive ar;
  ar.meta = header.value("meta", nlohmann::json::object());
  for (const auto& d : header.at("arrays")) {
    Entry e;
    e.name = d.at("name").get<std::string>();
    if (d.at("dtype").get<std::string>() != "f32") fail(ErrorCode::BadCheckpoint, "unsupported dtype in '" + path + "'");
    e.shape = d.at("shape").get<std::vector<int64_t>>();
    const uint64_t nbytes = d.at("nbytes").get<uint64_t>();
    e.data.resize(nbytes / sizeof(float));
    in.read(reinterpret_cast<char*>(e.data.data()), static_cast<std::streamsize>(nbytes));
    if (!in) fail(ErrorCode::BadCheckpoint, "truncated array '" + e.name + "' in '" + path + "'");
    ar.arrays.push_back(std::move(e));
  }
  const std::string expect = header.value("content_hash", "");
  if (!expect.empty() && expect != ar.content_hash())
    fail(ErrorCode::BadCheckpoint, "content hash mismatch in '" + path + "'");
  return ar;
}

}  // namespace dslfiqa
