#include "dslfiqa/data/embeddings.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "dslfiqa/core/error.hpp"

namespace dslfiqa::data {

void write_embeddings_tsv(const std::string& path, const EmbeddingTable& table) {
  if (table.reps.rows() != static_cast<Eigen::Index>(table.labels.size()))
    fail(ErrorCode::LengthMismatch, "embedding rows and labels disagree");
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::IOFailure, "cannot open '" + path + "' for writing");
  const Eigen::Index d = table.reps.cols();
  for (Eigen::Index j = 0; j < d; ++j) out << "dim_" << j << "\t";
  out << "label\n";
  char buf[64];
  for (Eigen::Index i = 0; i < table.reps.rows(); ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(table.reps(i, j)));
      out << buf << "\t";
    }
    out << table.labels[static_cast<size_t>(i)] << "\n";
  }
  if (!out) fail(ErrorCode::IOFailure, "write failed for '" + path + "'");
}

EmbeddingTable read_embeddings_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IOFailure, "cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::IOFailure, "'" + path + "' is empty");
  Eigen::Index d = 0;
  {
    std::istringstream header(line);
    std::string col;
    while (std::getline(header, col, '\t'))
      if (col.rfind("dim_", 0) == 0) ++d;
  }
  std::vector<std::vector<float>> rows;
  std::vector<std::string> labels;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::vector<float> row;
    std::string cell;
    for (Eigen::Index j = 0; j < d; ++j) {
      if (!std::getline(ss, cell, '\t')) fail(ErrorCode::IOFailure, "short row in '" + path + "'");
      row.push_back(std::strtof(cell.c_str(), nullptr));
    }
    if (!std::getline(ss, cell)) fail(ErrorCode::IOFailure, "missing label in '" + path + "'");
    rows.push_back(std::move(row));
    labels.push_back(cell);
  }
  EmbeddingTable table;
  table.reps.resize(static_cast<Eigen::Index>(rows.size()), d);
  for (size_t i = 0; i < rows.size(); ++i)
    for (Eigen::Index j = 0; j < d; ++j) table.reps(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<size_t>(j)];
  table.labels = std::move(labels);
  return table;
}

}  // namespace dslfiqa::data
