#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace dslfiqa::data {

struct EmbeddingTable {
  Eigen::MatrixXf reps;               // N x D
  std::vector<std::string> labels;    // N entries, input order preserved
};

// TSV with header dim_0..dim_{D-1}, label. Floats are printed with enough
// digits to round-trip exactly.
void write_embeddings_tsv(const std::string& path, const EmbeddingTable& table);
EmbeddingTable read_embeddings_tsv(const std::string& path);

}  // namespace dslfiqa::data
