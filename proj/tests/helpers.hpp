#pragma once

#include "lowshot/data.hpp"
#include "lowshot/error.hpp"
#include "lowshot/gradcheck.hpp"
#include "lowshot/model.hpp"
#include "lowshot/random.hpp"
#include "lowshot/tensor.hpp"

#include <doctest.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

namespace testutil {

// Category of the lowshot::Error thrown by fn; fails the test if none is.
template <class F>
lowshot::Errc code_of(F&& fn) {
  try {
    fn();
  } catch (const lowshot::Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return lowshot::Errc::IoFailure;
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag = "t")
      : path(std::filesystem::temp_directory_path() / ("lowshot_" + tag + "_" + std::to_string(::getpid()))) {
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

inline std::vector<std::uint8_t> read_all(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

inline void write_all(const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline lowshot::Vector random_unit(std::size_t dim, lowshot::CounterRng& rng) {
  lowshot::Vector v(static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.normal();
  return lowshot::l2_normalize(v);
}

inline lowshot::Matrix random_matrix(std::size_t rows, std::size_t cols, lowshot::CounterRng& rng) {
  lowshot::Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.normal();
  return m;
}

inline std::vector<lowshot::ClassId> iota_ids(std::size_t n, lowshot::ClassId first = 0) {
  std::vector<lowshot::ClassId> ids(n);
  std::iota(ids.begin(), ids.end(), first);
  return ids;
}

// Small untrained model: input_dim -> hidden -> dim, random head over `classes`.
inline lowshot::Model small_model(std::size_t input_dim, std::size_t dim, std::size_t classes,
                                  std::uint64_t seed, std::vector<std::size_t> hidden = {16}) {
  lowshot::EmbedderConfig cfg;
  cfg.input_dim = input_dim;
  cfg.hidden_dims = std::move(hidden);
  cfg.embedding_dim = dim;
  cfg.seed = seed;
  return lowshot::Model{lowshot::EmbeddingNet(cfg),
                        lowshot::CosineHead::random(dim, iota_ids(classes), seed + 1), {}};
}

inline lowshot::SupportSet support_of(lowshot::ClassId label, std::vector<lowshot::Vector> xs) {
  lowshot::SupportSet s;
  s.label = label;
  s.examples = std::move(xs);
  s.source_rows.resize(s.examples.size());
  return s;
}

// Finite-difference check of batch_loss over every embedder and head tensor
// (including log_scale).
inline lowshot::GradCheckReport pipeline_check(const lowshot::Model& model, const lowshot::Matrix& inputs,
                                               std::vector<std::size_t> columns, double tol) {
  lowshot::ParamSet joint;
  for (const auto& [name, p] : model.embedder.params()) joint.add("e." + name, p.value, p.group);
  for (const auto& [name, p] : model.head.params()) joint.add("h." + name, p.value, p.group);
  const lowshot::DifferentiableFn fn = [&](const lowshot::ParamSet& ps, lowshot::ParamSet* g) {
    lowshot::Model m = model;
    for (auto& [name, p] : m.embedder.params()) p.value = ps.value("e." + name);
    for (auto& [name, p] : m.head.params()) p.value = ps.value("h." + name);
    lowshot::ModelGrads grads;
    const double loss = lowshot::batch_loss(m, inputs, columns, g ? &grads : nullptr, true);
    if (g) {
      for (const auto& [name, p] : grads.embedder) g->value("e." + name) = p.value;
      for (const auto& [name, p] : grads.head) g->value("h." + name) = p.value;
    }
    return loss;
  };
  return lowshot::grad_check(fn, joint, tol);
}

}  // namespace testutil
