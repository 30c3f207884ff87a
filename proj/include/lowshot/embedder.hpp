#pragma once

#include "lowshot/params.hpp"
#include "lowshot/tensor.hpp"

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace lowshot {

enum class Activation { relu, tanh };

std::string_view activation_name(Activation a) noexcept;
Activation parse_activation(std::string_view name);

struct EmbedderConfig {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden_dims{128};
  std::size_t embedding_dim = 64;
  Activation activation = Activation::relu;
  std::uint64_t seed = 0;
  /// Unit-normalize the output. Only the jointly trained baseline turns this off.
  bool normalize = true;

  /// Throws InvalidConfig if any dimension is zero or embedding_dim < 2.
  void validate() const;
  friend bool operator==(const EmbedderConfig&, const EmbedderConfig&) = default;
};

/// Multilayer perceptron x -> D with the activation after every hidden layer,
/// a linear output layer, and (by default) L2 normalization of the output.
///
/// Parameters are named "layer<k>.weight" (out x in) and "layer<k>.bias"
/// (out x 1), k counting from 0.
class EmbeddingNet {
 public:
  explicit EmbeddingNet(EmbedderConfig config);
  EmbeddingNet(EmbedderConfig config, ParamSet params);

  const EmbedderConfig& config() const { return config_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

  std::size_t input_dim() const { return config_.input_dim; }
  std::size_t output_dim() const { return config_.embedding_dim; }
  std::size_t layer_count() const { return config_.hidden_dims.size() + 1; }

  /// Embedding of one input. Unit length when the config normalizes.
  Vector embed(const Vector& x) const;

  /// embed() applied to each element in order. A DegenerateNorm failure
  /// names the offending index.
  std::vector<Vector> embed_batch(std::span<const Vector> xs) const;

  /// Activations kept by forward() for backward().
  struct Cache {
    std::vector<Matrix> inputs;  // input to each layer
    std::vector<Matrix> pre;     // pre-activation of each layer
    Matrix raw;                  // output before normalization
    Vector norms;                // column norms of raw (normalizing nets only)
    Matrix out;
  };

  /// Batched forward pass; columns of `x` are examples.
  Matrix forward(const Matrix& x, Cache& cache) const;

  /// Accumulates d(loss)/d(params) into `grads` given d(loss)/d(out).
  void backward(const Cache& cache, const Matrix& d_out, ParamSet& grads) const;

 private:
  EmbedderConfig config_;
  ParamSet params_;
};

}  // namespace lowshot
