#include "lowshot/embedder.hpp"

#include "lowshot/error.hpp"
#include "lowshot/random.hpp"

#include <string>

namespace lowshot {
namespace {

std::string weight_name(std::size_t k) { return "layer" + std::to_string(k) + ".weight"; }
std::string bias_name(std::size_t k) { return "layer" + std::to_string(k) + ".bias"; }

Matrix activate(const Matrix& z, Activation a) {
  if (a == Activation::relu) return z.cwiseMax(0.0);
  return z.array().tanh().matrix();
}

Matrix activation_grad(const Matrix& z, Activation a) {
  if (a == Activation::relu) return (z.array() > 0.0).cast<double>().matrix();
  return (1.0 - z.array().tanh().square()).matrix();
}

std::vector<std::size_t> layer_dims(const EmbedderConfig& c) {
  std::vector<std::size_t> dims{c.input_dim};
  dims.insert(dims.end(), c.hidden_dims.begin(), c.hidden_dims.end());
  dims.push_back(c.embedding_dim);
  return dims;
}

}  // namespace

std::string_view activation_name(Activation a) noexcept { return a == Activation::relu ? "relu" : "tanh"; }

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  throw Error(Errc::InvalidConfig, "unknown activation '" + std::string(name) + "'");
}

void EmbedderConfig::validate() const {
  if (input_dim == 0) throw Error(Errc::InvalidConfig, "input_dim must be >= 1");
  if (embedding_dim < 2) throw Error(Errc::InvalidConfig, "embedding_dim must be >= 2");
  for (std::size_t h : hidden_dims)
    if (h == 0) throw Error(Errc::InvalidConfig, "hidden dims must be >= 1");
}

EmbeddingNet::EmbeddingNet(EmbedderConfig config) : config_(std::move(config)) {
  config_.validate();
  const auto dims = layer_dims(config_);
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    params_.add(weight_name(k), xavier_uniform(dims[k + 1], dims[k], derive_seed(config_.seed, {k})));
    params_.add(bias_name(k), Matrix::Zero(static_cast<Eigen::Index>(dims[k + 1]), 1));
  }
}

EmbeddingNet::EmbeddingNet(EmbedderConfig config, ParamSet params)
    : config_(std::move(config)), params_(std::move(params)) {
  config_.validate();
  const auto dims = layer_dims(config_);
  if (params_.size() != 2 * (dims.size() - 1)) throw Error(Errc::InvalidShape, "parameter count does not match config");
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    const Matrix& w = params_.value(weight_name(k));
    const Matrix& b = params_.value(bias_name(k));
    const auto out = static_cast<Eigen::Index>(dims[k + 1]);
    const auto in = static_cast<Eigen::Index>(dims[k]);
    if (w.rows() != out || w.cols() != in || b.rows() != out || b.cols() != 1) {
      throw Error(Errc::InvalidShape, "layer " + std::to_string(k) + " shape does not match config");
    }
  }
}

Matrix EmbeddingNet::forward(const Matrix& x, Cache& cache) const {
  if (x.rows() != static_cast<Eigen::Index>(config_.input_dim)) {
    throw Error(Errc::InvalidShape, "input has " + std::to_string(x.rows()) + " entries, expected " +
                                        std::to_string(config_.input_dim));
  }
  if (!x.allFinite()) throw Error(Errc::InvalidShape, "input has non-finite entries");
  cache.inputs.clear();
  cache.pre.clear();
  Matrix h = x;
  const std::size_t layers = layer_count();
  for (std::size_t k = 0; k < layers; ++k) {
    Matrix z = params_.value(weight_name(k)) * h;
    z.colwise() += params_.value(bias_name(k)).col(0);
    cache.inputs.push_back(std::move(h));
    if (k + 1 < layers) {
      h = activate(z, config_.activation);
      cache.pre.push_back(std::move(z));
    } else {
      cache.raw = std::move(z);
    }
  }
  if (config_.normalize) {
    cache.out = normalize_columns(cache.raw, &cache.norms);
  } else {
    cache.out = cache.raw;
  }
  return cache.out;
}

void EmbeddingNet::backward(const Cache& cache, const Matrix& d_out, ParamSet& grads) const {
  Matrix d = config_.normalize ? normalize_columns_backward(cache.out, cache.norms, d_out) : d_out;
  for (std::size_t k = layer_count(); k-- > 0;) {
    grads.value(weight_name(k)).noalias() += d * cache.inputs[k].transpose();
    grads.value(bias_name(k)).col(0) += d.rowwise().sum();
    if (k == 0) break;
    Matrix dh = params_.value(weight_name(k)).transpose() * d;
    d = dh.cwiseProduct(activation_grad(cache.pre[k - 1], config_.activation));
  }
}

Vector EmbeddingNet::embed(const Vector& x) const {
  Cache cache;
  return forward(x, cache).col(0);
}

std::vector<Vector> EmbeddingNet::embed_batch(std::span<const Vector> xs) const {
  std::vector<Vector> out;
  out.reserve(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    try {
      out.push_back(embed(xs[i]));
    } catch (const Error& e) {
      throw Error(e.code(), "row " + std::to_string(i) + ": " + e.detail());
    }
  }
  return out;
}

}  // namespace lowshot
