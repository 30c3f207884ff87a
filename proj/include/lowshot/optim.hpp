#pragma once

#include "lowshot/params.hpp"

#include <cstdint>
#include <map>
#include <string>

namespace lowshot {

struct TrainConfig {
  double base_lr = 1e-4;
  double fresh_multiplier = 10.0;
  double decay_rate = 0.94;
  std::size_t decay_every_epochs = 4;
  double rms_decay = 0.9;
  double momentum = 0.9;
  double epsilon = 1e-10;
  std::size_t batch_size = 64;
  std::size_t epochs = 30;
  std::uint64_t seed = 0;
  /// Draw classes uniformly for every mini-batch slot.
  bool oversample_novel = true;
  /// Train the classifier scale; false freezes it.
  bool train_scale = true;
  /// Random augmentation of training inputs (jitter for vectors, flip and
  /// crop for images). Zero sigma disables jitter.
  bool augment = false;
  double jitter_sigma = 0.05;

  /// Throws InvalidConfig for out-of-range values.
  void validate() const;
};

/// base_lr * decay_rate^floor(epoch / decay_every) (* fresh_multiplier).
double lr_at_epoch(const TrainConfig& cfg, std::size_t epoch, ParamGroup group);

struct RmsSlot {
  Matrix mean_square;
  Matrix momentum;
};

struct OptimState {
  /// Keyed by "<scope>/<param name>".
  std::map<std::string, RmsSlot> slots;
  std::uint64_t epoch = 0;
  std::uint64_t step = 0;

  friend bool operator==(const OptimState& a, const OptimState& b);
};

/// One RMSProp-with-momentum update on a single tensor:
///   acc <- rho acc + (1 - rho) g^2
///   mom <- mu mom + lr g / sqrt(acc + eps)
///   w   <- w - mom
/// Throws NonFiniteGradient.
void rmsprop_update(Matrix& weight, const Matrix& grad, RmsSlot& slot, double lr, const TrainConfig& cfg);

/// Updates every tensor of `params` with its group's learning rate for the
/// state's current epoch. Slots whose shape no longer matches are reset.
void rmsprop_step(ParamSet& params, const ParamSet& grads, OptimState& state, std::string_view scope,
                  const TrainConfig& cfg);

}  // namespace lowshot
