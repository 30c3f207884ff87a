#include "lowshot/optim.hpp"

#include "lowshot/error.hpp"

#include <cmath>
#include <string>

namespace lowshot {

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(Errc::InvalidConfig, what);
  };
  require(base_lr > 0.0, "base_lr must be > 0");
  require(fresh_multiplier > 0.0, "fresh_multiplier must be > 0");
  require(decay_rate > 0.0 && decay_rate <= 1.0, "decay_rate must be in (0, 1]");
  require(decay_every_epochs >= 1, "decay_every_epochs must be >= 1");
  require(rms_decay >= 0.0 && rms_decay < 1.0, "rms_decay must be in [0, 1)");
  require(momentum >= 0.0 && momentum < 1.0, "momentum must be in [0, 1)");
  require(epsilon >= 0.0, "epsilon must be >= 0");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(jitter_sigma >= 0.0, "jitter_sigma must be >= 0");
}

double lr_at_epoch(const TrainConfig& cfg, std::size_t epoch, ParamGroup group) {
  const auto steps = static_cast<double>(epoch / cfg.decay_every_epochs);
  const double lr = cfg.base_lr * std::pow(cfg.decay_rate, steps);
  return group == ParamGroup::fresh ? lr * cfg.fresh_multiplier : lr;
}

bool operator==(const OptimState& a, const OptimState& b) {
  if (a.epoch != b.epoch || a.step != b.step || a.slots.size() != b.slots.size()) return false;
  for (auto ia = a.slots.begin(), ib = b.slots.begin(); ia != a.slots.end(); ++ia, ++ib) {
    if (ia->first != ib->first) return false;
    if (!bitwise_equal(ia->second.mean_square, ib->second.mean_square)) return false;
    if (!bitwise_equal(ia->second.momentum, ib->second.momentum)) return false;
  }
  return true;
}

void rmsprop_update(Matrix& weight, const Matrix& grad, RmsSlot& slot, double lr, const TrainConfig& cfg) {
  if (grad.rows() != weight.rows() || grad.cols() != weight.cols()) throw Error(Errc::InvalidShape, "gradient shape mismatch");
  if (!grad.allFinite()) throw Error(Errc::NonFiniteGradient, "gradient has non-finite entries");
  if (slot.mean_square.rows() != weight.rows() || slot.mean_square.cols() != weight.cols()) {
    slot.mean_square = Matrix::Zero(weight.rows(), weight.cols());
    slot.momentum = Matrix::Zero(weight.rows(), weight.cols());
  }
  const double rho = cfg.rms_decay;
  const double mu = cfg.momentum;
  for (Eigen::Index k = 0; k < weight.size(); ++k) {
    const double g = grad.data()[k];
    double& acc = slot.mean_square.data()[k];
    double& mom = slot.momentum.data()[k];
    acc = rho * acc + (1.0 - rho) * g * g;
    const double denom = std::sqrt(acc + cfg.epsilon);
    // A zero denominator only arises with g == 0, zero history and epsilon 0.
    mom = mu * mom + (denom > 0.0 ? lr * g / denom : 0.0);
    weight.data()[k] -= mom;
  }
}

void rmsprop_step(ParamSet& params, const ParamSet& grads, OptimState& state, std::string_view scope,
                  const TrainConfig& cfg) {
  for (auto& [name, param] : params) {
    const double lr = lr_at_epoch(cfg, static_cast<std::size_t>(state.epoch), param.group);
    RmsSlot& slot = state.slots[std::string(scope) + "/" + name];
    rmsprop_update(param.value, grads.value(name), slot, lr, cfg);
  }
}

}  // namespace lowshot
