#include "lowshot/params.hpp"

#include "lowshot/error.hpp"

#include <string>

namespace lowshot {

std::string_view group_name(ParamGroup g) noexcept {
  return g == ParamGroup::pretrained ? "pretrained" : "fresh";
}

ParamGroup parse_group(std::string_view name) {
  if (name == "pretrained") return ParamGroup::pretrained;
  if (name == "fresh") return ParamGroup::fresh;
  throw Error(Errc::InvalidConfig, "unknown parameter group '" + std::string(name) + "'");
}

void ParamSet::add(std::string name, Matrix value, ParamGroup group) {
  if (contains(name)) throw Error(Errc::InvalidShape, "duplicate parameter '" + name + "'");
  params_.emplace(std::move(name), Param{std::move(value), group});
}

Param& ParamSet::at(std::string_view name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw Error(Errc::IndexOutOfRange, "no parameter '" + std::string(name) + "'");
  return it->second;
}

const Param& ParamSet::at(std::string_view name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw Error(Errc::IndexOutOfRange, "no parameter '" + std::string(name) + "'");
  return it->second;
}

void ParamSet::assign(std::string_view name, Matrix value, bool allow_reshape) {
  Param& p = at(name);
  if (!allow_reshape && (p.value.rows() != value.rows() || p.value.cols() != value.cols())) {
    throw Error(Errc::InvalidShape, "shape change for parameter '" + std::string(name) + "'");
  }
  p.value = std::move(value);
}

void ParamSet::set_group(ParamGroup g) {
  for (auto& [name, p] : params_) p.group = g;
}

ParamSet ParamSet::zeros_like() const {
  ParamSet out;
  for (const auto& [name, p] : params_) out.add(name, Matrix::Zero(p.value.rows(), p.value.cols()), p.group);
  return out;
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, p] : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

bool operator==(const ParamSet& a, const ParamSet& b) {
  if (a.params_.size() != b.params_.size()) return false;
  auto ia = a.params_.begin();
  auto ib = b.params_.begin();
  for (; ia != a.params_.end(); ++ia, ++ib) {
    if (ia->first != ib->first || ia->second.group != ib->second.group) return false;
    if (!bitwise_equal(ia->second.value, ib->second.value)) return false;
  }
  return true;
}

}  // namespace lowshot
