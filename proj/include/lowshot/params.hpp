#pragma once

#include "lowshot/tensor.hpp"

#include <cstddef>
#include <map>
#include <string>
#include <string_view>

namespace lowshot {

/// Learning-rate group of a parameter tensor. Fresh tensors train with the
/// fresh-layer multiplier applied.
enum class ParamGroup { pretrained, fresh };

std::string_view group_name(ParamGroup g) noexcept;
ParamGroup parse_group(std::string_view name);

struct Param {
  Matrix value;
  ParamGroup group = ParamGroup::fresh;
};

/// Named parameter tensors. Iteration order is lexicographic by name, which
/// fixes the order of every reduction and of serialization.
class ParamSet {
 public:
  using Map = std::map<std::string, Param, std::less<>>;

  /// Adds a tensor; throws InvalidShape if the name is already taken.
  void add(std::string name, Matrix value, ParamGroup group = ParamGroup::fresh);

  bool contains(std::string_view name) const { return params_.find(name) != params_.end(); }
  Param& at(std::string_view name);
  const Param& at(std::string_view name) const;

  Matrix& value(std::string_view name) { return at(name).value; }
  const Matrix& value(std::string_view name) const { return at(name).value; }

  /// Replaces a tensor's value. The new value must keep the shape unless
  /// `allow_reshape` is set (column append on the classifier head).
  void assign(std::string_view name, Matrix value, bool allow_reshape = false);

  void set_group(ParamGroup g);

  /// Same names, shapes and groups, all values zero.
  ParamSet zeros_like() const;

  std::size_t scalar_count() const;
  std::size_t size() const { return params_.size(); }

  Map::iterator begin() { return params_.begin(); }
  Map::iterator end() { return params_.end(); }
  Map::const_iterator begin() const { return params_.begin(); }
  Map::const_iterator end() const { return params_.end(); }

  friend bool operator==(const ParamSet& a, const ParamSet& b);

 private:
  Map params_;
};

}  // namespace lowshot
