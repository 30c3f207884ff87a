#include "run_config.hpp"

#include "lowshot/error.hpp"
#include "lowshot/idx.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <functional>
#include <sstream>

namespace lowshot::cli {
namespace {

// shortest text that reads back to the same double
std::string fmt_double(double v) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

template <class T>
std::string join(const std::vector<T>& xs) {
  std::string out;
  for (const auto& x : xs) {
    if (!out.empty()) out += ',';
    if constexpr (std::is_same_v<T, std::string>) {
      out += x;
    } else {
      out += std::to_string(x);
    }
  }
  return out;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(s);
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t[\"'"));
    item.erase(item.find_last_not_of(" \t]\"'") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& s) {
  T v{};
  const auto* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, v);
  if (r.ec != std::errc{} || r.ptr != end) throw Error(Errc::InvalidConfig, key + ": cannot parse '" + s + "'");
  return v;
}

std::string unquote(std::string s) {
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) s = s.substr(1, s.size() - 2);
  return s;
}

struct Entry {
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

template <class T>
Entry number(T RunConfig::*field) {
  return {[field](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return fmt_double(c.*field);
            } else {
              return std::to_string(c.*field);
            }
          },
          [field](RunConfig& c, const std::string& v) { c.*field = parse_number<T>("value", v); }};
}

Entry flag(bool RunConfig::*field) {
  return {[field](const RunConfig& c) { return std::string(c.*field ? "true" : "false"); },
          [field](RunConfig& c, const std::string& v) {
            if (v == "true" || v == "1") {
              c.*field = true;
            } else if (v == "false" || v == "0") {
              c.*field = false;
            } else {
              throw Error(Errc::InvalidConfig, "expected true or false, got '" + v + "'");
            }
          }};
}

Entry text(std::string RunConfig::*field) {
  return {[field](const RunConfig& c) { return c.*field; },
          [field](RunConfig& c, const std::string& v) { c.*field = unquote(v); }};
}

template <class T>
Entry list(std::vector<T> RunConfig::*field) {
  return {[field](const RunConfig& c) { return join(c.*field); },
          [field](RunConfig& c, const std::string& v) {
            (c.*field).clear();
            for (const std::string& item : split_list(v)) {
              if constexpr (std::is_same_v<T, std::string>) {
                (c.*field).push_back(item);
              } else {
                (c.*field).push_back(parse_number<T>("list item", item));
              }
            }
          }};
}

const std::map<std::string, Entry>& table() {
  static const std::map<std::string, Entry> t = {
      {"activation", text(&RunConfig::activation)},
      {"aug-copies", number(&RunConfig::aug_copies)},
      {"base-classes", number(&RunConfig::base_classes)},
      {"batch-size", number(&RunConfig::batch_size)},
      {"checkpoint", text(&RunConfig::checkpoint)},
      {"configs", list(&RunConfig::configs)},
      {"data-seed", number(&RunConfig::data_seed)},
      {"dataset", text(&RunConfig::dataset)},
      {"dims", list(&RunConfig::dims)},
      {"embedding-dim", number(&RunConfig::embedding_dim)},
      {"epochs", number(&RunConfig::epochs)},
      {"finetune-epochs", number(&RunConfig::finetune_epochs)},
      {"fresh-multiplier", number(&RunConfig::fresh_multiplier)},
      {"hidden", list(&RunConfig::hidden)},
      {"init", text(&RunConfig::init)},
      {"input-dim", number(&RunConfig::input_dim)},
      {"jitter-sigma", number(&RunConfig::jitter_sigma)},
      {"joint-epochs", number(&RunConfig::joint_epochs)},
      {"lr", number(&RunConfig::lr)},
      {"min-angle", number(&RunConfig::min_angle)},
      {"n", number(&RunConfig::n)},
      {"noise-sigma", number(&RunConfig::noise_sigma)},
      {"num-classes", number(&RunConfig::num_classes)},
      {"out", text(&RunConfig::out)},
      {"per-class-test", number(&RunConfig::per_class_test)},
      {"per-class-train", number(&RunConfig::per_class_train)},
      {"seed", number(&RunConfig::seed)},
      {"seeds", list(&RunConfig::seeds)},
      {"shots", list(&RunConfig::shots)},
      {"test-images", text(&RunConfig::test_images)},
      {"test-labels", text(&RunConfig::test_labels)},
      {"train-images", text(&RunConfig::train_images)},
      {"train-labels", text(&RunConfig::train_labels)},
      {"train-scale", flag(&RunConfig::train_scale)},
  };
  return t;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(Errc::InvalidConfig, what);
}

}  // namespace

const std::vector<std::string>& inherited_keys() {
  static const std::vector<std::string> keys = {
      "dataset",   "num-classes", "per-class-train", "per-class-test", "input-dim",   "noise-sigma",
      "min-angle", "data-seed",   "train-images",    "train-labels",   "test-images", "test-labels",
      "base-classes", "embedding-dim", "hidden", "activation", "seed"};
  return keys;
}

std::string to_text(const RunConfig& c) {
  std::string out = "command=" + c.command + "\n";
  for (const auto& [key, e] : table()) out += key + "=" + e.get(c) + "\n";
  return out;
}

void set_value(RunConfig& c, const std::string& key, const std::string& value) {
  if (key == "command") {
    c.command = value;
    return;
  }
  const auto it = table().find(key);
  if (it == table().end()) throw Error(Errc::UnknownConfig, "unknown config key '" + key + "'");
  try {
    it->second.set(c, value);
  } catch (const Error& e) {
    throw Error(Errc::InvalidConfig, key + ": " + e.detail());
  }
}

std::map<std::string, std::string> parse_text(const std::string& text) {
  std::map<std::string, std::string> out;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(Errc::InvalidConfig, "config line without '=': " + line);
    out[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return out;
}

void validate(const RunConfig& c) {
  require(c.dataset == "synthetic" || c.dataset == "idx", "dataset must be synthetic or idx, got '" + c.dataset + "'");
  if (c.dataset == "synthetic") {
    require(c.num_classes >= 2, "num-classes must be >= 2");
    require(c.per_class_train >= 1 && c.per_class_test >= 1, "per-class counts must be >= 1");
    require(c.input_dim >= 1, "input-dim must be >= 1");
    require(c.noise_sigma >= 0.0, "noise-sigma must be >= 0");
    require(c.min_angle >= 0.0 && c.min_angle < 180.0, "min-angle must be in [0, 180)");
    require(c.base_classes >= 1 && c.base_classes < c.num_classes, "base-classes must be in [1, num-classes)");
    const bool uses_shots = c.command == "compare-nn" || c.command == "sweep-dim" || c.command == "benchmark";
    for (std::size_t s : c.shots) {
      require(!uses_shots || s <= c.per_class_train,
              "shots " + std::to_string(s) + " exceeds per-class-train " + std::to_string(c.per_class_train));
    }
    require(c.command != "imprint" || c.n <= c.per_class_train, "n exceeds per-class-train");
  } else {
    require(!c.train_images.empty() && !c.train_labels.empty() && !c.test_images.empty() && !c.test_labels.empty(),
            "dataset idx needs train-images, train-labels, test-images and test-labels");
    require(c.base_classes >= 1, "base-classes must be >= 1");
  }
  require(!c.shots.empty(), "shots must not be empty");
  for (std::size_t s : c.shots) require(s >= 1, "shots must be >= 1");
  require(c.n >= 1, "n must be >= 1");
  require(c.embedding_dim >= 2, "embedding-dim must be >= 2");
  for (std::size_t h : c.hidden) require(h >= 1, "hidden sizes must be >= 1");
  parse_activation(c.activation);
  require(c.init == "imprint" || c.init == "random", "init must be imprint or random");
  require(!(c.init == "random" && c.aug_copies > 0), "aug-copies needs init=imprint");
  for (const std::string& name : c.configs) parse_config(name);
  require(!c.dims.empty(), "dims must not be empty");
  for (std::size_t d : c.dims) require(d >= 2, "dims must be >= 2");
  require(!c.out.empty(), "out must not be empty");
  to_options(c).finetune.validate();

  const bool needs_ckpt = c.command == "imprint" || c.command == "finetune" || c.command == "evaluate";
  require(!needs_ckpt || !c.checkpoint.empty(), c.command + " requires --checkpoint");
}

std::vector<std::uint64_t> run_seeds(const RunConfig& c) {
  return c.seeds.empty() ? std::vector<std::uint64_t>{c.seed} : c.seeds;
}

BenchmarkOptions to_options(const RunConfig& c) {
  BenchmarkOptions o = default_benchmark_options();
  o.embedder.hidden_dims = c.hidden;
  o.embedder.embedding_dim = c.embedding_dim;
  o.embedder.activation = parse_activation(c.activation);
  for (TrainConfig* t : {&o.base_train, &o.finetune, &o.joint}) {
    t->base_lr = c.lr;
    t->fresh_multiplier = c.fresh_multiplier;
    t->batch_size = c.batch_size;
    t->jitter_sigma = c.jitter_sigma;
    t->train_scale = c.train_scale;
  }
  o.base_train.epochs = c.epochs;
  o.finetune.epochs = c.finetune_epochs;
  o.joint.epochs = c.joint_epochs;
  o.augment.jitter_sigma = c.jitter_sigma;
  if (c.aug_copies > 0) o.aug_copies = c.aug_copies;
  return o;
}

DatasetPair load_data(const RunConfig& c) {
  if (c.dataset == "idx") {
    return {load_idx(c.train_images, c.train_labels, SplitTag::train), load_idx(c.test_images, c.test_labels, SplitTag::test)};
  }
  SyntheticSpec spec;
  spec.num_classes = c.num_classes;
  spec.per_class_train = c.per_class_train;
  spec.per_class_test = c.per_class_test;
  spec.input_dim = c.input_dim;
  spec.noise_sigma = c.noise_sigma;
  spec.min_angle_deg = c.min_angle;
  spec.seed = c.data_seed;
  return gen_synthetic(spec);
}

BaseNovelSplit make_split(const RunConfig& c, const DatasetPair& data) {
  return split_base_novel(data.train, c.base_classes);
}

}  // namespace lowshot::cli
