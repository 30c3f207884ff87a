// lowshot: command-line driver for base training, imprinting, fine-tuning
// and evaluation runs.

#include "run_config.hpp"

#include "lowshot/benchmark.hpp"
#include "lowshot/checkpoint.hpp"
#include "lowshot/error.hpp"
#include "lowshot/eval.hpp"
#include "lowshot/trainer.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace lowshot;
using namespace lowshot::cli;

namespace {

void log(const std::string& msg) { std::cerr << "[lowshot] " << msg << '\n'; }

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
  if (!out) throw Error(Errc::IoFailure, "cannot write " + p.string());
}

// "# key=value" lines so every artifact carries the run that made it
std::string config_header(const RunConfig& c) {
  std::string out;
  std::stringstream ss(to_text(c));
  std::string line;
  while (std::getline(ss, line)) out += "# " + line + '\n';
  return out;
}

fs::path out_dir(const RunConfig& c) {
  std::error_code ec;
  fs::create_directories(c.out, ec);
  if (ec) throw Error(Errc::IoFailure, "cannot create " + c.out + ": " + ec.message());
  return c.out;
}

std::string stage_of(const Model& m) {
  const auto it = m.provenance.find("stage");
  return it == m.provenance.end() ? "" : it->second;
}

// "label:row row;label:row ..." in support order.
std::string encode_support(const std::vector<SupportSet>& support) {
  std::string out;
  for (const SupportSet& s : support) {
    if (!out.empty()) out += ';';
    out += std::to_string(s.label) + ':';
    for (std::size_t i = 0; i < s.source_rows.size(); ++i) out += (i ? " " : "") + std::to_string(s.source_rows[i]);
  }
  return out;
}

std::vector<SupportSet> decode_support(const std::string& text, const LabeledDataset& train) {
  std::vector<SupportSet> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw Error(Errc::CorruptPayload, "bad support record '" + item + "'");
    SupportSet s;
    s.label = static_cast<ClassId>(std::stol(item.substr(0, colon)));
    std::stringstream rows(item.substr(colon + 1));
    std::size_t r = 0;
    while (rows >> r) {
      if (r >= train.size() || train.labels[r] != s.label) {
        throw Error(Errc::CorruptPayload, "support row " + std::to_string(r) + " does not match the training data");
      }
      s.source_rows.push_back(r);
      s.examples.push_back(train.example(r));
    }
    out.push_back(std::move(s));
  }
  return out;
}

const std::string& provenance(const Model& m, const std::string& key) {
  const auto it = m.provenance.find(key);
  if (it == m.provenance.end()) throw Error(Errc::CorruptPayload, "checkpoint provenance lacks '" + key + "'");
  return it->second;
}

void require_stage(const Model& m, std::initializer_list<const char*> allowed, const std::string& command) {
  const std::string stage = stage_of(m);
  for (const char* a : allowed)
    if (stage == a) return;
  throw Error(Errc::InvalidConfig, command + " cannot start from a checkpoint at stage '" + stage + "'");
}

// stdout gets the table; the "# key=value" header stays in the files
void print_body(const std::string& text) {
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line))
    if (!line.starts_with("# ")) std::cout << line << '\n';
}

void write_report(const RunConfig& c, EvalReport& report) {
  report.resolved_config = to_text(c);
  const fs::path dir = out_dir(c);
  std::ostringstream csv, table;
  write_report_csv(csv, report);
  write_report_table(table, report);
  write_file(dir / "report.csv", csv.str());
  write_file(dir / "report.txt", table.str());
  write_file(dir / "config.txt", report.resolved_config);
  print_body(table.str());
  log("wrote " + (dir / "report.csv").string());
}

void save_model(const RunConfig& c, Model model, const std::optional<OptimState>& optim,
                std::map<std::string, std::string> extra) {
  model.provenance = std::move(extra);
  model.provenance["stage"] = c.command;
  model.provenance["config"] = to_text(c);
  const fs::path dir = out_dir(c);
  save_checkpoint(dir / "model.ckpt", model, optim);
  write_file(dir / "config.txt", to_text(c));
  log("wrote " + (dir / "model.ckpt").string());
}

int cmd_train_base(const RunConfig& c) {
  const DatasetPair data = load_data(c);
  const BaseNovelSplit split = make_split(c, data);
  std::vector<double> losses;
  const Model model = train_base_model(data, split, to_options(c), c.seed, &losses);
  std::string csv = config_header(c) + "epoch,loss\n";
  char buf[64];
  for (std::size_t e = 0; e < losses.size(); ++e) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", e, losses[e]);
    csv += buf;
  }
  save_model(c, model, std::nullopt, {});
  write_file(fs::path(c.out) / "loss.csv", csv);
  if (!losses.empty()) {
    std::snprintf(buf, sizeof buf, "loss %.4f -> %.4f over %zu epochs", losses.front(), losses.back(), losses.size());
    log(buf);
  }
  log("base accuracy on base test rows: " +
      std::to_string(top1_accuracy(model, data.test, std::optional<std::vector<ClassId>>(split.base))));
  return 0;
}

int cmd_imprint(const RunConfig& c, const Checkpoint& ckpt) {
  require_stage(ckpt.model, {"train-base"}, "imprint");
  const DatasetPair data = load_data(c);
  const BaseNovelSplit split = make_split(c, data);
  const auto support = sample_cell_support(data.train, split, c.n, c.seed);
  const ConfigKind kind = c.init == "random" ? ConfigKind::RandNoFT
                          : c.aug_copies > 0  ? ConfigKind::ImprintingAug
                                              : ConfigKind::Imprinting;
  const Model model = build_cell_model(kind, ckpt.model, support, data, split, to_options(c), c.seed, c.n);
  std::string rows = config_header(c) + "label,row\n";
  for (const SupportSet& s : support)
    for (std::size_t r : s.source_rows) rows += std::to_string(s.label) + ',' + std::to_string(r) + '\n';
  save_model(c, model, std::nullopt,
             {{"cell", std::string(config_name(kind))}, {"n", std::to_string(c.n)}, {"support", encode_support(support)}});
  write_file(fs::path(c.out) / "support.csv", rows);
  log(std::string(config_name(kind)) + ": " + std::to_string(support.size()) + " novel classes, n = " + std::to_string(c.n));
  return 0;
}

int cmd_finetune(const RunConfig& c, const Checkpoint& ckpt) {
  require_stage(ckpt.model, {"imprint"}, "finetune");
  const DatasetPair data = load_data(c);
  const BaseNovelSplit split = make_split(c, data);
  const auto support = decode_support(provenance(ckpt.model, "support"), data.train);
  const std::size_t n = std::stoul(provenance(ckpt.model, "n"));
  const TrainConfig cfg = cell_finetune_config(to_options(c), c.seed, n);
  const TrainResult r = finetune(ckpt.model, data.train.filter_classes(split.base), support, cfg);
  const std::string cell = provenance(ckpt.model, "cell") == "Rand-noFT" ? "Rand+FT" : "Imprinting+FT";
  std::string csv = config_header(c) + "epoch,loss\n";
  char buf[64];
  for (std::size_t e = 0; e < r.loss_history.size(); ++e) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", e, r.loss_history[e]);
    csv += buf;
  }
  save_model(c, r.model, r.state,
             {{"cell", cell}, {"n", std::to_string(n)}, {"support", provenance(ckpt.model, "support")}});
  write_file(fs::path(c.out) / "history.csv", csv);
  log(cell + ": " + std::to_string(r.loss_history.size()) + " epochs");
  return 0;
}

// Base-only checkpoint: top-1 on the base-class test rows.
int evaluate_base(const RunConfig& c, const Model& model, const DatasetPair& data, const BaseNovelSplit& split) {
  const double acc = top1_accuracy(model, data.test, std::optional<std::vector<ClassId>>(split.base));
  char buf[128];
  std::snprintf(buf, sizeof buf, "Base,0,%llu,base,%.17g\n", static_cast<unsigned long long>(c.seed), acc);
  const fs::path dir = out_dir(c);
  write_file(dir / "report.csv", config_header(c) + "config,n,seed,metric,value\n" + buf);
  std::snprintf(buf, sizeof buf, "base-class top-1 %.2f%% over %zu base classes\n", 100.0 * acc, split.base.size());
  write_file(dir / "report.txt", config_header(c) + buf);
  write_file(dir / "config.txt", to_text(c));
  std::cout << buf;
  return 0;
}

int cmd_evaluate(const RunConfig& c, const Checkpoint& ckpt) {
  require_stage(ckpt.model, {"train-base", "imprint", "finetune"}, "evaluate");
  const Model& model = ckpt.model;
  const DatasetPair data = load_data(c);
  const BaseNovelSplit split = make_split(c, data);
  if (stage_of(model) == "train-base") return evaluate_base(c, model, data, split);
  const auto support = decode_support(provenance(model, "support"), data.train);
  const std::size_t n = std::stoul(provenance(model, "n"));
  const ConfigKind cell = parse_config(provenance(model, "cell"));
  const std::optional<std::vector<ClassId>> novel = split.novel;

  std::vector<Vector> emb;
  emb.reserve(data.test.size());
  for (std::size_t i = 0; i < data.test.size(); ++i) emb.push_back(model.embed(data.test.example(i)));

  EvalReport report;
  report.seeds = {c.seed};
  auto add = [&](ConfigKind k, const std::vector<ClassId>& preds, const std::vector<ClassId>* restricted) {
    report.rows.push_back({k, n, c.seed, std::string(metric::novel), accuracy_of(preds, data.test, novel)});
    report.rows.push_back({k, n, c.seed, std::string(metric::all), accuracy_of(preds, data.test)});
    if (restricted) {
      report.rows.push_back({k, n, c.seed, std::string(metric::novel_restricted), accuracy_of(*restricted, data.test, novel)});
    }
    for (const auto& [label, acc] : per_class_accuracy(preds, data.test)) report.per_class.push_back({k, n, c.seed, label, acc});
  };

  const auto preds = model.head.predict_all(emb);
  if (cell == ConfigKind::Imprinting || cell == ConfigKind::ImprintingAug) {
    Matrix w(model.head.dim(), static_cast<Eigen::Index>(split.novel.size()));
    for (std::size_t k = 0; k < split.novel.size(); ++k) {
      const auto col = model.head.column_of(split.novel[k]);
      if (!col) throw Error(Errc::MissingClassColumn, "novel class " + std::to_string(split.novel[k]) + " has no column");
      w.col(static_cast<Eigen::Index>(k)) = model.head.weights().col(static_cast<Eigen::Index>(*col));
    }
    const auto restricted = CosineHead(w, split.novel, model.head.scale()).predict_all(emb);
    add(cell, preds, &restricted);
  } else {
    add(cell, preds, nullptr);
  }
  std::vector<ClassId> nn_restricted;
  const auto nn = nearest_neighbor_predictions(model, split.base, support, emb, &nn_restricted);
  add(ConfigKind::NearestNeighbor, nn, &nn_restricted);
  write_report(c, report);
  return 0;
}

int cmd_benchmark(const RunConfig& c, std::vector<ConfigKind> configs) {
  const DatasetPair data = load_data(c);
  const BaseNovelSplit split = make_split(c, data);
  EvalReport report = run_benchmark(data, split, c.shots, configs, run_seeds(c), to_options(c));
  log("benchmark runtime " + std::to_string(report.runtime_seconds) + " s");
  write_report(c, report);
  return 0;
}

std::vector<ConfigKind> configs_or(const RunConfig& c, std::vector<ConfigKind> fallback) {
  if (c.configs.empty()) return fallback;
  std::vector<ConfigKind> out;
  for (const std::string& name : c.configs) out.push_back(parse_config(name));
  return out;
}

int cmd_sweep_dim(const RunConfig& c) {
  const DatasetPair data = load_data(c);
  const BaseNovelSplit split = make_split(c, data);
  const auto configs = configs_or(c, {ConfigKind::Imprinting});
  const auto seeds = run_seeds(c);
  std::string csv = config_header(c) + "dim,config,n,seed,metric,value\n";
  std::ostringstream table;
  table << config_header(c);
  // per (config, n): seed-mean novel accuracy at each D
  std::map<std::pair<ConfigKind, std::size_t>, std::vector<std::pair<std::size_t, double>>> novel_means;
  char buf[96];
  for (std::size_t dim : c.dims) {
    BenchmarkOptions o = to_options(c);
    o.embedder.embedding_dim = dim;
    const EvalReport r = run_benchmark(data, split, c.shots, configs, seeds, o);
    log("D = " + std::to_string(dim) + ": " + std::to_string(r.runtime_seconds) + " s");
    for (const ReportRow& row : r.rows) {
      std::snprintf(buf, sizeof buf, "%.17g", row.value);
      csv += std::to_string(dim) + ',' + std::string(config_name(row.config)) + ',' + std::to_string(row.shots) + ',' +
             std::to_string(row.seed) + ',' + row.metric + ',' + buf + '\n';
    }
    for (ConfigKind k : configs)
      for (std::size_t n : c.shots) novel_means[{k, n}].emplace_back(dim, r.summary(k, n, metric::novel).mean);
  }
  std::snprintf(buf, sizeof buf, "%-16s %4s", "config", "n");
  table << buf;
  for (std::size_t dim : c.dims) {
    std::snprintf(buf, sizeof buf, "  %8s", ("D=" + std::to_string(dim)).c_str());
    table << buf;
  }
  table << "    spread\n";
  double widest = 0.0;
  for (const auto& [key, points] : novel_means) {
    std::snprintf(buf, sizeof buf, "%-16s %4zu", std::string(config_name(key.first)).c_str(), key.second);
    table << buf;
    double lo = 1.0, hi = 0.0;
    for (const auto& [dim, v] : points) {
      std::snprintf(buf, sizeof buf, "  %8.2f", 100.0 * v);
      table << buf;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    std::snprintf(buf, sizeof buf, "  %8.2f\n", 100.0 * (hi - lo));
    table << buf;
    widest = std::max(widest, hi - lo);
  }
  std::snprintf(buf, sizeof buf, "novel top-1 (%%), seed means over %zu seed(s); largest spread across D: %.2f points\n",
                seeds.size(), 100.0 * widest);
  table << buf;
  const fs::path dir = out_dir(c);
  write_file(dir / "sweep.csv", csv);
  write_file(dir / "report.txt", table.str());
  write_file(dir / "config.txt", to_text(c));
  print_body(table.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-shot classification with imprinted weights"};
  app.fallthrough();
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "Flat key=value config file; flags override its values");

  const RunConfig defaults;
  const std::string default_text = to_text(defaults);
  const auto default_values = parse_text(default_text);
  std::map<std::string, std::string> flags;
  for (const auto& [key, value] : default_values) {
    if (key == "command") continue;
    app.add_option("--" + key, flags[key], "default: " + (value.empty() ? std::string("(none)") : value))
        ->type_name("VALUE");
  }

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"train-base", "Train embedder and cosine head on the base classes"},
      {"imprint", "Add novel-class columns to a base checkpoint (--n shots)"},
      {"finetune", "Fine-tune an imprinted checkpoint end to end"},
      {"evaluate", "Score a checkpoint and the matching nearest-neighbor classifier"},
      {"compare-nn", "Imprinting vs nearest neighbor over --shots and --seeds"},
      {"sweep-dim", "Imprinting accuracy across embedding sizes --dims"},
      {"benchmark", "Run --configs (default: all) over --shots and --seeds"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error[InvalidConfig]: " << e.what() << '\n';
    return 2;
  }

  try {
    RunConfig c;
    c.command = app.get_subcommands().front()->get_name();
    std::map<std::string, std::string> file_values;
    if (!config_path.empty()) file_values = parse_text(read_file(config_path));
    file_values.erase("command");

    // checkpoint path may come from either source
    std::string ckpt_path = app.get_option("--checkpoint")->count() ? flags["checkpoint"] : "";
    if (ckpt_path.empty() && file_values.count("checkpoint")) ckpt_path = file_values["checkpoint"];

    std::optional<Checkpoint> ckpt;
    if (!ckpt_path.empty() && (c.command == "imprint" || c.command == "finetune" || c.command == "evaluate")) {
      ckpt = load_checkpoint(ckpt_path);
      const auto it = ckpt->model.provenance.find("config");
      if (it != ckpt->model.provenance.end()) {
        const auto stored = parse_text(it->second);
        for (const std::string& key : inherited_keys())
          if (stored.count(key)) set_value(c, key, stored.at(key));
      }
    }
    for (const auto& [key, value] : file_values) set_value(c, key, value);
    for (const auto& [key, value] : flags)
      if (app.get_option("--" + key)->count()) set_value(c, key, value);

    validate(c);
    std::cerr << "[lowshot] resolved config:\n" << to_text(c);

    if (c.command == "train-base") return cmd_train_base(c);
    if (c.command == "imprint") return cmd_imprint(c, *ckpt);
    if (c.command == "finetune") return cmd_finetune(c, *ckpt);
    if (c.command == "evaluate") return cmd_evaluate(c, *ckpt);
    if (c.command == "compare-nn") return cmd_benchmark(c, {ConfigKind::Imprinting, ConfigKind::NearestNeighbor});
    if (c.command == "benchmark") return cmd_benchmark(c, configs_or(c, all_configs()));
    if (c.command == "sweep-dim") return cmd_sweep_dim(c);
    throw Error(Errc::InvalidConfig, "unknown command " + c.command);
  } catch (const Error& e) {
    std::cerr << "error[" << errc_name(e.code()) << "]: " << e.detail() << '\n';
    return e.code() == Errc::InvalidConfig || e.code() == Errc::UnknownConfig ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error[Internal]: " << e.what() << '\n';
    return 1;
  }
}
