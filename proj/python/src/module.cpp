#include "lowshot/benchmark.hpp"
#include "lowshot/checkpoint.hpp"
#include "lowshot/error.hpp"
#include "lowshot/eval.hpp"
#include "lowshot/idx.hpp"
#include "lowshot/imprint.hpp"
#include "lowshot/losses.hpp"
#include "lowshot/trainer.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

namespace py = pybind11;
using namespace lowshot;

namespace {

PyObject* g_error = nullptr;

std::vector<Vector> columns_of(const Matrix& m) {
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(m.col(j));
  return out;
}

std::vector<ConfigKind> parse_configs(const std::vector<std::string>& names) {
  std::vector<ConfigKind> out;
  for (const auto& n : names) out.push_back(parse_config(n));
  return out;
}

py::dict summary_dict(const SeedSummary& s) {
  py::dict d;
  d["mean"] = s.mean;
  d["min"] = s.min;
  d["max"] = s.max;
  d["count"] = s.count;
  return d;
}

}  // namespace

PYBIND11_MODULE(_lowshot, m) {
  m.doc() = "Low-shot classification with imprinted cosine-classifier weights";

  g_error = PyErr_NewException("lowshot.LowshotError", PyExc_RuntimeError, nullptr);
  m.add_object("LowshotError", py::handle(g_error));
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object inst = py::reinterpret_borrow<py::object>(g_error)(py::str(e.what()));
      inst.attr("category") = py::str(std::string(errc_name(e.code())));
      inst.attr("detail") = py::str(e.detail());
      PyErr_SetObject(g_error, inst.ptr());
    }
  });

  py::enum_<Activation>(m, "Activation").value("relu", Activation::relu).value("tanh", Activation::tanh);
  py::enum_<ParamGroup>(m, "ParamGroup")
      .value("pretrained", ParamGroup::pretrained)
      .value("fresh", ParamGroup::fresh);

  // data
  py::class_<LabeledDataset>(m, "Dataset", "Examples are the columns of `inputs`.")
      .def(py::init([](Matrix inputs, std::vector<ClassId> labels, std::optional<std::vector<ClassId>> catalog) {
             LabeledDataset d;
             d.inputs = std::move(inputs);
             d.labels = std::move(labels);
             if (catalog) {
               d.catalog = *catalog;
             } else {
               d.catalog = d.labels;
               std::sort(d.catalog.begin(), d.catalog.end());
               d.catalog.erase(std::unique(d.catalog.begin(), d.catalog.end()), d.catalog.end());
             }
             d.validate();
             return d;
           }),
           py::arg("inputs"), py::arg("labels"), py::arg("catalog") = py::none())
      .def_readonly("inputs", &LabeledDataset::inputs)
      .def_readonly("labels", &LabeledDataset::labels)
      .def_readonly("catalog", &LabeledDataset::catalog)
      .def_property_readonly("input_dim", &LabeledDataset::input_dim)
      .def("example", &LabeledDataset::example)
      .def("indices_of", &LabeledDataset::indices_of)
      .def("filter_classes", [](const LabeledDataset& d, const std::vector<ClassId>& keep) { return d.filter_classes(keep); })
      .def("__len__", &LabeledDataset::size);

  py::class_<SyntheticSpec>(m, "SyntheticSpec")
      .def(py::init<>())
      .def_readwrite("num_classes", &SyntheticSpec::num_classes)
      .def_readwrite("per_class_train", &SyntheticSpec::per_class_train)
      .def_readwrite("per_class_test", &SyntheticSpec::per_class_test)
      .def_readwrite("input_dim", &SyntheticSpec::input_dim)
      .def_readwrite("noise_sigma", &SyntheticSpec::noise_sigma)
      .def_readwrite("min_angle_deg", &SyntheticSpec::min_angle_deg)
      .def_readwrite("seed", &SyntheticSpec::seed);

  py::class_<DatasetPair>(m, "DatasetPair")
      .def_readonly("train", &DatasetPair::train)
      .def_readonly("test", &DatasetPair::test);

  py::class_<BaseNovelSplit>(m, "BaseNovelSplit")
      .def_readonly("base", &BaseNovelSplit::base)
      .def_readonly("novel", &BaseNovelSplit::novel);

  py::class_<SupportSet>(m, "SupportSet")
      .def(py::init([](ClassId label, const std::vector<Vector>& examples) {
             SupportSet s;
             s.label = label;
             s.examples = examples;
             return s;
           }),
           py::arg("label"), py::arg("examples"))
      .def_readonly("label", &SupportSet::label)
      .def_readonly("examples", &SupportSet::examples)
      .def_readonly("source_rows", &SupportSet::source_rows);

  m.def("gen_synthetic", &gen_synthetic, py::arg("spec") = SyntheticSpec{});
  m.def("load_idx", [](const std::filesystem::path& images, const std::filesystem::path& labels, bool test) {
    return load_idx(images, labels, test ? SplitTag::test : SplitTag::train);
  }, py::arg("images"), py::arg("labels"), py::arg("test") = false);
  m.def("split_base_novel", &split_base_novel, py::arg("dataset"), py::arg("base_count"));
  m.def("sample_support", [](const LabeledDataset& train, const std::vector<ClassId>& classes, std::size_t n,
                             std::uint64_t seed) { return sample_support(train, classes, n, seed); },
        py::arg("train"), py::arg("classes"), py::arg("n"), py::arg("seed"));

  // model
  py::class_<EmbedderConfig>(m, "EmbedderConfig")
      .def(py::init<>())
      .def_readwrite("input_dim", &EmbedderConfig::input_dim)
      .def_readwrite("hidden_dims", &EmbedderConfig::hidden_dims)
      .def_readwrite("embedding_dim", &EmbedderConfig::embedding_dim)
      .def_readwrite("activation", &EmbedderConfig::activation)
      .def_readwrite("seed", &EmbedderConfig::seed)
      .def_readwrite("normalize", &EmbedderConfig::normalize);

  py::class_<EmbeddingNet>(m, "EmbeddingNet")
      .def(py::init<EmbedderConfig>())
      .def_property_readonly("config", &EmbeddingNet::config)
      .def("embed", &EmbeddingNet::embed)
      .def("parameters", [](const EmbeddingNet& e) {
        std::map<std::string, Matrix> out;
        for (const auto& [name, p] : e.params()) out[name] = p.value;
        return out;
      });

  py::class_<CosineHead>(m, "CosineHead")
      .def(py::init<Matrix, std::vector<ClassId>, double>(), py::arg("weights"), py::arg("class_ids"),
           py::arg("scale") = kDefaultScale)
      .def_static("random", &CosineHead::random, py::arg("dim"), py::arg("class_ids"), py::arg("seed"),
                  py::arg("scale") = kDefaultScale)
      .def_property_readonly("dim", &CosineHead::dim)
      .def_property_readonly("class_ids", &CosineHead::class_ids)
      .def_property_readonly("weights", &CosineHead::weights)
      .def_property("scale", &CosineHead::scale, &CosineHead::set_scale)
      .def_property_readonly("imprint_counts", &CosineHead::imprint_counts)
      .def("templates", &CosineHead::templates)
      .def("cosines", &CosineHead::cosines)
      .def("logits", &CosineHead::logits)
      .def("predict", &CosineHead::predict)
      .def("column_of", &CosineHead::column_of);

  py::class_<Model>(m, "Model")
      .def(py::init([](const EmbeddingNet& e, const CosineHead& h) { return Model{e, h, {}}; }), py::arg("embedder"),
           py::arg("head"))
      .def_readwrite("embedder", &Model::embedder)
      .def_readwrite("head", &Model::head)
      .def_readwrite("provenance", &Model::provenance)
      .def("embed", &Model::embed)
      .def("logits", &Model::logits)
      .def("predict", &Model::predict)
      .def("predict_batch", [](const Model& model, const Matrix& inputs) {
        const auto xs = columns_of(inputs);
        return model.head.predict_all(model.embedder.embed_batch(xs));
      }, py::arg("inputs"), "Labels for the columns of `inputs`.")
      .def("parameter_count", &Model::parameter_count);

  // imprinting
  m.def("average_template", [](const std::vector<Vector>& xs) { return average_template(xs); });
  m.def("imprint_single", &imprint_single, py::arg("model"), py::arg("example"), py::arg("label"));
  m.def("imprint_average", &imprint_average, py::arg("model"), py::arg("support"));
  m.def("imprint_all", [](const Model& model, const std::vector<SupportSet>& s) { return imprint_all(model, s); },
        py::arg("model"), py::arg("supports"));
  m.def("imprint_update", &imprint_update, py::arg("model"), py::arg("support"));
  m.def("add_random_columns", [](const Model& model, const std::vector<ClassId>& labels, std::uint64_t seed) {
    return add_random_columns(model, labels, seed);
  }, py::arg("model"), py::arg("labels"), py::arg("seed"));

  // losses
  m.def("softmax", &softmax);
  m.def("cross_entropy_from_logits", [](const Vector& logits, std::size_t label) {
    const LossValue v = cross_entropy_from_logits(logits, label);
    return py::make_tuple(v.loss, v.grad);
  }, "Returns (loss, d loss / d logits).");
  m.def("nca_proxy_loss", [](const Vector& x, const Matrix& proxies, std::size_t label) {
    const LossValue v = nca_proxy_loss(x, proxies, label);
    return py::make_tuple(v.loss, v.grad);
  }, "Returns (loss, d loss / d x).");

  // training
  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("base_lr", &TrainConfig::base_lr)
      .def_readwrite("fresh_multiplier", &TrainConfig::fresh_multiplier)
      .def_readwrite("decay_rate", &TrainConfig::decay_rate)
      .def_readwrite("decay_every_epochs", &TrainConfig::decay_every_epochs)
      .def_readwrite("rms_decay", &TrainConfig::rms_decay)
      .def_readwrite("momentum", &TrainConfig::momentum)
      .def_readwrite("epsilon", &TrainConfig::epsilon)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("oversample_novel", &TrainConfig::oversample_novel)
      .def_readwrite("train_scale", &TrainConfig::train_scale)
      .def_readwrite("augment", &TrainConfig::augment)
      .def_readwrite("jitter_sigma", &TrainConfig::jitter_sigma);
  m.def("lr_at_epoch", &lr_at_epoch);

  py::class_<OptimState>(m, "OptimState");
  py::class_<TrainResult>(m, "TrainResult")
      .def_readonly("model", &TrainResult::model)
      .def_readonly("state", &TrainResult::state)
      .def_readonly("loss_history", &TrainResult::loss_history);
  m.def("train_base", &train_base, py::arg("model"), py::arg("base"), py::arg("config"),
        py::call_guard<py::gil_scoped_release>());
  m.def("finetune", [](const Model& model, const LabeledDataset& base, const std::vector<SupportSet>& support,
                       const TrainConfig& cfg) { return finetune(model, base, support, cfg); },
        py::arg("model"), py::arg("base"), py::arg("support"), py::arg("config"),
        py::call_guard<py::gil_scoped_release>());

  // evaluation
  m.def("top1_accuracy", py::overload_cast<const Model&, const LabeledDataset&, const std::optional<std::vector<ClassId>>&>(
                             &top1_accuracy),
        py::arg("model"), py::arg("test"), py::arg("classes") = py::none());

  py::class_<BenchmarkOptions>(m, "BenchmarkOptions")
      .def(py::init(&default_benchmark_options))
      .def_readwrite("embedder", &BenchmarkOptions::embedder)
      .def_readwrite("base_train", &BenchmarkOptions::base_train)
      .def_readwrite("finetune", &BenchmarkOptions::finetune)
      .def_readwrite("joint", &BenchmarkOptions::joint)
      .def_readwrite("aug_copies", &BenchmarkOptions::aug_copies);

  py::class_<EvalReport>(m, "EvalReport")
      .def_readonly("seeds", &EvalReport::seeds)
      .def_readonly("runtime_seconds", &EvalReport::runtime_seconds)
      .def_property_readonly("rows", [](const EvalReport& r) {
        py::list out;
        for (const ReportRow& row : r.rows)
          out.append(py::make_tuple(std::string(config_name(row.config)), row.shots, row.seed, row.metric, row.value));
        return out;
      }, "(config, n, seed, metric, value) tuples.")
      .def("values", [](const EvalReport& r, const std::string& c, std::size_t n, const std::string& metric) {
        return r.values(parse_config(c), n, metric);
      }, py::arg("config"), py::arg("n"), py::arg("metric") = "novel")
      .def("summary", [](const EvalReport& r, const std::string& c, std::size_t n, const std::string& metric) {
        return summary_dict(r.summary(parse_config(c), n, metric));
      }, py::arg("config"), py::arg("n"), py::arg("metric") = "novel")
      .def("to_csv", [](const EvalReport& r) {
        std::ostringstream out;
        write_report_csv(out, r);
        return out.str();
      })
      .def("to_table", [](const EvalReport& r) {
        std::ostringstream out;
        write_report_table(out, r);
        return out.str();
      });

  m.def("config_names", [] {
    std::vector<std::string> out;
    for (ConfigKind c : all_configs()) out.emplace_back(config_name(c));
    return out;
  });
  m.def("run_benchmark", [](const DatasetPair& data, const BaseNovelSplit& split, const std::vector<std::size_t>& shots,
                            const std::vector<std::string>& configs, const std::vector<std::uint64_t>& seeds,
                            const BenchmarkOptions& options) {
    const auto kinds = parse_configs(configs);
    py::gil_scoped_release release;
    return run_benchmark(data, split, shots, kinds, seeds, options);
  }, py::arg("data"), py::arg("split"), py::arg("shots"), py::arg("configs"), py::arg("seeds"),
        py::arg("options") = default_benchmark_options());

  // persistence
  m.def("save_checkpoint", [](const std::filesystem::path& path, const Model& model) { save_checkpoint(path, model); },
        py::arg("path"), py::arg("model"));
  m.def("load_checkpoint", [](const std::filesystem::path& path) { return load_checkpoint(path).model; },
        py::arg("path"));
}
