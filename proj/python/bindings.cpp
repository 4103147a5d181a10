/*
 * Copyright 2026 The keen2act Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <keen2act/config.hpp>
#include <keen2act/error.hpp>
#include <keen2act/eval.hpp>
#include <keen2act/recommend.hpp>
#include <keen2act/snapshot.hpp>
#include <keen2act/synthetic.hpp>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

namespace py = pybind11;
using namespace keen2act;

namespace {

struct PyDataset {
  Dataset dataset;
  std::optional<TagMap> tags;

  const TagMap* tag_ptr() const { return tags ? &*tags : nullptr; }
};

TrainConfig config_from(const py::dict& options) {
  std::ostringstream text;
  for (const auto& [key, value] : options) {
    std::string v;
    if (py::isinstance<py::bool_>(value)) {
      v = value.cast<bool>() ? "true" : "false";
    } else {
      v = py::str(value).cast<std::string>();
    }
    text << key.cast<std::string>() << " = " << v << '\n';
  }
  std::istringstream in(text.str());
  return parse_train_config(in).config;
}

py::dict stats_dict(const Dataset& d) {
  const auto s = dataset_stats(d);
  py::dict out;
  out["users"] = s.users;
  out["items"] = s.items;
  py::dict acts;
  for (const auto& [name, count] : s.activity_counts) {
    acts[py::str(name)] = count;
  }
  out["activities"] = acts;
  out["keen_pairs"] = s.keen_pairs;
  out["act_triples"] = s.act_triples;
  return out;
}

PyDataset load_dataset(const std::filesystem::path& path,
                       const std::vector<std::string>& activities, bool header,
                       std::optional<std::filesystem::path> tags) {
  IngestSchema schema;
  schema.activities = activities;
  schema.has_header = header;
  PyDataset out{ingest(path, schema).dataset, std::nullopt};
  if (tags) {
    out.tags = read_tags(*tags);
  }
  return out;
}

PyDataset synthetic(std::size_t users, std::size_t items, std::size_t activities,
                    std::uint64_t seed) {
  SyntheticConfig sc;
  sc.users = users;
  sc.items = items;
  sc.activities = activities;
  sc.seed = seed;
  auto corpus = generate_two_stage_corpus(sc);
  return PyDataset{std::move(corpus.dataset), std::move(corpus.tags)};
}

ModelSnapshot fit(const PyDataset& d, const py::dict& options) {
  const auto config = config_from(options);
  auto features = build_features(d.dataset.store, d.dataset.catalog, d.tag_ptr(),
                                 config.user_feature_scaling);
  ModelSnapshot snap{d.dataset.catalog, {}};
  {
    py::gil_scoped_release release;
    snap.model = train(d.dataset.store, std::move(features), config);
  }
  return snap;
}

UserId user_id(const ModelSnapshot& s, const std::string& raw) {
  const auto u = s.catalog.users.find(raw);
  if (!u) {
    throw py::key_error("unknown user '" + raw + "'");
  }
  return *u;
}

py::list recommend_py(const ModelSnapshot& s, const std::string& user,
                      std::optional<std::size_t> k) {
  const auto list = recommend(s.model, user_id(s, user), k.value_or(kNoCutoff));
  py::list out;
  for (const auto& e : list.entries) {
    out.append(py::make_tuple(s.catalog.items.raw(e.item),
                              s.catalog.activities.raw(e.activity), e.keen_score,
                              e.act_score));
  }
  return out;
}

bool decide_py(const ModelSnapshot& s, const std::string& user,
               const std::string& item, const std::string& activity) {
  const auto v = s.catalog.items.find(item);
  const auto z = s.catalog.activities.find(activity);
  if (!v) throw py::key_error("unknown item '" + item + "'");
  if (!z) throw py::key_error("unknown activity '" + activity + "'");
  return decide(s.model, user_id(s, user), *v, *z);
}

py::dict evaluate_py(const PyDataset& d, const py::dict& options, std::size_t splits,
                     std::optional<std::vector<std::string>> variants,
                     double split_fraction, bool exclude_train_pairs) {
  ExperimentConfig ec;
  ec.train = config_from(options);
  ec.n_splits = splits;
  ec.split_fraction = split_fraction;
  ec.exclude_train_pairs = exclude_train_pairs;
  if (variants) {
    ec.variants.clear();
    for (const auto& name : *variants) ec.variants.push_back(parse_variant(name));
  }
  EvalReport report;
  {
    py::gil_scoped_release release;
    report = run_experiment("python", d.dataset, d.tag_ptr(), ec);
  }
  py::dict out;
  for (std::size_t vi = 0; vi < report.variants.size(); ++vi) {
    py::dict metrics;
    for (std::size_t ci = 0; ci < kCutoffs.size(); ++ci) {
      metrics[py::str(metric_name(kCutoffs[ci]))] = report.mean(vi, ci);
    }
    out[py::str(variant_name(report.variants[vi]))] = metrics;
  }
  return out;
}

double ap_py(const std::vector<std::pair<ItemId, ActivityId>>& ranked,
             const std::vector<std::pair<ItemId, ActivityId>>& relevant,
             std::optional<std::size_t> k) {
  auto keys = [](const auto& xs) {
    RankedPairs out;
    for (const auto& [v, z] : xs) out.push_back(PairKey{v, z});
    return out;
  };
  return average_precision_at_k(keys(ranked), keys(relevant), k.value_or(kNoCutoff));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Two-stage item and activity recommender";
  m.attr("__version__") = KEEN2ACT_VERSION;

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<PyDataset>(m, "Dataset")
    .def_property_readonly("num_users",
                           [](const PyDataset& d) { return d.dataset.catalog.num_users(); })
    .def_property_readonly("num_items",
                           [](const PyDataset& d) { return d.dataset.catalog.num_items(); })
    .def_property_readonly("num_activities",
                           [](const PyDataset& d) { return d.dataset.catalog.num_activities(); })
    .def_property_readonly("users",
                           [](const PyDataset& d) { return d.dataset.catalog.users.raw_ids(); })
    .def("stats", [](const PyDataset& d) { return stats_dict(d.dataset); });

  m.def("load_dataset", &load_dataset, py::arg("path"), py::arg("activities"),
        py::arg("header") = false, py::arg("tags") = std::nullopt);
  m.def("synthetic", &synthetic, py::arg("users") = 200, py::arg("items") = 500,
        py::arg("activities") = 2, py::arg("seed") = 1);

  py::class_<ModelSnapshot>(m, "Model")
    .def("recommend", &recommend_py, py::arg("user"), py::arg("k") = std::nullopt)
    .def("decide", &decide_py, py::arg("user"), py::arg("item"), py::arg("activity"))
    .def("save", [](const ModelSnapshot& s, const std::filesystem::path& path) {
      save_model(path, s.catalog, s.model);
    })
    .def_property_readonly("users", [](const ModelSnapshot& s) { return s.catalog.users.raw_ids(); })
    .def_property_readonly("activity_thresholds",
                           [](const ModelSnapshot& s) { return s.model.thresholds.activity_thresholds; });

  m.def("train", &fit, py::arg("dataset"), py::arg("config") = py::dict());
  m.def("load_model", [](const std::filesystem::path& path) { return load_model(path); });
  m.def("evaluate", &evaluate_py, py::arg("dataset"), py::arg("config") = py::dict(),
        py::arg("splits") = 5, py::arg("variants") = std::nullopt,
        py::arg("split_fraction") = 0.8, py::arg("exclude_train_pairs") = true);
  m.def("average_precision_at_k", &ap_py, py::arg("ranked"), py::arg("relevant"),
        py::arg("k") = std::nullopt);
  m.def("config_keys", &train_config_keys);
}
