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

#include "cli.hpp"

#include <keen2act/config.hpp>
#include <keen2act/error.hpp>
#include <keen2act/eval.hpp>
#include <keen2act/recommend.hpp>
#include <keen2act/snapshot.hpp>
#include <keen2act/synthetic.hpp>
#include <keen2act/training.hpp>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

namespace keen2act::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = KEEN2ACT_VERSION;

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (!part.empty()) {
      out.push_back(part);
    }
  }
  return out;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error("cannot write " + path.string());
  }
  return out;
}

// Declared activity order: an explicit list, else activities.txt next to the
// data file.
std::vector<std::string> resolve_activities(const std::string& flag,
                                            const fs::path& data) {
  if (!flag.empty()) {
    return split_list(flag);
  }
  const auto sidecar = data.parent_path() / "activities.txt";
  std::ifstream in(sidecar);
  if (!in) {
    throw SchemaError("--activities not given and " + sidecar.string() +
                      " not found");
  }
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) {
      names.push_back(line);
    }
  }
  return names;
}

void write_activities(const fs::path& path, const Catalog& catalog) {
  auto out = open_out(path);
  for (const auto& name : catalog.activities.raw_ids()) {
    out << name << '\n';
  }
}

void write_stats(std::ostream& out, const DatasetStats& stats,
                 std::size_t rows, std::size_t duplicates) {
  out << "rows\t" << rows << '\n'
      << "duplicates\t" << duplicates << '\n'
      << "users\t" << stats.users << '\n'
      << "items\t" << stats.items << '\n';
  for (const auto& [name, count] : stats.activity_counts) {
    out << "activity:" << name << '\t' << count << '\n';
  }
  out << "keen_pairs\t" << stats.keen_pairs << '\n'
      << "act_triples\t" << stats.act_triples << '\n';
}

struct ConfigChoice {
  TrainConfig config;
  std::optional<fs::path> path;
};

ConfigChoice resolve_config(const std::string& flag, std::ostream& err) {
  ConfigChoice choice;
  std::string path = flag;
  if (path.empty()) {
    if (const char* env = std::getenv("KEEN2ACT_CONFIG"); env && *env) {
      path = env;
    }
  }
  if (path.empty()) {
    err << "warning: no config given, using built-in defaults\n";
  } else {
    auto loaded = load_train_config(path);
    for (const auto& key : loaded.defaulted) {
      err << "warning: config key '" << key << "' not set, using default\n";
    }
    choice.config = loaded.config;
    choice.path = path;
  }
  if (const char* env = std::getenv("KEEN2ACT_SEED"); env && *env) {
    std::uint64_t seed = 0;
    const std::string_view text(env);
    const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), seed);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
      throw ConfigError("KEEN2ACT_SEED is not an unsigned integer: " +
                        std::string(text));
    }
    choice.config.seed = seed;
  }
  return choice;
}

ordered_json config_json(const TrainConfig& config) {
  ordered_json j = ordered_json::object();
  std::istringstream lines(format_train_config(config));
  std::string line;
  while (std::getline(lines, line)) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos) {
      j[line.substr(0, eq)] = line.substr(eq + 3);
    }
  }
  return j;
}

ordered_json digest_entry(const fs::path& path) {
  return ordered_json{{"path", path.string()},
                      {"sha256", file_sha256(path.string())}};
}

// Compares the manifest beside a model with the current input files.
void check_manifest(const fs::path& model_dir, std::ostream& err) {
  const auto path = model_dir / "manifest.json";
  std::ifstream in(path);
  if (!in) {
    return;
  }
  const auto manifest = ordered_json::parse(in, nullptr, false);
  if (manifest.is_discarded() || !manifest.contains("inputs")) {
    err << "warning: unreadable manifest " << path.string() << '\n';
    return;
  }
  for (const auto& entry : manifest["inputs"]) {
    const auto input = entry.value("path", "");
    const auto stored = entry.value("sha256", "");
    std::string now;
    try {
      now = file_sha256(input);
    } catch (const Error&) {
      now.clear();
    }
    if (now != stored) {
      err << "warning: run is stale, input " << input
          << " changed since training\n";
    }
  }
}

int cmd_ingest(const std::string& input, const std::string& activities,
               bool header, std::size_t min_activities, double split_fraction,
               std::optional<std::uint64_t> split_seed, const std::string& dir,
               std::ostream& out) {
  IngestSchema schema;
  schema.activities = split_list(activities);
  schema.has_header = header;
  auto result = ingest(fs::path(input), schema);
  if (min_activities > 0) {
    result.dataset = filter_active_users(result.dataset, min_activities);
  }
  const auto stats = dataset_stats(result.dataset);
  write_stats(out, stats, result.rows, result.duplicates);
  if (result.duplicates > 0) {
    out << "note: removed " << result.duplicates << " duplicate rows\n";
  }
  if (!dir.empty()) {
    const fs::path root(dir);
    fs::create_directories(root);
    write_interactions(root / "interactions.tsv", result.dataset.catalog,
                       result.dataset.store);
    write_activities(root / "activities.txt", result.dataset.catalog);
    auto stats_out = open_out(root / "stats.tsv");
    write_stats(stats_out, stats, result.rows, result.duplicates);
    if (split_seed) {
      const auto split =
        split_per_user(result.dataset.store, split_fraction, *split_seed);
      write_split(root / "split", result.dataset.catalog, split);
      write_activities(root / "split" / "activities.txt",
                       result.dataset.catalog);
    }
  }
  return kExitOk;
}

int cmd_train(const std::string& data, const std::string& activities,
              const std::string& tags_path, const std::string& config_flag,
              const std::string& dir, std::ostream& out, std::ostream& err) {
  auto choice = resolve_config(config_flag, err);
  const fs::path data_path(data);
  IngestSchema schema;
  schema.activities = resolve_activities(activities, data_path);
  auto ingested = ingest(data_path, schema);
  const auto& dataset = ingested.dataset;
  std::optional<TagMap> tags;
  if (!tags_path.empty()) {
    tags = read_tags(fs::path(tags_path));
  }
  auto features =
    build_features(dataset.store, dataset.catalog, tags ? &*tags : nullptr,
                   choice.config.user_feature_scaling);
  Trainer trainer(dataset.store, std::move(features), choice.config);
  auto model = std::move(trainer).run();
  if (model.report.keen_skipped + model.report.act_skipped > 0) {
    err << "warning: skipped " << model.report.keen_skipped
        << " keen and " << model.report.act_skipped
        << " act steps with no negatives\n";
  }

  const fs::path root(dir);
  fs::create_directories(root);
  save_model(root / "model.txt", dataset.catalog, model);
  {
    auto report = open_out(root / "report.tsv");
    model.report.write(report);
  }
  ordered_json manifest;
  manifest["tool"] = "keen2act";
  manifest["version"] = kVersion;
  manifest["command"] = "train";
  manifest["seed"] = choice.config.seed;
  manifest["config"] = config_json(choice.config);
  manifest["inputs"] = ordered_json::array();
  manifest["inputs"].push_back(digest_entry(data_path));
  if (!tags_path.empty()) {
    manifest["inputs"].push_back(digest_entry(tags_path));
  }
  if (choice.path) {
    manifest["inputs"].push_back(digest_entry(*choice.path));
  }
  manifest["artifacts"] = {{"model", "model.txt"}, {"report", "report.tsv"}};
  auto manifest_out = open_out(root / "manifest.json");
  manifest_out << manifest.dump(2) << '\n';

  out << "trained " << dataset.catalog.num_users() << " users, "
      << dataset.catalog.num_items() << " items, "
      << dataset.catalog.num_activities() << " activities in "
      << choice.config.epochs << " epochs; wrote " << root.string() << '\n';
  return kExitOk;
}

int cmd_recommend(const std::string& model_flag,
                  const std::vector<std::string>& users, bool all,
                  std::size_t k, const std::string& out_path,
                  std::ostream& out, std::ostream& err) {
  fs::path model_path(model_flag);
  if (fs::is_directory(model_path)) {
    model_path /= "model.txt";
  }
  check_manifest(model_path.parent_path(), err);
  const auto snap = load_model(model_path);
  const auto& catalog = snap.catalog;

  std::vector<std::string> wanted = users;
  if (all) {
    wanted = catalog.users.raw_ids();
  }
  if (wanted.empty()) {
    throw ConfigError("give --users or --all");
  }
  std::ofstream file;
  if (!out_path.empty()) {
    file = open_out(out_path);
  }
  std::ostream& sink = out_path.empty() ? out : file;
  std::size_t succeeded = 0;
  for (const auto& raw : wanted) {
    const auto user = catalog.users.find(raw);
    if (!user) {
      err << "warning: unknown user '" << raw << "'\n";
      continue;
    }
    const auto list = recommend(snap.model, *user, k);
    if (list.entries.empty()) {
      err << "warning: no item passed the thresholds for user '" << raw
          << "'\n";
    }
    write_recommendations(sink, catalog, list);
    ++succeeded;
  }
  if (succeeded == 0) {
    err << "error: no known users\n";
    return kExitUsage;
  }
  return kExitOk;
}

struct EvaluateArgs {
  std::string data;
  std::string activities;
  std::string tags;
  std::string config;
  std::string variants;
  std::string out;
  std::string name;
  std::size_t splits = 5;
  double split_fraction = 0.8;
  bool synthetic = false;
  std::uint64_t synthetic_seed = 1;
  bool keep_train_pairs = false;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out, std::ostream& err) {
  auto choice = resolve_config(a.config, err);
  ExperimentConfig ec;
  ec.train = choice.config;
  ec.n_splits = a.splits;
  ec.split_fraction = a.split_fraction;
  ec.exclude_train_pairs = !a.keep_train_pairs;
  if (!a.variants.empty()) {
    ec.variants.clear();
    for (const auto& name : split_list(a.variants)) {
      ec.variants.push_back(parse_variant(name));
    }
  }

  Dataset dataset;
  std::optional<TagMap> tags;
  std::string name = a.name;
  if (a.synthetic) {
    SyntheticConfig sc;
    sc.seed = a.synthetic_seed;
    auto corpus = generate_two_stage_corpus(sc);
    dataset = std::move(corpus.dataset);
    tags = std::move(corpus.tags);
    if (name.empty()) {
      name = "synthetic";
    }
  } else {
    if (a.data.empty()) {
      throw ConfigError("give --data or --synthetic");
    }
    const fs::path data_path(a.data);
    IngestSchema schema;
    schema.activities = resolve_activities(a.activities, data_path);
    dataset = ingest(data_path, schema).dataset;
    if (!a.tags.empty()) {
      tags = read_tags(fs::path(a.tags));
    }
    if (name.empty()) {
      name = data_path.stem().string();
    }
  }

  const auto report =
    run_experiment(name, dataset, tags ? &*tags : nullptr, ec);
  report.write_table(out);
  if (!a.out.empty()) {
    const fs::path root(a.out);
    fs::create_directories(root);
    auto table = open_out(root / "eval_table.txt");
    report.write_table(table);
    auto records = open_out(root / "eval_records.tsv");
    report.write_records(records);
  }
  return kExitOk;
}

int cmd_synth(const std::string& dir, const SyntheticConfig& sc,
              std::ostream& out) {
  const auto corpus = generate_two_stage_corpus(sc);
  const fs::path root(dir);
  write_corpus(root, corpus);
  write_activities(root / "activities.txt", corpus.dataset.catalog);
  const auto stats = dataset_stats(corpus.dataset);
  write_stats(out, stats, corpus.dataset.store.triples().size(), 0);
  return kExitOk;
}

}  // namespace

std::string file_sha256(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot open " + path);
  }
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                              EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 unavailable");
  }
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    if (in.gcount() > 0) {
      EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount()));
    }
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex += kHex[md[i] >> 4];
    hex += kHex[md[i] & 0xf];
  }
  return hex;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"keen2act: two-stage item and activity recommender"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("keen2act ") + kVersion);

  std::string input, activities, dir, data, tags, config, model;
  bool header = false;
  std::size_t min_activities = 0;
  double split_fraction = 0.8;
  std::optional<std::uint64_t> split_seed;

  auto* ingest_cmd = app.add_subcommand("ingest", "Normalize an interaction log");
  ingest_cmd->add_option("--input", input, "TSV of user, item, activity[, timestamp]")
    ->required();
  ingest_cmd->add_option("--activities", activities,
                         "Comma-separated activity types in id order")
    ->required();
  ingest_cmd->add_flag("--header", header, "First line is a header");
  ingest_cmd->add_option("--min-activities", min_activities,
                         "Drop users with fewer triples");
  ingest_cmd->add_option("--split-fraction", split_fraction,
                         "Training share per user");
  ingest_cmd->add_option("--split-seed", split_seed,
                         "Also write a per-user train/test split");
  ingest_cmd->add_option("--out", dir, "Output directory");

  auto* train_cmd = app.add_subcommand("train", "Train a two-stage model");
  train_cmd->add_option("--data", data, "Interaction TSV")->required();
  train_cmd->add_option("--activities", activities,
                        "Activity types; default: activities.txt beside data");
  train_cmd->add_option("--tags", tags, "Item tag file");
  train_cmd->add_option("--config", config, "key = value config file");
  train_cmd->add_option("--out", dir, "Output directory")->required();

  std::string users_flag, out_path;
  bool all = false;
  std::size_t k = kNoCutoff;
  auto* rec_cmd = app.add_subcommand("recommend", "Emit ranked (item, activity) lists");
  rec_cmd->add_option("--model", model, "Model file or training directory")
    ->required();
  auto* users_opt =
    rec_cmd->add_option("--users", users_flag, "Comma-separated user ids");
  auto* all_opt = rec_cmd->add_flag("--all", all, "Every known user");
  users_opt->excludes(all_opt);
  rec_cmd->add_option("--k", k, "Maximum entries per user");
  rec_cmd->add_option("--out", out_path, "Write to a file instead of stdout");

  EvaluateArgs ev;
  auto* eval_cmd = app.add_subcommand("evaluate", "Run the MAP@k protocol");
  eval_cmd->add_option("--data", ev.data, "Interaction TSV");
  eval_cmd->add_option("--activities", ev.activities, "Activity types");
  eval_cmd->add_option("--tags", ev.tags, "Item tag file");
  eval_cmd->add_option("--config", ev.config, "key = value config file");
  eval_cmd->add_option("--splits", ev.splits, "Number of random splits");
  eval_cmd->add_option("--split-fraction", ev.split_fraction,
                       "Training share per user");
  eval_cmd->add_option("--variants", ev.variants,
                       "Subset of fm_bpr,fm_warp,keen_only,act_only,keen2act");
  eval_cmd->add_flag("--synthetic", ev.synthetic,
                     "Evaluate on the built-in synthetic corpus");
  eval_cmd->add_option("--synthetic-seed", ev.synthetic_seed,
                       "Seed of the synthetic corpus");
  eval_cmd->add_flag("--keep-train-pairs", ev.keep_train_pairs,
                     "Leave training pairs in the ranked lists");
  eval_cmd->add_option("--name", ev.name, "Dataset label in the report");
  eval_cmd->add_option("--out", ev.out, "Output directory");

  SyntheticConfig sc;
  auto* synth_cmd = app.add_subcommand("synth", "Write the synthetic corpus");
  synth_cmd->add_option("--out", dir, "Output directory")->required();
  synth_cmd->add_option("--users", sc.users, "Number of users");
  synth_cmd->add_option("--items", sc.items, "Number of items");
  synth_cmd->add_option("--activities", sc.activities, "Number of activity types");
  synth_cmd->add_option("--seed", sc.seed, "Generator seed");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << app.version() << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*ingest_cmd) {
      return cmd_ingest(input, activities, header, min_activities,
                        split_fraction, split_seed, dir, out);
    }
    if (*train_cmd) {
      return cmd_train(data, activities, tags, config, dir, out, err);
    }
    if (*rec_cmd) {
      return cmd_recommend(model, split_list(users_flag), all, k, out_path,
                           out, err);
    }
    if (*eval_cmd) {
      return cmd_evaluate(ev, out, err);
    }
    if (*synth_cmd) {
      return cmd_synth(dir, sc, out);
    }
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const EmptyDatasetError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const SchemaError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace keen2act::cli
