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

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

namespace keen2act {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto [ptr, ec] =
    std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError("bad value '" + value + "' for key " + key);
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") {
    return true;
  }
  if (value == "false" || value == "0" || value == "no" || value == "off") {
    return false;
  }
  throw ConfigError("bad boolean '" + value + "' for key " + key);
}

std::string num(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

}  // namespace

const std::vector<std::string>& train_config_keys() {
  static const std::vector<std::string> keys = {
    "epochs",         "max_neg_samples",
    "k",              "lr",
    "beta1",          "beta2",
    "eps",            "lambda_keen",
    "lambda_act",     "margin",
    "seed",           "threshold_epochs",
    "threshold_negative_ratio", "id_onehots",
    "init_scale",     "threshold_lr",
    "early_stop",     "user_features"};
  return keys;
}

LoadedConfig parse_train_config(std::istream& in) {
  LoadedConfig loaded;
  auto& c = loaded.config;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) {
      line.resize(hash);
    }
    const auto body = trim(line);
    if (body.empty()) {
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) +
                        ": expected key = value");
    }
    const auto key = trim(std::string_view(body).substr(0, eq));
    const auto value = trim(std::string_view(body).substr(eq + 1));
    const auto& keys = train_config_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw ConfigError("unknown config key: " + key);
    }
    seen.insert(key);
    if (key == "epochs") {
      c.epochs = parse_number<std::size_t>(key, value);
    } else if (key == "max_neg_samples") {
      c.max_neg_samples = parse_number<std::size_t>(key, value);
    } else if (key == "k") {
      c.k = parse_number<std::size_t>(key, value);
    } else if (key == "lr") {
      c.adam.lr = parse_number<double>(key, value);
    } else if (key == "beta1") {
      c.adam.beta1 = parse_number<double>(key, value);
    } else if (key == "beta2") {
      c.adam.beta2 = parse_number<double>(key, value);
    } else if (key == "eps") {
      c.adam.eps = parse_number<double>(key, value);
    } else if (key == "lambda_keen") {
      c.lambda_keen = parse_number<double>(key, value);
    } else if (key == "lambda_act") {
      c.lambda_act = parse_number<double>(key, value);
    } else if (key == "margin") {
      c.margin = parse_number<double>(key, value);
    } else if (key == "seed") {
      c.seed = parse_number<std::uint64_t>(key, value);
    } else if (key == "threshold_epochs") {
      c.threshold_epochs = parse_number<std::size_t>(key, value);
    } else if (key == "threshold_negative_ratio") {
      if (value == "full") {
        c.threshold_negative_ratio.reset();
      } else {
        c.threshold_negative_ratio = parse_number<double>(key, value);
      }
    } else if (key == "id_onehots") {
      c.id_onehots = parse_bool(key, value);
    } else if (key == "init_scale") {
      c.init_scale = parse_number<double>(key, value);
    } else if (key == "threshold_lr") {
      c.threshold_lr = parse_number<double>(key, value);
    } else if (key == "early_stop") {
      c.early_stop = parse_bool(key, value);
    } else if (key == "user_features") {
      if (value == "raw") {
        c.user_feature_scaling = UserFeatureScaling::kRaw;
      } else if (value == "l2") {
        c.user_feature_scaling = UserFeatureScaling::kL2;
      } else {
        throw ConfigError("user_features must be 'raw' or 'l2', got '" +
                          value + "'");
      }
    }
  }
  for (const auto& key : train_config_keys()) {
    if (!seen.contains(key)) {
      loaded.defaulted.push_back(key);
    }
  }
  c.validate();
  return loaded;
}

LoadedConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config " + path.string());
  }
  return parse_train_config(in);
}

std::string format_train_config(const TrainConfig& c) {
  std::ostringstream out;
  out << "epochs = " << c.epochs << '\n'
      << "max_neg_samples = " << c.max_neg_samples << '\n'
      << "k = " << c.k << '\n'
      << "lr = " << num(c.adam.lr) << '\n'
      << "beta1 = " << num(c.adam.beta1) << '\n'
      << "beta2 = " << num(c.adam.beta2) << '\n'
      << "eps = " << num(c.adam.eps) << '\n'
      << "lambda_keen = " << num(c.lambda_keen) << '\n'
      << "lambda_act = " << num(c.lambda_act) << '\n'
      << "margin = " << num(c.margin) << '\n'
      << "seed = " << c.seed << '\n'
      << "threshold_epochs = " << c.threshold_epochs << '\n'
      << "threshold_negative_ratio = "
      << (c.threshold_negative_ratio ? num(*c.threshold_negative_ratio)
                                     : std::string("full"))
      << '\n'
      << "id_onehots = " << (c.id_onehots ? "true" : "false") << '\n'
      << "init_scale = " << num(c.init_scale) << '\n';
  if (c.threshold_lr) {
    out << "threshold_lr = " << num(*c.threshold_lr) << '\n';
  }
  out << "early_stop = " << (c.early_stop ? "true" : "false") << '\n'
      << "user_features = "
      << (c.user_feature_scaling == UserFeatureScaling::kL2 ? "l2" : "raw")
      << '\n';
  return out.str();
}

}  // namespace keen2act
