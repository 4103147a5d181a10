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

#pragma once

#include <keen2act/training.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace keen2act {

// Keys accepted in a training config file, in documentation order.
const std::vector<std::string>& train_config_keys();

struct LoadedConfig {
  TrainConfig config;
  // Documented keys that were absent and kept their default.
  std::vector<std::string> defaulted;
};

// Flat `key = value` lines; `#` starts a comment. Unknown keys raise a
// ConfigError naming the key.
LoadedConfig parse_train_config(std::istream& in);
LoadedConfig load_train_config(const std::filesystem::path& path);

// Canonical `key = value` rendering of every key.
std::string format_train_config(const TrainConfig& config);

}  // namespace keen2act
