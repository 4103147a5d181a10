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

#include <keen2act/data_model.hpp>
#include <keen2act/training.hpp>

#include <filesystem>
#include <iosfwd>

namespace keen2act {

// A trained model together with the catalog needed to map dense ids back to
// raw ids. The training report is not part of the snapshot.
struct ModelSnapshot {
  Catalog catalog;
  TrainedModel model;
};

// Line-oriented text format headed `keen2act-model 1`. Reals are written in
// shortest round-trip form, so save(load(save(m))) is byte-identical.
void save_model(std::ostream& out, const Catalog& catalog,
                const TrainedModel& model);
void save_model(const std::filesystem::path& path, const Catalog& catalog,
                const TrainedModel& model);
ModelSnapshot load_model(std::istream& in);
ModelSnapshot load_model(const std::filesystem::path& path);

}  // namespace keen2act
