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

#include <cstddef>
#include <cstdint>
#include <limits>

namespace keen2act {

using UserId = std::uint32_t;
using ItemId = std::uint32_t;
using ActivityId = std::uint32_t;

// Cutoff meaning "no cutoff" for MAP@k and recommendation truncation.
inline constexpr std::size_t kNoCutoff = std::numeric_limits<std::size_t>::max();

}  // namespace keen2act
