// Copyright 2026 The ETID Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ETID_SERIALIZATION_H_
#define ETID_SERIALIZATION_H_

#include <filesystem>
#include <string>
#include <type_traits>
#include <vector>

#include "etid/nn.h"
#include "json.hpp"

namespace etid {

template <typename T>
struct IsVector : std::false_type {};
template <typename T>
struct IsVector<std::vector<T>> : std::true_type {};

// get_to() that refuses to narrow: integers must be integral JSON numbers,
// unsigned ones non-negative. Throws nlohmann::json::type_error.
template <typename T>
void StrictGetTo(const nlohmann::json& j, T& out) {
  if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
    const bool ok = std::is_unsigned_v<T> ? j.is_number_unsigned()
                                          : j.is_number_integer();
    if (!ok) {
      throw nlohmann::json::type_error::create(
          302,
          std::string("expected a") +
              (std::is_unsigned_v<T> ? " non-negative" : "n") +
              " integer, got " + j.dump(),
          &j);
    }
    j.get_to(out);
  } else if constexpr (IsVector<T>::value) {
    if (!j.is_array()) {
      throw nlohmann::json::type_error::create(302, "expected an array, got " + j.dump(), &j);
    }
    T items(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) StrictGetTo(j[i], items[i]);
    out = std::move(items);
  } else {
    j.get_to(out);
  }
}

void to_json(nlohmann::json& j, const TrainConfig& c);
// Missing keys keep the values already in `c`; unknown keys are rejected.
void from_json(const nlohmann::json& j, TrainConfig& c);

nlohmann::json ReadJsonFile(const std::filesystem::path& path);
// Pretty-printed, trailing newline. Output is byte-stable for equal input.
void WriteJsonFile(const nlohmann::json& j, const std::filesystem::path& path);

}  // namespace etid

#endif  // ETID_SERIALIZATION_H_
