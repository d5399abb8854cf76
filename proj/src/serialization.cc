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

#include "etid/serialization.h"

#include <fstream>

#include "etid/errors.h"

namespace etid {

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"learning_rate", c.learning_rate},
                     {"epochs", c.epochs},
                     {"batch_size", c.batch_size},
                     {"seed", c.seed},
                     {"shuffle", c.shuffle},
                     {"loss", LossKindName(c.loss)},
                     {"stop_below", c.stop_below}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  if (!j.is_object()) throw ValidationError("train config must be an object");
  for (const auto& [key, value] : j.items()) {
    if (key == "learning_rate") {
      StrictGetTo(value, c.learning_rate);
    } else if (key == "epochs") {
      StrictGetTo(value, c.epochs);
    } else if (key == "batch_size") {
      StrictGetTo(value, c.batch_size);
    } else if (key == "seed") {
      StrictGetTo(value, c.seed);
    } else if (key == "shuffle") {
      StrictGetTo(value, c.shuffle);
    } else if (key == "loss") {
      c.loss = ParseLossKind(value.get<std::string>());
    } else if (key == "stop_below") {
      StrictGetTo(value, c.stop_below);
    } else {
      throw ValidationError("unknown train config key '" + key + "'");
    }
  }
}

nlohmann::json ReadJsonFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void WriteJsonFile(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace etid
