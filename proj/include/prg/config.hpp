/* Copyright 2026 The prgkd Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef PRG_CONFIG_HPP_
#define PRG_CONFIG_HPP_

#include <optional>
#include <string>

#include "json.hpp"
#include "prg/trainer.hpp"

namespace prg {

// Flat run configuration. JSON keys match the field names below exactly;
// unknown keys are rejected.
struct RunConfig {
  StudentConfig student;
  std::optional<std::uint64_t> init_seed;  // unset: follow train.seed
  TrainConfig train;
  std::string bundle;
  std::string out;
  std::string resume;

  // StudentConfig with init_seed resolved.
  StudentConfig resolved_student() const;
};

nlohmann::json student_config_to_json(const StudentConfig& cfg);
StudentConfig student_config_from_json(const nlohmann::json& j);

nlohmann::json train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

nlohmann::json run_config_to_json(const RunConfig& cfg);

// Applies every key of j onto cfg. Throws ValidationError naming the first
// unknown or ill-typed key.
void apply_config_json(RunConfig& cfg, const nlohmann::json& j);

// key=value override from the command line. The value is parsed as JSON
// when possible and as a bare string otherwise.
void apply_override(RunConfig& cfg, const std::string& assignment);

RunConfig load_run_config(const std::string& path);

}  // namespace prg

#endif  // PRG_CONFIG_HPP_
