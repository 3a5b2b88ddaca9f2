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

#include "prg/config.hpp"

#include "prg/io.hpp"

namespace prg {

using nlohmann::json;

namespace {

template <typename T>
T as(const json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ValidationError("config: bad value for '" + key + "': " + v.dump());
  }
}

std::optional<double> optional_double(const json& v, const std::string& key) {
  if (v.is_null()) return std::nullopt;
  return as<double>(v, key);
}

// Student and train fields in one table so that student_config_from_json,
// train_config_from_json and the flat run config share a single key set.
bool apply_student_key(StudentConfig& s, const std::string& k, const json& v) {
  if (k == "input_dim") s.input_dim = as<std::int64_t>(v, k);
  else if (k == "backbone_hidden") s.backbone_hidden = as<std::vector<std::int64_t>>(v, k);
  else if (k == "feature_dim") s.feature_dim = as<std::int64_t>(v, k);
  else if (k == "n_classes") s.n_classes = as<std::int64_t>(v, k);
  else if (k == "teacher_dim") s.teacher_dim = as<std::int64_t>(v, k);
  else if (k == "init_seed") s.init_seed = as<std::uint64_t>(v, k);
  else return false;
  return true;
}

bool apply_train_key(TrainConfig& t, const std::string& k, const json& v) {
  if (k == "batch_size") t.batch_size = as<std::int64_t>(v, k);
  else if (k == "epochs") t.epochs = as<std::int64_t>(v, k);
  else if (k == "lr_max") t.lr_max = as<double>(v, k);
  else if (k == "lr_min") t.lr_min = as<double>(v, k);
  else if (k == "t0") t.t0 = as<std::int64_t>(v, k);
  else if (k == "t_mult") t.t_mult = as<std::int64_t>(v, k);
  else if (k == "weight_decay") t.weight_decay = as<double>(v, k);
  else if (k == "beta1") t.beta1 = as<double>(v, k);
  else if (k == "beta2") t.beta2 = as<double>(v, k);
  else if (k == "adam_eps") t.adam_eps = as<double>(v, k);
  else if (k == "lambda_node") t.lambda_node = as<double>(v, k);
  else if (k == "lambda_edge") t.lambda_edge = as<double>(v, k);
  else if (k == "reduction") t.reduction = parse_reduction(as<std::string>(v, k));
  else if (k == "alpha") t.alpha = optional_double(v, k);
  else if (k == "tau") t.tau = as<double>(v, k);
  else if (k == "kd_temperature") t.kd_temperature = as<double>(v, k);
  else if (k == "standardize_nodes") t.standardize_nodes = as<bool>(v, k);
  else if (k == "seed") t.seed = as<std::uint64_t>(v, k);
  else if (k == "mode") t.mode = parse_mode(as<std::string>(v, k));
  else return false;
  return true;
}

}  // namespace

StudentConfig RunConfig::resolved_student() const {
  StudentConfig s = student;
  s.init_seed = init_seed.value_or(train.seed);
  return s;
}

json student_config_to_json(const StudentConfig& s) {
  return json{{"input_dim", s.input_dim},     {"backbone_hidden", s.backbone_hidden},
              {"feature_dim", s.feature_dim}, {"n_classes", s.n_classes},
              {"teacher_dim", s.teacher_dim}, {"init_seed", s.init_seed}};
}

StudentConfig student_config_from_json(const json& j) {
  StudentConfig s;
  for (const auto& [k, v] : j.items()) {
    if (!apply_student_key(s, k, v)) {
      throw ValidationError("student config: unknown key '" + k + "'");
    }
  }
  return s;
}

json train_config_to_json(const TrainConfig& t) {
  return json{{"batch_size", t.batch_size},
              {"epochs", t.epochs},
              {"lr_max", t.lr_max},
              {"lr_min", t.lr_min},
              {"t0", t.t0},
              {"t_mult", t.t_mult},
              {"weight_decay", t.weight_decay},
              {"beta1", t.beta1},
              {"beta2", t.beta2},
              {"adam_eps", t.adam_eps},
              {"lambda_node", t.lambda_node},
              {"lambda_edge", t.lambda_edge},
              {"reduction", to_string(t.reduction)},
              {"alpha", t.alpha ? json(*t.alpha) : json(nullptr)},
              {"tau", t.tau},
              {"kd_temperature", t.kd_temperature},
              {"standardize_nodes", t.standardize_nodes},
              {"seed", t.seed},
              {"mode", to_string(t.mode)}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig t;
  for (const auto& [k, v] : j.items()) {
    if (!apply_train_key(t, k, v)) {
      throw ValidationError("train config: unknown key '" + k + "'");
    }
  }
  return t;
}

json run_config_to_json(const RunConfig& cfg) {
  json j = student_config_to_json(cfg.student);
  j["init_seed"] = cfg.init_seed ? json(*cfg.init_seed) : json(nullptr);
  const json train = train_config_to_json(cfg.train);
  for (const auto& [k, v] : train.items()) j[k] = v;
  j["bundle"] = cfg.bundle;
  j["out"] = cfg.out;
  j["resume"] = cfg.resume;
  return j;
}

void apply_config_json(RunConfig& cfg, const json& j) {
  if (!j.is_object()) throw ValidationError("config: expected a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (k == "init_seed") {
      cfg.init_seed = v.is_null() ? std::nullopt
                                  : std::optional(as<std::uint64_t>(v, k));
    } else if (k == "bundle") {
      cfg.bundle = as<std::string>(v, k);
    } else if (k == "out") {
      cfg.out = as<std::string>(v, k);
    } else if (k == "resume") {
      cfg.resume = as<std::string>(v, k);
    } else if (!apply_student_key(cfg.student, k, v) &&
               !apply_train_key(cfg.train, k, v)) {
      throw ValidationError("config: unknown key '" + k + "'");
    }
  }
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ValidationError("override '" + assignment + "' is not key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  apply_config_json(cfg, json{{key, value}});
}

RunConfig load_run_config(const std::string& path) {
  RunConfig cfg;
  const json j = json::parse(read_text_file(path), nullptr, false);
  if (j.is_discarded()) {
    throw ValidationError("config: " + path + " is not valid JSON");
  }
  apply_config_json(cfg, j);
  return cfg;
}

}  // namespace prg
