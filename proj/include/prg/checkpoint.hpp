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

#ifndef PRG_CHECKPOINT_HPP_
#define PRG_CHECKPOINT_HPP_

#include <filesystem>

#include "prg/trainer.hpp"

namespace prg {

inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
  StudentConfig student;  // fully resolved (dims filled in)
  TrainConfig train;
  TrainState state;
};

// Layout:
//   params.f64, params.json   raw float64 tensors + JSON shape index
//   proxy_t.f64, proxy_s.f64  c x D teacher / student proxy banks
//   optimizer.f64             AdamW first then second moments
//   resume.json               counters, proxy metadata, train config
void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace prg

#endif  // PRG_CHECKPOINT_HPP_
