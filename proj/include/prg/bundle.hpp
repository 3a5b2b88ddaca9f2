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

#ifndef PRG_BUNDLE_HPP_
#define PRG_BUNDLE_HPP_

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "prg/numerics/matrix.hpp"

namespace prg {

inline constexpr int kBundleFormatVersion = 1;
// Tolerance on the unit-norm rows of features and text embeddings.
inline constexpr double kUnitNormTolerance = 1e-4;

struct Split {
  IndexVector train;
  IndexVector eval;

  bool operator==(const Split&) const = default;
};

struct Manifest {
  int format_version = kBundleFormatVersion;
  std::int64_t n_samples = 0;
  std::int64_t input_dim = 0;
  std::int64_t feature_dim = 0;
  std::int64_t n_classes = 0;
  std::int64_t n_prompts = 0;
  std::vector<std::string> class_names;
  std::vector<std::string> prompt_names;
  bool has_labels = false;
  Split split;
  std::uint64_t seed = 0;

  bool operator==(const Manifest&) const = default;
};

class TeacherBundle;

// Label-free window onto a bundle. This is everything the training path is
// allowed to see.
class TrainingView {
 public:
  explicit TrainingView(const TeacherBundle& bundle) : bundle_(&bundle) {}

  const Manifest& manifest() const;
  const Matrix& inputs() const;
  const Matrix& features() const;
  const std::vector<Matrix>& text_embeddings() const;
  const IndexVector& train_indices() const { return manifest().split.train; }
  const IndexVector& eval_indices() const { return manifest().split.eval; }

 private:
  const TeacherBundle* bundle_;
};

// Teacher outputs for one dataset, validated on construction and immutable
// afterwards.
class TeacherBundle {
 public:
  TeacherBundle(Manifest manifest, Matrix inputs, Matrix features,
                std::vector<Matrix> text_embeddings,
                std::optional<IndexVector> labels);

  const Manifest& manifest() const { return manifest_; }
  const Matrix& inputs() const { return inputs_; }
  const Matrix& features() const { return features_; }
  const std::vector<Matrix>& text_embeddings() const { return text_; }
  bool has_labels() const { return labels_.has_value(); }

  // Ground-truth labels, evaluation only. Every call is counted so tests can
  // prove training never touches them. Throws StateError when absent.
  const IndexVector& labels() const;
  std::size_t label_access_count() const { return label_reads_->load(); }

  TrainingView training_view() const { return TrainingView(*this); }

  std::int64_t n_samples() const { return manifest_.n_samples; }
  std::int64_t n_classes() const { return manifest_.n_classes; }
  std::int64_t feature_dim() const { return manifest_.feature_dim; }
  std::int64_t input_dim() const { return manifest_.input_dim; }

 private:
  void validate() const;

  Manifest manifest_;
  Matrix inputs_;
  Matrix features_;
  std::vector<Matrix> text_;
  std::optional<IndexVector> labels_;
  std::shared_ptr<std::atomic<std::size_t>> label_reads_ =
      std::make_shared<std::atomic<std::size_t>>(0);
};

TeacherBundle load_bundle(const std::filesystem::path& dir);

// Writes into a sibling temporary directory and renames it into place, so a
// failed save never leaves a partial bundle behind.
void save_bundle(const TeacherBundle& bundle, const std::filesystem::path& dir);

struct SynthParams {
  std::int64_t n_classes = 10;
  std::int64_t n_prompts = 4;
  std::int64_t feature_dim = 32;
  std::int64_t input_dim = 64;
  std::int64_t n_per_class = 200;
  double noise = 0.3;
  std::uint64_t seed = 7;
};

// Deterministic synthetic teacher: class directions on the unit sphere,
// noisy unit-norm features, per-prompt text embeddings of varying quality,
// and student inputs from a fixed random linear mixing of the features.
TeacherBundle synth_bundle(const SynthParams& params);

}  // namespace prg

#endif  // PRG_BUNDLE_HPP_
