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

#include "prg/bundle.hpp"

#include <unistd.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"
#include "prg/io.hpp"

namespace prg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kManifestFile = "manifest.json";
constexpr const char* kInputsFile = "inputs.f32";
constexpr const char* kFeaturesFile = "features.f32";
constexpr const char* kTextFile = "text_embeddings.f32";
constexpr const char* kLabelsFile = "labels.i64";

json manifest_to_json(const Manifest& m) {
  return json{{"format_version", m.format_version},
              {"n_samples", m.n_samples},
              {"input_dim", m.input_dim},
              {"feature_dim", m.feature_dim},
              {"n_classes", m.n_classes},
              {"n_prompts", m.n_prompts},
              {"class_names", m.class_names},
              {"prompt_names", m.prompt_names},
              {"has_labels", m.has_labels},
              {"split", {{"train", m.split.train}, {"eval", m.split.eval}}},
              {"seed", m.seed}};
}

template <typename T>
T required(const json& j, const char* key) {
  if (!j.contains(key)) {
    throw FormatError(std::string("manifest.json: missing key '") + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest.json: bad value for '") + key +
                      "': " + e.what());
  }
}

Manifest manifest_from_json(const json& j) {
  if (!j.is_object()) throw FormatError("manifest.json: not a JSON object");
  Manifest m;
  m.format_version = required<int>(j, "format_version");
  m.n_samples = required<std::int64_t>(j, "n_samples");
  m.input_dim = required<std::int64_t>(j, "input_dim");
  m.feature_dim = required<std::int64_t>(j, "feature_dim");
  m.n_classes = required<std::int64_t>(j, "n_classes");
  m.n_prompts = required<std::int64_t>(j, "n_prompts");
  m.class_names = required<std::vector<std::string>>(j, "class_names");
  m.prompt_names = required<std::vector<std::string>>(j, "prompt_names");
  m.has_labels = required<bool>(j, "has_labels");
  const json split = required<json>(j, "split");
  m.split.train = required<IndexVector>(split, "train");
  m.split.eval = required<IndexVector>(split, "eval");
  m.seed = required<std::uint64_t>(j, "seed");
  if (m.format_version != kBundleFormatVersion) {
    throw FormatError("manifest.json: unsupported format_version " +
                      std::to_string(m.format_version));
  }
  return m;
}

void check_unit_rows(const Matrix& m, const std::string& field) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double n = m.row(r).norm();
    if (!(std::abs(n - 1.0) <= kUnitNormTolerance)) {
      std::ostringstream os;
      os << field << ": row " << r << " has norm " << n
         << " (expected 1 within " << kUnitNormTolerance << ")";
      throw ValidationError(os.str());
    }
  }
}

void check_index_set(const IndexVector& idx, std::int64_t n,
                     const std::string& field, std::set<std::int64_t>& seen) {
  for (const auto i : idx) {
    if (i < 0 || i >= n) {
      throw ValidationError(field + ": index " + std::to_string(i) +
                            " outside [0, " + std::to_string(n) + ")");
    }
    if (!seen.insert(i).second) {
      throw ValidationError(field + ": index " + std::to_string(i) +
                            " repeated or shared between train and eval");
    }
  }
}

void normalize_row(Eigen::Ref<RowVector> row) { row /= row.norm(); }

}  // namespace

const Manifest& TrainingView::manifest() const { return bundle_->manifest(); }
const Matrix& TrainingView::inputs() const { return bundle_->inputs(); }
const Matrix& TrainingView::features() const { return bundle_->features(); }
const std::vector<Matrix>& TrainingView::text_embeddings() const {
  return bundle_->text_embeddings();
}

TeacherBundle::TeacherBundle(Manifest manifest, Matrix inputs,
                             Matrix features,
                             std::vector<Matrix> text_embeddings,
                             std::optional<IndexVector> labels)
    : manifest_(std::move(manifest)),
      inputs_(std::move(inputs)),
      features_(std::move(features)),
      text_(std::move(text_embeddings)),
      labels_(std::move(labels)) {
  validate();
}

const IndexVector& TeacherBundle::labels() const {
  label_reads_->fetch_add(1);
  if (!labels_) throw StateError("bundle has no labels");
  return *labels_;
}

void TeacherBundle::validate() const {
  const Manifest& m = manifest_;
  if (m.n_samples < 1) throw ValidationError("n_samples: must be >= 1");
  if (m.input_dim < 1) throw ValidationError("input_dim: must be >= 1");
  if (m.feature_dim < 1) throw ValidationError("feature_dim: must be >= 1");
  if (m.n_classes < 1) throw ValidationError("n_classes: must be >= 1");
  if (m.n_prompts < 1) throw ValidationError("n_prompts: must be >= 1");
  if (static_cast<std::int64_t>(m.class_names.size()) != m.n_classes) {
    throw ValidationError("class_names: length " +
                          std::to_string(m.class_names.size()) +
                          " != n_classes " + std::to_string(m.n_classes));
  }
  if (static_cast<std::int64_t>(m.prompt_names.size()) != m.n_prompts) {
    throw ValidationError("prompt_names: length " +
                          std::to_string(m.prompt_names.size()) +
                          " != n_prompts " + std::to_string(m.n_prompts));
  }
  std::set<std::int64_t> seen;
  check_index_set(m.split.train, m.n_samples, "split.train", seen);
  check_index_set(m.split.eval, m.n_samples, "split.eval", seen);

  if (inputs_.rows() != m.n_samples || inputs_.cols() != m.input_dim) {
    throw ValidationError("inputs: shape " + shape_str(inputs_) +
                          " != manifest " +
                          shape_str(m.n_samples, m.input_dim));
  }
  if (features_.rows() != m.n_samples || features_.cols() != m.feature_dim) {
    throw ValidationError("features: shape " + shape_str(features_) +
                          " != manifest " +
                          shape_str(m.n_samples, m.feature_dim));
  }
  if (static_cast<std::int64_t>(text_.size()) != m.n_prompts) {
    throw ValidationError("text_embeddings: " + std::to_string(text_.size()) +
                          " prompt matrices, manifest says " +
                          std::to_string(m.n_prompts));
  }
  if (!all_finite(inputs_)) throw ValidationError("inputs: non-finite value");
  if (!all_finite(features_)) {
    throw ValidationError("features: non-finite value");
  }
  check_unit_rows(features_, "features");
  for (std::size_t i = 0; i < text_.size(); ++i) {
    const std::string field = "text_embeddings[" + std::to_string(i) + "]";
    if (text_[i].rows() != m.n_classes || text_[i].cols() != m.feature_dim) {
      throw ValidationError(field + ": shape " + shape_str(text_[i]) +
                            " != " + shape_str(m.n_classes, m.feature_dim));
    }
    if (!all_finite(text_[i])) {
      throw ValidationError(field + ": non-finite value");
    }
    check_unit_rows(text_[i], field);
  }
  if (m.has_labels != labels_.has_value()) {
    throw ValidationError("has_labels: manifest flag disagrees with data");
  }
  if (labels_) {
    if (static_cast<std::int64_t>(labels_->size()) != m.n_samples) {
      throw ValidationError("labels: length " +
                            std::to_string(labels_->size()) +
                            " != n_samples");
    }
    for (std::size_t i = 0; i < labels_->size(); ++i) {
      const auto l = (*labels_)[i];
      if (l < 0 || l >= m.n_classes) {
        throw ValidationError("labels: entry " + std::to_string(i) +
                              " = " + std::to_string(l) + " outside [0, " +
                              std::to_string(m.n_classes) + ")");
      }
    }
  }
}

TeacherBundle load_bundle(const fs::path& dir) {
  const fs::path manifest_path = dir / kManifestFile;
  if (!fs::exists(manifest_path)) {
    throw NotFoundError("bundle: " + manifest_path.string() + " not found");
  }
  json j;
  {
    std::ifstream in(manifest_path);
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw FormatError("manifest.json: " + std::string(e.what()));
    }
  }
  Manifest m = manifest_from_json(j);
  if (m.n_samples < 1) throw ValidationError("n_samples: must be >= 1");

  Matrix inputs =
      read_f32_matrix(dir / kInputsFile, m.n_samples, m.input_dim);
  Matrix features =
      read_f32_matrix(dir / kFeaturesFile, m.n_samples, m.feature_dim);
  const Matrix stacked = read_f32_matrix(
      dir / kTextFile, m.n_prompts * m.n_classes, m.feature_dim);
  std::vector<Matrix> text;
  text.reserve(static_cast<std::size_t>(m.n_prompts));
  for (std::int64_t p = 0; p < m.n_prompts; ++p) {
    text.emplace_back(stacked.middleRows(p * m.n_classes, m.n_classes));
  }
  std::optional<IndexVector> labels;
  if (m.has_labels) {
    labels = read_i64_vector(dir / kLabelsFile, m.n_samples);
  }
  return TeacherBundle(std::move(m), std::move(inputs), std::move(features),
                       std::move(text), std::move(labels));
}

void save_bundle(const TeacherBundle& bundle, const fs::path& dir) {
  write_dir_atomically(dir, [&bundle](const fs::path& tmp) {
    const Manifest& m = bundle.manifest();
    write_text_file(tmp / kManifestFile, manifest_to_json(m).dump(2) + "\n");
    write_f32_matrix(tmp / kInputsFile, bundle.inputs());
    write_f32_matrix(tmp / kFeaturesFile, bundle.features());
    Matrix stacked(m.n_prompts * m.n_classes, m.feature_dim);
    for (std::int64_t p = 0; p < m.n_prompts; ++p) {
      stacked.middleRows(p * m.n_classes, m.n_classes) =
          bundle.text_embeddings()[static_cast<std::size_t>(p)];
    }
    write_f32_matrix(tmp / kTextFile, stacked);
    if (m.has_labels) {
      write_i64_vector(tmp / kLabelsFile, bundle.labels());
    }
  });
}

TeacherBundle synth_bundle(const SynthParams& sp) {
  if (sp.n_classes < 2) throw ValidationError("synth: classes must be >= 2");
  if (sp.n_prompts < 1) throw ValidationError("synth: prompts must be >= 1");
  if (sp.feature_dim < 4) throw ValidationError("synth: dim must be >= 4");
  if (sp.input_dim < sp.feature_dim) {
    throw ValidationError("synth: input_dim must be >= dim");
  }
  if (sp.n_per_class < 1) {
    throw ValidationError("synth: per-class count must be >= 1");
  }
  if (!(sp.noise > 0.0 && sp.noise < 1.0)) {
    throw ValidationError("synth: noise must lie in (0, 1)");
  }
  const std::int64_t c = sp.n_classes;
  const std::int64_t d = sp.feature_dim;
  const std::int64_t m = sp.input_dim;
  const std::int64_t n = c * sp.n_per_class;

  std::mt19937_64 rng(sp.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw = [&](Eigen::Index rows, Eigen::Index cols) {
    Matrix out(rows, cols);
    for (Eigen::Index i = 0; i < out.size(); ++i) out.data()[i] = normal(rng);
    return out;
  };

  Matrix centers = draw(c, d);
  for (Eigen::Index j = 0; j < c; ++j) normalize_row(centers.row(j));
  const Matrix mixing = draw(d, m);

  std::vector<Matrix> text;
  for (std::int64_t p = 0; p < sp.n_prompts; ++p) {
    // Prompt quality spreads from 0.5x to 1.5x the base perturbation.
    const double spread =
        sp.n_prompts > 1
            ? 0.5 + static_cast<double>(p) /
                        static_cast<double>(sp.n_prompts - 1)
            : 1.0;
    Matrix t = centers + (0.5 * sp.noise * spread) * draw(c, d);
    for (Eigen::Index j = 0; j < c; ++j) normalize_row(t.row(j));
    text.push_back(std::move(t));
  }

  Matrix features(n, d);
  IndexVector labels(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    const std::int64_t cls = i / sp.n_per_class;
    labels[static_cast<std::size_t>(i)] = cls;
    features.row(i) = centers.row(cls) + sp.noise * draw(1, d);
    normalize_row(features.row(i));
  }
  Matrix inputs = features * mixing + 0.1 * draw(n, m);

  Manifest man;
  man.n_samples = n;
  man.input_dim = m;
  man.feature_dim = d;
  man.n_classes = c;
  man.n_prompts = sp.n_prompts;
  for (std::int64_t j = 0; j < c; ++j) {
    man.class_names.push_back("class_" + std::to_string(j));
  }
  for (std::int64_t p = 0; p < sp.n_prompts; ++p) {
    man.prompt_names.push_back("prompt_" + std::to_string(p));
  }
  man.has_labels = true;
  man.seed = sp.seed;
  // Stratified 80/20 split.
  const std::int64_t n_train_per_class = (sp.n_per_class * 4) / 5;
  for (std::int64_t j = 0; j < c; ++j) {
    IndexVector members(static_cast<std::size_t>(sp.n_per_class));
    for (std::int64_t k = 0; k < sp.n_per_class; ++k) {
      members[static_cast<std::size_t>(k)] = j * sp.n_per_class + k;
    }
    std::shuffle(members.begin(), members.end(), rng);
    man.split.train.insert(man.split.train.end(), members.begin(),
                           members.begin() + n_train_per_class);
    man.split.eval.insert(man.split.eval.end(),
                          members.begin() + n_train_per_class, members.end());
  }
  std::sort(man.split.train.begin(), man.split.train.end());
  std::sort(man.split.eval.begin(), man.split.eval.end());

  // Round through 32-bit so an in-memory synthetic bundle equals its saved
  // and reloaded copy.
  auto to_storage = [](const Matrix& x) -> Matrix {
    return x.cast<float>().cast<double>();
  };
  for (auto& t : text) t = to_storage(t);
  return TeacherBundle(std::move(man), to_storage(inputs),
                       to_storage(features), std::move(text),
                       std::move(labels));
}

}  // namespace prg
