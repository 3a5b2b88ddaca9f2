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

#ifndef PRG_TRAINER_HPP_
#define PRG_TRAINER_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "prg/bundle.hpp"
#include "prg/graph.hpp"
#include "prg/losses.hpp"
#include "prg/optim.hpp"
#include "prg/student.hpp"

namespace prg {

enum class TrainMode {
  kPrg,              // soft CE + node and edge alignment
  kCeOnly,           // soft CE only
  kKdBaseline,       // soft CE + temperature-scaled logit KD
  kPrgPlainLogits,   // PRG with the averaged-prompt teacher head
  kPrgFeatureNodes,  // PRG with feature-only nodes (D = d)
};

TrainMode parse_mode(const std::string& name);
std::string to_string(TrainMode mode);

struct TrainConfig {
  std::int64_t batch_size = 64;
  std::int64_t epochs = 150;
  double lr_max = 0.03;
  double lr_min = 0.0;
  std::int64_t t0 = 10;
  std::int64_t t_mult = 2;
  double weight_decay = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double lambda_node = 0.4;
  double lambda_edge = 0.2;
  Reduction reduction = Reduction::kFrobenius;
  std::optional<double> alpha;  // unset: batch_size / n_train
  double tau = 100.0;
  double kd_temperature = 4.0;
  bool standardize_nodes = false;
  std::uint64_t seed = 0;
  TrainMode mode = TrainMode::kPrg;

  // Proxy update rate; defaults to the batch-to-dataset ratio.
  double resolve_alpha(std::int64_t n_train) const;
  void validate() const;

  CosineRestartSchedule schedule() const {
    return {lr_max, lr_min, t0, t_mult};
  }
  AdamWConfig adamw() const { return {beta1, beta2, adam_eps, weight_decay}; }
  LossWeights loss_weights() const {
    return {lambda_node, lambda_edge, reduction};
  }
  std::uint64_t teacher_proxy_seed() const { return seed * 2 + 1; }
  std::uint64_t student_proxy_seed() const { return seed * 2 + 2; }
};

struct IterationRecord {
  std::int64_t epoch = 0;  // 1-based
  std::int64_t iteration = 0;  // global, 0-based
  double loss_ce = 0.0;
  double loss_node = 0.0;
  double loss_edge = 0.0;
  double loss_kd = 0.0;
  double loss_total = 0.0;
};

struct EpochRecord {
  std::int64_t epoch = 0;  // 1-based
  double lr = 0.0;
  double loss_ce = 0.0;
  double loss_node = 0.0;
  double loss_edge = 0.0;
  double loss_total = 0.0;
  double teacher_agreement = 0.0;
  std::optional<double> label_accuracy;
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::vector<IterationRecord> iterations;

  // Index into epochs of the highest teacher agreement (first on ties).
  std::optional<std::size_t> best_epoch() const;
};

// Everything needed to continue a run.
struct TrainState {
  StudentParams params;
  AdamWState optimizer;
  ProxyBank proxy_teacher;
  ProxyBank proxy_student;
  std::int64_t epochs_completed = 0;
  std::int64_t iterations_completed = 0;
};

// Teacher outputs for the whole dataset; the teacher is frozen and inputs
// are fixed, so they are computed once per run.
struct TeacherCache {
  Matrix logits;       // W (weighted or plain, per mode)
  Matrix soft_labels;  // softmax(W)
  IndexVector predictions;
  Matrix nodes;        // teacher sample nodes for every sample
};

TeacherCache compute_teacher(const TrainingView& view, const TrainConfig& cfg);

// Weighted-head predictions for every sample. Student agreement is always
// measured against these, whatever head a mode trains on.
IndexVector reference_predictions(const TrainingView& view, double tau);

struct IterationTrace {
  const IterationRecord& record;
  const IndexVector& batch;
  const Matrix& teacher_nodes;
  const Matrix& student_nodes;
  const IndexVector& assignment;
};

struct TrainHooks {
  std::function<void(const IterationTrace&)> on_iteration;
  // Runs after each epoch; may fill label_accuracy or persist state.
  std::function<void(EpochRecord&, const TrainState&)> on_epoch;
  // Wall-clock timing in records; off gives bit-reproducible histories.
  bool record_time = true;
};

struct TrainResult {
  TrainState state;
  TrainHistory history;
};

// Thrown when a loss or parameter goes non-finite.
class NumericAbort : public NumericError {
 public:
  NumericAbort(const std::string& what, std::int64_t iteration)
      : NumericError(what), iteration_(iteration) {}
  std::int64_t iteration() const { return iteration_; }

 private:
  std::int64_t iteration_;
};

StudentConfig student_config_for(const TrainingView& view,
                                 StudentConfig base);

TrainState initial_state(const TrainingView& view, const StudentConfig& scfg,
                         const TrainConfig& cfg);

// Annotation-free distillation. Only the label-free view is visible here.
TrainResult train(const TrainingView& view, const StudentConfig& scfg,
                  const TrainConfig& cfg, const TrainHooks& hooks = {},
                  std::optional<TrainState> resume = std::nullopt);

double teacher_agreement(const StudentParams& params, const Matrix& inputs,
                         const IndexVector& teacher_pred,
                         const IndexVector& indices);

enum class SplitName { kTrain, kEval };
SplitName parse_split(const std::string& name);

struct EvalResult {
  std::int64_t n = 0;
  double teacher_agreement = 0.0;
  std::optional<double> label_accuracy;
};

EvalResult evaluate(const StudentParams& params, const TeacherBundle& bundle,
                    SplitName split, double tau);

struct HeatmapResult {
  IndexVector samples;  // bundle indices, grouped by class
  IndexVector classes;  // class of each selected sample
  Matrix teacher_matrix;
  Matrix student_matrix;
  double mean_offdiag_teacher = 0.0;
  double mean_offdiag_student = 0.0;
};

// Pairwise Pearson matrices of teacher features and projected student
// features on a seeded per-class selection from the eval split, with the
// mean absolute correlation over pairs from different classes.
HeatmapResult heatmap_metrics(const StudentParams& params,
                              const TeacherBundle& bundle,
                              std::int64_t k_classes,
                              std::int64_t n_per_class, std::uint64_t seed);

}  // namespace prg

#endif  // PRG_TRAINER_HPP_
