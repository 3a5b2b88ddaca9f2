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

#include "prg/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <random>

#include "prg/numerics/ops.hpp"
#include "prg/prompt_weighting.hpp"

namespace prg {

TrainMode parse_mode(const std::string& name) {
  if (name == "prg") return TrainMode::kPrg;
  if (name == "ce_only") return TrainMode::kCeOnly;
  if (name == "kd_baseline") return TrainMode::kKdBaseline;
  if (name == "prg_plain_logits") return TrainMode::kPrgPlainLogits;
  if (name == "prg_feature_nodes") return TrainMode::kPrgFeatureNodes;
  throw ValidationError("unknown mode '" + name + "'");
}

std::string to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::kPrg: return "prg";
    case TrainMode::kCeOnly: return "ce_only";
    case TrainMode::kKdBaseline: return "kd_baseline";
    case TrainMode::kPrgPlainLogits: return "prg_plain_logits";
    case TrainMode::kPrgFeatureNodes: return "prg_feature_nodes";
  }
  return "prg";
}

SplitName parse_split(const std::string& name) {
  if (name == "train") return SplitName::kTrain;
  if (name == "eval") return SplitName::kEval;
  throw ValidationError("unknown split '" + name + "' (train|eval)");
}

double TrainConfig::resolve_alpha(std::int64_t n_train) const {
  double a = 0.0;
  if (alpha) {
    a = *alpha;
  } else {
    if (n_train < 1) throw ValidationError("alpha: empty training split");
    a = static_cast<double>(batch_size) / static_cast<double>(n_train);
  }
  if (!(a > 0.0 && a < 1.0)) {
    throw ValidationError("alpha: must lie in (0, 1), resolved to " +
                          std::to_string(a));
  }
  return a;
}

void TrainConfig::validate() const {
  if (batch_size < 2) throw ValidationError("batch_size: must be >= 2");
  if (epochs < 0) throw ValidationError("epochs: must be >= 0");
  if (!(lr_max >= 0.0) || !(lr_min >= 0.0) || lr_min > lr_max) {
    throw ValidationError("lr_max/lr_min: need 0 <= lr_min <= lr_max");
  }
  if (t0 < 1 || t_mult < 1) {
    throw ValidationError("t0/t_mult: must be >= 1");
  }
  if (!(weight_decay >= 0.0)) {
    throw ValidationError("weight_decay: must be >= 0");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ValidationError("beta1/beta2: must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw ValidationError("adam_eps: must be > 0");
  if (!(lambda_node >= 0.0) || !(lambda_edge >= 0.0)) {
    throw ValidationError("lambda_node/lambda_edge: must be >= 0");
  }
  if (!(tau > 0.0)) throw ValidationError("tau: must be > 0");
  if (!(kd_temperature > 0.0)) {
    throw ValidationError("kd_temperature: must be > 0");
  }
  if (alpha && !(*alpha > 0.0 && *alpha < 1.0)) {
    throw ValidationError("alpha: must lie in (0, 1)");
  }
}

std::optional<std::size_t> TrainHistory::best_epoch() const {
  if (epochs.empty()) return std::nullopt;
  std::size_t best = 0;
  for (std::size_t i = 1; i < epochs.size(); ++i) {
    if (epochs[i].teacher_agreement > epochs[best].teacher_agreement) {
      best = i;
    }
  }
  return best;
}

namespace {

bool uses_graph(TrainMode m) {
  return m == TrainMode::kPrg || m == TrainMode::kPrgPlainLogits ||
         m == TrainMode::kPrgFeatureNodes;
}

std::int64_t node_dim(const TrainingView& view, TrainMode mode) {
  const auto& m = view.manifest();
  return mode == TrainMode::kPrgFeatureNodes ? m.feature_dim
                                             : m.feature_dim + m.n_classes;
}

IndexVector argmax_rows(const Matrix& logits) {
  return teacher_predictions(logits);
}

IndexVector epoch_order(const IndexVector& train, std::uint64_t seed,
                        std::int64_t epoch) {
  IndexVector order = train;
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch)};
  std::mt19937_64 rng(seq);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

IndexVector gather(const IndexVector& v, const IndexVector& idx) {
  IndexVector out;
  out.reserve(idx.size());
  for (const auto i : idx) out.push_back(v[static_cast<std::size_t>(i)]);
  return out;
}

}  // namespace

IndexVector reference_predictions(const TrainingView& view, double tau) {
  return teacher_predictions(
      prompt_weighted_logits(view.features(), view.text_embeddings(), tau)
          .logits);
}

TeacherCache compute_teacher(const TrainingView& view,
                             const TrainConfig& cfg) {
  TeacherCache tc;
  if (cfg.mode == TrainMode::kPrgPlainLogits) {
    tc.logits = plain_zero_shot_logits(view.features(),
                                       view.text_embeddings(), cfg.tau);
  } else {
    tc.logits = prompt_weighted_logits(view.features(),
                                       view.text_embeddings(), cfg.tau)
                    .logits;
  }
  tc.soft_labels = soft_labels(tc.logits);
  tc.predictions = teacher_predictions(tc.logits);
  const NodeOptions opts{cfg.standardize_nodes};
  if (cfg.mode == TrainMode::kPrgFeatureNodes) {
    tc.nodes = cfg.standardize_nodes ? standardize_rows(view.features())
                                     : view.features();
  } else {
    tc.nodes =
        build_nodes(view.features(), tc.logits, Side::kTeacher, opts).nodes;
  }
  return tc;
}

StudentConfig student_config_for(const TrainingView& view,
                                 StudentConfig base) {
  const auto& m = view.manifest();
  auto fill = [](std::int64_t& field, std::int64_t value, const char* name) {
    if (field != 0 && field != value) {
      throw ValidationError(std::string("student config: ") + name + " " +
                            std::to_string(field) + " != bundle " +
                            std::to_string(value));
    }
    field = value;
  };
  fill(base.input_dim, m.input_dim, "input_dim");
  fill(base.n_classes, m.n_classes, "n_classes");
  fill(base.teacher_dim, m.feature_dim, "teacher_dim");
  base.validate();
  return base;
}

TrainState initial_state(const TrainingView& view, const StudentConfig& scfg,
                         const TrainConfig& cfg) {
  cfg.validate();
  const StudentConfig resolved = student_config_for(view, scfg);
  const std::int64_t n_train =
      static_cast<std::int64_t>(view.train_indices().size());
  const double alpha = cfg.resolve_alpha(n_train);
  const std::int64_t dim = node_dim(view, cfg.mode);
  TrainState st;
  st.params = init_student(resolved);
  st.proxy_teacher = init_proxy_bank(view.manifest().n_classes, dim, alpha,
                                     cfg.teacher_proxy_seed());
  st.proxy_student = init_proxy_bank(view.manifest().n_classes, dim, alpha,
                                     cfg.student_proxy_seed());
  return st;
}

double teacher_agreement(const StudentParams& params, const Matrix& inputs,
                         const IndexVector& teacher_pred,
                         const IndexVector& indices) {
  if (indices.empty()) throw ValidationError("teacher_agreement: no samples");
  const StudentOutputs out = forward(params, gather_rows(inputs, indices));
  const IndexVector student_pred = argmax_rows(out.logits);
  std::int64_t hits = 0;
  for (std::size_t r = 0; r < indices.size(); ++r) {
    hits += student_pred[r] ==
            teacher_pred[static_cast<std::size_t>(indices[r])];
  }
  return static_cast<double>(hits) / static_cast<double>(indices.size());
}

TrainResult train(const TrainingView& view, const StudentConfig& scfg,
                  const TrainConfig& cfg, const TrainHooks& hooks,
                  std::optional<TrainState> resume) {
  cfg.validate();
  const StudentConfig resolved = student_config_for(view, scfg);
  const IndexVector& train_idx = view.train_indices();
  const auto b = cfg.batch_size;
  const auto n_batches = static_cast<std::int64_t>(train_idx.size()) / b;
  if (n_batches < 1) {
    throw ValidationError("train: training split (" +
                          std::to_string(train_idx.size()) +
                          " samples) smaller than one batch of " +
                          std::to_string(b));
  }

  TrainResult result;
  result.state = resume ? std::move(*resume)
                        : initial_state(view, resolved, cfg);
  TrainState& st = result.state;
  if (resume) {
    const std::int64_t dim = node_dim(view, cfg.mode);
    if (st.proxy_teacher.dim() != dim || st.proxy_student.dim() != dim) {
      throw ValidationError("resume: proxy dim does not match mode");
    }
  }

  const TeacherCache teacher = compute_teacher(view, cfg);
  const IndexVector reference = reference_predictions(view, cfg.tau);
  const IndexVector& agreement_idx =
      view.eval_indices().empty() ? train_idx : view.eval_indices();
  const LossWeights weights = cfg.loss_weights();
  const AdamWConfig adamw = cfg.adamw();
  const NodeOptions node_opts{cfg.standardize_nodes};
  const bool graph = uses_graph(cfg.mode);

  for (std::int64_t epoch = st.epochs_completed; epoch < cfg.epochs;
       ++epoch) {
    const auto t_start = std::chrono::steady_clock::now();
    const double lr =
        cosine_restart_lr(static_cast<double>(epoch), cfg.schedule());
    const IndexVector order = epoch_order(train_idx, cfg.seed, epoch);
    EpochRecord er;
    er.epoch = epoch + 1;
    er.lr = lr;

    for (std::int64_t it = 0; it < n_batches; ++it) {
      const IndexVector batch(order.begin() + it * b,
                              order.begin() + (it + 1) * b);
      const Matrix xb = gather_rows(view.inputs(), batch);
      const Matrix tnodes = gather_rows(teacher.nodes, batch);
      const IndexVector assign = gather(teacher.predictions, batch);

      IterationRecord rec;
      rec.epoch = epoch + 1;
      rec.iteration = st.iterations_completed;

      Tape tape;
      const StudentGraph sg = forward(tape, st.params, xb);
      const Var ce = soft_cross_entropy(
          sg.logits, gather_rows(teacher.soft_labels, batch));
      Var total = ce;
      Var snodes;
      if (cfg.mode == TrainMode::kKdBaseline) {
        const Var kd = kd_baseline_loss(
            sg.logits, gather_rows(teacher.logits, batch), cfg.kd_temperature);
        rec.loss_kd = kd.scalar();
        total = total_loss(ce, kd);
      } else if (graph) {
        if (cfg.mode == TrainMode::kPrgFeatureNodes) {
          snodes = cfg.standardize_nodes ? ad::standardize_rows(sg.projected)
                                         : sg.projected;
        } else {
          snodes = build_nodes(sg.projected, sg.logits, node_opts);
        }
        const Matrix et = edge_matrix(tnodes, st.proxy_teacher);
        const Var es = edge_matrix(snodes, st.proxy_student);
        const Var corr = node_cross_correlation(tnodes, snodes);
        const Var node = node_alignment_loss(corr, weights.reduction);
        const Var edge = edge_alignment_loss(et, es, weights.reduction);
        rec.loss_node = node.scalar();
        rec.loss_edge = edge.scalar();
        total = total_loss(ce, prg_loss(node, edge, weights));
      }
      rec.loss_ce = ce.scalar();
      rec.loss_total = total.scalar();
      if (!std::isfinite(rec.loss_total)) {
        throw NumericAbort("non-finite loss at iteration " +
                               std::to_string(rec.iteration),
                           rec.iteration);
      }
      tape.backward(total);
      const StudentParams grads = parameter_gradients(sg, st.params);
      if (!grads.all_finite()) {
        throw NumericAbort("non-finite gradient at iteration " +
                               std::to_string(rec.iteration),
                           rec.iteration);
      }
      adamw_step(st.params, grads, st.optimizer, lr, adamw);
      if (!st.params.all_finite()) {
        throw NumericAbort("non-finite parameter after iteration " +
                               std::to_string(rec.iteration),
                           rec.iteration);
      }
      if (graph) {
        st.proxy_teacher = update_proxies(std::move(st.proxy_teacher),
                                          tnodes, assign);
        st.proxy_student = update_proxies(std::move(st.proxy_student),
                                          snodes.value(), assign);
      }
      ++st.iterations_completed;
      if (hooks.on_iteration) {
        const Matrix empty;
        hooks.on_iteration(IterationTrace{rec, batch, tnodes,
                                          graph ? snodes.value() : empty,
                                          assign});
      }
      er.loss_ce += rec.loss_ce;
      er.loss_node += rec.loss_node;
      er.loss_edge += rec.loss_edge;
      er.loss_total += rec.loss_total;
      result.history.iterations.push_back(rec);
    }
    const double nb = static_cast<double>(n_batches);
    er.loss_ce /= nb;
    er.loss_node /= nb;
    er.loss_edge /= nb;
    er.loss_total /= nb;
    er.teacher_agreement = teacher_agreement(st.params, view.inputs(),
                                             reference, agreement_idx);
    st.epochs_completed = epoch + 1;
    if (hooks.record_time) {
      er.seconds = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - t_start)
                       .count();
    }
    if (hooks.on_epoch) hooks.on_epoch(er, st);
    result.history.epochs.push_back(er);
  }
  return result;
}

EvalResult evaluate(const StudentParams& params, const TeacherBundle& bundle,
                    SplitName split, double tau) {
  const Split& s = bundle.manifest().split;
  const IndexVector& idx = split == SplitName::kTrain ? s.train : s.eval;
  if (idx.empty()) throw ValidationError("evaluate: split is empty");
  const Matrix feats = gather_rows(bundle.features(), idx);
  const IndexVector teacher = teacher_predictions(
      prompt_weighted_logits(feats, bundle.text_embeddings(), tau).logits);
  const StudentOutputs out = forward(params, gather_rows(bundle.inputs(), idx));
  const IndexVector student = argmax_rows(out.logits);
  EvalResult r;
  r.n = static_cast<std::int64_t>(idx.size());
  std::int64_t agree = 0;
  for (std::size_t i = 0; i < idx.size(); ++i) agree += student[i] == teacher[i];
  r.teacher_agreement = static_cast<double>(agree) / static_cast<double>(r.n);
  if (bundle.has_labels()) {
    const IndexVector& labels = bundle.labels();
    std::int64_t hits = 0;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      hits += student[i] == labels[static_cast<std::size_t>(idx[i])];
    }
    r.label_accuracy = static_cast<double>(hits) / static_cast<double>(r.n);
  }
  return r;
}

HeatmapResult heatmap_metrics(const StudentParams& params,
                              const TeacherBundle& bundle,
                              std::int64_t k_classes,
                              std::int64_t n_per_class, std::uint64_t seed) {
  if (!bundle.has_labels()) {
    throw ValidationError("heatmap: bundle has no labels to select classes");
  }
  const std::int64_t c = bundle.n_classes();
  if (k_classes < 2 || k_classes > c) {
    throw ValidationError("heatmap: classes must lie in [2, " +
                          std::to_string(c) + "]");
  }
  if (n_per_class < 1) throw ValidationError("heatmap: per-class must be >= 1");
  const IndexVector& labels = bundle.labels();
  std::map<std::int64_t, IndexVector> by_class;
  for (const auto i : bundle.manifest().split.eval) {
    by_class[labels[static_cast<std::size_t>(i)]].push_back(i);
  }
  std::mt19937_64 rng(seed);
  IndexVector classes(static_cast<std::size_t>(c));
  for (std::int64_t j = 0; j < c; ++j) classes[static_cast<std::size_t>(j)] = j;
  std::shuffle(classes.begin(), classes.end(), rng);
  classes.resize(static_cast<std::size_t>(k_classes));
  std::sort(classes.begin(), classes.end());

  HeatmapResult h;
  for (const auto cls : classes) {
    IndexVector members = by_class[cls];
    if (static_cast<std::int64_t>(members.size()) < n_per_class) {
      throw ValidationError("heatmap: class " + std::to_string(cls) +
                            " has " + std::to_string(members.size()) +
                            " eval samples, need " +
                            std::to_string(n_per_class));
    }
    std::shuffle(members.begin(), members.end(), rng);
    members.resize(static_cast<std::size_t>(n_per_class));
    std::sort(members.begin(), members.end());
    for (const auto i : members) {
      h.samples.push_back(i);
      h.classes.push_back(cls);
    }
  }
  const Matrix feats = gather_rows(bundle.features(), h.samples);
  const StudentOutputs out =
      forward(params, gather_rows(bundle.inputs(), h.samples));
  h.teacher_matrix = pcc_matrix(feats, feats);
  h.student_matrix = pcc_matrix(out.projected, out.projected);
  double st = 0.0, ss = 0.0;
  std::int64_t pairs = 0;
  for (std::size_t i = 0; i < h.samples.size(); ++i) {
    for (std::size_t j = 0; j < h.samples.size(); ++j) {
      if (h.classes[i] == h.classes[j]) continue;
      st += std::abs(h.teacher_matrix(i, j));
      ss += std::abs(h.student_matrix(i, j));
      ++pairs;
    }
  }
  h.mean_offdiag_teacher = st / static_cast<double>(pairs);
  h.mean_offdiag_student = ss / static_cast<double>(pairs);
  return h;
}

}  // namespace prg
