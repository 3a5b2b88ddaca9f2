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

#include "prg/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "prg/bundle.hpp"
#include "prg/checkpoint.hpp"
#include "prg/config.hpp"
#include "prg/gradcheck_suite.hpp"
#include "prg/io.hpp"
#include "prg/trainer.hpp"

namespace prg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json epoch_json(const EpochRecord& r) {
  return json{{"epoch", r.epoch},
              {"lr", r.lr},
              {"loss_ce", r.loss_ce},
              {"loss_node", r.loss_node},
              {"loss_edge", r.loss_edge},
              {"loss_total", r.loss_total},
              {"teacher_agreement", r.teacher_agreement},
              {"label_accuracy", r.label_accuracy ? json(*r.label_accuracy)
                                                  : json(nullptr)},
              {"seconds", r.seconds}};
}

void write_csv(const fs::path& file, const Matrix& m) {
  std::ostringstream os;
  os << std::setprecision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) os << ',';
      os << m(i, j);
    }
    os << '\n';
  }
  write_text_file(file, os.str());
}

struct SynthArgs {
  std::string out;
  SynthParams params;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  const TeacherBundle b = synth_bundle(a.params);
  save_bundle(b, a.out);
  const Manifest& m = b.manifest();
  out << json{{"bundle", a.out},
              {"n_samples", m.n_samples},
              {"n_classes", m.n_classes},
              {"n_prompts", m.n_prompts},
              {"feature_dim", m.feature_dim},
              {"input_dim", m.input_dim},
              {"train", m.split.train.size()},
              {"eval", m.split.eval.size()}}
             .dump()
      << "\n";
  return kExitOk;
}

struct TrainArgs {
  std::string config;
  std::vector<std::string> overrides;
  std::string bundle, out, mode, resume;
  std::optional<std::int64_t> epochs, batch_size;
  std::optional<std::uint64_t> seed;
  std::optional<double> lambda_node, lambda_edge;
  bool no_timing = false;
  bool no_label_accuracy = false;
};

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  if (!a.config.empty()) cfg = load_run_config(a.config);
  if (!a.bundle.empty()) cfg.bundle = a.bundle;
  if (!a.out.empty()) cfg.out = a.out;
  if (!a.resume.empty()) cfg.resume = a.resume;
  if (!a.mode.empty()) cfg.train.mode = parse_mode(a.mode);
  if (a.epochs) cfg.train.epochs = *a.epochs;
  if (a.batch_size) cfg.train.batch_size = *a.batch_size;
  if (a.seed) cfg.train.seed = *a.seed;
  if (a.lambda_node) cfg.train.lambda_node = *a.lambda_node;
  if (a.lambda_edge) cfg.train.lambda_edge = *a.lambda_edge;
  for (const auto& o : a.overrides) apply_override(cfg, o);
  if (cfg.bundle.empty()) throw ValidationError("train: --bundle is required");
  if (cfg.out.empty()) throw ValidationError("train: --out is required");

  const TeacherBundle bundle = load_bundle(cfg.bundle);
  const TrainingView view = bundle.training_view();
  const StudentConfig scfg =
      student_config_for(view, cfg.resolved_student());
  cfg.student = scfg;
  cfg.init_seed = scfg.init_seed;
  cfg.train.alpha = cfg.train.resolve_alpha(
      static_cast<std::int64_t>(view.train_indices().size()));
  cfg.train.validate();

  const fs::path out_dir(cfg.out);
  fs::create_directories(out_dir);
  write_text_file(out_dir / "resolved_config.json",
                  run_config_to_json(cfg).dump(2) + "\n");

  std::optional<TrainState> resume;
  if (!cfg.resume.empty()) {
    Checkpoint ck = load_checkpoint(cfg.resume);
    if (!(ck.student == scfg)) {
      throw ValidationError("resume: checkpoint student config differs");
    }
    resume = std::move(ck.state);
  }

  const fs::path metrics = out_dir / "metrics.jsonl";
  std::ofstream metrics_out(
      metrics, resume ? std::ios::app : std::ios::trunc);
  if (!metrics_out) throw IoError(metrics.string() + ": cannot open");

  double best = -1.0;
  if (resume && fs::exists(out_dir / "best_epoch.json")) {
    best = json::parse(read_text_file(out_dir / "best_epoch.json"))
               .at("teacher_agreement")
               .get<double>();
  }
  TrainHooks hooks;
  hooks.record_time = !a.no_timing;
  const bool report_labels = bundle.has_labels() && !a.no_label_accuracy;
  hooks.on_epoch = [&](EpochRecord& rec, const TrainState& st) {
    if (report_labels) {
      rec.label_accuracy =
          evaluate(st.params, bundle, SplitName::kEval, cfg.train.tau)
              .label_accuracy;
    }
    metrics_out << epoch_json(rec).dump() << "\n";
    metrics_out.flush();
    const Checkpoint ck{scfg, cfg.train, st};
    save_checkpoint(out_dir / "checkpoint", ck);
    if (rec.teacher_agreement > best) {
      best = rec.teacher_agreement;
      save_checkpoint(out_dir / "best", ck);
      write_text_file(out_dir / "best_epoch.json",
                      json{{"epoch", rec.epoch},
                           {"teacher_agreement", rec.teacher_agreement}}
                              .dump() +
                          "\n");
    }
  };

  TrainResult result;
  try {
    result = train(view, scfg, cfg.train, hooks, std::move(resume));
  } catch (const NumericAbort& e) {
    write_text_file(out_dir / "abort.json",
                    json{{"iteration", e.iteration()}, {"error", e.what()}}
                            .dump() +
                        "\n");
    err << "numeric abort: " << e.what() << "\n";
    return kExitNumeric;
  }
  json summary{{"out", cfg.out}, {"epochs_run", result.history.epochs.size()}};
  if (!result.history.epochs.empty()) {
    summary["final"] = epoch_json(result.history.epochs.back());
    summary["best"] =
        epoch_json(result.history.epochs[*result.history.best_epoch()]);
  }
  out << summary.dump() << "\n";
  return kExitOk;
}

struct EvalArgs {
  std::string bundle, checkpoint, split = "eval";
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const SplitName split = parse_split(a.split);
  const TeacherBundle bundle = load_bundle(a.bundle);
  const Checkpoint ck = load_checkpoint(a.checkpoint);
  student_config_for(bundle.training_view(), ck.student);
  const EvalResult r = evaluate(ck.state.params, bundle, split, ck.train.tau);
  json j{{"split", a.split}, {"n", r.n},
         {"teacher_agreement", r.teacher_agreement}};
  if (r.label_accuracy) j["label_accuracy"] = *r.label_accuracy;
  out << j.dump() << "\n";
  return kExitOk;
}

struct GradcheckArgs {
  GradcheckSuiteOptions opts;
  double threshold = 1e-5;
};

int cmd_gradcheck(const GradcheckArgs& a, std::ostream& out,
                  std::ostream& err) {
  const auto entries = run_gradcheck_suite(a.opts);
  json losses = json::object();
  std::string failed;
  for (const auto& e : entries) {
    losses[e.name] = e.max_rel_error;
    if (!(e.max_rel_error < a.threshold) && failed.empty()) failed = e.name;
  }
  out << json{{"h", a.opts.h},
              {"seeds", a.opts.n_seeds},
              {"threshold", a.threshold},
              {"max_rel_error", losses},
              {"passed", failed.empty()}}
             .dump()
      << "\n";
  if (!failed.empty()) {
    err << "gradcheck failed: " << failed << " exceeds " << a.threshold
        << "\n";
    return kExitGradcheck;
  }
  return kExitOk;
}

struct HeatmapArgs {
  std::string bundle, checkpoint, out;
  std::int64_t classes = 5;
  std::int64_t per_class = 10;
  std::uint64_t seed = 0;
};

int cmd_heatmap(const HeatmapArgs& a, std::ostream& out) {
  const TeacherBundle bundle = load_bundle(a.bundle);
  const Checkpoint ck = load_checkpoint(a.checkpoint);
  student_config_for(bundle.training_view(), ck.student);
  const HeatmapResult h = heatmap_metrics(ck.state.params, bundle, a.classes,
                                          a.per_class, a.seed);
  fs::create_directories(a.out);
  write_csv(fs::path(a.out) / "teacher.csv", h.teacher_matrix);
  write_csv(fs::path(a.out) / "student.csv", h.student_matrix);
  const json summary{{"samples", h.samples},
                     {"classes", h.classes},
                     {"mean_offdiag_teacher", h.mean_offdiag_teacher},
                     {"mean_offdiag_student", h.mean_offdiag_student}};
  write_text_file(fs::path(a.out) / "summary.json", summary.dump(2) + "\n");
  out << json{{"mean_offdiag_teacher", h.mean_offdiag_teacher},
              {"mean_offdiag_student", h.mean_offdiag_student}}
             .dump()
      << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Annotation-free distillation with proxy relational graphs",
               "prgkd"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* sc = app.add_subcommand("synth", "Generate a synthetic teacher bundle");
  sc->add_option("--out", synth.out, "Bundle directory")->required();
  sc->add_option("--classes", synth.params.n_classes);
  sc->add_option("--prompts", synth.params.n_prompts);
  sc->add_option("--dim", synth.params.feature_dim);
  sc->add_option("--input-dim", synth.params.input_dim);
  sc->add_option("--per-class", synth.params.n_per_class);
  sc->add_option("--noise", synth.params.noise);
  sc->add_option("--seed", synth.params.seed);

  TrainArgs tr;
  auto* tc = app.add_subcommand("train", "Distill a student from a bundle");
  tc->add_option("--bundle", tr.bundle);
  tc->add_option("--config", tr.config, "Flat JSON run config");
  tc->add_option("--out", tr.out);
  tc->add_option("--mode", tr.mode)
      ->check(CLI::IsMember({"prg", "ce_only", "kd_baseline",
                             "prg_plain_logits", "prg_feature_nodes"}));
  tc->add_option("--resume", tr.resume, "Checkpoint directory");
  tc->add_option("--epochs", tr.epochs);
  tc->add_option("--batch-size", tr.batch_size);
  tc->add_option("--seed", tr.seed);
  tc->add_option("--lambda-node", tr.lambda_node);
  tc->add_option("--lambda-edge", tr.lambda_edge);
  tc->add_option("--set", tr.overrides, "key=value config override");
  tc->add_flag("--no-timing", tr.no_timing,
               "Write seconds=0 so metrics are bit-reproducible");
  tc->add_flag("--no-label-accuracy", tr.no_label_accuracy);

  EvalArgs ev;
  auto* ec = app.add_subcommand("eval", "Evaluate a checkpoint");
  ec->add_option("--bundle", ev.bundle)->required();
  ec->add_option("--checkpoint", ev.checkpoint)->required();
  ec->add_option("--split", ev.split)
      ->check(CLI::IsMember({"eval", "train"}));

  GradcheckArgs gc;
  auto* gcc = app.add_subcommand("gradcheck",
                                 "Finite-difference check of all objectives");
  gcc->set_help_flag("--help", "Print this help message and exit");
  gcc->add_option("--seed", gc.opts.seed);
  gcc->add_option("--seeds", gc.opts.n_seeds);
  gcc->add_option("--h", gc.opts.h);
  gcc->add_option("--threshold", gc.threshold);
  gcc->add_option("--inject-fault", gc.opts.inject_fault,
                  "Flip the gradient sign of the named loss");

  HeatmapArgs hm;
  auto* hc = app.add_subcommand("heatmap",
                                "Inter-sample correlation matrices");
  hc->add_option("--bundle", hm.bundle)->required();
  hc->add_option("--checkpoint", hm.checkpoint)->required();
  hc->add_option("--classes", hm.classes);
  hc->add_option("--per-class", hm.per_class);
  hc->add_option("--seed", hm.seed);
  hc->add_option("--out", hm.out)->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  try {
    if (sc->parsed()) return cmd_synth(synth, out);
    if (tc->parsed()) return cmd_train(tr, out, err);
    if (ec->parsed()) return cmd_eval(ev, out);
    if (gcc->parsed()) return cmd_gradcheck(gc, out, err);
    if (hc->parsed()) return cmd_heatmap(hm, out);
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace prg
