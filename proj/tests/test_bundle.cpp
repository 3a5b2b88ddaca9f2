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

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include <gtest/gtest.h>

#include "prg/bundle.hpp"
#include "prg/errors.hpp"
#include "prg/io.hpp"
#include "test_util.hpp"

namespace prg {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

SynthParams tiny_params() {
  SynthParams p;
  p.n_classes = 3;
  p.n_prompts = 2;
  p.feature_dim = 4;
  p.input_dim = 6;
  p.n_per_class = 5;
  p.seed = 11;
  return p;
}

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

template <typename E>
std::string error_text(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const E& e) {
    return e.what();
  }
  ADD_FAILURE() << "expected exception not thrown";
  return {};
}

TEST(Bundle, RoundTripIsBitExact) {
  TempDir tmp("rt");
  const TeacherBundle b = synth_bundle(tiny_params());
  save_bundle(b, tmp / "b");
  const TeacherBundle c = load_bundle(tmp / "b");
  EXPECT_EQ(b.manifest(), c.manifest());
  EXPECT_EQ(b.inputs(), c.inputs());
  EXPECT_EQ(b.features(), c.features());
  ASSERT_EQ(b.text_embeddings().size(), c.text_embeddings().size());
  for (std::size_t i = 0; i < b.text_embeddings().size(); ++i) {
    EXPECT_EQ(b.text_embeddings()[i], c.text_embeddings()[i]);
  }
  EXPECT_EQ(b.labels(), c.labels());
}

TEST(Bundle, SavedValuesAreExactFloat32) {
  const TeacherBundle b = synth_bundle(tiny_params());
  const Matrix f32 = b.features().cast<float>().cast<double>();
  EXPECT_EQ(f32, b.features());
}

TEST(Bundle, SaveOverwritesExisting) {
  TempDir tmp("ow");
  save_bundle(synth_bundle(tiny_params()), tmp / "b");
  SynthParams p = tiny_params();
  p.seed = 12;
  const TeacherBundle second = synth_bundle(p);
  save_bundle(second, tmp / "b");
  EXPECT_EQ(load_bundle(tmp / "b").features(), second.features());
  // only the bundle itself remains next to it
  EXPECT_EQ(std::distance(fs::directory_iterator(tmp.path()),
                          fs::directory_iterator()),
            1);
}

TEST(Bundle, TruncatedFeaturesFileNamesTheFile) {
  TempDir tmp("trunc");
  SynthParams p = tiny_params();
  p.n_classes = 2;
  p.n_per_class = 50;
  save_bundle(synth_bundle(p), tmp / "b");
  const fs::path f = tmp / "b" / "features.f32";
  fs::resize_file(f, 99 * 4 * sizeof(float));
  const std::string msg =
      error_text<FormatError>([&] { load_bundle(tmp / "b"); });
  EXPECT_NE(msg.find("features.f32"), std::string::npos) << msg;
}

TEST(Bundle, MissingArrayIsNotFound) {
  TempDir tmp("missing");
  save_bundle(synth_bundle(tiny_params()), tmp / "b");
  fs::remove(tmp / "b" / "inputs.f32");
  const std::string msg =
      error_text<NotFoundError>([&] { load_bundle(tmp / "b"); });
  EXPECT_NE(msg.find("inputs.f32"), std::string::npos) << msg;
  EXPECT_THROW(load_bundle(tmp / "nowhere"), NotFoundError);
}

TEST(Bundle, NonUnitFeatureRowReportsRowIndex) {
  const TeacherBundle b = synth_bundle(tiny_params());
  Matrix f = b.features();
  f.row(3) *= 2.0;
  const std::string msg = error_text<ValidationError>([&] {
    TeacherBundle(b.manifest(), b.inputs(), f, b.text_embeddings(),
                  b.labels());
  });
  EXPECT_NE(msg.find("features"), std::string::npos) << msg;
  EXPECT_NE(msg.find("row 3"), std::string::npos) << msg;
}

TEST(Bundle, NonUnitTextRowRejected) {
  const TeacherBundle b = synth_bundle(tiny_params());
  auto text = b.text_embeddings();
  text[1](2, 0) += 0.01;
  const std::string msg = error_text<ValidationError>([&] {
    TeacherBundle(b.manifest(), b.inputs(), b.features(), text, b.labels());
  });
  EXPECT_NE(msg.find("text_embeddings"), std::string::npos) << msg;
}

TEST(Bundle, ManifestInvariantsNameTheField) {
  const TeacherBundle b = synth_bundle(tiny_params());
  {
    Manifest m = b.manifest();
    m.class_names.pop_back();
    EXPECT_NE(error_text<ValidationError>([&] {
                TeacherBundle(m, b.inputs(), b.features(), b.text_embeddings(),
                              b.labels());
              }).find("class_names"),
              std::string::npos);
  }
  {
    Manifest m = b.manifest();
    m.split.eval.push_back(m.split.train.front());
    EXPECT_NE(error_text<ValidationError>([&] {
                TeacherBundle(m, b.inputs(), b.features(), b.text_embeddings(),
                              b.labels());
              }).find("split"),
              std::string::npos);
  }
  {
    IndexVector labels = b.labels();
    labels[0] = 3;
    EXPECT_NE(error_text<ValidationError>([&] {
                TeacherBundle(b.manifest(), b.inputs(), b.features(),
                              b.text_embeddings(), labels);
              }).find("labels"),
              std::string::npos);
  }
}

TEST(Bundle, EmptyBundleRejected) {
  Manifest m;
  m.n_samples = 0;
  m.input_dim = 2;
  m.feature_dim = 2;
  m.n_classes = 2;
  m.n_prompts = 1;
  m.class_names = {"a", "b"};
  m.prompt_names = {"p"};
  const std::string msg = error_text<ValidationError>([&] {
    TeacherBundle(m, Matrix(0, 2), Matrix(0, 2),
                  {Matrix::Identity(2, 2)}, std::nullopt);
  });
  EXPECT_NE(msg.find("n_samples"), std::string::npos) << msg;
}

TEST(Bundle, UnwritableDestinationLeavesNothing) {
  TempDir tmp("ro");
  // A regular file as parent makes the path uncreatable even for root.
  write_text_file(tmp / "blocker", "x");
  EXPECT_THROW(save_bundle(synth_bundle(tiny_params()), tmp / "blocker" / "b"),
               IoError);
  EXPECT_EQ(std::distance(fs::directory_iterator(tmp.path()),
                          fs::directory_iterator()),
            1);
}

TEST(Bundle, FailedFillLeavesTargetUntouched) {
  TempDir tmp("fill");
  save_bundle(synth_bundle(tiny_params()), tmp / "b");
  const std::string before = file_bytes(tmp / "b" / "features.f32");
  EXPECT_THROW(write_dir_atomically(tmp / "b",
                                    [](const fs::path& d) {
                                      write_text_file(d / "partial", "x");
                                      throw IoError("disk full");
                                    }),
               IoError);
  EXPECT_EQ(file_bytes(tmp / "b" / "features.f32"), before);
  EXPECT_FALSE(fs::exists(tmp / "b" / "partial"));
  EXPECT_EQ(std::distance(fs::directory_iterator(tmp.path()),
                          fs::directory_iterator()),
            1);
}

TEST(Bundle, LabelAccessIsCounted) {
  const TeacherBundle b = synth_bundle(tiny_params());
  EXPECT_EQ(b.label_access_count(), 0u);
  (void)b.labels();
  (void)b.labels();
  EXPECT_EQ(b.label_access_count(), 2u);

  Manifest m = b.manifest();
  m.has_labels = false;
  const TeacherBundle unlabeled(m, b.inputs(), b.features(),
                                b.text_embeddings(), std::nullopt);
  EXPECT_FALSE(unlabeled.has_labels());
  EXPECT_FALSE(unlabeled.manifest().has_labels);
  EXPECT_THROW((void)unlabeled.labels(), StateError);
}

TEST(Bundle, UnlabeledRoundTrip) {
  TempDir tmp("nolab");
  const TeacherBundle b = synth_bundle(tiny_params());
  Manifest m = b.manifest();
  m.has_labels = false;
  const TeacherBundle u(m, b.inputs(), b.features(), b.text_embeddings(),
                        std::nullopt);
  save_bundle(u, tmp / "b");
  EXPECT_FALSE(fs::exists(tmp / "b" / "labels.i64"));
  EXPECT_FALSE(load_bundle(tmp / "b").has_labels());
}

TEST(Synth, CalibrationBundleShape) {
  const TeacherBundle b = synth_bundle(SynthParams{});
  const Manifest& m = b.manifest();
  EXPECT_EQ(m.n_samples, 2000);
  EXPECT_EQ(m.n_classes, 10);
  EXPECT_EQ(m.n_prompts, 4);
  EXPECT_EQ(m.feature_dim, 32);
  EXPECT_EQ(m.input_dim, 64);
  EXPECT_EQ(m.split.train.size(), 1600u);
  EXPECT_EQ(m.split.eval.size(), 400u);
  EXPECT_EQ(m.seed, 7u);
  // stratified: 40 eval samples per class
  const IndexVector& y = b.labels();
  std::vector<int> per_class(10, 0);
  for (const auto i : m.split.eval) ++per_class[y[i]];
  for (int c = 0; c < 10; ++c) EXPECT_EQ(per_class[c], 40);
}

TEST(Synth, SameSeedSameBytes) {
  TempDir tmp("det");
  save_bundle(synth_bundle(tiny_params()), tmp / "a");
  save_bundle(synth_bundle(tiny_params()), tmp / "b");
  for (const char* f : {"manifest.json", "inputs.f32", "features.f32",
                        "text_embeddings.f32", "labels.i64"}) {
    EXPECT_EQ(file_bytes(tmp / "a" / f), file_bytes(tmp / "b" / f)) << f;
  }
  SynthParams other = tiny_params();
  other.seed = 12;
  save_bundle(synth_bundle(other), tmp / "c");
  EXPECT_NE(file_bytes(tmp / "a" / "features.f32"),
            file_bytes(tmp / "c" / "features.f32"));
}

TEST(Synth, ParameterBounds) {
  const auto rejects = [](auto mutate) {
    SynthParams p = tiny_params();
    mutate(p);
    EXPECT_THROW(synth_bundle(p), ValidationError);
  };
  rejects([](SynthParams& p) { p.noise = 0.0; });
  rejects([](SynthParams& p) { p.noise = 1.0; });
  rejects([](SynthParams& p) { p.n_classes = 1; });
  rejects([](SynthParams& p) { p.n_prompts = 0; });
  rejects([](SynthParams& p) { p.feature_dim = 3; });
  rejects([](SynthParams& p) { p.input_dim = 3; });
  rejects([](SynthParams& p) { p.n_per_class = 0; });
}

// Averaged-prompt zero-shot head over every sample, evaluated with plain
// loops.
std::int64_t plain_zero_shot_correct(const TeacherBundle& b, double tau) {
  const auto& text = b.text_embeddings();
  const Eigen::Index c = b.n_classes();
  const Eigen::Index d = b.feature_dim();
  std::int64_t correct = 0;
  const IndexVector& y = b.labels();
  for (Eigen::Index n = 0; n < b.n_samples(); ++n) {
    Eigen::Index best = 0;
    double best_v = -1e300;
    for (Eigen::Index j = 0; j < c; ++j) {
      double v = 0;
      for (Eigen::Index k = 0; k < d; ++k) {
        double avg = 0;
        for (const auto& t : text) avg += t(j, k);
        v += b.features()(n, k) * avg / static_cast<double>(text.size());
      }
      v *= tau;
      if (v > best_v) {
        best_v = v;
        best = j;
      }
    }
    correct += (best == y[n]) ? 1 : 0;
  }
  return correct;
}

TEST(Synth, FrozenZeroShotAccuracy) {
  const TeacherBundle b = synth_bundle(SynthParams{});
  EXPECT_EQ(plain_zero_shot_correct(b, 100.0), 1787);  // 0.8935
}

// The generator contract calls for a strong teacher at the calibration
// settings. With per-dimension noise 0.3 in 32 dimensions the Bayes rate
// with exact class directions is about 0.93, so this is expected to fail.
TEST(Synth, ZeroShotAccuracyAtLeast95Percent) {
  const TeacherBundle b = synth_bundle(SynthParams{});
  const double acc = static_cast<double>(plain_zero_shot_correct(b, 100.0)) /
                     static_cast<double>(b.n_samples());
  EXPECT_GE(acc, 0.95);
}

}  // namespace
}  // namespace prg
