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

#include "prg/checkpoint.hpp"

#include "json.hpp"
#include "prg/config.hpp"
#include "prg/io.hpp"

namespace prg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

Matrix flatten(const std::vector<const Matrix*>& tensors) {
  Eigen::Index total = 0;
  for (const auto* t : tensors) total += t->size();
  Matrix flat(1, total);
  Eigen::Index off = 0;
  for (const auto* t : tensors) {
    std::copy(t->data(), t->data() + t->size(), flat.data() + off);
    off += t->size();
  }
  return flat;
}

void unflatten(const Matrix& flat, const std::vector<Matrix*>& tensors) {
  Eigen::Index off = 0;
  for (auto* t : tensors) {
    std::copy(flat.data() + off, flat.data() + off + t->size(), t->data());
    off += t->size();
  }
}

json bank_meta(const ProxyBank& b) {
  return json{{"alpha", b.alpha},
              {"update_count", b.update_count},
              {"init_seed", b.init_seed}};
}

ProxyBank load_bank(const fs::path& file, const json& meta, std::int64_t rows,
                    std::int64_t cols) {
  ProxyBank b;
  b.proxies = read_f64_matrix(file, rows, cols);
  b.alpha = meta.at("alpha").get<double>();
  b.update_count = meta.at("update_count").get<std::int64_t>();
  b.init_seed = meta.at("init_seed").get<std::uint64_t>();
  return b;
}

json parse_json_file(const fs::path& file) {
  if (!fs::exists(file)) {
    throw NotFoundError("checkpoint: " + file.string() + " not found");
  }
  const json j = json::parse(read_text_file(file), nullptr, false);
  if (j.is_discarded()) throw FormatError(file.string() + ": invalid JSON");
  return j;
}

}  // namespace

void save_checkpoint(const fs::path& dir, const Checkpoint& ck) {
  write_dir_atomically(dir, [&ck](const fs::path& tmp) {
    const TrainState& st = ck.state;
    json index = json::array();
    std::vector<const Matrix*> tensors;
    Eigen::Index off = 0;
    st.params.for_each(
        [&](const std::string& name, const Matrix& m, bool is_bias) {
          index.push_back({{"name", name},
                           {"rows", m.rows()},
                           {"cols", m.cols()},
                           {"offset", off},
                           {"bias", is_bias}});
          off += m.size();
          tensors.push_back(&m);
        });
    write_f64_matrix(tmp / "params.f64", flatten(tensors));
    write_text_file(tmp / "params.json",
                    json{{"format_version", kCheckpointFormatVersion},
                         {"dtype", "float64"},
                         {"student_config", student_config_to_json(ck.student)},
                         {"tensors", index}}
                            .dump(2) +
                        "\n");
    write_f64_matrix(tmp / "proxy_t.f64", st.proxy_teacher.proxies);
    write_f64_matrix(tmp / "proxy_s.f64", st.proxy_student.proxies);
    std::vector<const Matrix*> moments;
    for (const auto& m : st.optimizer.first_moment) moments.push_back(&m);
    for (const auto& m : st.optimizer.second_moment) moments.push_back(&m);
    write_f64_matrix(tmp / "optimizer.f64", flatten(moments));
    const json resume{
        {"format_version", kCheckpointFormatVersion},
        {"epochs_completed", st.epochs_completed},
        {"iterations_completed", st.iterations_completed},
        {"optimizer_step", st.optimizer.step},
        {"proxy",
         {{"n_classes", st.proxy_teacher.n_classes()},
          {"dim", st.proxy_teacher.dim()},
          {"teacher", bank_meta(st.proxy_teacher)},
          {"student", bank_meta(st.proxy_student)}}},
        {"train_config", train_config_to_json(ck.train)}};
    write_text_file(tmp / "resume.json", resume.dump(2) + "\n");
  });
}

Checkpoint load_checkpoint(const fs::path& dir) {
  const json pj = parse_json_file(dir / "params.json");
  const json rj = parse_json_file(dir / "resume.json");
  Checkpoint ck;
  try {
    if (pj.at("format_version").get<int>() != kCheckpointFormatVersion ||
        rj.at("format_version").get<int>() != kCheckpointFormatVersion) {
      throw FormatError("checkpoint: unsupported format_version");
    }
    ck.student = student_config_from_json(pj.at("student_config"));
    ck.train = train_config_from_json(rj.at("train_config"));
    TrainState& st = ck.state;
    st.params = init_student(ck.student);
    std::vector<Matrix*> tensors;
    std::vector<std::string> names;
    Eigen::Index total = 0;
    st.params.for_each([&](const std::string& name, Matrix& m, bool) {
      tensors.push_back(&m);
      names.push_back(name);
      total += m.size();
    });
    const json& index = pj.at("tensors");
    if (index.size() != tensors.size()) {
      throw FormatError("params.json: tensor count does not match config");
    }
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      if (index[i].at("name").get<std::string>() != names[i] ||
          index[i].at("rows").get<Eigen::Index>() != tensors[i]->rows() ||
          index[i].at("cols").get<Eigen::Index>() != tensors[i]->cols()) {
        throw FormatError("params.json: tensor " + names[i] +
                          " does not match the student config");
      }
    }
    unflatten(read_f64_matrix(dir / "params.f64", 1, total), tensors);

    const json& proxy = rj.at("proxy");
    const auto c = proxy.at("n_classes").get<std::int64_t>();
    const auto dim = proxy.at("dim").get<std::int64_t>();
    st.proxy_teacher = load_bank(dir / "proxy_t.f64", proxy.at("teacher"), c, dim);
    st.proxy_student = load_bank(dir / "proxy_s.f64", proxy.at("student"), c, dim);

    st.optimizer.step = rj.at("optimizer_step").get<std::int64_t>();
    if (st.optimizer.step > 0) {
      std::vector<Matrix*> moments;
      for (auto* t : tensors) {
        st.optimizer.first_moment.push_back(Matrix::Zero(t->rows(), t->cols()));
        st.optimizer.second_moment.push_back(Matrix::Zero(t->rows(), t->cols()));
      }
      for (auto& m : st.optimizer.first_moment) moments.push_back(&m);
      for (auto& m : st.optimizer.second_moment) moments.push_back(&m);
      unflatten(read_f64_matrix(dir / "optimizer.f64", 1, 2 * total), moments);
    }
    st.epochs_completed = rj.at("epochs_completed").get<std::int64_t>();
    st.iterations_completed = rj.at("iterations_completed").get<std::int64_t>();
  } catch (const json::exception& e) {
    throw FormatError("checkpoint " + dir.string() + ": " + e.what());
  }
  return ck;
}

}  // namespace prg
