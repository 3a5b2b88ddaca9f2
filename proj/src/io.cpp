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

#include "prg/io.hpp"

#include <unistd.h>

#include <atomic>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace prg {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little,
              "bundle arrays are little-endian; big-endian hosts need a "
              "byte-swapping reader");

namespace {

template <typename T>
std::vector<T> read_raw(const fs::path& file, std::int64_t count) {
  if (!fs::exists(file)) {
    throw NotFoundError(file.filename().string() + ": file not found (" +
                        file.string() + ")");
  }
  const auto bytes = fs::file_size(file);
  const auto expected = static_cast<std::uintmax_t>(count) * sizeof(T);
  if (bytes != expected) {
    throw FormatError(file.filename().string() + ": holds " +
                      std::to_string(bytes) + " bytes, expected " +
                      std::to_string(expected) + " (" +
                      std::to_string(count) + " values of " +
                      std::to_string(sizeof(T)) + " bytes)");
  }
  std::vector<T> out(static_cast<std::size_t>(count));
  std::ifstream in(file, std::ios::binary);
  in.read(reinterpret_cast<char*>(out.data()),
          static_cast<std::streamsize>(expected));
  if (!in) throw IoError(file.string() + ": short read");
  return out;
}

template <typename T>
void write_raw(const fs::path& file, const T* data, std::size_t count) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(file.string() + ": cannot open for writing");
  out.write(reinterpret_cast<const char*>(data),
            static_cast<std::streamsize>(count * sizeof(T)));
  if (!out) throw IoError(file.string() + ": write failed");
}

fs::path sibling(const fs::path& dir, const char* tag) {
  static std::atomic<unsigned> counter{0};
  fs::path clean = dir.lexically_normal();
  if (!clean.has_filename()) clean = clean.parent_path();
  return clean.parent_path() /
         (clean.filename().string() + "." + tag + "-" +
          std::to_string(::getpid()) + "-" + std::to_string(counter++));
}

}  // namespace

Matrix read_f32_matrix(const fs::path& file, std::int64_t rows,
                       std::int64_t cols) {
  const auto raw = read_raw<float>(file, rows * cols);
  Matrix out(rows, cols);
  for (std::size_t i = 0; i < raw.size(); ++i) out.data()[i] = raw[i];
  return out;
}

Matrix read_f64_matrix(const fs::path& file, std::int64_t rows,
                       std::int64_t cols) {
  const auto raw = read_raw<double>(file, rows * cols);
  Matrix out(rows, cols);
  if (!raw.empty()) std::memcpy(out.data(), raw.data(), raw.size() * 8);
  return out;
}

IndexVector read_i64_vector(const fs::path& file, std::int64_t n) {
  return read_raw<std::int64_t>(file, n);
}

void write_f32_matrix(const fs::path& file, const Matrix& m) {
  const MatrixF f = m.cast<float>();
  write_raw(file, f.data(), static_cast<std::size_t>(f.size()));
}

void write_f64_matrix(const fs::path& file, const Matrix& m) {
  write_raw(file, m.data(), static_cast<std::size_t>(m.size()));
}

void write_i64_vector(const fs::path& file, const IndexVector& v) {
  write_raw(file, v.data(), v.size());
}

void write_text_file(const fs::path& file, const std::string& text) {
  write_raw(file, text.data(), text.size());
}

std::string read_text_file(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw NotFoundError(file.string() + ": cannot open");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_dir_atomically(const fs::path& dir,
                          const std::function<void(const fs::path&)>& fill) {
  const fs::path tmp = sibling(dir, "tmp");
  std::error_code ec;
  fs::create_directories(tmp, ec);
  if (ec) {
    throw IoError(dir.string() + ": cannot create staging directory (" +
                  ec.message() + ")");
  }
  try {
    fill(tmp);
    if (fs::exists(dir)) {
      const fs::path old = sibling(dir, "old");
      fs::rename(dir, old);
      fs::rename(tmp, dir);
      fs::remove_all(old, ec);
    } else {
      fs::rename(tmp, dir);
    }
  } catch (const fs::filesystem_error& e) {
    fs::remove_all(tmp, ec);
    throw IoError(dir.string() + ": " + e.what());
  } catch (...) {
    fs::remove_all(tmp, ec);
    throw;
  }
}

}  // namespace prg
