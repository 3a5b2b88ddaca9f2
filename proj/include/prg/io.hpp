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

#ifndef PRG_IO_HPP_
#define PRG_IO_HPP_

#include <filesystem>
#include <functional>
#include <string>

#include "prg/numerics/matrix.hpp"

namespace prg {

// Raw little-endian, row-major arrays with no header. Readers check the
// byte size against the expected shape and name the file on mismatch.
Matrix read_f32_matrix(const std::filesystem::path& file, std::int64_t rows,
                       std::int64_t cols);
Matrix read_f64_matrix(const std::filesystem::path& file, std::int64_t rows,
                       std::int64_t cols);
IndexVector read_i64_vector(const std::filesystem::path& file,
                            std::int64_t n);

void write_f32_matrix(const std::filesystem::path& file, const Matrix& m);
void write_f64_matrix(const std::filesystem::path& file, const Matrix& m);
void write_i64_vector(const std::filesystem::path& file,
                      const IndexVector& v);
void write_text_file(const std::filesystem::path& file,
                     const std::string& text);
std::string read_text_file(const std::filesystem::path& file);

// Runs fill() against a fresh sibling temporary directory, then swaps it in
// for dir. On failure the temporary is removed and dir is left untouched.
void write_dir_atomically(
    const std::filesystem::path& dir,
    const std::function<void(const std::filesystem::path&)>& fill);

}  // namespace prg

#endif  // PRG_IO_HPP_
