// Copyright 2026 The docpack Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "docpack/bytes.hpp"

namespace docpack {

/// Thin RAII wrapper over a POSIX fd. All errors throw IoError with the path
/// and errno text attached.
class File {
 public:
  File() = default;
  File(File&& other) noexcept;
  File& operator=(File&& other) noexcept;
  File(const File&) = delete;
  File& operator=(const File&) = delete;
  ~File();

  static File create(const std::filesystem::path& path);    // O_TRUNC
  static File open_rw(const std::filesystem::path& path);   // must exist
  static File open_ro(const std::filesystem::path& path);
  static File open_append(const std::filesystem::path& path);  // create if absent

  bool valid() const { return fd_ >= 0; }
  uint64_t size() const;

  void append(ByteSpan data);
  void pread_exact(uint64_t offset, std::span<uint8_t> out) const;
  Bytes pread(uint64_t offset, size_t len) const;
  void pwrite(uint64_t offset, ByteSpan data);
  void sync();  // fdatasync
  void close();

  const std::filesystem::path& path() const { return path_; }

 private:
  File(int fd, std::filesystem::path path) : fd_(fd), path_(std::move(path)) {}

  int fd_ = -1;
  std::filesystem::path path_;
};

/// fsyncs a directory so renames/unlinks within it are durable.
void sync_dir(const std::filesystem::path& dir);

}  // namespace docpack
