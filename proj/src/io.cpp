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

#include "docpack/io.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <utility>

namespace docpack {

namespace {

[[noreturn]] void throw_errno(const std::string& what,
                              const std::filesystem::path& path) {
  throw IoError(what + " " + path.string() + ": " + std::strerror(errno));
}

int open_or_throw(const std::filesystem::path& path, int flags, mode_t mode = 0644) {
  int fd = ::open(path.c_str(), flags, mode);
  if (fd < 0) throw_errno("open", path);
  return fd;
}

}  // namespace

File::File(File&& other) noexcept : fd_(other.fd_), path_(std::move(other.path_)) {
  other.fd_ = -1;
}

File& File::operator=(File&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = std::exchange(other.fd_, -1);
    path_ = std::move(other.path_);
  }
  return *this;
}

File::~File() { close(); }

File File::create(const std::filesystem::path& path) {
  return File(open_or_throw(path, O_CREAT | O_TRUNC | O_RDWR), path);
}

File File::open_rw(const std::filesystem::path& path) {
  return File(open_or_throw(path, O_RDWR), path);
}

File File::open_ro(const std::filesystem::path& path) {
  return File(open_or_throw(path, O_RDONLY), path);
}

File File::open_append(const std::filesystem::path& path) {
  return File(open_or_throw(path, O_CREAT | O_RDWR | O_APPEND), path);
}

uint64_t File::size() const {
  struct stat st;
  if (::fstat(fd_, &st) != 0) throw_errno("fstat", path_);
  return static_cast<uint64_t>(st.st_size);
}

void File::append(ByteSpan data) {
  size_t off = 0;
  while (off < data.size()) {
    ssize_t n = ::write(fd_, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw_errno("write", path_);
    }
    off += static_cast<size_t>(n);
  }
}

void File::pread_exact(uint64_t offset, std::span<uint8_t> out) const {
  size_t off = 0;
  while (off < out.size()) {
    ssize_t n = ::pread(fd_, out.data() + off, out.size() - off,
                        static_cast<off_t>(offset + off));
    if (n < 0) {
      if (errno == EINTR) continue;
      throw_errno("pread", path_);
    }
    if (n == 0) throw IoError("pread past end of " + path_.string());
    off += static_cast<size_t>(n);
  }
}

Bytes File::pread(uint64_t offset, size_t len) const {
  Bytes out(len);
  pread_exact(offset, out);
  return out;
}

void File::pwrite(uint64_t offset, ByteSpan data) {
  size_t off = 0;
  while (off < data.size()) {
    ssize_t n = ::pwrite(fd_, data.data() + off, data.size() - off,
                         static_cast<off_t>(offset + off));
    if (n < 0) {
      if (errno == EINTR) continue;
      throw_errno("pwrite", path_);
    }
    off += static_cast<size_t>(n);
  }
}

void File::sync() {
  if (::fdatasync(fd_) != 0) throw_errno("fdatasync", path_);
}

void File::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

void sync_dir(const std::filesystem::path& dir) {
  int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY);
  if (fd < 0) throw_errno("open dir", dir);
  ::fsync(fd);
  ::close(fd);
}

}  // namespace docpack
