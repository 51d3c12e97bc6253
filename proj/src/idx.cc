/*
 * Copyright 2026 The dflpool Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// IDX tensor files: a big-endian header (magic, then one 32-bit size per
// dimension) followed by an unsigned-byte payload.

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "dfl/datahub.hpp"
#include "dfl/errors.hpp"

namespace dfl {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::string hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "0x%08x", v);
  return buf;
}

struct GzCloser {
  void operator()(gzFile_s* f) const { gzclose(f); }
};
using GzHandle = std::unique_ptr<gzFile_s, GzCloser>;

// gzread passes uncompressed files through unchanged.
class IdxReader {
 public:
  explicit IdxReader(const std::filesystem::path& path) : path_(path.string()) {
    handle_.reset(gzopen(path_.c_str(), "rb"));
    if (!handle_) throw FormatError("cannot open IDX file " + path_);
  }

  void read_exact(void* dst, std::size_t bytes, const char* what) {
    auto* out = static_cast<unsigned char*>(dst);
    std::size_t done = 0;
    while (done < bytes) {
      const auto chunk = static_cast<unsigned>(std::min<std::size_t>(bytes - done, 1u << 30));
      const int got = gzread(handle_.get(), out + done, chunk);
      if (got < 0) throw FormatError(path_ + ": read error while reading " + what);
      if (got == 0) {
        throw FormatError(path_ + ": truncated " + what + " (" + std::to_string(done) + " of " +
                          std::to_string(bytes) + " bytes)");
      }
      done += static_cast<std::size_t>(got);
    }
  }

  std::uint32_t read_u32(const char* what) {
    std::array<unsigned char, 4> b{};
    read_exact(b.data(), b.size(), what);
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) |
           (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
  }

  void expect_magic(std::uint32_t expected, const char* kind) {
    const std::uint32_t magic = read_u32("header");
    if (magic != expected) {
      throw FormatError(path_ + ": bad magic " + hex32(magic) + " for " + kind + " file (expected " +
                        hex32(expected) + ")");
    }
  }

  const std::string& path() const { return path_; }

 private:
  std::string path_;
  GzHandle handle_;
};

void write_u32(std::ofstream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b, 4);
}

}  // namespace

Dataset load_idx_dataset(const std::filesystem::path& images_path,
                         const std::filesystem::path& labels_path) {
  IdxReader images(images_path);
  images.expect_magic(kImageMagic, "image");
  const std::uint32_t n_images = images.read_u32("header");
  const std::uint32_t rows = images.read_u32("header");
  const std::uint32_t cols = images.read_u32("header");

  IdxReader labels(labels_path);
  labels.expect_magic(kLabelMagic, "label");
  const std::uint32_t n_labels = labels.read_u32("header");
  if (n_images != n_labels) {
    throw ConsistencyError("image count " + std::to_string(n_images) + " in " + images.path() +
                           " does not match label count " + std::to_string(n_labels) + " in " +
                           labels.path());
  }

  const std::size_t n_features = std::size_t{rows} * cols;
  std::vector<unsigned char> pixels(std::size_t{n_images} * n_features);
  images.read_exact(pixels.data(), pixels.size(), "image payload");
  std::vector<unsigned char> raw_labels(n_labels);
  labels.read_exact(raw_labels.data(), raw_labels.size(), "label payload");

  std::vector<double> values(pixels.size());
  std::transform(pixels.begin(), pixels.end(), values.begin(),
                 [](unsigned char p) { return static_cast<double>(p) / 255.0; });

  Dataset ds;
  ds.features = Matrix(n_images, n_features, std::move(values));
  ds.labels.assign(raw_labels.begin(), raw_labels.end());
  int max_label = 0;
  for (int l : ds.labels) max_label = std::max(max_label, l);
  ds.n_classes = std::max(2, max_label + 1);
  return ds;
}

void save_idx_dataset(const Dataset& dataset, const std::filesystem::path& images_path,
                      const std::filesystem::path& labels_path) {
  dataset.validate();
  const std::size_t width = dataset.n_features();
  auto side = static_cast<std::uint32_t>(std::lround(std::sqrt(static_cast<double>(width))));
  std::uint32_t rows = side;
  std::uint32_t cols = side;
  if (std::size_t{side} * side != width) {
    rows = 1;
    cols = static_cast<std::uint32_t>(width);
  }

  std::ofstream img(images_path, std::ios::binary);
  if (!img) throw FormatError("cannot write " + images_path.string());
  write_u32(img, kImageMagic);
  write_u32(img, static_cast<std::uint32_t>(dataset.size()));
  write_u32(img, rows);
  write_u32(img, cols);
  std::vector<char> bytes(dataset.features.size());
  std::transform(dataset.features.values().begin(), dataset.features.values().end(), bytes.begin(),
                 [](double v) {
                   return static_cast<char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
                 });
  img.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));

  std::ofstream lab(labels_path, std::ios::binary);
  if (!lab) throw FormatError("cannot write " + labels_path.string());
  write_u32(lab, kLabelMagic);
  write_u32(lab, static_cast<std::uint32_t>(dataset.size()));
  for (int l : dataset.labels) lab.put(static_cast<char>(l));
}

}  // namespace dfl
