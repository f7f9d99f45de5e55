#pragma once

// Shared helpers for the unit tests: canonical data access, synthetic IDX
// construction, and a fixed known-good exemplar draw.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "acnn/acnn.hpp"

namespace testsupport {

inline std::string data_dir() {
  const char* env = std::getenv("ACNN_DATA_DIR");
  return (env && *env) ? env : "data";
}

inline std::string images_path() { return data_dir() + "/t10k-images-idx3-ubyte.gz"; }
inline std::string labels_path() { return data_dir() + "/t10k-labels-idx1-ubyte.gz"; }

// Canonical test-set images, loaded once (raw and binarized variants).
inline const std::vector<acnn::RawImage>& canonical_raw() {
  static const std::vector<acnn::RawImage> images = [] {
    auto imgs = acnn::load_idx_images(images_path());
    acnn::attach_labels(imgs, acnn::load_idx_labels(labels_path()));
    return imgs;
  }();
  return images;
}

inline const std::vector<acnn::BinaryImage>& canonical_images() {
  static const std::vector<acnn::BinaryImage> images =
      acnn::load_binarized(images_path(), labels_path());
  return images;
}

inline const std::vector<int>& canonical_labels() {
  static const std::vector<int> labels = [] {
    std::vector<int> out;
    for (const auto& im : canonical_images()) out.push_back(im.label);
    return out;
  }();
  return labels;
}

// A fixed exemplar draw (one test-set index per class 0..9) used wherever a
// deterministic, known-good network is needed.
inline const std::vector<int>& fixture_indices() {
  static const std::vector<int> idx = {443, 2013, 8707, 7130, 6488,
                                       9478, 1676, 1260, 9967, 5622};
  return idx;
}

inline acnn::ExemplarSet fixture_exemplars() {
  return acnn::select_exemplars(canonical_images(), fixture_indices());
}

// ---------------------------------------------------------------------------
// Synthetic IDX files
// ---------------------------------------------------------------------------

inline void push_u32_be(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

// Builds an IDX image payload; each image is 784 raw (file-convention) bytes.
inline std::vector<std::uint8_t> make_idx_images(
    const std::vector<std::vector<std::uint8_t>>& images, std::uint32_t rows = 28,
    std::uint32_t cols = 28, std::uint32_t magic = acnn::kImagesMagic) {
  std::vector<std::uint8_t> out;
  push_u32_be(out, magic);
  push_u32_be(out, static_cast<std::uint32_t>(images.size()));
  push_u32_be(out, rows);
  push_u32_be(out, cols);
  for (const auto& im : images) out.insert(out.end(), im.begin(), im.end());
  return out;
}

inline std::vector<std::uint8_t> make_idx_labels(const std::vector<std::uint8_t>& labels,
                                                 std::uint32_t magic = acnn::kLabelsMagic) {
  std::vector<std::uint8_t> out;
  push_u32_be(out, magic);
  push_u32_be(out, static_cast<std::uint32_t>(labels.size()));
  out.insert(out.end(), labels.begin(), labels.end());
  return out;
}

inline std::string write_temp_file(const std::string& name,
                                   const std::vector<std::uint8_t>& bytes) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  return path.string();
}

// An all-background (file value 0 everywhere) synthetic image.
inline std::vector<std::uint8_t> blank_file_image() {
  return std::vector<std::uint8_t>(28 * 28, 0);
}

}  // namespace testsupport
