#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <zlib.h>

#include "acnn/grid.hpp"

namespace acnn {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

// File-system level failure (missing file, unreadable).
class io_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Structural failure inside a file that was read successfully.
class parse_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

inline constexpr int kImageSide = 28;
inline constexpr std::uint32_t kImagesMagic = 0x00000803;
inline constexpr std::uint32_t kLabelsMagic = 0x00000801;

// A 28x28 grayscale image as the pipeline works with it: white background
// (255), dark ink (0).  MNIST files store the opposite convention (ink-high
// on a black background), so ingestion maps every byte v to 255-v; all
// figures, equations and thresholds in this library assume the
// white-background orientation.
struct RawImage {
  ByteGrid pixels;       // values in [0, 255]
  int label = -1;        // class index, -1 until labels are attached
  int source_index = -1; // position in the source file
};

// Image after thresholding: every pixel is exactly 0 or 255.
struct BinaryImage {
  ByteGrid pixels;
  int label = -1;
  int source_index = -1;
};

// One binarized image per class, ordered by class label 0..N-1.
struct ExemplarSet {
  std::vector<BinaryImage> images;

  int size() const { return static_cast<int>(images.size()); }
  std::vector<int> source_indices() const {
    std::vector<int> out;
    out.reserve(images.size());
    for (const auto& im : images) out.push_back(im.source_index);
    return out;
  }
};

// ---------------------------------------------------------------------------
// File reading (transparent gzip)
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::uint8_t> read_all_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open file: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

inline bool looks_gzip(const std::vector<std::uint8_t>& bytes) {
  return bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b;
}

inline std::vector<std::uint8_t> gunzip(const std::vector<std::uint8_t>& in,
                                        const std::string& path) {
  z_stream zs{};
  // 15+16 asks zlib to expect a gzip wrapper.
  if (inflateInit2(&zs, 15 + 16) != Z_OK) {
    throw parse_error("zlib init failed for: " + path);
  }
  std::vector<std::uint8_t> out;
  out.reserve(in.size() * 4);
  std::array<std::uint8_t, 1 << 16> buf;
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  int rc = Z_OK;
  do {
    zs.next_out = buf.data();
    zs.avail_out = static_cast<uInt>(buf.size());
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw parse_error("corrupt gzip stream in: " + path);
    }
    out.insert(out.end(), buf.data(), buf.data() + (buf.size() - zs.avail_out));
  } while (rc != Z_STREAM_END && (zs.avail_in > 0 || zs.avail_out == 0));
  inflateEnd(&zs);
  if (rc != Z_STREAM_END) throw parse_error("truncated gzip stream in: " + path);
  return out;
}

inline std::vector<std::uint8_t> read_file_maybe_gzip(const std::string& path) {
  auto bytes = read_all_bytes(path);
  if (looks_gzip(bytes)) return gunzip(bytes, path);
  return bytes;
}

inline std::uint32_t read_u32_be(const std::vector<std::uint8_t>& b, std::size_t off,
                                 const std::string& path) {
  if (off + 4 > b.size()) throw parse_error("truncated header in: " + path);
  return (static_cast<std::uint32_t>(b[off]) << 24) |
         (static_cast<std::uint32_t>(b[off + 1]) << 16) |
         (static_cast<std::uint32_t>(b[off + 2]) << 8) |
         static_cast<std::uint32_t>(b[off + 3]);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// IDX parsing
// ---------------------------------------------------------------------------

// Loads an IDX image file (big-endian magic 0x00000803, dims [count, 28, 28]).
// Accepts gzip-compressed files transparently.  Pixel intensities are
// inverted at ingestion (v -> 255 - v) so that images carry a white (255)
// background and dark (0) ink; see RawImage.
inline std::vector<RawImage> load_idx_images(const std::string& path) {
  auto bytes = detail::read_file_maybe_gzip(path);
  const std::uint32_t magic = detail::read_u32_be(bytes, 0, path);
  if (magic != kImagesMagic) {
    if (magic == kLabelsMagic) {
      throw parse_error("magic mismatch: label file passed where images expected: " + path);
    }
    throw parse_error("bad IDX image magic in: " + path);
  }
  const std::uint32_t count = detail::read_u32_be(bytes, 4, path);
  const std::uint32_t rows = detail::read_u32_be(bytes, 8, path);
  const std::uint32_t cols = detail::read_u32_be(bytes, 12, path);
  if (rows != kImageSide || cols != kImageSide) {
    throw parse_error("dimension mismatch (want 28x28) in: " + path);
  }
  const std::size_t need = 16 + static_cast<std::size_t>(count) * rows * cols;
  if (bytes.size() < need) throw parse_error("truncated image data in: " + path);

  std::vector<RawImage> images(count);
  std::size_t off = 16;
  for (std::uint32_t n = 0; n < count; ++n) {
    RawImage& im = images[n];
    im.pixels = ByteGrid(kImageSide, kImageSide);
    im.source_index = static_cast<int>(n);
    for (int i = 0; i < kImageSide * kImageSide; ++i) {
      im.pixels.data()[i] = static_cast<std::uint8_t>(255 - bytes[off + i]);
    }
    off += static_cast<std::size_t>(kImageSide) * kImageSide;
  }
  return images;
}

// Loads an IDX label file (big-endian magic 0x00000801).
inline std::vector<int> load_idx_labels(const std::string& path) {
  auto bytes = detail::read_file_maybe_gzip(path);
  const std::uint32_t magic = detail::read_u32_be(bytes, 0, path);
  if (magic != kLabelsMagic) throw parse_error("bad IDX label magic in: " + path);
  const std::uint32_t count = detail::read_u32_be(bytes, 4, path);
  if (bytes.size() < 8 + count) throw parse_error("truncated label data in: " + path);
  std::vector<int> labels(count);
  for (std::uint32_t n = 0; n < count; ++n) labels[n] = bytes[8 + n];
  return labels;
}

// Attaches labels to images in file order.
inline void attach_labels(std::vector<RawImage>& images, const std::vector<int>& labels) {
  if (images.size() != labels.size()) {
    throw parse_error("image/label count mismatch: " + std::to_string(images.size()) +
                      " images vs " + std::to_string(labels.size()) + " labels");
  }
  for (std::size_t i = 0; i < images.size(); ++i) images[i].label = labels[i];
}

// ---------------------------------------------------------------------------
// Binarization
// ---------------------------------------------------------------------------

// Thresholds an image: pixel > 127 maps to 255, pixel <= 127 maps to 0.
// Label and source index are preserved.  Idempotent.
inline BinaryImage binarize(const RawImage& img) {
  BinaryImage out;
  out.pixels = ByteGrid(img.pixels.rows(), img.pixels.cols());
  out.label = img.label;
  out.source_index = img.source_index;
  const std::uint8_t* src = img.pixels.data();
  std::uint8_t* dst = out.pixels.data();
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    dst[i] = src[i] > 127 ? 255 : 0;
  }
  return out;
}

inline BinaryImage binarize(const BinaryImage& img) { return img; }

// One-stop loader: images + labels, binarized, labels attached.
inline std::vector<BinaryImage> load_binarized(const std::string& images_path,
                                               const std::string& labels_path) {
  auto raw = load_idx_images(images_path);
  auto labels = load_idx_labels(labels_path);
  attach_labels(raw, labels);
  std::vector<BinaryImage> out;
  out.reserve(raw.size());
  for (const auto& im : raw) out.push_back(binarize(im));
  return out;
}

// ---------------------------------------------------------------------------
// Exemplar selection
// ---------------------------------------------------------------------------

// Selects one image per class using explicit source indices (one per class,
// ordered by class label).  Indices are used verbatim.
inline ExemplarSet select_exemplars(const std::vector<BinaryImage>& images,
                                    const std::vector<int>& indices) {
  ExemplarSet set;
  set.images.reserve(indices.size());
  for (std::size_t cls = 0; cls < indices.size(); ++cls) {
    const int idx = indices[cls];
    if (idx < 0 || idx >= static_cast<int>(images.size())) {
      throw std::invalid_argument("exemplar index out of range: " + std::to_string(idx));
    }
    set.images.push_back(images[idx]);
  }
  return set;
}

// Selects one image per class by a seeded uniform draw.  For each class c in
// 0..n_classes-1 the candidate list is the file-order list of images labeled
// c, and the pick is candidates[gen() % candidates.size()] with a single
// std::mt19937 advanced class by class — deterministic and platform-stable.
inline ExemplarSet select_exemplars(const std::vector<BinaryImage>& images,
                                    std::uint32_t seed, int n_classes = 10) {
  std::vector<std::vector<int>> by_class(n_classes);
  for (std::size_t i = 0; i < images.size(); ++i) {
    const int lbl = images[i].label;
    if (lbl >= 0 && lbl < n_classes) by_class[lbl].push_back(static_cast<int>(i));
  }
  std::mt19937 gen(seed);
  std::vector<int> indices(n_classes);
  for (int cls = 0; cls < n_classes; ++cls) {
    if (by_class[cls].empty()) {
      throw std::invalid_argument("class " + std::to_string(cls) + " unavailable");
    }
    indices[cls] = by_class[cls][gen() % by_class[cls].size()];
  }
  return select_exemplars(images, indices);
}

}  // namespace acnn
