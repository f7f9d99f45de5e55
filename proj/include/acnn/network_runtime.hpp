#pragma once

#include <chrono>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <zlib.h>

#include "acnn/conv_builder.hpp"
#include "acnn/metric_head.hpp"
#include "acnn/mnist_io.hpp"
#include "acnn/version.hpp"

namespace acnn {

// Serialization / deserialization failure with a specific cause.
class format_error : public std::runtime_error {
 public:
  enum class Cause { bad_magic, bad_version, bad_checksum, truncated, malformed };
  format_error(Cause cause, const std::string& msg)
      : std::runtime_error(msg), cause_(cause) {}
  Cause cause() const { return cause_; }

 private:
  Cause cause_;
};

// ---------------------------------------------------------------------------
// The deployable network
// ---------------------------------------------------------------------------

struct AnalyticNetwork {
  BuildConfig cfg;
  std::vector<int> exemplar_indices;  // source positions of the exemplars
  std::int64_t build_unix_time = 0;
  double build_seconds = 0.0;

  std::vector<ConvKernel> layer1;
  std::vector<MultiKernel> layer2;
  MetricHead head;
};

struct ForwardResult {
  ChannelStack channels;
  int cls = 0;
  std::vector<double> nets;
};

// Full pipeline on one image: binarize -> layer-1 conv -> optional pooling ->
// layer-2 conv -> head.  Pure function of (net, img).
inline ForwardResult forward(const AnalyticNetwork& net, const BinaryImage& img) {
  ForwardResult r;
  r.channels = forward_channels(img, net.layer1, net.layer2, net.cfg.use_pooling);
  ClassifyResult c = classify(r.channels, net.head);
  r.cls = c.cls;
  r.nets = std::move(c.nets);
  return r;
}

inline ForwardResult forward(const AnalyticNetwork& net, const RawImage& img) {
  return forward(net, binarize(img));
}

// Builds the complete network (convolutional part + head) and records
// provenance.  The ConvNet with all intermediate stages is returned through
// `stages` when a caller wants to inspect or export them.
inline AnalyticNetwork build_network(const ExemplarSet& exemplars, const BuildConfig& cfg,
                                     ConvNet* stages = nullptr) {
  const auto t0 = std::chrono::steady_clock::now();
  ConvNet cn = build_convnet(exemplars, cfg);
  MetricHead head = build_metric_head(cn.final_channels);
  const auto t1 = std::chrono::steady_clock::now();

  AnalyticNetwork net;
  net.cfg = cfg;
  net.exemplar_indices = exemplars.source_indices();
  net.build_unix_time = std::chrono::duration_cast<std::chrono::seconds>(
                            std::chrono::system_clock::now().time_since_epoch())
                            .count();
  net.build_seconds = std::chrono::duration<double>(t1 - t0).count();
  net.layer1 = cn.layer1;
  net.layer2 = cn.layer2;
  net.head = std::move(head);
  if (stages) *stages = std::move(cn);
  return net;
}

// ---------------------------------------------------------------------------
// Serialization: magic "ACNN", version, config, kernels, head, CRC-32.
// All integers and doubles little-endian.
// ---------------------------------------------------------------------------

namespace detail {

static_assert(sizeof(double) == 8, "serialization assumes 8-byte IEEE doubles");

class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void i64(std::int64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  void raw(const char* p, std::size_t n) {
    buf_.insert(buf_.end(), reinterpret_cast<const std::uint8_t*>(p),
                reinterpret_cast<const std::uint8_t*>(p) + n);
  }
  const std::vector<std::uint8_t>& bytes() const { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

class ByteReader {
 public:
  ByteReader(const std::vector<std::uint8_t>& b) : buf_(b) {}
  std::uint8_t u8() {
    need(1);
    return buf_[off_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf_[off_++]) << (8 * i);
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  std::int64_t i64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf_[off_++]) << (8 * i);
    return static_cast<std::int64_t>(v);
  }
  double f64() {
    need(8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf_[off_++]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::size_t offset() const { return off_; }

 private:
  void need(std::size_t n) const {
    if (off_ + n > buf_.size()) {
      throw format_error(format_error::Cause::truncated, "network file truncated");
    }
  }
  const std::vector<std::uint8_t>& buf_;
  std::size_t off_ = 0;
};

inline std::uint32_t crc_of(const std::uint8_t* data, std::size_t n) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(data), static_cast<uInt>(n)));
}

}  // namespace detail

inline void save_network(const AnalyticNetwork& net, const std::string& path) {
  detail::ByteWriter w;
  w.raw("ACNN", 4);
  w.u32(kNetworkFormatVersion);

  // Config block.
  w.f64(net.cfg.K);
  w.u8(net.cfg.use_pooling ? 1 : 0);
  w.u8(net.cfg.use_image_channels ? 1 : 0);
  w.u32(static_cast<std::uint32_t>(net.cfg.kernel_size));
  w.u32(static_cast<std::uint32_t>(net.cfg.scan_step));
  w.f64(net.cfg.thin_min_value);
  w.u32(static_cast<std::uint32_t>(net.cfg.thin_min_distance));
  w.u8(net.cfg.pooled_rethin ? 1 : 0);
  w.f64(net.cfg.l1_consume_threshold);
  w.f64(net.cfg.l2_consume_threshold);

  // Provenance.
  w.u32(static_cast<std::uint32_t>(net.exemplar_indices.size()));
  for (int idx : net.exemplar_indices) w.i32(idx);
  w.i64(net.build_unix_time);
  w.f64(net.build_seconds);

  // Layer 1.
  w.u32(static_cast<std::uint32_t>(net.layer1.size()));
  for (const auto& k : net.layer1) {
    w.i32(k.owner);
    w.u32(static_cast<std::uint32_t>(k.row));
    w.u32(static_cast<std::uint32_t>(k.col));
    w.f64(k.bias);
    for (double x : k.w) w.f64(x);
  }

  // Layer 2.
  w.u32(static_cast<std::uint32_t>(net.layer2.size()));
  const std::uint32_t C = net.layer2.empty() ? 0 : net.layer2[0].channels;
  w.u32(C);
  for (const auto& mk : net.layer2) {
    w.i32(mk.owner);
    w.u32(static_cast<std::uint32_t>(mk.row));
    w.u32(static_cast<std::uint32_t>(mk.col));
    w.f64(mk.bias);
    for (double x : mk.w) w.f64(x);
  }

  // Head.
  w.u32(static_cast<std::uint32_t>(net.head.n_img));
  w.u32(static_cast<std::uint32_t>(net.head.channels));
  w.u32(static_cast<std::uint32_t>(net.head.height));
  w.u32(static_cast<std::uint32_t>(net.head.width));
  for (double x : net.head.Wh1) w.f64(x);
  for (double x : net.head.w1) w.f64(x);

  // Trailing checksum over everything written so far.
  const auto& body = w.bytes();
  const std::uint32_t crc = detail::crc_of(body.data(), body.size());
  detail::ByteWriter tail;
  tail.u32(crc);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open for writing: " + path);
  out.write(reinterpret_cast<const char*>(body.data()),
            static_cast<std::streamsize>(body.size()));
  out.write(reinterpret_cast<const char*>(tail.bytes().data()), 4);
  if (!out) throw io_error("write failed: " + path);
}

inline AnalyticNetwork load_network(const std::string& path) {
  auto bytes = detail::read_all_bytes(path);
  if (bytes.size() < 12) {
    throw format_error(format_error::Cause::truncated, "network file too short: " + path);
  }
  if (std::memcmp(bytes.data(), "ACNN", 4) != 0) {
    throw format_error(format_error::Cause::bad_magic, "bad magic in: " + path);
  }
  // Verify the trailing checksum before trusting any field.
  const std::size_t body_len = bytes.size() - 4;
  std::uint32_t stored = 0;
  for (int i = 0; i < 4; ++i) {
    stored |= static_cast<std::uint32_t>(bytes[body_len + i]) << (8 * i);
  }
  if (detail::crc_of(bytes.data(), body_len) != stored) {
    throw format_error(format_error::Cause::bad_checksum, "checksum mismatch in: " + path);
  }

  detail::ByteReader r(bytes);
  char magic[4];
  for (auto& ch : magic) ch = static_cast<char>(r.u8());
  const std::uint32_t version = r.u32();
  if (version != kNetworkFormatVersion) {
    throw format_error(format_error::Cause::bad_version,
                       "unsupported network format version " + std::to_string(version) +
                           " in: " + path);
  }

  AnalyticNetwork net;
  net.cfg.K = r.f64();
  net.cfg.use_pooling = r.u8() != 0;
  net.cfg.use_image_channels = r.u8() != 0;
  net.cfg.kernel_size = static_cast<int>(r.u32());
  net.cfg.scan_step = static_cast<int>(r.u32());
  net.cfg.thin_min_value = r.f64();
  net.cfg.thin_min_distance = static_cast<int>(r.u32());
  net.cfg.pooled_rethin = r.u8() != 0;
  net.cfg.l1_consume_threshold = r.f64();
  net.cfg.l2_consume_threshold = r.f64();

  const std::uint32_t n_ex = r.u32();
  net.exemplar_indices.resize(n_ex);
  for (auto& idx : net.exemplar_indices) idx = r.i32();
  net.build_unix_time = r.i64();
  net.build_seconds = r.f64();

  const std::uint32_t n1 = r.u32();
  net.layer1.resize(n1);
  for (auto& k : net.layer1) {
    k.owner = r.i32();
    k.row = static_cast<int>(r.u32());
    k.col = static_cast<int>(r.u32());
    k.bias = r.f64();
    for (double& x : k.w) x = r.f64();
  }

  const std::uint32_t n2 = r.u32();
  const std::uint32_t C = r.u32();
  net.layer2.resize(n2);
  for (auto& mk : net.layer2) {
    mk.channels = static_cast<int>(C);
    mk.owner = r.i32();
    mk.row = static_cast<int>(r.u32());
    mk.col = static_cast<int>(r.u32());
    mk.bias = r.f64();
    mk.w.resize(static_cast<std::size_t>(C) * kKernelCells);
    for (double& x : mk.w) x = r.f64();
  }

  net.head.n_img = static_cast<int>(r.u32());
  net.head.channels = static_cast<int>(r.u32());
  net.head.height = static_cast<int>(r.u32());
  net.head.width = static_cast<int>(r.u32());
  net.head.Wh1.resize(net.head.n_pairs());
  for (double& x : net.head.Wh1) x = r.f64();
  net.head.w1.resize(static_cast<std::size_t>(net.head.n_pairs()) * net.head.field_size());
  for (double& x : net.head.w1) x = r.f64();

  if (r.offset() != body_len) {
    throw format_error(format_error::Cause::malformed,
                       "trailing bytes after head block in: " + path);
  }
  return net;
}

// Human-readable build manifest written next to the network file.
inline std::string network_manifest(const AnalyticNetwork& net) {
  std::string s;
  s += "analytic network manifest\n";
  s += "format_version: " + std::to_string(kNetworkFormatVersion) + "\n";
  s += "library_version: " + std::string(kVersionString) + "\n";
  s += "K: " + std::to_string(net.cfg.K) + "\n";
  s += "pooling: " + std::string(net.cfg.use_pooling ? "yes" : "no") + "\n";
  s += "channels: " +
       std::string(net.cfg.use_image_channels ? "per-exemplar" : "merged") + "\n";
  s += "layer1_kernels: " + std::to_string(net.layer1.size()) + "\n";
  s += "layer2_kernels: " + std::to_string(net.layer2.size()) + "\n";
  s += "head_pairs: " + std::to_string(net.head.n_pairs()) + "\n";
  s += "head_field: " + std::to_string(net.head.channels) + "x" +
       std::to_string(net.head.height) + "x" + std::to_string(net.head.width) + "\n";
  s += "exemplar_indices:";
  for (int idx : net.exemplar_indices) s += " " + std::to_string(idx);
  s += "\n";
  s += "build_unix_time: " + std::to_string(net.build_unix_time) + "\n";
  s += "build_seconds: " + std::to_string(net.build_seconds) + "\n";
  return s;
}

}  // namespace acnn
