#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "acnn/feature_scan.hpp"
#include "acnn/grid.hpp"
#include "acnn/mnist_io.hpp"

namespace acnn {

inline constexpr double kMaxPixel = 255.0;
inline constexpr int kKernelCells = kKernelSide * kKernelSide;

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct BuildConfig {
  // Bias percentage: a layer-1 kernel's response threshold is K percent of
  // its response to its own source patch.
  double K = 40.0;
  // Halve real and feature channels with 2x2 pooling between the layers.
  bool use_pooling = true;
  // true: keep one response channel per (kernel, exemplar) pair;
  // false: merge responses across exemplars into one channel per kernel,
  //        each cell holding the maximum response.
  bool use_image_channels = true;

  // Fixed geometry.
  int kernel_size = kKernelSide;
  int scan_step = kScanStep;

  // Feature-thinning parameters (stage-2, per-exemplar variant only).
  double thin_min_value = kThinMinValue;
  int thin_min_distance = kThinMinDistance;
  // Re-apply the spacing rule on the halved grid after feature pooling
  // (marks spaced >= thin_min_distance apart can land closer after halving).
  bool pooled_rethin = true;

  // A feature mark is consumed once some built kernel responds above these
  // thresholds at the mark's location (layer 1 / layer 2 respectively).
  double l1_consume_threshold = 0.0;
  double l2_consume_threshold = 127.0;

  void validate() const {
    if (!(K > 0.0 && K <= 100.0)) {
      throw std::invalid_argument("K must be in (0, 100], got " + std::to_string(K));
    }
    if (kernel_size != kKernelSide) throw std::invalid_argument("kernel_size is fixed at 5");
    if (scan_step < 1) throw std::invalid_argument("scan_step must be >= 1");
  }
};

// The three canonical experiment configurations.
inline BuildConfig config_pooled_image_channels() {  // config A
  BuildConfig c;
  c.K = 40.0;
  c.use_pooling = true;
  c.use_image_channels = true;
  return c;
}
inline BuildConfig config_unpooled_image_channels() {  // config B
  BuildConfig c;
  c.K = 40.0;
  c.use_pooling = false;
  c.use_image_channels = true;
  return c;
}
inline BuildConfig config_unpooled_merged() {  // config C
  BuildConfig c;
  c.K = 30.0;
  c.use_pooling = false;
  c.use_image_channels = false;
  return c;
}

// ---------------------------------------------------------------------------
// Kernels
// ---------------------------------------------------------------------------

using Patch5 = std::array<double, kKernelCells>;

// 5x5 layer-1 kernel synthesized from one boundary patch.
struct ConvKernel {
  Patch5 w{};
  double bias = 0.0;
  int owner = -1;  // exemplar index the source patch came from
  int row = 0;     // upper-left corner of the source patch
  int col = 0;
};

// C x 5x5 layer-2 kernel synthesized from a multilayer channel patch.
struct MultiKernel {
  int channels = 0;
  std::vector<double> w;  // channels * 25, slice-major
  double bias = 0.0;      // fixed 0 for layer 2
  int owner = -1;         // exemplar index, or -1 for the merged variant
  int row = 0;
  int col = 0;
};

// ---------------------------------------------------------------------------
// Elementary kernel math
// ---------------------------------------------------------------------------

// Maps patch values to weights in [-1, 1]: w = p * 2 / max_pixel - 1.
// max_pixel anchors the value that maps to weight +1 (so max_pixel / 2 maps
// to 0 and 0 maps to -1).
inline Patch5 synth_kernel(const Patch5& patch, double max_pixel = kMaxPixel) {
  if (max_pixel <= 0.0) throw std::invalid_argument("synth_kernel: degenerate patch (max 0)");
  Patch5 w;
  for (int i = 0; i < kKernelCells; ++i) w[i] = patch[i] * 2.0 / max_pixel - 1.0;
  return w;
}

// Threshold as a percentage K of the patch-weight dot product.
inline double compute_bias(const Patch5& patch, const Patch5& w, double K) {
  double dot = 0.0;
  for (int i = 0; i < kKernelCells; ++i) dot += patch[i] * w[i];
  return K / 100.0 * dot;
}

// Normalizes a layer-1 kernel so its response to its own source patch equals
// 255: t = p_main / 255, weights divided by t, bias recomputed with the
// corrected weights.  Returns nullopt (skip the feature) when the raw main
// response p_main is not positive.
inline std::optional<ConvKernel> correct_kernel(const Patch5& patch, double K) {
  Patch5 w = synth_kernel(patch, kMaxPixel);
  const double bias = compute_bias(patch, w, K);
  double dot = 0.0;
  for (int i = 0; i < kKernelCells; ++i) dot += patch[i] * w[i];
  const double p_main = dot - bias;
  if (p_main <= 0.0) return std::nullopt;
  const double t = p_main / kMaxPixel;
  for (double& x : w) x /= t;
  ConvKernel k;
  k.w = w;
  k.bias = compute_bias(patch, w, K);
  return k;
}

// Extracts the 5x5 patch with upper-left corner (row, col) as doubles.
inline Patch5 extract_patch(const ByteGrid& img, int row, int col) {
  Patch5 p;
  for (int i = 0; i < kKernelSide; ++i) {
    for (int j = 0; j < kKernelSide; ++j) {
      p[i * kKernelSide + j] = static_cast<double>(img(row + i, col + j));
    }
  }
  return p;
}

// ---------------------------------------------------------------------------
// Convolution and pooling
// ---------------------------------------------------------------------------

// Valid convolution of a binary image with a layer-1 kernel, stride 1,
// followed by ReLU.  28x28 input -> 24x24 channel.
inline RealGrid convolve_layer1(const BinaryImage& img, const ConvKernel& k) {
  const int out = img.pixels.rows() - (kKernelSide - 1);
  RealGrid rc(out, out);
  for (int r = 0; r < out; ++r) {
    for (int c = 0; c < out; ++c) {
      double sum = 0.0;
      for (int i = 0; i < kKernelSide; ++i) {
        for (int j = 0; j < kKernelSide; ++j) {
          sum += static_cast<double>(img.pixels(r + i, c + j)) * k.w[i * kKernelSide + j];
        }
      }
      const double v = sum - k.bias;
      rc(r, c) = v > 0.0 ? v : 0.0;
    }
  }
  return rc;
}

// 2x2 max pooling; halves each dimension.  Requires even dimensions.
inline RealGrid max_pool(const RealGrid& rc) {
  if (rc.rows() % 2 != 0 || rc.cols() % 2 != 0) {
    throw std::invalid_argument("max_pool: dimensions must be even");
  }
  RealGrid out(rc.rows() / 2, rc.cols() / 2);
  for (int r = 0; r < out.rows(); ++r) {
    for (int c = 0; c < out.cols(); ++c) {
      double m = rc(2 * r, 2 * c);
      m = std::max(m, rc(2 * r, 2 * c + 1));
      m = std::max(m, rc(2 * r + 1, 2 * c));
      m = std::max(m, rc(2 * r + 1, 2 * c + 1));
      out(r, c) = m;
    }
  }
  return out;
}

// Stacks the 5x5 window at (row, col) from every channel: C x 25 values.
inline std::vector<double> extract_multilayer_patch(const ChannelStack& channels, int row,
                                                    int col) {
  if (channels.empty()) throw std::invalid_argument("extract_multilayer_patch: no channels");
  const int side = channels[0].rows();
  if (row < 0 || col < 0 || row + kKernelSide > side || col + kKernelSide > side) {
    throw std::out_of_range("extract_multilayer_patch: window out of bounds");
  }
  std::vector<double> patch(channels.size() * kKernelCells);
  for (std::size_t m = 0; m < channels.size(); ++m) {
    for (int i = 0; i < kKernelSide; ++i) {
      for (int j = 0; j < kKernelSide; ++j) {
        patch[m * kKernelCells + i * kKernelSide + j] = channels[m](row + i, col + j);
      }
    }
  }
  return patch;
}

// Synthesizes a layer-2 multilayer kernel from a C x 5x5 channel patch.
// Each channel slice is weighted independently with the slice anchor set to
// twice the slice mean, so the slice mean maps to weight 0, empty slices
// contribute nothing, and the kernel's response to a featureless region is
// exactly zero.  Bias is fixed at 0; the kernel is normalized so its response
// to its own source patch equals 255.  Returns nullopt (channel not created)
// when the raw main response is not positive.
inline std::optional<MultiKernel> synth_multikernel(const std::vector<double>& patch) {
  if (patch.empty() || patch.size() % kKernelCells != 0) {
    throw std::invalid_argument("synth_multikernel: patch size must be C*25");
  }
  const int C = static_cast<int>(patch.size() / kKernelCells);
  std::vector<double> w(patch.size(), 0.0);
  for (int m = 0; m < C; ++m) {
    double sum = 0.0;
    for (int i = 0; i < kKernelCells; ++i) sum += patch[m * kKernelCells + i];
    const double anchor = 2.0 * (sum / kKernelCells);
    if (anchor <= 0.0) continue;  // empty slice: weights stay 0
    for (int i = 0; i < kKernelCells; ++i) {
      w[m * kKernelCells + i] = patch[m * kKernelCells + i] * 2.0 / anchor - 1.0;
    }
  }
  double p_main = 0.0;
  for (std::size_t i = 0; i < patch.size(); ++i) p_main += patch[i] * w[i];
  if (p_main <= 0.0) return std::nullopt;
  const double t = p_main / kMaxPixel;
  for (double& x : w) x /= t;
  MultiKernel mk;
  mk.channels = C;
  mk.w = std::move(w);
  mk.bias = 0.0;
  return mk;
}

// Valid convolution of a channel stack with a multilayer kernel + ReLU.
// Output side = input side - 4.
inline RealGrid convolve_layer2(const ChannelStack& channels, const MultiKernel& mk) {
  if (static_cast<int>(channels.size()) != mk.channels) {
    throw std::invalid_argument("convolve_layer2: channel count mismatch (" +
                                std::to_string(channels.size()) + " vs kernel " +
                                std::to_string(mk.channels) + ")");
  }
  const int side = channels[0].rows();
  const int out = side - (kKernelSide - 1);
  RealGrid rc(out, out);
  for (int r = 0; r < out; ++r) {
    for (int c = 0; c < out; ++c) {
      double sum = 0.0;
      for (int m = 0; m < mk.channels; ++m) {
        const RealGrid& ch = channels[m];
        const double* wm = mk.w.data() + static_cast<std::size_t>(m) * kKernelCells;
        for (int i = 0; i < kKernelSide; ++i) {
          for (int j = 0; j < kKernelSide; ++j) {
            sum += ch(r + i, c + j) * wm[i * kKernelSide + j];
          }
        }
      }
      const double v = sum - mk.bias;
      rc(r, c) = v > 0.0 ? v : 0.0;
    }
  }
  return rc;
}

// ---------------------------------------------------------------------------
// End-to-end construction
// ---------------------------------------------------------------------------

// Everything produced while constructing the convolutional part, including
// intermediate stages kept for inspection/export.
struct ConvNet {
  BuildConfig cfg;
  std::vector<ConvKernel> layer1;
  std::vector<MultiKernel> layer2;

  // Stage data. scan_channels: per-exemplar 24x24 boundary-feature grids.
  std::vector<FeatureChannel> scan_channels;
  // Layer-1 real channels at the resolution layer 2 consumes (pooled when
  // configured): per exemplar when use_image_channels, else one merged set.
  std::vector<ChannelStack> exemplar_l1_channels;
  ChannelStack merged_channels;
  // Stage-2 feature channels after thinning/pooling (per exemplar), or the
  // single merged one.
  std::vector<FeatureChannel> stage2_channels;
  // Candidate grids that seeded layer-2 synthesis (kept for inspection).
  std::vector<FeatureChannel> stage3_channels;
  // Final layer-2 real channels per exemplar (the classifier head's input).
  std::vector<ChannelStack> final_channels;
};

// Runs the convolutional part on one image with frozen kernels.
inline ChannelStack forward_channels(const BinaryImage& img,
                                     const std::vector<ConvKernel>& layer1,
                                     const std::vector<MultiKernel>& layer2,
                                     bool use_pooling) {
  ChannelStack s1;
  s1.reserve(layer1.size());
  for (const auto& k : layer1) s1.push_back(convolve_layer1(img, k));
  if (use_pooling) {
    for (auto& ch : s1) ch = max_pool(ch);
  }
  ChannelStack out;
  out.reserve(layer2.size());
  for (const auto& mk : layer2) out.push_back(convolve_layer2(s1, mk));
  return out;
}

namespace detail {

inline FeatureChannel or_positive(const ChannelStack& stack) {
  FeatureChannel fc(stack[0].rows(), stack[0].cols(), 0);
  for (const auto& ch : stack) {
    for (int r = 0; r < ch.rows(); ++r) {
      for (int c = 0; c < ch.cols(); ++c) {
        if (ch(r, c) > 0.0) fc(r, c) = 1;
      }
    }
  }
  return fc;
}

inline RealGrid channel_max(const ChannelStack& stack) {
  RealGrid mx(stack[0].rows(), stack[0].cols(), 0.0);
  for (const auto& ch : stack) {
    for (int r = 0; r < ch.rows(); ++r) {
      for (int c = 0; c < ch.cols(); ++c) {
        if (ch(r, c) > mx(r, c)) mx(r, c) = ch(r, c);
      }
    }
  }
  return mx;
}

}  // namespace detail

// Builds both convolutional layers from an exemplar set.
//
// Layer 1: boundary features are scanned per exemplar; features are visited
// exemplar-by-exemplar in class order, cells in row-major order.  Each still-
// marked feature yields a kernel (unless skipped by the p_main test); the
// kernel is then convolved with every exemplar and every feature mark whose
// response exceeds l1_consume_threshold is reset — one kernel represents all
// features it already detects, which is what keeps the kernel inventory small.
//
// Layer 2 repeats the scheme on the (optionally pooled) layer-1 channels with
// multilayer kernels and l2_consume_threshold.  In the merged variant each
// kernel writes a single channel holding the maximum response across
// exemplars, and per-exemplar final channels are manufactured afterwards by
// re-feeding each exemplar through the frozen kernels.
inline ConvNet build_convnet(const ExemplarSet& exemplars, const BuildConfig& cfg) {
  cfg.validate();
  const int N = exemplars.size();
  if (N < 2) throw std::invalid_argument("build_convnet: need at least 2 exemplars");

  ConvNet net;
  net.cfg = cfg;

  // ---- Layer 1 ----
  net.scan_channels.reserve(N);
  for (int e = 0; e < N; ++e) {
    net.scan_channels.push_back(scan_boundary_features(exemplars.images[e], cfg.scan_step));
  }
  std::vector<FeatureChannel> z = net.scan_channels;  // consumable copy
  std::vector<ChannelStack> chans(N);                 // per-exemplar channels (24x24)
  ChannelStack merged;                                // merged variant channels (24x24)

  const int scan_side = z[0].rows();
  for (int e = 0; e < N; ++e) {
    for (int r = 0; r < scan_side; ++r) {
      for (int c = 0; c < scan_side; ++c) {
        if (!z[e](r, c)) continue;
        const Patch5 patch = extract_patch(exemplars.images[e].pixels, r, c);
        auto maybe = correct_kernel(patch, cfg.K);
        if (!maybe) continue;  // feature skipped
        ConvKernel k = *maybe;
        k.owner = e;
        k.row = r;
        k.col = c;

        std::vector<RealGrid> responses(N);
        for (int t = 0; t < N; ++t) {
          responses[t] = convolve_layer1(exemplars.images[t], k);
          for (int rr = 0; rr < responses[t].rows(); ++rr) {
            for (int cc = 0; cc < responses[t].cols(); ++cc) {
              if (responses[t](rr, cc) > cfg.l1_consume_threshold) z[t](rr, cc) = 0;
            }
          }
        }
        if (cfg.use_image_channels) {
          for (int t = 0; t < N; ++t) chans[t].push_back(std::move(responses[t]));
        } else {
          RealGrid mx = responses[0];
          for (int t = 1; t < N; ++t) {
            for (int rr = 0; rr < mx.rows(); ++rr) {
              for (int cc = 0; cc < mx.cols(); ++cc) {
                if (responses[t](rr, cc) > mx(rr, cc)) mx(rr, cc) = responses[t](rr, cc);
              }
            }
          }
          merged.push_back(std::move(mx));
        }
        net.layer1.push_back(k);
      }
    }
  }
  if (net.layer1.empty()) {
    throw std::runtime_error("build_convnet: no layer-1 kernels were created");
  }

  // ---- Stage-2 feature channels and layer 2 ----
  if (cfg.use_image_channels) {
    std::vector<ChannelStack> stacks = std::move(chans);
    std::vector<FeatureChannel> z2(N);
    for (int e = 0; e < N; ++e) z2[e] = detail::or_positive(stacks[e]);

    if (cfg.use_pooling) {
      for (int e = 0; e < N; ++e) {
        z2[e] = thin_features(z2[e], detail::channel_max(stacks[e]), cfg.thin_min_value,
                              cfg.thin_min_distance);
        for (auto& ch : stacks[e]) ch = max_pool(ch);
        z2[e] = pool_feature_channel(z2[e]);
        if (cfg.pooled_rethin) {
          z2[e] = thin_features_distance_only(z2[e], cfg.thin_min_distance);
        }
      }
    } else {
      for (int e = 0; e < N; ++e) {
        z2[e] = thin_features(z2[e], detail::channel_max(stacks[e]), cfg.thin_min_value,
                              cfg.thin_min_distance);
      }
    }
    net.stage2_channels = z2;

    std::vector<FeatureChannel> cand(N);
    for (int e = 0; e < N; ++e) cand[e] = convolve_feature_channel(z2[e]);
    net.stage3_channels = cand;

    const int cand_side = cand[0].rows();
    for (int e = 0; e < N; ++e) {
      for (int r = 0; r < cand_side; ++r) {
        for (int c = 0; c < cand_side; ++c) {
          if (!cand[e](r, c)) continue;
          auto maybe = synth_multikernel(extract_multilayer_patch(stacks[e], r, c));
          if (!maybe) continue;  // channel not created
          MultiKernel mk = *maybe;
          mk.owner = e;
          mk.row = r;
          mk.col = c;
          for (int t = 0; t < N; ++t) {
            const RealGrid rc2 = convolve_layer2(stacks[t], mk);
            for (int rr = 0; rr < rc2.rows(); ++rr) {
              for (int cc = 0; cc < rc2.cols(); ++cc) {
                if (rc2(rr, cc) > cfg.l2_consume_threshold) cand[t](rr, cc) = 0;
              }
            }
          }
          net.layer2.push_back(std::move(mk));
        }
      }
    }
    net.exemplar_l1_channels = std::move(stacks);
  } else {
    ChannelStack mstack = std::move(merged);
    FeatureChannel z2 = detail::or_positive(mstack);
    if (cfg.use_pooling) {
      for (auto& ch : mstack) ch = max_pool(ch);
      z2 = pool_feature_channel(z2);
    }
    // No thinning in the merged variant: merging already collapses the
    // feature supply, and thinning on top of it starves layer 2.
    net.stage2_channels = {z2};

    FeatureChannel cand = convolve_feature_channel(z2);
    net.stage3_channels = {cand};

    const int cand_side = cand.rows();
    for (int r = 0; r < cand_side; ++r) {
      for (int c = 0; c < cand_side; ++c) {
        if (!cand(r, c)) continue;
        auto maybe = synth_multikernel(extract_multilayer_patch(mstack, r, c));
        if (!maybe) continue;
        MultiKernel mk = *maybe;
        mk.owner = -1;
        mk.row = r;
        mk.col = c;
        const RealGrid rc2 = convolve_layer2(mstack, mk);
        for (int rr = 0; rr < rc2.rows(); ++rr) {
          for (int cc = 0; cc < rc2.cols(); ++cc) {
            if (rc2(rr, cc) > cfg.l2_consume_threshold) cand(rr, cc) = 0;
          }
        }
        net.layer2.push_back(std::move(mk));
      }
    }
    net.merged_channels = std::move(mstack);
  }
  if (net.layer2.empty()) {
    throw std::runtime_error("build_convnet: no layer-2 kernels were created");
  }

  // ---- Final channels: re-feed each exemplar through the frozen kernels so
  // stored channels match forward passes bit-exactly. ----
  net.final_channels.resize(N);
  for (int e = 0; e < N; ++e) {
    net.final_channels[e] =
        forward_channels(exemplars.images[e], net.layer1, net.layer2, cfg.use_pooling);
  }
  return net;
}

}  // namespace acnn
