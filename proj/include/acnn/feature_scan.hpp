#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "acnn/grid.hpp"
#include "acnn/mnist_io.hpp"

namespace acnn {

// A binary feature channel: 1 marks the upper-left corner of a 5x5 patch
// whose contents qualify as a feature at the current stage.
using FeatureChannel = ByteGrid;

inline constexpr int kKernelSide = 5;
inline constexpr int kScanStep = 2;
inline constexpr double kThinMinValue = 127.0;
inline constexpr int kThinMinDistance = 5;

// ---------------------------------------------------------------------------
// Stage-1 feature detection on binary images
// ---------------------------------------------------------------------------

// Scans all 5x5 patches of a binarized image with the given step (both axes)
// and marks the patch origin when the central 2x2 subarray (rows +2..+3,
// cols +2..+3 from the origin) contains at least one 0 and at least one 255 —
// i.e. the patch straddles an ink/background boundary.  Output is the full
// 24x24 origin grid; origins not visited by the stepped scan stay 0.
inline FeatureChannel scan_boundary_features(const BinaryImage& img, int step = kScanStep) {
  if (step < 1) throw std::invalid_argument("scan step must be >= 1");
  const int out = img.pixels.rows() - (kKernelSide - 1);
  FeatureChannel fc(out, out, 0);
  for (int r = 0; r < out; r += step) {
    for (int c = 0; c < out; c += step) {
      bool has0 = false, has255 = false;
      for (int i = 2; i <= 3; ++i) {
        for (int j = 2; j <= 3; ++j) {
          const std::uint8_t v = img.pixels(r + i, c + j);
          has0 |= (v == 0);
          has255 |= (v == 255);
        }
      }
      if (has0 && has255) fc(r, c) = 1;
    }
  }
  return fc;
}

// ---------------------------------------------------------------------------
// Stage-2 feature channels from real channels
// ---------------------------------------------------------------------------

// Marks every cell whose neuron state is positive.
inline FeatureChannel build_layer2_feature_channel(const RealGrid& real) {
  FeatureChannel fc(real.rows(), real.cols(), 0);
  for (int r = 0; r < real.rows(); ++r) {
    for (int c = 0; c < real.cols(); ++c) {
      if (real(r, c) > 0.0) fc(r, c) = 1;
    }
  }
  return fc;
}

// Thins a feature channel: drops marks whose real-channel value is below
// min_value, then drops marks within Chebyshev distance < min_distance of an
// already-kept mark.  Scan order is row-major, first mark wins.
inline FeatureChannel thin_features(const FeatureChannel& fc, const RealGrid& real,
                                    double min_value = kThinMinValue,
                                    int min_distance = kThinMinDistance) {
  if (fc.rows() != real.rows() || fc.cols() != real.cols()) {
    throw std::invalid_argument("thin_features: dimension mismatch");
  }
  FeatureChannel out(fc.rows(), fc.cols(), 0);
  std::vector<std::pair<int, int>> kept;
  for (int r = 0; r < fc.rows(); ++r) {
    for (int c = 0; c < fc.cols(); ++c) {
      if (!fc(r, c)) continue;
      if (real(r, c) < min_value) continue;
      bool crowded = false;
      for (const auto& [kr, kc] : kept) {
        if (std::abs(kr - r) < min_distance && std::abs(kc - c) < min_distance) {
          crowded = true;
          break;
        }
      }
      if (crowded) continue;
      kept.emplace_back(r, c);
      out(r, c) = 1;
    }
  }
  return out;
}

// Distance-only thinning pass (no value test), same precedence rule.  Used to
// re-enforce the spacing rule on the halved grid after feature pooling, where
// marks that were >= min_distance apart can land closer together.
inline FeatureChannel thin_features_distance_only(const FeatureChannel& fc,
                                                  int min_distance = kThinMinDistance) {
  FeatureChannel out(fc.rows(), fc.cols(), 0);
  std::vector<std::pair<int, int>> kept;
  for (int r = 0; r < fc.rows(); ++r) {
    for (int c = 0; c < fc.cols(); ++c) {
      if (!fc(r, c)) continue;
      bool crowded = false;
      for (const auto& [kr, kc] : kept) {
        if (std::abs(kr - r) < min_distance && std::abs(kc - c) < min_distance) {
          crowded = true;
          break;
        }
      }
      if (crowded) continue;
      kept.emplace_back(r, c);
      out(r, c) = 1;
    }
  }
  return out;
}

// 2x2 pooling of a binary feature channel: an output cell is 1 when its 2x2
// source block contains at least one 1.  Requires even dimensions.
inline FeatureChannel pool_feature_channel(const FeatureChannel& fc) {
  if (fc.rows() % 2 != 0 || fc.cols() % 2 != 0) {
    throw std::invalid_argument("pool_feature_channel: dimensions must be even");
  }
  FeatureChannel out(fc.rows() / 2, fc.cols() / 2, 0);
  for (int r = 0; r < out.rows(); ++r) {
    for (int c = 0; c < out.cols(); ++c) {
      if (fc(2 * r, 2 * c) || fc(2 * r, 2 * c + 1) || fc(2 * r + 1, 2 * c) ||
          fc(2 * r + 1, 2 * c + 1)) {
        out(r, c) = 1;
      }
    }
  }
  return out;
}

// Produces the next stage's candidate grid: output cell (r,c) is 1 when the
// central 2x2 of the 5x5 window at (r,c) contains at least one 1.  Shrinks
// each dimension by 4 (e.g. 12x12 -> 8x8, 24x24 -> 20x20).
inline FeatureChannel convolve_feature_channel(const FeatureChannel& fc) {
  const int out_side = fc.rows() - (kKernelSide - 1);
  if (out_side <= 0 || fc.rows() != fc.cols()) {
    throw std::invalid_argument("convolve_feature_channel: input too small or not square");
  }
  FeatureChannel out(out_side, out_side, 0);
  for (int r = 0; r < out_side; ++r) {
    for (int c = 0; c < out_side; ++c) {
      if (fc(r + 2, c + 2) || fc(r + 2, c + 3) || fc(r + 3, c + 2) || fc(r + 3, c + 3)) {
        out(r, c) = 1;
      }
    }
  }
  return out;
}

// Count of set cells, used in reports and tests.
inline int count_marks(const FeatureChannel& fc) {
  int n = 0;
  for (auto v : fc) n += (v != 0);
  return n;
}

}  // namespace acnn
