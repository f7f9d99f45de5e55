#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "acnn/grid.hpp"

namespace acnn {

// ---------------------------------------------------------------------------
// Zero layer
// ---------------------------------------------------------------------------

// Zero-layer weight fields, one stack per exemplar, same shape as the final
// channels.  Used only while constructing the head; classification does not
// need them.
using ZeroLayerWeights = std::vector<ChannelStack>;

// Candidate contribution of a source cell holding value p to a target cell at
// squared grid distance d2: the value decays with 1 + distance^2.
inline double zero_layer_candidate(double p, double d2) { return (p / 1000.0) / (1.0 + d2); }

// For each exemplar channel, every target cell receives the strongest
// contribution over all positive source cells:
//   w0[i][j] = max over (il,jl) with p(il,jl) > 0 of
//              (p(il,jl)/1000) / (1 + (i-il)^2 + (j-jl)^2).
// Cells with no positive source anywhere in the channel get 0.
inline ZeroLayerWeights compute_zero_layer(const std::vector<ChannelStack>& final_channels) {
  ZeroLayerWeights w0(final_channels.size());
  for (std::size_t e = 0; e < final_channels.size(); ++e) {
    w0[e].reserve(final_channels[e].size());
    for (const RealGrid& p : final_channels[e]) {
      const int H = p.rows(), W = p.cols();
      RealGrid field(H, W, 0.0);
      for (int il = 0; il < H; ++il) {
        for (int jl = 0; jl < W; ++jl) {
          const double v = p(il, jl);
          if (v <= 0.0) continue;
          for (int i = 0; i < H; ++i) {
            for (int j = 0; j < W; ++j) {
              const double d2 =
                  static_cast<double>((i - il) * (i - il) + (j - jl) * (j - jl));
              const double cand = zero_layer_candidate(v, d2);
              if (cand > field(i, j)) field(i, j) = cand;
            }
          }
        }
      }
      w0[e].push_back(std::move(field));
    }
  }
  return w0;
}

// ---------------------------------------------------------------------------
// Head (first layer: pairwise comparison neurons; second layer: counting)
// ---------------------------------------------------------------------------

struct ClassifyResult {
  int cls = 0;
  std::vector<double> nets;  // one score per class
};

// Three-layer comparison head.  One first-layer neuron per ordered exemplar
// pair (n1, n2), n1 != n2: its weights are w0[n1] - w0[n2] and its threshold
// is minus the midpoint of the two exemplars' own state sums, so the neuron
// fires exactly when the input is metrically closer to n1 than to n2.  The
// fixed second layer counts, per class k, how many of its 9 comparisons fired.
struct MetricHead {
  int n_img = 0;
  int channels = 0;
  int height = 0;
  int width = 0;
  // Pair weights, indexed by pair_index(n1, n2): n_pairs() blocks of
  // channels*height*width doubles.
  std::vector<double> w1;
  // Firing thresholds per ordered pair.
  std::vector<double> Wh1;

  int n_pairs() const { return n_img * (n_img - 1); }
  std::size_t field_size() const {
    return static_cast<std::size_t>(channels) * height * width;
  }
  // Ordered pairs enumerate as (0,1), (0,2), ..., skipping the diagonal.
  int pair_index(int n1, int n2) const {
    return n1 * (n_img - 1) + (n2 < n1 ? n2 : n2 - 1);
  }
  const double* w1_at(int n1, int n2) const {
    return w1.data() + static_cast<std::size_t>(pair_index(n1, n2)) * field_size();
  }
  double Wh1_at(int n1, int n2) const { return Wh1[pair_index(n1, n2)]; }

  // Second layer: w2[k][(n1,n2)] = 1 iff n1 == k.
  static int second_layer_weight(int cls, int n1, int /*n2*/) { return n1 == cls ? 1 : 0; }
  int Wh2() const { return -(n_img - 1); }
};

namespace detail {

inline double dot_stack(const ChannelStack& stack, const double* w) {
  double s = 0.0;
  std::size_t off = 0;
  for (const RealGrid& ch : stack) {
    const double* p = ch.data();
    const std::size_t n = ch.size();
    for (std::size_t i = 0; i < n; ++i) s += p[i] * w[off + i];
    off += n;
  }
  return s;
}

}  // namespace detail

// Builds the head from the per-exemplar final channels.  Zero-layer weights
// are computed, consumed, and discarded here; the finished head carries only
// the pair weights and thresholds.
inline MetricHead build_metric_head(const std::vector<ChannelStack>& final_channels) {
  const int N = static_cast<int>(final_channels.size());
  if (N < 2) throw std::invalid_argument("build_metric_head: need at least 2 exemplars");
  for (const auto& stack : final_channels) {
    if (stack.empty()) throw std::invalid_argument("build_metric_head: empty channel stack");
  }

  MetricHead head;
  head.n_img = N;
  head.channels = static_cast<int>(final_channels[0].size());
  head.height = final_channels[0][0].rows();
  head.width = final_channels[0][0].cols();

  const ZeroLayerWeights w0 = compute_zero_layer(final_channels);

  const std::size_t fs = head.field_size();
  head.w1.assign(static_cast<std::size_t>(head.n_pairs()) * fs, 0.0);
  head.Wh1.assign(head.n_pairs(), 0.0);

  for (int a = 0; a < N; ++a) {
    for (int b = 0; b < N; ++b) {
      if (a == b) continue;
      double* w = head.w1.data() + static_cast<std::size_t>(head.pair_index(a, b)) * fs;
      std::size_t off = 0;
      for (int k = 0; k < head.channels; ++k) {
        const double* wa = w0[a][k].data();
        const double* wb = w0[b][k].data();
        const std::size_t n = w0[a][k].size();
        for (std::size_t i = 0; i < n; ++i) w[off + i] = wa[i] - wb[i];
        off += n;
      }
      const double Sa = detail::dot_stack(final_channels[a], w);
      const double Sb = detail::dot_stack(final_channels[b], w);
      head.Wh1[head.pair_index(a, b)] = -(Sa + Sb) / 2.0;
    }
  }
  return head;
}

// Classifies a final-channel stack.  A first-layer neuron (n1, n2) fires when
// its state sum S plus its threshold is strictly positive; each class net
// counts its own comparisons' firings plus the fixed second-layer threshold
// -(N-1).  Returns the lowest-index class among maximal nets.
inline ClassifyResult classify(const ChannelStack& channels, const MetricHead& head) {
  std::size_t have = 0;
  for (const auto& ch : channels) have += ch.size();
  if (have != head.field_size()) {
    throw std::invalid_argument("classify: channel shape mismatch (got " +
                                std::to_string(have) + " values, head expects " +
                                std::to_string(head.field_size()) + ")");
  }
  ClassifyResult res;
  res.nets.assign(head.n_img, static_cast<double>(head.Wh2()));
  for (int a = 0; a < head.n_img; ++a) {
    for (int b = 0; b < head.n_img; ++b) {
      if (a == b) continue;
      const double S = detail::dot_stack(channels, head.w1_at(a, b));
      if (S + head.Wh1_at(a, b) > 0.0) res.nets[a] += 1.0;
    }
  }
  int best = 0;
  for (int k = 1; k < head.n_img; ++k) {
    if (res.nets[k] > res.nets[best]) best = k;
  }
  res.cls = best;
  return res;
}

}  // namespace acnn
