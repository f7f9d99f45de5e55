#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "acnn/eval_harness.hpp"
#include "acnn/grid.hpp"
#include "acnn/metric_head.hpp"
#include "acnn/mnist_io.hpp"

namespace acnn {

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

template <typename T>
inline std::string grid_to_csv(const Grid<T>& g) {
  std::ostringstream os;
  os << std::setprecision(17);
  for (int r = 0; r < g.rows(); ++r) {
    for (int c = 0; c < g.cols(); ++c) {
      if (c) os << ",";
      if constexpr (std::is_same_v<T, std::uint8_t>) {
        os << static_cast<int>(g(r, c));
      } else {
        os << g(r, c);
      }
    }
    os << "\n";
  }
  return os.str();
}

inline std::string confusion_to_csv(const EvalReport& rep) {
  std::ostringstream os;
  os << "true\\predicted";
  for (int c = 0; c < 10; ++c) os << "," << c;
  os << "\n";
  for (int t = 0; t < 10; ++t) {
    os << t;
    for (int c = 0; c < 10; ++c) os << "," << rep.confusion[t][c];
    os << "\n";
  }
  return os.str();
}

inline std::string scores_to_csv(const std::vector<ScoreRow>& rows) {
  std::ostringstream os;
  os << "index,label,predicted";
  for (int k = 0; k < 10; ++k) os << ",net" << k;
  os << "\n";
  os << std::setprecision(17);
  for (const auto& row : rows) {
    os << row.index << "," << row.label << "," << row.predicted;
    for (double v : row.nets) os << "," << v;
    os << "\n";
  }
  return os.str();
}

// First-layer thresholds as a 10x10 table, diagonal empty.
inline std::string thresholds_to_csv(const MetricHead& head) {
  std::ostringstream os;
  os << "n1\\n2";
  for (int b = 0; b < head.n_img; ++b) os << "," << b;
  os << "\n";
  os << std::setprecision(17);
  for (int a = 0; a < head.n_img; ++a) {
    os << a;
    for (int b = 0; b < head.n_img; ++b) {
      os << ",";
      if (a != b) os << head.Wh1_at(a, b);
    }
    os << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// PGM (binary, 8-bit, values clamped to [0, 255])
// ---------------------------------------------------------------------------

template <typename T>
inline std::string grid_to_pgm(const Grid<T>& g) {
  std::string s = "P5\n" + std::to_string(g.cols()) + " " + std::to_string(g.rows()) + "\n255\n";
  s.reserve(s.size() + g.size());
  for (int r = 0; r < g.rows(); ++r) {
    for (int c = 0; c < g.cols(); ++c) {
      double v = static_cast<double>(g(r, c));
      v = std::clamp(v, 0.0, 255.0);
      s.push_back(static_cast<char>(static_cast<std::uint8_t>(std::lround(v))));
    }
  }
  return s;
}

// Kernel weights visualized over the full [0,255] range: the weight span is
// mapped linearly so the most negative weight renders black and the most
// positive white.
inline ByteGrid kernel_to_bytes(const double* w, int side) {
  double lo = w[0], hi = w[0];
  for (int i = 1; i < side * side; ++i) {
    lo = std::min(lo, w[i]);
    hi = std::max(hi, w[i]);
  }
  const double span = (hi > lo) ? (hi - lo) : 1.0;
  ByteGrid g(side, side);
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      const double t = (w[r * side + c] - lo) / span;
      g(r, c) = static_cast<std::uint8_t>(std::lround(255.0 * t));
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// File helpers
// ---------------------------------------------------------------------------

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open for writing: " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw io_error("write failed: " + path);
}

}  // namespace acnn
