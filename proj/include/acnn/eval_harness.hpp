#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdint>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "acnn/network_runtime.hpp"

namespace acnn {

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct EvalReport {
  // Config echo.
  double K = 0.0;
  bool use_pooling = false;
  bool use_image_channels = false;
  std::uint32_t seed = 0;  // 0 when exemplars were given explicitly
  std::vector<int> exemplar_indices;

  // Counts.
  int layer1_kernels = 0;
  int layer2_kernels = 0;
  int layer1_channels = 0;  // stored channels (kernels x exemplars, or kernels)
  int layer2_channels = 0;

  // Results.
  int n_test = 0;
  int n_correct = 0;
  std::array<std::array<int, 10>, 10> confusion{};  // [true][predicted]
  int exemplar_hits = 0;  // exemplars that sit inside the evaluated slice
  double build_seconds = 0.0;
  double eval_seconds = 0.0;

  double accuracy() const { return n_test > 0 ? static_cast<double>(n_correct) / n_test : 0.0; }
};

// Per-image classification record (for score exports).
struct ScoreRow {
  int index = 0;
  int label = -1;
  int predicted = 0;
  std::vector<double> nets;
};

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

// Classifies the first `limit` images and fills a report.  The forward pass is
// pure, so images are partitioned across `threads` workers; results are merged
// in index order and identical for any thread count.
inline EvalReport evaluate(const AnalyticNetwork& net, const std::vector<BinaryImage>& images,
                           const std::vector<int>& labels, int limit = 1000, int threads = 0,
                           std::vector<ScoreRow>* scores = nullptr) {
  if (images.size() != labels.size()) {
    throw std::invalid_argument("evaluate: image/label count mismatch");
  }
  const int n = std::min<int>(limit, static_cast<int>(images.size()));
  if (threads <= 0) {
    threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads <= 0) threads = 1;
  }
  threads = std::min(threads, std::max(1, n));

  EvalReport rep;
  rep.K = net.cfg.K;
  rep.use_pooling = net.cfg.use_pooling;
  rep.use_image_channels = net.cfg.use_image_channels;
  rep.exemplar_indices = net.exemplar_indices;
  rep.layer1_kernels = static_cast<int>(net.layer1.size());
  rep.layer2_kernels = static_cast<int>(net.layer2.size());
  const int n_img = std::max(1, net.head.n_img);
  rep.layer1_channels =
      net.cfg.use_image_channels ? rep.layer1_kernels * n_img : rep.layer1_kernels;
  rep.layer2_channels =
      net.cfg.use_image_channels ? rep.layer2_kernels * n_img : rep.layer2_kernels;
  rep.build_seconds = net.build_seconds;
  rep.n_test = n;
  for (int idx : net.exemplar_indices) {
    if (idx >= 0 && idx < n) ++rep.exemplar_hits;
  }

  std::vector<int> predicted(n, 0);
  std::vector<std::vector<double>> all_nets;
  if (scores) all_nets.assign(n, {});

  const auto t0 = std::chrono::steady_clock::now();
  auto worker = [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      ForwardResult fr = forward(net, images[i]);
      predicted[i] = fr.cls;
      if (scores) all_nets[i] = std::move(fr.nets);
    }
  };
  if (threads == 1) {
    worker(0, n);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const int begin = t * chunk;
      const int end = std::min(n, begin + chunk);
      if (begin < end) pool.emplace_back(worker, begin, end);
    }
    for (auto& th : pool) th.join();
  }
  rep.eval_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  for (int i = 0; i < n; ++i) {
    const int lbl = labels[i];
    if (lbl >= 0 && lbl < 10 && predicted[i] >= 0 && predicted[i] < 10) {
      rep.confusion[lbl][predicted[i]] += 1;
    }
    if (predicted[i] == labels[i]) ++rep.n_correct;
    if (scores) {
      ScoreRow row;
      row.index = i;
      row.label = labels[i];
      row.predicted = predicted[i];
      row.nets = std::move(all_nets[i]);
      scores->push_back(std::move(row));
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Sweep
// ---------------------------------------------------------------------------

// Builds and evaluates every (config, seed) combination.
inline std::vector<EvalReport> sweep(const std::vector<BuildConfig>& configs,
                                     const std::vector<std::uint32_t>& seeds,
                                     const std::vector<BinaryImage>& images,
                                     const std::vector<int>& labels, int limit = 1000,
                                     int threads = 0) {
  std::vector<EvalReport> reports;
  reports.reserve(configs.size() * seeds.size());
  for (const auto& cfg : configs) {
    for (const auto seed : seeds) {
      ExemplarSet ex = select_exemplars(images, seed);
      AnalyticNetwork net = build_network(ex, cfg);
      EvalReport rep = evaluate(net, images, labels, limit, threads);
      rep.seed = seed;
      reports.push_back(std::move(rep));
    }
  }
  return reports;
}

// ---------------------------------------------------------------------------
// Formatting
// ---------------------------------------------------------------------------

inline std::string format_report(const EvalReport& r) {
  std::ostringstream os;
  os << "configuration: K=" << r.K << "%, pooling=" << (r.use_pooling ? "on" : "off")
     << ", channels=" << (r.use_image_channels ? "per-exemplar" : "merged") << "\n";
  if (r.seed != 0) os << "seed: " << r.seed << "\n";
  os << "exemplar indices:";
  for (int idx : r.exemplar_indices) os << " " << idx;
  os << "\n";
  os << "kernels: layer1=" << r.layer1_kernels << " layer2=" << r.layer2_kernels << "\n";
  os << "stored channels: layer1=" << r.layer1_channels << " layer2=" << r.layer2_channels
     << "\n";
  os << "build time: " << std::fixed << std::setprecision(3) << r.build_seconds << " s\n";
  os << "evaluated: " << r.n_test << " images in " << std::fixed << std::setprecision(3)
     << r.eval_seconds << " s\n";
  os << "correct: " << r.n_correct << " (" << std::fixed << std::setprecision(1)
     << 100.0 * r.accuracy() << "%)\n";
  os << "exemplars inside evaluated slice: " << r.exemplar_hits << "\n";
  os << "confusion matrix (rows = true class, cols = predicted):\n";
  os << "      ";
  for (int c = 0; c < 10; ++c) os << std::setw(5) << c;
  os << "\n";
  for (int t = 0; t < 10; ++t) {
    os << "  " << std::setw(2) << t << " |";
    for (int c = 0; c < 10; ++c) os << std::setw(5) << r.confusion[t][c];
    os << "\n";
  }
  return os.str();
}

inline std::string format_summary_table(const std::vector<EvalReport>& reports) {
  std::ostringstream os;
  os << "  K    pooling  channels      seed  l1  l2   build_s   acc\n";
  for (const auto& r : reports) {
    os << std::defaultfloat << std::setprecision(6) << std::setw(4) << r.K << "  "
       << std::setw(7) << (r.use_pooling ? "on" : "off") << "  "
       << std::setw(12) << (r.use_image_channels ? "per-exemplar" : "merged") << "  "
       << std::setw(4) << r.seed << "  " << std::setw(3) << r.layer1_kernels << " "
       << std::setw(3) << r.layer2_kernels << "  " << std::setw(8) << std::fixed
       << std::setprecision(3) << r.build_seconds << "  " << std::setw(5) << std::fixed
       << std::setprecision(3) << r.accuracy() << "\n";
  }
  return os.str();
}

}  // namespace acnn
