#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "test_support.hpp"

using namespace acnn;
namespace ts = testsupport;

namespace {

// A convenient nontrivial patch: one strong cell, a mid cell, rest empty.
Patch5 sample_patch() {
  Patch5 p{};
  p[0] = 255.0;
  p[7] = 200.0;
  p[12] = 255.0;
  p[18] = 100.0;
  return p;
}

double kernel_response(const Patch5& patch, const ConvKernel& k) {
  double dot = 0.0;
  for (int i = 0; i < kKernelCells; ++i) dot += patch[i] * k.w[i];
  return dot - k.bias;
}

const ConvNet& fixture_net_A() {
  static const ConvNet net = build_convnet(ts::fixture_exemplars(),
                                           config_pooled_image_channels());
  return net;
}

const ConvNet& fixture_net_B() {
  static const ConvNet net = build_convnet(ts::fixture_exemplars(),
                                           config_unpooled_image_channels());
  return net;
}

const ConvNet& fixture_net_C() {
  static const ConvNet net = build_convnet(ts::fixture_exemplars(), config_unpooled_merged());
  return net;
}

}  // namespace

TEST_CASE("weight synthesis maps the pixel range onto [-1, 1]") {
  Patch5 p{};
  p[0] = 0.0;
  p[1] = 255.0;
  p[2] = 127.5;
  const Patch5 w = synth_kernel(p, 255.0);
  CHECK(w[0] == -1.0);
  CHECK(w[1] == 1.0);
  CHECK(w[2] == 0.0);
  CHECK(w[24] == -1.0);  // untouched cells are 0 -> -1

  CHECK_THROWS_AS(synth_kernel(p, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(synth_kernel(p, -5.0), std::invalid_argument);
}

TEST_CASE("bias is K percent of the patch response") {
  Patch5 p{};
  for (auto& v : p) v = 255.0;
  Patch5 w{};
  for (auto& v : w) v = 1.0;
  // dot = 25 * 255 = 6375; 40% of that is 2550.
  CHECK(compute_bias(p, w, 40.0) == Catch::Approx(2550.0).epsilon(1e-12));
  CHECK(compute_bias(p, w, 0.0) == 0.0);
}

TEST_CASE("kernel correction normalizes the own-patch response to 255") {
  const Patch5 patch = sample_patch();
  const auto k = correct_kernel(patch, 40.0);
  REQUIRE(k.has_value());
  CHECK(kernel_response(patch, *k) == Catch::Approx(255.0).epsilon(1e-12));
}

TEST_CASE("kernel correction rescales weights by the raw response ratio") {
  const Patch5 patch = sample_patch();
  const Patch5 w_raw = synth_kernel(patch, kMaxPixel);
  double dot = 0.0;
  for (int i = 0; i < kKernelCells; ++i) dot += patch[i] * w_raw[i];
  const double p_main = dot - compute_bias(patch, w_raw, 40.0);
  REQUIRE(p_main > 0.0);
  const double t = p_main / 255.0;

  const auto k = correct_kernel(patch, 40.0);
  REQUIRE(k.has_value());
  for (int i = 0; i < kKernelCells; ++i) {
    CAPTURE(i);
    CHECK(k->w[i] == Catch::Approx(w_raw[i] / t).margin(1e-14));
  }
}

TEST_CASE("degenerate patches are skipped, not built") {
  // An all-zero patch responds with exactly 0 (weights all -1, dot 0, bias 0).
  Patch5 zero{};
  CHECK_FALSE(correct_kernel(zero, 40.0).has_value());
}

TEST_CASE("layer-1 convolution dimensions and ReLU") {
  const auto& img = ts::canonical_images()[0];
  ConvKernel k;
  for (auto& w : k.w) w = -1.0;  // negative response everywhere
  k.bias = 1.0;
  const RealGrid rc = convolve_layer1(img, k);
  REQUIRE(rc.rows() == 24);
  REQUIRE(rc.cols() == 24);
  for (const double v : rc) REQUIRE(v == 0.0);  // ReLU clamps below zero
}

TEST_CASE("max pooling keeps block maxima and requires even dimensions") {
  RealGrid rc(4, 4, 0.0);
  rc(0, 0) = 1.0;
  rc(0, 1) = 5.0;
  rc(1, 0) = 2.0;
  rc(1, 1) = 3.0;
  rc(2, 2) = -7.0;
  const RealGrid p = max_pool(rc);
  REQUIRE(p.rows() == 2);
  REQUIRE(p.cols() == 2);
  CHECK(p(0, 0) == 5.0);
  CHECK(p(0, 1) == 0.0);
  CHECK(p(1, 1) == 0.0);

  RealGrid odd(3, 4, 0.0);
  CHECK_THROWS_AS(max_pool(odd), std::invalid_argument);
}

TEST_CASE("multilayer kernel synthesis: own response 255, empty slices inert") {
  // Two channels: one active slice, one all-zero slice.
  std::vector<double> patch(2 * kKernelCells, 0.0);
  patch[0] = 300.0;
  patch[7] = 150.0;
  patch[24] = 90.0;

  const auto mk = synth_multikernel(patch);
  REQUIRE(mk.has_value());
  CHECK(mk->channels == 2);
  CHECK(mk->bias == 0.0);

  double dot = 0.0;
  for (std::size_t i = 0; i < patch.size(); ++i) dot += patch[i] * mk->w[i];
  CHECK(dot == Catch::Approx(255.0).epsilon(1e-12));

  for (int i = 0; i < kKernelCells; ++i) {
    CAPTURE(i);
    CHECK(mk->w[kKernelCells + i] == 0.0);  // second slice stayed inert
  }

  SECTION("an all-zero patch is skipped") {
    std::vector<double> zeros(3 * kKernelCells, 0.0);
    CHECK_FALSE(synth_multikernel(zeros).has_value());
  }
  SECTION("patch size must be a multiple of 25") {
    CHECK_THROWS_AS(synth_multikernel(std::vector<double>(24, 1.0)), std::invalid_argument);
    CHECK_THROWS_AS(synth_multikernel(std::vector<double>{}), std::invalid_argument);
  }
}

TEST_CASE("a featureless region yields an exactly zero multikernel response") {
  std::vector<double> patch(2 * kKernelCells, 0.0);
  patch[3] = 120.0;
  patch[30] = 80.0;
  const auto mk = synth_multikernel(patch);
  REQUIRE(mk.has_value());
  ChannelStack blank = {RealGrid(10, 10, 0.0), RealGrid(10, 10, 0.0)};
  const RealGrid rc = convolve_layer2(blank, *mk);
  for (const double v : rc) REQUIRE(v == 0.0);
}

TEST_CASE("layer-2 convolution validates the channel count") {
  // Non-uniform values: a uniform patch synthesizes all-zero weights and is
  // skipped, which is covered elsewhere.
  std::vector<double> patch(2 * kKernelCells, 10.0);
  patch[0] = 200.0;
  patch[26] = 150.0;
  const auto mk = synth_multikernel(patch);
  REQUIRE(mk.has_value());
  ChannelStack wrong = {RealGrid(10, 10, 0.0)};  // 1 channel, kernel wants 2
  CHECK_THROWS_AS(convolve_layer2(wrong, *mk), std::invalid_argument);
}

TEST_CASE("fixture build reproduces the golden kernel counts") {
  const ConvNet& net = fixture_net_A();
  CHECK(net.layer1.size() == 17);
  CHECK(net.layer2.size() == 36);
}

TEST_CASE("every built kernel responds 255 to its own source patch") {
  const ConvNet& net = fixture_net_A();
  const auto exemplars = ts::fixture_exemplars();

  for (std::size_t i = 0; i < net.layer1.size(); ++i) {
    CAPTURE(i);
    const auto& k = net.layer1[i];
    const Patch5 patch = extract_patch(exemplars.images[k.owner].pixels, k.row, k.col);
    REQUIRE(kernel_response(patch, k) == Catch::Approx(255.0).epsilon(1e-9));
  }
  for (std::size_t i = 0; i < net.layer2.size(); ++i) {
    CAPTURE(i);
    const auto& mk = net.layer2[i];
    const auto patch =
        extract_multilayer_patch(net.exemplar_l1_channels[mk.owner], mk.row, mk.col);
    double dot = 0.0;
    for (std::size_t j = 0; j < patch.size(); ++j) dot += patch[j] * mk.w[j];
    REQUIRE(dot - mk.bias == Catch::Approx(255.0).epsilon(1e-9));
  }
}

TEST_CASE("dimension chain: pooled 28-24-12-8, unpooled 28-24-20") {
  const ConvNet& a = fixture_net_A();
  REQUIRE_FALSE(a.scan_channels.empty());
  CHECK(a.scan_channels[0].rows() == 24);
  CHECK(a.exemplar_l1_channels[0][0].rows() == 12);
  CHECK(a.final_channels[0][0].rows() == 8);

  const ConvNet& b = fixture_net_B();
  CHECK(b.exemplar_l1_channels[0][0].rows() == 24);
  CHECK(b.final_channels[0][0].rows() == 20);
}

TEST_CASE("channel accounting multiplies kernels by exemplars") {
  const ConvNet& a = fixture_net_A();
  const int N = 10;
  REQUIRE(static_cast<int>(a.exemplar_l1_channels.size()) == N);
  for (const auto& stack : a.exemplar_l1_channels) {
    REQUIRE(stack.size() == a.layer1.size());
  }
  REQUIRE(static_cast<int>(a.final_channels.size()) == N);
  for (const auto& stack : a.final_channels) {
    REQUIRE(stack.size() == a.layer2.size());
  }

  const ConvNet& c = fixture_net_C();
  CHECK(c.merged_channels.size() == c.layer1.size());
  CHECK(c.exemplar_l1_channels.empty());
  for (const auto& stack : c.final_channels) {
    REQUIRE(stack.size() == c.layer2.size());
  }
}

TEST_CASE("merged channels hold the pointwise exemplar maximum") {
  const ConvNet& c = fixture_net_C();
  const auto exemplars = ts::fixture_exemplars();
  // Recompute a few merged channels directly from the frozen kernels.
  for (std::size_t ki : {std::size_t{0}, c.layer1.size() - 1}) {
    std::vector<RealGrid> responses;
    for (int e = 0; e < exemplars.size(); ++e) {
      responses.push_back(convolve_layer1(exemplars.images[e], c.layer1[ki]));
    }
    const RealGrid& merged = c.merged_channels[ki];
    for (int r = 0; r < merged.rows(); ++r) {
      for (int cc = 0; cc < merged.cols(); ++cc) {
        double mx = 0.0;
        for (const auto& resp : responses) mx = std::max(mx, resp(r, cc));
        REQUIRE(merged(r, cc) == mx);
      }
    }
  }
}

TEST_CASE("stored final channels equal a fresh forward pass bit-exactly") {
  const ConvNet& net = fixture_net_A();
  const auto exemplars = ts::fixture_exemplars();
  for (int e = 0; e < exemplars.size(); ++e) {
    CAPTURE(e);
    const ChannelStack fwd =
        forward_channels(exemplars.images[e], net.layer1, net.layer2, net.cfg.use_pooling);
    REQUIRE(fwd.size() == net.final_channels[e].size());
    for (std::size_t k = 0; k < fwd.size(); ++k) {
      REQUIRE(fwd[k] == net.final_channels[e][k]);
    }
  }
}

TEST_CASE("construction is deterministic") {
  const auto exemplars = ts::fixture_exemplars();
  const BuildConfig cfg = config_pooled_image_channels();
  const ConvNet n1 = build_convnet(exemplars, cfg);
  const ConvNet n2 = build_convnet(exemplars, cfg);
  REQUIRE(n1.layer1.size() == n2.layer1.size());
  for (std::size_t i = 0; i < n1.layer1.size(); ++i) {
    REQUIRE(n1.layer1[i].w == n2.layer1[i].w);
    REQUIRE(n1.layer1[i].bias == n2.layer1[i].bias);
  }
  REQUIRE(n1.layer2.size() == n2.layer2.size());
  for (std::size_t i = 0; i < n1.layer2.size(); ++i) {
    REQUIRE(n1.layer2[i].w == n2.layer2[i].w);
  }
}

TEST_CASE("build validates its configuration and inputs") {
  BuildConfig bad = config_pooled_image_channels();
  bad.K = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad.K = 101.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad.K = 40.0;
  CHECK_NOTHROW(bad.validate());

  ExemplarSet tiny;
  tiny.images.push_back(ts::canonical_images()[0]);
  CHECK_THROWS_AS(build_convnet(tiny, config_pooled_image_channels()), std::invalid_argument);
}
