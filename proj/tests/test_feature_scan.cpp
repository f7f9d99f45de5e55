#include <catch2/catch_amalgamated.hpp>

#include "test_support.hpp"

using namespace acnn;
namespace ts = testsupport;

namespace {

BinaryImage image_from(std::initializer_list<std::pair<int, int>> ink_cells) {
  BinaryImage img;
  img.pixels = ByteGrid(28, 28, 255);  // white background
  for (auto [r, c] : ink_cells) img.pixels(r, c) = 0;
  return img;
}

BinaryImage uniform_image(std::uint8_t v) {
  BinaryImage img;
  img.pixels = ByteGrid(28, 28, v);
  return img;
}

}  // namespace

TEST_CASE("uniform images produce no boundary features") {
  CHECK(count_marks(scan_boundary_features(uniform_image(0), 2)) == 0);
  CHECK(count_marks(scan_boundary_features(uniform_image(255), 2)) == 0);
}

TEST_CASE("scan marks windows whose central 2x2 mixes ink and background") {
  // A single ink pixel at (10, 10): windows whose central 2x2 block covers
  // (10, 10) hold both values.  The block spans rows r+2..r+3, cols c+2..c+3,
  // so candidate corners are r in {7, 8} x c in {7, 8}, subject to the
  // step-2 scan lattice; useful features land on even corners only.
  const BinaryImage img = image_from({{10, 10}});
  const FeatureChannel fc = scan_boundary_features(img, 2);
  REQUIRE(fc.rows() == 24);
  REQUIRE(fc.cols() == 24);

  CHECK(fc(8, 8) == 1);   // central block rows 10..11 x cols 10..11
  CHECK(fc(7, 7) == 0);   // odd corner: off the step-2 lattice
  CHECK(fc(6, 8) == 0);   // central block rows 8..9 misses the ink
  CHECK(count_marks(fc) == 1);
}

TEST_CASE("scan with step 1 visits every corner") {
  const BinaryImage img = image_from({{10, 10}});
  const FeatureChannel fc = scan_boundary_features(img, 1);
  // All four corners whose central 2x2 touches (10, 10).
  CHECK(fc(7, 7) == 1);
  CHECK(fc(7, 8) == 1);
  CHECK(fc(8, 7) == 1);
  CHECK(fc(8, 8) == 1);
  CHECK(count_marks(fc) == 4);
}

TEST_CASE("scan output dimension follows the kernel geometry") {
  const auto& img = ts::canonical_images()[0];
  const FeatureChannel fc = scan_boundary_features(img, 2);
  CHECK(fc.rows() == 28 - 4);
  CHECK(fc.cols() == 28 - 4);
  CHECK(count_marks(fc) > 0);
}

TEST_CASE("thinning keeps first mark row-major and drops close or weak ones") {
  FeatureChannel fc(24, 24, 0);
  RealGrid real(24, 24, 0.0);

  SECTION("marks below the value floor are removed") {
    fc(5, 5) = 1;
    real(5, 5) = 126.0;  // below the 127 floor
    const FeatureChannel out = thin_features(fc, real, 127.0, 5);
    CHECK(count_marks(out) == 0);
  }
  SECTION("value exactly at the floor survives, just below is removed") {
    fc(5, 5) = 1;
    real(5, 5) = 126.999;
    CHECK(count_marks(thin_features(fc, real, 127.0, 5)) == 0);
    real(5, 5) = 127.0;
    CHECK(count_marks(thin_features(fc, real, 127.0, 5)) == 1);
  }
  SECTION("of two nearby marks the row-major-first survives") {
    fc(0, 0) = 1;
    fc(0, 4) = 1;  // Chebyshev distance 4 < 5
    real(0, 0) = 200.0;
    real(0, 4) = 250.0;  // stronger, but visited second
    const FeatureChannel out = thin_features(fc, real, 127.0, 5);
    CHECK(out(0, 0) == 1);
    CHECK(out(0, 4) == 0);
  }
  SECTION("marks at exactly the minimum distance both survive") {
    fc(0, 0) = 1;
    fc(0, 5) = 1;  // Chebyshev distance 5 == min distance
    real(0, 0) = 200.0;
    real(0, 5) = 200.0;
    const FeatureChannel out = thin_features(fc, real, 127.0, 5);
    CHECK(out(0, 0) == 1);
    CHECK(out(0, 5) == 1);
  }
  SECTION("distance is Chebyshev, not Euclidean") {
    fc(0, 0) = 1;
    fc(4, 4) = 1;  // Chebyshev 4, Euclidean ~5.7
    real(0, 0) = 200.0;
    real(4, 4) = 200.0;
    const FeatureChannel out = thin_features(fc, real, 127.0, 5);
    CHECK(out(0, 0) == 1);
    CHECK(out(4, 4) == 0);
  }
  SECTION("distance-only variant ignores values") {
    fc(0, 0) = 1;
    fc(0, 3) = 1;
    const FeatureChannel out = thin_features_distance_only(fc, 5);
    CHECK(out(0, 0) == 1);
    CHECK(out(0, 3) == 0);
  }
}

TEST_CASE("thinning never adds marks and is idempotent") {
  const auto& img = ts::canonical_images()[3];
  const FeatureChannel fc = scan_boundary_features(img, 2);
  RealGrid real(fc.rows(), fc.cols(), 255.0);  // uniform strong responses

  const FeatureChannel once = thin_features(fc, real, 127.0, 5);
  CHECK(count_marks(once) <= count_marks(fc));
  for (int r = 0; r < fc.rows(); ++r) {
    for (int c = 0; c < fc.cols(); ++c) {
      if (once(r, c)) REQUIRE(fc(r, c) == 1);  // subset of the input marks
    }
  }
  const FeatureChannel twice = thin_features(once, real, 127.0, 5);
  CHECK(twice == once);
}

TEST_CASE("feature pooling ORs 2x2 blocks") {
  FeatureChannel fc(24, 24, 0);
  fc(0, 0) = 1;  // block (0,0)
  fc(5, 4) = 1;  // block (2,2)
  fc(5, 5) = 1;  // same block
  const FeatureChannel out = pool_feature_channel(fc);
  REQUIRE(out.rows() == 12);
  REQUIRE(out.cols() == 12);
  CHECK(out(0, 0) == 1);
  CHECK(out(2, 2) == 1);
  CHECK(count_marks(out) == 2);

  FeatureChannel odd(5, 5, 0);
  CHECK_THROWS_AS(pool_feature_channel(odd), std::invalid_argument);
}

TEST_CASE("feature convolution marks windows whose central 2x2 holds a mark") {
  FeatureChannel fc(12, 12, 0);
  fc(3, 3) = 1;
  const FeatureChannel out = convolve_feature_channel(fc);
  REQUIRE(out.rows() == 8);
  REQUIRE(out.cols() == 8);
  // Corners whose central block rows r+2..r+3 x cols c+2..c+3 cover (3, 3).
  CHECK(out(0, 0) == 1);
  CHECK(out(0, 1) == 1);
  CHECK(out(1, 0) == 1);
  CHECK(out(1, 1) == 1);
  CHECK(count_marks(out) == 4);
}

TEST_CASE("layer-2 feature channels binarize positive responses") {
  RealGrid rc(6, 6, 0.0);
  rc(1, 2) = 0.001;
  rc(4, 4) = 500.0;
  rc(5, 5) = -3.0;  // impossible after ReLU but exercises the predicate
  const FeatureChannel fc = build_layer2_feature_channel(rc);
  CHECK(fc(1, 2) == 1);
  CHECK(fc(4, 4) == 1);
  CHECK(fc(5, 5) == 0);
  CHECK(count_marks(fc) == 2);
}
