// Copyright 2026 The distort-forge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "distort_forge/imgcore.hpp"
#include "distort_forge/io.hpp"
#include "support.hpp"

namespace {

using namespace distort_forge;
using df_test::max_abs_diff;
using df_test::random_image;

TEST(Normalize, ZeroAndSaturation) {
  Image8 zeros(8, 8), full(8, 8);
  std::fill(full.data.begin(), full.data.end(), 255);
  for (double v : normalize(zeros).data()) EXPECT_EQ(v, 0.0);
  for (double v : normalize(full).data()) EXPECT_EQ(v, 1.0);
}

TEST(Normalize, MidSample) {
  Image8 img(8, 8);
  img.at(3, 4, 1) = 128;
  EXPECT_DOUBLE_EQ(normalize(img).at(3, 4, 1), 128.0 / 255.0);
}

TEST(Normalize, RejectsTinyRaster) {
  Image8 img(7, 8);
  EXPECT_THROW(normalize(img), DimensionError);
  EXPECT_THROW(Image(8, 4), DimensionError);
}

TEST(Denormalize, Rounding) {
  Image img(8, 8, 0.975);
  img.at(0, 0, 0) = 0.0;
  img.at(1, 0, 0) = 1.0;
  const Image8 b = denormalize(img);
  EXPECT_EQ(b.at(2, 2, 2), 249);
  EXPECT_EQ(b.at(0, 0, 0), 0);
  EXPECT_EQ(b.at(1, 0, 0), 255);
}

TEST(Denormalize, InvertsNormalizeOnEveryByte) {
  Image8 img(16, 16);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<std::uint8_t>(i % 256);
  EXPECT_EQ(denormalize(normalize(img)).data, img.data);
}

TEST(Kernel, RejectsMalformed) {
  EXPECT_THROW(Kernel2D(2, 1, {0.5, 0.5}), ParameterError);
  EXPECT_THROW(Kernel2D(3, 1, {0.5, 0.5, 0.5}), ParameterError);
  EXPECT_THROW(Kernel2D(3, 1, {1.5, -0.5, 0.0}), ParameterError);
  EXPECT_THROW(Kernel2D(3, 1, {0.5, 0.5}), ParameterError);
}

TEST(Convolve, ConstantImageIsFixed) {
  Rng rng(3);
  const Image img(12, 10, 0.4);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> w(9);
    for (double& v : w) v = rng.uniform();
    const double s = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& v : w) v /= s;
    const Image out = convolve(img, Kernel2D(3, 3, w));
    for (double v : out.data()) EXPECT_NEAR(v, 0.4, 1e-15);
  }
}

TEST(Convolve, IdentityKernel) {
  Rng rng(4);
  const Image img = random_image(rng, 9, 11);
  EXPECT_EQ(max_abs_diff(convolve(img, Kernel2D::identity()), img), 0.0);
}

TEST(Convolve, ImpulseUnderBoxGivesPlateau) {
  Image img(9, 9, 0.0);
  img.at(4, 4, 0) = 0.9;
  const Image out = convolve(img, Kernel2D(3, 3, std::vector<double>(9, 1.0 / 9.0)));
  for (int y = 0; y < 9; ++y)
    for (int x = 0; x < 9; ++x) {
      const bool inside = std::abs(x - 4) <= 1 && std::abs(y - 4) <= 1;
      EXPECT_NEAR(out.at(x, y, 0), inside ? 0.1 : 0.0, 1e-15);
    }
}

TEST(Convolve, MatchesNaiveEdgeReplication) {
  Rng rng(5);
  const Image img = random_image(rng, 10, 9);
  std::vector<double> w(15);
  for (double& v : w) v = rng.uniform();
  const double s = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& v : w) v /= s;
  const Image out = convolve(img, Kernel2D(5, 3, w));
  for (int y = 0; y < 9; ++y)
    for (int x = 0; x < 10; ++x)
      for (int c = 0; c < 3; ++c) EXPECT_NEAR(out.at(x, y, c), df_test::naive_filter_at(img, w, 5, 3, x, y, c), 1e-12);
}

TEST(Convolve, MeanPreservedWithinTolerance) {
  Rng rng(6);
  const Image img = random_image(rng, 64, 64);
  const Image out = convolve(img, line_kernel(9, 30.0));
  const auto mean = [](const Image& i) {
    return std::accumulate(i.data().begin(), i.data().end(), 0.0) / static_cast<double>(i.data().size());
  };
  EXPECT_NEAR(mean(out), mean(img), 1e-3);
}

TEST(Convolve, KernelLargerThanImage) {
  const Image img(8, 8, 0.5);
  EXPECT_THROW(convolve(img, line_kernel(9, 0.0)), DimensionError);
}

TEST(LineKernel, LengthOneIsIdentity) {
  for (double a : {0.0, 33.0, 90.0, 271.0}) EXPECT_EQ(line_kernel(1, a), Kernel2D::identity());
}

TEST(LineKernel, AxisAligned) {
  const Kernel2D h = line_kernel(5, 0.0);
  EXPECT_EQ(h.width(), 5);
  EXPECT_EQ(h.height(), 1);
  for (double w : h.weights()) EXPECT_DOUBLE_EQ(w, 0.2);
  const Kernel2D v = line_kernel(5, 90.0);
  EXPECT_EQ(v.width(), 1);
  EXPECT_EQ(v.height(), 5);
  for (double w : v.weights()) EXPECT_DOUBLE_EQ(w, 0.2);
}

TEST(LineKernel, UndirectedAndNormalized) {
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    const int len = static_cast<int>(rng.uniform_int(1, 41));
    const double a = rng.uniform(-360.0, 360.0);
    const Kernel2D k = line_kernel(len, a);
    EXPECT_EQ(k, line_kernel(len, a + 180.0));
    double s = 0.0;
    for (double w : k.weights()) {
      EXPECT_GE(w, 0.0);
      s += w;
    }
    EXPECT_NEAR(s, 1.0, 1e-9);
    EXPECT_EQ(k.width() % 2, 1);
    EXPECT_EQ(k.height() % 2, 1);
  }
}

TEST(LineKernel, Diagonal) {
  const Kernel2D k = line_kernel(3, 45.0);
  ASSERT_EQ(k.width(), 3);
  ASSERT_EQ(k.height(), 3);
  // y-down frame: +45 degrees runs from top-left to bottom-right.
  EXPECT_GT(k.at(0, 0), 0.0);
  EXPECT_GT(k.at(2, 2), 0.0);
  EXPECT_EQ(k.at(2, 0), 0.0);
}

TEST(Gaussian, DeltaLimit) {
  const Kernel2D k = gaussian_kernel(0.01);
  const int c = k.width() / 2;
  EXPECT_NEAR(k.at(c, c), 1.0, 1e-12);
}

TEST(Gaussian, UnitStdCenterWeight) {
  const Kernel2D k = gaussian_kernel(1.0);
  ASSERT_EQ(k.width(), 7);
  double s = 0.0;
  for (int y = -3; y <= 3; ++y)
    for (int x = -3; x <= 3; ++x) s += std::exp(-(x * x + y * y) / 2.0);
  EXPECT_NEAR(k.at(3, 3), 1.0 / s, 1e-12);
  EXPECT_NEAR(k.at(3, 3), 0.1592, 1e-3);
}

TEST(Gaussian, RotationSymmetric) {
  for (double s : {0.3, 1.0, 2.2, 3.38}) {
    const Kernel2D k = gaussian_kernel(s);
    const int n = k.width();
    ASSERT_EQ(n, k.height());
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) EXPECT_DOUBLE_EQ(k.at(x, y), k.at(n - 1 - y, x));
  }
}

TEST(Gaussian, SeparableMatchesDense) {
  Rng rng(8);
  const Image img = random_image(rng, 40, 33);
  for (double s : {0.7, 1.5, 3.38}) {
    EXPECT_LT(max_abs_diff(gaussian_blur(img, s), convolve(img, gaussian_kernel(s))), 1e-6);
  }
}

TEST(Gaussian, StdLimitForSmallImages) {
  const Image img(8, 8, 0.3);
  EXPECT_NO_THROW(gaussian_blur(img, max_gaussian_std(8, 8)));
  EXPECT_THROW(gaussian_blur(img, 2.0), DimensionError);
}

TEST(ScreenBlend, Identities) {
  Rng rng(9);
  const Image img = random_image(rng, 8, 8);
  EXPECT_EQ(max_abs_diff(screen_blend(img, Plane(8, 8, 0.0), 0.7), img), 0.0);
  const Image black(8, 8, 0.0);
  for (double v : screen_blend(black, Plane(8, 8, 1.0), 1.0).data()) EXPECT_DOUBLE_EQ(v, 1.0);
  const Image gray(8, 8, 0.5);
  for (double v : screen_blend(gray, Plane(8, 8, 0.5), 0.8).data()) EXPECT_NEAR(v, 0.7, 1e-15);
}

TEST(ScreenBlend, MonotoneAndBounded) {
  Rng rng(10);
  for (int t = 0; t < 50; ++t) {
    const Image img = random_image(rng, 8, 9);
    Plane m = df_test::random_plane(rng, 8, 9);
    for (int i = 0; i < 10; ++i) m.values()[i] = 0.0;
    const double alpha = rng.uniform();
    const Image out = screen_blend(img, m, alpha);
    for (int y = 0; y < 9; ++y)
      for (int x = 0; x < 8; ++x)
        for (int c = 0; c < 3; ++c) {
          const double o = out.at(x, y, c), in = img.at(x, y, c);
          EXPECT_GE(o, in);
          EXPECT_LE(o, 1.0);
          if (alpha * m.at(x, y) == 0.0) {
            EXPECT_EQ(o, in);
          } else if (in < 1.0) {
            EXPECT_GT(o, in);
          }
        }
  }
}

TEST(ScreenBlend, RejectsBadAlphaAndSize) {
  const Image img(8, 8, 0.5);
  EXPECT_THROW(screen_blend(img, Plane(8, 8, 0.5), 1.5), ParameterError);
  EXPECT_THROW(screen_blend(img, Plane(9, 8, 0.5), 0.5), DimensionError);
}

TEST(Luma, KnownValues) {
  Image img(8, 8, 0.37);
  img.at(0, 0, 0) = 1.0;
  img.at(0, 0, 1) = 0.0;
  img.at(0, 0, 2) = 0.0;
  const Plane l = rgb_to_luma(img);
  EXPECT_NEAR(l.at(1, 1), 0.37, 1e-15);
  EXPECT_DOUBLE_EQ(l.at(0, 0), 0.299);
}

TEST(Luma, ReplaceRoundTrip) {
  Rng rng(11);
  const Image img = random_image(rng, 12, 12);
  EXPECT_LT(max_abs_diff(luma_replace(img, rgb_to_luma(img)), img), 1e-12);
}

TEST(Luma, ReplaceHitsTarget) {
  Rng rng(12);
  const Image img = random_image(rng, 12, 12);
  const Plane target = df_test::random_plane(rng, 12, 12);
  const Plane got = rgb_to_luma(luma_replace(img, target));
  for (std::size_t i = 0; i < got.values().size(); ++i) EXPECT_NEAR(got.values()[i], target.values()[i], 1e-9);
}

TEST(Feather, InteriorExactBandLinear) {
  const BitMask m = df_test::rect_mask(20, 20, {5, 5, 10, 10});
  const Plane a = feather(m);
  EXPECT_EQ(a.at(9, 9), 1.0);
  EXPECT_EQ(a.at(0, 0), 0.0);
  EXPECT_EQ(a.at(3, 9), 0.0);
  EXPECT_GT(a.at(4, 9), 0.0);
  EXPECT_LT(a.at(5, 9), 1.0);
  EXPECT_EQ(a.at(6, 9), 1.0);
}

TEST(Png, RoundTrip) {
  const auto dir = df_test::temp_dir("png_roundtrip");
  Image8 img(13, 9);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<std::uint8_t>((i * 37) % 256);
  io::write_png_rgb(dir / "a.png", img);
  const Image8 back = io::read_image_rgb(dir / "a.png");
  EXPECT_EQ(back.width, 13);
  EXPECT_EQ(back.data, img.data);
}

TEST(Png, GrayAndRawDepth) {
  const auto dir = df_test::temp_dir("png_gray");
  std::vector<std::uint16_t> samples(64);
  for (std::size_t i = 0; i < samples.size(); ++i) samples[i] = static_cast<std::uint16_t>(i * 1000);
  io::write_png_gray16(dir / "d.png", 8, 8, samples);
  int bits = 0;
  const Plane p = io::read_png_gray(dir / "d.png", &bits);
  EXPECT_EQ(bits, 16);
  EXPECT_EQ(p.at(7, 7), 63000.0);
  Plane raw(9, 8, 0.25);
  raw.at(3, 3) = 7.5;
  io::write_depth_raw(dir / "d.raw", raw);
  const Plane back = io::read_depth_file(dir / "d.raw");
  EXPECT_EQ(back.width(), 9);
  EXPECT_EQ(back.at(3, 3), 7.5);
  EXPECT_EQ(back.at(0, 0), 0.25);
}

TEST(Png, GarbageIsStructuredError) {
  const auto dir = df_test::temp_dir("png_garbage");
  io::write_text_file(dir / "x.png", "not an image at all");
  EXPECT_THROW(io::read_image_rgb(dir / "x.png"), IoError);
  io::write_text_file(dir / "y.jpg", std::string("\xFF\xD8\xFF\xE0 truncated", 14));
  EXPECT_THROW(io::read_image_rgb(dir / "y.jpg"), IoError);
}

}  // namespace
