#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>

#include "irp/error.hpp"
#include "irp/metrics.hpp"
#include "support.hpp"

namespace irp {
namespace {

TEST(Psnr, ClosedForms) {
  const auto zeros = test::constant_quantized(2, 2, 1, 255, 0);
  const auto ones = test::constant_quantized(2, 2, 1, 255, 1);
  EXPECT_NEAR(psnr(zeros, ones), 48.130803608679, 1e-9);
  EXPECT_EQ(psnr(zeros, zeros), kPsnrCap);

  // MSE = m_max^2 / 10: a 10-pixel row with one pixel off by the full range.
  auto a = test::constant_quantized(10, 1, 1, 255, 0);
  auto b = a;
  b.set(3, 0, 0, 255);
  EXPECT_NEAR(psnr(a, b), 10.0, 1e-9);
  EXPECT_DOUBLE_EQ(psnr(a, b), psnr(b, a));
}

TEST(Psnr, RejectsMismatch) {
  EXPECT_THROW(psnr(test::constant_quantized(2, 2, 1, 255, 0), test::constant_quantized(2, 3, 1, 255, 0)),
               DimensionError);
  EXPECT_THROW(psnr(test::constant_quantized(2, 2, 1, 255, 0), test::constant_quantized(2, 2, 1, 1023, 0)),
               DimensionError);
}

TEST(Ssim, IdentityConstantsAndInversion) {
  const auto img = test::random_quantized(24, 24, 3, 255, 3);
  EXPECT_NEAR(ssim(img, img), 1.0, 1e-12);
  const auto c = test::constant_quantized(16, 16, 1, 255, 90);
  EXPECT_NEAR(ssim(c, c), 1.0, 1e-12);

  QuantizedImage board(16, 16, 1, 255), inverted(16, 16, 1, 255);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) {
      const int v = ((x + y) % 2) ? 200 : 55;
      board.set(x, y, 0, v);
      inverted.set(x, y, 0, 255 - v);
    }
  EXPECT_LT(ssim(board, inverted), 0.0);
  const auto other = test::random_quantized(24, 24, 3, 255, 4);
  EXPECT_DOUBLE_EQ(ssim(img, other), ssim(other, img));
}

TEST(NormalizeMetric, RangeAndClamping) {
  EXPECT_DOUBLE_EQ(normalize_metric(30.0, default_psnr_range()), 0.5);
  EXPECT_DOUBLE_EQ(normalize_metric(5.0, default_psnr_range()), 0.0);
  EXPECT_DOUBLE_EQ(normalize_metric(80.0, default_psnr_range()), 1.0);
  EXPECT_DOUBLE_EQ(normalize_metric(0.8, default_ssim_range()), 0.8);
  EXPECT_DOUBLE_EQ(normalize_metric(0.8, default_ssim_range(), false), 1.0 - 0.8);
  EXPECT_THROW(normalize_metric(1.0, MetricRange{"bad", 2.0, 1.0}), InvalidArgument);
  double prev = -1.0;
  for (double x = 0.0; x <= 60.0; x += 0.5) {
    const double v = normalize_metric(x, default_psnr_range());
    EXPECT_GE(v, prev);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    prev = v;
  }
}

TEST(Correlation, ClosedFormVectors) {
  const std::vector<double> x3{1, 2, 3};
  EXPECT_NEAR(srcc(x3, std::vector<double>{10, 20, 30}).value, 1.0, 1e-12);
  EXPECT_NEAR(srcc(x3, std::vector<double>{3, 2, 1}).value, -1.0, 1e-12);
  EXPECT_NEAR(srcc(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 3, 2, 4}).value, 0.8, 1e-12);

  const std::vector<double> x{0.3, -1.0, 2.5, 4.0};
  std::vector<double> affine, negated;
  for (double v : x) {
    affine.push_back(2 * v + 3);
    negated.push_back(-v);
  }
  EXPECT_NEAR(plcc(x, affine).value, 1.0, 1e-9);
  EXPECT_NEAR(plcc(x, negated).value, -1.0, 1e-9);
  // r = 3 / sqrt(2 * (14/3)) for x = [0,1,2], y = [0,1,3].
  EXPECT_NEAR(plcc(std::vector<double>{0, 1, 2}, std::vector<double>{0, 1, 3}).value, 3.0 / std::sqrt(28.0 / 3.0),
              1e-9);
}

TEST(Correlation, ConstantSeriesIsDegenerate) {
  const std::vector<double> c{2, 2, 2}, x{1, 2, 3};
  EXPECT_TRUE(srcc(c, x).degenerate);
  EXPECT_TRUE(plcc(x, c).degenerate);
  EXPECT_FALSE(plcc(x, x).degenerate);
  EXPECT_THROW(srcc(x, std::vector<double>{1, 2}), DimensionError);
}

// Spearman from explicit ranks: each value's rank is 1 + (#smaller) + (#equal - 1) / 2,
// then the Pearson formula on the ranks.
double brute_spearman(const std::vector<double>& x, const std::vector<double>& y) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      double smaller = 0, equal = 0;
      for (double w : v) {
        smaller += w < v[i];
        equal += w == v[i];
      }
      r[i] = 1.0 + smaller + (equal - 1.0) / 2.0;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += rx[i] / n;
    my += ry[i] / n;
  }
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

TEST(Correlation, SrccMatchesBruteForceOnAllSmallLists) {
  std::vector<std::vector<double>> lists;
  for (int n = 2; n <= 6; ++n) {
    std::vector<double> cur(static_cast<std::size_t>(n), 1.0);
    std::function<void(int)> rec = [&](int i) {
      if (i == n) {
        lists.push_back(cur);
        return;
      }
      for (double v : {1.0, 2.0, 3.0}) {
        cur[static_cast<std::size_t>(i)] = v;
        rec(i + 1);
      }
    };
    rec(0);
  }
  std::size_t compared = 0;
  for (const auto& x : lists) {
    for (const auto& y : lists) {
      if (x.size() != y.size()) continue;
      const auto got = srcc(x, y);
      const bool constant = std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; }) ||
                            std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; });
      ASSERT_EQ(got.degenerate, constant);
      if (constant) continue;
      ASSERT_NEAR(got.value, brute_spearman(x, y), 1e-12);
      ++compared;
    }
  }
  EXPECT_GT(compared, 500000u);
}

TEST(Correlation, SrccInvariantUnderMonotoneTransform) {
  const std::vector<double> x{0.1, 0.5, 0.2, 0.9, 0.4, 0.4}, y{3, 1, 4, 1, 5, 9};
  std::vector<double> tx;
  for (double v : x) tx.push_back(std::exp(3 * v) - 7);
  EXPECT_NEAR(srcc(x, y).value, srcc(tx, y).value, 1e-12);
}

TEST(AverageRanks, TiesShareMean) {
  const auto r = average_ranks(std::vector<double>{5, 1, 5, 3});
  EXPECT_EQ(r, (std::vector<double>{3.5, 1, 3.5, 2}));
}

}  // namespace
}  // namespace irp
