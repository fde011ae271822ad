#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "rirforge/losses.hpp"
#include "rirforge/signal.hpp"
#include "test_support.hpp"

namespace rirforge {
namespace {

using testing::decaying_noise;
using testing::expect_kind;
using testing::random_vector;

TEST(Mse, IdenticalIsZeroAndOffsetIsOne) {
  std::mt19937_64 rng(1);
  const auto x = random_vector(64, rng);
  EXPECT_EQ(mse_loss(x, x), 0.0);
  auto shifted = x;
  for (double& v : shifted) v += 1.0;
  EXPECT_NEAR(mse_loss(shifted, x), 1.0, 1e-15);
}

TEST(Mse, MatchesScalarLoop) {
  std::mt19937_64 rng(2);
  const auto a = random_vector(16, rng);
  const auto b = random_vector(16, rng);
  double acc = 0.0;
  for (int i = 0; i < 16; ++i) acc += (b[i] - a[i]) * (b[i] - a[i]);
  EXPECT_NEAR(mse_loss(a, b), acc / 16.0, 1e-15);
}

TEST(Mse, LengthMismatchThrows) {
  const std::vector<double> a(4, 1.0), b(5, 1.0);
  expect_kind(ErrorKind::kShapeMismatch, [&] { mse_loss(a, b); });
  expect_kind(ErrorKind::kShapeMismatch, [&] { edc_loss(a, b); });
}

TEST(EdcLoss, HandTableEightSamples) {
  // Target energies 4, 2, 1, 1 give tail sums 8, 4, 2, 1: levels 0, -3.01, -6.02, -9.03 dB
  // and -inf afterwards, so the mask is the first four samples.
  // Prediction energies 1, 1, 1, 1 give tail sums 4, 3, 2, 1: levels 0, -1.25, -3.01, -6.02.
  // Absolute differences 0, 10 log10(3/2), 10 log10 2, 10 log10 2 average to 2.5 log10 6.
  const std::vector<double> target{2.0, std::sqrt(2.0), 1.0, 1.0, 0.0, 0.0, 0.0, 0.0};
  const std::vector<double> pred{1.0, -1.0, 1.0, -1.0, 0.0, 0.0, 0.0, 0.0};
  EXPECT_NEAR(edc_loss(pred, target), 2.5 * std::log10(6.0), 1e-12);
  const auto w = edc_weights(target, -60.0);
  EXPECT_EQ(w, (std::vector<double>{0.25, 0.25, 0.25, 0.25, 0.0, 0.0, 0.0, 0.0}));
}

TEST(EdcLoss, IdenticalAndScaledAreZero) {
  std::mt19937_64 rng(3);
  const auto x = decaying_noise(512, 60.0, rng);
  EXPECT_EQ(edc_loss(x, x), 0.0);
  auto doubled = x;
  for (double& v : doubled) v *= 2.0;
  EXPECT_NEAR(edc_loss(doubled, x), 0.0, 1e-12);
}

TEST(EdcLoss, InvariantToPredictionScale) {
  std::mt19937_64 rng(4);
  const auto target = decaying_noise(512, 60.0, rng);
  const auto pred = decaying_noise(512, 40.0, rng);
  const double base = edc_loss(pred, target);
  EXPECT_GT(base, 0.1);
  for (double k : {1e-3, -1.0, 7.5, 1e3}) {
    auto scaled = pred;
    for (double& v : scaled) v *= k;
    EXPECT_NEAR(edc_loss(scaled, target), base, 1e-10 * base) << k;
  }
}

TEST(EdcLoss, ZeroSignalThrows) {
  const std::vector<double> zero(8, 0.0), one(8, 1.0);
  expect_kind(ErrorKind::kAllZeroSignal, [&] { edc_loss(one, zero); });
  expect_kind(ErrorKind::kAllZeroSignal, [&] { edc_loss(zero, one); });
}

TEST(EdcLoss, MatchesBruteForceDefinition) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto target = decaying_noise(128, 10.0, rng);
    const auto pred = decaying_noise(128, 15.0, rng);
    const auto level = [](const std::vector<double>& x, std::size_t n) {
      double tail = 0.0, total = 0.0;
      for (std::size_t k = 0; k < x.size(); ++k) {
        total += x[k] * x[k];
        if (k >= n) tail += x[k] * x[k];
      }
      return tail > 0.0 ? 10.0 * std::log10(tail / total) : -1e300;
    };
    double acc = 0.0;
    int count = 0;
    for (std::size_t n = 0; n < 128; ++n) {
      const double t = level(target, n);
      if (t < -60.0) continue;
      acc += std::abs(std::max(level(pred, n), -60.0) - t);
      ++count;
    }
    EXPECT_NEAR(edc_loss(pred, target), acc / count, 1e-9);
  }
}

TEST(TotalLoss, LambdaZeroIsMse) {
  std::mt19937_64 rng(6);
  const auto a = decaying_noise(256, 30.0, rng);
  const auto b = decaying_noise(256, 30.0, rng);
  LossConfig cfg;
  cfg.lambda = 0.0;
  EXPECT_EQ(total_loss(a, b, cfg), mse_loss(a, b));
  EXPECT_EQ(loss_terms(a, b, cfg).edc, 0.0);
}

TEST(TotalLoss, SmallLambdaCombinesTerms) {
  std::mt19937_64 rng(7);
  const auto a = decaying_noise(256, 30.0, rng);
  const auto b = decaying_noise(256, 30.0, rng);
  LossConfig cfg;
  cfg.lambda = 1e-5;
  const double expected = mse_loss(a, b) + 1e-5 * edc_loss(a, b);
  EXPECT_LE(std::abs(total_loss(a, b, cfg) - expected), 1e-15 * std::abs(expected));
}

TEST(TotalLoss, IdenticalIsZeroAndNonNegative) {
  std::mt19937_64 rng(8);
  LossConfig cfg;
  cfg.lambda = 1.0;
  const auto a = decaying_noise(128, 20.0, rng);
  EXPECT_EQ(total_loss(a, a, cfg), 0.0);
  for (int i = 0; i < 20; ++i) {
    const auto b = decaying_noise(128, 20.0, rng);
    EXPECT_GE(total_loss(b, a, cfg), 0.0);
  }
}

TEST(LossConfig, Validation) {
  LossConfig cfg;
  EXPECT_NO_THROW(validate(cfg));
  cfg.lambda = -1.0;
  expect_kind(ErrorKind::kInvalidConfig, [&] { validate(cfg); });
  cfg.lambda = 0.0;
  cfg.cfg_dropout = 1.5;
  expect_kind(ErrorKind::kInvalidConfig, [&] { validate(cfg); });
}

std::vector<double> finite_difference(const std::function<double(const std::vector<double>&)>& f,
                                      std::vector<double> x) {
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double w = x[i];
    const double h = 1e-6 * std::max(1.0, std::abs(w));
    x[i] = w + h;
    const double up = f(x);
    x[i] = w - h;
    const double down = f(x);
    x[i] = w;
    grad[i] = (up - down) / (2 * h);
  }
  return grad;
}

TEST(LossGradient, MseMatchesFiniteDifferences) {
  std::mt19937_64 rng(9);
  const auto target = random_vector(32, rng);
  const auto pred = random_vector(32, rng);
  const auto g = mse_loss_gradient(pred, target);
  EXPECT_DOUBLE_EQ(g.value, mse_loss(pred, target));
  const auto fd = finite_difference([&](const auto& p) { return mse_loss(p, target); }, pred);
  for (std::size_t i = 0; i < fd.size(); ++i) EXPECT_NEAR(g.grad[i], fd[i], 1e-8);
}

TEST(LossGradient, EdcMatchesFiniteDifferences) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 5; ++trial) {
    const auto target = decaying_noise(96, 12.0, rng);
    const auto pred = decaying_noise(96, 20.0, rng);
    const auto g = edc_loss_gradient(pred, target);
    EXPECT_NEAR(g.value, edc_loss(pred, target), 1e-12);
    const auto fd = finite_difference([&](const auto& p) { return edc_loss(p, target); }, pred);
    for (std::size_t i = 0; i < fd.size(); ++i) {
      EXPECT_NEAR(g.grad[i], fd[i], 1e-5 * std::max(1.0, std::abs(fd[i])))
          << "trial " << trial << " sample " << i << ": " << g.grad[i] << " vs " << fd[i];
    }
  }
}

}  // namespace
}  // namespace rirforge
