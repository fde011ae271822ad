#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "rirforge/diffusion.hpp"
#include "rirforge/error.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace rirforge {
namespace {

using testing::random_vector;
using testing::rel_err;

using testing::abar_oracle;

TEST(CosineSchedule, EndpointsAndRanges) {
  for (int steps : {1, 2, 10, 100, 1000}) {
    const Schedule s = cosine_schedule(steps);
    EXPECT_EQ(s.alpha_bar[0], 1.0);
    EXPECT_EQ(s.sigma[1], 0.0);
    EXPECT_GT(s.alpha_bar[steps], 0.0);
    for (int t = 1; t <= steps; ++t) {
      EXPECT_LT(s.alpha_bar[t], s.alpha_bar[t - 1]);
      EXPECT_GT(s.alpha[t], 0.0);
      EXPECT_LT(s.alpha[t], 1.0);
      EXPECT_GE(s.alpha[t], 1.0 - kMaxStepNoise - 1e-15);
    }
  }
}

TEST(CosineSchedule, TenStepTableMatchesOracle) {
  const Schedule s = cosine_schedule(10, 0.008);
  const auto oracle = abar_oracle(10, 0.008);
  for (int t = 0; t <= 10; ++t) EXPECT_LE(rel_err(s.alpha_bar[t], oracle[t]), 1e-12) << t;
  // Unclipped steps equal f(t)/f(0) directly.
  const double pi = 3.14159265358979323846;
  auto f = [&](int t) {
    const double c = std::cos(((t / 10.0 + 0.008) / 1.008) * pi / 2.0);
    return c * c;
  };
  for (int t = 0; t < 10; ++t) EXPECT_LE(rel_err(s.alpha_bar[t], f(t) / f(0)), 1e-12) << t;
}

TEST(CosineSchedule, SigmaFormula) {
  const Schedule s = cosine_schedule(50);
  for (int t = 1; t <= 50; ++t) {
    const double expected =
        (1.0 - s.alpha_bar[t - 1]) * (1.0 - s.alpha[t]) / (1.0 - s.alpha_bar[t]);
    EXPECT_LE(std::abs(s.sigma[t] * s.sigma[t] - expected), 1e-15);
  }
}

TEST(CosineSchedule, RejectsBadInputs) {
  testing::expect_kind(ErrorKind::kInvalidSchedule, [] { cosine_schedule(0); });
  testing::expect_kind(ErrorKind::kInvalidSchedule, [] { cosine_schedule(-3); });
  testing::expect_kind(ErrorKind::kInvalidSchedule, [] { cosine_schedule(10, 0.0); });
}

TEST(ForwardDiffuse, ZeroNoiseScalesSignal) {
  const Schedule s = cosine_schedule(20);
  const std::vector<double> x0{1.0, -2.0, 0.5};
  const auto xt = forward_diffuse(x0, 7, std::vector<double>(3, 0.0), s);
  for (int n = 0; n < 3; ++n) EXPECT_DOUBLE_EQ(xt[n], std::sqrt(s.alpha_bar[7]) * x0[n]);
}

TEST(ForwardDiffuse, StepZeroIsIdentity) {
  const Schedule s = cosine_schedule(20);
  const std::vector<double> x0{1.0, -2.0, 0.5};
  EXPECT_EQ(forward_diffuse(x0, 0, std::vector<double>{3.0, 1.0, 2.0}, s), x0);
}

TEST(ForwardDiffuse, PureNoiseBranch) {
  const Schedule s = cosine_schedule(20);
  const std::vector<double> e{0.3, -1.0, 2.0};
  const auto xt = forward_diffuse(std::vector<double>(3, 0.0), 12, e, s);
  for (int n = 0; n < 3; ++n) EXPECT_DOUBLE_EQ(xt[n], std::sqrt(1.0 - s.alpha_bar[12]) * e[n]);
}

TEST(ForwardDiffuse, ShapeMismatchThrows) {
  const Schedule s = cosine_schedule(5);
  testing::expect_kind(ErrorKind::kShapeMismatch, [&] {
    forward_diffuse(std::vector<double>(3, 0.0), 1, std::vector<double>(4, 0.0), s);
  });
}

TEST(ForwardDiffuse, SecondMomentMonteCarlo) {
  const Schedule s = cosine_schedule(100);
  const std::vector<double> x0{1.0, -0.5, 0.0, 2.0};
  std::mt19937_64 rng(42);
  for (int t : {1, 30, 70, 100}) {
    std::vector<double> mean(4, 0.0), second(4, 0.0);
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) {
      const auto xt = forward_diffuse(x0, t, standard_normal(4, rng), s);
      for (int n = 0; n < 4; ++n) {
        mean[n] += xt[n] / draws;
        second[n] += xt[n] * xt[n] / draws;
      }
    }
    const double ab = s.alpha_bar[t];
    for (int n = 0; n < 4; ++n) {
      EXPECT_NEAR(second[n], ab * x0[n] * x0[n] + (1.0 - ab), 1e-2 * std::max(1.0, x0[n] * x0[n]));
      EXPECT_NEAR(mean[n], std::sqrt(ab) * x0[n], 1e-2);
    }
  }
}

TEST(ReverseMean, FinalStepCollapses) {
  const Schedule s = cosine_schedule(30);
  std::mt19937_64 rng(1);
  const auto xt = random_vector(16, rng);
  const auto x0 = random_vector(16, rng);
  EXPECT_EQ(reverse_mean(xt, x0, 1, s), x0);
}

TEST(ReverseMean, EqualInputsScaleByCoefficientSum) {
  const Schedule s = cosine_schedule(100);
  std::mt19937_64 rng(2);
  const auto v = random_vector(8, rng);
  for (int t = 1; t <= 100; ++t) {
    const double a_prev = s.alpha_bar[t - 1], a = s.alpha_bar[t], al = s.alpha[t];
    const double sum = (std::sqrt(a_prev) * (1 - al) + std::sqrt(al) * (1 - a_prev)) / (1 - a);
    const auto mu = reverse_mean(v, v, t, s);
    for (std::size_t n = 0; n < v.size(); ++n) EXPECT_NEAR(mu[n], sum * v[n], 1e-12);
  }
  const auto mu1 = reverse_mean(v, v, 1, s);
  for (std::size_t n = 0; n < v.size(); ++n) EXPECT_EQ(mu1[n], v[n]);
}

TEST(ReverseMean, MatchesScalarTranscription) {
  const Schedule s = cosine_schedule(200);
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> step(1, 200);
  for (int trial = 0; trial < 100; ++trial) {
    const int t = step(rng);
    const auto xt = random_vector(4, rng);
    const auto x0 = random_vector(4, rng);
    const auto mu = reverse_mean(xt, x0, t, s);
    for (int n = 0; n < 4; ++n) {
      const double expected =
          std::sqrt(s.alpha_bar[t - 1]) * (1 - s.alpha[t]) / (1 - s.alpha_bar[t]) * x0[n] +
          std::sqrt(s.alpha[t]) * (1 - s.alpha_bar[t - 1]) / (1 - s.alpha_bar[t]) * xt[n];
      EXPECT_LE(rel_err(mu[n], expected), 1e-12);
    }
  }
}

TEST(CfgCombine, UnitScaleIsBitExactConditional) {
  std::mt19937_64 rng(4);
  const auto a = random_vector(32, rng);
  const auto b = random_vector(32, rng);
  EXPECT_EQ(cfg_combine(a, b, 1.0), a);
}

TEST(CfgCombine, EqualPredictionsAreFixed) {
  std::mt19937_64 rng(5);
  const auto a = random_vector(8, rng);
  for (double s : {1.0, 1.5, 3.0, 10.0}) {
    const auto out = cfg_combine(a, a, s);
    for (std::size_t n = 0; n < a.size(); ++n) EXPECT_DOUBLE_EQ(out[n], a[n]);
  }
}

TEST(CfgCombine, ScaleTwoFromZero) {
  const std::vector<double> v{1.0, -2.0, 0.25};
  EXPECT_EQ(cfg_combine(v, std::vector<double>(3, 0.0), 2.0), (std::vector<double>{2.0, -4.0, 0.5}));
}

TEST(CfgCombine, AffineInScale) {
  std::mt19937_64 rng(6);
  const auto a = random_vector(8, rng);
  const auto b = random_vector(8, rng);
  for (double s : {1.5, 2.0, 4.0}) {
    const auto out = cfg_combine(a, b, s);
    const auto one = cfg_combine(a, b, 1.0);
    for (std::size_t n = 0; n < a.size(); ++n) EXPECT_NEAR(out[n] - b[n], s * (one[n] - b[n]), 1e-12);
  }
}

TEST(Sample, OracleDenoiserRecoversTarget) {
  std::mt19937_64 data(7);
  const auto x0 = random_vector(64, data);
  const std::vector<double> c(64, 0.0);
  const Denoiser oracle = [&](std::span<const double>, std::span<const double>, int) { return x0; };
  for (int steps : {1, 10, 100}) {
    for (std::uint64_t seed : {0u, 1u, 99u}) {
      std::mt19937_64 rng(seed);
      const auto out = sample(oracle, c, cosine_schedule(steps), 1.0, rng);
      EXPECT_LE(testing::max_abs_diff(out, x0), 1e-12);
    }
  }
}

TEST(Sample, SingleStepReturnsDenoiserOutput) {
  const Schedule s = cosine_schedule(1);
  const std::vector<double> c{1.0, 2.0};
  std::vector<double> seen;
  const Denoiser d = [&](std::span<const double> x, std::span<const double>, int t) {
    EXPECT_EQ(t, 1);
    seen.assign(x.begin(), x.end());
    return std::vector<double>{x[0] * 2.0, x[1] + 1.0};
  };
  std::mt19937_64 rng(8);
  const auto out = sample(d, c, s, 1.0, rng);
  EXPECT_EQ(out, (std::vector<double>{seen[0] * 2.0, seen[1] + 1.0}));
}

TEST(Sample, DeterministicUnderSeed) {
  const Schedule s = cosine_schedule(20);
  const std::vector<double> c{0.5, 0.1, -0.2, 0.0};
  const Denoiser d = [](std::span<const double> x, std::span<const double> cond, int t) {
    std::vector<double> out(x.size());
    for (std::size_t n = 0; n < x.size(); ++n) out[n] = 0.5 * x[n] + cond[n] + 0.01 * t;
    return out;
  };
  std::mt19937_64 a(9), b(9);
  EXPECT_EQ(sample(d, c, s, 1.0, a), sample(d, c, s, 1.0, b));
  std::mt19937_64 g1(9), g2(9);
  EXPECT_EQ(sample(d, c, s, 2.0, g1), sample(d, c, s, 2.0, g2));
}

TEST(Sample, GuidanceUsesNullConditionOnlyWhenAboveOne) {
  const Schedule s = cosine_schedule(5);
  const std::vector<double> c{1.0, 1.0, 1.0};
  int conditional = 0, unconditional = 0;
  const Denoiser d = [&](std::span<const double> x, std::span<const double> cond, int) {
    const bool zero = std::all_of(cond.begin(), cond.end(), [](double v) { return v == 0.0; });
    (zero ? unconditional : conditional)++;
    return std::vector<double>(x.begin(), x.end());
  };
  std::mt19937_64 rng(10);
  sample(d, c, s, 1.0, rng);
  EXPECT_EQ(conditional, 5);
  EXPECT_EQ(unconditional, 0);
  sample(d, c, s, 3.0, rng);
  EXPECT_EQ(conditional, 10);
  EXPECT_EQ(unconditional, 5);
}

TEST(Sample, GuidanceBelowOneRejected) {
  const Denoiser d = [](std::span<const double> x, std::span<const double>, int) {
    return std::vector<double>(x.begin(), x.end());
  };
  std::mt19937_64 rng(11);
  testing::expect_kind(ErrorKind::kInvalidArgument,
                       [&] { sample(d, std::vector<double>(4, 0.0), cosine_schedule(3), 0.5, rng); });
}

}  // namespace
}  // namespace rirforge
