#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "segstab/error.hpp"
#include "segstab/postprocess.hpp"
#include "testing.hpp"

namespace segstab {
namespace {

Image random_image(std::mt19937_64& rng, int w, int h, int channels) {
  std::uniform_real_distribution<float> u(0.f, 1.f);
  std::vector<float> data(static_cast<std::size_t>(w) * h * channels);
  for (auto& v : data) v = u(rng);
  return Image(w, h, channels, std::move(data));
}

SoftMaskVolume random_volume(std::mt19937_64& rng, int t, int c, int w, int h) {
  std::uniform_real_distribution<float> u(0.f, 1.f);
  std::vector<float> v(static_cast<std::size_t>(t) * c * w * h);
  for (auto& x : v) x = u(rng);
  return SoftMaskVolume(t, c, w, h, std::move(v));
}

// Straightforward weighted guided filter: explicit window loops and Gaussian
// elimination, no shared code with the library.
std::vector<double> brute_force_wgf(std::span<const Image> guide, const SoftMaskVolume& vol, int cls,
                                    const WgfConfig& cfg) {
  const int T = vol.frames(), H = vol.height(), W = vol.width(), C = guide[0].channels();
  auto p = [&](int t, int y, int x) { return double(vol.plane(t, cls)[y * W + x]); };
  auto weight = [&](int t, int y, int x) {
    return cfg.weight_floor + (1 - cfg.weight_floor) * std::abs(2 * p(t, y, x) - 1);
  };
  auto window = [&](int t, int y, int x, auto&& fn) {
    for (int tt = std::max(0, t - cfg.radius_t); tt <= std::min(T - 1, t + cfg.radius_t); ++tt)
      for (int yy = std::max(0, y - cfg.radius_y); yy <= std::min(H - 1, y + cfg.radius_y); ++yy)
        for (int xx = std::max(0, x - cfg.radius_x); xx <= std::min(W - 1, x + cfg.radius_x); ++xx)
          fn(tt, yy, xx);
  };
  const std::size_t n = static_cast<std::size_t>(T) * H * W;
  std::vector<std::vector<double>> coef(n, std::vector<double>(C + 1));
  for (int t = 0; t < T; ++t)
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        double sw = 0, sp = 0;
        std::vector<double> si(C, 0), sip(C, 0), sii(C * C, 0);
        window(t, y, x, [&](int tt, int yy, int xx) {
          const double w = weight(tt, yy, xx), pv = p(tt, yy, xx);
          sw += w;
          sp += w * pv;
          for (int k = 0; k < C; ++k) {
            const double ik = guide[tt].at(xx, yy, k);
            si[k] += w * ik;
            sip[k] += w * ik * pv;
            for (int l = 0; l < C; ++l) sii[k * C + l] += w * ik * guide[tt].at(xx, yy, l);
          }
        });
        const double mp = sp / sw;
        // augmented system [Sigma + eps I | cov]
        std::vector<std::vector<double>> m(C, std::vector<double>(C + 1));
        for (int k = 0; k < C; ++k) {
          for (int l = 0; l < C; ++l) m[k][l] = sii[k * C + l] / sw - si[k] / sw * si[l] / sw + (k == l ? cfg.epsilon : 0);
          m[k][C] = sip[k] / sw - si[k] / sw * mp;
        }
        for (int col = 0; col < C; ++col) {
          int piv = col;
          for (int r = col + 1; r < C; ++r)
            if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
          std::swap(m[col], m[piv]);
          for (int r = 0; r < C; ++r) {
            if (r == col) continue;
            const double f = m[r][col] / m[col][col];
            for (int c = col; c <= C; ++c) m[r][c] -= f * m[col][c];
          }
        }
        auto& a = coef[(static_cast<std::size_t>(t) * H + y) * W + x];
        double b = mp;
        for (int k = 0; k < C; ++k) {
          a[k] = m[k][C] / m[k][k];
          b -= a[k] * si[k] / sw;
        }
        a[C] = b;
      }
  std::vector<double> out(n);
  for (int t = 0; t < T; ++t)
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        std::vector<double> mean(C + 1, 0);
        int count = 0;
        window(t, y, x, [&](int tt, int yy, int xx) {
          ++count;
          const auto& a = coef[(static_cast<std::size_t>(tt) * H + yy) * W + xx];
          for (int k = 0; k <= C; ++k) mean[k] += a[k];
        });
        double q = mean[C] / count;
        for (int k = 0; k < C; ++k) q += mean[k] / count * guide[t].at(x, y, k);
        out[(static_cast<std::size_t>(t) * H + y) * W + x] = std::clamp(q, 0.0, 1.0);
      }
  return out;
}

TEST(ConfidenceWeights, Endpoints) {
  const std::vector<float> p{0.f, 0.5f, 1.f, 0.75f};
  const auto w = confidence_weights(p, 0.05);
  EXPECT_DOUBLE_EQ(w[0], 1.0);
  EXPECT_DOUBLE_EQ(w[1], 0.05);
  EXPECT_DOUBLE_EQ(w[2], 1.0);
  EXPECT_DOUBLE_EQ(w[3], 0.05 + 0.95 * 0.5);
}

class WgfOracle : public ::testing::TestWithParam<int> {};

TEST_P(WgfOracle, MatchesBruteForce3d) {
  std::mt19937_64 rng(100 + GetParam());
  const int channels = GetParam();
  std::vector<Image> guide;
  for (int t = 0; t < 4; ++t) guide.push_back(random_image(rng, 9, 7, channels));
  const auto vol = random_volume(rng, 4, 2, 9, 7);
  const WgfConfig cfg{.radius_x = 2, .radius_y = 1, .radius_t = 1, .epsilon = 1e-2, .weight_floor = 0.1};
  const auto out = wgf_3d(guide, vol, cfg);
  for (int c = 0; c < 2; ++c) {
    const auto expect = brute_force_wgf(guide, vol, c, cfg);
    for (int t = 0; t < 4; ++t) {
      auto plane = out.plane(t, c);
      for (int i = 0; i < 63; ++i) EXPECT_NEAR(plane[i], expect[t * 63 + i], 1e-5);
    }
  }
}

TEST_P(WgfOracle, MatchesBruteForce2d) {
  std::mt19937_64 rng(200 + GetParam());
  const Image guide = random_image(rng, 11, 8, GetParam());
  const auto vol = random_volume(rng, 1, 1, 11, 8);
  const WgfConfig cfg{.radius_x = 3, .radius_y = 2, .radius_t = 0, .epsilon = 5e-3};
  const auto out = wgf_2d(guide, vol.plane(0, 0), cfg);
  const auto expect = brute_force_wgf(std::span<const Image>(&guide, 1), vol, 0, cfg);
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_NEAR(out[i], expect[i], 1e-5);
}

INSTANTIATE_TEST_SUITE_P(Channels, WgfOracle, ::testing::Values(1, 3));

TEST(Wgf, ConstantPlanePreserved) {
  std::mt19937_64 rng(8);
  std::vector<Image> guide;
  for (int t = 0; t < 5; ++t) guide.push_back(random_image(rng, 16, 12, 3));
  for (float k : {0.f, 0.3f, 1.f}) {
    const SoftMaskVolume vol(5, 1, 16, 12, std::vector<float>(5 * 16 * 12, k));
    const auto out = wgf_3d(guide, vol, {.radius_x = 3, .radius_y = 3, .radius_t = 1});
    for (float v : out.values()) EXPECT_NEAR(v, k, 1e-6);
  }
}

TEST(Wgf, ZeroTemporalRadiusEqualsPerFrame) {
  std::mt19937_64 rng(17);
  std::vector<Image> guide;
  for (int t = 0; t < 3; ++t) guide.push_back(random_image(rng, 20, 15, 3));
  const auto vol = random_volume(rng, 3, 2, 20, 15);
  const WgfConfig cfg{.radius_x = 4, .radius_y = 3, .radius_t = 0};
  const auto a = wgf_3d(guide, vol, cfg);
  const auto b = wgf_2d_per_frame(guide, vol, cfg);
  for (std::size_t i = 0; i < a.values().size(); ++i) EXPECT_NEAR(a.values()[i], b.values()[i], 1e-6);
}

TEST(Wgf, LargeEpsilonTendsToBoxOfWeightedMeans) {
  std::mt19937_64 rng(23);
  const Image guide = random_image(rng, 12, 10, 1);
  const auto vol = random_volume(rng, 1, 1, 12, 10);
  const WgfConfig cfg{.radius_x = 2, .radius_y = 2, .radius_t = 0, .epsilon = 1e6};
  const auto out = wgf_2d(guide, vol.plane(0, 0), cfg);
  auto p = vol.plane(0, 0);
  const auto w = confidence_weights(p, cfg.weight_floor);
  auto weighted_mean = [&](int x, int y) {
    double sw = 0, sp = 0;
    for (int yy = std::max(0, y - 2); yy <= std::min(9, y + 2); ++yy)
      for (int xx = std::max(0, x - 2); xx <= std::min(11, x + 2); ++xx) {
        sw += w[yy * 12 + xx];
        sp += w[yy * 12 + xx] * p[yy * 12 + xx];
      }
    return sp / sw;
  };
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 12; ++x) {
      double acc = 0;
      int n = 0;
      for (int yy = std::max(0, y - 2); yy <= std::min(9, y + 2); ++yy)
        for (int xx = std::max(0, x - 2); xx <= std::min(11, x + 2); ++xx, ++n) acc += weighted_mean(xx, yy);
      EXPECT_NEAR(out[y * 12 + x], acc / n, 1e-5);
    }
}

TEST(Wgf, GuideScalingWithEpsilon) {
  std::mt19937_64 rng(29);
  const Image guide = random_image(rng, 14, 14, 3);
  std::vector<float> scaled(guide.data().begin(), guide.data().end());
  const double s = 0.5;
  for (auto& v : scaled) v *= static_cast<float>(s);
  const Image small(14, 14, 3, scaled);
  const auto vol = random_volume(rng, 1, 1, 14, 14);
  const WgfConfig cfg{.radius_x = 3, .radius_y = 3, .radius_t = 0, .epsilon = 1e-2};
  WgfConfig cfg_small = cfg;
  cfg_small.epsilon = cfg.epsilon * s * s;
  const auto a = wgf_2d(guide, vol.plane(0, 0), cfg);
  const auto b = wgf_2d(small, vol.plane(0, 0), cfg_small);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-5);
}

TEST(Wgf, InvalidInputs) {
  std::mt19937_64 rng(2);
  std::vector<Image> guide{random_image(rng, 5, 5, 1)};
  const auto vol = random_volume(rng, 2, 1, 5, 5);
  EXPECT_THROW(wgf_3d(guide, vol), DimensionError);
  guide.push_back(random_image(rng, 5, 5, 1));
  EXPECT_THROW(wgf_3d(guide, vol, {.epsilon = 0.0}), DataError);
  EXPECT_THROW(wgf_3d(guide, vol, {.radius_x = -1}), DataError);
  EXPECT_THROW(wgf_2d(guide[0], std::vector<float>(24, 0.f)), DimensionError);
}

TEST(TemporalGauss, ZeroSigmaIsIdentity) {
  std::mt19937_64 rng(5);
  const auto vol = random_volume(rng, 6, 3, 4, 4);
  EXPECT_EQ(temporal_gaussian_smooth(vol, 0.0), vol);
}

TEST(TemporalGauss, ImpulseMatchesClosedForm) {
  std::vector<float> v(11, 0.f);
  v[5] = 1.f;
  const SoftMaskVolume vol(11, 1, 1, 1, v);
  const auto out = temporal_gaussian_smooth(vol, 1.0);
  for (int t = 0; t < 11; ++t) {
    double norm = 0;
    for (int s = std::max(0, t - 3); s <= std::min(10, t + 3); ++s) norm += std::exp(-(s - t) * (s - t) / 2.0);
    const double expect = std::abs(t - 5) <= 3 ? std::exp(-(t - 5) * (t - 5) / 2.0) / norm : 0.0;
    EXPECT_NEAR(out.values()[t], expect, 1e-6);
  }
}

TEST(TemporalGauss, CommutesWithClassPermutation) {
  std::mt19937_64 rng(77);
  const auto vol = random_volume(rng, 7, 3, 3, 2);
  const std::vector<int> perm{2, 0, 1};
  auto permute = [&](const SoftMaskVolume& in) {
    std::vector<float> out(in.values().size());
    const std::size_t n = in.plane_size();
    for (int t = 0; t < in.frames(); ++t)
      for (int c = 0; c < 3; ++c) {
        auto src = in.plane(t, c);
        std::copy(src.begin(), src.end(), out.begin() + (t * 3 + perm[c]) * n);
      }
    return SoftMaskVolume(in.frames(), 3, in.width(), in.height(), std::move(out));
  };
  EXPECT_EQ(temporal_gaussian_smooth(permute(vol), 1.3), permute(temporal_gaussian_smooth(vol, 1.3)));
}

}  // namespace
}  // namespace segstab
