#include "segstab/postprocess.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "segstab/error.hpp"
#include "segstab/parallel.hpp"
#include "segstab/temporal_blur.hpp"

namespace segstab {

namespace {

void validate(const WgfConfig& cfg) {
  if (cfg.radius_x < 0 || cfg.radius_y < 0 || cfg.radius_t < 0) {
    throw DataError("guided filter radii must be non-negative");
  }
  if (!(cfg.epsilon > 0.0) || !std::isfinite(cfg.epsilon)) {
    throw DataError("guided filter epsilon must be positive");
  }
  if (!(cfg.weight_floor > 0.0 && cfg.weight_floor <= 1.0)) {
    throw DataError("weight floor must lie in (0, 1]");
  }
}

// Number of products I_k I_l with k <= l.
constexpr int pair_count(int channels) { return channels * (channels + 1) / 2; }

// Layout of the per-voxel statistics that go through the box filter.
struct StatLayout {
  int channels;
  int w() const { return 0; }
  int wp() const { return 1; }
  int wi(int k) const { return 2 + k; }
  int wip(int k) const { return 2 + channels + k; }
  int wii(int idx) const { return 2 + 2 * channels + idx; }
  int count() const { return 2 + 2 * channels + pair_count(channels); }
};

struct Coefficients {
  std::array<double, 3> a{};
  double b = 0.0;
};

// Solves (Sigma_II + eps Id) a = Sigma_Ip from windowed weighted sums.
Coefficients solve_window(const StatLayout& layout, const double* sums, double epsilon) {
  const int c = layout.channels;
  const double wsum = sums[layout.w()];
  const double mu_p = sums[layout.wp()] / wsum;
  std::array<double, 3> mu_i{};
  std::array<double, 3> cov_ip{};
  for (int k = 0; k < c; ++k) {
    mu_i[k] = sums[layout.wi(k)] / wsum;
    cov_ip[k] = sums[layout.wip(k)] / wsum - mu_i[k] * mu_p;
  }
  Coefficients out;
  if (c == 1) {
    const double var = sums[layout.wii(0)] / wsum - mu_i[0] * mu_i[0];
    out.a[0] = cov_ip[0] / (var + epsilon);
    out.b = mu_p - out.a[0] * mu_i[0];
    return out;
  }
  // symmetric 3x3, packed as (00, 01, 02, 11, 12, 22)
  std::array<double, 6> s{};
  int idx = 0;
  for (int k = 0; k < 3; ++k) {
    for (int l = k; l < 3; ++l, ++idx) {
      s[idx] = sums[layout.wii(idx)] / wsum - mu_i[k] * mu_i[l] + (k == l ? epsilon : 0.0);
    }
  }
  const double a00 = s[0], a01 = s[1], a02 = s[2], a11 = s[3], a12 = s[4], a22 = s[5];
  const double c00 = a11 * a22 - a12 * a12;
  const double c01 = a02 * a12 - a01 * a22;
  const double c02 = a01 * a12 - a02 * a11;
  const double c11 = a00 * a22 - a02 * a02;
  const double c12 = a01 * a02 - a00 * a12;
  const double c22 = a00 * a11 - a01 * a01;
  const double det = a00 * c00 + a01 * c01 + a02 * c02;
  out.a[0] = (c00 * cov_ip[0] + c01 * cov_ip[1] + c02 * cov_ip[2]) / det;
  out.a[1] = (c01 * cov_ip[0] + c11 * cov_ip[1] + c12 * cov_ip[2]) / det;
  out.a[2] = (c02 * cov_ip[0] + c12 * cov_ip[1] + c22 * cov_ip[2]) / det;
  out.b = mu_p - (out.a[0] * mu_i[0] + out.a[1] * mu_i[1] + out.a[2] * mu_i[2]);
  return out;
}

// Fills the per-pixel statistics for one frame into `stats` (stat-major planes).
void accumulate_frame(const StatLayout& layout, const Image& guide, std::span<const float> plane,
                      std::span<const double> weights, std::vector<double>& stats,
                      std::size_t stride, std::size_t offset) {
  const int c = layout.channels;
  const std::size_t n = plane.size();
  auto g = guide.data();
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weights[i];
    const double p = plane[i];
    stats[layout.w() * stride + offset + i] = w;
    stats[layout.wp() * stride + offset + i] = w * p;
    int idx = 0;
    for (int k = 0; k < c; ++k) {
      const double ik = g[i * c + k];
      stats[layout.wi(k) * stride + offset + i] = w * ik;
      stats[layout.wip(k) * stride + offset + i] = w * ik * p;
      for (int l = k; l < c; ++l, ++idx) {
        stats[layout.wii(idx) * stride + offset + i] = w * ik * g[i * c + l];
      }
    }
  }
}

// In-place truncated moving sum of radius r along one axis of a (T, H, W) block.
void box_sum_axis(std::span<double> data, int t_count, int h, int w, int axis, int r) {
  if (r == 0) return;
  const std::array<int, 3> dims{t_count, h, w};
  const std::array<std::size_t, 3> strides{static_cast<std::size_t>(h) * w,
                                           static_cast<std::size_t>(w), 1};
  const int len = dims[axis];
  const std::size_t step = strides[axis];
  std::vector<double> prefix(len + 1);
  for (int a = 0; a < t_count; ++a) {
    for (int b = 0; b < h; ++b) {
      for (int c = 0; c < w; ++c) {
        const std::array<int, 3> pos{a, b, c};
        if (pos[axis] != 0) continue;
        const std::size_t base = a * strides[0] + b * strides[1] + c;
        prefix[0] = 0.0;
        for (int k = 0; k < len; ++k) prefix[k + 1] = prefix[k] + data[base + k * step];
        for (int k = 0; k < len; ++k) {
          const int lo = std::max(0, k - r);
          const int hi = std::min(len - 1, k + r);
          data[base + k * step] = prefix[hi + 1] - prefix[lo];
        }
      }
    }
  }
}

int window_count(int pos, int len, int r) {
  return std::min(len - 1, pos + r) - std::max(0, pos - r) + 1;
}

std::vector<float> filter_plane_3d(std::span<const Image> guide, const SoftMaskVolume& volume,
                                   int cls, const WgfConfig& cfg) {
  const int t_count = volume.frames();
  const int h = volume.height();
  const int w = volume.width();
  const StatLayout layout{guide.front().channels()};
  const std::size_t frame_size = volume.plane_size();
  const std::size_t stride = frame_size * t_count;

  std::vector<double> stats(stride * layout.count());
  for (int t = 0; t < t_count; ++t) {
    auto plane = volume.plane(t, cls);
    const auto weights = confidence_weights(plane, cfg.weight_floor);
    accumulate_frame(layout, guide[t], plane, weights, stats, stride, t * frame_size);
  }
  for (int s = 0; s < layout.count(); ++s) {
    std::span<double> block(stats.data() + s * stride, stride);
    box_sum_axis(block, t_count, h, w, 2, cfg.radius_x);
    box_sum_axis(block, t_count, h, w, 1, cfg.radius_y);
    box_sum_axis(block, t_count, h, w, 0, cfg.radius_t);
  }

  const int nc = layout.channels + 1;
  std::vector<double> coeffs(stride * nc);
  std::vector<double> sums(layout.count());
  for (std::size_t v = 0; v < stride; ++v) {
    for (int s = 0; s < layout.count(); ++s) sums[s] = stats[s * stride + v];
    const Coefficients co = solve_window(layout, sums.data(), cfg.epsilon);
    for (int k = 0; k < layout.channels; ++k) coeffs[k * stride + v] = co.a[k];
    coeffs[layout.channels * stride + v] = co.b;
  }
  for (int s = 0; s < nc; ++s) {
    std::span<double> block(coeffs.data() + s * stride, stride);
    box_sum_axis(block, t_count, h, w, 2, cfg.radius_x);
    box_sum_axis(block, t_count, h, w, 1, cfg.radius_y);
    box_sum_axis(block, t_count, h, w, 0, cfg.radius_t);
  }

  std::vector<float> out(stride);
  for (int t = 0; t < t_count; ++t) {
    auto g = guide[t].data();
    const int ct = window_count(t, t_count, cfg.radius_t);
    for (int y = 0; y < h; ++y) {
      const int cy = window_count(y, h, cfg.radius_y);
      for (int x = 0; x < w; ++x) {
        const double count = static_cast<double>(ct) * cy * window_count(x, w, cfg.radius_x);
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        const std::size_t v = t * frame_size + i;
        double q = coeffs[layout.channels * stride + v] / count;
        for (int k = 0; k < layout.channels; ++k) {
          q += coeffs[k * stride + v] / count * g[i * layout.channels + k];
        }
        out[v] = static_cast<float>(std::clamp(q, 0.0, 1.0));
      }
    }
  }
  return out;
}

void check_guide(std::span<const Image> guide, const SoftMaskVolume& volume) {
  if (static_cast<int>(guide.size()) != volume.frames()) {
    throw DimensionError("guide has " + std::to_string(guide.size()) + " frames, volume has " +
                         std::to_string(volume.frames()));
  }
  for (const auto& g : guide) {
    if (g.width() != volume.width() || g.height() != volume.height()) {
      throw DimensionError("guide frame size differs from volume");
    }
    if (g.channels() != guide.front().channels()) throw DataError("guide channel counts differ");
  }
}

// Summed-area table with a zero first row and column.
class IntegralImage {
 public:
  IntegralImage(int w, int h) : w_(w), h_(h), table_(static_cast<std::size_t>(w + 1) * (h + 1)) {}

  template <typename F>
  void build(F value) {
    for (int y = 0; y < h_; ++y) {
      double row = 0.0;
      for (int x = 0; x < w_; ++x) {
        row += value(x, y);
        at(x + 1, y + 1) = at(x + 1, y) + row;
      }
    }
  }

  double window(int x, int y, int rx, int ry) const {
    const int x0 = std::max(0, x - rx);
    const int y0 = std::max(0, y - ry);
    const int x1 = std::min(w_ - 1, x + rx) + 1;
    const int y1 = std::min(h_ - 1, y + ry) + 1;
    return at(x1, y1) - at(x0, y1) - at(x1, y0) + at(x0, y0);
  }

 private:
  double& at(int x, int y) { return table_[static_cast<std::size_t>(y) * (w_ + 1) + x]; }
  double at(int x, int y) const { return table_[static_cast<std::size_t>(y) * (w_ + 1) + x]; }

  int w_, h_;
  std::vector<double> table_;
};

}  // namespace

std::vector<double> confidence_weights(std::span<const float> plane, double floor) {
  std::vector<double> w(plane.size());
  for (std::size_t i = 0; i < plane.size(); ++i) {
    w[i] = floor + (1.0 - floor) * std::abs(2.0 * plane[i] - 1.0);
  }
  return w;
}

SoftMaskVolume wgf_3d(std::span<const Image> guide, const SoftMaskVolume& volume,
                      const WgfConfig& cfg) {
  validate(cfg);
  check_guide(guide, volume);
  const std::size_t frame_size = volume.plane_size();
  std::vector<std::vector<float>> filtered(volume.classes());
  parallel_for(filtered.size(), [&](std::size_t c) {
    filtered[c] = filter_plane_3d(guide, volume, static_cast<int>(c), cfg);
  });
  std::vector<float> values(volume.values().size());
  for (int t = 0; t < volume.frames(); ++t) {
    for (int c = 0; c < volume.classes(); ++c) {
      std::copy_n(filtered[c].begin() + t * frame_size, frame_size,
                  values.begin() + (static_cast<std::size_t>(t) * volume.classes() + c) * frame_size);
    }
  }
  return SoftMaskVolume(volume.frames(), volume.classes(), volume.width(), volume.height(),
                        std::move(values));
}

std::vector<float> wgf_2d(const Image& guide, std::span<const float> plane, const WgfConfig& cfg) {
  validate(cfg);
  const int w = guide.width();
  const int h = guide.height();
  if (plane.size() != static_cast<std::size_t>(w) * h) {
    throw DimensionError("guide and plane sizes differ");
  }
  const StatLayout layout{guide.channels()};
  const int c = layout.channels;
  const auto weights = confidence_weights(plane, cfg.weight_floor);
  auto g = guide.data();

  auto stat_value = [&](int s, int x, int y) -> double {
    const std::size_t i = static_cast<std::size_t>(y) * w + x;
    const double wt = weights[i];
    const double p = plane[i];
    if (s == layout.w()) return wt;
    if (s == layout.wp()) return wt * p;
    if (s < layout.wip(0)) return wt * g[i * c + (s - layout.wi(0))];
    if (s < layout.wii(0)) return wt * g[i * c + (s - layout.wip(0))] * p;
    int idx = s - layout.wii(0);
    for (int k = 0; k < c; ++k) {
      for (int l = k; l < c; ++l, --idx) {
        if (idx == 0) return wt * g[i * c + k] * g[i * c + l];
      }
    }
    return 0.0;
  };

  std::vector<IntegralImage> tables;
  tables.reserve(layout.count());
  for (int s = 0; s < layout.count(); ++s) {
    tables.emplace_back(w, h);
    tables.back().build([&](int x, int y) { return stat_value(s, x, y); });
  }

  const std::size_t n = plane.size();
  std::vector<std::vector<double>> coeff(c + 1, std::vector<double>(n));
  std::vector<double> sums(layout.count());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int s = 0; s < layout.count(); ++s) {
        sums[s] = tables[s].window(x, y, cfg.radius_x, cfg.radius_y);
      }
      const Coefficients co = solve_window(layout, sums.data(), cfg.epsilon);
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      for (int k = 0; k < c; ++k) coeff[k][i] = co.a[k];
      coeff[c][i] = co.b;
    }
  }

  std::vector<IntegralImage> coeff_tables;
  for (int k = 0; k <= c; ++k) {
    coeff_tables.emplace_back(w, h);
    coeff_tables.back().build([&](int x, int y) { return coeff[k][static_cast<std::size_t>(y) * w + x]; });
  }

  std::vector<float> out(n);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double count =
          static_cast<double>(window_count(x, w, cfg.radius_x)) * window_count(y, h, cfg.radius_y);
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      double q = coeff_tables[c].window(x, y, cfg.radius_x, cfg.radius_y) / count;
      for (int k = 0; k < c; ++k) {
        q += coeff_tables[k].window(x, y, cfg.radius_x, cfg.radius_y) / count * g[i * c + k];
      }
      out[i] = static_cast<float>(std::clamp(q, 0.0, 1.0));
    }
  }
  return out;
}

SoftMaskVolume wgf_2d_per_frame(std::span<const Image> guide, const SoftMaskVolume& volume,
                                const WgfConfig& cfg) {
  check_guide(guide, volume);
  const std::size_t n = volume.plane_size();
  std::vector<float> values(volume.values().size());
  for (int t = 0; t < volume.frames(); ++t) {
    for (int c = 0; c < volume.classes(); ++c) {
      const auto out = wgf_2d(guide[t], volume.plane(t, c), cfg);
      std::copy(out.begin(), out.end(),
                values.begin() + (static_cast<std::size_t>(t) * volume.classes() + c) * n);
    }
  }
  return SoftMaskVolume(volume.frames(), volume.classes(), volume.width(), volume.height(),
                        std::move(values));
}

SoftMaskVolume temporal_gaussian_smooth(const SoftMaskVolume& volume, double sigma_frames) {
  const auto taps = gaussian_taps(sigma_frames);
  if (taps.size() == 1) return volume;
  const int t_count = volume.frames();
  const int classes = volume.classes();
  const std::size_t n = volume.plane_size();
  auto in = volume.values();
  std::vector<float> values(in.size());
  std::vector<double> series(t_count);
  for (int c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      for (int t = 0; t < t_count; ++t) {
        series[t] = in[(static_cast<std::size_t>(t) * classes + c) * n + i];
      }
      const auto blurred = blur_series(series, taps);
      for (int t = 0; t < t_count; ++t) {
        values[(static_cast<std::size_t>(t) * classes + c) * n + i] =
            static_cast<float>(std::clamp(blurred[t], 0.0, 1.0));
      }
    }
  }
  return SoftMaskVolume(t_count, classes, volume.width(), volume.height(), std::move(values));
}

}  // namespace segstab
