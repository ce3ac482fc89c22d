#pragma once

// Reference computations written directly from the definitions, shared by
// the unit tests and the acceptance run. Plain loops, no library code.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <torch/torch.h>

namespace oracle {

using Plane = std::vector<std::vector<double>>;

inline Plane random_plane(int h, int w, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Plane p(h, std::vector<double>(w));
  for (auto& row : p)
    for (auto& v : row) v = u(rng);
  return p;
}

inline Plane noisy_copy(const Plane& p, double sigma, std::mt19937& rng) {
  std::normal_distribution<double> noise(0.0, sigma);
  Plane out = p;
  for (auto& row : out)
    for (auto& v : row) v = std::clamp(v + noise(rng), 0.0, 1.0);
  return out;
}

inline torch::Tensor to_tensor(const Plane& p) {
  const int h = static_cast<int>(p.size());
  const int w = static_cast<int>(p[0].size());
  auto t = torch::empty({h, w}, torch::kFloat64);
  auto a = t.accessor<double, 2>();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) a[y][x] = p[y][x];
  return t;
}

struct SsimParts {
  double ssim;
  double cs;  // contrast-structure factor alone
};

// Mean over every valid 11x11 window with Gaussian weights (sigma 1.5).
inline SsimParts ssim(const Plane& a, const Plane& b, double range = 1.0) {
  constexpr int n = 11;
  constexpr double sigma = 1.5;
  double g[n][n];
  double total = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      g[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / (2 * sigma * sigma));
      total += g[i][j];
    }
  for (auto& row : g)
    for (auto& v : row) v /= total;
  const double c1 = (0.01 * range) * (0.01 * range), c2 = (0.03 * range) * (0.03 * range);
  const int h = static_cast<int>(a.size()), w = static_cast<int>(a[0].size());
  double sum_ssim = 0.0, sum_cs = 0.0;
  int count = 0;
  for (int y = 0; y + n <= h; ++y)
    for (int x = 0; x + n <= w; ++x) {
      double ma = 0, mb = 0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          ma += g[i][j] * a[y + i][x + j];
          mb += g[i][j] * b[y + i][x + j];
        }
      double va = 0, vb = 0, cov = 0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const double da = a[y + i][x + j] - ma, db = b[y + i][x + j] - mb;
          va += g[i][j] * da * da;
          vb += g[i][j] * db * db;
          cov += g[i][j] * da * db;
        }
      const double cs = (2 * cov + c2) / (va + vb + c2);
      sum_cs += cs;
      sum_ssim += (2 * ma * mb + c1) / (ma * ma + mb * mb + c1) * cs;
      ++count;
    }
  return {sum_ssim / count, sum_cs / count};
}

inline Plane halve(const Plane& p) {
  const std::size_t h = p.size() / 2, w = p[0].size() / 2;
  Plane out(h, std::vector<double>(w));
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      out[y][x] = (p[2 * y][2 * x] + p[2 * y][2 * x + 1] + p[2 * y + 1][2 * x] + p[2 * y + 1][2 * x + 1]) / 4;
  return out;
}

// Five scales: contrast-structure at the first four, full SSIM at the last.
inline double ms_ssim(Plane a, Plane b) {
  const double weights[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
  double result = 1.0;
  for (int level = 0; level < 5; ++level) {
    const auto s = ssim(a, b);
    const double term = level == 4 ? s.ssim : s.cs;
    result *= std::pow(std::max(term, 0.0), weights[level]);
    a = halve(a);
    b = halve(b);
  }
  return result;
}

struct GradientCheck {
  double worst = 0.0;  // largest |numeric - analytic| / max(|numeric|, scale)
  int probes = 0;
};

// Central differences on randomly chosen entries of a float64 input against
// autograd. The error is normalized by the larger of the entry's numeric
// derivative and the largest analytic derivative.
inline GradientCheck check_gradient(const std::function<torch::Tensor(const torch::Tensor&)>& f,
                                    torch::Tensor x, unsigned seed, int probes = 24, double h = 1e-3) {
  x = x.detach().clone().to(torch::kFloat64).requires_grad_(true);
  f(x).backward();
  const auto analytic = x.grad().detach().clone().view(-1);
  const double scale = std::max(analytic.abs().max().item<double>(), 1e-12);
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int64_t> pick(0, x.numel() - 1);
  auto flat = x.detach().view(-1);
  GradientCheck result;
  for (int k = 0; k < probes; ++k) {
    const auto i = pick(rng);
    const double saved = flat[i].item<double>();
    flat[i] = saved + h;
    const double up = f(x.detach()).item<double>();
    flat[i] = saved - h;
    const double down = f(x.detach()).item<double>();
    flat[i] = saved;
    const double numeric = (up - down) / (2 * h);
    const double err = std::abs(numeric - analytic[i].item<double>()) / std::max(std::abs(numeric), scale);
    result.worst = std::max(result.worst, err);
    ++result.probes;
  }
  return result;
}

}  // namespace oracle
