#pragma once
// small numeric utilities shared across the library

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

namespace relaytune {

inline constexpr double kPi = 3.14159265358979323846;

// deterministic stream derivation: hash a base seed with stream indices so that
// independent runs (per class, per sample, per restart) get decorrelated rngs
inline uint64_t derive_seed(uint64_t base, uint64_t a, uint64_t b = 0, uint64_t c = 0) {
  uint64_t z = base;
  for (uint64_t v : {a, b, c}) {
    z += 0x9e3779b97f4a7c15ull + v;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    z = z ^ (z >> 31);
  }
  return z;
}

inline double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}

// plain bisection on a bracketing interval; f(lo) and f(hi) must have opposite signs
inline double bisect(const std::function<double(double)>& f, double lo, double hi,
                     double rel_tol = 1e-9, int max_iter = 200) {
  double flo = f(lo);
  for (int i = 0; i < max_iter; ++i) {
    double mid = 0.5 * (lo + hi);
    if ((hi - lo) <= rel_tol * (std::abs(lo) + std::abs(hi)) * 0.5) return mid;
    double fm = f(mid);
    if ((flo <= 0) == (fm <= 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

struct NelderMeadResult {
  std::vector<double> x;
  double f = 0.0;
  int iterations = 0;
  int evaluations = 0;
};

// standard simplex search (reflection 1, expansion 2, contraction 0.5, shrink 0.5).
// terminates on relative simplex size or iteration cap.
inline NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                    const std::vector<double>& x0,
                                    const std::vector<double>& step0,
                                    double rel_tol = 1e-4, int max_iter = 500) {
  const size_t n = x0.size();
  std::vector<std::vector<double>> xs(n + 1, x0);
  std::vector<double> fs(n + 1);
  NelderMeadResult out;
  for (size_t i = 0; i < n; ++i) xs[i + 1][i] += step0[i];
  for (size_t i = 0; i <= n; ++i) {
    fs[i] = f(xs[i]);
    ++out.evaluations;
  }
  auto order = [&] {
    for (size_t i = 0; i <= n; ++i)
      for (size_t j = i + 1; j <= n; ++j)
        if (fs[j] < fs[i]) {
          std::swap(fs[i], fs[j]);
          std::swap(xs[i], xs[j]);
        }
  };
  order();
  for (int it = 0; it < max_iter; ++it) {
    ++out.iterations;
    double size = 0.0, scale = 1.0;
    for (size_t i = 0; i < n; ++i) {
      scale = std::max(scale, std::abs(xs[0][i]));
      for (size_t j = 1; j <= n; ++j) size = std::max(size, std::abs(xs[j][i] - xs[0][i]));
    }
    if (size <= rel_tol * scale) break;

    std::vector<double> cen(n, 0.0);
    for (size_t j = 0; j < n; ++j) {
      for (size_t i = 0; i < n; ++i) cen[i] += xs[j][i];
    }
    for (size_t i = 0; i < n; ++i) cen[i] /= double(n);

    auto blend = [&](double t) {
      std::vector<double> x(n);
      for (size_t i = 0; i < n; ++i) x[i] = cen[i] + t * (xs[n][i] - cen[i]);
      return x;
    };
    std::vector<double> xr = blend(-1.0);
    double fr = f(xr);
    ++out.evaluations;
    if (fr < fs[0]) {
      std::vector<double> xe = blend(-2.0);
      double fe = f(xe);
      ++out.evaluations;
      if (fe < fr) {
        xs[n] = xe;
        fs[n] = fe;
      } else {
        xs[n] = xr;
        fs[n] = fr;
      }
    } else if (fr < fs[n - 1]) {
      xs[n] = xr;
      fs[n] = fr;
    } else {
      bool outside = fr < fs[n];
      std::vector<double> xc = blend(outside ? -0.5 : 0.5);
      double fc = f(xc);
      ++out.evaluations;
      if (fc < std::min(fr, fs[n])) {
        xs[n] = xc;
        fs[n] = fc;
      } else {
        for (size_t j = 1; j <= n; ++j) {
          for (size_t i = 0; i < n; ++i) xs[j][i] = xs[0][i] + 0.5 * (xs[j][i] - xs[0][i]);
          fs[j] = f(xs[j]);
          ++out.evaluations;
        }
      }
    }
    order();
  }
  out.x = xs[0];
  out.f = fs[0];
  return out;
}

}  // namespace relaytune
