#include "aqkd/optimize.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <future>
#include <limits>
#include <thread>
#include <vector>

#include "aqkd/predict.hpp"

namespace aqkd {

namespace {

constexpr double kMinVacuumProb = 0.05;

using Point = std::array<double, 4>;  // mu, nu, p_mu, p_nu

bool in_domain(const ParamBox& box, const Point& x) {
  const auto [mu, nu, p_mu, p_nu] = x;
  return mu >= box.mu_lo && mu <= box.mu_hi && nu >= box.nu_lo &&
         nu <= box.nu_hi && p_mu >= box.p_mu_lo && p_mu <= box.p_mu_hi &&
         p_nu >= box.p_nu_lo && p_nu <= box.p_nu_hi && nu > 0.0 && nu < mu &&
         1.0 - p_mu - p_nu >= kMinVacuumProb;
}

double objective(const ExperimentConfig& tmpl, const ParamBox& box,
                 PairingMode mode, const Point& x) {
  if (!in_domain(box, x)) return -std::numeric_limits<double>::infinity();
  return predict_report(with_params(tmpl, x[0], x[1], x[2], x[3]), mode)
      .skr_per_clock;
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i)
    v[i] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
  return v;
}

}  // namespace

ExperimentConfig with_params(const ExperimentConfig& tmpl, double mu, double nu,
                             double p_mu, double p_nu) {
  ExperimentConfig cfg = tmpl;
  cfg.source = SourceConfig::symmetric(mu, nu, p_mu, p_nu, tmpl.source.m_slices);
  return cfg;
}

OptimizeResult optimize_params(const ExperimentConfig& tmpl, const ParamBox& box,
                               PairingMode mode, int grid_n, int threads) {
  std::vector<Point> grid;
  for (double mu : linspace(box.mu_lo, box.mu_hi, grid_n))
    for (double nu : linspace(box.nu_lo, box.nu_hi, grid_n))
      for (double p_mu : linspace(box.p_mu_lo, box.p_mu_hi, grid_n))
        for (double p_nu : linspace(box.p_nu_lo, box.p_nu_hi, grid_n)) {
          const Point x{mu, nu, p_mu, p_nu};
          if (in_domain(box, x)) grid.push_back(x);
        }

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t n_workers =
      std::max<std::size_t>(1, threads > 0 ? threads : hw);
  std::vector<double> value(grid.size());
  auto eval_range = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i)
      value[i] = objective(tmpl, box, mode, grid[i]);
  };
  if (n_workers == 1 || grid.size() < 2 * n_workers) {
    eval_range(0, grid.size());
  } else {
    std::vector<std::future<void>> futs;
    const std::size_t chunk = (grid.size() + n_workers - 1) / n_workers;
    for (std::size_t lo = 0; lo < grid.size(); lo += chunk)
      futs.push_back(std::async(std::launch::async, eval_range, lo,
                                std::min(lo + chunk, grid.size())));
    for (auto& f : futs) f.get();
  }

  Point best{box.mu_lo, box.nu_lo, box.p_mu_lo, box.p_nu_lo};
  double best_v = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (value[i] > best_v) {
      best_v = value[i];
      best = grid[i];
    }
  }

  // Nelder-Mead refinement from the best grid point; out-of-domain vertices
  // score -inf, which keeps the simplex inside the box.
  if (std::isfinite(best_v)) {
    const double span[4] = {(box.mu_hi - box.mu_lo) * 0.08,
                            (box.nu_hi - box.nu_lo) * 0.08,
                            (box.p_mu_hi - box.p_mu_lo) * 0.08,
                            (box.p_nu_hi - box.p_nu_lo) * 0.08};
    std::array<Point, 5> simplex;
    std::array<double, 5> fv;
    simplex[0] = best;
    for (int i = 1; i < 5; ++i) {
      simplex[i] = best;
      simplex[i][i - 1] += span[i - 1];
    }
    for (int i = 0; i < 5; ++i)
      fv[i] = objective(tmpl, box, mode, simplex[i]);

    for (int iter = 0; iter < 200; ++iter) {
      std::array<int, 5> order{0, 1, 2, 3, 4};
      std::sort(order.begin(), order.end(),
                [&fv](int a, int b) { return fv[a] > fv[b]; });
      const int hi = order[4], lo = order[0];
      if (std::isfinite(fv[hi]) &&
          fv[lo] - fv[hi] <= 1e-12 * std::max(1e-12, std::fabs(fv[lo])))
        break;
      Point centroid{0, 0, 0, 0};
      for (int i = 0; i < 5; ++i)
        if (i != hi)
          for (int d = 0; d < 4; ++d) centroid[d] += simplex[i][d] / 4.0;
      auto blend = [&](double t) {
        Point p;
        for (int d = 0; d < 4; ++d)
          p[d] = centroid[d] + t * (centroid[d] - simplex[hi][d]);
        return p;
      };
      const Point refl = blend(1.0);
      const double f_refl = objective(tmpl, box, mode, refl);
      if (f_refl > fv[lo]) {
        const Point expd = blend(2.0);
        const double f_expd = objective(tmpl, box, mode, expd);
        if (f_expd > f_refl) {
          simplex[hi] = expd;
          fv[hi] = f_expd;
        } else {
          simplex[hi] = refl;
          fv[hi] = f_refl;
        }
      } else if (f_refl > fv[order[3]]) {
        simplex[hi] = refl;
        fv[hi] = f_refl;
      } else {
        const Point ctr = blend(-0.5);
        const double f_ctr = objective(tmpl, box, mode, ctr);
        if (f_ctr > fv[hi]) {
          simplex[hi] = ctr;
          fv[hi] = f_ctr;
        } else {
          for (int i = 0; i < 5; ++i) {
            if (i == lo) continue;
            for (int d = 0; d < 4; ++d)
              simplex[i][d] = simplex[lo][d] + 0.5 * (simplex[i][d] - simplex[lo][d]);
            fv[i] = objective(tmpl, box, mode, simplex[i]);
          }
        }
      }
    }
    for (int i = 0; i < 5; ++i) {
      if (fv[i] > best_v) {
        best_v = fv[i];
        best = simplex[i];
      }
    }
  }

  OptimizeResult r;
  r.mu = best[0];
  r.nu = best[1];
  r.p_mu = best[2];
  r.p_nu = best[3];
  r.skr_per_clock = std::isfinite(best_v) ? std::max(best_v, 0.0) : 0.0;
  r.feasible = std::isfinite(best_v) && best_v > 0.0;
  return r;
}

}  // namespace aqkd
