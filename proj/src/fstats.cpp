#include "aqkd/fstats.hpp"

#include <cmath>
#include <stdexcept>

namespace aqkd {

Bounds chernoff_observed(double x_star, double eps) {
  const double b = std::log(1.0 / eps);
  Bounds r;
  r.upper = x_star + 0.5 * b + std::sqrt(2.0 * b * x_star + 0.25 * b * b);
  r.lower = std::fmax(x_star - std::sqrt(2.0 * b * x_star), 0.0);
  return r;
}

Bounds chernoff_expected(double x, double eps) {
  const double b = std::log(1.0 / eps);
  Bounds r;
  r.upper = x + b + std::sqrt(2.0 * b * x + b * b);
  r.lower = std::fmax(x - 0.5 * b - std::sqrt(2.0 * b * x + 0.25 * b * b), 0.0);
  return r;
}

double gamma_u(double n, double k, double lam, double eps) {
  if (!(lam > 0.0 && lam < 1.0))
    throw std::domain_error("gamma_u: lam must lie strictly inside (0,1)");
  const double nk = n + k;
  const double a = std::fmax(n, k);
  const double g =
      nk / (n * k) *
      std::log(nk / (2.0 * M_PI * n * k * lam * (1.0 - lam) * eps * eps));
  const double ag = a * g / nk;
  const double num = (1.0 - 2.0 * lam) * ag + std::sqrt(ag * ag + 4.0 * lam * (1.0 - lam) * g);
  const double den = 2.0 + 2.0 * ag * a / nk;
  return num / den;
}

double binary_entropy(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

}  // namespace aqkd
