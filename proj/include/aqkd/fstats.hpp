#pragma once

namespace aqkd {

struct Bounds {
  double lower = 0.0;
  double upper = 0.0;
};

// Chernoff bound: expected count -> interval for the observed count.
// upper = x* + b/2 + sqrt(2 b x* + b^2/4), lower = x* - sqrt(2 b x*),
// b = ln(1/eps); the lower bound is clamped at zero.
Bounds chernoff_observed(double x_star, double eps);

// Variant Chernoff bound: observed count -> interval for the expected count.
// upper* = x + b + sqrt(2 b x + b^2), lower* = max{x - b/2 - sqrt(2 b x + b^2/4), 0}.
Bounds chernoff_expected(double x, double eps);

// Random-sampling-without-replacement correction for the phase error rate.
// Throws std::domain_error when lam is outside (0,1); callers clamp first.
double gamma_u(double n, double k, double lam, double eps);

// Binary entropy in bits; returns 0 outside (0,1).
double binary_entropy(double x);

}  // namespace aqkd
