#pragma once

#include "aqkd/config.hpp"

namespace aqkd {

// Search box for the symmetric source parameters.
struct ParamBox {
  double mu_lo = 0.3, mu_hi = 0.5;
  double nu_lo = 0.0, nu_hi = 0.1;
  double p_mu_lo = 0.1, p_mu_hi = 0.4;
  double p_nu_lo = 0.1, p_nu_hi = 0.4;
};

struct OptimizeResult {
  double mu = 0.0, nu = 0.0, p_mu = 0.0, p_nu = 0.0;
  double skr_per_clock = 0.0;
  bool feasible = false;  // false: no positive key anywhere in the box
};

// Maximizes predicted key per clock over (mu, nu, p_mu, p_nu) with
// p_o = 1 - p_mu - p_nu >= 0.05 and nu < mu: coarse grid (grid_n points per
// axis) followed by Nelder-Mead refinement from the best grid point.
// Deterministic for a given grid size.
OptimizeResult optimize_params(const ExperimentConfig& tmpl, const ParamBox& box,
                               PairingMode mode, int grid_n = 8, int threads = 0);

// Applies an optimizer result to a config template.
ExperimentConfig with_params(const ExperimentConfig& tmpl, double mu, double nu,
                             double p_mu, double p_nu);

}  // namespace aqkd
