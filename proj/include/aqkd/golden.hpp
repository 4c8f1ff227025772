#pragma once

#include <array>
#include <string>
#include <vector>

#include "aqkd/config.hpp"
#include "aqkd/keyrate.hpp"

namespace aqkd {

// One bundled reference experiment: configuration, measured tallies, and the
// published evaluation results used as regression targets.
struct GoldenSetting {
  const char* name;
  double distance_km;
  double l_a_km, l_b_km;
  double loss_a_db, loss_b_db, loss_total_db;
  double mu, nu, p_mu, p_nu, p_o;
  double n_bins, t_c_s;
  double sigma_rad_s;

  // measured click classes (after decoy disclosure)
  double n_mu_nu, n_nu_mu, n_nu_nu, n_nu_o, n_o_nu;
  // measured pair classes
  double n_oo, n_nn, n_mm, m_mm, n_no, n_mo, n_on, n_om;
  double n_xx, m_xx, n_xo, n_ox;
  // published evaluation
  double e_z, e_x;
  double s11_z, s11_x, phi11_z;
  double skr_bps, skc0_per_clock, ratio;
  double t_mean_sim_us;
  double pk_const;

  ExperimentConfig config() const;
  TallySheet tally() const;
};

const std::array<GoldenSetting, 4>& golden_settings();

// Single f_ec in [1.0, 1.3] minimizing the worst relative SKR error over the
// four reference settings.
double calibrate_f_ec();

struct SuiteLine {
  std::string name;
  bool pass = false;
  std::string detail;
};

// Regression suite over the reference datasets: decoy estimates, SKR with the
// calibrated f_ec, repeaterless bound and ratios, pairing-interval closed
// form, and coincidence scaling constants.
std::vector<SuiteLine> run_golden_suite(double* f_ec_out = nullptr);

}  // namespace aqkd
