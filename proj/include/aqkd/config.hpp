#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include <nlohmann/json_fwd.hpp>

namespace aqkd {

// Thrown for malformed or invariant-violating configuration input.
// The message names the violated invariant; the CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

enum class PairingMode { Filtered, Unfiltered };

const char* to_string(PairingMode mode);
PairingMode pairing_mode_from_string(const std::string& s);

// Intensity settings and per-bin selection probabilities for both senders.
// The vacuum intensity o is identically zero and not stored.
struct SourceConfig {
  double mu_a = 0.0;
  double mu_b = 0.0;
  double nu_a = 0.0;
  double nu_b = 0.0;
  double p_mu = 0.0;
  double p_nu = 0.0;
  double p_o = 0.0;
  int m_slices = 16;  // discrete phase slices per 2*pi

  static SourceConfig symmetric(double mu, double nu, double p_mu, double p_nu,
                                int m_slices = 16);
};

// Fiber link, receiver optics, detectors, and run dimensions.
//
// Arm transmittances include the receiver insertion loss.  When a measured
// per-arm fiber loss is supplied it replaces alpha*l for that arm; the
// lengths are still carried for reporting.
struct LinkConfig {
  double l_a_km = 0.0;
  double l_b_km = 0.0;
  double alpha_db_per_km = 0.16;
  double insertion_db = 1.50;
  std::optional<double> loss_a_db;  // measured fiber-only loss, arm A
  std::optional<double> loss_b_db;  // measured fiber-only loss, arm B
  double eta_d_l = 1.0;
  double eta_d_r = 1.0;
  double p_d_l = 0.0;  // per-bin dark probability, detector L
  double p_d_r = 0.0;
  double clock_hz = 1e9;  // F
  double t_c_s = 0.0;     // maximum pairing interval T_c
  double n_bins = 0.0;    // total transmitted bins N

  double fiber_loss_a_db() const;
  double fiber_loss_b_db() const;
  double fiber_loss_total_db() const;  // excludes insertion; feeds the repeaterless bound
  double eta_a() const;                // includes insertion
  double eta_b() const;
  std::uint64_t n_tc() const;          // pairing window in bins, F*T_c
};

// Interference noise model: HOM misalignment, fiber drift, laser offset.
struct NoiseConfig {
  double e_hom = 0.0;
  double sigma_rad_s = 0.0;  // std dev of the fiber phase drift rate
  double delta_f_hz = 0.0;   // laser frequency offset
  double v2 = 0.5;           // second-order interference visibility
};

// Failure-probability budget and error-correction inefficiency.
// All component epsilons default to the base epsilon.
struct SecurityConfig {
  double epsilon = 1e-10;
  double f_ec = 1.10;
  double eps_cor = 1e-10;
  double eps_pa = 1e-10;
  double eps_prime = 1e-10;
  double eps_hat = 1e-10;
  double eps_e = 1e-10;
  double eps_beta = 1e-10;

  // 2(eps' + 2 eps_e + eps_hat) + 12 eps + eps_beta + eps_pa
  double eps_sec() const;
  double eps_tol() const;  // eps_cor + eps_sec
};

struct ExperimentConfig {
  SourceConfig source;
  LinkConfig link;
  NoiseConfig noise;
  SecurityConfig security;
  PairingMode mode = PairingMode::Filtered;
};

// Checks every structural invariant; throws ConfigError naming the first
// violated one.
void validate(const ExperimentConfig& cfg);

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::string& path);

}  // namespace aqkd
