#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "aqkd/config.hpp"

namespace aqkd {

// Per-bin intensity choice of one party.
enum class Intensity : unsigned char { O = 0, Nu = 1, Mu = 2 };

// Combined two-bin intensity of one party in a pair.
enum class PairIntensity : unsigned char {
  O = 0,      // o + o
  Nu = 1,     // nu + o
  Mu = 2,     // mu + o
  TwoNu = 3,  // nu + nu
  TwoMu = 4,  // mu + mu   (over-intensity, discarded)
  MuNu = 5,   // mu + nu   (over-intensity, discarded)
};

const char* to_string(Intensity k);
const char* to_string(PairIntensity k);
PairIntensity combine(Intensity early, Intensity late);
bool over_intensity(PairIntensity k);

// Map keys used throughout: "mu|nu" for click classes, "[mu,nu]" for pair
// classes ("[2nu,2nu]" and friends for the double-intensity totals).
std::string click_key(Intensity a, Intensity b);
std::string pair_key(PairIntensity a, PairIntensity b);

// All counted set sizes: the interface between pairing and the security
// analysis.  Values are doubles so the same type carries expected (fractional)
// tallies from the analytic predictor.
struct TallySheet {
  PairingMode mode = PairingMode::Filtered;
  double n_bins = 0.0;
  std::map<std::string, double> n_click;          // kept clicks per class
  std::map<std::string, double> n_pair;           // retained pairs per class
  std::map<std::string, double> m_pair;           // errors per key class and [2nu,2nu]
  std::map<std::string, double> t_mean_by_class;  // mean pairing interval (s)
  std::map<std::string, double> discards;         // reason -> count

  double n(const std::string& key) const;
  double m(const std::string& key) const;
  double m_z() const;  // m_pair["[mu,mu]"]
  double m_x() const;  // m_pair["[2nu,2nu]"]
};

TallySheet tally_from_json(const nlohmann::json& j);
nlohmann::json tally_to_json(const TallySheet& t);

// Probability that a retained pair lands in class [k_a_tot, k_b_tot]:
// the splitting-sum over early/late intensity assignments with
// p_s = 1 (unfiltered) or 1 - p_mu p_nu - p_nu p_mu (filtered);
// [2nu,2nu] carries the phase-matching factor 2/M.
// Throws std::invalid_argument for over-intensity classes.
double pair_prob(PairIntensity k_a_tot, PairIntensity k_b_tot,
                 const ExperimentConfig& cfg, PairingMode mode);

struct DecoyEstimate {
  double s0_z_lower = 0.0;
  double s11_z_lower = 0.0;
  double s11_x_lower = 0.0;
  double t11_x_upper = 0.0;
  double e11_x_upper = 0.0;
  double phi11_z_upper = 0.0;
  bool feasible = false;
  std::vector<std::string> diagnostics;
};

// Decoy-state chain: observed counts -> expected-value bounds -> linear
// combinations -> observed-value bounds -> phase error rate.
DecoyEstimate decoy_estimate(const TallySheet& tally, const ExperimentConfig& cfg,
                             PairingMode mode);

// Error-correction leakage.  Filtered: n_[mu,mu] f H2(E_z).  Unfiltered: the
// sum over the four key classes.
double lambda_ec(const TallySheet& tally, double f_ec, PairingMode mode);

struct KeyRateReport {
  double lambda_ec = 0.0;
  double key_length = 0.0;     // bits
  double skr_bps = 0.0;        // F * key_length / N
  double skr_per_clock = 0.0;  // key_length / N
  double skc0_per_clock = 0.0;
  double ratio = 0.0;          // skr_per_clock / skc0_per_clock
  DecoyEstimate decoy;
  bool feasible = false;
};

// Finite-key length
//   l = s0 + s11 (1 - H2(phi)) - lambda_EC
//       - log2(2/eps_cor) - 2 log2(2/(eps' eps_hat)) - 2 log2(1/(2 eps_pa)),
// clamped at zero.
KeyRateReport key_length(const DecoyEstimate& est, double lambda_ec_bits,
                         const ExperimentConfig& cfg);

// Convenience: decoy_estimate + lambda_ec + key_length on one tally.
KeyRateReport evaluate_tally(const TallySheet& tally, const ExperimentConfig& cfg,
                             PairingMode mode);

nlohmann::json report_to_json(const KeyRateReport& report,
                              const ExperimentConfig& cfg);

}  // namespace aqkd
