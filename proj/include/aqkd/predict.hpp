#pragma once

#include "aqkd/config.hpp"
#include "aqkd/keyrate.hpp"

namespace aqkd {

struct PairingStats {
  double q_tot = 0.0;   // per-bin kept-click probability
  double q_tc = 0.0;    // P(next click within T_c)
  double n_tot = 0.0;   // expected number of pairs
  double t_mean = 0.0;  // mean pairing interval (s)
};

// Intensity-probability-weighted sum of gain_total over the nine click
// classes, minus the (mu|nu) and (nu|mu) classes in Filtered mode.
double q_tot(const ExperimentConfig& cfg, PairingMode mode);

// q_Tc = 1 - (1 - q_tot)^{N_Tc};  n_tot = N q_tot / (1 + 1/q_Tc);
// t_mean = (1 - N_Tc q_tot (1/q_Tc - 1)) / (F q_tot).
PairingStats pairing_stats(const ExperimentConfig& cfg, PairingMode mode);

// Expected-valued TallySheet: per-class kept-click counts, pair counts for
// every retained class (splitting products; theta-integrated for [2nu,2nu]),
// X errors at phase offset delta = t_mean (2 pi delta_f + sigma), and Z-type
// error counts from the dark-count splittings (one bin (o|o), the other a
// both-senders class).  Hardware error sources beyond this are not modeled,
// so expected E_z underestimates measured values.
TallySheet expected_tallies(const ExperimentConfig& cfg, PairingMode mode);

struct PkScaling {
  double p_k = 0.0;  // pairs per transmitted bin, n_tot / N
  double c = 0.0;    // P(K) / sqrt(eta_a eta_b)
};

// Coincidence probability and its sqrt(eta) scaling constant, with eta the
// full model transmittance product including insertion loss.
PkScaling pk_scaling(const ExperimentConfig& cfg, PairingMode mode);

// Model prediction end to end: expected_tallies -> decoy -> key length.
KeyRateReport predict_report(const ExperimentConfig& cfg, PairingMode mode);

}  // namespace aqkd
