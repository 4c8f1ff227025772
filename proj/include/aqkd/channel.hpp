#pragma once

#include "aqkd/config.hpp"

namespace aqkd {

// Exclusive single-detector click probabilities at a fixed phase difference.
struct GainPair {
  double q_l = 0.0;
  double q_r = 0.0;
};

// Modified Bessel function I0, series for small |x| and asymptotic expansion
// for large, relative error <= 1e-12 over the tested range.
double bessel_i0(double x);

// 10^{-(alpha*length + extra)/10}
double transmittance(double length_km, double alpha_db_per_km, double extra_db);

// Click probabilities for detectors L and R when the senders' phase
// difference at the interferometer is theta.  The L port receives intensity
// w/2 + c*cos(theta) and the R port w/2 - c*cos(theta), with
// w = eta_a k_a + eta_b k_b and c = sqrt(eta_a k_a eta_b k_b), so each
// factor stays a probability (AM-GM gives w/2 >= c).
GainPair gain_conditional(double theta, double k_a, double k_b,
                          const LinkConfig& link);

// Phase-averaged click probability; the closed form with Bessel I0 equal to
// the theta-average of gain_conditional.
double gain_total(double k_a, double k_b, const LinkConfig& link);

// X-basis error rate as a function of the pairing interval:
// (1-V2)/2 + (V2/2) [1 - exp(-sigma^2 dt^2/2) cos(2 pi delta_f dt)].
double qber_x_drift(double delta_t_s, const NoiseConfig& noise);

// Repeaterless secret-key capacity per clock, -log2(1 - eta).
// Throws std::domain_error for eta >= 1.
double skc0(double eta_total);

}  // namespace aqkd
