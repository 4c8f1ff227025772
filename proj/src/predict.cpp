#include "aqkd/predict.hpp"

#include <array>
#include <cmath>
#include <vector>

#include "aqkd/channel.hpp"

namespace aqkd {

namespace {

constexpr int kThetaSamples = 4096;

struct ClassGrid {
  double value_a[3];     // intensity values per index o, nu, mu
  double value_b[3];
  double prob[3];        // selection probabilities (shared by both senders)
  double click_p[3][3];  // per-bin click-and-keep probability by class
  double q_tot = 0.0;
  double cond_p[3][3];   // class probability of one kept click
};

bool filtered_out(PairingMode mode, int a, int b) {
  return mode == PairingMode::Filtered &&
         ((a == 2 && b == 1) || (a == 1 && b == 2));
}

ClassGrid class_grid(const ExperimentConfig& cfg, PairingMode mode) {
  const auto& s = cfg.source;
  ClassGrid g;
  g.value_a[0] = 0.0;
  g.value_a[1] = s.nu_a;
  g.value_a[2] = s.mu_a;
  g.value_b[0] = 0.0;
  g.value_b[1] = s.nu_b;
  g.value_b[2] = s.mu_b;
  g.prob[0] = s.p_o;
  g.prob[1] = s.p_nu;
  g.prob[2] = s.p_mu;
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      const double q = gain_total(g.value_a[a], g.value_b[b], cfg.link);
      g.click_p[a][b] = filtered_out(mode, a, b) ? 0.0 : g.prob[a] * g.prob[b] * q;
      g.q_tot += g.click_p[a][b];
    }
  }
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) g.cond_p[a][b] = g.click_p[a][b] / g.q_tot;
  return g;
}

using Splitting = std::array<int, 2>;  // early, late intensity index

const std::vector<Splitting>& splittings_of(PairIntensity k) {
  static const std::vector<Splitting> o{{0, 0}};
  static const std::vector<Splitting> nu{{1, 0}, {0, 1}};
  static const std::vector<Splitting> mu{{2, 0}, {0, 2}};
  static const std::vector<Splitting> two_nu{{1, 1}};
  static const std::vector<Splitting> none{};
  switch (k) {
    case PairIntensity::O: return o;
    case PairIntensity::Nu: return nu;
    case PairIntensity::Mu: return mu;
    case PairIntensity::TwoNu: return two_nu;
    default: return none;
  }
}

constexpr std::array<PairIntensity, 4> kRetained{
    PairIntensity::O, PairIntensity::Nu, PairIntensity::Mu, PairIntensity::TwoNu};

double class_product(const ClassGrid& g, PairIntensity ka, PairIntensity kb) {
  double sum = 0.0;
  for (const auto& sa : splittings_of(ka))
    for (const auto& sb : splittings_of(kb))
      sum += g.cond_p[sa[0]][sb[0]] * g.cond_p[sa[1]][sb[1]];
  return sum;
}

struct XIntegrals {
  double n_kept = 0.0;  // phase-matched [2nu,2nu] pair probability (per pair)
  double m_kept = 0.0;  // error share of n_kept
};

// The only class whose two clicks both depend on the interference phase.
// The pair keeps slice differences 0 and M/2; the late click sits at the
// early phase plus the slice offset plus the drift accumulated over the
// mean pairing interval.
XIntegrals x_integrals(const ExperimentConfig& cfg, const ClassGrid& g,
                       double t_mean) {
  const auto& s = cfg.source;
  const auto& nz = cfg.noise;
  const double delta = t_mean * (2.0 * M_PI * nz.delta_f_hz + nz.sigma_rad_s);
  const double weight = (g.prob[1] * g.prob[1] / g.q_tot) *
                        (g.prob[1] * g.prob[1] / g.q_tot);
  double n_acc = 0.0, m_acc = 0.0;
  for (int i = 0; i < kThetaSamples; ++i) {
    const double th = 2.0 * M_PI * i / kThetaSamples;
    const GainPair e = gain_conditional(th, s.nu_a, s.nu_b, cfg.link);
    const GainPair l0 = gain_conditional(th + delta, s.nu_a, s.nu_b, cfg.link);
    const GainPair lp = gain_conditional(th + M_PI + delta, s.nu_a, s.nu_b, cfg.link);
    n_acc += (e.q_l + e.q_r) * (l0.q_l + l0.q_r + lp.q_l + lp.q_r) / 2.0;
    // slice difference 0: opposite detectors flag an error; slice M/2: same.
    const double m0 = (1.0 - nz.e_hom) * (e.q_l * l0.q_r + e.q_r * l0.q_l) +
                      nz.e_hom * (e.q_l * l0.q_l + e.q_r * l0.q_r);
    const double mp = (1.0 - nz.e_hom) * (e.q_l * lp.q_l + e.q_r * lp.q_r) +
                      nz.e_hom * (e.q_l * lp.q_r + e.q_r * lp.q_l);
    m_acc += (m0 + mp) / 2.0;
  }
  XIntegrals x;
  x.n_kept = weight * (2.0 / s.m_slices) * n_acc / kThetaSamples;
  x.m_kept = weight * (2.0 / s.m_slices) * m_acc / kThetaSamples;
  return x;
}

}  // namespace

double q_tot(const ExperimentConfig& cfg, PairingMode mode) {
  return class_grid(cfg, mode).q_tot;
}

PairingStats pairing_stats(const ExperimentConfig& cfg, PairingMode mode) {
  PairingStats st;
  st.q_tot = q_tot(cfg, mode);
  const double n_tc = static_cast<double>(cfg.link.n_tc());
  st.q_tc = -std::expm1(n_tc * std::log1p(-st.q_tot));
  st.n_tot = cfg.link.n_bins * st.q_tot / (1.0 + 1.0 / st.q_tc);
  st.t_mean = (1.0 - n_tc * st.q_tot * (1.0 / st.q_tc - 1.0)) /
              (cfg.link.clock_hz * st.q_tot);
  return st;
}

TallySheet expected_tallies(const ExperimentConfig& cfg, PairingMode mode) {
  const ClassGrid g = class_grid(cfg, mode);
  const PairingStats st = pairing_stats(cfg, mode);
  const double n_tot = st.n_tot;

  TallySheet t;
  t.mode = mode;
  t.n_bins = cfg.link.n_bins;

  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      if (filtered_out(mode, a, b)) continue;
      t.n_click[click_key(static_cast<Intensity>(a), static_cast<Intensity>(b))] =
          cfg.link.n_bins * g.click_p[a][b];
    }
  }

  const XIntegrals x = x_integrals(cfg, g, st.t_mean);
  for (PairIntensity ka : kRetained) {
    for (PairIntensity kb : kRetained) {
      const std::string key = pair_key(ka, kb);
      double n;
      if (ka == PairIntensity::TwoNu && kb == PairIntensity::TwoNu) {
        n = n_tot * x.n_kept;
        t.m_pair[key] = n_tot * x.m_kept;
        t.discards["x_phase_sift"] = n_tot * class_product(g, ka, kb) - n;
      } else {
        n = n_tot * class_product(g, ka, kb);
      }
      t.n_pair[key] = n;
      t.t_mean_by_class[key] = st.t_mean;
    }
  }
  t.t_mean_by_class["all"] = st.t_mean;

  // Z-type errors: the splittings that put both nonvacuum pulses in one bin
  // and leave the other bin to a double dark count carry deterministically
  // anti-correlated bits.
  for (int a = 1; a < 3; ++a) {
    for (int b = 1; b < 3; ++b) {
      const auto key = pair_key(static_cast<PairIntensity>(a),
                                static_cast<PairIntensity>(b));
      t.m_pair[key] = n_tot * 2.0 * g.cond_p[a][b] * g.cond_p[0][0];
    }
  }

  // Splittings whose per-side totals exceed mu (mu+mu or mu+nu) are dropped.
  double over = 0.0;
  for (int ae = 0; ae < 3; ++ae)
    for (int al = 0; al < 3; ++al)
      for (int be = 0; be < 3; ++be)
        for (int bl = 0; bl < 3; ++bl) {
          const PairIntensity ka =
              combine(static_cast<Intensity>(ae), static_cast<Intensity>(al));
          const PairIntensity kb =
              combine(static_cast<Intensity>(be), static_cast<Intensity>(bl));
          if (over_intensity(ka) || over_intensity(kb))
            over += g.cond_p[ae][be] * g.cond_p[al][bl];
        }
  t.discards["pair_over_intensity"] = n_tot * over;
  t.discards["lone_clicks"] = cfg.link.n_bins * st.q_tot - 2.0 * n_tot;
  if (mode == PairingMode::Filtered) {
    const double q_mn = g.prob[2] * g.prob[1] *
                        gain_total(g.value_a[2], g.value_b[1], cfg.link);
    const double q_nm = g.prob[1] * g.prob[2] *
                        gain_total(g.value_a[1], g.value_b[2], cfg.link);
    t.discards["click_filtered"] = cfg.link.n_bins * (q_mn + q_nm);
  }
  return t;
}

PkScaling pk_scaling(const ExperimentConfig& cfg, PairingMode mode) {
  const PairingStats st = pairing_stats(cfg, mode);
  PkScaling pk;
  pk.p_k = st.n_tot / cfg.link.n_bins;
  pk.c = pk.p_k / std::sqrt(cfg.link.eta_a() * cfg.link.eta_b());
  return pk;
}

KeyRateReport predict_report(const ExperimentConfig& cfg, PairingMode mode) {
  return evaluate_tally(expected_tallies(cfg, mode), cfg, mode);
}

}  // namespace aqkd
