#include "aqkd/keyrate.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "aqkd/channel.hpp"
#include "aqkd/fstats.hpp"
#include "aqkd/version.hpp"

namespace aqkd {

using nlohmann::json;

const char* to_string(Intensity k) {
  switch (k) {
    case Intensity::O: return "o";
    case Intensity::Nu: return "nu";
    case Intensity::Mu: return "mu";
  }
  return "?";
}

const char* to_string(PairIntensity k) {
  switch (k) {
    case PairIntensity::O: return "o";
    case PairIntensity::Nu: return "nu";
    case PairIntensity::Mu: return "mu";
    case PairIntensity::TwoNu: return "2nu";
    case PairIntensity::TwoMu: return "2mu";
    case PairIntensity::MuNu: return "mu+nu";
  }
  return "?";
}

PairIntensity combine(Intensity early, Intensity late) {
  const int e = static_cast<int>(early), l = static_cast<int>(late);
  if (e > l) return combine(late, early);
  // e <= l with 0=o, 1=nu, 2=mu
  if (l == 0) return PairIntensity::O;
  if (e == 0) return l == 1 ? PairIntensity::Nu : PairIntensity::Mu;
  if (e == 1) return l == 1 ? PairIntensity::TwoNu : PairIntensity::MuNu;
  return PairIntensity::TwoMu;
}

bool over_intensity(PairIntensity k) {
  return k == PairIntensity::TwoMu || k == PairIntensity::MuNu;
}

std::string click_key(Intensity a, Intensity b) {
  return std::string(to_string(a)) + "|" + to_string(b);
}

std::string pair_key(PairIntensity a, PairIntensity b) {
  return std::string("[") + to_string(a) + "," + to_string(b) + "]";
}

double TallySheet::n(const std::string& key) const {
  auto it = n_pair.find(key);
  return it == n_pair.end() ? 0.0 : it->second;
}

double TallySheet::m(const std::string& key) const {
  auto it = m_pair.find(key);
  return it == m_pair.end() ? 0.0 : it->second;
}

double TallySheet::m_z() const { return m("[mu,mu]"); }
double TallySheet::m_x() const { return m("[2nu,2nu]"); }

TallySheet tally_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("tally root must be a JSON object");
  TallySheet t;
  if (!j.contains("mode")) throw ConfigError("tally is missing \"mode\"");
  t.mode = pairing_mode_from_string(j.at("mode").get<std::string>());
  t.n_bins = j.value("n_bins", 0.0);
  auto read_map = [&j](const char* key, std::map<std::string, double>& out) {
    if (!j.contains(key)) return;
    for (const auto& [k, v] : j.at(key).items()) out[k] = v.get<double>();
  };
  read_map("n_click", t.n_click);
  read_map("n_pair", t.n_pair);
  read_map("m_pair", t.m_pair);
  read_map("t_mean_by_class", t.t_mean_by_class);
  read_map("discards", t.discards);
  return t;
}

json tally_to_json(const TallySheet& t) {
  json j;
  j["mode"] = to_string(t.mode);
  j["n_bins"] = t.n_bins;
  j["n_click"] = t.n_click;
  j["n_pair"] = t.n_pair;
  j["m_pair"] = t.m_pair;
  j["t_mean_by_class"] = t.t_mean_by_class;
  j["discards"] = t.discards;
  return j;
}

namespace {

using Splitting = std::array<Intensity, 2>;  // early, late

const std::vector<Splitting>& splittings(PairIntensity k) {
  static const std::vector<Splitting> o{{Intensity::O, Intensity::O}};
  static const std::vector<Splitting> nu{{Intensity::Nu, Intensity::O},
                                         {Intensity::O, Intensity::Nu}};
  static const std::vector<Splitting> mu{{Intensity::Mu, Intensity::O},
                                         {Intensity::O, Intensity::Mu}};
  static const std::vector<Splitting> two_nu{{Intensity::Nu, Intensity::Nu}};
  static const std::vector<Splitting> two_mu{{Intensity::Mu, Intensity::Mu}};
  static const std::vector<Splitting> mu_nu{{Intensity::Mu, Intensity::Nu},
                                            {Intensity::Nu, Intensity::Mu}};
  switch (k) {
    case PairIntensity::O: return o;
    case PairIntensity::Nu: return nu;
    case PairIntensity::Mu: return mu;
    case PairIntensity::TwoNu: return two_nu;
    case PairIntensity::TwoMu: return two_mu;
    case PairIntensity::MuNu: return mu_nu;
  }
  return o;
}

double select_prob(const SourceConfig& s, Intensity k) {
  switch (k) {
    case Intensity::O: return s.p_o;
    case Intensity::Nu: return s.p_nu;
    case Intensity::Mu: return s.p_mu;
  }
  return 0.0;
}

double p_survive(const SourceConfig& s, PairingMode mode) {
  if (mode == PairingMode::Unfiltered) return 1.0;
  return 1.0 - 2.0 * s.p_mu * s.p_nu;
}

}  // namespace

double pair_prob(PairIntensity k_a_tot, PairIntensity k_b_tot,
                 const ExperimentConfig& cfg, PairingMode mode) {
  if (over_intensity(k_a_tot) || over_intensity(k_b_tot))
    throw std::invalid_argument("pair_prob: class " + pair_key(k_a_tot, k_b_tot) +
                               " is discarded by the protocol");
  const auto& s = cfg.source;
  const double ps = p_survive(s, mode);
  double sum = 0.0;
  for (const auto& sa : splittings(k_a_tot)) {
    for (const auto& sb : splittings(k_b_tot)) {
      sum += select_prob(s, sa[0]) * select_prob(s, sb[0]) / ps *
             select_prob(s, sa[1]) * select_prob(s, sb[1]) / ps;
    }
  }
  // phase-matching condition keeps 2 of the M relative slices
  if (k_a_tot == PairIntensity::TwoNu && k_b_tot == PairIntensity::TwoNu)
    sum *= 2.0 / s.m_slices;
  return sum;
}

namespace {

struct PairKeys {
  static std::string k(PairIntensity a, PairIntensity b) { return pair_key(a, b); }
};

// The Chernoff budget covers twelve bound applications, numbered here and
// referenced at each use:
//   1  n_[nu,nu]            expected lower
//   2  n_[nu,o]+n_[o,nu]    expected upper
//   3  n_[nu,o]+n_[o,nu]    expected lower   (unfiltered vacuum term)
//   4  n_[o,o]              expected lower
//   5  n_[o,o]              expected upper
//   6  n_[mu,mu]            expected upper
//   7  n_[mu,o]+n_[o,mu]    expected lower
//   8  n_[2nu,o]+n_[o,2nu]  expected lower
//   9  s11_z*               observed lower
//   10 s11_x*               observed lower
//   11 s0_z*                observed lower
//   12 m0*                  observed lower
// With an asymmetric source the pooled classes split into per-side bounds;
// the epsilon-accounting formula is unchanged.
struct ExpectedBounds {
  double nn_lo;            // 1
  double no_up, on_up;     // 2 (per-side halves of the pooled bound)
  double no_lo, on_lo;     // 3
  double oo_lo, oo_up;     // 4, 5
  double mm_up;            // 6
  double mo_lo, om_lo;     // 7
  double xo_lo, ox_lo;     // 8
};

ExpectedBounds expected_bounds(const TallySheet& t, const ExperimentConfig& cfg) {
  const auto& s = cfg.source;
  const double eps = cfg.security.epsilon;
  const bool symmetric = s.mu_a == s.mu_b && s.nu_a == s.nu_b;
  ExpectedBounds b{};

  b.nn_lo = chernoff_expected(t.n("[nu,nu]"), eps).lower;
  b.oo_lo = chernoff_expected(t.n("[o,o]"), eps).lower;
  b.oo_up = chernoff_expected(t.n("[o,o]"), eps).upper;
  b.mm_up = chernoff_expected(t.n("[mu,mu]"), eps).upper;

  auto pooled = [&](const char* ab, const char* ba, double& x_first,
                    double& x_second, bool upper) {
    if (symmetric) {
      const Bounds p = chernoff_expected(t.n(ab) + t.n(ba), eps);
      x_first = x_second = (upper ? p.upper : p.lower) / 2.0;
    } else {
      const Bounds pa = chernoff_expected(t.n(ab), eps);
      const Bounds pb = chernoff_expected(t.n(ba), eps);
      x_first = upper ? pa.upper : pa.lower;
      x_second = upper ? pb.upper : pb.lower;
    }
  };
  pooled("[nu,o]", "[o,nu]", b.no_up, b.on_up, true);
  pooled("[nu,o]", "[o,nu]", b.no_lo, b.on_lo, false);
  pooled("[mu,o]", "[o,mu]", b.mo_lo, b.om_lo, false);
  pooled("[2nu,o]", "[o,2nu]", b.xo_lo, b.ox_lo, false);
  return b;
}

}  // namespace

DecoyEstimate decoy_estimate(const TallySheet& tally, const ExperimentConfig& cfg,
                             PairingMode mode) {
  const auto& s = cfg.source;
  const double eps = cfg.security.epsilon;
  DecoyEstimate est;

  if (tally.n("[mu,mu]") <= 0.0 || tally.n("[nu,nu]") <= 0.0 ||
      tally.n("[2nu,2nu]") <= 0.0) {
    est.diagnostics.push_back("missing key or decoy pair classes; estimate infeasible");
    return est;
  }

  const double mu_a = s.mu_a, mu_b = s.mu_b, nu_a = s.nu_a, nu_b = s.nu_b;
  double mu_p, nu_p;  // mu', nu' selection for the decoy difference
  if (mu_a / mu_b <= nu_a / nu_b) {
    mu_p = mu_a;
    nu_p = nu_a;
  } else {
    mu_p = mu_b;
    nu_p = nu_b;
  }

  auto pp = [&](PairIntensity a, PairIntensity b) { return pair_prob(a, b, cfg, mode); };
  const double p_mm = pp(PairIntensity::Mu, PairIntensity::Mu);
  const double p_nn = pp(PairIntensity::Nu, PairIntensity::Nu);
  const double p_no = pp(PairIntensity::Nu, PairIntensity::O);
  const double p_on = pp(PairIntensity::O, PairIntensity::Nu);
  const double p_mo = pp(PairIntensity::Mu, PairIntensity::O);
  const double p_om = pp(PairIntensity::O, PairIntensity::Mu);
  const double p_oo = pp(PairIntensity::O, PairIntensity::O);
  const double p_xx = pp(PairIntensity::TwoNu, PairIntensity::TwoNu);
  const double p_xo = pp(PairIntensity::TwoNu, PairIntensity::O);
  const double p_ox = pp(PairIntensity::O, PairIntensity::TwoNu);

  const ExpectedBounds b = expected_bounds(tally, cfg);

  const double b1 = std::exp(nu_a + nu_b) * b.nn_lo / p_nn -
                    std::exp(nu_b) * b.on_up / p_on -
                    std::exp(nu_a) * b.no_up / p_no + b.oo_lo / p_oo;
  const double b2 = std::exp(mu_a + mu_b) * b.mm_up / p_mm -
                    std::exp(mu_b) * b.om_lo / p_om -
                    std::exp(mu_a) * b.mo_lo / p_mo + b.oo_lo / p_oo;
  const double core = mu_a * mu_b * mu_p * b1 - nu_a * nu_b * nu_p * b2;

  double s11z_star, s0_star;
  if (mode == PairingMode::Filtered) {
    s11z_star = std::exp(-mu_a - mu_b) * p_mm /
                (nu_a * nu_b * (mu_p - nu_p)) * core;
    s0_star = std::exp(-mu_a) * p_mm / p_om * b.om_lo;
  } else {
    const double p_mn = pp(PairIntensity::Mu, PairIntensity::Nu);
    const double p_nm = pp(PairIntensity::Nu, PairIntensity::Mu);
    const double pref = mu_a * mu_b * std::exp(-mu_a - mu_b) * p_mm +
                        nu_a * nu_b * std::exp(-nu_a - nu_b) * p_nn +
                        mu_a * nu_b * std::exp(-mu_a - nu_b) * p_mn +
                        nu_a * mu_b * std::exp(-nu_a - mu_b) * p_nm;
    s11z_star = pref / (mu_a * mu_b * nu_a * nu_b * (mu_p - nu_p)) * core;
    s0_star = (std::exp(-mu_a) * p_mm / p_om + std::exp(-nu_a) * p_nm / p_om) * b.om_lo +
              (std::exp(-mu_a) * p_mn / p_on + std::exp(-nu_a) * p_nn / p_on) * b.on_lo;
  }
  const double s11x_star = std::exp(-2.0 * nu_a - 2.0 * nu_b) * 4.0 * p_xx /
                           (mu_a * mu_b * (mu_p - nu_p)) * core;
  const double m0_star = std::exp(-2.0 * nu_a) * p_xx / (2.0 * p_ox) * b.ox_lo +
                         std::exp(-2.0 * nu_b) * p_xx / (2.0 * p_xo) * b.xo_lo -
                         std::exp(-2.0 * nu_a - 2.0 * nu_b) * p_xx /
                             (2.0 * p_oo) * b.oo_up;

  auto obs_lower = [&](double star, const char* what) {
    if (star < 0.0) {
      est.diagnostics.push_back(std::string(what) +
                                " expected value negative; clamped to 0");
      return 0.0;
    }
    return chernoff_observed(star, eps).lower;
  };
  est.s11_z_lower = obs_lower(s11z_star, "s11_z*");
  est.s11_x_lower = obs_lower(s11x_star, "s11_x*");
  est.s0_z_lower = obs_lower(s0_star, "s0_z*");
  const double m0_lower = obs_lower(m0_star, "m0*");

  est.t11_x_upper = tally.m_x() - m0_lower;
  if (est.t11_x_upper < 0.0) {
    est.diagnostics.push_back("t11_x upper bound negative; clamped to 0");
    est.t11_x_upper = 0.0;
  }
  if (est.s11_x_lower <= 0.0 || est.s11_z_lower <= 0.0) {
    est.diagnostics.push_back("single-photon bounds vanish; estimate infeasible");
    return est;
  }
  est.e11_x_upper = std::fmin(est.t11_x_upper / est.s11_x_lower, 1.0);

  const double lam = std::fmin(std::fmax(est.e11_x_upper, 1e-12), 1.0 - 1e-12);
  est.phi11_z_upper =
      est.e11_x_upper + gamma_u(est.s11_z_lower, est.s11_x_lower, lam,
                                cfg.security.eps_e);
  est.feasible = true;
  return est;
}

double lambda_ec(const TallySheet& tally, double f_ec, PairingMode mode) {
  auto leak = [&](const char* key) {
    const double n = tally.n(key);
    if (n <= 0.0) return 0.0;
    return n * f_ec * binary_entropy(tally.m(key) / n);
  };
  if (mode == PairingMode::Filtered) return leak("[mu,mu]");
  return leak("[mu,mu]") + leak("[mu,nu]") + leak("[nu,mu]") + leak("[nu,nu]");
}

KeyRateReport key_length(const DecoyEstimate& est, double lambda_ec_bits,
                         const ExperimentConfig& cfg) {
  const auto& sec = cfg.security;
  KeyRateReport r;
  r.decoy = est;
  r.lambda_ec = lambda_ec_bits;
  r.skc0_per_clock = skc0(std::pow(10.0, -cfg.link.fiber_loss_total_db() / 10.0));
  if (!est.feasible) return r;

  const double phi = std::fmin(est.phi11_z_upper, 0.5);
  const double overhead = std::log2(2.0 / sec.eps_cor) +
                          2.0 * std::log2(2.0 / (sec.eps_prime * sec.eps_hat)) +
                          2.0 * std::log2(1.0 / (2.0 * sec.eps_pa));
  double ell = est.s0_z_lower + est.s11_z_lower * (1.0 - binary_entropy(phi)) -
               lambda_ec_bits - overhead;
  if (est.phi11_z_upper >= 0.5)
    r.decoy.diagnostics.push_back("phi11_z >= 0.5; single-photon term contributes nothing");
  r.key_length = std::fmax(ell, 0.0);
  r.skr_per_clock = r.key_length / cfg.link.n_bins;
  r.skr_bps = r.skr_per_clock * cfg.link.clock_hz;
  r.ratio = r.skc0_per_clock > 0.0 ? r.skr_per_clock / r.skc0_per_clock : 0.0;
  r.feasible = r.key_length > 0.0;
  return r;
}

KeyRateReport evaluate_tally(const TallySheet& tally, const ExperimentConfig& cfg,
                             PairingMode mode) {
  const DecoyEstimate est = decoy_estimate(tally, cfg, mode);
  return key_length(est, lambda_ec(tally, cfg.security.f_ec, mode), cfg);
}

json report_to_json(const KeyRateReport& r, const ExperimentConfig& cfg) {
  json j;
  j["lambda_ec"] = r.lambda_ec;
  j["key_length"] = r.key_length;
  j["skr_bps"] = r.skr_bps;
  j["skr_per_clock"] = r.skr_per_clock;
  j["skc0_per_clock"] = r.skc0_per_clock;
  j["ratio"] = r.ratio;
  j["feasible"] = r.feasible;
  j["decoy"] = {{"s0_z_lower", r.decoy.s0_z_lower},
                {"s11_z_lower", r.decoy.s11_z_lower},
                {"s11_x_lower", r.decoy.s11_x_lower},
                {"t11_x_upper", r.decoy.t11_x_upper},
                {"e11_x_upper", r.decoy.e11_x_upper},
                {"phi11_z_upper", r.decoy.phi11_z_upper},
                {"feasible", r.decoy.feasible},
                {"diagnostics", r.decoy.diagnostics}};
  j["config"] = config_to_json(cfg);
  j["version"] = kVersion;
  return j;
}

}  // namespace aqkd
