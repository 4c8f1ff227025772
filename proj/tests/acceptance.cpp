// Acceptance gate: twelve numbered criteria, one line each, exit code is the
// number of failures.  Tolerances are stated inline next to each check.
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "aqkd/channel.hpp"
#include "aqkd/golden.hpp"
#include "aqkd/keyrate.hpp"
#include "aqkd/mcsim.hpp"
#include "aqkd/optimize.hpp"
#include "aqkd/pairing.hpp"
#include "aqkd/predict.hpp"

using namespace aqkd;
using Clock = std::chrono::steady_clock;

namespace {

int g_criterion = 0;
int g_failures = 0;

void report(bool pass, const std::string& name, const std::string& detail) {
  ++g_criterion;
  if (!pass) ++g_failures;
  std::printf("[%2d/12] %s  %s: %s\n", g_criterion, pass ? "PASS" : "FAIL",
              name.c_str(), detail.c_str());
  std::fflush(stdout);
}

double rel(double got, double want) { return std::fabs(got - want) / std::fabs(want); }

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

// Acceptance band for a Poisson-distributed count: +-3 sqrt(lambda) in the
// normal regime, exact quantiles at the matching 1.35e-3 per-side mass for
// small expectations.
void poisson_band(double lambda, double* lo, double* hi) {
  if (lambda >= 25.0) {
    *lo = lambda - 3.0 * std::sqrt(lambda);
    *hi = lambda + 3.0 * std::sqrt(lambda);
    return;
  }
  const double tail = 1.349898e-3;  // one-sided mass beyond 3 sigma
  double pmf = std::exp(-lambda);
  double cdf = pmf;
  int k = 0;
  *lo = 0.0;
  while (cdf <= tail) {
    ++k;
    pmf *= lambda / k;
    cdf += pmf;
    *lo = k;  // smallest accepted value
  }
  while (1.0 - cdf > tail) {
    ++k;
    pmf *= lambda / k;
    cdf += pmf;
  }
  *hi = k;  // largest accepted value
}

// ---------------------------------------------------------------- criteria

void c1_decoy() {
  const auto t0 = Clock::now();
  double worst_z = 0.0, worst_x = 0.0, worst_phi = 0.0;
  bool ok = true;
  for (const GoldenSetting& g : golden_settings()) {
    const DecoyEstimate est =
        decoy_estimate(g.tally(), g.config(), PairingMode::Filtered);
    ok = ok && est.feasible;
    worst_z = std::fmax(worst_z, rel(est.s11_z_lower, g.s11_z));
    worst_x = std::fmax(worst_x, rel(est.s11_x_lower, g.s11_x));
    worst_phi = std::fmax(worst_phi, std::fabs(est.phi11_z_upper - g.phi11_z));
  }
  const double dt = seconds_since(t0);
  ok = ok && worst_z <= 5e-3 && worst_x <= 5e-3 && worst_phi <= 5e-3 && dt < 1.0;
  report(ok, "reference decoy estimates",
         fmt("max dev: s11_z %.3f%%, s11_x %.3f%%, phi11_z %.4f abs "
             "(tol 0.5%% / 0.5%% / 0.005); %.0f ms",
             100.0 * worst_z, 100.0 * worst_x, worst_phi, 1e3 * dt));
}

double c2_skr(std::vector<KeyRateReport>* reports) {
  const auto t0 = Clock::now();
  const double f_ec = calibrate_f_ec();
  double worst = 0.0;
  bool ok = f_ec >= 1.0 && f_ec <= 1.3;
  for (const GoldenSetting& g : golden_settings()) {
    ExperimentConfig cfg = g.config();
    cfg.security.f_ec = f_ec;
    const KeyRateReport rep =
        evaluate_tally(g.tally(), cfg, PairingMode::Filtered);
    reports->push_back(rep);
    worst = std::fmax(worst, rel(rep.skr_bps, g.skr_bps));
  }
  const double dt = seconds_since(t0);
  ok = ok && worst <= 0.02 && dt < 1.0;
  report(ok, "reference secret key rates",
         fmt("f_ec = %.3f, max dev %.2f%% (tol 2%%); %.0f ms incl. calibration",
             f_ec, 100.0 * worst, 1e3 * dt));
  return f_ec;
}

void c3_skc0(const std::vector<KeyRateReport>& reports) {
  double worst_skc0 = 0.0, worst_ratio = 0.0;
  bool beats = true;
  const auto& gs = golden_settings();
  for (std::size_t i = 0; i < gs.size(); ++i) {
    worst_skc0 = std::fmax(worst_skc0, rel(reports[i].skc0_per_clock, gs[i].skc0_per_clock));
    worst_ratio = std::fmax(worst_ratio, rel(reports[i].ratio, gs[i].ratio));
    if (gs[i].distance_km > 400.0) beats = beats && reports[i].ratio > 1.0;
  }
  const bool ok = worst_skc0 <= 5e-3 && worst_ratio <= 0.02 && beats;
  report(ok, "repeaterless bound and ratios",
         fmt("max dev: skc0 %.3f%% (tol 0.5%%), ratio %.2f%% (tol 2%%); "
             "ratio > 1 beyond 400 km: %s",
             100.0 * worst_skc0, 100.0 * worst_ratio, beats ? "yes" : "NO"));
}

void c4_t_mean() {
  const double measured_us[4] = {0.44, 3.79, 19.82, 70.96};
  double worst_sim = 0.0, worst_meas = 0.0;
  const auto& gs = golden_settings();
  for (std::size_t i = 0; i < gs.size(); ++i) {
    const PairingStats st = pairing_stats(gs[i].config(), PairingMode::Filtered);
    worst_sim = std::fmax(worst_sim, rel(st.t_mean * 1e6, gs[i].t_mean_sim_us));
    worst_meas = std::fmax(worst_meas, rel(st.t_mean * 1e6, measured_us[i]));
  }
  const bool ok = worst_sim <= 0.02 && worst_meas <= 0.10;
  report(ok, "mean pairing interval",
         fmt("max dev vs simulated %.2f%% (tol 2%%), vs measured %.2f%% (tol 10%%)",
             100.0 * worst_sim, 100.0 * worst_meas));
}

void c5_gain_identity() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (const GoldenSetting& g : golden_settings()) {
    const ExperimentConfig cfg = g.config();
    const double ka[3] = {0.0, cfg.source.nu_a, cfg.source.mu_a};
    const double kb[3] = {0.0, cfg.source.nu_b, cfg.source.mu_b};
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        const int n = 8192;
        double quad = 0.0;
        for (int i = 0; i < n; ++i) {
          const GainPair q =
              gain_conditional(2.0 * M_PI * i / n, ka[a], kb[b], cfg.link);
          quad += q.q_l + q.q_r;
        }
        quad /= n;
        worst = std::fmax(worst, rel(quad, gain_total(ka[a], kb[b], cfg.link)));
      }
  }
  const double dt = seconds_since(t0);
  const bool ok = worst <= 1e-10 && dt < 1.0;
  report(ok, "conditional/total gain identity",
         fmt("max rel dev %.2e over 36 class-setting combinations "
             "(tol 1e-10); %.0f ms",
             worst, 1e3 * dt));
}

void c6_drift() {
  NoiseConfig fast;
  fast.v2 = 0.46;
  fast.sigma_rad_s = 5900.0;
  fast.delta_f_hz = 10.0;
  const double e85 = qber_x_drift(85e-6, fast);
  NoiseConfig slow = fast;
  slow.sigma_rad_s = 2100.0;
  const double e200 = qber_x_drift(200e-6, slow);
  const bool ok = std::fabs(e85 - 0.30) <= 0.01 && e200 < 0.30;
  report(ok, "interference drift error",
         fmt("sigma=5900: E_x(85us) = %.4f (want 0.30 +- 0.01); "
             "sigma=2100: E_x(200us) = %.4f (< 0.30)",
             e85, e200));
}

void c7_mc_consistency() {
  const auto t0 = Clock::now();
  ExperimentConfig cfg = golden_settings()[0].config();
  cfg.link.n_bins = 1e9;

  SimOptions opt;
  opt.n_bins = 1e9;
  opt.seed = 20240901;
  const std::vector<ClickEvent> stream = generate_clicks(cfg, opt);
  const TallySheet mc = pair_and_tally(stream, cfg, PairingMode::Filtered);
  const TallySheet want = expected_tallies(cfg, PairingMode::Filtered);
  const PairingStats st = pairing_stats(cfg, PairingMode::Filtered);

  int bad = 0;
  std::ostringstream oss;
  auto check_count = [&](const std::string& what, double got, double lambda) {
    double lo = 0.0, hi = 0.0;
    poisson_band(lambda, &lo, &hi);
    if (got < lo || got > hi) {
      ++bad;
      oss << " " << what << "=" << got << " not in [" << lo << "," << hi << "]";
    }
  };
  for (const auto& [key, lambda] : want.n_click) {
    auto it = mc.n_click.find(key);
    check_count("click " + key, it == mc.n_click.end() ? 0.0 : it->second,
                lambda);
  }
  for (const auto& [key, lambda] : want.n_pair)
    check_count("pair " + key, mc.n(key), lambda);

  // mean pairing interval: 3 sigma of the truncated-geometric sample mean
  const double n_tc = static_cast<double>(cfg.link.n_tc());
  double m1 = 0.0, m2 = 0.0, mass = 0.0, surv = 1.0;
  for (double j = 1.0; j <= n_tc; ++j) {
    const double pj = st.q_tot * surv;
    m1 += j * pj;
    m2 += j * j * pj;
    mass += pj;
    surv *= 1.0 - st.q_tot;
  }
  m1 /= mass;
  m2 /= mass;
  const double sd_gap = std::sqrt(m2 - m1 * m1) / cfg.link.clock_hz;
  const double pairs_total = stream.empty() ? 1.0 : st.n_tot;
  const double t_tol = 3.0 * sd_gap / std::sqrt(pairs_total);
  const double t_got = mc.t_mean_by_class.count("all")
                           ? mc.t_mean_by_class.at("all")
                           : 0.0;
  if (std::fabs(t_got - st.t_mean) > t_tol) {
    ++bad;
    oss << " t_mean=" << t_got << " vs " << st.t_mean << " +- " << t_tol;
  }

  // X error rate: binomial 3 sigma at the expected X-pair count
  const double n_x = want.n("[2nu,2nu]");
  const double e_want = want.m("[2nu,2nu]") / n_x;
  const double e_got = mc.n("[2nu,2nu]") > 0.0
                           ? mc.m("[2nu,2nu]") / mc.n("[2nu,2nu]")
                           : -1.0;
  const double e_tol = 3.0 * std::sqrt(e_want * (1.0 - e_want) / n_x);
  if (std::fabs(e_got - e_want) > e_tol) {
    ++bad;
    oss << " E_x=" << e_got << " vs " << e_want << " +- " << e_tol;
  }

  const double dt = seconds_since(t0);
  const bool ok = bad == 0 && dt < 600.0;
  report(ok, "Monte Carlo vs analytic model",
         fmt("1e9 bins, %zu clicks: %d deviations beyond 3 sigma "
             "(clicks, pairs, t_mean, E_x);%s %.1f s",
             stream.size(), bad, oss.str().c_str(), dt));
}

void c8_matcher_oracle() {
  // literal restatement of the pairing rule on a used-flag array; the scan
  // cursor only moves forward, everything else is naive
  auto brute = [](const std::vector<std::uint64_t>& bins, std::uint64_t gap,
                  std::vector<std::pair<std::uint64_t, std::uint64_t>>* out,
                  std::uint64_t* lone) {
    std::vector<char> used(bins.size(), 0);
    std::size_t cursor = 0;
    *lone = 0;
    for (;;) {
      std::size_t i = cursor;
      while (i < bins.size() && used[i]) ++i;
      if (i == bins.size()) return;
      used[i] = 1;
      cursor = i;
      std::size_t j = i + 1;
      while (j < bins.size() && used[j]) ++j;
      if (j == bins.size()) {
        ++*lone;
        return;
      }
      if (bins[j] - bins[i] <= gap) {
        used[j] = 1;
        out->emplace_back(bins[i], bins[j]);
      } else {
        ++*lone;
      }
    }
  };

  std::mt19937_64 rng(1357911);
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::uint64_t> bins(10000);
    std::uint64_t b = 0;
    std::geometric_distribution<std::uint64_t> dense(0.005);
    std::uniform_int_distribution<std::uint64_t> sparse(800, 5000);
    std::bernoulli_distribution far(0.25);
    for (auto& x : bins) {
      b += 1 + (far(rng) ? sparse(rng) : dense(rng));
      x = b;
    }
    const std::uint64_t gap = 1000;

    std::vector<std::pair<std::uint64_t, std::uint64_t>> want;
    std::uint64_t want_lone = 0;
    brute(bins, gap, &want, &want_lone);

    GreedyMatcher m(gap);
    std::vector<std::pair<std::uint64_t, std::uint64_t>> got;
    ClickEvent first, c;
    for (std::uint64_t x : bins) {
      c.bin = x;
      if (m.push(c, &first)) got.emplace_back(first.bin, x);
    }
    m.finish();

    if (got != want || m.lone_discards() != static_cast<double>(want_lone))
      ++mismatches;
  }
  report(mismatches == 0, "greedy matcher vs brute force",
         fmt("%d/1000 random 10^4-click streams disagree", mismatches));
}

void c9_mapping_equivalence() {
  // decoy-heavy source so the simulated stream carries plenty of X pairs
  ExperimentConfig cfg;
  cfg.source = SourceConfig::symmetric(0.43, 0.02, 0.1, 0.6);
  cfg.link.l_a_km = cfg.link.l_b_km = 25.0;
  cfg.link.p_d_l = 3.03e-9;
  cfg.link.p_d_r = 3.81e-9;
  cfg.link.t_c_s = 5e-6;
  cfg.link.n_bins = 1e7;
  cfg.noise.e_hom = 0.04;
  cfg.noise.sigma_rad_s = 2100.0;
  cfg.noise.delta_f_hz = 10.0;
  cfg.noise.v2 = 0.484;
  validate(cfg);

  SimOptions opt;
  opt.n_bins = 1e7;
  opt.seed = 777;
  const std::vector<ClickEvent> stream = generate_clicks(cfg, opt);
  const TallySheet a =
      pair_and_tally(stream, cfg, PairingMode::Filtered, XKeyMapping::DetectorFlip);
  const TallySheet b =
      pair_and_tally(stream, cfg, PairingMode::Filtered, XKeyMapping::PhaseBits);

  const bool ok = a.n("[2nu,2nu]") == b.n("[2nu,2nu]") &&
                  a.m("[2nu,2nu]") == b.m("[2nu,2nu]") &&
                  a.n("[2nu,2nu]") > 0.0 && a.m("[2nu,2nu]") > 0.0;
  report(ok, "X key mapping equivalence",
         fmt("detector-flip: %.0f errors / %.0f pairs; phase-bits: %.0f / %.0f "
             "(must match exactly)",
             a.m("[2nu,2nu]"), a.n("[2nu,2nu]"), b.m("[2nu,2nu]"),
             b.n("[2nu,2nu]")));
}

void c10_filtering_benefit() {
  const auto t0 = Clock::now();
  ExperimentConfig tmpl;
  tmpl.source = SourceConfig::symmetric(0.43, 0.02, 0.25, 0.19);
  tmpl.link.eta_d_l = 0.781;
  tmpl.link.eta_d_r = 0.770;
  tmpl.link.p_d_l = 3.03e-9;
  tmpl.link.p_d_r = 3.81e-9;
  tmpl.link.t_c_s = 200e-6;
  tmpl.link.n_bins = 7.24e13;
  tmpl.noise.e_hom = 0.04;
  tmpl.noise.sigma_rad_s = 5900.0;
  tmpl.noise.delta_f_hz = 10.0;
  tmpl.noise.v2 = 0.484;

  bool ok = true;
  std::ostringstream oss;
  for (double d = 200.0; d <= 600.0; d += 50.0) {
    ExperimentConfig cfg = tmpl;
    cfg.link.l_a_km = cfg.link.l_b_km = d / 2.0;
    validate(cfg);
    const OptimizeResult f =
        optimize_params(cfg, ParamBox{}, PairingMode::Filtered, 8);
    const OptimizeResult u =
        optimize_params(cfg, ParamBox{}, PairingMode::Unfiltered, 8);
    const double fs = f.feasible ? f.skr_per_clock : 0.0;
    const double us = u.feasible ? u.skr_per_clock : 0.0;
    if (fs < us) {
      ok = false;
      oss << " " << d << "km: filtered " << fs << " < unfiltered " << us;
    }
  }
  report(ok, "filtering never loses",
         fmt("optimized filtered >= unfiltered on 200..600 km (9 points)%s; %.1f s",
             oss.str().c_str(), seconds_since(t0)));
}

void c11_scaling() {
  double worst = 0.0;
  bool in_range = true;
  for (const GoldenSetting& g : golden_settings()) {
    const PkScaling pk = pk_scaling(g.config(), PairingMode::Filtered);
    in_range = in_range && pk.c >= 0.05 && pk.c <= 0.08;
    worst = std::fmax(worst, rel(pk.c, g.pk_const));
  }
  const bool ok = in_range && worst <= 0.10;
  report(ok, "coincidence scaling constant",
         fmt("c within [0.05, 0.08]: %s; max dev vs quoted %.1f%% (tol 10%%)",
             in_range ? "yes" : "NO", 100.0 * worst));
}

void c12_epsilon() {
  SecurityConfig sec;  // all components 1e-10
  const double tol = sec.eps_tol();
  const bool ok = rel(tol, 2.3e-9) <= 1e-12;
  report(ok, "failure probability accounting",
         fmt("eps_tol = %.6e (want 2.3e-9)", tol));
}

}  // namespace

int main() {
  std::vector<KeyRateReport> reports;
  c1_decoy();
  c2_skr(&reports);
  c3_skc0(reports);
  c4_t_mean();
  c5_gain_identity();
  c6_drift();
  c7_mc_consistency();
  c8_matcher_oracle();
  c9_mapping_equivalence();
  c10_filtering_benefit();
  c11_scaling();
  c12_epsilon();
  std::printf("%d/12 criteria passed\n", 12 - g_failures);
  return g_failures;
}
