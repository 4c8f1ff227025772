#include "aqkd/mcsim.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <thread>

#include "aqkd/channel.hpp"

namespace aqkd {

namespace {

// Counter-style generator; per-window streams are seeded through the same
// finalizer so any thread can reproduce any window.
struct SplitMix64 {
  std::uint64_t state = 0;
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform_pos() {
    return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
  }
};

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t tag,
                          std::uint64_t idx) {
  return mix64(seed ^ mix64(tag ^ mix64(idx + 0x632be59bd9b4e019ull)));
}

constexpr std::uint64_t kTagDrift = 0xd1f7;
constexpr std::uint64_t kTagWindow = 0x5eed;

// Uniform upper bound on the per-bin click probability over every intensity
// class and phase; the grid maximum gets a safety factor well above the
// curvature error of the scan.
double q_sup_bound(const ExperimentConfig& cfg) {
  const double ka[3] = {0.0, cfg.source.nu_a, cfg.source.mu_a};
  const double kb[3] = {0.0, cfg.source.nu_b, cfg.source.mu_b};
  double best = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int i = 0; i < 1024; ++i) {
        const double th = 2.0 * M_PI * i / 1024.0;
        const GainPair g = gain_conditional(th, ka[a], kb[b], cfg.link);
        best = std::max(best, g.q_l + g.q_r);
      }
  return std::min(best * 1.001, 1.0);
}

struct SimContext {
  const ExperimentConfig* cfg = nullptr;
  std::uint64_t n_bins = 0;
  std::uint64_t seed = 0;
  std::uint64_t window_bins = 0;
  double q_sup = 0.0;
  double log1m_qsup = 0.0;
  double flip_p = 0.0;
  std::vector<double> base_phase;  // drift phase at each window start
  std::vector<double> rate;        // drift rate within each window
};

struct WindowOut {
  std::vector<ClickEvent> clicks;
  std::uint64_t candidates = 0;
};

WindowOut run_window(const SimContext& ctx, std::uint64_t w) {
  const ExperimentConfig& cfg = *ctx.cfg;
  const auto& s = cfg.source;
  const double ka_val[3] = {0.0, s.nu_a, s.mu_a};
  const double kb_val[3] = {0.0, s.nu_b, s.mu_b};
  const auto m = static_cast<std::uint64_t>(s.m_slices);
  const double slice = 2.0 * M_PI / s.m_slices;
  const double f = cfg.link.clock_hz;
  const double omega = 2.0 * M_PI * cfg.noise.delta_f_hz;
  const std::uint64_t lo = w * ctx.window_bins;
  const std::uint64_t hi = std::min(lo + ctx.window_bins, ctx.n_bins);
  const double base = ctx.base_phase[w];
  const double drift_rate = ctx.rate[w];

  SplitMix64 rng{stream_seed(ctx.seed, kTagWindow, w)};
  WindowOut out;
  std::uint64_t pos = lo;
  while (pos < hi) {
    std::uint64_t cand = pos;
    if (ctx.q_sup < 1.0) {
      const double skip = std::floor(std::log(rng.uniform_pos()) / ctx.log1m_qsup);
      if (skip >= static_cast<double>(hi - pos)) break;
      cand = pos + static_cast<std::uint64_t>(skip);
    }
    pos = cand + 1;
    ++out.candidates;

    const double ua = rng.uniform();
    const int ia = ua < s.p_mu ? 2 : (ua < s.p_mu + s.p_nu ? 1 : 0);
    const auto tha = static_cast<int>(rng.next() % m);
    const double ub = rng.uniform();
    const int ib = ub < s.p_mu ? 2 : (ub < s.p_mu + s.p_nu ? 1 : 0);
    const auto thb = static_cast<int>(rng.next() % m);

    const double theta = (tha - thb) * slice + base +
                         drift_rate * (static_cast<double>(cand - lo) / f) +
                         omega * (static_cast<double>(cand) / f);
    const GainPair g = gain_conditional(theta, ka_val[ia], kb_val[ib], cfg.link);
    const double uc = rng.uniform() * ctx.q_sup;
    std::uint8_t det;
    if (uc < g.q_l) {
      det = kDetectorL;
    } else if (uc < g.q_l + g.q_r) {
      det = kDetectorR;
    } else {
      continue;  // no click, or a double click; neither enters the stream
    }
    if (rng.uniform() < ctx.flip_p) det ^= 1u;

    ClickEvent c;
    c.bin = cand;
    c.detector = det;
    c.k_a = static_cast<Intensity>(ia);
    c.k_b = static_cast<Intensity>(ib);
    c.theta_a_idx = static_cast<std::uint8_t>(tha);
    c.theta_b_idx = static_cast<std::uint8_t>(thb);
    out.clicks.push_back(c);
  }
  return out;
}

}  // namespace

SimStats generate_stream(const ExperimentConfig& cfg, const SimOptions& opt,
                         const std::function<void(std::vector<ClickEvent>&&)>& sink) {
  SimContext ctx;
  ctx.cfg = &cfg;
  ctx.n_bins = opt.n_bins;
  ctx.seed = opt.seed;
  ctx.window_bins = std::max<std::uint64_t>(
      1, static_cast<std::uint64_t>(std::llround(opt.drift_window_s *
                                                 cfg.link.clock_hz)));
  ctx.q_sup = q_sup_bound(cfg);
  SimStats stats;
  if (ctx.q_sup <= 0.0 || ctx.n_bins == 0) return stats;
  ctx.log1m_qsup = std::log1p(-ctx.q_sup);
  ctx.flip_p = (1.0 - std::sqrt(1.0 - 2.0 * cfg.noise.e_hom)) / 2.0;

  const std::uint64_t n_windows =
      (ctx.n_bins + ctx.window_bins - 1) / ctx.window_bins;
  ctx.base_phase.resize(n_windows);
  ctx.rate.resize(n_windows);
  const double t_window = static_cast<double>(ctx.window_bins) / cfg.link.clock_hz;
  double phase = 0.0;
  for (std::uint64_t w = 0; w < n_windows; ++w) {
    SplitMix64 dr{stream_seed(ctx.seed, kTagDrift, w)};
    const double u1 = dr.uniform_pos();
    const double u2 = dr.uniform();
    ctx.rate[w] = cfg.noise.sigma_rad_s * std::sqrt(-2.0 * std::log(u1)) *
                  std::cos(2.0 * M_PI * u2);
    ctx.base_phase[w] = phase;
    phase += ctx.rate[w] * t_window;
  }

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::uint64_t threads = opt.threads > 0
                                    ? static_cast<std::uint64_t>(opt.threads)
                                    : static_cast<std::uint64_t>(hw);
  std::uint64_t w = 0;
  while (w < n_windows) {
    const std::uint64_t batch = std::min<std::uint64_t>(n_windows - w, threads);
    if (batch == 1) {
      WindowOut o = run_window(ctx, w);
      stats.candidate_bins += o.candidates;
      stats.clicks += o.clicks.size();
      if (!o.clicks.empty()) sink(std::move(o.clicks));
    } else {
      std::vector<std::future<WindowOut>> futs;
      futs.reserve(batch);
      for (std::uint64_t i = 0; i < batch; ++i)
        futs.push_back(std::async(std::launch::async, run_window, std::cref(ctx),
                                  w + i));
      for (auto& fut : futs) {
        WindowOut o = fut.get();
        stats.candidate_bins += o.candidates;
        stats.clicks += o.clicks.size();
        if (!o.clicks.empty()) sink(std::move(o.clicks));
      }
    }
    w += batch;
  }
  return stats;
}

std::vector<ClickEvent> generate_clicks(const ExperimentConfig& cfg,
                                        const SimOptions& opt, SimStats* stats) {
  std::vector<ClickEvent> all;
  const SimStats st = generate_stream(cfg, opt, [&all](std::vector<ClickEvent>&& b) {
    all.insert(all.end(), b.begin(), b.end());
  });
  if (stats) *stats = st;
  return all;
}

}  // namespace aqkd
