#include "aqkd/config.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

namespace aqkd {

using nlohmann::json;

const char* to_string(PairingMode mode) {
  return mode == PairingMode::Filtered ? "filtered" : "unfiltered";
}

PairingMode pairing_mode_from_string(const std::string& s) {
  if (s == "filtered") return PairingMode::Filtered;
  if (s == "unfiltered") return PairingMode::Unfiltered;
  throw ConfigError("mode must be \"filtered\" or \"unfiltered\", got \"" + s + "\"");
}

SourceConfig SourceConfig::symmetric(double mu, double nu, double p_mu,
                                     double p_nu, int m_slices) {
  SourceConfig s;
  s.mu_a = s.mu_b = mu;
  s.nu_a = s.nu_b = nu;
  s.p_mu = p_mu;
  s.p_nu = p_nu;
  s.p_o = 1.0 - p_mu - p_nu;
  s.m_slices = m_slices;
  return s;
}

double LinkConfig::fiber_loss_a_db() const {
  return loss_a_db ? *loss_a_db : alpha_db_per_km * l_a_km;
}

double LinkConfig::fiber_loss_b_db() const {
  return loss_b_db ? *loss_b_db : alpha_db_per_km * l_b_km;
}

double LinkConfig::fiber_loss_total_db() const {
  return fiber_loss_a_db() + fiber_loss_b_db();
}

double LinkConfig::eta_a() const {
  return std::pow(10.0, -(fiber_loss_a_db() + insertion_db) / 10.0);
}

double LinkConfig::eta_b() const {
  return std::pow(10.0, -(fiber_loss_b_db() + insertion_db) / 10.0);
}

std::uint64_t LinkConfig::n_tc() const {
  return static_cast<std::uint64_t>(std::llround(clock_hz * t_c_s));
}

double SecurityConfig::eps_sec() const {
  return 2.0 * (eps_prime + 2.0 * eps_e + eps_hat) + 12.0 * epsilon + eps_beta +
         eps_pa;
}

double SecurityConfig::eps_tol() const { return eps_cor + eps_sec(); }

namespace {

void require(bool ok, const char* invariant) {
  if (!ok) throw ConfigError(std::string("config invariant violated: ") + invariant);
}

}  // namespace

void validate(const ExperimentConfig& cfg) {
  const auto& s = cfg.source;
  require(s.mu_a > s.nu_a && s.nu_a > 0.0, "mu_a > nu_a > 0");
  require(s.mu_b > s.nu_b && s.nu_b > 0.0, "mu_b > nu_b > 0");
  require(s.p_mu >= 0.0 && s.p_nu >= 0.0 && s.p_o >= 0.0,
          "selection probabilities nonnegative");
  require(std::fabs(s.p_mu + s.p_nu + s.p_o - 1.0) <= 1e-12,
          "p_mu + p_nu + p_o = 1");
  require(s.m_slices >= 2, "m_slices >= 2");

  const auto& l = cfg.link;
  require(l.l_a_km >= 0.0 && l.l_b_km >= 0.0, "fiber lengths nonnegative");
  require(l.alpha_db_per_km >= 0.0, "alpha >= 0");
  require(l.eta_d_l >= 0.0 && l.eta_d_l <= 1.0, "eta_d_l in [0,1]");
  require(l.eta_d_r >= 0.0 && l.eta_d_r <= 1.0, "eta_d_r in [0,1]");
  require(l.p_d_l >= 0.0 && l.p_d_l <= 1.0, "p_d_l in [0,1]");
  require(l.p_d_r >= 0.0 && l.p_d_r <= 1.0, "p_d_r in [0,1]");
  require(l.clock_hz > 0.0, "clock_hz > 0");
  require(l.t_c_s >= 1.0 / l.clock_hz, "t_c_s >= 1/clock_hz");
  require(l.n_bins >= 1.0, "n_bins >= 1");

  const auto& n = cfg.noise;
  require(n.e_hom >= 0.0 && n.e_hom <= 0.5, "e_hom in [0, 0.5]");
  require(n.sigma_rad_s >= 0.0, "sigma >= 0");
  require(n.v2 >= 0.0 && n.v2 <= 0.5, "v2 in [0, 0.5]");

  const auto& sec = cfg.security;
  require(sec.epsilon > 0.0 && sec.epsilon < 1.0, "epsilon in (0,1)");
  require(sec.f_ec >= 1.0, "f_ec >= 1");
}

namespace {

double get_num(const json& j, const char* key, double fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_number()) throw ConfigError(std::string(key) + " must be a number");
  return it->get<double>();
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  ExperimentConfig cfg;

  if (j.contains("mode")) cfg.mode = pairing_mode_from_string(j.at("mode").get<std::string>());

  const json src = j.value("source", json::object());
  auto& s = cfg.source;
  if (src.contains("mu")) s.mu_a = s.mu_b = src.at("mu").get<double>();
  if (src.contains("nu")) s.nu_a = s.nu_b = src.at("nu").get<double>();
  s.mu_a = get_num(src, "mu_a", s.mu_a);
  s.mu_b = get_num(src, "mu_b", s.mu_b);
  s.nu_a = get_num(src, "nu_a", s.nu_a);
  s.nu_b = get_num(src, "nu_b", s.nu_b);
  s.p_mu = get_num(src, "p_mu", s.p_mu);
  s.p_nu = get_num(src, "p_nu", s.p_nu);
  s.p_o = get_num(src, "p_o", 1.0 - s.p_mu - s.p_nu);
  s.m_slices = static_cast<int>(get_num(src, "m_slices", s.m_slices));

  const json lnk = j.value("link", json::object());
  auto& l = cfg.link;
  l.l_a_km = get_num(lnk, "l_a_km", l.l_a_km);
  l.l_b_km = get_num(lnk, "l_b_km", l.l_b_km);
  l.alpha_db_per_km = get_num(lnk, "alpha_db_per_km", l.alpha_db_per_km);
  l.insertion_db = get_num(lnk, "insertion_db", l.insertion_db);
  if (lnk.contains("loss_a_db")) l.loss_a_db = lnk.at("loss_a_db").get<double>();
  if (lnk.contains("loss_b_db")) l.loss_b_db = lnk.at("loss_b_db").get<double>();
  l.eta_d_l = get_num(lnk, "eta_d_l", l.eta_d_l);
  l.eta_d_r = get_num(lnk, "eta_d_r", l.eta_d_r);
  l.clock_hz = get_num(lnk, "clock_hz", l.clock_hz);
  // dark counts: per-bin probabilities, or rates in Hz divided by the clock
  if (lnk.contains("dark_rate_l_hz")) l.p_d_l = lnk.at("dark_rate_l_hz").get<double>() / l.clock_hz;
  if (lnk.contains("dark_rate_r_hz")) l.p_d_r = lnk.at("dark_rate_r_hz").get<double>() / l.clock_hz;
  l.p_d_l = get_num(lnk, "p_d_l", l.p_d_l);
  l.p_d_r = get_num(lnk, "p_d_r", l.p_d_r);
  l.t_c_s = get_num(lnk, "t_c_s", l.t_c_s);
  l.n_bins = get_num(lnk, "n_bins", l.n_bins);

  const json noi = j.value("noise", json::object());
  auto& n = cfg.noise;
  n.e_hom = get_num(noi, "e_hom", n.e_hom);
  n.sigma_rad_s = get_num(noi, "sigma_rad_s", n.sigma_rad_s);
  n.delta_f_hz = get_num(noi, "delta_f_hz", n.delta_f_hz);
  n.v2 = get_num(noi, "v2", n.v2);

  const json sec = j.value("security", json::object());
  auto& e = cfg.security;
  e.epsilon = get_num(sec, "epsilon", e.epsilon);
  e.f_ec = get_num(sec, "f_ec", e.f_ec);
  e.eps_cor = get_num(sec, "eps_cor", e.epsilon);
  e.eps_pa = get_num(sec, "eps_pa", e.epsilon);
  e.eps_prime = get_num(sec, "eps_prime", e.epsilon);
  e.eps_hat = get_num(sec, "eps_hat", e.epsilon);
  e.eps_e = get_num(sec, "eps_e", e.epsilon);
  e.eps_beta = get_num(sec, "eps_beta", e.epsilon);

  validate(cfg);
  return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["mode"] = to_string(cfg.mode);
  const auto& s = cfg.source;
  j["source"] = {{"mu_a", s.mu_a}, {"mu_b", s.mu_b}, {"nu_a", s.nu_a},
                 {"nu_b", s.nu_b}, {"p_mu", s.p_mu}, {"p_nu", s.p_nu},
                 {"p_o", s.p_o},   {"m_slices", s.m_slices}};
  const auto& l = cfg.link;
  json lj = {{"l_a_km", l.l_a_km},
             {"l_b_km", l.l_b_km},
             {"alpha_db_per_km", l.alpha_db_per_km},
             {"insertion_db", l.insertion_db},
             {"eta_d_l", l.eta_d_l},
             {"eta_d_r", l.eta_d_r},
             {"p_d_l", l.p_d_l},
             {"p_d_r", l.p_d_r},
             {"clock_hz", l.clock_hz},
             {"t_c_s", l.t_c_s},
             {"n_bins", l.n_bins}};
  if (l.loss_a_db) lj["loss_a_db"] = *l.loss_a_db;
  if (l.loss_b_db) lj["loss_b_db"] = *l.loss_b_db;
  j["link"] = lj;
  const auto& n = cfg.noise;
  j["noise"] = {{"e_hom", n.e_hom},
                {"sigma_rad_s", n.sigma_rad_s},
                {"delta_f_hz", n.delta_f_hz},
                {"v2", n.v2}};
  const auto& e = cfg.security;
  j["security"] = {{"epsilon", e.epsilon},     {"f_ec", e.f_ec},
                   {"eps_cor", e.eps_cor},     {"eps_pa", e.eps_pa},
                   {"eps_prime", e.eps_prime}, {"eps_hat", e.eps_hat},
                   {"eps_e", e.eps_e},         {"eps_beta", e.eps_beta}};
  return j;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace aqkd
