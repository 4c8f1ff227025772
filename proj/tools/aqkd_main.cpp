#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "aqkd/config.hpp"
#include "aqkd/golden.hpp"
#include "aqkd/keyrate.hpp"
#include "aqkd/mcsim.hpp"
#include "aqkd/optimize.hpp"
#include "aqkd/pairing.hpp"
#include "aqkd/predict.hpp"
#include "aqkd/version.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitInfeasible = 3;

struct CommonArgs {
  std::string config_path;
  std::string mode_str;
  std::string out_path;
  std::uint64_t seed = 1;
  int threads = 0;
};

void add_common(CLI::App* cmd, CommonArgs* args, bool config_required = true) {
  auto* opt = cmd->add_option("--config,-c", args->config_path,
                              "experiment configuration JSON");
  if (config_required) opt->required()->check(CLI::ExistingFile);
  cmd->add_option("--mode", args->mode_str, "filtered|unfiltered (default: config)")
      ->check(CLI::IsMember({"filtered", "unfiltered"}));
  cmd->add_option("--out,-o", args->out_path, "output file (default stdout)");
  cmd->add_option("--seed", args->seed, "RNG seed");
  cmd->add_option("--threads", args->threads, "worker threads (0 = all cores)");
}

aqkd::PairingMode resolve_mode(const aqkd::ExperimentConfig& cfg,
                               const std::string& mode_str) {
  if (mode_str.empty()) return cfg.mode;
  return aqkd::pairing_mode_from_string(mode_str);
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    if (text.empty() || text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream os(out_path, std::ios::binary);
  if (!os) throw aqkd::ConfigError("cannot open output file: " + out_path);
  os << text;
  if (text.empty() || text.back() != '\n') os << '\n';
}

int emit_report(const aqkd::KeyRateReport& report,
                const aqkd::ExperimentConfig& cfg, const std::string& out_path) {
  emit(aqkd::report_to_json(report, cfg).dump(2), out_path);
  return report.feasible ? kExitOk : kExitInfeasible;
}

int cmd_predict(const CommonArgs& args) {
  const aqkd::ExperimentConfig cfg = aqkd::load_config(args.config_path);
  const aqkd::PairingMode mode = resolve_mode(cfg, args.mode_str);
  return emit_report(aqkd::predict_report(cfg, mode), cfg, args.out_path);
}

int cmd_simulate(const CommonArgs& args, double bins_opt,
                 const std::string& click_log) {
  const aqkd::ExperimentConfig cfg = aqkd::load_config(args.config_path);
  const aqkd::PairingMode mode = resolve_mode(cfg, args.mode_str);
  aqkd::SimOptions opt;
  opt.n_bins = bins_opt > 0 ? static_cast<std::uint64_t>(std::llround(bins_opt))
                            : static_cast<std::uint64_t>(cfg.link.n_bins);
  opt.seed = args.seed;
  opt.threads = args.threads;

  std::vector<aqkd::ClickEvent> clicks;
  aqkd::generate_stream(cfg, opt, [&clicks](std::vector<aqkd::ClickEvent>&& b) {
    clicks.insert(clicks.end(), b.begin(), b.end());
  });
  if (!click_log.empty()) {
    std::ofstream os(click_log, std::ios::binary);
    if (!os) throw aqkd::ConfigError("cannot open click log: " + click_log);
    aqkd::write_click_log(os, clicks);
  }
  aqkd::TallySheet tally = aqkd::pair_and_tally(clicks, cfg, mode);
  tally.n_bins = static_cast<double>(opt.n_bins);
  json j = aqkd::tally_to_json(tally);
  j["config"] = aqkd::config_to_json(cfg);
  j["version"] = aqkd::kVersion;
  emit(j.dump(2), args.out_path);
  return kExitOk;
}

int cmd_keyrate(const CommonArgs& args, const std::string& tally_path) {
  aqkd::ExperimentConfig cfg = aqkd::load_config(args.config_path);
  const aqkd::PairingMode mode = resolve_mode(cfg, args.mode_str);
  std::ifstream is(tally_path);
  if (!is) throw aqkd::ConfigError("cannot open tally file: " + tally_path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw aqkd::ConfigError(std::string("tally parse error: ") + e.what());
  }
  const aqkd::TallySheet tally = aqkd::tally_from_json(j);
  if (tally.mode != mode)
    throw aqkd::ConfigError("tally was collected in mode '" +
                            std::string(aqkd::to_string(tally.mode)) +
                            "' but evaluation requested '" +
                            aqkd::to_string(mode) + "'");
  // A tally from a reduced run carries its own bin count for normalization.
  if (tally.n_bins > 0) cfg.link.n_bins = tally.n_bins;
  return emit_report(aqkd::evaluate_tally(tally, cfg, mode), cfg, args.out_path);
}

std::string csv_row(double distance, double loss, double skr, double skc0,
                    double ratio) {
  std::ostringstream os;
  os.precision(6);
  os << distance << ',' << loss << ',' << std::scientific << skr << ','
     << skc0 << ',' << std::defaultfloat << ratio << '\n';
  return os.str();
}

int cmd_scan(const CommonArgs& args, const std::vector<double>& distances,
             bool golden, bool optimize) {
  std::string csv = "distance_km,loss_db,skr_per_clock,skc0,ratio\n";
  if (golden) {
    const double f_ec = aqkd::calibrate_f_ec();
    for (const aqkd::GoldenSetting& g : aqkd::golden_settings()) {
      aqkd::ExperimentConfig cfg = g.config();
      cfg.security.f_ec = f_ec;
      const aqkd::KeyRateReport rep =
          aqkd::evaluate_tally(g.tally(), cfg, aqkd::PairingMode::Filtered);
      csv += csv_row(g.distance_km, g.loss_total_db, rep.skr_per_clock,
                     rep.skc0_per_clock, rep.ratio);
    }
    emit(csv, args.out_path);
    return kExitOk;
  }

  const aqkd::ExperimentConfig tmpl = aqkd::load_config(args.config_path);
  const aqkd::PairingMode mode = resolve_mode(tmpl, args.mode_str);
  if (distances.empty())
    throw aqkd::ConfigError("scan needs --distances (or --golden)");
  for (double d : distances) {
    aqkd::ExperimentConfig cfg = tmpl;
    cfg.link.l_a_km = d / 2.0;
    cfg.link.l_b_km = d / 2.0;
    cfg.link.loss_a_db.reset();  // sweeps use the attenuation model
    cfg.link.loss_b_db.reset();
    aqkd::validate(cfg);
    if (optimize) {
      const aqkd::OptimizeResult best = aqkd::optimize_params(
          cfg, aqkd::ParamBox{}, mode, 8, args.threads);
      cfg = aqkd::with_params(cfg, best.mu, best.nu, best.p_mu, best.p_nu);
    }
    const aqkd::KeyRateReport rep = aqkd::predict_report(cfg, mode);
    csv += csv_row(d, cfg.link.fiber_loss_total_db(), rep.skr_per_clock,
                   rep.skc0_per_clock, rep.ratio);
  }
  emit(csv, args.out_path);
  return kExitOk;
}

int cmd_optimize(const CommonArgs& args, int grid_n) {
  const aqkd::ExperimentConfig tmpl = aqkd::load_config(args.config_path);
  const aqkd::PairingMode mode = resolve_mode(tmpl, args.mode_str);
  const aqkd::OptimizeResult best =
      aqkd::optimize_params(tmpl, aqkd::ParamBox{}, mode, grid_n, args.threads);
  json j;
  j["mu"] = best.mu;
  j["nu"] = best.nu;
  j["p_mu"] = best.p_mu;
  j["p_nu"] = best.p_nu;
  j["skr_per_clock"] = best.skr_per_clock;
  j["feasible"] = best.feasible;
  j["mode"] = aqkd::to_string(mode);
  if (best.feasible) {
    const aqkd::ExperimentConfig cfg =
        aqkd::with_params(tmpl, best.mu, best.nu, best.p_mu, best.p_nu);
    j["report"] = aqkd::report_to_json(aqkd::predict_report(cfg, mode), cfg);
  }
  j["config"] = aqkd::config_to_json(tmpl);
  j["version"] = aqkd::kVersion;
  emit(j.dump(2), args.out_path);
  return best.feasible ? kExitOk : kExitInfeasible;
}

int cmd_reproduce(const CommonArgs& args) {
  double f_ec = 0.0;
  const std::vector<aqkd::SuiteLine> lines = aqkd::run_golden_suite(&f_ec);
  std::ostringstream os;
  bool all_pass = true;
  for (const aqkd::SuiteLine& l : lines) {
    all_pass = all_pass && l.pass;
    os << (l.pass ? "PASS" : "FAIL") << "  " << l.name << ": " << l.detail
       << '\n';
  }
  os << (all_pass ? "all reference checks passed" : "reference checks FAILED")
     << " (f_ec = " << f_ec << ")\n";
  emit(os.str(), args.out_path);
  return all_pass ? kExitOk : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"asynchronous MDI-QKD: simulator and finite-key rate calculator"};
  app.set_version_flag("--version", aqkd::kVersion);
  app.require_subcommand(1);

  CommonArgs a_predict, a_simulate, a_keyrate, a_scan, a_optimize, a_reproduce;

  CLI::App* c_predict =
      app.add_subcommand("predict", "analytic tallies -> decoy -> key length");
  add_common(c_predict, &a_predict);

  CLI::App* c_simulate =
      app.add_subcommand("simulate", "Monte Carlo click stream -> pairing -> tally");
  add_common(c_simulate, &a_simulate);
  double sim_bins = 0.0;
  std::string sim_click_log;
  c_simulate->add_option("--bins", sim_bins,
                         "number of bins (default: config n_bins)");
  c_simulate->add_option("--click-log", sim_click_log,
                         "also write the raw click stream to this file");

  CLI::App* c_keyrate =
      app.add_subcommand("keyrate", "evaluate a measured/simulated tally JSON");
  add_common(c_keyrate, &a_keyrate);
  std::string tally_path;
  c_keyrate->add_option("--tally,-t", tally_path, "tally JSON")
      ->required()
      ->check(CLI::ExistingFile);

  CLI::App* c_scan = app.add_subcommand("scan", "key rate vs distance CSV");
  add_common(c_scan, &a_scan, /*config_required=*/false);
  std::vector<double> distances;
  bool scan_golden = false, scan_optimize = false;
  c_scan->add_option("--distances,-d", distances, "total distances in km")
      ->delimiter(',');
  c_scan->add_flag("--golden", scan_golden,
                   "emit the four bundled reference rows instead of a sweep");
  c_scan->add_flag("--optimize", scan_optimize,
                   "re-optimize source parameters at each distance");

  CLI::App* c_optimize =
      app.add_subcommand("optimize", "search source parameters for best key rate");
  add_common(c_optimize, &a_optimize);
  int grid_n = 8;
  c_optimize->add_option("--grid", grid_n, "grid points per axis")
      ->check(CLI::PositiveNumber);

  CLI::App* c_reproduce = app.add_subcommand(
      "reproduce", "run the bundled reference regression suite");
  add_common(c_reproduce, &a_reproduce, /*config_required=*/false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*c_predict) return cmd_predict(a_predict);
    if (*c_simulate) return cmd_simulate(a_simulate, sim_bins, sim_click_log);
    if (*c_keyrate) return cmd_keyrate(a_keyrate, tally_path);
    if (*c_scan) {
      if (!scan_golden && a_scan.config_path.empty())
        throw aqkd::ConfigError("scan needs --config (or --golden)");
      return cmd_scan(a_scan, distances, scan_golden, scan_optimize);
    }
    if (*c_optimize) return cmd_optimize(a_optimize, grid_n);
    if (*c_reproduce) return cmd_reproduce(a_reproduce);
  } catch (const aqkd::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}
