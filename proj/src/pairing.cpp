#include "aqkd/pairing.hpp"

#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace aqkd {

namespace {

bool is_filtered_class(Intensity a, Intensity b) {
  return (a == Intensity::Mu && b == Intensity::Nu) ||
         (a == Intensity::Nu && b == Intensity::Mu);
}

}  // namespace

std::vector<ClickEvent> filter_clicks(const std::vector<ClickEvent>& stream,
                                      PairingMode mode, FilterStats* stats) {
  std::vector<ClickEvent> kept;
  kept.reserve(stream.size());
  std::uint64_t prev_bin = 0;
  bool first = true;
  for (const ClickEvent& c : stream) {
    if (!first && c.bin <= prev_bin)
      throw std::invalid_argument("click stream is not strictly increasing in bin");
    first = false;
    prev_bin = c.bin;
    if (mode == PairingMode::Filtered && is_filtered_class(c.k_a, c.k_b)) {
      if (stats) stats->removed += 1.0;
      continue;
    }
    if (stats) stats->kept_by_class[click_key(c.k_a, c.k_b)] += 1.0;
    kept.push_back(c);
  }
  return kept;
}

bool GreedyMatcher::push(const ClickEvent& click, ClickEvent* first_out) {
  if (!have_pending_) {
    pending_ = click;
    have_pending_ = true;
    return false;
  }
  if (click.bin - pending_.bin <= max_gap_) {
    *first_out = pending_;
    have_pending_ = false;
    return true;
  }
  lone_ += 1.0;
  pending_ = click;
  return false;
}

void GreedyMatcher::finish() {
  if (have_pending_) {
    lone_ += 1.0;
    have_pending_ = false;
  }
}

PairRecord classify_pair(const ClickEvent& early, const ClickEvent& late,
                         const ExperimentConfig& cfg) {
  const int m = cfg.source.m_slices;
  PairRecord p;
  p.bin_early = early.bin;
  p.bin_late = late.bin;
  p.det_early = early.detector;
  p.det_late = late.detector;
  p.k_a_tot = combine(early.k_a, late.k_a);
  p.k_b_tot = combine(early.k_b, late.k_b);
  p.dphi_a_idx = static_cast<std::uint8_t>(
      (late.theta_a_idx + m - early.theta_a_idx) % m);
  p.dphi_b_idx = static_cast<std::uint8_t>(
      (late.theta_b_idx + m - early.theta_b_idx) % m);

  if (over_intensity(p.k_a_tot) || over_intensity(p.k_b_tot)) {
    p.basis = Basis::Discard;
    return p;
  }
  const bool z_class =
      cfg.mode == PairingMode::Filtered
          ? (p.k_a_tot == PairIntensity::Mu && p.k_b_tot == PairIntensity::Mu)
          : ((p.k_a_tot == PairIntensity::Mu || p.k_a_tot == PairIntensity::Nu) &&
             (p.k_b_tot == PairIntensity::Mu || p.k_b_tot == PairIntensity::Nu));
  if (z_class) {
    p.basis = Basis::Z;
    // 0 marks the intended time slot: party A's pulse early, party B's late
    // (B's reconciliation flip is folded into the convention).
    p.bit_a = early.k_a != Intensity::O ? 0 : 1;
    p.bit_b = late.k_b != Intensity::O ? 0 : 1;
  } else if (p.k_a_tot == PairIntensity::TwoNu &&
             p.k_b_tot == PairIntensity::TwoNu) {
    const int d = (p.dphi_a_idx + m - p.dphi_b_idx) % m;
    p.basis = (d == 0 || d == m / 2) ? Basis::X : Basis::Discard;
  } else {
    p.basis = Basis::Decoy;
  }
  return p;
}

std::vector<PairRecord> match_pairs(const std::vector<ClickEvent>& stream,
                                    const ExperimentConfig& cfg,
                                    double* lone_discards) {
  GreedyMatcher matcher(cfg.link.n_tc());
  std::vector<PairRecord> pairs;
  ClickEvent early;
  for (const ClickEvent& c : stream) {
    if (matcher.push(c, &early)) pairs.push_back(classify_pair(early, c, cfg));
  }
  matcher.finish();
  if (lone_discards) *lone_discards = matcher.lone_discards();
  return pairs;
}

void sift(std::vector<PairRecord>& pairs, XKeyMapping mapping,
          const ExperimentConfig& cfg) {
  const int m = cfg.source.m_slices;
  for (PairRecord& p : pairs) {
    if (p.basis != Basis::X) continue;
    const int d = (p.dphi_a_idx + m - p.dphi_b_idx) % m;
    const bool same_det = p.det_early == p.det_late;
    if (mapping == XKeyMapping::DetectorFlip) {
      p.bit_a = 0;
      const bool flip = (d == 0 && !same_det) || (d == m / 2 && same_det);
      p.bit_b = flip ? 1 : 0;
    } else {
      p.bit_a = p.dphi_a_idx >= m / 2 ? 1 : 0;
      p.bit_b = (p.dphi_b_idx >= m / 2 ? 1 : 0) ^ (p.det_early & 1u) ^
                (p.det_late & 1u);
    }
  }
}

TallySheet tally(const std::vector<PairRecord>& pairs, const FilterStats& clicks,
                 double lone_discards, const ExperimentConfig& cfg,
                 PairingMode mode) {
  TallySheet t;
  t.mode = mode;
  t.n_bins = cfg.link.n_bins;
  t.n_click = clicks.kept_by_class;
  if (mode == PairingMode::Filtered) t.discards["click_filtered"] = clicks.removed;
  t.discards["pair_lone"] = lone_discards;

  std::map<std::string, double> gap_sum;
  double gap_all = 0.0;
  for (const PairRecord& p : pairs) {
    const double gap = static_cast<double>(p.bin_late - p.bin_early);
    gap_all += gap;
    if (p.basis == Basis::Discard) {
      if (over_intensity(p.k_a_tot) || over_intensity(p.k_b_tot))
        t.discards["pair_over_intensity"] += 1.0;
      else
        t.discards["x_phase_sift"] += 1.0;
      continue;
    }
    const std::string key = pair_key(p.k_a_tot, p.k_b_tot);
    t.n_pair[key] += 1.0;
    gap_sum[key] += gap;
    if (p.basis == Basis::Z || p.basis == Basis::X)
      t.m_pair[key] += p.bit_a != p.bit_b ? 1.0 : 0.0;
  }
  for (const auto& [key, sum] : gap_sum)
    t.t_mean_by_class[key] = sum / t.n_pair[key] / cfg.link.clock_hz;
  if (!pairs.empty())
    t.t_mean_by_class["all"] =
        gap_all / static_cast<double>(pairs.size()) / cfg.link.clock_hz;
  return t;
}

TallySheet pair_and_tally(const std::vector<ClickEvent>& stream,
                          const ExperimentConfig& cfg, PairingMode mode,
                          XKeyMapping mapping) {
  ExperimentConfig local = cfg;
  local.mode = mode;
  FilterStats fs;
  const std::vector<ClickEvent> kept = filter_clicks(stream, mode, &fs);
  double lone = 0.0;
  std::vector<PairRecord> pairs = match_pairs(kept, local, &lone);
  sift(pairs, mapping, local);
  return tally(pairs, fs, lone, local, mode);
}

namespace {
constexpr char kMagic[8] = {'A', 'Q', 'K', 'D', 'C', 'L', 'K', '\0'};
constexpr std::uint8_t kLogVersion = 1;
constexpr std::size_t kRecordBytes = 13;
}  // namespace

void write_click_log(std::ostream& os, const std::vector<ClickEvent>& stream) {
  os.write(kMagic, sizeof kMagic);
  os.put(static_cast<char>(kLogVersion));
  char rec[kRecordBytes];
  for (const ClickEvent& c : stream) {
    for (int i = 0; i < 8; ++i)
      rec[i] = static_cast<char>((c.bin >> (8 * i)) & 0xff);
    rec[8] = static_cast<char>(c.detector);
    rec[9] = static_cast<char>(c.k_a);
    rec[10] = static_cast<char>(c.k_b);
    rec[11] = static_cast<char>(c.theta_a_idx);
    rec[12] = static_cast<char>(c.theta_b_idx);
    os.write(rec, kRecordBytes);
  }
  if (!os) throw std::runtime_error("click log write failed");
}

std::vector<ClickEvent> read_click_log(std::istream& is) {
  char header[9];
  is.read(header, sizeof header);
  if (!is || std::memcmp(header, kMagic, sizeof kMagic) != 0)
    throw std::runtime_error("not a click log: bad magic");
  if (static_cast<std::uint8_t>(header[8]) != kLogVersion)
    throw std::runtime_error("unsupported click log version");
  std::vector<ClickEvent> stream;
  char rec[kRecordBytes];
  while (is.read(rec, kRecordBytes)) {
    ClickEvent c;
    c.bin = 0;
    for (int i = 0; i < 8; ++i)
      c.bin |= static_cast<std::uint64_t>(static_cast<unsigned char>(rec[i]))
               << (8 * i);
    c.detector = static_cast<std::uint8_t>(rec[8]);
    c.k_a = static_cast<Intensity>(rec[9]);
    c.k_b = static_cast<Intensity>(rec[10]);
    c.theta_a_idx = static_cast<std::uint8_t>(rec[11]);
    c.theta_b_idx = static_cast<std::uint8_t>(rec[12]);
    stream.push_back(c);
  }
  if (is.gcount() != 0)
    throw std::runtime_error("click log truncated mid-record");
  return stream;
}

}  // namespace aqkd
