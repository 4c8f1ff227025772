#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "aqkd/keyrate.hpp"

namespace aqkd {

inline constexpr std::uint8_t kDetectorL = 0;
inline constexpr std::uint8_t kDetectorR = 1;

// One successful single-detector detection.  Intensity and phase-slice labels
// are the senders' private records, attached for offline analysis.
struct ClickEvent {
  std::uint64_t bin = 0;
  std::uint8_t detector = kDetectorL;
  Intensity k_a = Intensity::O;
  Intensity k_b = Intensity::O;
  std::uint8_t theta_a_idx = 0;  // phase slice, 0..M-1
  std::uint8_t theta_b_idx = 0;

  friend bool operator==(const ClickEvent&, const ClickEvent&) = default;
};

enum class Basis : unsigned char { Z, X, Decoy, Discard };

// One asynchronous coincidence of two clicks.
struct PairRecord {
  std::uint64_t bin_early = 0;
  std::uint64_t bin_late = 0;
  PairIntensity k_a_tot = PairIntensity::O;
  PairIntensity k_b_tot = PairIntensity::O;
  std::uint8_t det_early = kDetectorL;
  std::uint8_t det_late = kDetectorL;
  std::uint8_t dphi_a_idx = 0;  // late-minus-early phase slices, mod M
  std::uint8_t dphi_b_idx = 0;
  Basis basis = Basis::Discard;
  signed char bit_a = -1;
  signed char bit_b = -1;
};

// X-basis bit extraction strategy; both produce identical error sets.
//   PhaseBits:    each party derives its bit from its own phase increment;
//                 Bob additionally XORs the two detector indicators.
//   DetectorFlip: both parties write 0; Bob flips on (phi_ab = 0, different
//                 detectors) or (phi_ab = pi, same detector).
enum class XKeyMapping { PhaseBits, DetectorFlip };

struct FilterStats {
  std::map<std::string, double> kept_by_class;  // click-class counts after filtering
  double removed = 0.0;                         // (mu|nu) + (nu|mu) in Filtered mode
};

// Removes the (mu|nu) and (nu|mu) click classes in Filtered mode; identity
// otherwise.  Throws std::invalid_argument on an out-of-order stream.
std::vector<ClickEvent> filter_clicks(const std::vector<ClickEvent>& stream,
                                      PairingMode mode, FilterStats* stats = nullptr);

// Incremental greedy matcher: each unmatched click pairs with its immediate
// successor iff the gap is within max_gap_bins, else it is discarded as lone.
class GreedyMatcher {
 public:
  explicit GreedyMatcher(std::uint64_t max_gap_bins) : max_gap_(max_gap_bins) {}

  // Returns true and fills `out` when `click` completes a pair.
  bool push(const ClickEvent& click, ClickEvent* first_out);
  // Number of clicks discarded without a partner so far (final lone click
  // counted only after finish()).
  double lone_discards() const { return lone_; }
  void finish();

 private:
  std::uint64_t max_gap_;
  bool have_pending_ = false;
  ClickEvent pending_{};
  double lone_ = 0.0;
};

// Builds a classified PairRecord from two clicks: combined intensities,
// over-intensity discard rule, basis assignment, and the X-basis phase
// condition phi_ab in {0, pi} tested in integer slice arithmetic.
// Z bits are set here (0 iff the nonzero intensity sits in A's early bin /
// B's late bin, B's reconciliation flip folded in) since they need the
// per-bin intensities, which the record does not keep.
PairRecord classify_pair(const ClickEvent& early, const ClickEvent& late,
                         const ExperimentConfig& cfg);

// Full matching pass over a filtered stream.
std::vector<PairRecord> match_pairs(const std::vector<ClickEvent>& stream,
                                    const ExperimentConfig& cfg,
                                    double* lone_discards = nullptr);

// Fills X-basis bit_a/bit_b using the selected mapping; Z bits are already
// fixed at classification and left untouched.
void sift(std::vector<PairRecord>& pairs, XKeyMapping mapping,
          const ExperimentConfig& cfg);

// Accumulates sifted pairs and filter statistics into a TallySheet.
TallySheet tally(const std::vector<PairRecord>& pairs, const FilterStats& clicks,
                 double lone_discards, const ExperimentConfig& cfg,
                 PairingMode mode);

// Convenience: filter -> match -> sift -> tally.
TallySheet pair_and_tally(const std::vector<ClickEvent>& stream,
                          const ExperimentConfig& cfg, PairingMode mode,
                          XKeyMapping mapping = XKeyMapping::DetectorFlip);

// Click-log serialization: 8-byte magic "AQKDCLK\0", u8 version, then
// little-endian records (u64 bin, u8 detector, u8 k_a, u8 k_b, u8 theta_a,
// u8 theta_b).
void write_click_log(std::ostream& os, const std::vector<ClickEvent>& stream);
std::vector<ClickEvent> read_click_log(std::istream& is);

}  // namespace aqkd
