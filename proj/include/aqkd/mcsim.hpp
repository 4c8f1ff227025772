#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "aqkd/config.hpp"
#include "aqkd/pairing.hpp"

namespace aqkd {

struct SimOptions {
  std::uint64_t n_bins = 0;
  std::uint64_t seed = 1;
  int threads = 0;              // 0 = hardware concurrency
  double drift_window_s = 10e-3;  // piecewise-constant drift-rate window
};

struct SimStats {
  std::uint64_t clicks = 0;
  std::uint64_t candidate_bins = 0;  // thinning candidates examined
};

// Generates the click stream bin by bin: per-bin intensity and phase-slice
// draws, fiber drift as a piecewise-linear phase whose rate is resampled from
// Normal(0, sigma^2) every drift window, laser offset 2 pi delta_f t, and
// exclusive-click sampling from gain_conditional (double clicks never
// materialize).  Detector assignment is flipped per click with probability
// e = (1 - sqrt(1 - 2 E_HOM))/2 so that the probability of exactly one flip
// within a pair equals E_HOM.
//
// Generation is block-parallel with counter-based per-block RNG streams
// derived from the seed; blocks are delivered to the sink in bin order, so
// output is byte-identical for a given seed regardless of thread count.
SimStats generate_stream(const ExperimentConfig& cfg, const SimOptions& opt,
                         const std::function<void(std::vector<ClickEvent>&&)>& sink);

// Convenience for tests and small runs.
std::vector<ClickEvent> generate_clicks(const ExperimentConfig& cfg,
                                        const SimOptions& opt,
                                        SimStats* stats = nullptr);

}  // namespace aqkd
