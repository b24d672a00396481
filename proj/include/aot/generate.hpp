// Parametric process families driving the convergence experiments.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aot/process.hpp"

namespace aot {

/// leaky_bet(k) for k = 1..count.
std::vector<ProcessTree> leaky_bet_family(int count);

/// Stationary random kernel of the given order over `states` distinct grid
/// values, unrolled to `horizon`.  One-step laws are a function of the
/// last-`order` value window by construction, so the tree is order-Markov.
/// Deterministic in the seed.
ProcessTree random_markov_base(int order, int horizon, int states, std::uint64_t seed);

/// Moves every transition probability by eps along a direction drawn once per
/// value window (zero-sum across siblings, scaled so probabilities stay
/// positive for all eps <= 1).  Values are untouched and the window
/// dependence is preserved, so the result is still order-Markov; eps = 0
/// reproduces the base tree exactly.  Requires window-consistent sibling
/// families, which random_markov_base guarantees.
ProcessTree perturb_markov_kernel(const ProcessTree& base, int order, double eps,
                                  std::uint64_t seed);

/// Symmetric +-1 walk over `horizon` steps with each time-t value snapped to
/// a k-point uniform grid on [-t, t]; siblings that collide after snapping
/// are merged.  k = 1 degenerates to the single all-zero path.
ProcessTree random_walk_quantization(int k, int horizon);

struct GenerateParams {
  int k_min = 1;
  int k_max = 10;
  int order = 1;    // markov-perturbation
  int horizon = 3;  // markov-perturbation, random-walk-quantization
  int states = 2;   // markov-perturbation
  std::uint64_t seed = 42;
};

/// Grid k = k_min..k_max of the named family:
///   "leaky-bet"                leaky_bet(k)
///   "markov-perturbation"      seeded base with eps_k = 1/k kernel noise
///   "random-walk-quantization" k-point quantized walks
/// Unknown families -> invalid_argument.
std::vector<ProcessTree> generate(const std::string& family, const GenerateParams& params);

}  // namespace aot
