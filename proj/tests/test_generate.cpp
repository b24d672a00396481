#include <cmath>
#include <stdexcept>

#include "aot/adapted_metrics.hpp"
#include "aot/generate.hpp"
#include "aot/process.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace aot;

namespace {

bool exactly_equal(const ProcessTree& a, const ProcessTree& b) {
  if (a.size() != b.size() || a.horizon() != b.horizon() || a.dim() != b.dim()) return false;
  for (std::size_t id = 0; id < a.size(); ++id) {
    const TreeNode &na = a.node(static_cast<int>(id)), &nb = b.node(static_cast<int>(id));
    if (na.time != nb.time || na.parent != nb.parent || na.prob != nb.prob ||
        na.value != nb.value)
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("leaky bet family") {
  std::vector<ProcessTree> family = leaky_bet_family(5);
  REQUIRE(family.size() == 5);
  for (int k = 1; k <= 5; ++k) CHECK(trees_isomorphic(family[static_cast<std::size_t>(k - 1)],
                                                      leaky_bet(k)));
  // k = 3 leaks the outcome at scale 1/3
  const ProcessTree& third = family[2];
  double top = 0;
  for (int id : third.at_time(1)) top = std::max(top, std::abs(third.node(id).value[0]));
  CHECK(top == doctest::Approx(1.0 / 3).epsilon(1e-15));
  CHECK_THROWS_AS((void)leaky_bet_family(0), std::invalid_argument);
}

TEST_CASE("random markov bases are markov of their order and seeded") {
  for (int order = 1; order <= 2; ++order) {
    ProcessTree base = random_markov_base(order, 3, 2, 42);
    CHECK(base.horizon() == 3);
    CHECK(base.leaves().size() == 8);
    CHECK(is_n_markov(base, order));
    CHECK(exactly_equal(base, random_markov_base(order, 3, 2, 42)));
  }
  ProcessTree three_states = random_markov_base(1, 2, 3, 7);
  CHECK(three_states.leaves().size() == 9);
  CHECK(is_n_markov(three_states, 1));
  CHECK_THROWS_AS((void)random_markov_base(0, 3, 2, 1), std::invalid_argument);
}

TEST_CASE("kernel perturbation stays markov and vanishes with eps") {
  for (int order = 1; order <= 2; ++order) {
    ProcessTree base = random_markov_base(order, 3, 2, 11);

    ProcessTree untouched = perturb_markov_kernel(base, order, 0.0, 99);
    CHECK(exactly_equal(base, untouched));

    double prev = -1.0;
    for (double eps : {1.0, 0.5, 0.1, 0.01}) {
      ProcessTree moved = perturb_markov_kernel(base, order, eps, 99);
      CHECK(is_n_markov(moved, order));
      // values untouched, only probabilities move
      for (std::size_t id = 1; id < base.size(); ++id)
        CHECK(moved.node(static_cast<int>(id)).value == base.node(static_cast<int>(id)).value);
      double dist = aw_dist(base, moved, 1.0).value;
      if (prev >= 0.0) CHECK(dist < prev);
      prev = dist;
    }
    CHECK(prev > 0.0);
    CHECK(aw_dist(base, perturb_markov_kernel(base, order, 1e-7, 99), 1.0).value < 1e-4);
  }
  CHECK_THROWS_AS((void)perturb_markov_kernel(random_markov_base(1, 2, 2, 1), 1, 2.0, 1),
                  std::invalid_argument);
}

TEST_CASE("quantized walks") {
  ProcessTree degenerate = random_walk_quantization(1, 4);
  CHECK(degenerate.leaves().size() == 1);
  Vec path = degenerate.path_values(degenerate.leaves()[0]);
  for (double v : path) CHECK(v == 0.0);

  // k = 7 puts every reachable integer on the grid: the exact binomial walk
  ProcessTree exact = random_walk_quantization(7, 3);
  DiscreteMeasure law = path_law(exact);
  REQUIRE(law.size() == 8);
  for (double w : law.weights) CHECK(w == doctest::Approx(0.125).epsilon(1e-15));
  for (const Vec& atom : law.atoms) {
    CHECK(std::abs(atom[0]) == 1.0);
    CHECK(std::abs(atom[1] - atom[0]) == 1.0);
    CHECK(std::abs(atom[2] - atom[1]) == 1.0);
  }

  // coarse grids stay inside [-t, t] and refine toward the exact walk
  double coarse = aw_dist(random_walk_quantization(2, 3), exact, 1.0).value;
  double fine = aw_dist(random_walk_quantization(5, 3), exact, 1.0).value;
  CHECK(fine < coarse);
  CHECK_THROWS_AS((void)random_walk_quantization(0, 3), std::invalid_argument);
}

TEST_CASE("family dispatcher") {
  GenerateParams params;
  params.k_min = 3;
  params.k_max = 5;
  std::vector<ProcessTree> leaky = generate("leaky-bet", params);
  REQUIRE(leaky.size() == 3);
  CHECK(trees_isomorphic(leaky[0], leaky_bet(3)));

  params.k_min = 1;
  params.k_max = 4;
  params.order = 1;
  params.horizon = 2;
  std::vector<ProcessTree> perturbed = generate("markov-perturbation", params);
  REQUIRE(perturbed.size() == 4);
  ProcessTree base = random_markov_base(1, 2, 2, params.seed);
  double d1 = aw_dist(base, perturbed[0], 1.0).value;
  double d4 = aw_dist(base, perturbed[3], 1.0).value;
  CHECK(d4 < d1);  // eps_k = 1/k shrinks toward the base

  std::vector<ProcessTree> walks = generate("random-walk-quantization", params);
  REQUIRE(walks.size() == 4);
  CHECK(walks[0].leaves().size() == 1);

  CHECK_THROWS_AS((void)generate("custom-file-sequence", params), std::invalid_argument);
  CHECK_THROWS_AS((void)generate("nope", params), std::invalid_argument);
  params.k_max = 0;
  CHECK_THROWS_AS((void)generate("leaky-bet", params), std::invalid_argument);
}
