#include "aot/generate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>

namespace aot {

namespace {

// Last min(order, time) one-dimensional values above (and including) a node.
Vec window_of(const ProcessTree& x, int id, int order) {
  const int t = x.node(id).time;
  const int len = std::min(order, t);
  Vec w(static_cast<std::size_t>(len));
  int cur = id;
  for (int k = len - 1; k >= 0; --k) {
    w[static_cast<std::size_t>(k)] = x.node(cur).value[0];
    cur = x.node(cur).parent;
  }
  return w;
}

Vec random_simplex_point(std::mt19937_64& rng, int m) {
  std::uniform_int_distribution<int> u(1, 16);
  Vec p(static_cast<std::size_t>(m));
  double total = 0;
  for (double& v : p) total += (v = u(rng));
  for (double& v : p) v /= total;
  return p;
}

}  // namespace

std::vector<ProcessTree> leaky_bet_family(int count) {
  if (count < 1) throw std::invalid_argument("leaky_bet_family: count must be >= 1");
  std::vector<ProcessTree> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 1; k <= count; ++k) out.push_back(leaky_bet(k));
  return out;
}

ProcessTree random_markov_base(int order, int horizon, int states, std::uint64_t seed) {
  if (order < 1 || horizon < 1 || states < 1)
    throw std::invalid_argument("random_markov_base: order, horizon, states must be >= 1");
  std::mt19937_64 rng(seed);

  // distinct values on a quarter grid
  std::vector<double> values;
  while (static_cast<int>(values.size()) < states) {
    double v = (static_cast<double>(rng() % 17) - 8.0) / 4.0;
    if (std::find(values.begin(), values.end(), v) == values.end()) values.push_back(v);
  }

  std::map<Vec, Vec> kernel;  // window -> transition probabilities
  TreeBuilder builder(horizon, 1);
  // breadth-first unroll; the kernel cache keeps equal windows identical
  struct Pending {
    int id;
    Vec window;
  };
  std::vector<Pending> frontier{{ProcessTree::root_id, {}}};
  for (int t = 0; t < horizon; ++t) {
    std::vector<Pending> next;
    for (const Pending& node : frontier) {
      auto [it, fresh] = kernel.try_emplace(node.window);
      if (fresh) it->second = random_simplex_point(rng, states);
      for (int s = 0; s < states; ++s) {
        int child = builder.add(node.id, {values[static_cast<std::size_t>(s)]},
                                it->second[static_cast<std::size_t>(s)]);
        Vec w = node.window;
        w.push_back(values[static_cast<std::size_t>(s)]);
        if (static_cast<int>(w.size()) > order) w.erase(w.begin());
        next.push_back({child, std::move(w)});
      }
    }
    frontier = std::move(next);
  }
  return builder.build();
}

ProcessTree perturb_markov_kernel(const ProcessTree& base, int order, double eps,
                                  std::uint64_t seed) {
  if (order < 1) throw std::invalid_argument("perturb_markov_kernel: order must be >= 1");
  if (!(eps >= 0.0 && eps <= 1.0))
    throw std::invalid_argument("perturb_markov_kernel: eps must lie in [0, 1]");
  if (base.dim() != 1)
    throw std::invalid_argument("perturb_markov_kernel: one-dimensional values expected");

  // group inner nodes by value window; a window's children must agree
  std::map<Vec, std::vector<int>> groups;
  for (int t = 0; t < base.horizon(); ++t)
    for (int id : base.at_time(t)) groups[window_of(base, id, order)].push_back(id);

  auto sorted_children = [&](int id) {
    std::vector<int> c = base.node(id).children;
    std::sort(c.begin(), c.end(), [&](int a, int b) {
      return base.node(a).value[0] < base.node(b).value[0];
    });
    return c;
  };

  // one direction per window, drawn in deterministic (sorted-key) order
  std::mt19937_64 rng(seed);
  std::map<Vec, Vec> direction;
  for (const auto& [window, ids] : groups) {
    const std::vector<int> lead = sorted_children(ids.front());
    const std::size_t m = lead.size();
    for (int id : ids) {
      std::vector<int> c = sorted_children(id);
      if (c.size() != m) throw std::invalid_argument("perturb_markov_kernel: ragged window");
      for (std::size_t s = 0; s < m; ++s)
        if (base.node(c[s]).value != base.node(lead[s]).value ||
            base.node(c[s]).prob != base.node(lead[s]).prob)
          throw std::invalid_argument(
              "perturb_markov_kernel: child laws differ within a window");
    }
    Vec delta(m, 0.0);
    if (m > 1) {
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      for (std::size_t s = 0; s + 1 < m; ++s) delta[s] = u(rng);
      delta[m - 1] = 0.0;
      double sum = 0;
      for (std::size_t s = 0; s + 1 < m; ++s) sum += delta[s];
      delta[m - 1] = -sum;  // exact zero-sum
      double scale = 1.0;
      for (std::size_t s = 0; s < m; ++s)
        if (delta[s] != 0.0)
          scale = std::min(scale, base.node(lead[s]).prob / (2.0 * std::abs(delta[s])));
      for (double& d : delta) d *= scale;
    }
    direction.emplace(window, std::move(delta));
  }

  // rebuild with shifted probabilities; ids keep their order
  TreeBuilder builder(base.horizon(), base.dim());
  for (std::size_t id = 1; id < base.size(); ++id) {
    const TreeNode& n = base.node(static_cast<int>(id));
    const Vec window = window_of(base, n.parent, order);
    const std::vector<int> siblings = sorted_children(n.parent);
    const std::size_t rank = static_cast<std::size_t>(
        std::find(siblings.begin(), siblings.end(), static_cast<int>(id)) - siblings.begin());
    double prob = n.prob + eps * direction.at(window)[rank];
    int got = builder.add(n.parent, n.value, prob);
    if (got != static_cast<int>(id))
      throw std::logic_error("perturb_markov_kernel: node order not preserved");
  }
  return builder.build();
}

ProcessTree random_walk_quantization(int k, int horizon) {
  if (k < 1 || horizon < 1)
    throw std::invalid_argument("random_walk_quantization: k and horizon must be >= 1");

  auto snap = [k](double x, int t) {
    if (k == 1) return 0.0;
    const double lo = -static_cast<double>(t), span = 2.0 * t;
    double j = std::round((x - lo) / span * (k - 1));
    j = std::min(std::max(j, 0.0), static_cast<double>(k - 1));
    return lo + span * j / (k - 1);
  };

  TreeBuilder builder(horizon, 1);
  struct Pending {
    int id;
    double value;
  };
  std::vector<Pending> frontier{{ProcessTree::root_id, 0.0}};
  for (int t = 1; t <= horizon; ++t) {
    std::vector<Pending> next;
    for (const Pending& node : frontier) {
      const double up = snap(node.value + 1.0, t);
      const double down = snap(node.value - 1.0, t);
      if (up == down) {
        next.push_back({builder.add(node.id, {up}, 1.0), up});
      } else {
        next.push_back({builder.add(node.id, {up}, 0.5), up});
        next.push_back({builder.add(node.id, {down}, 0.5), down});
      }
    }
    frontier = std::move(next);
  }
  return builder.build();
}

std::vector<ProcessTree> generate(const std::string& family, const GenerateParams& params) {
  if (params.k_min < 1 || params.k_max < params.k_min)
    throw std::invalid_argument("generate: grid must satisfy 1 <= k_min <= k_max");
  std::vector<ProcessTree> out;
  out.reserve(static_cast<std::size_t>(params.k_max - params.k_min + 1));
  if (family == "leaky-bet") {
    for (int k = params.k_min; k <= params.k_max; ++k) out.push_back(leaky_bet(k));
  } else if (family == "markov-perturbation") {
    ProcessTree base =
        random_markov_base(params.order, params.horizon, params.states, params.seed);
    for (int k = params.k_min; k <= params.k_max; ++k)
      out.push_back(perturb_markov_kernel(base, params.order, 1.0 / k, params.seed + 1));
  } else if (family == "random-walk-quantization") {
    for (int k = params.k_min; k <= params.k_max; ++k)
      out.push_back(random_walk_quantization(k, params.horizon));
  } else {
    throw std::invalid_argument("generate: unknown family \"" + family + "\"");
  }
  return out;
}

}  // namespace aot
