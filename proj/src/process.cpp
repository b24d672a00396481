#include "aot/process.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <stdexcept>

namespace aot {

// ---------------------------------------------------------------------------
// Construction

TreeBuilder::TreeBuilder(int horizon, int dim) : n_(horizon), d_(dim) {
  if (horizon < 1) throw std::invalid_argument("tree: horizon must be >= 1");
  if (dim < 1) throw std::invalid_argument("tree: dimension must be >= 1");
  nodes_.push_back(TreeNode{});
}

int TreeBuilder::add(int parent, Vec value, double prob) {
  if (parent < 0 || parent >= static_cast<int>(nodes_.size()))
    throw std::invalid_argument("tree: unknown parent node");
  const TreeNode& par = nodes_[static_cast<std::size_t>(parent)];
  if (par.time >= n_) throw std::invalid_argument("tree: node beyond the horizon");
  if (static_cast<int>(value.size()) != d_)
    throw std::invalid_argument("tree: value dimension mismatch");
  for (double v : value)
    if (!std::isfinite(v)) throw std::invalid_argument("tree: non-finite value");
  if (!(prob > 0) || !std::isfinite(prob))
    throw std::invalid_argument("tree: transition probabilities must be strictly positive");
  TreeNode node;
  node.time = par.time + 1;
  node.parent = parent;
  node.prob = prob;
  node.value = std::move(value);
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(std::move(node));
  nodes_[static_cast<std::size_t>(parent)].children.push_back(id);
  return id;
}

ProcessTree TreeBuilder::build() const {
  ProcessTree tree;
  tree.n_ = n_;
  tree.d_ = d_;
  tree.nodes_ = nodes_;
  tree.by_time_.assign(static_cast<std::size_t>(n_) + 1, {});
  tree.abs_prob_.assign(nodes_.size(), 1.0);
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    const TreeNode& node = nodes_[id];
    tree.by_time_[static_cast<std::size_t>(node.time)].push_back(static_cast<int>(id));
    if (node.parent >= 0)
      tree.abs_prob_[id] =
          tree.abs_prob_[static_cast<std::size_t>(node.parent)] * node.prob;
    if (node.time < n_) {
      if (node.children.empty())
        throw std::invalid_argument("tree: interior node without children (leaf above horizon)");
      double sum = 0;
      for (int c : node.children) sum += nodes_[static_cast<std::size_t>(c)].prob;
      if (std::abs(sum - 1.0) > 1e-12)
        throw std::invalid_argument("tree: child probabilities must sum to 1");
    } else if (!node.children.empty()) {
      throw std::invalid_argument("tree: node below the horizon");
    }
  }
  return tree;
}

Vec ProcessTree::history(int id) const {
  const TreeNode* n = &node(id);
  Vec out(static_cast<std::size_t>(n->time) * static_cast<std::size_t>(d_));
  while (n->parent >= 0) {
    std::copy(n->value.begin(), n->value.end(),
              out.begin() + static_cast<std::ptrdiff_t>((n->time - 1) * d_));
    n = &node(n->parent);
  }
  return out;
}

ProcessTree tree_from_paths(const std::vector<std::pair<Vec, double>>& paths, int horizon,
                            int dim) {
  if (paths.empty()) throw std::invalid_argument("tree: no paths");
  double total = 0;
  for (const auto& [path, w] : paths) {
    if (static_cast<int>(path.size()) != horizon * dim)
      throw std::invalid_argument("tree: path length does not match horizon * dim");
    if (!(w > 0) || !std::isfinite(w)) throw std::invalid_argument("tree: path weights positive");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("tree: path weights sum to 1");

  std::vector<std::size_t> order(paths.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return lex_less(paths[a].first, paths[b].first);
  });

  TreeBuilder builder(horizon, dim);
  auto block_equal = [&](std::size_t a, std::size_t b, int t) {
    const Vec& pa = paths[a].first;
    const Vec& pb = paths[b].first;
    for (int k = 0; k < dim; ++k)
      if (pa[static_cast<std::size_t>(t * dim + k)] != pb[static_cast<std::size_t>(t * dim + k)])
        return false;
    return true;
  };

  // Recursively split the (lex-sorted) index range by the time-t value block.
  std::function<void(std::size_t, std::size_t, int, int, double)> split =
      [&](std::size_t lo, std::size_t hi, int t, int parent, double parent_mass) {
        if (t == horizon) return;
        std::size_t i = lo;
        while (i < hi) {
          std::size_t j = i + 1;
          double mass = paths[order[i]].second;
          while (j < hi && block_equal(order[i], order[j], t)) {
            mass += paths[order[j]].second;
            ++j;
          }
          const Vec& rep = paths[order[i]].first;
          Vec value(rep.begin() + static_cast<std::ptrdiff_t>(t * dim),
                    rep.begin() + static_cast<std::ptrdiff_t>((t + 1) * dim));
          int id = builder.add(parent, std::move(value), mass / parent_mass);
          split(i, j, t + 1, id, mass);
          i = j;
        }
      };
  split(0, paths.size(), 0, 0, total);
  return builder.build();
}

// ---------------------------------------------------------------------------
// Named examples

ProcessTree measure_tree(const DiscreteMeasure& mu) {
  TreeBuilder b(1, static_cast<int>(mu.dim()));
  for (std::size_t i = 0; i < mu.size(); ++i) b.add(0, mu.atoms[i], mu.weights[i]);
  return b.build();
}

ProcessTree plain_bet() {
  TreeBuilder b(2, 1);
  int m = b.add(0, {0.0}, 1.0);
  b.add(m, {1.0}, 0.5);
  b.add(m, {-1.0}, 0.5);
  return b.build();
}

ProcessTree informed_bet() {
  TreeBuilder b(2, 1);
  int up = b.add(0, {0.0}, 0.5);
  int down = b.add(0, {0.0}, 0.5);
  b.add(up, {1.0}, 1.0);
  b.add(down, {-1.0}, 1.0);
  return b.build();
}

ProcessTree duplicated_bet() {
  TreeBuilder b(2, 1);
  for (int copy = 0; copy < 2; ++copy) {
    int m = b.add(0, {0.0}, 0.5);
    b.add(m, {1.0}, 0.5);
    b.add(m, {-1.0}, 0.5);
  }
  return b.build();
}

ProcessTree leaky_bet(int k) {
  if (k < 1) throw std::invalid_argument("leaky_bet: k must be >= 1");
  TreeBuilder b(2, 1);
  int up = b.add(0, {1.0 / k}, 0.5);
  int down = b.add(0, {-1.0 / k}, 0.5);
  b.add(up, {1.0}, 1.0);
  b.add(down, {-1.0}, 1.0);
  return b.build();
}

// ---------------------------------------------------------------------------
// Path laws

DiscreteMeasure path_law(const ProcessTree& x) {
  std::vector<Vec> atoms;
  Vec weights;
  for (int leaf : x.leaves()) {
    atoms.push_back(x.path_values(leaf));
    weights.push_back(x.absolute_prob(leaf));
  }
  return canonicalize(make_measure(std::move(atoms), std::move(weights)));
}

std::vector<std::pair<Vec, Rational>> path_law_exact(const ProcessTree& x) {
  std::vector<std::pair<Vec, Rational>> out;
  for (int leaf : x.leaves()) {
    Rational p = 1;
    for (int id = leaf; id != ProcessTree::root_id; id = x.node(id).parent)
      p *= Rational(x.node(id).prob);
    out.emplace_back(x.path_values(leaf), p);
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return lex_less(a.first, b.first); });
  std::vector<std::pair<Vec, Rational>> merged;
  for (auto& entry : out) {
    if (!merged.empty() && merged.back().first == entry.first)
      merged.back().second += entry.second;
    else
      merged.push_back(std::move(entry));
  }
  return merged;
}

// ---------------------------------------------------------------------------
// Markov structure

namespace {

// Value window X_{max(1, t-n+1) : t} of a time-t node, flattened.
Vec value_window(const ProcessTree& x, int id, int n) {
  const int t = x.node(id).time;
  const int lo = (n >= t) ? 1 : t - n + 1;  // infinite_order >= t always
  Vec h = x.history(id);
  return Vec(h.begin() + static_cast<std::ptrdiff_t>((lo - 1) * x.dim()), h.end());
}

DiscreteMeasure one_step_law(const ProcessTree& x, int id) {
  std::vector<Vec> atoms;
  Vec weights;
  for (int c : x.node(id).children) {
    atoms.push_back(x.node(c).value);
    weights.push_back(x.node(c).prob);
  }
  return canonicalize(make_measure(std::move(atoms), std::move(weights)));
}

std::vector<int> leaves_under(const ProcessTree& x, int id) {
  std::vector<int> out;
  std::function<void(int)> walk = [&](int u) {
    if (x.node(u).time == x.horizon()) {
      out.push_back(u);
      return;
    }
    for (int c : x.node(u).children) walk(c);
  };
  walk(id);
  return out;
}

}  // namespace

bool is_n_markov(const ProcessTree& x, int n, double tol) {
  if (n < 1) throw std::invalid_argument("is_n_markov: order must be >= 1");
  for (int t = 1; t < x.horizon(); ++t) {
    std::vector<int> ids = x.at_time(t);
    std::vector<Vec> windows;
    windows.reserve(ids.size());
    for (int id : ids) windows.push_back(value_window(x, id, n));
    std::vector<std::size_t> order(ids.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return lex_less(windows[a], windows[b]); });
    std::size_t group_start = 0;
    DiscreteMeasure group_law;
    for (std::size_t k = 0; k < order.size(); ++k) {
      if (k == 0 || euclidean(windows[order[group_start]], windows[order[k]]) > tol) {
        group_start = k;
        group_law = one_step_law(x, ids[order[k]]);
        continue;
      }
      if (wasserstein(group_law, one_step_law(x, ids[order[k]]), 1) > tol) return false;
    }
  }
  return true;
}

MarkovStatistic markov_statistic(const ProcessTree& x, int n, int t) {
  if (n < 1) throw std::invalid_argument("markov_statistic: order must be >= 1");
  if (t < 1 || t >= x.horizon()) throw std::out_of_range("markov_statistic: t out of range");
  std::vector<NestedAtom> atoms;
  Vec weights;
  for (int id : x.at_time(t)) {
    atoms.push_back(NestedAtom{NestedComponent(value_window(x, id, n)),
                               NestedComponent(nested_ptr(nested_from_measure(one_step_law(x, id))))});
    weights.push_back(x.absolute_prob(id));
  }
  MarkovStatistic stat;
  stat.t = t;
  stat.n = n;
  stat.law = canonicalize(NestedLaw(std::move(atoms), std::move(weights)));
  return stat;
}

NestedLaw hellwig_statistic(const ProcessTree& x, int t) {
  if (t < 1 || t >= x.horizon()) throw std::out_of_range("hellwig_statistic: t out of range");
  const int d = x.dim();
  std::vector<NestedAtom> atoms;
  Vec weights;
  for (int id : x.at_time(t)) {
    std::vector<Vec> future;
    Vec fw;
    for (int leaf : leaves_under(x, id)) {
      Vec full = x.path_values(leaf);
      future.emplace_back(full.begin() + static_cast<std::ptrdiff_t>(t * d), full.end());
      fw.push_back(x.absolute_prob(leaf) / x.absolute_prob(id));
    }
    auto tail = canonicalize(make_measure(std::move(future), std::move(fw)));
    atoms.push_back(NestedAtom{NestedComponent(x.history(id)),
                               NestedComponent(nested_ptr(nested_from_measure(tail)))});
    weights.push_back(x.absolute_prob(id));
  }
  return canonicalize(NestedLaw(std::move(atoms), std::move(weights)));
}

// ---------------------------------------------------------------------------
// Hoover-Keisler quotient

TreePartition hk_partition(const ProcessTree& x, double tol) {
  const int n_nodes = static_cast<int>(x.size());
  TreePartition part;
  part.class_of.assign(static_cast<std::size_t>(n_nodes), -1);

  // Initial clustering: same time, value within tol (greedy on lex order).
  int next_class = 0;
  for (int t = 0; t <= x.horizon(); ++t) {
    std::vector<int> ids = x.at_time(t);
    std::sort(ids.begin(), ids.end(),
              [&](int a, int b) { return lex_less(x.node(a).value, x.node(b).value); });
    const Vec* rep = nullptr;
    for (int id : ids) {
      if (rep == nullptr || euclidean(*rep, x.node(id).value) > tol) {
        rep = &x.node(id).value;
        ++next_class;
      }
      part.class_of[static_cast<std::size_t>(id)] = next_class - 1;
    }
  }

  using Signature = std::vector<std::pair<int, double>>;  // (class, mass), sorted by class
  auto signature = [&](int id) {
    std::map<int, double> mass;
    for (int c : x.node(id).children)
      mass[part.class_of[static_cast<std::size_t>(c)]] += x.node(c).prob;
    return Signature(mass.begin(), mass.end());
  };
  auto sig_classes_equal = [](const Signature& a, const Signature& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a[i].first != b[i].first) return false;
    return true;
  };
  auto sig_close = [&](const Signature& a, const Signature& b) {
    if (!sig_classes_equal(a, b)) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (std::abs(a[i].second - b[i].second) > tol) return false;
    return true;
  };
  auto sig_less = [](const Signature& a, const Signature& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i].first != b[i].first) return a[i].first < b[i].first;
      if (a[i].second != b[i].second) return a[i].second < b[i].second;
    }
    return false;
  };

  part.rounds = 0;
  while (true) {
    std::vector<Signature> sigs(static_cast<std::size_t>(n_nodes));
    for (int id = 0; id < n_nodes; ++id) sigs[static_cast<std::size_t>(id)] = signature(id);

    // Split every class by signature; renumber deterministically.
    std::vector<std::vector<int>> members(static_cast<std::size_t>(next_class));
    for (int id = 0; id < n_nodes; ++id)
      members[static_cast<std::size_t>(part.class_of[static_cast<std::size_t>(id)])].push_back(id);
    std::vector<int> fresh(static_cast<std::size_t>(n_nodes), -1);
    int count = 0;
    for (auto& group : members) {
      if (group.empty()) continue;
      std::sort(group.begin(), group.end(), [&](int a, int b) {
        const Signature& sa = sigs[static_cast<std::size_t>(a)];
        const Signature& sb = sigs[static_cast<std::size_t>(b)];
        if (sig_less(sa, sb)) return true;
        if (sig_less(sb, sa)) return false;
        return a < b;
      });
      const Signature* rep = nullptr;
      for (int id : group) {
        if (rep == nullptr || !sig_close(*rep, sigs[static_cast<std::size_t>(id)])) {
          rep = &sigs[static_cast<std::size_t>(id)];
          ++count;
        }
        fresh[static_cast<std::size_t>(id)] = count - 1;
      }
    }
    if (count == next_class) break;  // no class split: fixed point
    part.class_of = std::move(fresh);
    next_class = count;
    ++part.rounds;
  }
  part.classes = next_class;
  return part;
}

ProcessTree hk_quotient(const ProcessTree& x, double tol) {
  TreePartition part = hk_partition(x, tol);
  TreeBuilder builder(x.horizon(), x.dim());
  std::function<void(int, int)> emit = [&](int rep, int parent) {
    // Group the representative's children by class, preserving child order.
    std::vector<int> seen;
    for (std::size_t i = 0; i < x.node(rep).children.size(); ++i) {
      const int child = x.node(rep).children[i];
      const int cls = part.class_of[static_cast<std::size_t>(child)];
      if (std::find(seen.begin(), seen.end(), cls) != seen.end()) continue;
      seen.push_back(cls);
      double mass = 0;
      for (int other : x.node(rep).children)
        if (part.class_of[static_cast<std::size_t>(other)] == cls) mass += x.node(other).prob;
      int id = builder.add(parent, x.node(child).value, mass);
      if (x.node(child).time < x.horizon()) emit(child, id);
    }
  };
  emit(ProcessTree::root_id, 0);
  return builder.build();
}

ProcessTree plainify(const ProcessTree& x) {
  std::vector<std::pair<Vec, double>> paths;
  for (int leaf : x.leaves()) paths.emplace_back(x.path_values(leaf), x.absolute_prob(leaf));
  return tree_from_paths(paths, x.horizon(), x.dim());
}

// ---------------------------------------------------------------------------
// Prediction processes

namespace {

// anc[t-1][leaf index]: the time-t node on the path to that leaf.
std::vector<std::vector<int>> ancestor_table(const ProcessTree& x) {
  const std::vector<int>& leaves = x.leaves();
  std::vector<std::vector<int>> anc(static_cast<std::size_t>(x.horizon()),
                                    std::vector<int>(leaves.size()));
  for (std::size_t li = 0; li < leaves.size(); ++li)
    for (int t = 1; t <= x.horizon(); ++t)
      anc[static_cast<std::size_t>(t - 1)][li] = x.ancestor_at(leaves[li], t);
  return anc;
}

std::vector<std::vector<NestedLawPtr>> prediction_levels(const ProcessTree& x, int rank) {
  const int N = x.horizon();
  const int n_nodes = static_cast<int>(x.size());
  const std::vector<int>& leaves = x.leaves();
  const auto anc = ancestor_table(x);

  std::vector<std::vector<std::size_t>> under(static_cast<std::size_t>(n_nodes));
  for (std::size_t li = 0; li < leaves.size(); ++li)
    for (int id = leaves[li]; id != -1; id = x.node(id).parent)
      under[static_cast<std::size_t>(id)].push_back(li);

  // level[k][u] = conditional law, given node u, of the previous iterate;
  // rank 1 conditions the path itself, rank k the tuple of rank-(k-1) laws.
  std::vector<std::vector<NestedLawPtr>> level(static_cast<std::size_t>(rank) + 1);
  for (int k = 1; k <= rank; ++k) {
    level[static_cast<std::size_t>(k)].resize(static_cast<std::size_t>(n_nodes));
    for (int u = 0; u < n_nodes; ++u) {
      std::vector<NestedAtom> atoms;
      Vec weights;
      for (std::size_t li : under[static_cast<std::size_t>(u)]) {
        NestedAtom atom;
        if (k == 1) {
          atom.push_back(NestedComponent(x.path_values(leaves[li])));
        } else {
          for (int t = 1; t <= N; ++t)
            atom.push_back(NestedComponent(
                level[static_cast<std::size_t>(k - 1)]
                     [static_cast<std::size_t>(anc[static_cast<std::size_t>(t - 1)][li])]));
        }
        atoms.push_back(std::move(atom));
        weights.push_back(x.absolute_prob(leaves[li]) / x.absolute_prob(u));
      }
      level[static_cast<std::size_t>(k)][static_cast<std::size_t>(u)] =
          nested_ptr(canonicalize(NestedLaw(std::move(atoms), std::move(weights))));
    }
  }
  return level;
}

}  // namespace

std::vector<NestedLawPtr> prediction_laws(const ProcessTree& x, int rank) {
  if (rank < 1) throw std::invalid_argument("prediction_laws: rank must be >= 1");
  return prediction_levels(x, rank).back();
}

NestedLaw prediction_process(const ProcessTree& x, int r) {
  if (r < 0) throw std::invalid_argument("prediction_process: rank must be >= 0");
  const int N = x.horizon();
  const std::vector<int>& leaves = x.leaves();
  const auto anc = ancestor_table(x);
  const auto level = prediction_levels(x, r);

  std::vector<NestedAtom> atoms;
  Vec weights;
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    NestedAtom atom;
    atom.push_back(NestedComponent(x.path_values(leaves[li])));
    for (int k = 1; k <= r; ++k)
      for (int t = 1; t <= N; ++t)
        atom.push_back(NestedComponent(
            level[static_cast<std::size_t>(k)]
                 [static_cast<std::size_t>(anc[static_cast<std::size_t>(t - 1)][li])]));
    atoms.push_back(std::move(atom));
    weights.push_back(x.absolute_prob(leaves[li]));
  }
  return canonicalize(NestedLaw(std::move(atoms), std::move(weights)));
}

// ---------------------------------------------------------------------------

bool trees_isomorphic(const ProcessTree& a, const ProcessTree& b, double tol) {
  if (a.horizon() != b.horizon() || a.dim() != b.dim() || a.size() != b.size()) return false;
  auto child_order = [](const ProcessTree& x) {
    return [&x](int lhs, int rhs) {
      const TreeNode& u = x.node(lhs);
      const TreeNode& v = x.node(rhs);
      if (u.value != v.value) return lex_less(u.value, v.value);
      return u.prob < v.prob;
    };
  };
  std::function<bool(int, int)> match = [&](int u, int v) {
    const TreeNode& nu = a.node(u);
    const TreeNode& nv = b.node(v);
    if (!nu.value.empty() && euclidean(nu.value, nv.value) > tol) return false;
    if (nu.children.size() != nv.children.size()) return false;
    std::vector<int> cu = nu.children, cv = nv.children;
    std::sort(cu.begin(), cu.end(), child_order(a));
    std::sort(cv.begin(), cv.end(), child_order(b));
    for (std::size_t i = 0; i < cu.size(); ++i) {
      if (std::abs(a.node(cu[i]).prob - b.node(cv[i]).prob) > tol) return false;
      if (!match(cu[i], cv[i])) return false;
    }
    return true;
  };
  return match(ProcessTree::root_id, ProcessTree::root_id);
}

}  // namespace aot
