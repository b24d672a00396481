// Filtered processes with finitely many scenarios, represented as rooted
// trees: the time-t atoms of the filtration are exactly the time-t nodes.
// The root sits at time 0 and carries no value; every leaf sits at the
// horizon; transition probabilities are strictly positive.
#pragma once

#include <limits>
#include <utility>
#include <vector>

#include "aot/measures.hpp"
#include "aot/rational.hpp"

namespace aot {

struct TreeNode {
  int time = 0;
  int parent = -1;
  double prob = 1.0;  // transition probability from the parent (1 at the root)
  Vec value;          // empty at the root, size d elsewhere
  std::vector<int> children;
};

class ProcessTree {
 public:
  int horizon() const { return n_; }
  int dim() const { return d_; }
  std::size_t size() const { return nodes_.size(); }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const TreeNode& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
  static constexpr int root_id = 0;

  const std::vector<int>& at_time(int t) const { return by_time_[static_cast<std::size_t>(t)]; }
  const std::vector<int>& leaves() const { return by_time_[static_cast<std::size_t>(n_)]; }

  /// Unconditional probability of the node's cylinder set.
  double absolute_prob(int id) const { return abs_prob_[static_cast<std::size_t>(id)]; }

  /// Ancestor of `id` at time t (id itself if node(id).time == t).
  int ancestor_at(int id, int t) const {
    while (nodes_[static_cast<std::size_t>(id)].time > t)
      id = nodes_[static_cast<std::size_t>(id)].parent;
    return id;
  }

  /// Values along the path from time 1 down to the node, flattened to R^{d*t}.
  Vec history(int id) const;

  /// Full path values for a leaf, flattened to R^{d*N}.
  Vec path_values(int leaf) const { return history(leaf); }

 private:
  friend class TreeBuilder;
  int n_ = 0, d_ = 0;
  std::vector<TreeNode> nodes_;
  std::vector<std::vector<int>> by_time_;
  Vec abs_prob_;
};

/// Incremental construction; `build` validates the tree invariants.
class TreeBuilder {
 public:
  TreeBuilder(int horizon, int dim);
  /// Appends a child of `parent` (root is node 0); returns the new node id.
  int add(int parent, Vec value, double prob);
  ProcessTree build() const;

 private:
  int n_, d_;
  std::vector<TreeNode> nodes_;
};

/// Rebuild a tree from weighted full paths (flattened to R^{d*N}): paths
/// sharing a value prefix share a node.  Weights must sum to 1; conditional
/// probabilities are recovered by division.
ProcessTree tree_from_paths(const std::vector<std::pair<Vec, double>>& paths, int horizon,
                            int dim);

/// One-period process carrying a plain law: one node per atom.
ProcessTree measure_tree(const DiscreteMeasure& mu);

// Named example processes used across the test-suite and docs.  All are
// binary bets over two periods with values in {-1, 0, +1} (or +-1/k):
//   plain_bet       - nothing is revealed at time 1, the coin decides at time 2
//   informed_bet    - the time-1 branch already determines the outcome
//   duplicated_bet  - plain bet with the time-1 node split in two
//   leaky_bet(k)    - the time-1 value leaks the outcome at scale 1/k
ProcessTree plain_bet();
ProcessTree informed_bet();
ProcessTree duplicated_bet();
ProcessTree leaky_bet(int k);

inline constexpr int infinite_order = std::numeric_limits<int>::max();

/// Law of the path on (R^d)^N: each leaf contributes its product probability;
/// equal paths are merged (canonical form).
DiscreteMeasure path_law(const ProcessTree& x);

/// Exact path law: (flattened path, rational probability), lexicographically
/// sorted, exact merge.  Probabilities are exact products of the stored
/// doubles.
std::vector<std::pair<Vec, Rational>> path_law_exact(const ProcessTree& x);

/// True iff the one-step conditional laws at every time depend only on the
/// last n values (full history for n = infinite_order): whenever two time-t
/// nodes' value windows agree within tol, their child laws agree within tol
/// in 1-Wasserstein distance.
bool is_n_markov(const ProcessTree& x, int n, double tol = 1e-9);

struct MarkovStatistic {
  int t = 0;
  int n = 0;
  NestedLaw law;  // depth 1: atoms are (value window, one-step conditional law)
};

/// Law of (X_{max(1,t-n+1):t}, L(X_{t+1} | time-t node)) over time-t nodes.
MarkovStatistic markov_statistic(const ProcessTree& x, int n, int t);

/// Law of (X_{1:t}, L(X_{t+1:N} | time-t node)) over time-t nodes: the full
/// history paired with the conditional law of the remaining path segment.
NestedLaw hellwig_statistic(const ProcessTree& x, int t);

struct TreePartition {
  std::vector<int> class_of;  // per node id; classes never span times
  int classes = 0;
  int rounds = 0;  // refinement rounds until the fixed point
};

/// Coarsest partition of nodes such that members share a time, agree in value
/// within tol, and have identical child distributions over classes (within
/// tol).  Computed by partition refinement from the (time, value) clustering.
TreePartition hk_partition(const ProcessTree& x, double tol = 1e-9);

/// Minimal tree with one node per reachable class-path of hk_partition; the
/// path law is preserved and the quotient is idempotent.
ProcessTree hk_quotient(const ProcessTree& x, double tol = 1e-9);

/// Canonical process carrying the natural filtration of its own path law:
/// nodes are the distinct value-histories of x.
ProcessTree plainify(const ProcessTree& x);

/// Joint law of the iterated prediction processes up to rank r, canonicalized.
/// Rank 0 is the path law; rank k >= 1 pairs each path with, for every time t,
/// the conditional law of the rank-(k-1) object given the time-t node.  Atom
/// layout: one flattened path vector followed by r*N law components (rank
/// major, time minor).
NestedLaw prediction_process(const ProcessTree& x, int r);

/// Per-node conditional laws of the rank-(k-1) prediction object: entry [id]
/// is the law given node id (rank 1 conditions the path itself).  These are
/// the measure-valued martingales backing prediction_process: the law at a
/// node is the probability-weighted mixture of the laws at its children.
std::vector<NestedLawPtr> prediction_laws(const ProcessTree& x, int rank);

/// Structural equality up to child reordering: equal horizons and dimensions,
/// values within tol, transition probabilities within tol.  Children are
/// matched after canonical (value, probability) sorting, so the check is
/// reliable on quotient/canonical forms with well-separated values.
bool trees_isomorphic(const ProcessTree& a, const ProcessTree& b, double tol = 1e-9);

}  // namespace aot
