#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "ncdkit/matrix.hpp"

namespace ncdkit {

struct TreeNode {
  std::string label;         // leaves only
  int parent = -1;
  double edge_length = 0.0;  // length of the edge to the parent
  std::vector<int> children;

  bool is_leaf() const { return children.empty(); }
};

// Classification tree over the matrix labels. Leaf node ids 0..n-1 map to
// matrix label indices; internal nodes follow in creation order. For NJ the
// "root" is just the serialization anchor of an unrooted tree (a
// trifurcation); for UPGMA it is a real root.
struct DendroTree {
  std::vector<TreeNode> nodes;
  int root = -1;
  bool rooted = false;
  std::uint32_t clamped_negative_branches = 0;

  std::size_t leaf_count() const;
};

// Neighbor joining (unrooted). Needs n >= 3. Q-criterion ties break on the
// smallest (i, j) node-index pair, so the build is deterministic.
DendroTree neighbor_joining(const DistanceMatrix& m);

// UPGMA (rooted, ultrametric; merge at height d/2, average linkage, same
// tie-break rule). Needs n >= 2.
DendroTree upgma(const DistanceMatrix& m);

// Newick with 6-decimal branch lengths and a trailing semicolon; children
// are ordered by the smallest leaf index in their subtree, so equal trees
// serialize byte-identically.
std::string to_newick(const DendroTree& t);

// DOT (undirected graph, quoted leaf labels, edge length labels).
std::string to_dot(const DendroTree& t);

enum class TreeFormat { newick, dot };
void export_tree(const DendroTree& t, TreeFormat format,
                 const std::string& path);

// True iff the labeled leaves span one side of some edge (equivalently:
// there is an edge whose removal separates exactly that leaf set), or the
// set is a single leaf or all leaves. Throws UnknownLabelError.
bool subtree_check(const DendroTree& t, const std::set<std::string>& labels);

}  // namespace ncdkit
