#include "ncdkit/cluster.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>

#include "ncdkit/errors.hpp"

namespace ncdkit {

namespace {

double clamp_branch(double v, std::uint32_t* clamped) {
  if (v < 0.0) {
    ++*clamped;
    return 0.0;
  }
  return v;
}

std::string format_len(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

// smallest leaf index contained in each node's subtree; the child ordering
// key for deterministic serialization
std::vector<int> min_leaf_below(const DendroTree& t) {
  std::vector<int> m(t.nodes.size(), std::numeric_limits<int>::max());
  std::vector<int> order;
  order.reserve(t.nodes.size());
  std::vector<int> stack{t.root};
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    order.push_back(u);
    for (int c : t.nodes[static_cast<std::size_t>(u)].children)
      stack.push_back(c);
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const auto u = static_cast<std::size_t>(*it);
    if (t.nodes[u].is_leaf()) {
      m[u] = *it;
    } else {
      for (int c : t.nodes[u].children)
        m[u] = std::min(m[u], m[static_cast<std::size_t>(c)]);
    }
  }
  return m;
}

void append_newick(const DendroTree& t, const std::vector<int>& min_leaf,
                   int node, bool is_root, std::string& out) {
  const auto& n = t.nodes[static_cast<std::size_t>(node)];
  if (!n.is_leaf()) {
    std::vector<int> kids = n.children;
    std::sort(kids.begin(), kids.end(), [&](int a, int b) {
      return min_leaf[static_cast<std::size_t>(a)] <
             min_leaf[static_cast<std::size_t>(b)];
    });
    out += '(';
    for (std::size_t i = 0; i < kids.size(); ++i) {
      if (i) out += ',';
      append_newick(t, min_leaf, kids[i], false, out);
    }
    out += ')';
  } else {
    out += n.label;
  }
  if (!is_root) {
    out += ':';
    out += format_len(n.edge_length);
  }
}

}  // namespace

std::size_t DendroTree::leaf_count() const {
  std::size_t c = 0;
  for (const auto& n : nodes)
    if (n.is_leaf()) ++c;
  return c;
}

DendroTree neighbor_joining(const DistanceMatrix& m) {
  const std::size_t n = m.size();
  if (n < 3) throw TooFewLeavesError("neighbor joining needs >= 3 leaves");

  DendroTree t;
  const std::size_t total_nodes = 2 * n - 2;
  t.nodes.resize(total_nodes);
  for (std::size_t i = 0; i < n; ++i) t.nodes[i].label = m.labels[i];

  // working distances over node ids; grows as internal nodes appear
  std::vector<std::vector<double>> d(total_nodes,
                                     std::vector<double>(total_nodes, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) d[i][j] = m.values[i][j];

  std::vector<int> active(n);
  for (std::size_t i = 0; i < n; ++i) active[static_cast<std::size_t>(i)] = static_cast<int>(i);
  int next_id = static_cast<int>(n);

  while (active.size() > 3) {
    const auto msz = static_cast<double>(active.size());
    std::vector<double> r(active.size(), 0.0);
    for (std::size_t a = 0; a < active.size(); ++a)
      for (std::size_t b = 0; b < active.size(); ++b)
        if (a != b)
          r[a] += d[static_cast<std::size_t>(active[a])]
                   [static_cast<std::size_t>(active[b])];

    // arg min of Q; pairs scanned in ascending (i, j) node order, strict
    // improvement only, which is exactly the smallest-pair tie-break
    double best_q = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 1;
    for (std::size_t a = 0; a < active.size(); ++a) {
      for (std::size_t b = a + 1; b < active.size(); ++b) {
        const double q =
            (msz - 2.0) * d[static_cast<std::size_t>(active[a])]
                           [static_cast<std::size_t>(active[b])] -
            r[a] - r[b];
        if (q < best_q) {
          best_q = q;
          bi = a;
          bj = b;
        }
      }
    }

    const int i = active[bi];
    const int j = active[bj];
    const double dij = d[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    const int u = next_id++;

    double li = 0.5 * dij + (r[bi] - r[bj]) / (2.0 * (msz - 2.0));
    double lj = dij - li;
    li = clamp_branch(li, &t.clamped_negative_branches);
    lj = clamp_branch(lj, &t.clamped_negative_branches);

    t.nodes[static_cast<std::size_t>(i)].parent = u;
    t.nodes[static_cast<std::size_t>(i)].edge_length = li;
    t.nodes[static_cast<std::size_t>(j)].parent = u;
    t.nodes[static_cast<std::size_t>(j)].edge_length = lj;
    t.nodes[static_cast<std::size_t>(u)].children = {i, j};

    for (int k : active) {
      if (k == i || k == j) continue;
      const auto ku = static_cast<std::size_t>(k);
      const double v = 0.5 * (d[static_cast<std::size_t>(i)][ku] +
                              d[static_cast<std::size_t>(j)][ku] - dij);
      d[static_cast<std::size_t>(u)][ku] = v;
      d[ku][static_cast<std::size_t>(u)] = v;
    }

    std::vector<int> next_active;
    next_active.reserve(active.size() - 1);
    for (int k : active)
      if (k != i && k != j) next_active.push_back(k);
    next_active.push_back(u);
    std::sort(next_active.begin(), next_active.end());
    active = std::move(next_active);
  }

  // connect the last three through an unrooted center (the closed 3-leaf
  // form): l_a = (d_ab + d_ac - d_bc) / 2, cyclically
  const int a = active[0], b = active[1], c = active[2];
  const double dab = d[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
  const double dac = d[static_cast<std::size_t>(a)][static_cast<std::size_t>(c)];
  const double dbc = d[static_cast<std::size_t>(b)][static_cast<std::size_t>(c)];
  const int center = next_id++;
  t.nodes[static_cast<std::size_t>(center)].children = {a, b, c};
  struct Arm { int node; double len; };
  for (Arm arm : {Arm{a, 0.5 * (dab + dac - dbc)}, Arm{b, 0.5 * (dab + dbc - dac)},
                  Arm{c, 0.5 * (dac + dbc - dab)}}) {
    t.nodes[static_cast<std::size_t>(arm.node)].parent = center;
    t.nodes[static_cast<std::size_t>(arm.node)].edge_length =
        clamp_branch(arm.len, &t.clamped_negative_branches);
  }
  t.root = center;
  t.rooted = false;
  return t;
}

DendroTree upgma(const DistanceMatrix& m) {
  const std::size_t n = m.size();
  if (n < 2) throw TooFewLeavesError("upgma needs >= 2 leaves");

  DendroTree t;
  const std::size_t total_nodes = 2 * n - 1;
  t.nodes.resize(total_nodes);
  for (std::size_t i = 0; i < n; ++i) t.nodes[i].label = m.labels[i];

  std::vector<std::vector<double>> d(total_nodes,
                                     std::vector<double>(total_nodes, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) d[i][j] = m.values[i][j];

  std::vector<int> active(n);
  std::vector<std::size_t> csize(total_nodes, 1);
  std::vector<double> height(total_nodes, 0.0);
  for (std::size_t i = 0; i < n; ++i) active[i] = static_cast<int>(i);
  int next_id = static_cast<int>(n);

  while (active.size() > 1) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 1;
    for (std::size_t a = 0; a < active.size(); ++a)
      for (std::size_t b = a + 1; b < active.size(); ++b) {
        const double v = d[static_cast<std::size_t>(active[a])]
                          [static_cast<std::size_t>(active[b])];
        if (v < best) {
          best = v;
          bi = a;
          bj = b;
        }
      }

    const int i = active[bi];
    const int j = active[bj];
    const int u = next_id++;
    const auto iu = static_cast<std::size_t>(i);
    const auto ju = static_cast<std::size_t>(j);
    const auto uu = static_cast<std::size_t>(u);

    height[uu] = 0.5 * best;
    t.nodes[iu].parent = u;
    t.nodes[iu].edge_length =
        clamp_branch(height[uu] - height[iu], &t.clamped_negative_branches);
    t.nodes[ju].parent = u;
    t.nodes[ju].edge_length =
        clamp_branch(height[uu] - height[ju], &t.clamped_negative_branches);
    t.nodes[uu].children = {i, j};
    csize[uu] = csize[iu] + csize[ju];

    for (int k : active) {
      if (k == i || k == j) continue;
      const auto ku = static_cast<std::size_t>(k);
      const double v = (static_cast<double>(csize[iu]) * d[iu][ku] +
                        static_cast<double>(csize[ju]) * d[ju][ku]) /
                       static_cast<double>(csize[iu] + csize[ju]);
      d[uu][ku] = v;
      d[ku][uu] = v;
    }

    std::vector<int> next_active;
    next_active.reserve(active.size() - 1);
    for (int k : active)
      if (k != i && k != j) next_active.push_back(k);
    next_active.push_back(u);
    std::sort(next_active.begin(), next_active.end());
    active = std::move(next_active);
  }

  t.root = active[0];
  t.rooted = true;
  return t;
}

std::string to_newick(const DendroTree& t) {
  const auto min_leaf = min_leaf_below(t);
  std::string out;
  append_newick(t, min_leaf, t.root, true, out);
  out += ";\n";
  return out;
}

std::string to_dot(const DendroTree& t) {
  const auto min_leaf = min_leaf_below(t);
  std::string out = "graph dendro {\n";
  out += t.rooted ? "  // rooted (upgma)\n" : "  // unrooted (nj)\n";
  for (std::size_t i = 0; i < t.nodes.size(); ++i) {
    out += "  n" + std::to_string(i);
    if (t.nodes[i].is_leaf()) {
      std::string quoted;
      for (char c : t.nodes[i].label) {
        if (c == '"' || c == '\\') quoted += '\\';
        quoted += c;
      }
      out += " [label=\"" + quoted + "\"];\n";
    } else {
      out += " [shape=point];\n";
    }
  }
  // edges parent -> child, children in serialization order
  std::vector<int> stack{t.root};
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    std::vector<int> kids = t.nodes[static_cast<std::size_t>(u)].children;
    std::sort(kids.begin(), kids.end(), [&](int a, int b) {
      return min_leaf[static_cast<std::size_t>(a)] <
             min_leaf[static_cast<std::size_t>(b)];
    });
    for (int c : kids) {
      out += "  n" + std::to_string(u) + " -- n" + std::to_string(c) +
             " [label=\"" +
             format_len(t.nodes[static_cast<std::size_t>(c)].edge_length) +
             "\"];\n";
      stack.push_back(c);
    }
  }
  out += "}\n";
  return out;
}

void export_tree(const DendroTree& t, TreeFormat format,
                 const std::string& path) {
  write_file(path, format == TreeFormat::newick ? to_newick(t) : to_dot(t));
}

bool subtree_check(const DendroTree& t, const std::set<std::string>& labels) {
  if (labels.empty())
    throw ValidationError("subtree check needs a non-empty label set");

  std::set<std::string> all;
  for (const auto& n : t.nodes)
    if (n.is_leaf()) all.insert(n.label);
  for (const auto& l : labels)
    if (!all.count(l)) throw UnknownLabelError(l);

  if (labels.size() == 1 || labels.size() == all.size()) return true;

  // leaf set below each node; each non-root node's edge to its parent
  // splits the leaves into (below, rest)
  const std::size_t nn = t.nodes.size();
  std::vector<std::set<std::string>> below(nn);
  std::vector<int> order;
  std::vector<int> stack{t.root};
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    order.push_back(u);
    for (int c : t.nodes[static_cast<std::size_t>(u)].children)
      stack.push_back(c);
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const auto u = static_cast<std::size_t>(*it);
    if (t.nodes[u].is_leaf()) below[u].insert(t.nodes[u].label);
    for (int c : t.nodes[u].children) {
      const auto& cs = below[static_cast<std::size_t>(c)];
      below[u].insert(cs.begin(), cs.end());
    }
  }

  const std::size_t k = labels.size();
  for (std::size_t u = 0; u < nn; ++u) {
    if (static_cast<int>(u) == t.root) continue;
    if (below[u].size() == k && below[u] == labels) return true;
    if (below[u].size() == all.size() - k) {
      bool complement = true;
      for (const auto& l : labels)
        if (below[u].count(l)) {
          complement = false;
          break;
        }
      if (complement) return true;
    }
  }
  return false;
}

}  // namespace ncdkit
