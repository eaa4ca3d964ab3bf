#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "ncdkit/cluster.hpp"
#include "ncdkit/compressor.hpp"
#include "ncdkit/corpus.hpp"
#include "ncdkit/errors.hpp"
#include "ncdkit/matrix.hpp"
#include "test_util.hpp"
#include "tree_test_util.hpp"

using namespace ncdkit;
using treetest::make_matrix;

namespace {

// additive 4-leaf instance: leaf edges 1,1,2,2 around an internal edge 3
DistanceMatrix additive4() {
  return make_matrix({"A", "B", "C", "D"}, {{0, 2, 6, 6},
                                            {2, 0, 6, 6},
                                            {6, 6, 0, 4},
                                            {6, 6, 4, 0}});
}

// additive 5-leaf instance: cherries (A:1,B:2) and (C:1.5,D:2.5), joined
// through a path u-w (2), v-w (1), with E (3) on w
DistanceMatrix additive5() {
  return make_matrix({"A", "B", "C", "D", "E"},
                     {{0, 3, 5.5, 6.5, 6},
                      {3, 0, 6.5, 7.5, 7},
                      {5.5, 6.5, 0, 4, 5.5},
                      {6.5, 7.5, 4, 0, 6.5},
                      {6, 7, 5.5, 6.5, 0}});
}

DistanceMatrix golden_matrix() {
  return import_matrix(testutil::test_data_dir() + "/golden_matrix.tsv");
}

}  // namespace

TEST_CASE("three leaves solve in closed form") {
  const auto m = make_matrix({"A", "B", "C"}, {{0, 3, 4}, {3, 0, 5}, {4, 5, 0}});
  const auto t = neighbor_joining(m);
  CHECK_FALSE(t.rooted);
  CHECK(to_newick(t) == "(A:1.000000,B:2.000000,C:3.000000);\n");
  CHECK(t.clamped_negative_branches == 0);
}

TEST_CASE("nj recovers the generating 4-leaf tree") {
  const auto t = neighbor_joining(additive4());
  const auto splits = treetest::split_set(t);
  CHECK(splits == std::set<std::set<std::string>>{{"C", "D"}});

  const auto edges = treetest::leaf_edges(t);
  CHECK(edges.at("A") == doctest::Approx(1.0));
  CHECK(edges.at("B") == doctest::Approx(1.0));
  CHECK(edges.at("C") == doctest::Approx(2.0));
  CHECK(edges.at("D") == doctest::Approx(2.0));
  // the single internal edge carries the generating length 3
  for (const auto& n : t.nodes)
    if (!n.is_leaf() && n.parent >= 0)
      CHECK(n.edge_length == doctest::Approx(3.0));
}

TEST_CASE("nj recovers the generating 5-leaf tree") {
  const auto t = neighbor_joining(additive5());
  const auto splits = treetest::split_set(t);
  const std::set<std::set<std::string>> expected{{"C", "D"},
                                                 {"C", "D", "E"}};
  CHECK(splits == expected);
  const auto edges = treetest::leaf_edges(t);
  CHECK(edges.at("A") == doctest::Approx(1.0));
  CHECK(edges.at("B") == doctest::Approx(2.0));
  CHECK(edges.at("C") == doctest::Approx(1.5));
  CHECK(edges.at("D") == doctest::Approx(2.5));
  CHECK(edges.at("E") == doctest::Approx(3.0));
}

TEST_CASE("nj agrees with the exhaustive least-squares oracle") {
  for (const auto& m : {additive4(), additive5()}) {
    const auto nj_splits = treetest::split_set(neighbor_joining(m));
    const auto oracle_splits = treetest::best_topology_splits(m);
    CHECK(nj_splits == oracle_splits);
  }
}

TEST_CASE("nj recovers any randomly generated additive instance") {
  std::uint64_t state = 13;
  auto next = [&state] {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 4 + static_cast<int>(next() % 5);  // 4..8 leaves
    const auto topologies = treetest::enumerate_topologies(n);
    const auto& topo = topologies[next() % topologies.size()];
    std::vector<double> lengths(topo.edges.size());
    for (auto& l : lengths) l = 0.5 + static_cast<double>(next() % 1000) / 100.0;

    std::vector<std::string> labels;
    for (int i = 0; i < n; ++i) labels.push_back("L" + std::to_string(i));
    std::vector<std::vector<double>> values(
        static_cast<std::size_t>(n),
        std::vector<double>(static_cast<std::size_t>(n), 0.0));
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        double d = 0.0;
        for (int e : treetest::path_edges(topo, i, j))
          d += lengths[static_cast<std::size_t>(e)];
        values[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = d;
        values[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = d;
      }

    const auto m = make_matrix(labels, values);
    CHECK(treetest::split_set(neighbor_joining(m)) ==
          treetest::topology_splits(topo, labels));
  }
}

TEST_CASE("nj and upgma are label-permutation equivariant") {
  const auto m = additive5();
  // permute rows/columns to D,A,E,B,C
  const std::vector<std::size_t> perm{3, 0, 4, 1, 2};
  DistanceMatrix p;
  p.metric_id = m.metric_id;
  p.compressor_id = m.compressor_id;
  for (auto i : perm) p.labels.push_back(m.labels[i]);
  p.values.assign(5, std::vector<double>(5, 0.0));
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j)
      p.values[i][j] = m.values[perm[i]][perm[j]];

  CHECK(treetest::split_set(neighbor_joining(m)) ==
        treetest::split_set(neighbor_joining(p)));
  CHECK(treetest::leaf_edges(neighbor_joining(m)) ==
        treetest::leaf_edges(neighbor_joining(p)));
  CHECK(treetest::split_set(upgma(m)) == treetest::split_set(upgma(p)));
}

TEST_CASE("upgma reconstructs an ultrametric instance exactly") {
  const auto m = make_matrix({"A", "B", "C", "D"}, {{0, 2, 4, 6},
                                                    {2, 0, 4, 6},
                                                    {4, 4, 0, 6},
                                                    {6, 6, 6, 0}});
  const auto t = upgma(m);
  CHECK(t.rooted);
  CHECK(to_newick(t) ==
        "(((A:1.000000,B:1.000000):1.000000,C:2.000000):1.000000,"
        "D:3.000000);\n");
}

TEST_CASE("upgma of two leaves is a cherry at half the distance") {
  const auto m = make_matrix({"A", "B"}, {{0, 5}, {5, 0}});
  const auto t = upgma(m);
  CHECK(to_newick(t) == "(A:2.500000,B:2.500000);\n");
}

TEST_CASE("ties merge the smallest index pair first") {
  // d(A,B) == d(C,D); the (A,B) merge must win the tie
  const auto m = make_matrix({"A", "B", "C", "D"}, {{0, 1, 5, 5},
                                                    {1, 0, 5, 5},
                                                    {5, 5, 0, 1},
                                                    {5, 5, 1, 0}});
  const auto t = upgma(m);
  CHECK(to_newick(t) ==
        "((A:0.500000,B:0.500000):2.000000,(C:0.500000,D:0.500000):"
        "2.000000);\n");
}

TEST_CASE("too few leaves") {
  CHECK_THROWS_AS(neighbor_joining(make_matrix({"A", "B"}, {{0, 1}, {1, 0}})),
                  TooFewLeavesError);
  CHECK_THROWS_AS(upgma(make_matrix({"A"}, {{0}})), TooFewLeavesError);
}

TEST_CASE("negative branch estimates clamp to zero and are counted") {
  // violates the triangle inequality so one closed-form arm goes negative
  const auto m = make_matrix({"A", "B", "C"}, {{0, 10, 1}, {10, 0, 1}, {1, 1, 0}});
  const auto t = neighbor_joining(m);
  CHECK(t.clamped_negative_branches == 1);
  for (const auto& n : t.nodes) CHECK(n.edge_length >= 0.0);
  CHECK(to_newick(t) == "(A:5.000000,B:5.000000,C:0.000000);\n");
}

TEST_CASE("newick serialization is deterministic and parses back") {
  for (const auto& m : {additive4(), additive5(), golden_matrix()}) {
    const auto t = neighbor_joining(m);
    const auto text = to_newick(t);
    CHECK(to_newick(neighbor_joining(m)) == text);  // rebuild, same bytes
    const auto parsed = treetest::parse_newick(text);
    CHECK(treetest::same_topology(t, parsed));
    const auto el = treetest::leaf_edges(t);
    for (const auto& [label, len] : treetest::leaf_edges(parsed))
      CHECK(len == doctest::Approx(el.at(label)).epsilon(1e-6));
  }
}

TEST_CASE("dot export quotes leaf labels") {
  const auto t = neighbor_joining(additive4());
  const auto dot = to_dot(t);
  CHECK(dot.find("label=\"A\"") != std::string::npos);
  CHECK(dot.find("graph dendro {") != std::string::npos);
  CHECK(dot.find("--") != std::string::npos);
  CHECK(dot.find("// unrooted") != std::string::npos);
  CHECK(to_dot(upgma(additive4())).find("// rooted") != std::string::npos);
}

TEST_CASE("golden corpus tree groups the language families") {
  const auto t = neighbor_joining(golden_matrix());
  CHECK(subtree_check(t, {"de", "sv", "nl", "da"}));
  CHECK(subtree_check(t, {"es", "pt", "it", "fr"}));
  CHECK_FALSE(subtree_check(t, {"de", "es"}));
  CHECK(to_newick(t) ==
        read_file(testutil::test_data_dir() + "/golden_nj.nwk"));
  CHECK(to_newick(upgma(golden_matrix())) ==
        read_file(testutil::test_data_dir() + "/golden_upgma.nwk"));
}

TEST_CASE("subtree check fundamentals") {
  const auto t = neighbor_joining(additive4());
  CHECK(subtree_check(t, {"A", "B", "C", "D"}));  // full set
  CHECK(subtree_check(t, {"C"}));                 // single leaf
  CHECK(subtree_check(t, {"A", "B"}));            // one side of the split
  CHECK(subtree_check(t, {"C", "D"}));            // the other side
  CHECK_FALSE(subtree_check(t, {"A", "C"}));      // crossing pair
  CHECK_THROWS_AS(subtree_check(t, {"Z"}), UnknownLabelError);
  CHECK_THROWS_AS(subtree_check(t, {}), ValidationError);
}

TEST_CASE("subtree check works on rooted upgma trees too") {
  const auto t = upgma(additive4());
  CHECK(subtree_check(t, {"A", "B"}));
  CHECK_FALSE(subtree_check(t, {"B", "C"}));
}
