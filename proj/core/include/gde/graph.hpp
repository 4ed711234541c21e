#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gde/matrix.hpp"

namespace gde {

/// Undirected graph held as a dense 0/1 adjacency with zero diagonal.
/// Self-loops appear only inside Laplacian construction.
struct Graph {
  int n = 0;
  Matrix adjacency;  // n x n, entries in {0,1}, zero diagonal

  Graph() = default;
  explicit Graph(int n_) : n(n_), adjacency(n_, n_) {}
  Graph(int n_, Matrix adj);

  void add_edge(int i, int j);
  bool has_edge(int i, int j) const { return adjacency(i, j) != 0.0; }
  std::vector<int> neighbors(int v) const;
  int edge_count() const;  // undirected pairs
  /// Checks the 0/1, zero-diagonal and symmetry invariants.
  void validate() const;
};

/// Symmetric-normalized Laplacian with self-loops: D^-1/2 (A + I) D^-1/2.
Matrix normalized_laplacian(const Graph& g);

struct RadiusMode {
  double r;
};
struct PercentileMode {
  double q;  // in (0, 100)
};

/// Radius rule: edge(i,j) iff 2*||x_i - x_j|| <= r. Percentile rule:
/// nearest-rank q-th percentile tau of the pairwise distance multiset,
/// edge iff distance < tau.
Graph distance_threshold_adjacency(const std::vector<std::vector<double>>& points,
                                   const RadiusMode& mode);
Graph distance_threshold_adjacency(const std::vector<std::vector<double>>& points,
                                   const PercentileMode& mode);

/// Timestamped sequence of (features, graph) pairs sharing shapes.
struct DynamicGraphStream {
  std::vector<double> timestamps;  // strictly increasing
  std::vector<Matrix> features;    // X_t, n x nx
  std::vector<Graph> graphs;

  std::size_t size() const { return timestamps.size(); }
  void validate() const;
};

struct HybridInterval {
  double t_start;
  double t_end;
  int k;  // 1-based interval index
};

struct HybridTimeDomain {
  std::vector<HybridInterval> intervals;
};

HybridTimeDomain hybrid_time_domain(const std::vector<double>& timestamps);

/// Edge-list text format: one "i j" pair per line, 0-based. The loader
/// symmetrizes and deduplicates; self-loops are dropped.
void save_edge_list(const Graph& g, const std::string& path);
Graph load_edge_list(const std::string& path, int n);

}  // namespace gde
