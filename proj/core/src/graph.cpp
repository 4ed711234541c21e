#include "gde/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace gde {

Graph::Graph(int n_, Matrix adj) : n(n_), adjacency(std::move(adj)) {
  validate();
}

void Graph::add_edge(int i, int j) {
  if (i < 0 || j < 0 || i >= n || j >= n) throw std::invalid_argument("add_edge: node out of range");
  if (i == j) return;
  adjacency(i, j) = 1.0;
  adjacency(j, i) = 1.0;
}

std::vector<int> Graph::neighbors(int v) const {
  std::vector<int> out;
  for (int u = 0; u < n; ++u)
    if (adjacency(v, u) != 0.0) out.push_back(u);
  return out;
}

int Graph::edge_count() const {
  int c = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (adjacency(i, j) != 0.0) ++c;
  return c;
}

void Graph::validate() const {
  if (adjacency.rows() != n || adjacency.cols() != n) {
    throw std::invalid_argument("Graph: adjacency shape " + adjacency.shape_str() +
                                " does not match n=" + std::to_string(n));
  }
  for (int i = 0; i < n; ++i) {
    if (adjacency(i, i) != 0.0) throw std::invalid_argument("Graph: nonzero diagonal at node " +
                                                            std::to_string(i));
    for (int j = 0; j < n; ++j) {
      const double v = adjacency(i, j);
      if (v != 0.0 && v != 1.0) throw std::invalid_argument("Graph: adjacency entry not in {0,1}");
      if (adjacency(i, j) != adjacency(j, i)) {
        throw std::invalid_argument("Graph: adjacency not symmetric at (" + std::to_string(i) +
                                    "," + std::to_string(j) + ")");
      }
    }
  }
}

Matrix normalized_laplacian(const Graph& g) {
  const int n = g.n;
  Matrix a_hat = g.adjacency;
  for (int i = 0; i < n; ++i) a_hat(i, i) += 1.0;  // self-loop guarantees positive degree
  std::vector<double> inv_sqrt_deg(n);
  for (int i = 0; i < n; ++i) {
    double d = 0.0;
    for (int j = 0; j < n; ++j) d += a_hat(i, j);
    inv_sqrt_deg[i] = 1.0 / std::sqrt(d);
  }
  Matrix l(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) l(i, j) = inv_sqrt_deg[i] * a_hat(i, j) * inv_sqrt_deg[j];
  return l;
}

namespace {
double euclidean(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("distance: point dimension mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return std::sqrt(s);
}
}  // namespace

Graph distance_threshold_adjacency(const std::vector<std::vector<double>>& points,
                                   const RadiusMode& mode) {
  if (points.size() < 2) throw std::invalid_argument("distance_threshold_adjacency: need >= 2 points");
  if (!(mode.r > 0.0)) throw std::invalid_argument("distance_threshold_adjacency: radius must be positive");
  const int n = static_cast<int>(points.size());
  Graph g(n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (2.0 * euclidean(points[i], points[j]) <= mode.r) g.add_edge(i, j);
  return g;
}

Graph distance_threshold_adjacency(const std::vector<std::vector<double>>& points,
                                   const PercentileMode& mode) {
  if (points.size() < 2) throw std::invalid_argument("distance_threshold_adjacency: need >= 2 points");
  if (!(mode.q > 0.0 && mode.q < 100.0)) {
    throw std::invalid_argument("distance_threshold_adjacency: percentile must lie in (0,100)");
  }
  const int n = static_cast<int>(points.size());
  std::vector<double> dists;
  dists.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) dists.push_back(euclidean(points[i], points[j]));
  std::sort(dists.begin(), dists.end());
  if (dists.back() == 0.0) {
    throw std::invalid_argument(
        "distance_threshold_adjacency: all points coincide, percentile threshold degenerate");
  }
  // nearest-rank percentile on the strictly-upper-triangle multiset
  const std::size_t rank =
      static_cast<std::size_t>(std::ceil(mode.q / 100.0 * static_cast<double>(dists.size())));
  const double tau = dists[std::max<std::size_t>(rank, 1) - 1];
  Graph g(n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (euclidean(points[i], points[j]) < tau) g.add_edge(i, j);
  return g;
}

void DynamicGraphStream::validate() const {
  if (timestamps.size() != features.size() || timestamps.size() != graphs.size()) {
    throw std::invalid_argument("DynamicGraphStream: field lengths disagree");
  }
  for (std::size_t i = 1; i < timestamps.size(); ++i) {
    if (!(timestamps[i] > timestamps[i - 1])) {
      throw std::invalid_argument("DynamicGraphStream: timestamps not strictly increasing at index " +
                                  std::to_string(i));
    }
  }
  if (!features.empty()) {
    const int n = features[0].rows();
    const int nx = features[0].cols();
    for (std::size_t i = 0; i < features.size(); ++i) {
      if (features[i].rows() != n || features[i].cols() != nx) {
        throw std::invalid_argument("DynamicGraphStream: feature shape varies at index " +
                                    std::to_string(i));
      }
      if (graphs[i].n != n) {
        throw std::invalid_argument("DynamicGraphStream: graph size varies at index " +
                                    std::to_string(i));
      }
    }
  }
}

HybridTimeDomain hybrid_time_domain(const std::vector<double>& timestamps) {
  if (timestamps.size() < 2) {
    throw std::invalid_argument("hybrid_time_domain: need at least two timestamps");
  }
  for (std::size_t i = 1; i < timestamps.size(); ++i) {
    if (!(timestamps[i] > timestamps[i - 1])) {
      throw std::invalid_argument("hybrid_time_domain: timestamps not strictly increasing at index " +
                                  std::to_string(i));
    }
  }
  HybridTimeDomain dom;
  for (std::size_t i = 0; i + 1 < timestamps.size(); ++i) {
    dom.intervals.push_back({timestamps[i], timestamps[i + 1], static_cast<int>(i + 1)});
  }
  return dom;
}

void save_edge_list(const Graph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_edge_list: cannot open " + path);
  for (int i = 0; i < g.n; ++i)
    for (int j = i + 1; j < g.n; ++j)
      if (g.adjacency(i, j) != 0.0) out << i << " " << j << "\n";
}

Graph load_edge_list(const std::string& path, int n) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_edge_list: cannot open " + path);
  Graph g(n);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    long i, j;
    if (!(ss >> i)) continue;  // blank line
    if (!(ss >> j)) {
      throw std::runtime_error("load_edge_list: " + path + ":" + std::to_string(lineno) +
                               ": expected two indices");
    }
    if (i < 0 || j < 0 || i >= n || j >= n) {
      throw std::runtime_error("load_edge_list: " + path + ":" + std::to_string(lineno) +
                               ": node index out of range");
    }
    if (i != j) g.add_edge(static_cast<int>(i), static_cast<int>(j));
  }
  return g;
}

}  // namespace gde
