#include "gata2floor/graph_build.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

#include "gata2floor/union_find.hpp"

namespace g2f {

double compute_tau(const std::vector<double>& y_centers_norm, int k, double alpha, bool pairwise) {
  if (y_centers_norm.empty()) throw std::invalid_argument("compute_tau: no y-centers");
  if (k < 1) throw std::invalid_argument("compute_tau: k must be >= 1");
  if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("compute_tau: alpha must lie in [0,1]");
  if (y_centers_norm.size() < 2) return kTauFallback;

  std::vector<double> gaps;
  if (pairwise) {
    for (std::size_t i = 0; i < y_centers_norm.size(); ++i)
      for (std::size_t j = i + 1; j < y_centers_norm.size(); ++j)
        gaps.push_back(std::fabs(y_centers_norm[i] - y_centers_norm[j]));
  } else {
    std::vector<double> sorted = y_centers_norm;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 1; i < sorted.size(); ++i) gaps.push_back(sorted[i] - sorted[i - 1]);
  }
  std::sort(gaps.begin(), gaps.end(), std::greater<double>());
  std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k), gaps.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < take; ++i) sum += gaps[i];
  double mean = sum / static_cast<double>(take);
  double tau = alpha * mean;
  return tau > 0.0 ? tau : kTauFallback;
}

FacadeGraph build_graph(const FacadeRecord& record, const GraphBuildOptions& opts) {
  if (record.width <= 0 || record.height <= 0)
    throw std::invalid_argument("build_graph: image dimensions must be positive");
  FacadeGraph g;
  g.facade_id = record.facade_id;
  g.num_nodes = record.boxes.size();
  if (g.num_nodes == 0) {
    g.tau_vertical = kTauFallback;
    g.global_vector = {kTauFallback, 0.0, 0.0};
    return g;
  }

  double W = record.width, H = record.height;
  std::vector<DetectionBox> clamped;
  clamped.reserve(g.num_nodes);
  for (const DetectionBox& box : record.boxes) {
    bool changed = false;
    clamped.push_back(clamp_box(box, W, H, &changed));
    if (changed) ++g.clamped_boxes;
  }

  double density = 0.0;
  for (const DetectionBox& box : clamped) {
    NodeFeatures f = node_features(box, W, H);
    g.node_features.push_back(f);
    g.y_centers_norm.push_back(f[1]);
    density += f[2] * f[3];
  }

  g.tau_vertical = compute_tau(g.y_centers_norm, opts.k, opts.alpha, opts.pairwise_gaps);

  double mean_y = 0.0;
  for (double y : g.y_centers_norm) mean_y += y;
  mean_y /= static_cast<double>(g.num_nodes);
  double var_y = 0.0;
  for (double y : g.y_centers_norm) var_y += (y - mean_y) * (y - mean_y);
  var_y /= static_cast<double>(g.num_nodes);
  g.global_vector = {g.tau_vertical, density, std::sqrt(var_y)};

  g.adjacency.assign(g.num_nodes * g.num_nodes, 0);
  for (std::size_t i = 0; i < g.num_nodes; ++i) {
    for (std::size_t j = i + 1; j < g.num_nodes; ++j) {
      double dy = std::fabs(g.y_centers_norm[i] - g.y_centers_norm[j]);
      if (dy <= g.tau_vertical) {
        g.adjacency[i * g.num_nodes + j] = 1;
        g.adjacency[j * g.num_nodes + i] = 1;
        g.edges.push_back({i, j, edge_features(clamped[i], clamped[j], W, H)});
      }
    }
  }
  return g;
}

PseudoLabels pseudo_labels(const FacadeGraph& graph) {
  PseudoLabels labels;
  std::size_t n = graph.num_nodes;
  if (n == 0) return labels;

  UnionFind uf(n);
  for (const GraphEdge& e : graph.edges) uf.unite(e.i, e.j);

  // raw component ids in order of first appearance
  std::vector<int> raw_id(n, -1);
  std::vector<double> sum_y;
  std::vector<std::size_t> count;
  std::vector<int> root_to_raw(n, -1);
  for (std::size_t v = 0; v < n; ++v) {
    std::size_t root = uf.find(v);
    if (root_to_raw[root] < 0) {
      root_to_raw[root] = static_cast<int>(sum_y.size());
      sum_y.push_back(0.0);
      count.push_back(0);
    }
    raw_id[v] = root_to_raw[root];
    sum_y[static_cast<std::size_t>(raw_id[v])] += graph.y_centers_norm[v];
    ++count[static_cast<std::size_t>(raw_id[v])];
  }

  std::size_t m = sum_y.size();
  // sort components by mean y-center descending: image bottom = floor slot 0
  std::vector<int> order(m);
  for (std::size_t c = 0; c < m; ++c) order[c] = static_cast<int>(c);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    double ya = sum_y[static_cast<std::size_t>(a)] / static_cast<double>(count[static_cast<std::size_t>(a)]);
    double yb = sum_y[static_cast<std::size_t>(b)] / static_cast<double>(count[static_cast<std::size_t>(b)]);
    if (ya != yb) return ya > yb;
    return a < b;
  });

  labels.pseudo_count = static_cast<int>(m);
  labels.component_order.assign(m, -1);
  for (std::size_t slot = 0; slot < m; ++slot)
    labels.component_order[static_cast<std::size_t>(order[slot])] = static_cast<int>(slot);
  labels.floor_ids.resize(n);
  for (std::size_t v = 0; v < n; ++v)
    labels.floor_ids[v] = labels.component_order[static_cast<std::size_t>(raw_id[v])];
  return labels;
}

int components_bfs_oracle(const FacadeGraph& graph) {
  std::size_t n = graph.num_nodes;
  std::vector<char> visited(n, 0);
  int components = 0;
  std::deque<std::size_t> queue;
  for (std::size_t start = 0; start < n; ++start) {
    if (visited[start]) continue;
    ++components;
    visited[start] = 1;
    queue.push_back(start);
    while (!queue.empty()) {
      std::size_t v = queue.front();
      queue.pop_front();
      for (std::size_t u = 0; u < n; ++u) {
        if (!visited[u] && graph.adjacency[v * n + u]) {
          visited[u] = 1;
          queue.push_back(u);
        }
      }
    }
  }
  return components;
}

}  // namespace g2f
