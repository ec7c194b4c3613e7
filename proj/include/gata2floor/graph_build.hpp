#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "gata2floor/facade_data.hpp"

namespace g2f {

struct GraphEdge {
  std::size_t i = 0;
  std::size_t j = 0;  // i < j
  EdgeFeatures features{};
};

// Vertical-aware facade graph: nodes connect when their normalized vertical
// center distance is within the per-facade threshold tau.
struct FacadeGraph {
  std::string facade_id;
  std::size_t num_nodes = 0;
  std::vector<NodeFeatures> node_features;
  std::vector<double> y_centers_norm;
  std::vector<GraphEdge> edges;
  std::vector<std::uint8_t> adjacency;  // num_nodes^2 row-major, zero diagonal
  double tau_vertical = 0.05;
  std::array<double, 3> global_vector{0.05, 0.0, 0.0};  // [tau, density, y dispersion]
  std::size_t clamped_boxes = 0;

  bool connected(std::size_t i, std::size_t j) const { return adjacency[i * num_nodes + j] != 0; }
};

struct PseudoLabels {
  int pseudo_count = 0;
  std::vector<int> floor_ids;        // per node, bottom floor = 0
  std::vector<int> component_order;  // raw component index -> floor slot
};

struct GraphBuildOptions {
  int k = 3;
  double alpha = 0.5;
  bool pairwise_gaps = false;  // alternate reading of the gap statistic
};

constexpr double kTauFallback = 0.05;

// alpha times the mean of the k largest consecutive gaps of the sorted
// normalized y-centers; falls back to 0.05 for fewer than two nodes or when
// every gap is zero. `pairwise` switches the gap set to all pairwise
// distances.
double compute_tau(const std::vector<double>& y_centers_norm, int k, double alpha,
                   bool pairwise = false);

FacadeGraph build_graph(const FacadeRecord& record, const GraphBuildOptions& opts = {});

PseudoLabels pseudo_labels(const FacadeGraph& graph);

// Independent breadth-first component counter, kept free of the union-find
// path so the two can cross-check each other.
int components_bfs_oracle(const FacadeGraph& graph);

}  // namespace g2f
