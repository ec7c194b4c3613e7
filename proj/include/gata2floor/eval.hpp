#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gata2floor/facade_data.hpp"
#include "gata2floor/graph_build.hpp"

namespace g2f {

struct FacadeEvalRow {
  std::string facade_id;
  double predicted = 0.0;
  int rounded = 0;
  int ground_truth = 0;
  double confidence = 0.0;
};

struct MetricAggregates {
  double mae = 0.0;        // on rounded counts
  double accuracy = 0.0;   // exact match
  double macro_f1 = 0.0;   // over floor-count classes observed in ground truth
  double off_by_one = 0.0;  // |error| <= 1
};

MetricAggregates metric_suite(const std::vector<double>& predictions,
                              const std::vector<int>& ground_truths, bool weighted_f1 = false);

// Peak count of a Gaussian kernel density over normalized y-centers on a
// 512-point grid; peaks below 5% of the global maximum are ignored.
int baseline_kde(const FacadeRecord& record, double bandwidth = 0.02, double peak_floor = 0.05);

// Single-linkage agglomeration on normalized y-centers; merging stops once
// the smallest inter-cluster gap exceeds the threshold (default: the
// facade's tau).
int baseline_agglomerative(const FacadeRecord& record, std::optional<double> threshold = {},
                           const GraphBuildOptions& opts = {});

// Union-find over pairs whose vertical interval overlap ratio (intersection
// over the shorter interval) reaches the threshold.
int baseline_intersection(const FacadeRecord& record, double overlap_threshold = 0.5);

struct FloorBand {
  double y_low = 0.0;   // pixels, top edge of the band
  double y_high = 0.0;  // pixels, bottom edge
};

// [min y_min, max y_min+h] per labeled floor, sorted bottom-up
std::vector<FloorBand> floor_bands_from_labels(const FacadeRecord& record);

// Fraction of ground-truth floor bands holding at least one proposal center.
double coverage_rate(const std::vector<DetectionBox>& proposals, const std::vector<FloorBand>& bands);

}  // namespace g2f
