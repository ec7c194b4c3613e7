#include "gata2floor/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "gata2floor/union_find.hpp"

namespace g2f {

namespace {

int round_count(double prediction) {
  return std::max(1, static_cast<int>(std::llround(prediction)));
}

std::vector<double> normalized_y_centers(const FacadeRecord& record) {
  std::vector<double> ys;
  ys.reserve(record.boxes.size());
  for (const DetectionBox& b : record.boxes) {
    DetectionBox c = clamp_box(b, record.width, record.height);
    ys.push_back((c.y_min + c.h / 2.0) / static_cast<double>(record.height));
  }
  return ys;
}

}  // namespace

MetricAggregates metric_suite(const std::vector<double>& predictions,
                              const std::vector<int>& ground_truths, bool weighted_f1) {
  if (predictions.size() != ground_truths.size())
    throw std::invalid_argument("metric_suite: prediction/ground-truth length mismatch");
  if (predictions.empty()) throw std::invalid_argument("metric_suite: no pairs");

  std::size_t n = predictions.size();
  MetricAggregates agg;
  std::map<int, std::size_t> support;  // gt class -> count
  std::map<int, std::size_t> tp, fp, fn;
  for (std::size_t i = 0; i < n; ++i) {
    int pred = round_count(predictions[i]);
    int gt = ground_truths[i];
    agg.mae += std::fabs(static_cast<double>(pred - gt));
    agg.accuracy += pred == gt ? 1.0 : 0.0;
    agg.off_by_one += std::abs(pred - gt) <= 1 ? 1.0 : 0.0;
    ++support[gt];
    if (pred == gt) {
      ++tp[gt];
    } else {
      ++fp[pred];
      ++fn[gt];
    }
  }
  agg.mae /= static_cast<double>(n);
  agg.accuracy /= static_cast<double>(n);
  agg.off_by_one /= static_cast<double>(n);

  double f1_sum = 0.0;
  double weight_sum = 0.0;
  for (const auto& [cls, count] : support) {
    double tp_c = static_cast<double>(tp.count(cls) ? tp[cls] : 0);
    double fp_c = static_cast<double>(fp.count(cls) ? fp[cls] : 0);
    double fn_c = static_cast<double>(fn.count(cls) ? fn[cls] : 0);
    double precision = tp_c + fp_c > 0.0 ? tp_c / (tp_c + fp_c) : 0.0;
    double recall = tp_c + fn_c > 0.0 ? tp_c / (tp_c + fn_c) : 0.0;
    double f1 = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    double w = weighted_f1 ? static_cast<double>(count) : 1.0;
    f1_sum += w * f1;
    weight_sum += w;
  }
  agg.macro_f1 = weight_sum > 0.0 ? f1_sum / weight_sum : 0.0;
  return agg;
}

int baseline_kde(const FacadeRecord& record, double bandwidth, double peak_floor) {
  if (record.boxes.empty()) throw std::invalid_argument("baseline_kde: facade has no boxes");
  if (bandwidth <= 0.0) throw std::invalid_argument("baseline_kde: bandwidth must be positive");
  std::vector<double> ys = normalized_y_centers(record);

  constexpr int kGrid = 512;
  std::vector<double> density(kGrid, 0.0);
  double inv_two_bw2 = 1.0 / (2.0 * bandwidth * bandwidth);
  for (int g = 0; g < kGrid; ++g) {
    double x = static_cast<double>(g) / static_cast<double>(kGrid - 1);
    double acc = 0.0;
    for (double y : ys) {
      double d = x - y;
      acc += std::exp(-d * d * inv_two_bw2);
    }
    density[static_cast<std::size_t>(g)] = acc;
  }

  double peak = *std::max_element(density.begin(), density.end());
  if (peak <= 0.0) return 1;
  double floor = peak_floor * peak;

  // local maxima; plateaus count once via the strict left edge
  int count = 0;
  for (int g = 0; g < kGrid; ++g) {
    double v = density[static_cast<std::size_t>(g)];
    if (v < floor) continue;
    double left = g > 0 ? density[static_cast<std::size_t>(g - 1)] : -std::numeric_limits<double>::infinity();
    double right = g + 1 < kGrid ? density[static_cast<std::size_t>(g + 1)] : -std::numeric_limits<double>::infinity();
    if (v > left && v >= right) ++count;
  }
  return std::max(1, count);
}

int baseline_agglomerative(const FacadeRecord& record, std::optional<double> threshold,
                           const GraphBuildOptions& opts) {
  if (record.boxes.empty()) throw std::invalid_argument("baseline_agglomerative: facade has no boxes");
  std::vector<double> ys = normalized_y_centers(record);
  double cutoff = threshold ? *threshold : compute_tau(ys, opts.k, opts.alpha, opts.pairwise_gaps);

  std::vector<std::vector<double>> clusters;
  clusters.reserve(ys.size());
  for (double y : ys) clusters.push_back({y});

  // single linkage: repeatedly merge the closest pair while it stays within
  // the cutoff
  while (clusters.size() > 1) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < clusters.size(); ++i) {
      for (std::size_t j = i + 1; j < clusters.size(); ++j) {
        double link = std::numeric_limits<double>::infinity();
        for (double a : clusters[i])
          for (double b : clusters[j]) link = std::min(link, std::fabs(a - b));
        if (link < best) {
          best = link;
          bi = i;
          bj = j;
        }
      }
    }
    if (best > cutoff) break;
    clusters[bi].insert(clusters[bi].end(), clusters[bj].begin(), clusters[bj].end());
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bj));
  }
  return static_cast<int>(clusters.size());
}

int baseline_intersection(const FacadeRecord& record, double overlap_threshold) {
  if (record.boxes.empty()) throw std::invalid_argument("baseline_intersection: facade has no boxes");
  std::size_t n = record.boxes.size();
  std::vector<std::pair<double, double>> spans;
  spans.reserve(n);
  for (const DetectionBox& b : record.boxes) {
    DetectionBox c = clamp_box(b, record.width, record.height);
    spans.emplace_back(c.y_min, c.y_min + c.h);
  }
  UnionFind uf(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double inter = std::min(spans[i].second, spans[j].second) -
                     std::max(spans[i].first, spans[j].first);
      double shorter = std::min(spans[i].second - spans[i].first, spans[j].second - spans[j].first);
      if (shorter > 0.0 && inter / shorter >= overlap_threshold) uf.unite(i, j);
    }
  }
  return static_cast<int>(uf.count_roots());
}

std::vector<FloorBand> floor_bands_from_labels(const FacadeRecord& record) {
  std::map<int, FloorBand> bands;
  for (const DetectionBox& b : record.boxes) {
    if (!b.floor_id) continue;
    auto [it, inserted] = bands.try_emplace(*b.floor_id, FloorBand{b.y_min, b.y_min + b.h});
    if (!inserted) {
      it->second.y_low = std::min(it->second.y_low, b.y_min);
      it->second.y_high = std::max(it->second.y_high, b.y_min + b.h);
    }
  }
  std::vector<FloorBand> out;
  out.reserve(bands.size());
  // map iteration is ascending by floor id, i.e. bottom-up
  for (const auto& [id, band] : bands) out.push_back(band);
  return out;
}

double coverage_rate(const std::vector<DetectionBox>& proposals, const std::vector<FloorBand>& bands) {
  if (bands.empty()) throw std::invalid_argument("coverage_rate: no ground-truth floor bands");
  std::size_t hit = 0;
  for (const FloorBand& band : bands) {
    bool any = false;
    for (const DetectionBox& p : proposals) {
      double cy = p.y_min + p.h / 2.0;
      if (cy >= band.y_low && cy <= band.y_high) {
        any = true;
        break;
      }
    }
    hit += any ? 1 : 0;
  }
  return static_cast<double>(hit) / static_cast<double>(bands.size());
}

}  // namespace g2f
