#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace g2f {

enum class BoxCategory { kWindow, kDoor };

struct DetectionBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double w = 0.0;
  double h = 0.0;
  BoxCategory category = BoxCategory::kWindow;
  std::optional<int> floor_id;  // ground truth when available, bottom floor = 0
};

struct FacadeRecord {
  std::string facade_id;
  int width = 0;   // image width in pixels
  int height = 0;  // image height in pixels
  std::vector<DetectionBox> boxes;
  std::optional<int> floor_count;  // ground truth when available
};

// [n_c^x, n_c^y, n_w, n_h, ar, is_window]; first four normalized to [0,1],
// ar in raw pixel units
using NodeFeatures = std::array<double, 6>;

// [d^x_norm, d^y_norm, IoU, v_overlap]
using EdgeFeatures = std::array<double, 4>;

// Boxes reaching past the frame are clamped before any feature math;
// `clamped` reports whether that changed the box.
DetectionBox clamp_box(const DetectionBox& box, double image_w, double image_h, bool* clamped = nullptr);

NodeFeatures node_features(const DetectionBox& box, double image_w, double image_h);
EdgeFeatures edge_features(const DetectionBox& a, const DetectionBox& b, double image_w, double image_h);

double box_iou(const DetectionBox& a, const DetectionBox& b);

std::vector<FacadeRecord> load_facades(const std::string& path);
void save_facades(const std::vector<FacadeRecord>& records, const std::string& path);
std::string facade_to_json_line(const FacadeRecord& record);

}  // namespace g2f
