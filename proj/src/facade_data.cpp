#include "gata2floor/facade_data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace g2f {

namespace {

using nlohmann::json;

[[noreturn]] void line_error(std::size_t line_no, const std::string& what) {
  throw std::runtime_error("facades line " + std::to_string(line_no) + ": " + what);
}

double require_number(const json& j, const char* field, std::size_t line_no) {
  if (!j.contains(field) || !j[field].is_number())
    line_error(line_no, std::string("missing or non-numeric field '") + field + "'");
  return j[field].get<double>();
}

}  // namespace

DetectionBox clamp_box(const DetectionBox& box, double image_w, double image_h, bool* clamped) {
  double x0 = std::clamp(box.x_min, 0.0, image_w);
  double y0 = std::clamp(box.y_min, 0.0, image_h);
  double x1 = std::clamp(box.x_min + box.w, 0.0, image_w);
  double y1 = std::clamp(box.y_min + box.h, 0.0, image_h);
  DetectionBox out = box;
  out.x_min = x0;
  out.y_min = y0;
  out.w = x1 - x0;
  out.h = y1 - y0;
  if (clamped)
    *clamped = out.x_min != box.x_min || out.y_min != box.y_min || out.w != box.w || out.h != box.h;
  return out;
}

NodeFeatures node_features(const DetectionBox& box, double image_w, double image_h) {
  if (image_w <= 0.0 || image_h <= 0.0)
    throw std::invalid_argument("node_features: image dimensions must be positive");
  if (box.h <= 0.0 || box.w <= 0.0)
    throw std::invalid_argument("node_features: degenerate box (w or h not positive)");
  DetectionBox b = clamp_box(box, image_w, image_h);
  if (b.w <= 0.0 || b.h <= 0.0)
    throw std::invalid_argument("node_features: box lies entirely outside the image");
  double cx = b.x_min + b.w / 2.0;
  double cy = b.y_min + b.h / 2.0;
  return {cx / image_w, cy / image_h, b.w / image_w, b.h / image_h, b.w / b.h,
          b.category == BoxCategory::kWindow ? 1.0 : 0.0};
}

EdgeFeatures edge_features(const DetectionBox& a, const DetectionBox& b, double image_w,
                           double image_h) {
  DetectionBox ca = clamp_box(a, image_w, image_h);
  DetectionBox cb = clamp_box(b, image_w, image_h);
  if (ca.w <= 0.0 || ca.h <= 0.0 || cb.w <= 0.0 || cb.h <= 0.0)
    throw std::invalid_argument("edge_features: box lies entirely outside the image");
  double dx = std::fabs((ca.x_min + ca.w / 2.0) - (cb.x_min + cb.w / 2.0)) / image_w;
  double dy = std::fabs((ca.y_min + ca.h / 2.0) - (cb.y_min + cb.h / 2.0)) / image_h;

  double ix = std::max(0.0, std::min(ca.x_min + ca.w, cb.x_min + cb.w) - std::max(ca.x_min, cb.x_min));
  double iy = std::max(0.0, std::min(ca.y_min + ca.h, cb.y_min + cb.h) - std::max(ca.y_min, cb.y_min));
  double inter = ix * iy;
  double area_a = ca.w * ca.h;
  double area_b = cb.w * cb.h;
  double iou = inter > 0.0 ? inter / (area_a + area_b - inter) : 0.0;
  double v_overlap = inter > 0.0 ? inter / std::min(area_a, area_b) : 0.0;
  return {dx, dy, iou, v_overlap};
}

double box_iou(const DetectionBox& a, const DetectionBox& b) {
  double ix = std::max(0.0, std::min(a.x_min + a.w, b.x_min + b.w) - std::max(a.x_min, b.x_min));
  double iy = std::max(0.0, std::min(a.y_min + a.h, b.y_min + b.h) - std::max(a.y_min, b.y_min));
  double inter = ix * iy;
  if (inter <= 0.0) return 0.0;
  return inter / (a.w * a.h + b.w * b.h - inter);
}

std::vector<FacadeRecord> load_facades(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open facades file: " + path);
  std::vector<FacadeRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      line_error(line_no, std::string("malformed JSON: ") + e.what());
    }
    FacadeRecord rec;
    if (!j.contains("facade_id") || !j["facade_id"].is_string())
      line_error(line_no, "missing or non-string field 'facade_id'");
    rec.facade_id = j["facade_id"].get<std::string>();
    double w = require_number(j, "width", line_no);
    double h = require_number(j, "height", line_no);
    if (w <= 0 || h <= 0) line_error(line_no, "width and height must be positive");
    rec.width = static_cast<int>(w);
    rec.height = static_cast<int>(h);
    if (j.contains("floor_count")) {
      if (!j["floor_count"].is_number_integer() || j["floor_count"].get<int>() <= 0)
        line_error(line_no, "floor_count must be a positive integer");
      rec.floor_count = j["floor_count"].get<int>();
    }
    if (!j.contains("boxes") || !j["boxes"].is_array())
      line_error(line_no, "missing or non-array field 'boxes'");
    for (const json& jb : j["boxes"]) {
      DetectionBox box;
      box.x_min = require_number(jb, "x", line_no);
      box.y_min = require_number(jb, "y", line_no);
      box.w = require_number(jb, "w", line_no);
      box.h = require_number(jb, "h", line_no);
      if (box.w <= 0) line_error(line_no, "box field 'w' must be > 0");
      if (box.h <= 0) line_error(line_no, "box field 'h' must be > 0");
      if (!jb.contains("category") || !jb["category"].is_string())
        line_error(line_no, "missing or non-string box field 'category'");
      std::string cat = jb["category"].get<std::string>();
      if (cat == "window")
        box.category = BoxCategory::kWindow;
      else if (cat == "door")
        box.category = BoxCategory::kDoor;
      else
        line_error(line_no, "box field 'category' must be 'window' or 'door', got '" + cat + "'");
      if (jb.contains("floor_id")) {
        if (!jb["floor_id"].is_number_integer() || jb["floor_id"].get<int>() < 0)
          line_error(line_no, "box field 'floor_id' must be a non-negative integer");
        box.floor_id = jb["floor_id"].get<int>();
      }
      rec.boxes.push_back(box);
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::string facade_to_json_line(const FacadeRecord& record) {
  json j;
  j["facade_id"] = record.facade_id;
  j["width"] = record.width;
  j["height"] = record.height;
  if (record.floor_count) j["floor_count"] = *record.floor_count;
  json boxes = json::array();
  for (const DetectionBox& b : record.boxes) {
    json jb;
    jb["x"] = b.x_min;
    jb["y"] = b.y_min;
    jb["w"] = b.w;
    jb["h"] = b.h;
    jb["category"] = b.category == BoxCategory::kWindow ? "window" : "door";
    if (b.floor_id) jb["floor_id"] = *b.floor_id;
    boxes.push_back(std::move(jb));
  }
  j["boxes"] = std::move(boxes);
  return j.dump();
}

void save_facades(const std::vector<FacadeRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write facades file: " + path);
  for (const FacadeRecord& rec : records) out << facade_to_json_line(rec) << '\n';
}

}  // namespace g2f
