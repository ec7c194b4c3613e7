#include "gata2floor/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gata2floor/rng.hpp"

namespace g2f {

namespace {

void validate(const SynthConfig& c) {
  if (c.min_floors < 1 || c.max_floors < c.min_floors)
    throw std::invalid_argument("synth: invalid floor range");
  if (c.min_columns < 1 || c.max_columns < c.min_columns)
    throw std::invalid_argument("synth: invalid column range");
  if (c.image_width <= 0 || c.image_height <= 0)
    throw std::invalid_argument("synth: image dimensions must be positive");
  if (c.jitter_frac < 0.0) throw std::invalid_argument("synth: jitter must be non-negative");
  if (!c.irregular && c.jitter_frac > 0.25)
    throw std::invalid_argument(
        "synth: regular mode requires jitter <= 0.25 of the floor pitch to keep every floor "
        "vertically coherent");
  if (c.element_dropout < 0.0 || c.element_dropout > 1.0)
    throw std::invalid_argument("synth: element dropout must lie in [0,1]");
  if (!c.irregular && c.element_dropout >= 1.0)
    throw std::invalid_argument("synth: regular mode cannot drop every element (dropout 1.0)");
  if (c.door_prob < 0.0 || c.door_prob > 1.0)
    throw std::invalid_argument("synth: door probability must lie in [0,1]");
}

struct Row {
  double center_y = 0.0;  // pixels
  int floor_id = 0;       // bottom floor = 0
};

}  // namespace

std::vector<FacadeRecord> generate_facades(const SynthConfig& config, int n) {
  validate(config);
  if (n < 0) throw std::invalid_argument("synth: n must be non-negative");

  std::vector<FacadeRecord> records;
  records.reserve(static_cast<std::size_t>(n));
  double W = config.image_width;
  double H = config.image_height;

  for (int idx = 0; idx < n; ++idx) {
    Rng rng = substream(config.seed, "synth", static_cast<std::uint64_t>(idx));
    FacadeRecord rec;
    char id[32];
    std::snprintf(id, sizeof(id), "synth-%06d", idx);
    rec.facade_id = id;
    rec.width = config.image_width;
    rec.height = config.image_height;

    int floors = config.min_floors +
                 static_cast<int>(rng.below(static_cast<std::uint64_t>(config.max_floors - config.min_floors + 1)));
    int columns = config.min_columns +
                  static_cast<int>(rng.below(static_cast<std::uint64_t>(config.max_columns - config.min_columns + 1)));

    double top_margin = 0.06 * H;
    double bottom_margin = 0.07 * H;
    double usable = H - top_margin - bottom_margin;
    double pitch = usable / static_cast<double>(floors);

    // rows bottom-up; a mezzanine wedges an extra floor at half pitch
    std::vector<Row> rows;
    for (int f = 0; f < floors; ++f)
      rows.push_back({H - bottom_margin - (static_cast<double>(f) + 0.5) * pitch, f});
    if (config.irregular && floors >= 2 && rng.bernoulli(0.3)) {
      int below = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(floors - 1)));
      double mezz_y = rows[static_cast<std::size_t>(below - 1)].center_y - 0.5 * pitch;
      for (Row& r : rows)
        if (r.floor_id >= below) ++r.floor_id;
      rows.push_back({mezz_y, below});
      std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.floor_id < b.floor_id; });
    }
    int true_count = static_cast<int>(rows.size());
    rec.floor_count = true_count;

    int deleted_floor = -1;  // irregular mode may lose a whole floor
    if (config.irregular && true_count >= 2 && rng.bernoulli(0.3))
      deleted_floor = static_cast<int>(rng.below(static_cast<std::uint64_t>(true_count)));

    double x_margin = 0.12 * W;
    double slot_w = (W - 2.0 * x_margin) / static_cast<double>(columns);

    for (const Row& row : rows) {
      std::vector<DetectionBox> floor_boxes;
      for (int col = 0; col < columns; ++col) {
        double cx = x_margin + (static_cast<double>(col) + 0.5) * slot_w +
                    rng.uniform(-0.08, 0.08) * slot_w;
        double cy = row.center_y + rng.uniform(-1.0, 1.0) * config.jitter_frac * pitch;
        bool is_door = row.floor_id == 0 && rng.bernoulli(config.door_prob);
        DetectionBox box;
        if (is_door) {
          double w = std::min(slot_w * 0.45, 0.42 * pitch) * rng.uniform(0.85, 1.0);
          box = {cx - w / 2.0, cy - w, w, 2.0 * w, BoxCategory::kDoor, row.floor_id};
        } else {
          double w = slot_w * rng.uniform(0.42, 0.62);
          double h = pitch * rng.uniform(0.34, 0.48);
          box = {cx - w / 2.0, cy - h / 2.0, w, h, BoxCategory::kWindow, row.floor_id};
        }
        floor_boxes.push_back(box);
      }

      std::vector<bool> keep(floor_boxes.size(), true);
      bool any_kept = false;
      for (std::size_t b = 0; b < floor_boxes.size(); ++b) {
        keep[b] = !rng.bernoulli(config.element_dropout);
        any_kept = any_kept || keep[b];
      }
      std::size_t rescue = rng.below(floor_boxes.size());  // drawn unconditionally for stable streams
      if (!config.irregular && !any_kept) keep[rescue] = true;

      if (row.floor_id == deleted_floor) continue;
      for (std::size_t b = 0; b < floor_boxes.size(); ++b)
        if (keep[b]) rec.boxes.push_back(floor_boxes[b]);
    }
    records.push_back(std::move(rec));
  }
  return records;
}

FacadeRecord remove_floor(const FacadeRecord& record, int floor_id) {
  FacadeRecord out = record;
  out.boxes.clear();
  for (const DetectionBox& b : record.boxes) {
    if (!b.floor_id || *b.floor_id != floor_id) out.boxes.push_back(b);
  }
  if (out.boxes.size() == record.boxes.size())
    throw std::invalid_argument("remove_floor: no boxes carry floor_id " + std::to_string(floor_id));
  return out;
}

}  // namespace g2f
