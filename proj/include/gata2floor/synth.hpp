#pragma once

#include <cstdint>
#include <vector>

#include "gata2floor/facade_data.hpp"

namespace g2f {

// Synthetic facade generator with known floor structure. Regular mode
// guarantees every floor keeps at least one element and inter-floor pitch is
// at least four times the intra-floor jitter, so vertical connectivity
// recovers the true count. Irregular mode may insert a half-pitch mezzanine
// and may leave whole floors undetected.
struct SynthConfig {
  int min_floors = 2;
  int max_floors = 8;
  int min_columns = 2;
  int max_columns = 6;
  int image_width = 800;
  int image_height = 1200;
  double jitter_frac = 0.08;      // intra-floor y jitter as a fraction of pitch
  double element_dropout = 0.1;   // per-box removal probability
  double door_prob = 0.5;         // ground-floor element turning into a door
  bool irregular = false;
  std::uint64_t seed = 1;
};

std::vector<FacadeRecord> generate_facades(const SynthConfig& config, int n);

// Removes every box of one true floor; used to construct the known failure
// mode where a whole floor goes undetected.
FacadeRecord remove_floor(const FacadeRecord& record, int floor_id);

}  // namespace g2f
