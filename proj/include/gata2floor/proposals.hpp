#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "gata2floor/facade_data.hpp"

namespace g2f {

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major

  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

GrayImage load_pgm(const std::string& path);  // binary P5, 8-bit
void save_pgm(const GrayImage& img, const std::string& path);

// Per-pixel salience in [0,1] after min-max normalization; constant maps are
// kept as-is.
struct SaliencyMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

SaliencyMap sobel_map(const GrayImage& img);

// Raw local variance over an odd window with clipped borders; integer
// integral images keep it exact.
std::vector<double> local_variance_raw(const GrayImage& img, int window);
SaliencyMap variance_map(const GrayImage& img, int window = 15);

// Externally produced patch embeddings on a regular grid.
struct PatchGrid {
  int grid_h = 0;
  int grid_w = 0;
  int dim = 0;
  std::vector<float> values;  // grid_h * grid_w * dim
};

PatchGrid load_embeddings(const std::string& path);

SaliencyMap coherence_map(const PatchGrid& grid, int patch_size, int image_w, int image_h);

SaliencyMap fuse(const std::vector<const SaliencyMap*>& maps, std::vector<double> weights = {});

struct GmmModel {
  int components = 0;
  int dim = 0;
  std::vector<double> weights;                // per component
  std::vector<double> means;                  // components * dim
  std::vector<double> variances;              // components * dim, diagonal, floored
  std::vector<double> log_likelihood_trace;   // one entry per EM iteration
  bool degenerate = false;                    // all-identical samples with n >= 2
};

GmmModel gmm_fit(std::span<const double> data, int dim, int n_components, int max_iter = 100,
                 double tol = 1e-6, std::uint64_t seed = 0);

int gmm_assign(const GmmModel& model, std::span<const double> x);

struct Proposal {
  DetectionBox box;
  double score = 0.0;
};

struct ProposalSet {
  std::vector<Proposal> proposals;
};

struct ProposeOptions {
  int variance_window = 15;
  int patch_size = 14;
  std::vector<double> fuse_weights;  // empty = equal weights over present cues
  int min_box = 8;                   // smallest kept blob side in pixels
  std::uint64_t seed = 0;
};

// Saliency fusion, then a global GMM (n=2) on (intensity, saliency) pairs to
// isolate the facade region, then a local GMM on saliency inside it; blobs
// become candidate boxes in scan order.
std::vector<DetectionBox> propose_candidates(const GrayImage& img, const PatchGrid* embeddings,
                                             const ProposeOptions& opts = {});

// Joins candidates with external scores and keeps the higher-mean score
// cluster; equal scores keep every candidate.
ProposalSet propose(const GrayImage& img, const PatchGrid* embeddings,
                    const std::map<int, double>& scores, const ProposeOptions& opts = {});

std::map<int, double> load_scores(const std::string& path);

}  // namespace g2f
