#include "gata2floor/proposals.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <deque>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "gata2floor/rng.hpp"

namespace g2f {

namespace {

constexpr double kVarianceFloorValue = 1e-6;

void normalize_in_place(std::vector<double>& v) {
  auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
  double lo = *lo_it, hi = *hi_it;
  if (hi > lo) {
    double inv = 1.0 / (hi - lo);
    for (double& x : v) x = (x - lo) * inv;
  } else {
    // constant map: clamp instead of inventing contrast
    for (double& x : v) x = std::clamp(x, 0.0, 1.0);
  }
}

int skip_pgm_whitespace(std::istream& in) {
  int c = in.get();
  while (c != EOF && (std::isspace(c) || c == '#')) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    }
    c = in.get();
  }
  return c;
}

int read_pgm_int(std::istream& in) {
  int c = skip_pgm_whitespace(in);
  if (c == EOF || !std::isdigit(c)) throw std::runtime_error("pgm: malformed header");
  int value = 0;
  while (c != EOF && std::isdigit(c)) {
    value = value * 10 + (c - '0');
    c = in.get();
  }
  return value;
}

}  // namespace

GrayImage load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("pgm: cannot open " + path);
  char m0 = 0, m1 = 0;
  in.get(m0);
  in.get(m1);
  if (m0 != 'P' || m1 != '5') throw std::runtime_error("pgm: not a binary P5 file: " + path);
  GrayImage img;
  img.width = read_pgm_int(in);
  img.height = read_pgm_int(in);
  int maxval = read_pgm_int(in);
  if (img.width <= 0 || img.height <= 0) throw std::runtime_error("pgm: bad dimensions");
  if (maxval <= 0 || maxval > 255) throw std::runtime_error("pgm: only 8-bit maxval supported");
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size()))
    throw std::runtime_error("pgm: truncated pixel data in " + path);
  return img;
}

void save_pgm(const GrayImage& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("pgm: cannot write " + path);
  out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
}

SaliencyMap sobel_map(const GrayImage& img) {
  if (img.width < 3 || img.height < 3)
    throw std::invalid_argument("sobel_map: image must be at least 3x3");
  SaliencyMap map{img.width, img.height, std::vector<double>(img.pixels.size(), 0.0)};
  auto px = [&](int x, int y) {
    x = std::clamp(x, 0, img.width - 1);  // replicate padding
    y = std::clamp(y, 0, img.height - 1);
    return static_cast<double>(img.at(x, y));
  };
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double gx = -px(x - 1, y - 1) + px(x + 1, y - 1) - 2.0 * px(x - 1, y) + 2.0 * px(x + 1, y) -
                  px(x - 1, y + 1) + px(x + 1, y + 1);
      double gy = -px(x - 1, y - 1) - 2.0 * px(x, y - 1) - px(x + 1, y - 1) + px(x - 1, y + 1) +
                  2.0 * px(x, y + 1) + px(x + 1, y + 1);
      map.values[static_cast<std::size_t>(y) * img.width + x] = std::sqrt(gx * gx + gy * gy);
    }
  }
  normalize_in_place(map.values);
  return map;
}

std::vector<double> local_variance_raw(const GrayImage& img, int window) {
  if (window < 3 || window % 2 == 0)
    throw std::invalid_argument("variance_map: window must be odd and >= 3");
  int w = img.width, h = img.height;
  // integer integral images of sum and sum of squares are exact
  std::vector<std::int64_t> sum(static_cast<std::size_t>(w + 1) * (h + 1), 0);
  std::vector<std::int64_t> sq(static_cast<std::size_t>(w + 1) * (h + 1), 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::int64_t v = img.at(x, y);
      std::size_t idx = static_cast<std::size_t>(y + 1) * (w + 1) + (x + 1);
      std::size_t up = static_cast<std::size_t>(y) * (w + 1) + (x + 1);
      sum[idx] = v + sum[idx - 1] + sum[up] - sum[up - 1];
      sq[idx] = v * v + sq[idx - 1] + sq[up] - sq[up - 1];
    }
  }
  std::vector<double> out(static_cast<std::size_t>(w) * h, 0.0);
  int r = window / 2;
  for (int y = 0; y < h; ++y) {
    int y0 = std::max(0, y - r), y1 = std::min(h - 1, y + r);
    for (int x = 0; x < w; ++x) {
      int x0 = std::max(0, x - r), x1 = std::min(w - 1, x + r);
      auto rect = [&](const std::vector<std::int64_t>& ii) {
        return ii[static_cast<std::size_t>(y1 + 1) * (w + 1) + (x1 + 1)] -
               ii[static_cast<std::size_t>(y0) * (w + 1) + (x1 + 1)] -
               ii[static_cast<std::size_t>(y1 + 1) * (w + 1) + x0] +
               ii[static_cast<std::size_t>(y0) * (w + 1) + x0];
      };
      std::int64_t n = static_cast<std::int64_t>(y1 - y0 + 1) * (x1 - x0 + 1);
      std::int64_t s1 = rect(sum);
      std::int64_t s2 = rect(sq);
      out[static_cast<std::size_t>(y) * w + x] =
          static_cast<double>(n * s2 - s1 * s1) / static_cast<double>(n * n);
    }
  }
  return out;
}

SaliencyMap variance_map(const GrayImage& img, int window) {
  SaliencyMap map{img.width, img.height, local_variance_raw(img, window)};
  normalize_in_place(map.values);
  return map;
}

PatchGrid load_embeddings(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("embeddings: cannot open " + path);
  std::uint32_t header[3];
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (in.gcount() != sizeof(header)) throw std::runtime_error("embeddings: truncated header");
  PatchGrid grid;
  grid.grid_h = static_cast<int>(header[0]);
  grid.grid_w = static_cast<int>(header[1]);
  grid.dim = static_cast<int>(header[2]);
  if (grid.grid_h <= 0 || grid.grid_w <= 0 || grid.dim <= 0)
    throw std::runtime_error("embeddings: bad grid dimensions");
  std::size_t count = static_cast<std::size_t>(grid.grid_h) * grid.grid_w * grid.dim;
  grid.values.resize(count);
  in.read(reinterpret_cast<char*>(grid.values.data()),
          static_cast<std::streamsize>(count * sizeof(float)));
  if (in.gcount() != static_cast<std::streamsize>(count * sizeof(float)))
    throw std::runtime_error("embeddings: truncated payload");
  return grid;
}

SaliencyMap coherence_map(const PatchGrid& grid, int patch_size, int image_w, int image_h) {
  if (patch_size <= 0) throw std::invalid_argument("coherence_map: patch size must be positive");
  int gh = grid.grid_h, gw = grid.grid_w, dim = grid.dim;

  std::vector<double> norms(static_cast<std::size_t>(gh) * gw, 0.0);
  for (int r = 0; r < gh; ++r) {
    for (int c = 0; c < gw; ++c) {
      const float* v = grid.values.data() + (static_cast<std::size_t>(r) * gw + c) * dim;
      double sq = 0.0;
      for (int d = 0; d < dim; ++d) sq += static_cast<double>(v[d]) * v[d];
      if (sq <= 0.0)
        throw std::runtime_error("coherence_map: zero-norm embedding at patch (" +
                                 std::to_string(r) + ", " + std::to_string(c) + ")");
      norms[static_cast<std::size_t>(r) * gw + c] = std::sqrt(sq);
    }
  }

  std::vector<double> patch_sim(static_cast<std::size_t>(gh) * gw, 0.0);
  for (int r = 0; r < gh; ++r) {
    for (int c = 0; c < gw; ++c) {
      const float* v = grid.values.data() + (static_cast<std::size_t>(r) * gw + c) * dim;
      double acc = 0.0;
      int neighbors = 0;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          if (dr == 0 && dc == 0) continue;
          int nr = r + dr, nc = c + dc;
          if (nr < 0 || nr >= gh || nc < 0 || nc >= gw) continue;
          const float* u = grid.values.data() + (static_cast<std::size_t>(nr) * gw + nc) * dim;
          double dot = 0.0;
          for (int d = 0; d < dim; ++d) dot += static_cast<double>(v[d]) * u[d];
          acc += dot / (norms[static_cast<std::size_t>(r) * gw + c] *
                        norms[static_cast<std::size_t>(nr) * gw + nc]);
          ++neighbors;
        }
      }
      patch_sim[static_cast<std::size_t>(r) * gw + c] =
          neighbors > 0 ? acc / static_cast<double>(neighbors) : 1.0;
    }
  }

  SaliencyMap map{image_w, image_h, std::vector<double>(static_cast<std::size_t>(image_w) * image_h)};
  for (int y = 0; y < image_h; ++y) {
    int r = std::min(y / patch_size, gh - 1);
    for (int x = 0; x < image_w; ++x) {
      int c = std::min(x / patch_size, gw - 1);
      map.values[static_cast<std::size_t>(y) * image_w + x] =
          patch_sim[static_cast<std::size_t>(r) * gw + c];
    }
  }
  normalize_in_place(map.values);
  return map;
}

SaliencyMap fuse(const std::vector<const SaliencyMap*>& maps, std::vector<double> weights) {
  if (maps.empty()) throw std::invalid_argument("fuse: no maps");
  if (weights.empty()) weights.assign(maps.size(), 1.0);
  if (weights.size() != maps.size())
    throw std::invalid_argument("fuse: weight count does not match map count");
  double total_w = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw std::invalid_argument("fuse: weights must be non-negative");
    total_w += w;
  }
  if (total_w <= 0.0) throw std::invalid_argument("fuse: weights sum to zero");

  int w = maps[0]->width, h = maps[0]->height;
  for (const SaliencyMap* m : maps)
    if (m->width != w || m->height != h)
      throw std::invalid_argument("fuse: map dimensions differ");

  SaliencyMap out{w, h, std::vector<double>(static_cast<std::size_t>(w) * h, 0.0)};
  for (std::size_t m = 0; m < maps.size(); ++m) {
    double wm = weights[m] / total_w;
    const std::vector<double>& src = maps[m]->values;
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += wm * src[i];
  }
  normalize_in_place(out.values);
  return out;
}

namespace {

double log_gaussian_diag(const double* x, const double* mean, const double* var, int dim) {
  double acc = 0.0;
  for (int d = 0; d < dim; ++d) {
    double diff = x[d] - mean[d];
    acc += -0.5 * (std::log(2.0 * 3.14159265358979323846 * var[d]) + diff * diff / var[d]);
  }
  return acc;
}

}  // namespace

GmmModel gmm_fit(std::span<const double> data, int dim, int n_components, int max_iter, double tol,
                 std::uint64_t seed) {
  if (dim <= 0 || n_components <= 0) throw std::invalid_argument("gmm_fit: bad dimensions");
  if (data.size() % static_cast<std::size_t>(dim) != 0)
    throw std::invalid_argument("gmm_fit: data length not a multiple of dim");
  std::size_t n = data.size() / static_cast<std::size_t>(dim);
  if (n < static_cast<std::size_t>(n_components))
    throw std::invalid_argument("gmm_fit: fewer samples than components");

  GmmModel model;
  model.components = n_components;
  model.dim = dim;
  model.weights.assign(static_cast<std::size_t>(n_components), 1.0 / n_components);
  model.means.assign(static_cast<std::size_t>(n_components) * dim, 0.0);
  model.variances.assign(static_cast<std::size_t>(n_components) * dim, 0.0);

  // global per-dim variance seeds the component variances
  std::vector<double> global_mean(static_cast<std::size_t>(dim), 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (int d = 0; d < dim; ++d) global_mean[static_cast<std::size_t>(d)] += data[i * dim + d];
  for (double& m : global_mean) m /= static_cast<double>(n);
  std::vector<double> global_var(static_cast<std::size_t>(dim), 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (int d = 0; d < dim; ++d) {
      double diff = data[i * dim + d] - global_mean[static_cast<std::size_t>(d)];
      global_var[static_cast<std::size_t>(d)] += diff * diff;
    }
  bool all_identical = true;
  for (double& v : global_var) {
    v /= static_cast<double>(n);
    if (v > 0.0) all_identical = false;
    v = std::max(v, kVarianceFloorValue);
  }
  if (all_identical && n_components >= 2) model.degenerate = true;

  // k-means++-style seeding: spread the initial means by squared distance
  Rng rng = substream(seed, "gmm-seed");
  std::vector<std::size_t> centers;
  centers.push_back(rng.below(n));
  std::vector<double> min_d2(n, 0.0);
  while (centers.size() < static_cast<std::size_t>(n_components)) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t c : centers) {
        double d2 = 0.0;
        for (int d = 0; d < dim; ++d) {
          double diff = data[i * dim + d] - data[c * static_cast<std::size_t>(dim) + d];
          d2 += diff * diff;
        }
        best = std::min(best, d2);
      }
      min_d2[i] = best;
      total += best;
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      double r = rng.uniform() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += min_d2[i];
        if (acc >= r) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.below(n);
    }
    centers.push_back(pick);
  }
  for (int k = 0; k < n_components; ++k)
    for (int d = 0; d < dim; ++d) {
      model.means[static_cast<std::size_t>(k) * dim + d] =
          data[centers[static_cast<std::size_t>(k)] * static_cast<std::size_t>(dim) + d];
      model.variances[static_cast<std::size_t>(k) * dim + d] = global_var[static_cast<std::size_t>(d)];
    }

  std::vector<double> resp(n * static_cast<std::size_t>(n_components), 0.0);
  double prev_ll = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < max_iter; ++iter) {
    // E step in log space
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (int k = 0; k < n_components; ++k) {
        double lp = std::log(model.weights[static_cast<std::size_t>(k)]) +
                    log_gaussian_diag(&data[i * dim], &model.means[static_cast<std::size_t>(k) * dim],
                                      &model.variances[static_cast<std::size_t>(k) * dim], dim);
        resp[i * static_cast<std::size_t>(n_components) + static_cast<std::size_t>(k)] = lp;
        mx = std::max(mx, lp);
      }
      double denom = 0.0;
      for (int k = 0; k < n_components; ++k)
        denom += std::exp(resp[i * static_cast<std::size_t>(n_components) + static_cast<std::size_t>(k)] - mx);
      double lse = mx + std::log(denom);
      ll += lse;
      for (int k = 0; k < n_components; ++k) {
        std::size_t idx = i * static_cast<std::size_t>(n_components) + static_cast<std::size_t>(k);
        resp[idx] = std::exp(resp[idx] - lse);
      }
    }
    model.log_likelihood_trace.push_back(ll);

    // M step
    for (int k = 0; k < n_components; ++k) {
      double nk = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        nk += resp[i * static_cast<std::size_t>(n_components) + static_cast<std::size_t>(k)];
      double safe_nk = std::max(nk, 1e-12);
      for (int d = 0; d < dim; ++d) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i)
          acc += resp[i * static_cast<std::size_t>(n_components) + static_cast<std::size_t>(k)] *
                 data[i * dim + d];
        model.means[static_cast<std::size_t>(k) * dim + d] = acc / safe_nk;
      }
      for (int d = 0; d < dim; ++d) {
        double acc = 0.0;
        double mean = model.means[static_cast<std::size_t>(k) * dim + d];
        for (std::size_t i = 0; i < n; ++i) {
          double diff = data[i * dim + d] - mean;
          acc += resp[i * static_cast<std::size_t>(n_components) + static_cast<std::size_t>(k)] * diff * diff;
        }
        model.variances[static_cast<std::size_t>(k) * dim + d] =
            std::max(acc / safe_nk, kVarianceFloorValue);
      }
      model.weights[static_cast<std::size_t>(k)] = nk / static_cast<double>(n);
    }

    if (iter > 0 && std::fabs(ll - prev_ll) < tol * std::max(1.0, std::fabs(prev_ll))) {
      prev_ll = ll;
      break;
    }
    prev_ll = ll;
  }
  return model;
}

int gmm_assign(const GmmModel& model, std::span<const double> x) {
  if (static_cast<int>(x.size()) != model.dim) throw std::invalid_argument("gmm_assign: dim mismatch");
  int best = 0;
  double best_lp = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < model.components; ++k) {
    double lp = std::log(std::max(model.weights[static_cast<std::size_t>(k)], 1e-300)) +
                log_gaussian_diag(x.data(), &model.means[static_cast<std::size_t>(k) * model.dim],
                                  &model.variances[static_cast<std::size_t>(k) * model.dim], model.dim);
    if (lp > best_lp) {
      best_lp = lp;
      best = k;
    }
  }
  return best;
}

std::vector<DetectionBox> propose_candidates(const GrayImage& img, const PatchGrid* embeddings,
                                             const ProposeOptions& opts) {
  std::vector<SaliencyMap> cues;
  cues.push_back(sobel_map(img));
  cues.push_back(variance_map(img, opts.variance_window));
  if (embeddings) cues.push_back(coherence_map(*embeddings, opts.patch_size, img.width, img.height));

  std::vector<const SaliencyMap*> cue_ptrs;
  for (const SaliencyMap& m : cues) cue_ptrs.push_back(&m);
  std::vector<double> weights = opts.fuse_weights;
  if (!weights.empty() && weights.size() > cue_ptrs.size())
    weights.resize(cue_ptrs.size());  // missing cue: renormalize over the present ones
  SaliencyMap saliency = fuse(cue_ptrs, weights);

  std::size_t n_px = static_cast<std::size_t>(img.width) * img.height;

  // global GMM on (intensity, saliency): the component with the higher mean
  // saliency is the facade region
  std::vector<double> samples(n_px * 2);
  for (std::size_t i = 0; i < n_px; ++i) {
    samples[2 * i] = static_cast<double>(img.pixels[i]) / 255.0;
    samples[2 * i + 1] = saliency.values[i];
  }
  GmmModel global = gmm_fit(samples, 2, 2, 100, 1e-6, mix_u64(opts.seed, 1));
  int facade_comp = global.means[1] >= global.means[3] ? 0 : 1;
  std::vector<char> facade_mask(n_px, 0);
  std::vector<double> facade_saliency;
  for (std::size_t i = 0; i < n_px; ++i) {
    double x[2] = {samples[2 * i], samples[2 * i + 1]};
    if (gmm_assign(global, x) == facade_comp) {
      facade_mask[i] = 1;
      facade_saliency.push_back(saliency.values[i]);
    }
  }

  // local GMM on saliency inside the facade mask segments element-like blobs
  std::vector<char> fg_mask(n_px, 0);
  if (facade_saliency.size() >= 2) {
    GmmModel local = gmm_fit(facade_saliency, 1, 2, 100, 1e-6, mix_u64(opts.seed, 2));
    int fg_comp = local.means[0] >= local.means[1] ? 0 : 1;
    for (std::size_t i = 0; i < n_px; ++i) {
      if (!facade_mask[i]) continue;
      double x[1] = {saliency.values[i]};
      fg_mask[i] = gmm_assign(local, x) == fg_comp ? 1 : 0;
    }
  } else {
    fg_mask = facade_mask;
  }

  // 4-connected blobs in scan order define the candidate set
  std::vector<DetectionBox> candidates;
  std::vector<char> visited(n_px, 0);
  std::deque<std::pair<int, int>> queue;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      std::size_t idx = static_cast<std::size_t>(y) * img.width + x;
      if (!fg_mask[idx] || visited[idx]) continue;
      int x0 = x, x1 = x, y0 = y, y1 = y;
      visited[idx] = 1;
      queue.emplace_back(x, y);
      while (!queue.empty()) {
        auto [cx, cy] = queue.front();
        queue.pop_front();
        x0 = std::min(x0, cx);
        x1 = std::max(x1, cx);
        y0 = std::min(y0, cy);
        y1 = std::max(y1, cy);
        constexpr int dx[4] = {1, -1, 0, 0};
        constexpr int dy[4] = {0, 0, 1, -1};
        for (int d = 0; d < 4; ++d) {
          int nx = cx + dx[d], ny = cy + dy[d];
          if (nx < 0 || nx >= img.width || ny < 0 || ny >= img.height) continue;
          std::size_t nidx = static_cast<std::size_t>(ny) * img.width + nx;
          if (fg_mask[nidx] && !visited[nidx]) {
            visited[nidx] = 1;
            queue.emplace_back(nx, ny);
          }
        }
      }
      int bw = x1 - x0 + 1, bh = y1 - y0 + 1;
      if (bw >= opts.min_box && bh >= opts.min_box) {
        candidates.push_back({static_cast<double>(x0), static_cast<double>(y0),
                              static_cast<double>(bw), static_cast<double>(bh),
                              BoxCategory::kWindow, std::nullopt});
      }
    }
  }
  return candidates;
}

ProposalSet propose(const GrayImage& img, const PatchGrid* embeddings,
                    const std::map<int, double>& scores, const ProposeOptions& opts) {
  std::vector<DetectionBox> candidates = propose_candidates(img, embeddings, opts);
  ProposalSet out;
  if (candidates.empty()) return out;

  std::vector<double> score_values(candidates.size(), 0.0);
  std::string missing;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    auto it = scores.find(static_cast<int>(i));
    if (it == scores.end()) {
      if (!missing.empty()) missing += ", ";
      missing += std::to_string(i);
      continue;
    }
    if (it->second < 0.0 || it->second > 1.0)
      throw std::invalid_argument("propose: score for candidate " + std::to_string(i) +
                                  " outside [0,1]");
    score_values[i] = it->second;
  }
  if (!missing.empty())
    throw std::invalid_argument("propose: missing score entries for candidates: " + missing);

  bool all_equal = std::all_of(score_values.begin(), score_values.end(),
                               [&](double s) { return s == score_values[0]; });

  std::vector<char> keep(candidates.size(), 1);
  if (!all_equal && candidates.size() >= 2) {
    GmmModel cluster = gmm_fit(score_values, 1, 2, 100, 1e-6, mix_u64(opts.seed, 3));
    int keep_comp = cluster.means[0] >= cluster.means[1] ? 0 : 1;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      double x[1] = {score_values[i]};
      keep[i] = gmm_assign(cluster, x) == keep_comp ? 1 : 0;
    }
  }
  for (std::size_t i = 0; i < candidates.size(); ++i)
    if (keep[i]) out.proposals.push_back({candidates[i], score_values[i]});
  return out;
}

std::map<int, double> load_scores(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("scores: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("scores: malformed JSON in " + path + ": " + e.what());
  }
  if (!j.is_object()) throw std::runtime_error("scores: expected a JSON object of index -> score");
  std::map<int, double> out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    int idx = 0;
    const std::string& key = it.key();
    auto res = std::from_chars(key.data(), key.data() + key.size(), idx);
    if (res.ec != std::errc() || res.ptr != key.data() + key.size())
      throw std::runtime_error("scores: non-integer candidate index '" + key + "'");
    if (!it.value().is_number())
      throw std::runtime_error("scores: non-numeric score for index " + key);
    out[idx] = it.value().get<double>();
  }
  return out;
}

}  // namespace g2f
