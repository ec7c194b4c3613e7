#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gata2floor/eval.hpp"
#include "gata2floor/facade_data.hpp"
#include "gata2floor/graph_build.hpp"
#include "gata2floor/model.hpp"
#include "gata2floor/proposals.hpp"
#include "gata2floor/rng.hpp"
#include "gata2floor/synth.hpp"
#include "gata2floor/tape.hpp"
#include "gata2floor/training.hpp"

namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// index-ordered parallel map: results land by input position no matter which
// worker finishes first
template <typename Fn>
void parallel_for(std::size_t count, int jobs, Fn&& fn) {
  jobs = std::max(1, jobs);
  if (jobs == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  for (int t = 0; t < std::min<std::size_t>(static_cast<std::size_t>(jobs), count); ++t) {
    workers.emplace_back([&] {
      std::size_t i;
      while ((i = next.fetch_add(1)) < count) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (std::thread& w : workers) w.join();
  if (first_error) std::rethrow_exception(first_error);
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const std::string& l : lines) out << l << '\n';
}

std::vector<std::string> read_id_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open id file " + path);
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) ids.push_back(line);
  }
  return ids;
}

struct CommonGraphOpts {
  g2f::GraphBuildOptions opts;

  void attach(CLI::App* app) {
    app->add_option("--k", opts.k, "gap count for the vertical threshold")->capture_default_str();
    app->add_option("--alpha", opts.alpha, "outlier multiplier in [0,1]")->capture_default_str();
    app->add_flag("--pairwise-gaps", opts.pairwise_gaps,
                  "use pairwise distances instead of consecutive sorted gaps");
  }

  void print() const {
    std::cout << "  k = " << opts.k << "\n  alpha = " << fmt(opts.alpha)
              << "\n  pairwise_gaps = " << (opts.pairwise_gaps ? 1 : 0) << "\n";
  }
};

struct ModelCliOpts {
  g2f::ModelConfig cfg;

  void attach(CLI::App* app) {
    app->add_option("--d-model", cfg.d_model, "embedding width")->capture_default_str();
    app->add_option("--gat-layers", cfg.gat_layers, "residual GATv2 blocks")->capture_default_str();
    app->add_option("--gat-heads", cfg.gat_heads)->capture_default_str();
    app->add_option("--vert-heads", cfg.vert_heads)->capture_default_str();
    app->add_option("--floor-slots", cfg.floor_slots, "assignment query slots")->capture_default_str();
    app->add_option("--edge-dropout", cfg.edge_dropout)->capture_default_str();
    app->add_option("--leaky-slope", cfg.leaky_slope)->capture_default_str();
    app->add_option("--pos-hidden", cfg.pos_hidden)->capture_default_str();
    app->add_option("--bias-hidden", cfg.bias_hidden)->capture_default_str();
    app->add_option("--count-hidden", cfg.count_hidden)->capture_default_str();
    app->add_flag("--per-head-bias", cfg.per_head_bias, "separate vertical-bias MLP per head");
    app->add_flag("!--no-vert-post-norm", cfg.vert_post_norm,
                  "disable GraphNorm after vertical attention");
  }

  void print() const {
    std::cout << "  d_model = " << cfg.d_model << "\n  gat_layers = " << cfg.gat_layers
              << "\n  gat_heads = " << cfg.gat_heads << "\n  vert_heads = " << cfg.vert_heads
              << "\n  floor_slots = " << cfg.floor_slots
              << "\n  edge_dropout = " << fmt(cfg.edge_dropout)
              << "\n  leaky_slope = " << fmt(cfg.leaky_slope)
              << "\n  pos_hidden = " << cfg.pos_hidden << "\n  bias_hidden = " << cfg.bias_hidden
              << "\n  count_hidden = " << cfg.count_hidden
              << "\n  per_head_bias = " << (cfg.per_head_bias ? 1 : 0)
              << "\n  vert_post_norm = " << (cfg.vert_post_norm ? 1 : 0) << "\n";
  }
};

json graph_to_json(const g2f::FacadeGraph& graph, const g2f::PseudoLabels& labels) {
  json j;
  j["facade_id"] = graph.facade_id;
  j["tau"] = graph.tau_vertical;
  j["g"] = {graph.global_vector[0], graph.global_vector[1], graph.global_vector[2]};
  json edges = json::array();
  for (const g2f::GraphEdge& e : graph.edges) edges.push_back({e.i, e.j});
  j["edges"] = std::move(edges);
  j["pseudo_count"] = labels.pseudo_count;
  j["pseudo_ids"] = labels.floor_ids;
  return j;
}

int cmd_synth(const g2f::SynthConfig& cfg, int n, const std::string& out_path) {
  std::cout << "synth configuration:\n  n = " << n << "\n  floors = [" << cfg.min_floors << ", "
            << cfg.max_floors << "]\n  columns = [" << cfg.min_columns << ", " << cfg.max_columns
            << "]\n  image = " << cfg.image_width << "x" << cfg.image_height
            << "\n  jitter = " << fmt(cfg.jitter_frac) << "\n  dropout = " << fmt(cfg.element_dropout)
            << "\n  door_prob = " << fmt(cfg.door_prob) << "\n  irregular = " << (cfg.irregular ? 1 : 0)
            << "\n  seed = " << cfg.seed << "\n";
  std::vector<g2f::FacadeRecord> records = g2f::generate_facades(cfg, n);
  g2f::save_facades(records, out_path);
  std::cout << "wrote " << records.size() << " facades to " << out_path << "\n";
  return 0;
}

int cmd_graph(const std::string& in_path, const std::string& out_path,
              const CommonGraphOpts& graph_opts, int jobs) {
  std::cout << "graph configuration:\n  in = " << in_path << "\n  out = " << out_path << "\n";
  graph_opts.print();
  std::cout << "  jobs = " << jobs << "\n";
  std::vector<g2f::FacadeRecord> records = g2f::load_facades(in_path);
  std::vector<std::string> lines(records.size());
  std::atomic<std::size_t> clamped{0};
  parallel_for(records.size(), jobs, [&](std::size_t i) {
    g2f::FacadeGraph graph = g2f::build_graph(records[i], graph_opts.opts);
    g2f::PseudoLabels labels = g2f::pseudo_labels(graph);
    clamped += graph.clamped_boxes;
    lines[i] = graph_to_json(graph, labels).dump();
  });
  write_lines(out_path, lines);
  if (clamped > 0)
    std::cerr << "warning: clamped " << clamped.load() << " out-of-frame boxes\n";
  std::cout << "wrote " << lines.size() << " graphs to " << out_path << "\n";
  return 0;
}

int cmd_train(const std::string& data_path, const std::string& out_path,
              const std::string& log_path, const std::string& train_ids_path,
              const std::string& val_ids_path, const g2f::ModelConfig& model_cfg,
              const g2f::TrainConfig& train_cfg, const CommonGraphOpts& graph_opts) {
  std::cout << "train configuration:\n  data = " << data_path << "\n  out = " << out_path
            << "\n  lr = " << fmt(train_cfg.lr) << "\n  weight_decay = " << fmt(train_cfg.weight_decay)
            << "\n  batch_size = " << train_cfg.batch_size
            << "\n  grad_clip = " << fmt(train_cfg.grad_clip_norm)
            << "\n  epochs = " << train_cfg.epochs << "\n  w_count = " << fmt(train_cfg.w_count)
            << "\n  w_assign = " << fmt(train_cfg.w_assign) << "\n  w_conf = " << fmt(train_cfg.w_conf)
            << "\n  delta = " << fmt(train_cfg.delta) << "\n  seed = " << train_cfg.seed
            << "\n  literal_conf_target = " << (train_cfg.literal_conf_target ? 1 : 0) << "\n";
  ModelCliOpts tmp{model_cfg};
  tmp.print();
  graph_opts.print();

  std::vector<g2f::FacadeRecord> records = g2f::load_facades(data_path);
  std::vector<g2f::FacadeRecord> train_set, val_set;
  if (!train_ids_path.empty() || !val_ids_path.empty()) {
    if (train_ids_path.empty() || val_ids_path.empty())
      throw std::runtime_error("train: --train-ids and --val-ids must be given together");
    std::vector<std::string> train_ids = read_id_file(train_ids_path);
    std::vector<std::string> val_ids = read_id_file(val_ids_path);
    for (const g2f::FacadeRecord& r : records) {
      if (std::find(train_ids.begin(), train_ids.end(), r.facade_id) != train_ids.end())
        train_set.push_back(r);
      else if (std::find(val_ids.begin(), val_ids.end(), r.facade_id) != val_ids.end())
        val_set.push_back(r);
    }
  } else {
    for (const g2f::FacadeRecord& r : records) {
      if (g2f::is_validation_facade(r.facade_id))
        val_set.push_back(r);
      else
        train_set.push_back(r);
    }
  }
  std::cout << "training on " << train_set.size() << " facades, holding out " << val_set.size()
            << "\n";

  g2f::TrainResult result = g2f::train_model(train_set, model_cfg, train_cfg, graph_opts.opts);
  g2f::save_checkpoint(result.params, model_cfg, out_path);
  if (!log_path.empty()) {
    std::ofstream log(log_path, std::ios::binary);
    if (!log) throw std::runtime_error("cannot write " + log_path);
    log << g2f::epoch_log_csv(result.log);
  }
  if (!result.log.empty()) {
    const g2f::EpochStats& last = result.log.back();
    std::cout << "final train loss " << fmt(last.loss_total) << ", mae " << fmt(last.train_mae)
              << ", acc " << fmt(last.train_acc) << "\n";
  }

  if (!val_set.empty()) {
    double mae_pseudo = 0.0, acc_pseudo = 0.0;
    double mae_gt = 0.0, acc_gt = 0.0;
    std::size_t with_gt = 0;
    for (const g2f::FacadeRecord& r : val_set) {
      g2f::FacadeGraph graph = g2f::build_graph(r, graph_opts.opts);
      g2f::PseudoLabels labels = g2f::pseudo_labels(graph);
      g2f::ForwardOutput out = g2f::forward_eval(graph, result.params, model_cfg);
      int rounded = g2f::count_to_floors(out.count);
      mae_pseudo += std::abs(rounded - labels.pseudo_count);
      acc_pseudo += rounded == labels.pseudo_count ? 1 : 0;
      if (r.floor_count) {
        mae_gt += std::abs(rounded - *r.floor_count);
        acc_gt += rounded == *r.floor_count ? 1 : 0;
        ++with_gt;
      }
    }
    double inv = 1.0 / static_cast<double>(val_set.size());
    std::cout << "holdout vs pseudo labels: mae " << fmt(mae_pseudo * inv) << ", acc "
              << fmt(acc_pseudo * inv) << "\n";
    if (with_gt > 0)
      std::cout << "holdout vs ground truth: mae " << fmt(mae_gt / with_gt) << ", acc "
                << fmt(acc_gt / with_gt) << " (" << with_gt << " labeled)\n";
  }
  std::cout << "wrote checkpoint to " << out_path << "\n";
  return 0;
}

int cmd_predict(const std::string& data_path, const std::string& ckpt_path,
                const std::string& out_path, const CommonGraphOpts& graph_opts, int jobs) {
  std::cout << "predict configuration:\n  data = " << data_path << "\n  checkpoint = " << ckpt_path
            << "\n  out = " << out_path << "\n";
  graph_opts.print();
  g2f::Checkpoint ckpt = g2f::load_checkpoint(ckpt_path);
  std::vector<g2f::FacadeRecord> records = g2f::load_facades(data_path);
  std::vector<std::string> lines(records.size());
  parallel_for(records.size(), jobs, [&](std::size_t i) {
    g2f::FacadeGraph graph = g2f::build_graph(records[i], graph_opts.opts);
    g2f::ForwardOutput out = g2f::forward_eval(graph, ckpt.params, ckpt.config);
    std::vector<int> slots = g2f::hard_assignments(out.assign_probs);
    json j;
    j["facade_id"] = records[i].facade_id;
    j["floor_count"] = g2f::count_to_floors(out.count);
    j["confidence"] = out.confidence;
    json assignments = json::array();
    for (std::size_t node = 0; node < slots.size(); ++node) {
      json ja;
      ja["node"] = node;
      ja["floor_id"] = slots[node];
      ja["prob"] = out.assign_probs(node, static_cast<std::size_t>(slots[node]));
      assignments.push_back(std::move(ja));
    }
    j["assignments"] = std::move(assignments);
    lines[i] = j.dump();
  });
  write_lines(out_path, lines);
  std::cout << "wrote " << lines.size() << " predictions to " << out_path << "\n";
  return 0;
}

struct BaselineParams {
  double kde_bandwidth = 0.02;
  std::optional<double> ac_threshold;
  double ic_threshold = 0.5;
};

int cmd_eval(const std::string& data_path, const std::string& ckpt_path,
             const std::string& out_csv, const std::string& out_md,
             const CommonGraphOpts& graph_opts, const BaselineParams& bp, bool weighted_f1,
             int jobs) {
  std::cout << "eval configuration:\n  data = " << data_path << "\n  checkpoint = " << ckpt_path
            << "\n  kde_bandwidth = " << fmt(bp.kde_bandwidth) << "\n  ic_threshold = "
            << fmt(bp.ic_threshold) << "\n  weighted_f1 = " << (weighted_f1 ? 1 : 0) << "\n";
  graph_opts.print();

  g2f::Checkpoint ckpt = g2f::load_checkpoint(ckpt_path);
  std::vector<g2f::FacadeRecord> records = g2f::load_facades(data_path);
  for (const g2f::FacadeRecord& r : records) {
    if (!r.floor_count)
      throw std::runtime_error("eval: facade '" + r.facade_id + "' has no ground-truth floor_count");
    if (r.boxes.empty())
      throw std::runtime_error("eval: facade '" + r.facade_id + "' has no boxes");
  }

  struct Row {
    double model = 0.0;
    double confidence = 0.0;
    int kde = 0, ac = 0, ic = 0, gt = 0;
    std::size_t assign_correct = 0, assign_total = 0;
  };
  std::vector<Row> rows(records.size());
  parallel_for(records.size(), jobs, [&](std::size_t i) {
    const g2f::FacadeRecord& r = records[i];
    g2f::FacadeGraph graph = g2f::build_graph(r, graph_opts.opts);
    g2f::ForwardOutput out = g2f::forward_eval(graph, ckpt.params, ckpt.config);
    Row& row = rows[i];
    row.model = out.count;
    row.confidence = out.confidence;
    row.kde = g2f::baseline_kde(r, bp.kde_bandwidth);
    row.ac = g2f::baseline_agglomerative(r, bp.ac_threshold, graph_opts.opts);
    row.ic = g2f::baseline_intersection(r, bp.ic_threshold);
    row.gt = *r.floor_count;
    std::vector<int> slots = g2f::hard_assignments(out.assign_probs);
    for (std::size_t b = 0; b < r.boxes.size(); ++b) {
      if (!r.boxes[b].floor_id) continue;
      ++row.assign_total;
      if (slots[b] == *r.boxes[b].floor_id) ++row.assign_correct;
    }
  });

  std::vector<double> model_pred, kde_pred, ac_pred, ic_pred;
  std::vector<int> gts;
  std::size_t assign_correct = 0, assign_total = 0;
  for (const Row& r : rows) {
    model_pred.push_back(r.model);
    kde_pred.push_back(r.kde);
    ac_pred.push_back(r.ac);
    ic_pred.push_back(r.ic);
    gts.push_back(r.gt);
    assign_correct += r.assign_correct;
    assign_total += r.assign_total;
  }
  g2f::MetricAggregates m_model = g2f::metric_suite(model_pred, gts, weighted_f1);
  g2f::MetricAggregates m_kde = g2f::metric_suite(kde_pred, gts, weighted_f1);
  g2f::MetricAggregates m_ac = g2f::metric_suite(ac_pred, gts, weighted_f1);
  g2f::MetricAggregates m_ic = g2f::metric_suite(ic_pred, gts, weighted_f1);

  if (!out_csv.empty()) {
    std::ofstream csv(out_csv, std::ios::binary);
    if (!csv) throw std::runtime_error("cannot write " + out_csv);
    csv << "facade_id,predicted,rounded,ground_truth,confidence,kde,ac,ic\n";
    for (std::size_t i = 0; i < records.size(); ++i) {
      csv << records[i].facade_id << ',' << fmt(rows[i].model) << ','
          << g2f::count_to_floors(rows[i].model) << ',' << rows[i].gt << ','
          << fmt(rows[i].confidence) << ',' << rows[i].kde << ',' << rows[i].ac << ','
          << rows[i].ic << '\n';
    }
  }

  auto metric_row = [](const char* name, double a, double b, double c, double d) {
    return std::string("| ") + name + " | " + fmt(a) + " | " + fmt(b) + " | " + fmt(c) + " | " +
           fmt(d) + " |\n";
  };
  std::string md;
  md += "| Metric | GATA2Floor | KDE | AC | IC |\n";
  md += "|---|---|---|---|---|\n";
  md += metric_row("MAE", m_model.mae, m_kde.mae, m_ac.mae, m_ic.mae);
  md += metric_row("F1", m_model.macro_f1, m_kde.macro_f1, m_ac.macro_f1, m_ic.macro_f1);
  md += metric_row("Accuracy", m_model.accuracy, m_kde.accuracy, m_ac.accuracy, m_ic.accuracy);
  md += metric_row("Off-by-1", m_model.off_by_one, m_kde.off_by_one, m_ac.off_by_one,
                   m_ic.off_by_one);
  if (assign_total > 0) {
    md += "\nPer-node floor assignment accuracy: " +
          fmt(static_cast<double>(assign_correct) / static_cast<double>(assign_total)) + " over " +
          std::to_string(assign_total) + " labeled boxes.\n";
  }
  if (!out_md.empty()) {
    std::ofstream mdf(out_md, std::ios::binary);
    if (!mdf) throw std::runtime_error("cannot write " + out_md);
    mdf << md;
  }
  std::cout << md;
  return 0;
}

int cmd_baseline(const std::string& method, const std::string& data_path,
                 const std::string& out_path, const CommonGraphOpts& graph_opts,
                 const BaselineParams& bp, bool weighted_f1, int jobs) {
  std::cout << "baseline configuration:\n  method = " << method << "\n  data = " << data_path
            << "\n";
  std::vector<g2f::FacadeRecord> records = g2f::load_facades(data_path);
  std::vector<int> counts(records.size(), 0);
  parallel_for(records.size(), jobs, [&](std::size_t i) {
    if (method == "kde")
      counts[i] = g2f::baseline_kde(records[i], bp.kde_bandwidth);
    else if (method == "ac")
      counts[i] = g2f::baseline_agglomerative(records[i], bp.ac_threshold, graph_opts.opts);
    else
      counts[i] = g2f::baseline_intersection(records[i], bp.ic_threshold);
  });

  if (!out_path.empty()) {
    std::ofstream csv(out_path, std::ios::binary);
    if (!csv) throw std::runtime_error("cannot write " + out_path);
    csv << "facade_id,predicted\n";
    for (std::size_t i = 0; i < records.size(); ++i)
      csv << records[i].facade_id << ',' << counts[i] << '\n';
  }

  std::vector<double> preds;
  std::vector<int> gts;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i].floor_count) continue;
    preds.push_back(counts[i]);
    gts.push_back(*records[i].floor_count);
  }
  if (!preds.empty()) {
    g2f::MetricAggregates m = g2f::metric_suite(preds, gts, weighted_f1);
    std::cout << "mae " << fmt(m.mae) << ", acc " << fmt(m.accuracy) << ", f1 " << fmt(m.macro_f1)
              << ", off_by_1 " << fmt(m.off_by_one) << " on " << preds.size() << " labeled facades\n";
  }
  return 0;
}

int cmd_proposals(const std::string& image_path, const std::string& embeddings_path,
                  const std::string& scores_path, const std::string& out_path,
                  const std::string& dump_path, std::string facade_id,
                  const g2f::ProposeOptions& opts) {
  std::cout << "proposals configuration:\n  image = " << image_path
            << "\n  embeddings = " << (embeddings_path.empty() ? "(none)" : embeddings_path)
            << "\n  variance_window = " << opts.variance_window << "\n  patch = " << opts.patch_size
            << "\n  min_box = " << opts.min_box << "\n";
  g2f::GrayImage img = g2f::load_pgm(image_path);
  std::optional<g2f::PatchGrid> grid;
  if (!embeddings_path.empty()) grid = g2f::load_embeddings(embeddings_path);
  if (facade_id.empty()) facade_id = std::filesystem::path(image_path).stem().string();

  if (!dump_path.empty()) {
    std::vector<g2f::DetectionBox> candidates =
        g2f::propose_candidates(img, grid ? &*grid : nullptr, opts);
    g2f::FacadeRecord rec;
    rec.facade_id = facade_id;
    rec.width = img.width;
    rec.height = img.height;
    rec.boxes = candidates;
    g2f::save_facades({rec}, dump_path);
    std::cout << "wrote " << candidates.size() << " unscored candidates to " << dump_path << "\n";
    if (scores_path.empty()) return 0;
  }
  if (scores_path.empty())
    throw std::runtime_error("proposals: --scores is required unless only dumping candidates");

  std::map<int, double> scores = g2f::load_scores(scores_path);
  g2f::ProposalSet set = g2f::propose(img, grid ? &*grid : nullptr, scores, opts);
  g2f::FacadeRecord rec;
  rec.facade_id = facade_id;
  rec.width = img.width;
  rec.height = img.height;
  for (const g2f::Proposal& p : set.proposals) rec.boxes.push_back(p.box);
  g2f::save_facades({rec}, out_path);
  std::cout << "wrote " << set.proposals.size() << " proposals to " << out_path << "\n";
  return 0;
}

int cmd_selftest(std::uint64_t seed) {
  std::cout << "selftest configuration:\n  seed = " << seed << "\n";
  int failures = 0;
  auto report = [&](const char* name, bool ok, const std::string& detail = "") {
    std::cout << (ok ? "PASS" : "FAIL") << "  " << name;
    if (!detail.empty()) std::cout << " (" << detail << ")";
    std::cout << "\n";
    if (!ok) ++failures;
  };

  {  // primitive op gradients vs central differences
    g2f::Rng rng = g2f::substream(seed, "selftest-ops");
    auto loss_fn = [](const std::vector<g2f::Array>& params) {
      g2f::Tape t;
      g2f::VarId x = t.leaf(params[0]);
      g2f::VarId w = t.leaf(params[1]);
      g2f::VarId y = t.softmax(t.matmul(t.sigmoid(x), w), 1);
      return t.value(t.sum_all(t.mul(y, y))).scalar_value();
    };
    auto grad_fn = [](const std::vector<g2f::Array>& params) {
      g2f::Tape t;
      g2f::VarId x = t.leaf(params[0]);
      g2f::VarId w = t.leaf(params[1]);
      g2f::VarId y = t.softmax(t.matmul(t.sigmoid(x), w), 1);
      t.backward(t.sum_all(t.mul(y, y)));
      return std::vector<g2f::Array>{t.grad(x), t.grad(w)};
    };
    g2f::Array x({3, 4});
    g2f::Array w({4, 5});
    for (double& v : x.data()) v = rng.uniform(-1.0, 1.0);
    for (double& v : w.data()) v = rng.uniform(-1.0, 1.0);
    g2f::FiniteDiffReport rep = g2f::finite_diff_check(loss_fn, grad_fn, {x, w}, 1e-5);
    report("op gradients match central differences", rep.max_rel_err < 1e-6,
           "max rel err " + fmt(rep.max_rel_err));
  }

  {  // pseudo count vs independent BFS
    g2f::SynthConfig cfg;
    cfg.irregular = true;
    cfg.seed = seed;
    std::vector<g2f::FacadeRecord> records = g2f::generate_facades(cfg, 50);
    bool ok = true;
    for (const g2f::FacadeRecord& r : records) {
      g2f::FacadeGraph graph = g2f::build_graph(r);
      if (g2f::pseudo_labels(graph).pseudo_count != g2f::components_bfs_oracle(graph)) ok = false;
    }
    report("pseudo count equals BFS component count", ok, "50 facades");
  }

  {  // full model gradient on a small graph
    g2f::ModelConfig mc;
    mc.d_model = 8;
    mc.pos_hidden = 4;
    mc.bias_hidden = 4;
    mc.count_hidden = 4;
    mc.gat_layers = 2;
    mc.gat_heads = 2;
    mc.vert_heads = 2;
    mc.floor_slots = 5;
    g2f::SynthConfig sc;
    sc.min_floors = 2;
    sc.max_floors = 3;
    sc.max_columns = 2;
    sc.seed = seed + 1;
    g2f::FacadeRecord rec = g2f::generate_facades(sc, 1)[0];
    g2f::FacadeGraph graph = g2f::build_graph(rec);
    g2f::PseudoLabels labels = g2f::pseudo_labels(graph);
    g2f::ModelParams params = g2f::ModelParams::init(mc, seed);
    g2f::TrainConfig tc;
    std::vector<g2f::Array> flat;
    for (std::size_t i = 0; i < params.size(); ++i) flat.push_back(params.tensor(i));
    auto rebuild = [&](const std::vector<g2f::Array>& tensors) {
      g2f::ModelParams p = g2f::ModelParams::zeros_like(params);
      for (std::size_t i = 0; i < p.size(); ++i) p.tensor(i) = tensors[i];
      return p;
    };
    auto loss_fn = [&](const std::vector<g2f::Array>& tensors) {
      g2f::ModelParams p = rebuild(tensors);
      g2f::ForwardPass fp = g2f::run_forward(graph, p, mc, g2f::RunMode::kEval);
      return g2f::attach_loss(fp, labels, tc, mc.floor_slots).values.total;
    };
    auto grad_fn = [&](const std::vector<g2f::Array>& tensors) {
      g2f::ModelParams p = rebuild(tensors);
      g2f::ForwardPass fp = g2f::run_forward(graph, p, mc, g2f::RunMode::kEval);
      g2f::LossIds loss = g2f::attach_loss(fp, labels, tc, mc.floor_slots);
      fp.tape.backward(loss.total);
      std::vector<g2f::Array> grads;
      for (g2f::VarId id : fp.param_ids) grads.push_back(fp.tape.grad(id));
      return grads;
    };
    g2f::FiniteDiffReport rep = g2f::finite_diff_check(loss_fn, grad_fn, flat, 1e-5);
    report("end-to-end loss gradient matches central differences",
           rep.fraction_below(1e-3) >= 0.99,
           "frac<1e-3 " + fmt(rep.fraction_below(1e-3)) + ", median " + fmt(rep.median_rel_err));
  }

  {  // EM log-likelihood is monotone
    g2f::Rng rng = g2f::substream(seed, "selftest-gmm");
    bool ok = true;
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<double> data;
      for (int i = 0; i < 300; ++i) data.push_back(rng.normal() + (i % 2 ? 4.0 : 0.0));
      g2f::GmmModel model = g2f::gmm_fit(data, 1, 2, 50, 1e-9, seed + static_cast<std::uint64_t>(trial));
      for (std::size_t i = 1; i < model.log_likelihood_trace.size(); ++i)
        if (model.log_likelihood_trace[i] < model.log_likelihood_trace[i - 1] - 1e-9) ok = false;
    }
    report("EM log-likelihood non-decreasing", ok, "5 fits");
  }

  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GATA2Floor: vertical-aware facade graphs, floor counting, and label-free proposals"};
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  app.add_option("--seed", seed, "master seed for all random substreams")->capture_default_str();

  // synth
  auto* synth = app.add_subcommand("synth", "generate synthetic facades with known floors");
  g2f::SynthConfig synth_cfg;
  int synth_n = 10;
  std::string synth_out;
  synth->add_option("--n", synth_n, "number of facades")->capture_default_str();
  synth->add_option("--out", synth_out, "output JSONL path")->required();
  synth->add_option("--floors-min", synth_cfg.min_floors)->capture_default_str();
  synth->add_option("--floors-max", synth_cfg.max_floors)->capture_default_str();
  synth->add_option("--cols-min", synth_cfg.min_columns)->capture_default_str();
  synth->add_option("--cols-max", synth_cfg.max_columns)->capture_default_str();
  synth->add_option("--width", synth_cfg.image_width)->capture_default_str();
  synth->add_option("--height", synth_cfg.image_height)->capture_default_str();
  synth->add_option("--jitter", synth_cfg.jitter_frac, "intra-floor y jitter as pitch fraction")
      ->capture_default_str();
  synth->add_option("--dropout", synth_cfg.element_dropout)->capture_default_str();
  synth->add_option("--door-prob", synth_cfg.door_prob)->capture_default_str();
  synth->add_flag("--irregular", synth_cfg.irregular, "allow mezzanines and missing floors");

  // graph
  auto* graph_cmd = app.add_subcommand("graph", "build vertical-aware graphs and pseudo-labels");
  std::string graph_in, graph_out;
  CommonGraphOpts graph_graph_opts;
  int graph_jobs = 1;
  graph_cmd->add_option("--in", graph_in)->required();
  graph_cmd->add_option("--out", graph_out)->required();
  graph_graph_opts.attach(graph_cmd);
  graph_cmd->add_option("--jobs", graph_jobs, "parallel workers")->capture_default_str();

  // train
  auto* train = app.add_subcommand("train", "train the model on pseudo-labels");
  train->set_config("--config", "", "key=value file overriding training defaults");
  std::string train_data, train_out, train_log, train_ids, val_ids;
  g2f::TrainConfig train_cfg;
  ModelCliOpts train_model_opts;
  CommonGraphOpts train_graph_opts;
  train->add_option("--data", train_data)->required();
  train->add_option("--out", train_out, "checkpoint path")->required();
  train->add_option("--log", train_log, "epoch metrics CSV path");
  train->add_option("--train-ids", train_ids, "file of facade ids to train on");
  train->add_option("--val-ids", val_ids, "file of facade ids to hold out");
  train->add_option("--lr", train_cfg.lr)->capture_default_str();
  train->add_option("--weight-decay", train_cfg.weight_decay)->capture_default_str();
  train->add_option("--batch-size", train_cfg.batch_size)->capture_default_str();
  train->add_option("--grad-clip", train_cfg.grad_clip_norm)->capture_default_str();
  train->add_option("--epochs", train_cfg.epochs)->capture_default_str();
  train->add_option("--w-count", train_cfg.w_count)->capture_default_str();
  train->add_option("--w-assign", train_cfg.w_assign)->capture_default_str();
  train->add_option("--w-conf", train_cfg.w_conf)->capture_default_str();
  train->add_option("--delta", train_cfg.delta)->capture_default_str();
  train->add_flag("--literal-conf-target", train_cfg.literal_conf_target,
                  "use the literal exp(+|error|) confidence target");
  train_model_opts.attach(train);
  train_graph_opts.attach(train);

  // predict
  auto* predict = app.add_subcommand("predict", "per-facade floor count, confidence, assignments");
  std::string pred_data, pred_ckpt, pred_out;
  CommonGraphOpts pred_graph_opts;
  int pred_jobs = 1;
  predict->add_option("--data", pred_data)->required();
  predict->add_option("--checkpoint", pred_ckpt)->required();
  predict->add_option("--out", pred_out)->required();
  pred_graph_opts.attach(predict);
  predict->add_option("--jobs", pred_jobs)->capture_default_str();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "model vs clustering baselines on labeled data");
  std::string eval_data, eval_ckpt, eval_csv, eval_md;
  CommonGraphOpts eval_graph_opts;
  BaselineParams eval_bp;
  double eval_ac_threshold = -1.0;
  bool eval_weighted_f1 = false;
  int eval_jobs = 1;
  eval_cmd->add_option("--data", eval_data)->required();
  eval_cmd->add_option("--checkpoint", eval_ckpt)->required();
  eval_cmd->add_option("--out-csv", eval_csv);
  eval_cmd->add_option("--out-md", eval_md);
  eval_cmd->add_option("--kde-bandwidth", eval_bp.kde_bandwidth)->capture_default_str();
  eval_cmd->add_option("--ac-threshold", eval_ac_threshold,
                       "agglomerative cutoff; negative keeps the per-facade tau");
  eval_cmd->add_option("--ic-threshold", eval_bp.ic_threshold)->capture_default_str();
  eval_cmd->add_flag("--weighted-f1", eval_weighted_f1, "support-weighted instead of macro F1");
  eval_graph_opts.attach(eval_cmd);
  eval_cmd->add_option("--jobs", eval_jobs)->capture_default_str();

  // baseline
  auto* baseline = app.add_subcommand("baseline", "run one clustering baseline");
  std::string base_method, base_data, base_out;
  CommonGraphOpts base_graph_opts;
  BaselineParams base_bp;
  double base_ac_threshold = -1.0;
  bool base_weighted_f1 = false;
  int base_jobs = 1;
  baseline->add_option("--method", base_method)->required()->check(CLI::IsMember({"kde", "ac", "ic"}));
  baseline->add_option("--data", base_data)->required();
  baseline->add_option("--out", base_out);
  baseline->add_option("--kde-bandwidth", base_bp.kde_bandwidth)->capture_default_str();
  baseline->add_option("--ac-threshold", base_ac_threshold,
                       "agglomerative cutoff; negative keeps the per-facade tau");
  baseline->add_option("--ic-threshold", base_bp.ic_threshold)->capture_default_str();
  baseline->add_flag("--weighted-f1", base_weighted_f1);
  base_graph_opts.attach(baseline);
  baseline->add_option("--jobs", base_jobs)->capture_default_str();

  // proposals
  auto* proposals = app.add_subcommand("proposals", "label-free window/door candidates from a PGM");
  std::string prop_image, prop_embeddings, prop_scores, prop_out, prop_dump, prop_facade_id;
  g2f::ProposeOptions prop_opts;
  proposals->add_option("--image", prop_image, "binary 8-bit PGM (P5)")->required();
  proposals->add_option("--embeddings", prop_embeddings, "binary patch-embedding grid");
  proposals->add_option("--scores", prop_scores, "JSON candidate index -> score");
  proposals->add_option("--out", prop_out, "output JSONL in the facade format");
  proposals->add_option("--dump-candidates", prop_dump, "write unscored candidates and exit");
  proposals->add_option("--facade-id", prop_facade_id, "defaults to the image stem");
  proposals->add_option("--variance-window", prop_opts.variance_window)->capture_default_str();
  proposals->add_option("--patch", prop_opts.patch_size, "patch size of the embedding grid")
      ->capture_default_str();
  proposals->add_option("--fuse-weights", prop_opts.fuse_weights,
                        "cue weights: sobel, variance, coherence");
  proposals->add_option("--min-box", prop_opts.min_box)->capture_default_str();

  // selftest
  app.add_subcommand("selftest", "run the gradient-check and oracle suites");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (synth->parsed()) {
      synth_cfg.seed = seed;
      return cmd_synth(synth_cfg, synth_n, synth_out);
    }
    if (graph_cmd->parsed()) return cmd_graph(graph_in, graph_out, graph_graph_opts, graph_jobs);
    if (train->parsed()) {
      train_cfg.seed = seed;
      return cmd_train(train_data, train_out, train_log, train_ids, val_ids, train_model_opts.cfg,
                       train_cfg, train_graph_opts);
    }
    if (predict->parsed())
      return cmd_predict(pred_data, pred_ckpt, pred_out, pred_graph_opts, pred_jobs);
    if (eval_cmd->parsed()) {
      if (eval_ac_threshold >= 0.0) eval_bp.ac_threshold = eval_ac_threshold;
      return cmd_eval(eval_data, eval_ckpt, eval_csv, eval_md, eval_graph_opts, eval_bp,
                      eval_weighted_f1, eval_jobs);
    }
    if (baseline->parsed()) {
      if (base_ac_threshold >= 0.0) base_bp.ac_threshold = base_ac_threshold;
      return cmd_baseline(base_method, base_data, base_out, base_graph_opts, base_bp,
                          base_weighted_f1, base_jobs);
    }
    if (proposals->parsed()) {
      prop_opts.seed = seed;
      return cmd_proposals(prop_image, prop_embeddings, prop_scores, prop_out, prop_dump,
                           prop_facade_id, prop_opts);
    }
    return cmd_selftest(seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
