#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "classify.hpp"
#include "eeg_data.hpp"
#include "mask.hpp"
#include "rcsp.hpp"
#include "spea2.hpp"

namespace pchan::pipe {

struct DataConfig {
  std::string manifest;
  std::string layout;  // optional explicit layout file
  std::vector<std::string> aux_manifests;
};

struct WindowConfig {
  double start_s = 0.5;
  double len_s = 3.0;
};

struct LaplacianConfig {
  bool enabled = true;
  int k = 4;
};

struct PreprocessConfig {
  double band_low = 7.0;
  double band_high = 32.0;
  int order = 5;
  LaplacianConfig laplacian;
  WindowConfig window;  // segmentation of continuous recordings
  int decimate = 0;     // 0/1 = off
};

struct RcspConfig {
  int d_pairs = 3;
  bool has_fixed = false;  // fixed (alpha, beta, gamma) instead of grid search
  double fixed_alpha = 0.0, fixed_beta = 0.0, fixed_gamma = 0.0;
  rcsp::RcspGrid grid = rcsp::RcspGrid::defaults();
  int inner_folds = 5;
  bool per_mask_grid = false;
};

struct MrmrConfig {
  bool enabled = true;
  int bins = 8;
  int k = 0;  // 0 = pick automatically on the all-channel model
};

struct CvConfig {
  int folds = 10;
};

struct SearchConfig {
  int iterations = 25;
  int population = 80;
  int archive_size = 80;
  double p_crossover = 0.75;
  double p_mutation = 0.7;
  int min_channels = 2;
  std::string admissible;  // optional 0/1 string over channels
};

struct PipelineConfig {
  DataConfig data;
  PreprocessConfig preprocess;
  RcspConfig rcsp;
  MrmrConfig mrmr;
  cls::EnsembleOptions ensemble;
  CvConfig cv;
  SearchConfig search;
  std::uint64_t seed = 1;
  std::string out_dir = "results";
  int threads = 1;
};

PipelineConfig parse_config(const std::string& json_text);
PipelineConfig load_config(const std::string& path);
std::string config_to_json(const PipelineConfig& cfg);

// Everything the evaluator needs, computed once per run: loaded and
// preprocessed data, shared CV folds, the per-subject RCSP triple, and the
// resolved mRmR prefix length.
struct PreparedData {
  eeg::ChannelLayout layout;
  eeg::TrialSet trials;
  std::vector<eeg::TrialSet> aux;
  std::vector<int> fold_ids;
  rcsp::RcspParams params;
  int mrmr_k = 0;  // 0 when mrmr disabled
  std::vector<rcsp::GridPoint> grid_report;
};

PreparedData prepare(const PipelineConfig& cfg);

struct EvalCache {
  std::map<std::string, std::pair<double, double>> values;
  long long hits = 0;
  long long misses = 0;
};

// Mask-conditioned objective: (1 - CV accuracy, channel count). Degenerate
// numerics on any fold yield (1.0, count) and a warning instead of failing
// the search.
std::pair<double, double> evaluate_mask(const ChannelMask& mask, const PreparedData& prep,
                                        const PipelineConfig& cfg, EvalCache& cache);

struct FrontRow {
  int layer = 1;
  double f1 = 0.0;
  double f2 = 0.0;
  ChannelMask mask;
  std::vector<std::string> channels;
};

struct RunResult {
  std::vector<FrontRow> front;
  std::vector<spea2::HistoryRow> history;
  rcsp::RcspParams params;
  int mrmr_k = 0;
  long long evaluations = 0;
  long long cache_hits = 0;
  double wall_seconds = 0.0;
  PipelineConfig config;
  eeg::ChannelLayout layout;
};

RunResult run_subject(const PipelineConfig& cfg);

// front.csv, history.csv, scalp.json, config.json, result.json under dir.
void export_result(const RunResult& result, const std::string& dir);

// Human-readable per-layer summary of an exported result directory.
std::string layers_text(const std::string& result_dir);

// W, eigenvalues and params as text (the eval-mask --dump-model payload).
std::string dump_model_text(const rcsp::RcspModel& model,
                            const eeg::ChannelLayout& layout);

struct MaskEvaluation {
  double f1 = 0.0;
  double f2 = 0.0;
  rcsp::RcspModel model;  // fit on all trials with the run's params
  eeg::ChannelLayout layout;
};

MaskEvaluation eval_mask_once(const PipelineConfig& cfg, const ChannelMask& mask);

}  // namespace pchan::pipe
