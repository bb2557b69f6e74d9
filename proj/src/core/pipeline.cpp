#include "pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "dsp.hpp"
#include "errors.hpp"
#include "laplacian.hpp"
#include "log.hpp"
#include "mrmr.hpp"
#include "rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace pchan::pipe {

namespace {

// Seed streams for the run's stochastic components.
constexpr std::uint64_t kStreamCvFolds = 0x10;
constexpr std::uint64_t kStreamGrid = 0x11;
constexpr std::uint64_t kStreamChooseK = 0x12;

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) {
      if (it.key() == a) {
        ok = true;
        break;
      }
    }
    if (!ok) throw ConfigError("unknown config key '" + where + "." + it.key() + "'");
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config field '" + where + "." + key + "': " + e.what());
  }
}

std::vector<double> grid_axis(const json& j, const char* key, std::vector<double> fallback,
                              const std::string& where) {
  auto v = get_or<std::vector<double>>(j, key, std::move(fallback), where);
  if (v.empty()) throw ConfigError("config field '" + where + "." + key + "' must be nonempty");
  return v;
}

}  // namespace

PipelineConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j, "config",
             {"data", "preprocess", "rcsp", "mrmr", "ensemble", "cv", "spea2", "seed",
              "out_dir", "threads"});

  PipelineConfig cfg;
  if (j.contains("data")) {
    const json& d = j.at("data");
    check_keys(d, "data", {"manifest", "layout", "aux_manifests"});
    cfg.data.manifest = get_or<std::string>(d, "manifest", "", "data");
    cfg.data.layout = get_or<std::string>(d, "layout", "", "data");
    cfg.data.aux_manifests =
        get_or<std::vector<std::string>>(d, "aux_manifests", {}, "data");
  }
  if (j.contains("preprocess")) {
    const json& p = j.at("preprocess");
    check_keys(p, "preprocess", {"band", "order", "laplacian", "window", "decimate"});
    if (p.contains("band")) {
      const auto band = get_or<std::vector<double>>(p, "band", {}, "preprocess");
      if (band.size() != 2) throw ConfigError("preprocess.band must be [low_hz, high_hz]");
      cfg.preprocess.band_low = band[0];
      cfg.preprocess.band_high = band[1];
    }
    cfg.preprocess.order = get_or<int>(p, "order", cfg.preprocess.order, "preprocess");
    if (p.contains("laplacian")) {
      const json& l = p.at("laplacian");
      check_keys(l, "preprocess.laplacian", {"enabled", "k"});
      cfg.preprocess.laplacian.enabled =
          get_or<bool>(l, "enabled", cfg.preprocess.laplacian.enabled, "preprocess.laplacian");
      cfg.preprocess.laplacian.k =
          get_or<int>(l, "k", cfg.preprocess.laplacian.k, "preprocess.laplacian");
    }
    if (p.contains("window")) {
      const json& w = p.at("window");
      check_keys(w, "preprocess.window", {"start_s", "len_s"});
      cfg.preprocess.window.start_s =
          get_or<double>(w, "start_s", cfg.preprocess.window.start_s, "preprocess.window");
      cfg.preprocess.window.len_s =
          get_or<double>(w, "len_s", cfg.preprocess.window.len_s, "preprocess.window");
    }
    cfg.preprocess.decimate = get_or<int>(p, "decimate", cfg.preprocess.decimate, "preprocess");
  }
  if (j.contains("rcsp")) {
    const json& r = j.at("rcsp");
    check_keys(r, "rcsp", {"d_pairs", "fixed", "grid", "inner_folds", "per_mask_grid"});
    cfg.rcsp.d_pairs = get_or<int>(r, "d_pairs", cfg.rcsp.d_pairs, "rcsp");
    cfg.rcsp.inner_folds = get_or<int>(r, "inner_folds", cfg.rcsp.inner_folds, "rcsp");
    cfg.rcsp.per_mask_grid = get_or<bool>(r, "per_mask_grid", cfg.rcsp.per_mask_grid, "rcsp");
    if (r.contains("fixed")) {
      const json& f = r.at("fixed");
      check_keys(f, "rcsp.fixed", {"alpha", "beta", "gamma"});
      cfg.rcsp.has_fixed = true;
      cfg.rcsp.fixed_alpha = get_or<double>(f, "alpha", 0.0, "rcsp.fixed");
      cfg.rcsp.fixed_beta = get_or<double>(f, "beta", 0.0, "rcsp.fixed");
      cfg.rcsp.fixed_gamma = get_or<double>(f, "gamma", 0.0, "rcsp.fixed");
    }
    if (r.contains("grid")) {
      const json& g = r.at("grid");
      check_keys(g, "rcsp.grid", {"alphas", "betas", "gammas"});
      cfg.rcsp.grid.alphas = grid_axis(g, "alphas", cfg.rcsp.grid.alphas, "rcsp.grid");
      cfg.rcsp.grid.betas = grid_axis(g, "betas", cfg.rcsp.grid.betas, "rcsp.grid");
      cfg.rcsp.grid.gammas = grid_axis(g, "gammas", cfg.rcsp.grid.gammas, "rcsp.grid");
    }
  }
  if (j.contains("mrmr")) {
    const json& m = j.at("mrmr");
    check_keys(m, "mrmr", {"enabled", "bins", "k"});
    cfg.mrmr.enabled = get_or<bool>(m, "enabled", cfg.mrmr.enabled, "mrmr");
    cfg.mrmr.bins = get_or<int>(m, "bins", cfg.mrmr.bins, "mrmr");
    cfg.mrmr.k = get_or<int>(m, "k", cfg.mrmr.k, "mrmr");
  }
  if (j.contains("ensemble")) {
    const json& e = j.at("ensemble");
    check_keys(e, "ensemble", {"svm_c", "poly_degree", "poly_coef0", "knn_k"});
    cfg.ensemble.svm_c = get_or<double>(e, "svm_c", cfg.ensemble.svm_c, "ensemble");
    cfg.ensemble.poly_degree = get_or<int>(e, "poly_degree", cfg.ensemble.poly_degree, "ensemble");
    cfg.ensemble.poly_coef0 = get_or<double>(e, "poly_coef0", cfg.ensemble.poly_coef0, "ensemble");
    cfg.ensemble.knn_k = get_or<int>(e, "knn_k", cfg.ensemble.knn_k, "ensemble");
  }
  if (j.contains("cv")) {
    const json& c = j.at("cv");
    check_keys(c, "cv", {"folds"});
    cfg.cv.folds = get_or<int>(c, "folds", cfg.cv.folds, "cv");
  }
  if (j.contains("spea2")) {
    const json& s = j.at("spea2");
    check_keys(s, "spea2",
               {"iterations", "population", "archive_size", "p_crossover", "p_mutation",
                "min_channels", "admissible"});
    cfg.search.iterations = get_or<int>(s, "iterations", cfg.search.iterations, "spea2");
    cfg.search.population = get_or<int>(s, "population", cfg.search.population, "spea2");
    cfg.search.archive_size = get_or<int>(s, "archive_size", cfg.search.archive_size, "spea2");
    cfg.search.p_crossover = get_or<double>(s, "p_crossover", cfg.search.p_crossover, "spea2");
    cfg.search.p_mutation = get_or<double>(s, "p_mutation", cfg.search.p_mutation, "spea2");
    cfg.search.min_channels = get_or<int>(s, "min_channels", cfg.search.min_channels, "spea2");
    cfg.search.admissible = get_or<std::string>(s, "admissible", "", "spea2");
  }
  cfg.seed = get_or<std::uint64_t>(j, "seed", cfg.seed, "config");
  cfg.out_dir = get_or<std::string>(j, "out_dir", cfg.out_dir, "config");
  cfg.threads = get_or<int>(j, "threads", cfg.threads, "config");

  if (cfg.mrmr.bins < 2) throw ConfigError("mrmr.bins must be >= 2");
  if (cfg.cv.folds < 2) throw ConfigError("cv.folds must be >= 2");
  if (cfg.rcsp.inner_folds < 2) throw ConfigError("rcsp.inner_folds must be >= 2");
  if (cfg.rcsp.d_pairs < 1) throw ConfigError("rcsp.d_pairs must be >= 1");
  if (cfg.threads < 0) throw ConfigError("threads must be >= 0");
  return cfg;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const PipelineConfig& cfg) {
  json j;
  j["data"]["manifest"] = cfg.data.manifest;
  j["data"]["layout"] = cfg.data.layout;
  j["data"]["aux_manifests"] = cfg.data.aux_manifests;
  j["preprocess"]["band"] = {cfg.preprocess.band_low, cfg.preprocess.band_high};
  j["preprocess"]["order"] = cfg.preprocess.order;
  j["preprocess"]["laplacian"]["enabled"] = cfg.preprocess.laplacian.enabled;
  j["preprocess"]["laplacian"]["k"] = cfg.preprocess.laplacian.k;
  j["preprocess"]["window"]["start_s"] = cfg.preprocess.window.start_s;
  j["preprocess"]["window"]["len_s"] = cfg.preprocess.window.len_s;
  j["preprocess"]["decimate"] = cfg.preprocess.decimate;
  j["rcsp"]["d_pairs"] = cfg.rcsp.d_pairs;
  j["rcsp"]["inner_folds"] = cfg.rcsp.inner_folds;
  j["rcsp"]["per_mask_grid"] = cfg.rcsp.per_mask_grid;
  if (cfg.rcsp.has_fixed) {
    j["rcsp"]["fixed"]["alpha"] = cfg.rcsp.fixed_alpha;
    j["rcsp"]["fixed"]["beta"] = cfg.rcsp.fixed_beta;
    j["rcsp"]["fixed"]["gamma"] = cfg.rcsp.fixed_gamma;
  } else {
    j["rcsp"]["grid"]["alphas"] = cfg.rcsp.grid.alphas;
    j["rcsp"]["grid"]["betas"] = cfg.rcsp.grid.betas;
    j["rcsp"]["grid"]["gammas"] = cfg.rcsp.grid.gammas;
  }
  j["mrmr"]["enabled"] = cfg.mrmr.enabled;
  j["mrmr"]["bins"] = cfg.mrmr.bins;
  j["mrmr"]["k"] = cfg.mrmr.k;
  j["ensemble"]["svm_c"] = cfg.ensemble.svm_c;
  j["ensemble"]["poly_degree"] = cfg.ensemble.poly_degree;
  j["ensemble"]["poly_coef0"] = cfg.ensemble.poly_coef0;
  j["ensemble"]["knn_k"] = cfg.ensemble.knn_k;
  j["cv"]["folds"] = cfg.cv.folds;
  j["spea2"]["iterations"] = cfg.search.iterations;
  j["spea2"]["population"] = cfg.search.population;
  j["spea2"]["archive_size"] = cfg.search.archive_size;
  j["spea2"]["p_crossover"] = cfg.search.p_crossover;
  j["spea2"]["p_mutation"] = cfg.search.p_mutation;
  j["spea2"]["min_channels"] = cfg.search.min_channels;
  if (!cfg.search.admissible.empty()) j["spea2"]["admissible"] = cfg.search.admissible;
  j["seed"] = cfg.seed;
  j["out_dir"] = cfg.out_dir;
  j["threads"] = cfg.threads;
  return j.dump(2) + "\n";
}

namespace {

eeg::ChannelLayout resolve_layout(const PipelineConfig& cfg) {
  if (!cfg.data.layout.empty()) return eeg::load_layout(cfg.data.layout);
  if (cfg.data.manifest.empty()) throw ConfigError("data.manifest is required");

  const fs::path side = fs::path(cfg.data.manifest).parent_path() / "layout.csv";
  if (fs::exists(side)) return eeg::load_layout(side.string());

  const eeg::ManifestHeader header = eeg::read_manifest_header(cfg.data.manifest);
  eeg::ChannelLayout builtin = eeg::builtin_layout_59();
  if (header.channel_names == builtin.names()) return builtin;
  throw ConfigError(
      "no channel layout found: set data.layout, place layout.csv next to the manifest, or "
      "use the built-in 59-channel montage names");
}

eeg::TrialSet load_any(const std::string& manifest, const eeg::ChannelLayout& layout,
                       const PipelineConfig& cfg) {
  const eeg::ManifestHeader header = eeg::read_manifest_header(manifest);
  eeg::TrialSet ts;
  if (header.continuous) {
    eeg::ContinuousRecording rec = eeg::load_continuous(manifest, layout);
    if (cfg.preprocess.decimate >= 2) {
      rec = dsp::decimate_cheby2(rec, cfg.preprocess.decimate);
    }
    ts = eeg::segment(rec, cfg.preprocess.window.start_s, cfg.preprocess.window.len_s);
  } else {
    if (cfg.preprocess.decimate >= 2) {
      throw ConfigError("preprocess.decimate applies to continuous recordings only");
    }
    ts = eeg::load_trialset(manifest, layout);
  }
  eeg::validate(ts, /*training=*/true);
  return ts;
}

void preprocess_in_place(eeg::TrialSet& ts, const PipelineConfig& cfg,
                         const dsp::LaplacianOperator* lap) {
  if (ts.trials.empty()) return;
  const dsp::IirFilter band = dsp::design_bandpass_butterworth(
      cfg.preprocess.order, cfg.preprocess.band_low, cfg.preprocess.band_high,
      ts.trials.front().fs);
  for (eeg::EegTrial& t : ts.trials) {
    t.data = dsp::filtfilt(band, t.data);
    if (lap != nullptr) t.data = dsp::apply_spatial(*lap, t.data);
  }
}

eeg::TrialSet restrict_trials(const eeg::TrialSet& ts, const ChannelMask& mask) {
  const std::vector<int> idx = mask_indices(mask);
  eeg::TrialSet out;
  out.subject_id = ts.subject_id;
  out.layout = ts.layout;  // full layout retained; trials carry masked rows
  out.trials.reserve(ts.trials.size());
  for (const eeg::EegTrial& t : ts.trials) {
    eeg::EegTrial r;
    r.label = t.label;
    r.fs = t.fs;
    r.data.resize(static_cast<Eigen::Index>(idx.size()), t.data.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      r.data.row(static_cast<Eigen::Index>(i)) = t.data.row(idx[i]);
    }
    out.trials.push_back(std::move(r));
  }
  return out;
}

}  // namespace

PreparedData prepare(const PipelineConfig& cfg) {
  PreparedData prep;
  prep.layout = resolve_layout(cfg);
  prep.trials = load_any(cfg.data.manifest, prep.layout, cfg);

  dsp::LaplacianOperator lap;
  const dsp::LaplacianOperator* lap_ptr = nullptr;
  if (cfg.preprocess.laplacian.enabled) {
    lap = dsp::build_laplacian(prep.layout, cfg.preprocess.laplacian.k);
    lap_ptr = &lap;
  }
  preprocess_in_place(prep.trials, cfg, lap_ptr);

  for (const std::string& aux_path : cfg.data.aux_manifests) {
    eeg::TrialSet aux = load_any(aux_path, prep.layout, cfg);
    preprocess_in_place(aux, cfg, lap_ptr);
    prep.aux.push_back(std::move(aux));
  }

  std::vector<int> labels;
  labels.reserve(prep.trials.trials.size());
  for (const eeg::EegTrial& t : prep.trials.trials) labels.push_back(t.label);
  prep.fold_ids = cls::stratified_folds(labels, cfg.cv.folds, mix_seed(cfg.seed, kStreamCvFolds));

  const int n_ch = prep.layout.size();
  const ChannelMask all = full_mask(static_cast<std::size_t>(n_ch));
  rcsp::GenericCov generic_all;
  if (!prep.aux.empty()) generic_all = rcsp::build_generic(prep.aux, all);
  const rcsp::GenericCov* gen_ptr = prep.aux.empty() ? nullptr : &generic_all;

  if (cfg.rcsp.has_fixed) {
    if (cfg.rcsp.fixed_beta > 0.0 && prep.aux.empty()) {
      throw ConfigError("rcsp.fixed.beta > 0 requires data.aux_manifests");
    }
    prep.params.alpha = cfg.rcsp.fixed_alpha;
    prep.params.beta = cfg.rcsp.fixed_beta;
    prep.params.gamma = cfg.rcsp.fixed_gamma;
    prep.params.d_pairs = cfg.rcsp.d_pairs;
  } else {
    prep.params = rcsp::grid_search_params(prep.trials, gen_ptr, cfg.rcsp.grid,
                                           cfg.rcsp.d_pairs, cfg.rcsp.inner_folds,
                                           mix_seed(cfg.seed, kStreamGrid), cfg.ensemble,
                                           &prep.grid_report);
    log_info("grid search selected alpha=" + std::to_string(prep.params.alpha) +
             " beta=" + std::to_string(prep.params.beta) +
             " gamma=" + std::to_string(prep.params.gamma));
  }

  if (cfg.mrmr.enabled) {
    if (cfg.mrmr.k > 0) {
      prep.mrmr_k = cfg.mrmr.k;
    } else {
      const rcsp::CovPair cov = rcsp::covariance(prep.trials, all);
      rcsp::RcspParams p = prep.params;
      p.d_pairs = std::min(cfg.rcsp.d_pairs, n_ch / 2);
      const rcsp::RcspModel model = rcsp::fit_rcsp(cov, gen_ptr, p);
      const FeatureMatrix fm = rcsp::project_features(model, prep.trials);
      prep.mrmr_k = fsel::choose_k(fm, cfg.mrmr.bins, cfg.cv.folds,
                                   mix_seed(cfg.seed, kStreamChooseK), cfg.ensemble);
      log_info("mrmr prefix length k=" + std::to_string(prep.mrmr_k));
    }
  }
  return prep;
}

std::pair<double, double> evaluate_mask(const ChannelMask& mask, const PreparedData& prep,
                                        const PipelineConfig& cfg, EvalCache& cache) {
  const std::string key = mask_to_string(mask);
  if (auto it = cache.values.find(key); it != cache.values.end()) {
    ++cache.hits;
    return it->second;
  }

  const int m = popcount(mask);
  if (m < 2) throw ConfigError("mask " + key + " selects fewer than 2 channels");
  if (mask.size() != static_cast<std::size_t>(prep.layout.size())) {
    throw ConfigError("mask length " + std::to_string(mask.size()) +
                      " does not match channel count " + std::to_string(prep.layout.size()));
  }

  const eeg::TrialSet restricted = restrict_trials(prep.trials, mask);
  rcsp::GenericCov generic;
  const rcsp::GenericCov* gen_ptr = nullptr;
  const double count_obj = static_cast<double>(m);

  auto done = [&](double f1) {
    const auto obj = std::make_pair(f1, count_obj);
    cache.values.emplace(key, obj);
    ++cache.misses;
    return obj;
  };

  try {
    if (!prep.aux.empty()) {
      generic = rcsp::build_generic(prep.aux, mask);
      gen_ptr = &generic;
    }

    rcsp::RcspParams params = prep.params;
    params.d_pairs = std::max(1, std::min(cfg.rcsp.d_pairs, m / 2));
    if (cfg.rcsp.per_mask_grid && !cfg.rcsp.has_fixed) {
      params = rcsp::grid_search_params(restricted, gen_ptr, cfg.rcsp.grid, params.d_pairs,
                                        cfg.rcsp.inner_folds, mix_seed(cfg.seed, kStreamGrid),
                                        cfg.ensemble);
    }

    const int n_folds = *std::max_element(prep.fold_ids.begin(), prep.fold_ids.end()) + 1;
    double acc_sum = 0.0;
    int folds_done = 0;
    for (int f = 0; f < n_folds; ++f) {
      eeg::TrialSet train, test;
      train.layout = restricted.layout;
      test.layout = restricted.layout;
      for (std::size_t i = 0; i < restricted.trials.size(); ++i) {
        (prep.fold_ids[i] == f ? test : train).trials.push_back(restricted.trials[i]);
      }
      if (test.trials.empty()) continue;

      const rcsp::CovPair cov = rcsp::covariance(train, full_mask(static_cast<std::size_t>(m)));
      const rcsp::RcspModel model = rcsp::fit_rcsp(cov, gen_ptr, params);
      FeatureMatrix ftr = rcsp::project_features(model, train);

      std::vector<int> selected;
      if (cfg.mrmr.enabled && prep.mrmr_k > 0 &&
          prep.mrmr_k < static_cast<int>(ftr.x.cols())) {
        selected = fsel::mrmr_select(ftr, prep.mrmr_k, cfg.mrmr.bins).selected;
        FeatureMatrix sub;
        sub.labels = ftr.labels;
        sub.x.resize(ftr.x.rows(), static_cast<Eigen::Index>(selected.size()));
        for (std::size_t c = 0; c < selected.size(); ++c) {
          sub.x.col(static_cast<Eigen::Index>(c)) = ftr.x.col(selected[c]);
        }
        ftr = std::move(sub);
      }

      const cls::TrainedEnsemble ens = cls::train_ensemble(ftr, cfg.ensemble);
      int correct = 0;
      for (const eeg::EegTrial& t : test.trials) {
        Eigen::VectorXd fv = rcsp::project_features(model, t);
        if (!selected.empty()) {
          Eigen::VectorXd sub(static_cast<Eigen::Index>(selected.size()));
          for (std::size_t c = 0; c < selected.size(); ++c) sub(static_cast<Eigen::Index>(c)) = fv(selected[c]);
          fv = std::move(sub);
        }
        if (ens.predict(fv) == t.label) ++correct;
      }
      acc_sum += static_cast<double>(correct) / test.trials.size();
      ++folds_done;
    }
    const double acc = folds_done > 0 ? acc_sum / folds_done : 0.0;
    return done(1.0 - acc);
  } catch (const NumericError& e) {
    log_warn("mask " + key + ": " + e.what() + "; scoring as chance-floor");
    return done(1.0);
  }
}

RunResult run_subject(const PipelineConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const PreparedData prep = prepare(cfg);

  spea2::Spea2Config sc;
  sc.iterations = cfg.search.iterations;
  sc.population = cfg.search.population;
  sc.archive_size = cfg.search.archive_size;
  sc.p_crossover = cfg.search.p_crossover;
  sc.p_mutation = cfg.search.p_mutation;
  sc.min_channels = std::max(2, cfg.search.min_channels);
  sc.n_bits = prep.layout.size();
  sc.seed = cfg.seed;
  if (!cfg.search.admissible.empty()) {
    sc.admissible = mask_from_string(cfg.search.admissible);
  }

  EvalCache cache;
  const spea2::RunResult sr = spea2::run(
      [&](const ChannelMask& mask) { return evaluate_mask(mask, prep, cfg, cache); }, sc);

  RunResult result;
  result.history = sr.history;
  result.params = prep.params;
  result.mrmr_k = prep.mrmr_k;
  result.evaluations = sr.stats.evaluations;
  result.cache_hits = sr.stats.cache_hits;
  result.config = cfg;
  result.layout = prep.layout;
  for (const spea2::ParetoFront& front : sr.layers) {
    for (const spea2::FrontEntry& e : front.entries) {
      FrontRow row;
      row.layer = front.layer;
      row.f1 = e.f1;
      row.f2 = e.f2;
      row.mask = e.mask;
      for (int i : mask_indices(e.mask)) row.channels.push_back(prep.layout.at(i).name);
      result.front.push_back(std::move(row));
    }
  }

  // Layer-quality check: deeper layers are expected to classify worse on
  // average; violations are reported, not fatal.
  double sum1 = 0.0, sum2 = 0.0;
  int c1 = 0, c2 = 0;
  for (const FrontRow& r : result.front) {
    if (r.layer == 1) {
      sum1 += 1.0 - r.f1;
      ++c1;
    } else if (r.layer == 2) {
      sum2 += 1.0 - r.f1;
      ++c2;
    }
  }
  if (c1 > 0 && c2 > 0 && sum1 / c1 < sum2 / c2) {
    log_warn("pareto layering anomaly: layer-1 mean accuracy " + std::to_string(sum1 / c1) +
             " below layer-2 mean " + std::to_string(sum2 / c2));
  }

  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!cfg.out_dir.empty()) export_result(result, cfg.out_dir);
  return result;
}

namespace {

std::string fmt_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out << content;
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

}  // namespace

void export_result(const RunResult& result, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory '" + dir + "': " + ec.message());

  std::string front = "layer,f1,f2,mask,channels\n";
  for (const FrontRow& r : result.front) {
    front += std::to_string(r.layer) + "," + fmt_g(r.f1) + "," + fmt_g(r.f2) + "," +
             mask_to_string(r.mask) + ",";
    for (std::size_t i = 0; i < r.channels.size(); ++i) {
      if (i > 0) front += ' ';
      front += r.channels[i];
    }
    front += '\n';
  }
  write_file(fs::path(dir) / "front.csv", front);

  std::string hist = "iteration,f2,best_f1\n";
  for (const spea2::HistoryRow& h : result.history) {
    hist += std::to_string(h.iteration) + "," + fmt_g(h.f2) + "," + fmt_g(h.best_f1) + "\n";
  }
  write_file(fs::path(dir) / "history.csv", hist);

  json scalp;
  scalp["layout"] = json::array();
  for (const eeg::Channel& ch : result.layout.channels()) {
    scalp["layout"].push_back({{"name", ch.name}, {"x", ch.x}, {"y", ch.y}});
  }
  scalp["entries"] = json::array();
  for (const FrontRow& r : result.front) {
    scalp["entries"].push_back({{"layer", r.layer},
                                {"f1", r.f1},
                                {"f2", r.f2},
                                {"mask", mask_to_string(r.mask)},
                                {"channels", r.channels}});
  }
  write_file(fs::path(dir) / "scalp.json", scalp.dump(2) + "\n");

  write_file(fs::path(dir) / "config.json", config_to_json(result.config));

  json res;
  res["params"] = {{"alpha", result.params.alpha},
                   {"beta", result.params.beta},
                   {"gamma", result.params.gamma},
                   {"d_pairs", result.params.d_pairs}};
  res["mrmr_k"] = result.mrmr_k;
  res["evaluations"] = result.evaluations;
  res["cache_hits"] = result.cache_hits;
  res["front_size"] = result.front.size();
  int n_layers = 0;
  for (const FrontRow& r : result.front) n_layers = std::max(n_layers, r.layer);
  res["layers"] = n_layers;
  res["wall_seconds"] = result.wall_seconds;
  write_file(fs::path(dir) / "result.json", res.dump(2) + "\n");
}

std::string layers_text(const std::string& result_dir) {
  const fs::path path = fs::path(result_dir) / "front.csv";
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");

  struct Agg {
    int count = 0;
    double err_sum = 0.0, ch_sum = 0.0, best_err = 1e300;
  };
  std::map<int, Agg> layers;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string layer_s, f1_s, f2_s;
    std::getline(ss, layer_s, ',');
    std::getline(ss, f1_s, ',');
    std::getline(ss, f2_s, ',');
    try {
      Agg& a = layers[std::stoi(layer_s)];
      const double f1 = std::stod(f1_s);
      ++a.count;
      a.err_sum += f1;
      a.ch_sum += std::stod(f2_s);
      a.best_err = std::min(a.best_err, f1);
    } catch (const std::exception&) {
      throw DataError("malformed row in '" + path.string() + "': " + line);
    }
  }
  if (layers.empty()) throw DataError("'" + path.string() + "' contains no front entries");

  std::string text = "layer entries mean_error mean_channels best_error\n";
  char buf[160];
  for (const auto& [layer, a] : layers) {
    std::snprintf(buf, sizeof(buf), "%d %d %.4f %.2f %.4f\n", layer, a.count,
                  a.err_sum / a.count, a.ch_sum / a.count, a.best_err);
    text += buf;
  }
  return text;
}

std::string dump_model_text(const rcsp::RcspModel& model, const eeg::ChannelLayout& layout) {
  std::string text;
  text += "alpha " + fmt_g(model.params.alpha) + "\n";
  text += "beta " + fmt_g(model.params.beta) + "\n";
  text += "gamma " + fmt_g(model.params.gamma) + "\n";
  text += "d_pairs " + std::to_string(model.params.d_pairs) + "\n";
  text += "eigenvalues";
  for (Eigen::Index i = 0; i < model.eigenvalues.size(); ++i) {
    text += " " + fmt_g(model.eigenvalues(i));
  }
  text += "\n";

  std::vector<std::string> names;
  if (!model.channel_mask.empty()) {
    for (int i : mask_indices(model.channel_mask)) names.push_back(layout.at(i).name);
  } else {
    for (Eigen::Index r = 0; r < model.w.rows(); ++r) {
      names.push_back("ch" + std::to_string(r));
    }
  }
  text += "# filter matrix W, one row per channel\n";
  for (Eigen::Index r = 0; r < model.w.rows(); ++r) {
    text += names[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < model.w.cols(); ++c) text += " " + fmt_g(model.w(r, c));
    text += "\n";
  }
  return text;
}

MaskEvaluation eval_mask_once(const PipelineConfig& cfg, const ChannelMask& mask) {
  const PreparedData prep = prepare(cfg);
  if (mask.size() != static_cast<std::size_t>(prep.layout.size())) {
    throw ConfigError("mask length " + std::to_string(mask.size()) +
                      " does not match channel count " + std::to_string(prep.layout.size()));
  }
  EvalCache cache;
  MaskEvaluation ev;
  std::tie(ev.f1, ev.f2) = evaluate_mask(mask, prep, cfg, cache);

  const eeg::TrialSet restricted = restrict_trials(prep.trials, mask);
  rcsp::GenericCov generic;
  const rcsp::GenericCov* gen_ptr = nullptr;
  if (!prep.aux.empty()) {
    generic = rcsp::build_generic(prep.aux, mask);
    gen_ptr = &generic;
  }
  const int m = popcount(mask);
  rcsp::RcspParams params = prep.params;
  params.d_pairs = std::max(1, std::min(cfg.rcsp.d_pairs, m / 2));
  const rcsp::CovPair cov =
      rcsp::covariance(restricted, full_mask(static_cast<std::size_t>(m)));
  ev.model = rcsp::fit_rcsp(cov, gen_ptr, params);
  ev.model.channel_mask = mask;
  ev.layout = prep.layout;
  return ev;
}

}  // namespace pipe
