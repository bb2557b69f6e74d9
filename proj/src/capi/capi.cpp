#include <paretochan/paretochan.h>

#include <cstring>
#include <new>
#include <string>
#include <vector>

#include "../core/dsp.hpp"
#include "../core/errors.hpp"
#include "../core/pipeline.hpp"
#include "../core/synth.hpp"

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

pchan_status fail(pchan_status code, const std::string& msg) {
  g_last_error = msg;
  return code;
}

template <typename Fn>
pchan_status guarded(Fn&& fn) {
  try {
    fn();
    return PCHAN_OK;
  } catch (const pchan::ConfigError& e) {
    return fail(PCHAN_ERR_CONFIG, e.what());
  } catch (const pchan::DataError& e) {
    return fail(PCHAN_ERR_DATA, e.what());
  } catch (const pchan::NumericError& e) {
    return fail(PCHAN_ERR_NUMERIC, e.what());
  } catch (const std::exception& e) {
    return fail(PCHAN_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(PCHAN_ERR_INTERNAL, "unknown error");
  }
}

}  // namespace

struct pchan_config {
  pchan::pipe::PipelineConfig cfg;
};

struct pchan_result {
  pchan::pipe::RunResult result;
};

extern "C" {

const char* pchan_version(void) { return "0.1.0"; }

const char* pchan_last_error(void) { return g_last_error.c_str(); }

void pchan_string_free(char* s) { delete[] s; }

pchan_status pchan_config_from_file(const char* path, pchan_config** out) {
  if (path == nullptr || out == nullptr)
    return fail(PCHAN_ERR_INTERNAL, "pchan_config_from_file: NULL argument");
  *out = nullptr;
  return guarded([&] { *out = new pchan_config{pchan::pipe::load_config(path)}; });
}

pchan_status pchan_config_from_json(const char* json_text, pchan_config** out) {
  if (json_text == nullptr || out == nullptr)
    return fail(PCHAN_ERR_INTERNAL, "pchan_config_from_json: NULL argument");
  *out = nullptr;
  return guarded([&] { *out = new pchan_config{pchan::pipe::parse_config(json_text)}; });
}

void pchan_config_destroy(pchan_config* cfg) { delete cfg; }

pchan_status pchan_config_set_seed(pchan_config* cfg, uint64_t seed) {
  if (cfg == nullptr) return fail(PCHAN_ERR_INTERNAL, "pchan_config_set_seed: NULL config");
  cfg->cfg.seed = seed;
  return PCHAN_OK;
}

pchan_status pchan_config_set_out_dir(pchan_config* cfg, const char* dir) {
  if (cfg == nullptr || dir == nullptr)
    return fail(PCHAN_ERR_INTERNAL, "pchan_config_set_out_dir: NULL argument");
  cfg->cfg.out_dir = dir;
  return PCHAN_OK;
}

pchan_status pchan_config_to_json(const pchan_config* cfg, char** out_json) {
  if (cfg == nullptr || out_json == nullptr)
    return fail(PCHAN_ERR_INTERNAL, "pchan_config_to_json: NULL argument");
  *out_json = nullptr;
  return guarded([&] { *out_json = dup_string(pchan::pipe::config_to_json(cfg->cfg)); });
}

pchan_status pchan_run(const pchan_config* cfg, pchan_result** out) {
  if (cfg == nullptr || out == nullptr)
    return fail(PCHAN_ERR_INTERNAL, "pchan_run: NULL argument");
  *out = nullptr;
  return guarded([&] { *out = new pchan_result{pchan::pipe::run_subject(cfg->cfg)}; });
}

void pchan_result_destroy(pchan_result* result) { delete result; }

int pchan_result_front_size(const pchan_result* result) {
  return result == nullptr ? 0 : static_cast<int>(result->result.front.size());
}

pchan_status pchan_result_front_entry(const pchan_result* result, int index, int* layer,
                                      double* error_rate, double* channel_count,
                                      char** mask_bits, char** channels) {
  if (result == nullptr) return fail(PCHAN_ERR_INTERNAL, "pchan_result_front_entry: NULL result");
  if (index < 0 || index >= static_cast<int>(result->result.front.size()))
    return fail(PCHAN_ERR_INTERNAL,
                "pchan_result_front_entry: index " + std::to_string(index) + " out of range");
  return guarded([&] {
    const pchan::pipe::FrontRow& row = result->result.front[static_cast<std::size_t>(index)];
    if (layer != nullptr) *layer = row.layer;
    if (error_rate != nullptr) *error_rate = row.f1;
    if (channel_count != nullptr) *channel_count = row.f2;
    if (mask_bits != nullptr) *mask_bits = dup_string(pchan::mask_to_string(row.mask));
    if (channels != nullptr) {
      std::string joined;
      for (std::size_t i = 0; i < row.channels.size(); ++i) {
        if (i > 0) joined += ' ';
        joined += row.channels[i];
      }
      *channels = dup_string(joined);
    }
  });
}

pchan_status pchan_result_params(const pchan_result* result, double* alpha, double* beta,
                                 double* gamma, int* d_pairs, int* mrmr_k) {
  if (result == nullptr) return fail(PCHAN_ERR_INTERNAL, "pchan_result_params: NULL result");
  if (alpha != nullptr) *alpha = result->result.params.alpha;
  if (beta != nullptr) *beta = result->result.params.beta;
  if (gamma != nullptr) *gamma = result->result.params.gamma;
  if (d_pairs != nullptr) *d_pairs = result->result.params.d_pairs;
  if (mrmr_k != nullptr) *mrmr_k = result->result.mrmr_k;
  return PCHAN_OK;
}

long long pchan_result_evaluations(const pchan_result* result) {
  return result == nullptr ? 0 : result->result.evaluations;
}

long long pchan_result_cache_hits(const pchan_result* result) {
  return result == nullptr ? 0 : result->result.cache_hits;
}

double pchan_result_wall_seconds(const pchan_result* result) {
  return result == nullptr ? 0.0 : result->result.wall_seconds;
}

pchan_status pchan_eval_mask(const pchan_config* cfg, const char* mask_bits, double* error_rate,
                             double* channel_count, char** model_text) {
  if (cfg == nullptr || mask_bits == nullptr)
    return fail(PCHAN_ERR_INTERNAL, "pchan_eval_mask: NULL argument");
  return guarded([&] {
    const pchan::ChannelMask mask = pchan::mask_from_string(mask_bits);
    const pchan::pipe::MaskEvaluation ev = pchan::pipe::eval_mask_once(cfg->cfg, mask);
    if (error_rate != nullptr) *error_rate = ev.f1;
    if (channel_count != nullptr) *channel_count = ev.f2;
    if (model_text != nullptr) {
      *model_text = dup_string(pchan::pipe::dump_model_text(ev.model, ev.layout));
    }
  });
}

pchan_status pchan_synth_dataset(const char* dir, int n_channels, int n_trials_per_class,
                                 int n_samples, double fs, const int* informative,
                                 int n_informative, double snr, uint64_t seed) {
  if (dir == nullptr) return fail(PCHAN_ERR_INTERNAL, "pchan_synth_dataset: NULL dir");
  if (n_informative < 0 || (n_informative > 0 && informative == nullptr))
    return fail(PCHAN_ERR_INTERNAL, "pchan_synth_dataset: bad informative array");
  return guarded([&] {
    const std::vector<int> inf(informative, informative + n_informative);
    const pchan::eeg::TrialSet ts =
        pchan::eeg::synth_dataset(n_channels, n_trials_per_class, n_samples, fs, inf, snr, seed);
    pchan::eeg::save_trialset(ts, dir);
    pchan::eeg::save_layout(ts.layout, std::string(dir) + "/layout.csv");
  });
}

pchan_status pchan_filter_text(int order, double low_hz, double high_hz, double fs,
                               char** out_text) {
  if (out_text == nullptr) return fail(PCHAN_ERR_INTERNAL, "pchan_filter_text: NULL out_text");
  *out_text = nullptr;
  return guarded([&] {
    const pchan::dsp::IirFilter f =
        pchan::dsp::design_bandpass_butterworth(order, low_hz, high_hz, fs);
    *out_text = dup_string(pchan::dsp::dump_coefficients(f));
  });
}

pchan_status pchan_layers_text(const char* result_dir, char** out_text) {
  if (result_dir == nullptr || out_text == nullptr)
    return fail(PCHAN_ERR_INTERNAL, "pchan_layers_text: NULL argument");
  *out_text = nullptr;
  return guarded([&] { *out_text = dup_string(pchan::pipe::layers_text(result_dir)); });
}

}  // extern "C"
