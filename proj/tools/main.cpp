#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <paretochan/paretochan.h>

namespace {

int report(pchan_status status) {
  if (status != PCHAN_OK) std::fprintf(stderr, "paretochan: %s\n", pchan_last_error());
  return static_cast<int>(status);
}

void print_and_free(char* text) {
  if (text != nullptr) {
    std::fputs(text, stdout);
    pchan_string_free(text);
  }
}

int cmd_run(const std::string& config_path, bool has_seed, std::uint64_t seed,
            const std::string& out_dir) {
  pchan_config* cfg = nullptr;
  pchan_status st = pchan_config_from_file(config_path.c_str(), &cfg);
  if (st != PCHAN_OK) return report(st);
  if (has_seed) pchan_config_set_seed(cfg, seed);
  if (!out_dir.empty()) pchan_config_set_out_dir(cfg, out_dir.c_str());

  pchan_result* result = nullptr;
  st = pchan_run(cfg, &result);
  if (st != PCHAN_OK) {
    pchan_config_destroy(cfg);
    return report(st);
  }

  double alpha = 0, beta = 0, gamma = 0;
  int d_pairs = 0, mrmr_k = 0;
  pchan_result_params(result, &alpha, &beta, &gamma, &d_pairs, &mrmr_k);
  std::printf("rcsp: alpha=%g beta=%g gamma=%g d_pairs=%d mrmr_k=%d\n", alpha, beta, gamma,
              d_pairs, mrmr_k);
  std::printf("evaluations=%lld cache_hits=%lld wall=%.1fs\n",
              pchan_result_evaluations(result), pchan_result_cache_hits(result),
              pchan_result_wall_seconds(result));

  const int n = pchan_result_front_size(result);
  std::printf("front entries: %d\n", n);
  std::printf("layer error channels electrodes\n");
  for (int i = 0; i < n; ++i) {
    int layer = 0;
    double f1 = 0, f2 = 0;
    char* names = nullptr;
    if (pchan_result_front_entry(result, i, &layer, &f1, &f2, nullptr, &names) != PCHAN_OK)
      continue;
    if (layer == 1) std::printf("%d %.4f %.0f %s\n", layer, f1, f2, names);
    pchan_string_free(names);
  }

  pchan_result_destroy(result);
  pchan_config_destroy(cfg);
  return 0;
}

int cmd_synth(const std::string& out_dir, int channels, int trials_per_class, int samples,
              double fs, const std::vector<int>& informative, double snr, std::uint64_t seed) {
  const pchan_status st =
      pchan_synth_dataset(out_dir.c_str(), channels, trials_per_class, samples, fs,
                          informative.data(), static_cast<int>(informative.size()), snr, seed);
  if (st != PCHAN_OK) return report(st);
  std::printf("wrote %d-channel dataset (%d trials/class) to %s\n", channels, trials_per_class,
              out_dir.c_str());
  return 0;
}

int cmd_eval_mask(const std::string& config_path, const std::string& mask, bool dump_model) {
  pchan_config* cfg = nullptr;
  pchan_status st = pchan_config_from_file(config_path.c_str(), &cfg);
  if (st != PCHAN_OK) return report(st);

  double f1 = 0, f2 = 0;
  char* model_text = nullptr;
  st = pchan_eval_mask(cfg, mask.c_str(), &f1, &f2, dump_model ? &model_text : nullptr);
  pchan_config_destroy(cfg);
  if (st != PCHAN_OK) return report(st);

  std::printf("error=%.6f channels=%.0f\n", f1, f2);
  print_and_free(model_text);
  return 0;
}

int cmd_dump_filter(int order, double low, double high, double fs) {
  char* text = nullptr;
  const pchan_status st = pchan_filter_text(order, low, high, fs, &text);
  if (st != PCHAN_OK) return report(st);
  print_and_free(text);
  return 0;
}

int cmd_layers(const std::string& result_dir) {
  char* text = nullptr;
  const pchan_status st = pchan_layers_text(result_dir.c_str(), &text);
  if (st != PCHAN_OK) return report(st);
  print_and_free(text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EEG channel selection by SPEA-II over a regularized-CSP ensemble pipeline"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(pchan_version()));

  std::string config_path, out_dir, mask, result_dir;
  std::uint64_t seed = 0;
  bool dump_model = false;

  CLI::App* run = app.add_subcommand("run", "full channel-selection run from a config file");
  run->add_option("--config", config_path, "pipeline config (JSON)")->required();
  CLI::Option* seed_opt = run->add_option("--seed", seed, "override the config seed");
  run->add_option("--out", out_dir, "override the output directory");

  int channels = 8, trials_per_class = 40, samples = 400;
  double fs = 100.0, snr = 1.0;
  std::uint64_t synth_seed = 1;
  std::vector<int> informative{1, 5};
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic two-class dataset");
  synth->add_option("--out", out_dir, "output directory")->required();
  synth->add_option("--channels", channels, "channel count");
  synth->add_option("--trials-per-class", trials_per_class, "trials per class");
  synth->add_option("--samples", samples, "samples per trial");
  synth->add_option("--fs", fs, "sampling rate in Hz");
  synth->add_option("--informative", informative, "discriminative channel indices");
  synth->add_option("--snr", snr, "discriminative component variance");
  synth->add_option("--seed", synth_seed, "generator seed");

  CLI::App* eval = app.add_subcommand("eval-mask", "score a single channel mask");
  eval->add_option("--config", config_path, "pipeline config (JSON)")->required();
  eval->add_option("--mask", mask, "channel mask as a 0/1 string")->required();
  eval->add_flag("--dump-model", dump_model, "print the fitted spatial filters");

  int order = 5;
  double low = 7.0, high = 32.0, filter_fs = 100.0;
  CLI::App* dump = app.add_subcommand("dump-filter", "print bandpass coefficients");
  dump->add_option("--order", order, "filter order");
  dump->add_option("--low", low, "low edge in Hz");
  dump->add_option("--high", high, "high edge in Hz");
  dump->add_option("--fs", filter_fs, "sampling rate in Hz");

  CLI::App* layers = app.add_subcommand("layers", "summarize an exported result directory");
  layers->add_option("--result", result_dir, "result directory with front.csv")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (run->parsed()) return cmd_run(config_path, seed_opt->count() > 0, seed, out_dir);
  if (synth->parsed())
    return cmd_synth(out_dir, channels, trials_per_class, samples, fs, informative, snr,
                     synth_seed);
  if (eval->parsed()) return cmd_eval_mask(config_path, mask, dump_model);
  if (dump->parsed()) return cmd_dump_filter(order, low, high, filter_fs);
  if (layers->parsed()) return cmd_layers(result_dir);
  return 2;
}
