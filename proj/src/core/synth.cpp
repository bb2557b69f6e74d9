#include "synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "errors.hpp"
#include "rng.hpp"

namespace pchan::eeg {

namespace {
constexpr int kBackgroundTones = 30;
constexpr double kBackgroundLowHz = 3.0;
constexpr double kBackgroundHighHz = 45.0;
constexpr double kMuLowHz = 8.0;
constexpr double kMuHighHz = 12.0;
constexpr double kSensorNoiseAmp = 0.05;
}  // namespace

TrialSet synth_dataset(int n_channels, int n_trials_per_class, int n_samples, double fs,
                       const std::vector<int>& informative, double snr, std::uint64_t seed,
                       const std::string& subject_id) {
  if (n_channels < 1 || n_trials_per_class < 1 || n_samples < 2)
    throw ConfigError("synth_dataset: channel, trial and sample counts must be positive");
  if (fs <= 0.0) throw ConfigError("synth_dataset: fs must be positive");
  if (informative.empty())
    throw ConfigError("synth_dataset: informative channel set must not be empty");
  if (snr <= 0.0) throw ConfigError("synth_dataset: snr must be > 0");
  std::set<int> inf_sorted;
  for (int c : informative) {
    if (c < 0 || c >= n_channels)
      throw ConfigError("synth_dataset: informative channel " + std::to_string(c) +
                        " outside [0, " + std::to_string(n_channels) + ")");
    inf_sorted.insert(c);
  }

  // role[c] = class whose trials carry the mu boost on channel c (0 = none)
  std::vector<int> role(n_channels, 0);
  {
    int j = 0;
    for (int c : inf_sorted) role[c] = (j++ % 2 == 0) ? 1 : 2;
  }

  std::mt19937_64 rng = make_rng(seed, 0x5e9);
  std::uniform_real_distribution<double> uphase(0.0, 2.0 * M_PI);
  std::uniform_real_distribution<double> ubg(kBackgroundLowHz, kBackgroundHighHz);
  std::uniform_real_distribution<double> umu(kMuLowHz, kMuHighHz);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const double bg_amp = std::sqrt(2.0 / kBackgroundTones);
  const double mu_amp = std::sqrt(2.0 * snr);

  TrialSet ts;
  ts.layout = ring_layout(n_channels);
  ts.subject_id = subject_id;
  ts.trials.reserve(2 * static_cast<std::size_t>(n_trials_per_class));

  for (int cls = 1; cls <= 2; ++cls) {
    for (int k = 0; k < n_trials_per_class; ++k) {
      EegTrial t;
      t.label = cls;
      t.fs = fs;
      t.data.setZero(n_channels, n_samples);
      for (int c = 0; c < n_channels; ++c) {
        for (int tone = 0; tone < kBackgroundTones; ++tone) {
          const double f = ubg(rng);
          const double ph = uphase(rng);
          const double w = 2.0 * M_PI * f / fs;
          for (int s = 0; s < n_samples; ++s) t.data(c, s) += bg_amp * std::sin(w * s + ph);
        }
        if (role[c] == cls) {
          const double f = umu(rng);
          const double ph = uphase(rng);
          const double w = 2.0 * M_PI * f / fs;
          for (int s = 0; s < n_samples; ++s) t.data(c, s) += mu_amp * std::sin(w * s + ph);
        }
        for (int s = 0; s < n_samples; ++s) t.data(c, s) += kSensorNoiseAmp * gauss(rng);
      }
      ts.trials.push_back(std::move(t));
    }
  }
  validate(ts, true);
  return ts;
}

}  // namespace pchan::eeg
