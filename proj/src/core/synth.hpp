#pragma once

#include <cstdint>
#include <vector>

#include "eeg_data.hpp"

namespace pchan::eeg {

// Two-class dataset with known discriminative channels, for desk-scale
// verification of the full selection pipeline.
//
// Every channel carries unit-variance band-limited background noise
// (3-45 Hz). Channels listed in `informative` additionally carry a mu-band
// (8-12 Hz) oscillation of variance `snr` in one class only; entries
// alternate between boosting class 1 and class 2 so that recovering the full
// discriminative set requires all of them. Trials are emitted as a class-1
// block followed by a class-2 block. Bit-identical for identical arguments.
TrialSet synth_dataset(int n_channels, int n_trials_per_class, int n_samples, double fs,
                       const std::vector<int>& informative, double snr, std::uint64_t seed,
                       const std::string& subject_id = "synth");

}  // namespace pchan::eeg
