#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "layout.hpp"

namespace pchan::eeg {

// One motor-imagery trial: rows are channels, columns are samples.
struct EegTrial {
  Eigen::MatrixXd data;  // [n_channels x n_samples], microvolts
  int label = 0;         // class id, 1 or 2
  double fs = 0.0;       // Hz

  int n_channels() const { return static_cast<int>(data.rows()); }
  int n_samples() const { return static_cast<int>(data.cols()); }
};

struct TrialSet {
  ChannelLayout layout;
  std::vector<EegTrial> trials;
  std::string subject_id;
};

struct Marker {
  long long sample = 0;
  int label = 0;
};

struct ContinuousRecording {
  ChannelLayout layout;
  Eigen::MatrixXd data;  // [n_channels x n_samples]
  double fs = 0.0;
  std::vector<Marker> markers;
  std::string subject_id;

  int n_channels() const { return static_cast<int>(data.rows()); }
  long long n_samples() const { return data.cols(); }
};

// Throws DataError when an invariant is broken. `training` additionally
// requires both class labels to be present.
void validate(const TrialSet& ts, bool training = false);

// Manifest + one-CSV-per-trial format; see README for the schema.
TrialSet load_trialset(const std::string& manifest_path, const ChannelLayout& layout);
void save_trialset(const TrialSet& ts, const std::string& dir);

ContinuousRecording load_continuous(const std::string& manifest_path, const ChannelLayout& layout);

// Reads only the header fields of a manifest (either flavor) so callers can
// resolve a layout before the full load.
struct ManifestHeader {
  std::string subject_id;
  double fs = 0.0;
  int n_channels = 0;
  std::vector<std::string> channel_names;
  bool continuous = false;
};
ManifestHeader read_manifest_header(const std::string& manifest_path);

// Cuts one trial per marker: samples [m + round(start*fs), m + round((start+len)*fs)).
TrialSet segment(const ContinuousRecording& rec, double window_start_s, double window_len_s);

}  // namespace pchan::eeg
