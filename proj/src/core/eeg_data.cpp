#include "eeg_data.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace pchan::eeg {

void validate(const TrialSet& ts, bool training) {
  const int n_ch = ts.layout.size();
  int n_samples = -1;
  double fs = -1.0;
  std::set<int> labels;
  for (std::size_t k = 0; k < ts.trials.size(); ++k) {
    const auto& t = ts.trials[k];
    if (t.n_channels() != n_ch)
      throw DataError("trial " + std::to_string(k) + " has " + std::to_string(t.n_channels()) +
                      " channels, layout has " + std::to_string(n_ch));
    if (t.label != 1 && t.label != 2)
      throw DataError("trial " + std::to_string(k) + " has label " + std::to_string(t.label) +
                      "; this is a two-class pipeline, labels must be 1 or 2");
    if (t.fs <= 0.0) throw DataError("trial " + std::to_string(k) + " has non-positive fs");
    if (!t.data.allFinite())
      throw DataError("trial " + std::to_string(k) + " contains non-finite samples");
    if (n_samples < 0) {
      n_samples = t.n_samples();
      fs = t.fs;
    } else {
      if (t.n_samples() != n_samples)
        throw DataError("trial " + std::to_string(k) + " has " + std::to_string(t.n_samples()) +
                        " samples, expected " + std::to_string(n_samples));
      if (t.fs != fs) throw DataError("trial " + std::to_string(k) + " has mismatched fs");
    }
    labels.insert(t.label);
  }
  if (training && (labels.count(1) == 0 || labels.count(2) == 0))
    throw DataError("training set for subject '" + ts.subject_id +
                    "' must contain trials of both classes");
}

namespace {

json parse_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw DataError("malformed manifest '" + path + "': " + e.what());
  }
  return j;
}

ManifestHeader header_from_json(const json& j, const std::string& path) {
  ManifestHeader h;
  try {
    h.subject_id = j.at("subject_id").get<std::string>();
    h.fs = j.at("fs").get<double>();
    h.n_channels = j.at("n_channels").get<int>();
    h.channel_names = j.at("channel_names").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw DataError("manifest '" + path + "' is missing a required field: " + e.what());
  }
  if (h.fs <= 0.0) throw DataError("manifest '" + path + "': fs must be positive");
  if (h.n_channels < 1) throw DataError("manifest '" + path + "': n_channels must be >= 1");
  if (static_cast<int>(h.channel_names.size()) != h.n_channels)
    throw DataError("manifest '" + path + "': channel_names has " +
                    std::to_string(h.channel_names.size()) + " entries, n_channels is " +
                    std::to_string(h.n_channels));
  h.continuous = j.contains("markers");
  return h;
}

void check_layout(const ManifestHeader& h, const ChannelLayout& layout, const std::string& path) {
  if (layout.size() != h.n_channels)
    throw DataError("manifest '" + path + "' declares " + std::to_string(h.n_channels) +
                    " channels but the layout has " + std::to_string(layout.size()));
  for (int i = 0; i < h.n_channels; ++i)
    if (layout.at(i).name != h.channel_names[i])
      throw DataError("manifest '" + path + "' channel " + std::to_string(i) + " is '" +
                      h.channel_names[i] + "' but the layout has '" + layout.at(i).name + "'");
}

// One row per channel, comma-separated decimal samples.
Eigen::MatrixXd load_samples_csv(const std::string& path, int n_channels, int expect_samples) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open trial file '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> vals;
    const char* p = line.c_str();
    while (*p) {
      char* end = nullptr;
      const double v = std::strtod(p, &end);
      if (end == p)
        throw DataError(path + ":" + std::to_string(lineno) + ": non-numeric sample near '" +
                        std::string(p).substr(0, 12) + "'");
      if (!std::isfinite(v))
        throw DataError(path + ":" + std::to_string(lineno) + ": non-finite sample");
      vals.push_back(v);
      p = end;
      while (*p == ' ' || *p == '\t') ++p;
      if (*p == ',') ++p;
    }
    rows.push_back(std::move(vals));
  }
  if (static_cast<int>(rows.size()) != n_channels)
    throw DataError("trial file '" + path + "' has " + std::to_string(rows.size()) +
                    " channel rows, expected " + std::to_string(n_channels));
  const std::size_t n_samples = rows[0].size();
  if (expect_samples >= 0 && n_samples != static_cast<std::size_t>(expect_samples))
    throw DataError("trial file '" + path + "' has " + std::to_string(n_samples) +
                    " samples, expected " + std::to_string(expect_samples));
  Eigen::MatrixXd m(n_channels, static_cast<int>(n_samples));
  for (int c = 0; c < n_channels; ++c) {
    if (rows[c].size() != n_samples)
      throw DataError("trial file '" + path + "' row " + std::to_string(c + 1) + " has " +
                      std::to_string(rows[c].size()) + " samples, row 1 has " +
                      std::to_string(n_samples));
    for (std::size_t s = 0; s < n_samples; ++s) m(c, static_cast<int>(s)) = rows[c][s];
  }
  return m;
}

void write_samples_csv(const Eigen::MatrixXd& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write trial file '" + path + "'");
  char buf[64];
  std::string line;
  for (int c = 0; c < m.rows(); ++c) {
    line.clear();
    for (int s = 0; s < m.cols(); ++s) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(c, s));
      if (s) line.push_back(',');
      line += buf;
    }
    line.push_back('\n');
    out << line;
  }
}

}  // namespace

ManifestHeader read_manifest_header(const std::string& manifest_path) {
  return header_from_json(parse_manifest(manifest_path), manifest_path);
}

TrialSet load_trialset(const std::string& manifest_path, const ChannelLayout& layout) {
  const json j = parse_manifest(manifest_path);
  const ManifestHeader h = header_from_json(j, manifest_path);
  check_layout(h, layout, manifest_path);
  if (!j.contains("trials"))
    throw DataError("manifest '" + manifest_path + "' has no 'trials' array");

  const fs::path base = fs::path(manifest_path).parent_path();
  TrialSet ts;
  ts.layout = layout;
  ts.subject_id = h.subject_id;
  int n_samples = -1;
  for (const auto& entry : j.at("trials")) {
    std::string file;
    int label = 0;
    try {
      file = entry.at("file").get<std::string>();
      label = entry.at("label").get<int>();
    } catch (const json::exception& e) {
      throw DataError("manifest '" + manifest_path + "': bad trial entry: " + e.what());
    }
    if (label != 1 && label != 2)
      throw DataError("manifest '" + manifest_path + "': trial '" + file + "' has label " +
                      std::to_string(label) +
                      "; this is a two-class pipeline, labels must be 1 or 2");
    EegTrial t;
    t.data = load_samples_csv((base / file).string(), h.n_channels, n_samples);
    if (n_samples < 0) n_samples = t.n_samples();
    t.label = label;
    t.fs = h.fs;
    ts.trials.push_back(std::move(t));
  }
  validate(ts);
  return ts;
}

void save_trialset(const TrialSet& ts, const std::string& dir) {
  validate(ts);
  fs::create_directories(dir);
  json j;
  j["subject_id"] = ts.subject_id;
  j["fs"] = ts.trials.empty() ? 0.0 : ts.trials[0].fs;
  j["n_channels"] = ts.layout.size();
  j["channel_names"] = ts.layout.names();
  json trials = json::array();
  char name[32];
  for (std::size_t k = 0; k < ts.trials.size(); ++k) {
    std::snprintf(name, sizeof(name), "trial_%04zu.csv", k + 1);
    write_samples_csv(ts.trials[k].data, (fs::path(dir) / name).string());
    trials.push_back({{"file", name}, {"label", ts.trials[k].label}});
  }
  j["trials"] = std::move(trials);
  std::ofstream out(fs::path(dir) / "manifest.json");
  if (!out) throw DataError("cannot write manifest in '" + dir + "'");
  out << j.dump(2) << "\n";
}

ContinuousRecording load_continuous(const std::string& manifest_path, const ChannelLayout& layout) {
  const json j = parse_manifest(manifest_path);
  const ManifestHeader h = header_from_json(j, manifest_path);
  check_layout(h, layout, manifest_path);
  if (!j.contains("file"))
    throw DataError("continuous manifest '" + manifest_path + "' has no 'file' field");
  if (!h.continuous)
    throw DataError("continuous manifest '" + manifest_path + "' has no 'markers' array");

  ContinuousRecording rec;
  rec.layout = layout;
  rec.subject_id = h.subject_id;
  rec.fs = h.fs;
  const fs::path base = fs::path(manifest_path).parent_path();
  rec.data = load_samples_csv((base / j.at("file").get<std::string>()).string(), h.n_channels, -1);

  long long prev = -1;
  for (const auto& m : j.at("markers")) {
    Marker mk;
    try {
      mk.sample = m.at("sample").get<long long>();
      mk.label = m.at("label").get<int>();
    } catch (const json::exception& e) {
      throw DataError("manifest '" + manifest_path + "': bad marker entry: " + e.what());
    }
    if (mk.label != 1 && mk.label != 2)
      throw DataError("manifest '" + manifest_path + "': marker at sample " +
                      std::to_string(mk.sample) + " has label " + std::to_string(mk.label) +
                      "; this is a two-class pipeline, labels must be 1 or 2");
    if (mk.sample <= prev)
      throw DataError("manifest '" + manifest_path + "': marker samples must be strictly increasing");
    if (mk.sample < 0 || mk.sample >= rec.n_samples())
      throw DataError("manifest '" + manifest_path + "': marker at sample " +
                      std::to_string(mk.sample) + " is out of bounds");
    prev = mk.sample;
    rec.markers.push_back(mk);
  }
  return rec;
}

TrialSet segment(const ContinuousRecording& rec, double window_start_s, double window_len_s) {
  if (window_start_s < 0.0) throw ConfigError("segmentation window start must be >= 0");
  if (window_len_s <= 0.0) throw ConfigError("segmentation window length must be > 0");
  const long long off = std::llround(window_start_s * rec.fs);
  const long long end_off = std::llround((window_start_s + window_len_s) * rec.fs);
  const long long len = end_off - off;
  if (len < 1) throw ConfigError("segmentation window is empty at this sampling rate");

  TrialSet ts;
  ts.layout = rec.layout;
  ts.subject_id = rec.subject_id;
  for (std::size_t k = 0; k < rec.markers.size(); ++k) {
    const long long begin = rec.markers[k].sample + off;
    if (begin < 0 || begin + len > rec.n_samples())
      throw DataError("window for marker " + std::to_string(k) + " (sample " +
                      std::to_string(rec.markers[k].sample) + ") overruns the recording");
    EegTrial t;
    t.data = rec.data.middleCols(static_cast<int>(begin), static_cast<int>(len));
    t.label = rec.markers[k].label;
    t.fs = rec.fs;
    ts.trials.push_back(std::move(t));
  }
  validate(ts);
  return ts;
}

}  // namespace pchan::eeg
