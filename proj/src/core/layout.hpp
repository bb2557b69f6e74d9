#pragma once

#include <string>
#include <vector>

namespace pchan::eeg {

struct Channel {
  std::string name;
  double x = 0.0;  // scalp-plane coordinate, nose up, left ear at negative x
  double y = 0.0;
};

// Electrode names plus flattened 2-D scalp coordinates. Drives Laplacian
// neighborhoods and the scalp-map export.
class ChannelLayout {
public:
  ChannelLayout() = default;
  explicit ChannelLayout(std::vector<Channel> channels);

  int size() const { return static_cast<int>(channels_.size()); }
  const Channel& at(int i) const { return channels_.at(i); }
  const std::vector<Channel>& channels() const { return channels_; }
  std::vector<std::string> names() const;
  // -1 when absent
  int index_of(const std::string& name) const;

private:
  std::vector<Channel> channels_;
};

// The 59-electrode montage of the bundled loader default, with nominal
// flattened 10-10 coordinates (unit head radius). Good enough for neighbor
// search and plotting; override with a layout file for measured positions.
ChannelLayout builtin_layout_59();

// CSV rows "name,x,y"; '#' starts a comment line.
ChannelLayout load_layout(const std::string& path);
void save_layout(const ChannelLayout& layout, const std::string& path);

// Deterministic ring placement for generated datasets.
ChannelLayout ring_layout(int n_channels);

}  // namespace pchan::eeg
