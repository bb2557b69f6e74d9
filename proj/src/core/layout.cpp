#include "layout.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "errors.hpp"

namespace pchan::eeg {

ChannelLayout::ChannelLayout(std::vector<Channel> channels) : channels_(std::move(channels)) {
  if (channels_.empty()) throw DataError("channel layout must contain at least one channel");
  std::set<std::string> seen;
  for (const auto& c : channels_) {
    if (!std::isfinite(c.x) || !std::isfinite(c.y))
      throw DataError("non-finite coordinate for channel '" + c.name + "'");
    if (!seen.insert(c.name).second) throw DataError("duplicate channel name '" + c.name + "'");
  }
  for (std::size_t i = 0; i < channels_.size(); ++i)
    for (std::size_t j = i + 1; j < channels_.size(); ++j) {
      const double dx = channels_[i].x - channels_[j].x;
      const double dy = channels_[i].y - channels_[j].y;
      if (dx * dx + dy * dy <= 0.0)
        throw DataError("channels '" + channels_[i].name + "' and '" + channels_[j].name +
                        "' share the same coordinates");
    }
}

std::vector<std::string> ChannelLayout::names() const {
  std::vector<std::string> out;
  out.reserve(channels_.size());
  for (const auto& c : channels_) out.push_back(c.name);
  return out;
}

int ChannelLayout::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < channels_.size(); ++i)
    if (channels_[i].name == name) return static_cast<int>(i);
  return -1;
}

namespace {

struct Row {
  const char* prefix;
  double y;
  // lateral slots, left to right; 0 marks the midline electrode ("z" suffix)
  std::vector<int> slots;
};

}  // namespace

ChannelLayout builtin_layout_59() {
  // Rows front (positive y) to back; slot n maps to |x| = 0.1 * n with odd
  // numbers on the left. Matches the 59-name montage used by the loader.
  std::vector<Channel> ch;
  auto add = [&ch](const std::string& name, double x, double y) { ch.push_back({name, x, y}); };

  add("AF3", -0.25, 0.70);
  add("AF4", 0.25, 0.70);
  const char* f[] = {"F5", "F3", "F1", "Fz", "F2", "F4", "F6"};
  const double fx[] = {-0.52, -0.35, -0.17, 0.0, 0.17, 0.35, 0.52};
  for (int i = 0; i < 7; ++i) add(f[i], fx[i], 0.55);
  const char* fc[] = {"FC5", "FC3", "FC1", "FCz", "FC2", "FC4", "FC6"};
  const double fcx[] = {-0.59, -0.39, -0.20, 0.0, 0.20, 0.39, 0.59};
  for (int i = 0; i < 7; ++i) add(fc[i], fcx[i], 0.38);
  const char* cfc[] = {"CFC7", "CFC5", "CFC3", "CFC1", "CFC2", "CFC4", "CFC6", "CFC8"};
  const double cfcx[] = {-0.71, -0.51, -0.31, -0.10, 0.10, 0.31, 0.51, 0.71};
  for (int i = 0; i < 8; ++i) add(cfc[i], cfcx[i], 0.19);
  const char* c[] = {"T7", "C5", "C3", "C1", "Cz", "C2", "C4", "C6", "T8"};
  const double cx[] = {-0.80, -0.60, -0.40, -0.20, 0.0, 0.20, 0.40, 0.60, 0.80};
  for (int i = 0; i < 9; ++i) add(c[i], cx[i], 0.0);
  const char* ccp[] = {"CCP7", "CCP5", "CCP3", "CCP1", "CCP2", "CCP4", "CCP6", "CCP8"};
  const double ccpx[] = {-0.71, -0.51, -0.31, -0.10, 0.10, 0.31, 0.51, 0.71};
  for (int i = 0; i < 8; ++i) add(ccp[i], ccpx[i], -0.19);
  const char* cp[] = {"CP5", "CP3", "CP1", "CPz", "CP2", "CP4", "CP6"};
  const double cpx[] = {-0.59, -0.39, -0.20, 0.0, 0.20, 0.39, 0.59};
  for (int i = 0; i < 7; ++i) add(cp[i], cpx[i], -0.38);
  const char* p[] = {"P5", "P3", "P1", "Pz", "P2", "P4", "P6"};
  const double px[] = {-0.52, -0.35, -0.17, 0.0, 0.17, 0.35, 0.52};
  for (int i = 0; i < 7; ++i) add(p[i], px[i], -0.55);
  add("PO1", -0.15, -0.70);
  add("PO2", 0.15, -0.70);
  add("O1", -0.25, -0.85);
  add("O2", 0.25, -0.85);

  return ChannelLayout(std::move(ch));
}

ChannelLayout load_layout(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open layout file '" + path + "'");
  std::vector<Channel> ch;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    Channel c;
    std::string xs, ys;
    if (!std::getline(ss, c.name, ',') || !std::getline(ss, xs, ',') || !std::getline(ss, ys))
      throw DataError(path + ":" + std::to_string(lineno) + ": expected 'name,x,y'");
    try {
      c.x = std::stod(xs);
      c.y = std::stod(ys);
    } catch (const std::exception&) {
      throw DataError(path + ":" + std::to_string(lineno) + ": non-numeric coordinate");
    }
    ch.push_back(std::move(c));
  }
  if (ch.empty()) throw DataError("layout file '" + path + "' contains no channels");
  return ChannelLayout(std::move(ch));
}

void save_layout(const ChannelLayout& layout, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write layout file '" + path + "'");
  char buf[128];
  for (const auto& c : layout.channels()) {
    std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g\n", c.name.c_str(), c.x, c.y);
    out << buf;
  }
}

ChannelLayout ring_layout(int n_channels) {
  if (n_channels < 1) throw DataError("ring layout needs at least one channel");
  std::vector<Channel> ch;
  ch.reserve(n_channels);
  for (int i = 0; i < n_channels; ++i) {
    const double phi = 2.0 * M_PI * i / n_channels;
    char name[16];
    std::snprintf(name, sizeof(name), "S%02d", i + 1);
    ch.push_back({name, std::cos(phi), std::sin(phi)});
  }
  return ChannelLayout(std::move(ch));
}

}  // namespace pchan::eeg
