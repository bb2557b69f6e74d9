#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "errors.hpp"

namespace pchan {

// Binary channel mask, one flag per channel in layout order.
using ChannelMask = std::vector<std::uint8_t>;

inline int popcount(const ChannelMask& m) {
  int n = 0;
  for (auto b : m) n += b ? 1 : 0;
  return n;
}

inline std::string mask_to_string(const ChannelMask& m) {
  std::string s;
  s.reserve(m.size());
  for (auto b : m) s.push_back(b ? '1' : '0');
  return s;
}

inline ChannelMask mask_from_string(const std::string& s) {
  ChannelMask m;
  m.reserve(s.size());
  for (char c : s) {
    if (c == '0')
      m.push_back(0);
    else if (c == '1')
      m.push_back(1);
    else
      throw ConfigError("mask string must contain only '0'/'1', got '" + std::string(1, c) + "'");
  }
  return m;
}

inline ChannelMask full_mask(std::size_t n) { return ChannelMask(n, 1); }

inline std::vector<int> mask_indices(const ChannelMask& m) {
  std::vector<int> idx;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i]) idx.push_back(static_cast<int>(i));
  return idx;
}

}  // namespace pchan
