#pragma once

#include <complex>
#include <string>
#include <vector>

#include "eeg_data.hpp"

namespace pchan::dsp {

struct Biquad {
  double b0 = 0, b1 = 0, b2 = 0;  // numerator, z^-1 form
  double a1 = 0, a2 = 0;          // denominator, a0 normalized to 1
};

enum class FilterFamily { butterworth, chebyshev2 };

struct DesignMeta {
  int order = 0;
  double low_hz = 0.0;   // 0 for lowpass
  double high_hz = 0.0;  // cutoff / stopband edge for lowpass
  double fs = 0.0;
  FilterFamily family = FilterFamily::butterworth;
};

// Cascade of second-order sections. Construction rejects unstable sections.
class IirFilter {
public:
  IirFilter(std::vector<Biquad> sections, DesignMeta meta);

  const std::vector<Biquad>& sections() const { return sections_; }
  const DesignMeta& meta() const { return meta_; }

  std::complex<double> response(double f_hz) const;
  double magnitude(double f_hz) const { return std::abs(response(f_hz)); }

  // Reflection-padding length used by zero-phase application.
  int pad_length() const { return 3 * (2 * meta_.order + 1); }

private:
  std::vector<Biquad> sections_;
  DesignMeta meta_;
};

// Digital Butterworth bandpass built from the analog prototype with
// prewarping and the bilinear transform; order n yields n sections and
// exact -3.01 dB magnitude at both band edges.
IirFilter design_bandpass_butterworth(int order, double low_hz, double high_hz, double fs);

// Digital Chebyshev II lowpass; `stop_hz` is the stopband edge where
// attenuation first reaches `stop_atten_db`.
IirFilter design_lowpass_cheby2(int order, double stop_hz, double stop_atten_db, double fs);

// Forward-backward application (zero net phase) with odd-reflection padding,
// row-wise. Rows shorter than pad_length() are rejected.
Eigen::MatrixXd filtfilt(const IirFilter& filter, const Eigen::MatrixXd& x);
eeg::EegTrial filtfilt(const IirFilter& filter, const eeg::EegTrial& trial);

// Order-8 Chebyshev II anti-alias lowpass (stopband edge 0.8 * new Nyquist,
// 40 dB) applied zero-phase, then every factor-th sample kept; markers are
// remapped by integer division.
eeg::ContinuousRecording decimate_cheby2(const eeg::ContinuousRecording& rec, int factor);

std::string dump_coefficients(const IirFilter& filter);

}  // namespace pchan::dsp
