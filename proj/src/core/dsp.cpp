#include "dsp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "errors.hpp"

namespace pchan::dsp {

namespace {

using cplx = std::complex<double>;

// Denominator coefficients of one section from a conjugate (or real) root
// pair already mapped to the z plane.
Biquad section_from_poles(cplx z1, cplx z2) {
  Biquad s;
  const cplx sum = z1 + z2;
  const cplx prod = z1 * z2;
  s.a1 = -sum.real();
  s.a2 = prod.real();
  return s;
}

cplx bilinear(cplx s, double fs) {
  const double k = 2.0 * fs;
  return (k + s) / (k - s);
}

std::complex<double> section_response(const Biquad& s, double w) {
  const cplx z1 = std::polar(1.0, -w);
  const cplx z2 = z1 * z1;
  return (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
}

double section_dc_gain(const Biquad& s) {
  return (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
}

}  // namespace

IirFilter::IirFilter(std::vector<Biquad> sections, DesignMeta meta)
    : sections_(std::move(sections)), meta_(meta) {
  if (sections_.empty()) throw NumericError("iir filter has no sections");
  for (std::size_t i = 0; i < sections_.size(); ++i) {
    const Biquad& s = sections_[i];
    // Poles strictly inside the unit circle (Jury criterion for a quadratic).
    if (!(std::abs(s.a2) < 1.0 && std::abs(s.a1) < 1.0 + s.a2)) {
      throw NumericError("iir design produced an unstable section " + std::to_string(i) +
                         " (a1=" + std::to_string(s.a1) + ", a2=" + std::to_string(s.a2) + ")");
    }
    for (double c : {s.b0, s.b1, s.b2, s.a1, s.a2}) {
      if (!std::isfinite(c)) throw NumericError("iir design produced non-finite coefficients");
    }
  }
}

std::complex<double> IirFilter::response(double f_hz) const {
  const double w = 2.0 * std::numbers::pi * f_hz / meta_.fs;
  cplx h(1.0, 0.0);
  for (const Biquad& s : sections_) h *= section_response(s, w);
  return h;
}

IirFilter design_bandpass_butterworth(int order, double low_hz, double high_hz, double fs) {
  if (order < 1) throw ConfigError("filter order must be >= 1");
  if (!(fs > 0.0)) throw ConfigError("sampling rate must be positive");
  if (!(0.0 < low_hz && low_hz < high_hz && high_hz < fs / 2.0)) {
    throw ConfigError("band edges must satisfy 0 < low < high < fs/2 (got " +
                      std::to_string(low_hz) + ", " + std::to_string(high_hz) + " at fs=" +
                      std::to_string(fs) + ")");
  }

  const double pi = std::numbers::pi;
  // Prewarp band edges so the bilinear transform lands them exactly.
  const double w1 = 2.0 * fs * std::tan(pi * low_hz / fs);
  const double w2 = 2.0 * fs * std::tan(pi * high_hz / fs);
  const double w0 = std::sqrt(w1 * w2);
  const double bw = w2 - w1;

  // Digital frequency the analog center maps to; per-section gains are
  // normalized there so the cascade peaks at unity.
  const double wc = 2.0 * std::atan(w0 / (2.0 * fs));

  std::vector<Biquad> sections;
  sections.reserve(static_cast<std::size_t>(order));

  // One analog lowpass prototype pole per loop pass: conjugate pairs are
  // handled via k < order/2, plus the real pole when the order is odd.
  // Each lowpass pole maps to two bandpass poles via
  //   s_lp -> (s^2 + w0^2) / (bw * s).
  auto bp_roots = [&](cplx p_lp) {
    const cplx pb = p_lp * bw;
    const cplx disc = pb * pb - 4.0 * w0 * w0;
    const cplx sq = std::sqrt(disc);
    return std::pair<cplx, cplx>{(pb + sq) / 2.0, (pb - sq) / 2.0};
  };

  for (int k = 0; k < order / 2; ++k) {
    const double theta = pi * (2.0 * k + 1.0) / (2.0 * order);
    const cplx p_lp(-std::sin(theta), std::cos(theta));
    auto [s1, s2] = bp_roots(p_lp);
    // The conjugate prototype pole contributes conj(s1) and conj(s2), so the
    // four bandpass poles group into two conjugate pairs.
    sections.push_back(section_from_poles(bilinear(s1, fs), bilinear(std::conj(s1), fs)));
    sections.push_back(section_from_poles(bilinear(s2, fs), bilinear(std::conj(s2), fs)));
  }
  if (order % 2 == 1) {
    // Real prototype pole at s = -1; its two bandpass images are either a
    // conjugate pair or two real poles, and form one section either way.
    auto [s1, s2] = bp_roots(cplx(-1.0, 0.0));
    sections.push_back(section_from_poles(bilinear(s1, fs), bilinear(s2, fs)));
  }

  // Numerators: each section carries zeros at z = +1 and z = -1, scaled so
  // the section magnitude is 1 at the warped center frequency.
  for (Biquad& s : sections) {
    s.b0 = 1.0;
    s.b1 = 0.0;
    s.b2 = -1.0;
    const double g = std::abs(section_response(s, wc));
    if (!(g > 0.0) || !std::isfinite(g)) {
      throw NumericError("bandpass design: degenerate section gain at center frequency");
    }
    s.b0 /= g;
    s.b2 /= g;
  }

  DesignMeta meta;
  meta.order = order;
  meta.low_hz = low_hz;
  meta.high_hz = high_hz;
  meta.fs = fs;
  meta.family = FilterFamily::butterworth;
  return IirFilter(std::move(sections), meta);
}

IirFilter design_lowpass_cheby2(int order, double stop_hz, double stop_atten_db, double fs) {
  if (order < 1) throw ConfigError("filter order must be >= 1");
  if (!(fs > 0.0)) throw ConfigError("sampling rate must be positive");
  if (!(0.0 < stop_hz && stop_hz < fs / 2.0)) {
    throw ConfigError("stopband edge must lie in (0, fs/2)");
  }
  if (!(stop_atten_db > 0.0)) throw ConfigError("stopband attenuation must be positive");

  const double pi = std::numbers::pi;
  const double eps = 1.0 / std::sqrt(std::pow(10.0, stop_atten_db / 10.0) - 1.0);
  const double mu = std::asinh(1.0 / eps) / order;
  const double ws = 2.0 * fs * std::tan(pi * stop_hz / fs);

  std::vector<Biquad> sections;
  sections.reserve(static_cast<std::size_t>((order + 1) / 2));

  for (int k = 0; k < order / 2; ++k) {
    const double theta = pi * (2.0 * k + 1.0) / (2.0 * order);
    // Chebyshev II poles are reciprocals of the type-I poles; zeros sit on
    // the imaginary axis at the secants of the same angles.
    const cplx p1(-std::sinh(mu) * std::sin(theta), std::cosh(mu) * std::cos(theta));
    const cplx p = ws / p1;
    const cplx z = ws * cplx(0.0, 1.0 / std::cos(theta));

    const cplx zp = bilinear(p, fs);
    const cplx zz = bilinear(z, fs);
    Biquad s = section_from_poles(zp, std::conj(zp));
    s.b0 = 1.0;
    s.b1 = -2.0 * zz.real();
    s.b2 = std::norm(zz);
    const double g = section_dc_gain(s);
    if (!(std::abs(g) > 0.0) || !std::isfinite(g)) {
      throw NumericError("cheby2 design: degenerate section DC gain");
    }
    s.b0 /= g;
    s.b1 /= g;
    s.b2 /= g;
    sections.push_back(s);
  }
  if (order % 2 == 1) {
    // Real pole, zero at infinity (maps to z = -1).
    const double p1 = -std::sinh(mu);
    const cplx zp = bilinear(ws / p1, fs);
    Biquad s;
    s.a1 = -zp.real();
    s.a2 = 0.0;
    s.b0 = 1.0;
    s.b1 = 1.0;
    s.b2 = 0.0;
    const double g = section_dc_gain(s);
    s.b0 /= g;
    s.b1 /= g;
    sections.push_back(s);
  }

  DesignMeta meta;
  meta.order = order;
  meta.low_hz = 0.0;
  meta.high_hz = stop_hz;
  meta.fs = fs;
  meta.family = FilterFamily::chebyshev2;
  return IirFilter(std::move(sections), meta);
}

namespace {

// Steady-state DF2T state for a unit-step input, used to initialize each
// section so filtfilt does not ring at the edges.
void steady_state_zi(const Biquad& s, double& s1, double& s2) {
  const double y = section_dc_gain(s);
  s2 = s.b2 - s.a2 * y;
  s1 = s.b1 + s2 - s.a1 * y;
}

void sosfilt_inplace(const std::vector<Biquad>& sections, std::vector<double>& x) {
  double scale = x.empty() ? 0.0 : x.front();
  for (const Biquad& sec : sections) {
    double s1 = 0.0, s2 = 0.0;
    steady_state_zi(sec, s1, s2);
    s1 *= scale;
    s2 *= scale;
    for (double& v : x) {
      const double in = v;
      const double out = sec.b0 * in + s1;
      s1 = sec.b1 * in - sec.a1 * out + s2;
      s2 = sec.b2 * in - sec.a2 * out;
      v = out;
    }
    scale *= section_dc_gain(sec);
  }
}

void filtfilt_row(const IirFilter& f, const double* x, double* y, Eigen::Index n) {
  const int pad = f.pad_length();
  if (n <= static_cast<Eigen::Index>(pad)) {
    throw NumericError("signal too short for zero-phase filtering: " + std::to_string(n) +
                       " samples, need more than " + std::to_string(pad));
  }
  std::vector<double> ext(static_cast<std::size_t>(n) + 2 * static_cast<std::size_t>(pad));
  // Odd reflection about the end points.
  for (int i = 0; i < pad; ++i) {
    ext[static_cast<std::size_t>(i)] = 2.0 * x[0] - x[pad - i];
    ext[static_cast<std::size_t>(pad) + static_cast<std::size_t>(n) + static_cast<std::size_t>(i)] =
        2.0 * x[n - 1] - x[n - 2 - i];
  }
  std::copy(x, x + n, ext.begin() + pad);

  sosfilt_inplace(f.sections(), ext);
  std::reverse(ext.begin(), ext.end());
  sosfilt_inplace(f.sections(), ext);
  std::reverse(ext.begin(), ext.end());

  std::copy(ext.begin() + pad, ext.begin() + pad + n, y);
}

}  // namespace

Eigen::MatrixXd filtfilt(const IirFilter& filter, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd out(x.rows(), x.cols());
  std::vector<double> row(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) row[static_cast<std::size_t>(c)] = x(r, c);
    filtfilt_row(filter, row.data(), row.data(), x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) out(r, c) = row[static_cast<std::size_t>(c)];
  }
  return out;
}

eeg::EegTrial filtfilt(const IirFilter& filter, const eeg::EegTrial& trial) {
  eeg::EegTrial out = trial;
  out.data = filtfilt(filter, trial.data);
  return out;
}

eeg::ContinuousRecording decimate_cheby2(const eeg::ContinuousRecording& rec, int factor) {
  if (factor < 2) throw ConfigError("decimation factor must be >= 2");
  const double fs_new = rec.fs / factor;
  if (std::abs(fs_new * factor - rec.fs) > 1e-9 ||
      std::abs(fs_new - std::round(fs_new)) > 1e-9) {
    throw ConfigError("sampling rate " + std::to_string(rec.fs) +
                      " is not divisible by decimation factor " + std::to_string(factor));
  }

  const IirFilter aa = design_lowpass_cheby2(8, 0.8 * (fs_new / 2.0), 40.0, rec.fs);
  const Eigen::MatrixXd filtered = filtfilt(aa, rec.data);

  const Eigen::Index n = filtered.cols();
  const Eigen::Index n_out = (n + factor - 1) / factor;
  eeg::ContinuousRecording out;
  out.layout = rec.layout;
  out.subject_id = rec.subject_id;
  out.fs = fs_new;
  out.data.resize(filtered.rows(), n_out);
  for (Eigen::Index j = 0; j < n_out; ++j) out.data.col(j) = filtered.col(j * factor);

  out.markers.reserve(rec.markers.size());
  long long prev = -1;
  for (std::size_t i = 0; i < rec.markers.size(); ++i) {
    eeg::Marker m = rec.markers[i];
    m.sample = m.sample / factor;
    if (m.sample <= prev) {
      throw DataError("markers " + std::to_string(i - 1) + " and " + std::to_string(i) +
                      " collide after decimation by " + std::to_string(factor));
    }
    prev = m.sample;
    out.markers.push_back(m);
  }
  return out;
}

std::string dump_coefficients(const IirFilter& filter) {
  const DesignMeta& m = filter.meta();
  std::string text;
  char buf[256];
  const char* family = m.family == FilterFamily::butterworth ? "butterworth" : "chebyshev2";
  if (m.low_hz > 0.0) {
    std::snprintf(buf, sizeof(buf), "# %s bandpass order %d, %.17g-%.17g Hz at fs=%.17g\n",
                  family, m.order, m.low_hz, m.high_hz, m.fs);
  } else {
    std::snprintf(buf, sizeof(buf), "# %s lowpass order %d, edge %.17g Hz at fs=%.17g\n",
                  family, m.order, m.high_hz, m.fs);
  }
  text += buf;
  text += "# section b0 b1 b2 a0 a1 a2\n";
  for (std::size_t i = 0; i < filter.sections().size(); ++i) {
    const Biquad& s = filter.sections()[i];
    std::snprintf(buf, sizeof(buf), "%zu %.17g %.17g %.17g 1 %.17g %.17g\n", i, s.b0, s.b1,
                  s.b2, s.a1, s.a2);
    text += buf;
  }
  return text;
}

}  // namespace pchan::dsp
