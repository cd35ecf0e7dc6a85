#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "rovertrack/common.hpp"

namespace rovertrack {

enum class FilterKind { kNone, kMovingAverage, kSavitzkyGolay, kButterworth };

std::string_view to_string(FilterKind kind);
/// Accepts the short CLI names (none, ma, sg, bw) and the long ones.
FilterKind parse_filter_kind(std::string_view name);

/// Causal action-smoothing filter configuration.
///
/// Savitzky-Golay fits a polynomial of `order` over the last `window` samples
/// and evaluates it `sg_lag` samples behind the newest one. The default lag of
/// (window - 1) / 2 is the classical centered smoother; lag 0 is the endpoint
/// (zero-lag) fit.
struct FilterSpec {
  FilterKind kind = FilterKind::kNone;
  int window = 5;
  int order = 3;
  int sg_lag = -1;  // -1: (window - 1) / 2
  double cutoff_hz = 2.5;
  double sample_hz = 25.0;
  bool warm_start = true;  // fill history with the first input instead of zeros

  static FilterSpec none() { return {}; }
  static FilterSpec moving_average(int window = 5);
  static FilterSpec savitzky_golay(int order = 3, int window = 9, int lag = -1);
  static FilterSpec butterworth(int order = 4, double cutoff_hz = 2.5, double sample_hz = 25.0);
  static FilterSpec from_name(std::string_view name);

  int effective_sg_lag() const { return sg_lag < 0 ? (window - 1) / 2 : sg_lag; }
  void validate() const;
};

/// Second-order section, a0 normalized to 1.
struct Biquad {
  double b0, b1, b2, a1, a2;
};

/// FIR taps for the SG smoother, ordered oldest -> newest.
std::vector<double> savitzky_golay_coefficients(int window, int order, int lag);

/// Digital Butterworth low-pass as cascaded sections (bilinear transform with
/// prewarped cutoff). Each section has unit DC gain. Odd orders end with a
/// first-order section (b2 = a2 = 0).
std::vector<Biquad> butterworth_sections(int order, double cutoff_hz, double sample_hz);

/// Streaming single-channel filter.
class ChannelFilter {
 public:
  explicit ChannelFilter(const FilterSpec& spec);

  double step(double x);
  void reset();
  bool warm_started() const { return started_; }

  /// FIR taps (oldest -> newest); empty for the recursive filter.
  const std::vector<double>& taps() const { return taps_; }
  const std::vector<Biquad>& sections() const { return sections_; }

 private:
  void warm(double x);

  FilterSpec spec_;
  std::vector<double> taps_;
  std::vector<double> history_;  // ring buffer, newest at head_
  std::size_t head_ = 0;
  std::vector<Biquad> sections_;
  std::vector<double> z1_, z2_;  // transposed direct form II states
  bool started_ = false;
};

/// Channel-wise filter over the two-dimensional action.
class ActionFilter {
 public:
  explicit ActionFilter(const FilterSpec& spec = {});

  /// Non-finite inputs repeat the previous output and set `flagged`.
  Action step(const Action& x, bool* flagged = nullptr);
  void reset();
  const FilterSpec& spec() const { return spec_; }

 private:
  FilterSpec spec_;
  ChannelFilter channels_[2];
  Action last_output_{0.0, 0.0};
  bool has_output_ = false;
};

}  // namespace rovertrack
