#include "rovertrack/filters.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace rovertrack {

std::string_view to_string(FilterKind kind) {
  switch (kind) {
    case FilterKind::kNone: return "none";
    case FilterKind::kMovingAverage: return "ma";
    case FilterKind::kSavitzkyGolay: return "sg";
    case FilterKind::kButterworth: return "bw";
  }
  return "none";
}

FilterKind parse_filter_kind(std::string_view name) {
  if (name == "none" || name == "unfiltered") return FilterKind::kNone;
  if (name == "ma" || name == "moving_average") return FilterKind::kMovingAverage;
  if (name == "sg" || name == "savitzky_golay") return FilterKind::kSavitzkyGolay;
  if (name == "bw" || name == "butterworth") return FilterKind::kButterworth;
  throw ConfigError("unknown filter '" + std::string(name) + "' (expected none, ma, sg, bw)");
}

FilterSpec FilterSpec::moving_average(int window) {
  FilterSpec s;
  s.kind = FilterKind::kMovingAverage;
  s.window = window;
  return s;
}

FilterSpec FilterSpec::savitzky_golay(int order, int window, int lag) {
  FilterSpec s;
  s.kind = FilterKind::kSavitzkyGolay;
  s.order = order;
  s.window = window;
  s.sg_lag = lag;
  return s;
}

FilterSpec FilterSpec::butterworth(int order, double cutoff_hz, double sample_hz) {
  FilterSpec s;
  s.kind = FilterKind::kButterworth;
  s.order = order;
  s.cutoff_hz = cutoff_hz;
  s.sample_hz = sample_hz;
  return s;
}

FilterSpec FilterSpec::from_name(std::string_view name) {
  switch (parse_filter_kind(name)) {
    case FilterKind::kNone: return none();
    case FilterKind::kMovingAverage: return moving_average();
    case FilterKind::kSavitzkyGolay: return savitzky_golay();
    case FilterKind::kButterworth: return butterworth();
  }
  return none();
}

void FilterSpec::validate() const {
  switch (kind) {
    case FilterKind::kNone: return;
    case FilterKind::kMovingAverage:
      if (window < 1) throw ConfigError("filter: window must be >= 1");
      return;
    case FilterKind::kSavitzkyGolay:
      if (window < 1) throw ConfigError("filter: window must be >= 1");
      if (order < 0 || order >= window) throw ConfigError("filter: SG order must be in [0, window)");
      if (effective_sg_lag() >= window) throw ConfigError("filter: SG lag must be < window");
      return;
    case FilterKind::kButterworth:
      if (order < 1) throw ConfigError("filter: Butterworth order must be >= 1");
      if (!(sample_hz > 0.0) || !(cutoff_hz > 0.0) || !(cutoff_hz < 0.5 * sample_hz))
        throw ConfigError("filter: cutoff must satisfy 0 < cutoff < sample_hz / 2");
      return;
  }
}

std::vector<double> savitzky_golay_coefficients(int window, int order, int lag) {
  // Least-squares polynomial fit on sample times -(window-1)..0, solved by
  // Householder QR; the pseudo-inverse rows are then evaluated at -lag.
  Eigen::MatrixXd vandermonde(window, order + 1);
  for (int j = 0; j < window; ++j) {
    const double t = j - (window - 1);
    double p = 1.0;
    for (int k = 0; k <= order; ++k, p *= t) vandermonde(j, k) = p;
  }
  const Eigen::MatrixXd pinv =
      vandermonde.householderQr().solve(Eigen::MatrixXd::Identity(window, window));
  Eigen::RowVectorXd powers(order + 1);
  double p = 1.0;
  for (int k = 0; k <= order; ++k, p *= -static_cast<double>(lag)) powers(k) = p;
  const Eigen::RowVectorXd taps = powers * pinv;
  return {taps.data(), taps.data() + taps.size()};
}

std::vector<Biquad> butterworth_sections(int order, double cutoff_hz, double sample_hz) {
  const double k = 2.0 * sample_hz;
  const double wc = k * std::tan(kPi * cutoff_hz / sample_hz);  // prewarped analog cutoff
  const double wc2 = wc * wc;
  std::vector<Biquad> sections;
  for (int i = 0; i < order / 2; ++i) {
    const double theta = kPi * (2.0 * i + 1.0) / (2.0 * order);
    const double damping = 2.0 * std::sin(theta) * wc * k;
    const double a0 = k * k + damping + wc2;
    sections.push_back({wc2 / a0, 2.0 * wc2 / a0, wc2 / a0, 2.0 * (wc2 - k * k) / a0, (k * k - damping + wc2) / a0});
  }
  if (order % 2 == 1) {
    const double a0 = k + wc;
    sections.push_back({wc / a0, wc / a0, 0.0, (wc - k) / a0, 0.0});
  }
  return sections;
}

ChannelFilter::ChannelFilter(const FilterSpec& spec) : spec_(spec) {
  spec_.validate();
  switch (spec_.kind) {
    case FilterKind::kNone: break;
    case FilterKind::kMovingAverage:
      taps_.assign(static_cast<std::size_t>(spec_.window), 1.0 / spec_.window);
      break;
    case FilterKind::kSavitzkyGolay:
      taps_ = savitzky_golay_coefficients(spec_.window, spec_.order, spec_.effective_sg_lag());
      break;
    case FilterKind::kButterworth:
      sections_ = butterworth_sections(spec_.order, spec_.cutoff_hz, spec_.sample_hz);
      break;
  }
  history_.assign(taps_.size(), 0.0);
  z1_.assign(sections_.size(), 0.0);
  z2_.assign(sections_.size(), 0.0);
}

void ChannelFilter::reset() {
  std::fill(history_.begin(), history_.end(), 0.0);
  std::fill(z1_.begin(), z1_.end(), 0.0);
  std::fill(z2_.begin(), z2_.end(), 0.0);
  head_ = 0;
  started_ = false;
}

void ChannelFilter::warm(double x) {
  std::fill(history_.begin(), history_.end(), x);
  for (std::size_t s = 0; s < sections_.size(); ++s) {
    const Biquad& q = sections_[s];
    z2_[s] = (q.b2 - q.a2) * x;
    z1_[s] = (q.b1 - q.a1) * x + z2_[s];
  }
}

double ChannelFilter::step(double x) {
  if (!started_) {
    if (spec_.warm_start) warm(x);
    started_ = true;
  }
  if (!taps_.empty()) {
    const std::size_t w = history_.size();
    head_ = (head_ + 1) % w;
    history_[head_] = x;
    double y = 0.0;
    for (std::size_t age = 0; age < w; ++age) y += taps_[w - 1 - age] * history_[(head_ + w - age) % w];
    return y;
  }
  double y = x;
  for (std::size_t s = 0; s < sections_.size(); ++s) {
    const Biquad& q = sections_[s];
    const double in = y;
    y = q.b0 * in + z1_[s];
    z1_[s] = q.b1 * in - q.a1 * y + z2_[s];
    z2_[s] = q.b2 * in - q.a2 * y;
  }
  return y;
}

ActionFilter::ActionFilter(const FilterSpec& spec) : spec_(spec), channels_{ChannelFilter(spec), ChannelFilter(spec)} {}

Action ActionFilter::step(const Action& x, bool* flagged) {
  if (!std::isfinite(x[0]) || !std::isfinite(x[1])) {
    if (flagged) *flagged = true;
    return last_output_;
  }
  if (flagged) *flagged = false;
  last_output_ = {channels_[0].step(x[0]), channels_[1].step(x[1])};
  has_output_ = true;
  return last_output_;
}

void ActionFilter::reset() {
  channels_[0].reset();
  channels_[1].reset();
  last_output_ = {0.0, 0.0};
  has_output_ = false;
}

}  // namespace rovertrack
