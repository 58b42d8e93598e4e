#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qpdrive/types.hpp"

namespace qpdrive {

/// N samples of a k-channel observable taken every `dt` time units.
struct TimeSeries {
  RowMatrix values;                    // N x k
  double dt = 1.0;
  std::vector<std::string> channel_names;  // empty or k labels

  Index samples() const { return values.rows(); }
  Index channels() const { return values.cols(); }

  /// Throws InputError unless N >= 2, k >= 1, dt > 0 and all values are finite.
  void validate() const;
};

enum class ScaleMode { StdDev, SupNorm };

struct ChannelStats {
  Vector mean;
  Vector scale;                   // strictly positive
  std::vector<bool> constant;     // channel had zero spread; scale forced to 1
  ScaleMode mode = ScaleMode::StdDev;

  Index channels() const { return mean.size(); }

  /// Identity transform for k channels.
  static ChannelStats identity(Index k);

  RowVector apply(const Eigen::Ref<const RowVector>& sample) const;
  RowVector invert(const Eigen::Ref<const RowVector>& sample) const;
};

std::string to_string(ScaleMode mode);
ScaleMode scale_mode_from_string(const std::string& name);

/// Parses comma-separated numeric rows. With `header` set the first line
/// supplies channel names. Errors name the 1-based data row.
TimeSeries load_csv(const std::filesystem::path& path, double dt, bool header);
TimeSeries parse_csv(std::istream& in, double dt, bool header);

void write_csv(const std::filesystem::path& path, const TimeSeries& ts);

/// Per-channel centring and scaling. Population standard deviation in
/// StdDev mode, max |y - mean| in SupNorm mode.
std::pair<TimeSeries, ChannelStats> standardize(const TimeSeries& ts,
                                                ScaleMode mode = ScaleMode::StdDev);
TimeSeries unstandardize(const TimeSeries& ts, const ChannelStats& stats);

/// Delay-coordinate states. Row n stacks (y_{n+Q}, y_{n+Q-1}, ..., y_n):
/// the newest sample first, then successively older ones, so a one-step
/// shift of the state equals moving one row down the embedding.
struct EmbeddedSeries {
  RowMatrix states;       // (N - Q) x k(Q+1)
  Index delays = 0;       // Q
  Index channels = 0;     // k
  Index origin_index = 0; // source index of the oldest sample in row 0
  double dt = 1.0;

  Index size() const { return states.rows(); }
  Index dimension() const { return states.cols(); }

  /// Source-series index of the newest sample held in row n.
  Index newest_index(Index n) const { return origin_index + n + delays; }

  /// Slot q (0 = newest) of state n.
  auto slot(Index n, Index q) const {
    return states.row(n).segment(q * channels, channels);
  }
};

EmbeddedSeries delay_embed(const TimeSeries& ts, Index delays);

/// Builds the state whose newest sample is `values.row(newest)`.
RowVector delay_state(const Eigen::Ref<const RowMatrix>& values, Index newest, Index delays);

} // namespace qpdrive
