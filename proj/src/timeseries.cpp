#include "qpdrive/timeseries.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace qpdrive {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_number(const std::string& field, std::size_t row, std::size_t col) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (field.empty() || ec != std::errc() || ptr != end) {
    throw InputError("csv row " + std::to_string(row) + ", column " + std::to_string(col + 1) +
                     ": '" + field + "' is not a number");
  }
  if (!std::isfinite(value)) {
    throw InputError("csv row " + std::to_string(row) + ", column " + std::to_string(col + 1) +
                     ": non-finite value");
  }
  return value;
}

} // namespace

void TimeSeries::validate() const {
  if (values.rows() < 2) throw InputError("time series needs at least 2 samples");
  if (values.cols() < 1) throw InputError("time series needs at least 1 channel");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InputError("sampling interval dt must be positive");
  if (!values.allFinite()) throw InputError("time series contains non-finite values");
  if (!channel_names.empty() && static_cast<Index>(channel_names.size()) != values.cols())
    throw InputError("channel name count does not match channel count");
}

ChannelStats ChannelStats::identity(Index k) {
  ChannelStats s;
  s.mean = Vector::Zero(k);
  s.scale = Vector::Ones(k);
  s.constant.assign(static_cast<std::size_t>(k), false);
  return s;
}

RowVector ChannelStats::apply(const Eigen::Ref<const RowVector>& sample) const {
  return (sample - mean.transpose()).cwiseQuotient(scale.transpose());
}

RowVector ChannelStats::invert(const Eigen::Ref<const RowVector>& sample) const {
  return sample.cwiseProduct(scale.transpose()) + mean.transpose();
}

std::string to_string(ScaleMode mode) {
  return mode == ScaleMode::StdDev ? "std" : "sup";
}

ScaleMode scale_mode_from_string(const std::string& name) {
  if (name == "std") return ScaleMode::StdDev;
  if (name == "sup") return ScaleMode::SupNorm;
  throw InputError("unknown scale mode '" + name + "' (expected std or sup)");
}

TimeSeries parse_csv(std::istream& in, double dt, bool header) {
  TimeSeries ts;
  ts.dt = dt;
  std::vector<double> flat;
  Index k = -1;
  std::string line;
  std::size_t row = 0;
  bool header_pending = header;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto fields = split_fields(line);
    if (header_pending) {
      ts.channel_names = fields;
      header_pending = false;
      continue;
    }
    ++row;
    if (k < 0) k = static_cast<Index>(fields.size());
    if (static_cast<Index>(fields.size()) != k) {
      throw InputError("csv row " + std::to_string(row) + ": expected " + std::to_string(k) +
                       " fields, found " + std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) flat.push_back(parse_number(fields[c], row, c));
  }
  if (row == 0) throw InputError("csv input contains no data rows");
  if (!ts.channel_names.empty() && static_cast<Index>(ts.channel_names.size()) != k) {
    throw InputError("csv header names " + std::to_string(ts.channel_names.size()) +
                     " columns but rows have " + std::to_string(k));
  }
  ts.values = Eigen::Map<const RowMatrix>(flat.data(), static_cast<Index>(row), k);
  return ts;
}

TimeSeries load_csv(const std::filesystem::path& path, double dt, bool header) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  return parse_csv(in, dt, header);
}

void write_csv(const std::filesystem::path& path, const TimeSeries& ts) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  if (!ts.channel_names.empty()) {
    for (std::size_t c = 0; c < ts.channel_names.size(); ++c)
      out << (c ? "," : "") << ts.channel_names[c];
    out << '\n';
  }
  out << std::setprecision(17);
  for (Index n = 0; n < ts.values.rows(); ++n) {
    for (Index c = 0; c < ts.values.cols(); ++c) out << (c ? "," : "") << ts.values(n, c);
    out << '\n';
  }
}

std::pair<TimeSeries, ChannelStats> standardize(const TimeSeries& ts, ScaleMode mode) {
  const Index n = ts.samples();
  const Index k = ts.channels();
  ChannelStats stats;
  stats.mode = mode;
  stats.mean = ts.values.colwise().mean().transpose();
  stats.scale.resize(k);
  stats.constant.assign(static_cast<std::size_t>(k), false);
  for (Index c = 0; c < k; ++c) {
    const auto centred = (ts.values.col(c).array() - stats.mean(c));
    double spread = mode == ScaleMode::StdDev
                        ? std::sqrt(centred.square().sum() / static_cast<double>(n))
                        : centred.abs().maxCoeff();
    if (!(spread > 0.0)) {
      spread = 1.0;
      stats.constant[static_cast<std::size_t>(c)] = true;
    }
    stats.scale(c) = spread;
  }
  TimeSeries out = ts;
  for (Index r = 0; r < n; ++r) out.values.row(r) = stats.apply(ts.values.row(r));
  return {std::move(out), std::move(stats)};
}

TimeSeries unstandardize(const TimeSeries& ts, const ChannelStats& stats) {
  if (ts.channels() != stats.channels())
    throw InputError("channel count does not match channel statistics");
  TimeSeries out = ts;
  for (Index r = 0; r < ts.samples(); ++r) out.values.row(r) = stats.invert(ts.values.row(r));
  return out;
}

RowVector delay_state(const Eigen::Ref<const RowMatrix>& values, Index newest, Index delays) {
  const Index k = values.cols();
  if (newest < delays || newest >= values.rows())
    throw InputError("delay state at sample " + std::to_string(newest) + " needs " +
                     std::to_string(delays) + " earlier samples");
  RowVector state(k * (delays + 1));
  for (Index q = 0; q <= delays; ++q) state.segment(q * k, k) = values.row(newest - q);
  return state;
}

EmbeddedSeries delay_embed(const TimeSeries& ts, Index delays) {
  const Index n = ts.samples();
  const Index k = ts.channels();
  if (delays < 0) throw InputError("number of delays must be nonnegative");
  if (delays >= n)
    throw InputError("number of delays (" + std::to_string(delays) +
                     ") must be smaller than the series length (" + std::to_string(n) + ")");
  EmbeddedSeries emb;
  emb.delays = delays;
  emb.channels = k;
  emb.dt = ts.dt;
  emb.origin_index = 0;
  emb.states.resize(n - delays, k * (delays + 1));
  for (Index row = 0; row < n - delays; ++row)
    for (Index q = 0; q <= delays; ++q)
      emb.states.row(row).segment(q * k, k) = ts.values.row(row + delays - q);
  return emb;
}

} // namespace qpdrive
