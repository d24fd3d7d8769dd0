#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "spotvol/error.hpp"

namespace spotvol {

enum class PriceKind { log, raw };

// One asset's observations. After normalization times lie in [0,1].
struct TickSeries {
  std::string asset_id;
  std::vector<double> times;
  std::vector<double> values;  // log-prices

  std::size_t tick_count() const noexcept { return times.size(); }
};

struct ObservationSet {
  std::vector<TickSeries> series;
  double time_span = 1.0;    // raw duration mapped onto [0,1]
  double time_origin = 0.0;  // raw time mapped onto 0

  std::size_t d() const noexcept { return series.size(); }
};

// Increments of one asset paired with the right endpoint of their interval.
struct AssetIncrements {
  std::vector<double> times;   // t_l, l = 1..N_j
  std::vector<double> deltas;  // X_{t_l} - X_{t_{l-1}}

  std::size_t size() const noexcept { return times.size(); }
};

using IncrementTable = std::vector<AssetIncrements>;

inline void validate(const TickSeries& s) {
  if (s.times.size() != s.values.size())
    throw Error("asset '" + s.asset_id + "': times and values differ in length");
  if (s.times.size() < 2)
    throw Error("asset '" + s.asset_id + "': fewer than 2 ticks");
  for (std::size_t i = 0; i < s.times.size(); ++i) {
    if (!std::isfinite(s.times[i]) || !std::isfinite(s.values[i]))
      throw Error("asset '" + s.asset_id + "': non-finite time or value");
    if (i > 0 && !(s.times[i] > s.times[i - 1])) {
      std::ostringstream msg;
      msg << "asset '" << s.asset_id << "': times not strictly increasing at " << s.times[i];
      throw Error(msg.str());
    }
  }
}

// Checks a set ready for estimation: times already normalized into [0,1].
inline void validate(const ObservationSet& obs) {
  if (obs.series.empty()) throw Error("observation set is empty");
  std::set<std::string> ids;
  for (const auto& s : obs.series) {
    validate(s);
    if (!ids.insert(s.asset_id).second) throw Error("duplicate asset id '" + s.asset_id + "'");
    if (s.times.front() < 0.0 || s.times.back() > 1.0)
      throw Error("asset '" + s.asset_id + "': times outside [0,1]; normalize first");
  }
  if (!(obs.time_span > 0.0)) throw Error("time span must be positive");
}

// Affine map of all timestamps onto [0,1] using the global min and max over
// every asset. Applying it to an already normalized set changes nothing.
inline ObservationSet normalize_times(ObservationSet obs) {
  if (obs.series.empty()) throw Error("observation set is empty");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& s : obs.series) {
    if (s.times.empty()) throw Error("asset '" + s.asset_id + "' has no ticks");
    lo = std::min(lo, s.times.front());
    hi = std::max(hi, s.times.back());
  }
  if (!(hi > lo)) throw Error("all timestamps coincide; cannot normalize");
  const double span = hi - lo;
  if (lo != 0.0 || hi != 1.0) {
    for (auto& s : obs.series)
      for (double& t : s.times) t = (t - lo) / span;
    // Pin endpoints exactly; (hi - lo) / span may round off 1.
    for (auto& s : obs.series) {
      if (s.times.front() <= 0.0) s.times.front() = 0.0;
      if (s.times.back() >= 1.0) s.times.back() = 1.0;
    }
  }
  obs.time_origin = obs.time_origin + lo * obs.time_span;
  obs.time_span *= span;
  return obs;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double parse_double(std::string_view field, std::size_t line_no) {
  double v = 0.0;
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty()) {
    std::ostringstream msg;
    msg << "line " << line_no << ": cannot parse number '" << field << "'";
    throw Error(msg.str());
  }
  return v;
}

}  // namespace detail

// Parses long-format ticks (`asset,time,price`), converts raw prices to logs
// when asked, and normalizes time onto [0,1].
inline ObservationSet parse_ticks_csv(std::istream& in, PriceKind kind) {
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::vector<TickSeries> series;
  std::map<std::string, std::size_t, std::less<>> index;

  while (std::getline(in, line)) {
    ++line_no;
    const auto trimmed = detail::trim(line);
    if (trimmed.empty()) continue;
    const auto fields = detail::split_csv(trimmed);
    if (!header_seen) {
      header_seen = true;
      if (fields.size() != 3 || fields[0] != "asset" || fields[1] != "time" || fields[2] != "price")
        throw Error("ticks CSV: expected header 'asset,time,price'");
      continue;
    }
    if (fields.size() != 3) {
      std::ostringstream msg;
      msg << "line " << line_no << ": expected 3 fields, got " << fields.size();
      throw Error(msg.str());
    }
    const std::string id(fields[0]);
    if (id.empty()) throw Error("line " + std::to_string(line_no) + ": empty asset id");
    const double t = detail::parse_double(fields[1], line_no);
    double p = detail::parse_double(fields[2], line_no);
    if (!std::isfinite(t) || !std::isfinite(p))
      throw Error("line " + std::to_string(line_no) + ": non-finite value");
    if (kind == PriceKind::raw) {
      if (!(p > 0.0)) {
        std::ostringstream msg;
        msg << "line " << line_no << ": non-positive raw price " << p << " for asset '" << id << "'";
        throw Error(msg.str());
      }
      p = std::log(p);
    }

    auto it = index.find(id);
    if (it == index.end()) {
      it = index.emplace(id, series.size()).first;
      series.push_back(TickSeries{id, {}, {}});
    }
    auto& s = series[it->second];
    if (!s.times.empty() && t <= s.times.back()) {
      std::ostringstream msg;
      if (t == s.times.back())
        msg << "asset '" << id << "': duplicate timestamp " << t << " (line " << line_no << ")";
      else
        msg << "asset '" << id << "': timestamp " << t << " out of order (line " << line_no << ")";
      throw Error(msg.str());
    }
    s.times.push_back(t);
    s.values.push_back(p);
  }
  if (!header_seen) throw Error("ticks CSV: empty input");
  if (series.empty()) throw Error("ticks CSV: no data rows");
  for (const auto& s : series)
    if (s.times.size() < 2) throw Error("asset '" + s.asset_id + "': fewer than 2 ticks");

  ObservationSet obs{std::move(series), 1.0, 0.0};
  obs = normalize_times(std::move(obs));
  validate(obs);
  return obs;
}

inline ObservationSet load_csv(const std::string& path, PriceKind kind) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return parse_ticks_csv(in, kind);
}

// Writes values as-is in the `price` column (log-prices).
inline void write_ticks_csv(std::ostream& out, const ObservationSet& obs) {
  const auto old_precision = out.precision(17);
  out << "asset,time,price\n";
  for (const auto& s : obs.series)
    for (std::size_t i = 0; i < s.times.size(); ++i)
      out << s.asset_id << ',' << s.times[i] << ',' << s.values[i] << '\n';
  out.precision(old_precision);
}

inline IncrementTable increments(const ObservationSet& obs) {
  validate(obs);
  IncrementTable table;
  table.reserve(obs.d());
  for (const auto& s : obs.series) {
    AssetIncrements inc;
    inc.times.assign(s.times.begin() + 1, s.times.end());
    inc.deltas.resize(s.values.size() - 1);
    for (std::size_t l = 1; l < s.values.size(); ++l) inc.deltas[l - 1] = s.values[l] - s.values[l - 1];
    table.push_back(std::move(inc));
  }
  return table;
}

inline std::size_t min_increment_count(const IncrementTable& inc) {
  std::size_t n = std::numeric_limits<std::size_t>::max();
  for (const auto& a : inc) n = std::min(n, a.size());
  return inc.empty() ? 0 : n;
}

}  // namespace spotvol
