// Copyright 2026 The BAFDP Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "bafdp/data.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "bafdp/rng.hpp"

namespace bafdp {

namespace {

double uniform_in(CounterStream& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::int64_t days_from_epoch_s(std::int64_t s) { return floor_div(s, 86400); }

// 0 = Sunday.
unsigned weekday_of(std::int64_t epoch_s) {
  using namespace std::chrono;
  const sys_days d{days{days_from_epoch_s(epoch_s)}};
  return weekday{d}.c_encoding();
}

}  // namespace

std::vector<TrafficSeries> generate_synthetic(std::size_t n_cells, std::size_t n_days,
                                              std::uint64_t seed, const SyntheticProfile& profile,
                                              std::vector<std::size_t>* surge_counts) {
  std::vector<TrafficSeries> out;
  out.reserve(n_cells);
  if (surge_counts != nullptr) surge_counts->assign(n_cells, 0);
  const std::size_t hours = n_days * kHoursPerDay;
  for (std::size_t c = 0; c < n_cells; ++c) {
    CounterStream rng(seed, streams::kSynthetic * 100000 + c);
    const double base = uniform_in(rng, profile.base_min, profile.base_max);
    const double daily = uniform_in(rng, profile.daily_amp_min, profile.daily_amp_max);
    const double weekly = uniform_in(rng, profile.weekly_amp_min, profile.weekly_amp_max);
    const double phase = uniform_in(rng, -2.0, 2.0);  // hours
    std::poisson_distribution<int> surges(profile.surge_rate > 0.0 ? profile.surge_rate : 1.0);
    std::lognormal_distribution<double> height(profile.surge_log_mu, profile.surge_log_sigma);

    TrafficSeries s;
    s.cell_id = "cell_" + std::to_string(c);
    s.timestamps.resize(hours);
    s.values.resize(hours);
    for (std::size_t h = 0; h < hours; ++h) {
      const std::int64_t ts = profile.start_epoch_s + static_cast<std::int64_t>(h) * kSecondsPerHour;
      const double hod = static_cast<double>(h % kHoursPerDay);
      const double day = static_cast<double>(h / kHoursPerDay);
      double v = base * (1.0 + daily * std::sin(2.0 * std::numbers::pi * (hod - 9.0 + phase) / 24.0) +
                         weekly * std::cos(2.0 * std::numbers::pi * day / 7.0));
      if (profile.surge_rate > 0.0) {
        const int k = surges(rng);
        for (int i = 0; i < k; ++i) v += base * height(rng);
        if (surge_counts != nullptr) (*surge_counts)[c] += static_cast<std::size_t>(k);
      }
      if (profile.noise_frac > 0.0) v += base * profile.noise_frac * rng.normal();
      s.timestamps[h] = ts;
      s.values[h] = std::max(v, 0.0);
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::int64_t parse_date_days(const std::string& text) {
  int y = 0;
  unsigned mo = 0, d = 0;
  char dash1 = 0, dash2 = 0;
  std::istringstream in(text);
  in >> y >> dash1 >> mo >> dash2 >> d;
  if (!in || dash1 != '-' || dash2 != '-') throw DataError("bad date '" + text + "'");
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{mo}, day{d}};
  if (!ymd.ok()) throw DataError("bad date '" + text + "'");
  return sys_days{ymd}.time_since_epoch().count();
}

std::int64_t parse_iso8601(const std::string& text) {
  if (text.size() < 16) throw DataError("bad timestamp '" + text + "'");
  const std::int64_t days = parse_date_days(text.substr(0, 10));
  if (text[10] != 'T' && text[10] != ' ') throw DataError("bad timestamp '" + text + "'");
  auto two = [&](std::size_t pos) {
    if (pos + 2 > text.size() || !std::isdigit(static_cast<unsigned char>(text[pos])) ||
        !std::isdigit(static_cast<unsigned char>(text[pos + 1]))) {
      throw DataError("bad timestamp '" + text + "'");
    }
    return (text[pos] - '0') * 10 + (text[pos + 1] - '0');
  };
  const int hh = two(11);
  if (text[13] != ':') throw DataError("bad timestamp '" + text + "'");
  const int mm = two(14);
  int ss = 0;
  std::size_t pos = 16;
  if (pos < text.size() && text[pos] == ':') {
    ss = two(pos + 1);
    pos += 3;
    if (pos < text.size() && text[pos] == '.') {
      ++pos;
      while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
    }
  }
  const std::string rest = text.substr(pos);
  if (!(rest.empty() || rest == "Z" || rest == "+00:00" || rest == "+0000")) {
    throw DataError("only UTC timestamps are supported: '" + text + "'");
  }
  if (hh > 23 || mm > 59 || ss > 60) throw DataError("bad timestamp '" + text + "'");
  return days * 86400 + hh * 3600 + mm * 60 + ss;
}

std::string LoadReport::summary() const {
  std::ostringstream os;
  os << "rows: " << rows << "\n";
  os << "timestamp_format: " << (epoch_millis ? "epoch_ms" : "iso8601") << "\n";
  os << "interpolated_hours: " << interpolated_hours << "\n";
  for (const auto& [cell, n] : interpolated_per_cell) {
    os << "interpolated[" << cell << "]: " << n << "\n";
  }
  os << "duplicate_warnings: " << duplicate_warnings << "\n";
  for (const auto& w : warnings) os << "warning: " << w << "\n";
  return os.str();
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  for (auto& f : fields) {
    const auto b = f.find_first_not_of(" \t");
    const auto e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return fields;
}

bool is_integer_text(const std::string& s) {
  if (s.empty()) return false;
  std::size_t i = (s[0] == '-') ? 1 : 0;
  if (i == s.size()) return false;
  for (; i < s.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  }
  return true;
}

}  // namespace

CdrLoadResult load_cdr_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
  const auto header = split_csv_line(line);
  if (header != std::vector<std::string>{"cell_id", "timestamp", "traffic"}) {
    throw DataError(path.string() + ":1: header must be cell_id,timestamp,traffic");
  }
  CdrLoadResult result;
  auto& report = result.report;
  std::optional<bool> millis;
  // cell -> hour bin -> summed traffic; cells kept in first-seen order.
  std::vector<std::string> cell_order;
  std::map<std::string, std::map<std::int64_t, double>> bins;
  std::map<std::string, std::int64_t> last_ts;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (f.size() != 3) throw DataError(where + ": expected 3 fields, got " + std::to_string(f.size()));
    if (f[0].empty()) throw DataError(where + ": empty cell_id");
    const bool row_millis = is_integer_text(f[1]);
    if (!millis) millis = row_millis;
    if (*millis != row_millis) throw DataError(where + ": timestamp format differs from first row");
    std::int64_t ts = 0;
    if (row_millis) {
      const auto [p, ec] = std::from_chars(f[1].data(), f[1].data() + f[1].size(), ts);
      if (ec != std::errc()) throw DataError(where + ": bad epoch timestamp");
      ts = floor_div(ts, 1000);
    } else {
      try {
        ts = parse_iso8601(f[1]);
      } catch (const DataError& e) {
        throw DataError(where + ": " + e.what());
      }
    }
    double traffic = 0.0;
    const auto [p, ec] = std::from_chars(f[2].data(), f[2].data() + f[2].size(), traffic);
    if (ec != std::errc() || p != f[2].data() + f[2].size() || !std::isfinite(traffic) || traffic < 0.0) {
      throw DataError(where + ": traffic must be a nonnegative decimal");
    }
    if (!bins.contains(f[0])) cell_order.push_back(f[0]);
    auto it = last_ts.find(f[0]);
    if (it != last_ts.end() && ts <= it->second) {
      ++report.duplicate_warnings;
      report.warnings.push_back(where + ": non-monotone timestamp for " + f[0] + ", summed into its hour");
    }
    last_ts[f[0]] = ts;
    bins[f[0]][floor_div(ts, kSecondsPerHour) * kSecondsPerHour] += traffic;
    ++report.rows;
  }
  report.epoch_millis = millis.value_or(false);
  for (const auto& cell : cell_order) {
    const auto& b = bins[cell];
    TrafficSeries s;
    s.cell_id = cell;
    const std::int64_t first = b.begin()->first;
    const std::int64_t last = b.rbegin()->first;
    std::size_t filled = 0;
    auto prev = b.begin();
    for (auto cur = b.begin(); cur != b.end(); ++cur) {
      if (cur != b.begin()) {
        const std::int64_t gap = (cur->first - prev->first) / kSecondsPerHour;
        for (std::int64_t k = 1; k < gap; ++k) {
          const double frac = static_cast<double>(k) / static_cast<double>(gap);
          s.timestamps.push_back(prev->first + k * kSecondsPerHour);
          s.values.push_back(prev->second + frac * (cur->second - prev->second));
          ++filled;
        }
      }
      s.timestamps.push_back(cur->first);
      s.values.push_back(cur->second);
      prev = cur;
    }
    (void)first;
    (void)last;
    report.interpolated_hours += filled;
    report.interpolated_per_cell.emplace_back(cell, filled);
    result.series.push_back(std::move(s));
  }
  return result;
}

void write_cdr_csv(const std::filesystem::path& path, std::span<const TrafficSeries> series) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "cell_id,timestamp,traffic\n";
  char buf[64];
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), s.values[i]);
      out << s.cell_id << ',' << s.timestamps[i] * 1000 << ',' << std::string_view(buf, p - buf) << '\n';
    }
  }
}

std::size_t WindowSpec::first_end_index() const {
  const std::size_t periodic = n_p * kHoursPerDay;
  const std::size_t shortterm = n_c == 0 ? 0 : n_c - 1;
  return std::max(periodic, shortterm);
}

WindowedDataset make_windows(const TrafficSeries& series, const WindowSpec& spec,
                             std::span<const std::string> holidays) {
  if (spec.horizon == 0) throw DataError("horizon must be >= 1");
  if (spec.n_c == 0) throw DataError("n_c must be >= 1");
  if (series.size() < spec.min_series_length()) {
    throw DataError("series " + series.cell_id + " has " + std::to_string(series.size()) +
                    " hours; windowing needs at least " + std::to_string(spec.min_series_length()));
  }
  std::set<std::int64_t> holiday_days;
  for (const auto& h : holidays) holiday_days.insert(parse_date_days(h));

  WindowedDataset out;
  out.cell_id = series.cell_id;
  out.spec = spec;
  out.samples.d_x = spec.input_dim();
  out.samples.d_y = spec.horizon;
  std::vector<double> x(spec.input_dim());
  std::vector<double> y(spec.horizon);
  const auto& v = series.values;
  for (std::size_t t = spec.first_end_index(); t + spec.horizon < series.size(); ++t) {
    std::size_t k = 0;
    for (std::size_t j = 0; j < spec.n_c; ++j) x[k++] = v[t + 1 - spec.n_c + j];
    const std::size_t target = t + spec.horizon;
    for (std::size_t day = spec.n_p; day >= 1; --day) x[k++] = v[target - day * kHoursPerDay];
    const std::int64_t target_ts = series.timestamps[target];
    const unsigned wd = weekday_of(target_ts);
    for (unsigned d = 0; d < 7; ++d) x[k++] = d == wd ? 1.0 : 0.0;
    x[k++] = holiday_days.contains(days_from_epoch_s(target_ts)) ? 1.0 : 0.0;
    for (std::size_t h = 0; h < spec.horizon; ++h) y[h] = v[t + 1 + h];
    out.samples.push_back(x, y);
    out.end_index.push_back(t);
  }
  return out;
}

TrainTestSplit split_train_test(const WindowedDataset& data, std::size_t series_length,
                                std::size_t test_hours) {
  if (series_length <= test_hours) throw DataError("series shorter than the test span");
  const std::size_t test_start = series_length - test_hours;
  TrainTestSplit out;
  for (auto* part : {&out.train, &out.test}) {
    part->cell_id = data.cell_id;
    part->spec = data.spec;
    part->norm = data.norm;
    part->samples.d_x = data.samples.d_x;
    part->samples.d_y = data.samples.d_y;
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::size_t t = data.end_index[i];
    WindowedDataset* dst = nullptr;
    if (t + data.spec.horizon < test_start) {
      dst = &out.train;
    } else if (t + 1 >= test_start) {
      dst = &out.test;
    }
    if (dst == nullptr) continue;
    dst->samples.push_back(data.samples.x(i), data.samples.y(i));
    dst->end_index.push_back(t);
  }
  return out;
}

std::vector<double> MinMax::apply(std::span<const double> v) const {
  if (lo.empty()) throw DataError("min-max normalization applied before fit");
  if (v.size() != lo.size()) throw ShapeError("min-max width mismatch");
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double range = hi[i] - lo[i];
    out[i] = range > 0.0 ? (v[i] - lo[i]) / range : 0.0;
  }
  return out;
}

std::vector<double> MinMax::invert(std::span<const double> v) const {
  if (lo.empty()) throw DataError("min-max inversion before fit");
  if (v.size() != lo.size()) throw ShapeError("min-max width mismatch");
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] * (hi[i] - lo[i]) + lo[i];
  return out;
}

namespace {

void extend(MinMax& mm, std::span<const double> row) {
  if (mm.lo.empty()) {
    mm.lo.assign(row.begin(), row.end());
    mm.hi.assign(row.begin(), row.end());
    return;
  }
  for (std::size_t i = 0; i < row.size(); ++i) {
    mm.lo[i] = std::min(mm.lo[i], row[i]);
    mm.hi[i] = std::max(mm.hi[i], row[i]);
  }
}

}  // namespace

NormState minmax_fit(std::span<const WindowedDataset> training) {
  NormState norm;
  for (const auto& ds : training) {
    for (std::size_t i = 0; i < ds.size(); ++i) {
      extend(norm.x, ds.samples.x(i));
      extend(norm.y, ds.samples.y(i));
    }
  }
  if (!norm.fitted()) throw DataError("cannot fit normalization on an empty training set");
  return norm;
}

WindowedDataset minmax_apply(const WindowedDataset& data, const NormState& norm) {
  if (!norm.fitted()) throw DataError("min-max normalization applied before fit");
  WindowedDataset out = data;
  out.samples.inputs.clear();
  out.samples.targets.clear();
  for (std::size_t i = 0; i < data.size(); ++i) {
    out.samples.push_back(norm.x.apply(data.samples.x(i)), norm.y.apply(data.samples.y(i)));
  }
  out.norm = norm;
  return out;
}

PartitionScheme parse_partition_scheme(const std::string& name) {
  if (name == "by_cell") return PartitionScheme::by_cell;
  if (name == "iid") return PartitionScheme::iid;
  throw DataError("unknown partition scheme '" + name + "'");
}

std::string to_string(PartitionScheme scheme) {
  return scheme == PartitionScheme::by_cell ? "by_cell" : "iid";
}

std::vector<WindowedDataset> partition_clients(std::span<const WindowedDataset> cells,
                                               std::size_t m, PartitionScheme scheme,
                                               std::uint64_t seed) {
  if (m == 0) throw DataError("need at least one client");
  if (cells.empty()) throw DataError("no cells to partition");
  std::vector<WindowedDataset> out(m);
  for (auto& c : out) {
    c.spec = cells.front().spec;
    c.norm = cells.front().norm;
    c.samples.d_x = cells.front().samples.d_x;
    c.samples.d_y = cells.front().samples.d_y;
  }
  if (scheme == PartitionScheme::by_cell) {
    if (m > cells.size()) {
      throw DataError("by_cell partition needs at least as many cells (" + std::to_string(cells.size()) +
                      ") as clients (" + std::to_string(m) + ")");
    }
    std::vector<std::pair<double, std::size_t>> volume;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto& t = cells[c].samples.targets;
      volume.emplace_back(std::accumulate(t.begin(), t.end(), 0.0), c);
    }
    std::stable_sort(volume.begin(), volume.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t rank = 0; rank < volume.size(); ++rank) {
      auto& dst = out[rank % m];
      const auto& src = cells[volume[rank].second];
      dst.cell_id += (dst.cell_id.empty() ? "" : "+") + src.cell_id;
      dst.samples.inputs.insert(dst.samples.inputs.end(), src.samples.inputs.begin(), src.samples.inputs.end());
      dst.samples.targets.insert(dst.samples.targets.end(), src.samples.targets.begin(), src.samples.targets.end());
      dst.end_index.insert(dst.end_index.end(), src.end_index.begin(), src.end_index.end());
    }
    return out;
  }
  std::vector<std::pair<std::size_t, std::size_t>> pool;  // (cell, row)
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (std::size_t i = 0; i < cells[c].size(); ++i) pool.emplace_back(c, i);
  }
  CounterStream rng(seed, streams::kPartition);
  for (std::size_t i = pool.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(pool[i - 1], pool[j]);
  }
  for (std::size_t k = 0; k < pool.size(); ++k) {
    auto& dst = out[k % m];
    const auto& [c, i] = pool[k];
    dst.samples.push_back(cells[c].samples.x(i), cells[c].samples.y(i));
    dst.end_index.push_back(cells[c].end_index[i]);
  }
  for (std::size_t k = 0; k < m; ++k) out[k].cell_id = "iid_" + std::to_string(k);
  return out;
}

}  // namespace bafdp
