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

#ifndef BAFDP_DATA_HPP_
#define BAFDP_DATA_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bafdp/core_math.hpp"

namespace bafdp {

class DataError : public Error {
 public:
  using Error::Error;
};

inline constexpr std::int64_t kSecondsPerHour = 3600;
inline constexpr std::size_t kHoursPerDay = 24;
inline constexpr std::size_t kTestHours = 7 * kHoursPerDay;

// One cell's hourly traffic. timestamps are UTC epoch seconds, gap-free.
struct TrafficSeries {
  std::string cell_id;
  std::vector<std::int64_t> timestamps;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
};

struct SyntheticProfile {
  std::int64_t start_epoch_s = 1383264000;  // 2013-11-01T00:00:00Z
  double base_min = 50.0;
  double base_max = 500.0;
  double daily_amp_min = 0.3;   // fraction of base
  double daily_amp_max = 0.6;
  double weekly_amp_min = 0.05;
  double weekly_amp_max = 0.15;
  double surge_rate = 0.005;    // expected surges per hour
  double surge_log_mu = 0.0;    // surge height is base * lognormal(mu, sigma)
  double surge_log_sigma = 0.5;
  double noise_frac = 0.05;     // Gaussian noise std as a fraction of base
};

// Base level + daily sinusoid + weekly modulation + lognormal surges +
// Gaussian noise, clamped at zero. Deterministic in seed. If surge_counts is
// given it receives the number of surge events per cell.
std::vector<TrafficSeries> generate_synthetic(std::size_t n_cells, std::size_t n_days,
                                              std::uint64_t seed, const SyntheticProfile& profile,
                                              std::vector<std::size_t>* surge_counts = nullptr);

struct LoadReport {
  std::size_t rows = 0;
  std::size_t interpolated_hours = 0;
  std::vector<std::pair<std::string, std::size_t>> interpolated_per_cell;
  std::size_t duplicate_warnings = 0;
  std::vector<std::string> warnings;
  bool epoch_millis = false;

  std::string summary() const;
};

struct CdrLoadResult {
  std::vector<TrafficSeries> series;
  LoadReport report;
};

// Reads `cell_id,timestamp,traffic` rows, bins them hourly by summation and
// fills missing hours by linear interpolation. Timestamps are ISO-8601 UTC
// or epoch milliseconds, detected from the first data row.
CdrLoadResult load_cdr_csv(const std::filesystem::path& path);

// Writes one row per hour with epoch-millisecond timestamps and
// round-trippable values.
void write_cdr_csv(const std::filesystem::path& path, std::span<const TrafficSeries> series);

struct WindowSpec {
  std::size_t n_c = 12;  // short-term lags, hours
  std::size_t n_p = 3;   // periodic lags, days
  std::size_t horizon = 1;

  std::size_t input_dim() const { return n_c + n_p + 8; }
  std::size_t first_end_index() const;
  std::size_t min_series_length() const { return first_end_index() + horizon + 1; }
};

struct MinMax {
  std::vector<double> lo;
  std::vector<double> hi;

  std::vector<double> apply(std::span<const double> v) const;
  std::vector<double> invert(std::span<const double> v) const;
};

struct NormState {
  MinMax x;
  MinMax y;

  bool fitted() const { return !x.lo.empty() && !y.lo.empty(); }
};

struct WindowedDataset {
  std::string cell_id;
  WindowSpec spec;
  // Row i: x = [x^c, x^p, weekday one-hot (Sunday first), holiday flag],
  // y = the next `horizon` values after end_index[i].
  Batch samples;
  std::vector<std::size_t> end_index;
  std::optional<NormState> norm;

  std::size_t size() const { return samples.size(); }
};

// Holidays are "YYYY-MM-DD" UTC dates.
WindowedDataset make_windows(const TrafficSeries& series, const WindowSpec& spec,
                             std::span<const std::string> holidays = {});

struct TrainTestSplit {
  WindowedDataset train;
  WindowedDataset test;
};

// Test = windows whose targets fall in the final test_hours of the series;
// train = windows whose targets all precede that span.
TrainTestSplit split_train_test(const WindowedDataset& data, std::size_t series_length,
                                std::size_t test_hours = kTestHours);

NormState minmax_fit(std::span<const WindowedDataset> training);
WindowedDataset minmax_apply(const WindowedDataset& data, const NormState& norm);

enum class PartitionScheme { by_cell, iid };

PartitionScheme parse_partition_scheme(const std::string& name);
std::string to_string(PartitionScheme scheme);

// by_cell: cells ranked by total target volume are dealt round-robin.
// iid: all samples shuffled with `seed` and dealt round-robin.
std::vector<WindowedDataset> partition_clients(std::span<const WindowedDataset> cells,
                                               std::size_t m, PartitionScheme scheme,
                                               std::uint64_t seed);

// Parses ISO-8601 UTC ("2013-11-01T05:00:00Z", "2013-11-01 05:00") to epoch
// seconds.
std::int64_t parse_iso8601(const std::string& text);
std::int64_t parse_date_days(const std::string& yyyy_mm_dd);

}  // namespace bafdp

#endif  // BAFDP_DATA_HPP_
