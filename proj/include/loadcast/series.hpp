#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "loadcast/linalg.hpp"

namespace loadcast::series {

inline constexpr int kGroups = 3;       // aggregated schedule channels
inline constexpr int kFeatureCols = 4;  // x1, x2, x3, load
inline constexpr int kStepsPerDay = 96; // 15-minute resolution

// Min-max scaling of the raw load column into [0, 1].
struct ScaleParams {
    double min = 0.0;
    double max = 1.0;

    double scale(double raw) const { return (raw - min) / (max - min); }
    double unscale(double s) const { return min + s * (max - min); }
};

struct CalendarDay {
    std::int64_t date = 0;  // days since 1970-01-01
    Vec load;               // freq_per_day scaled values in [0, 1]
    Mat sched;              // freq_per_day x 3 aggregated schedule volumes
};

struct LoadDataset {
    std::vector<CalendarDay> days;
    int freq_per_day = kStepsPerDay;
    ScaleParams scale;

    int n_days() const { return static_cast<int>(days.size()); }
    // Load value at a flat 15-minute index across days.
    double load_at(std::int64_t flat) const {
        return days[flat / freq_per_day].load[flat % freq_per_day];
    }
    // All scaled loads concatenated in time order.
    Vec flat_load() const;
};

// One supervised example: day-t features against the following two days.
struct SamplePair {
    int day_index = 0;
    Mat predictors;  // freq_per_day x 4, columns x1, x2, x3, load
    Vec target;      // 2 * freq_per_day scaled loads of days t+1, t+2
};

struct SampleSplit {
    std::vector<SamplePair> train;
    std::vector<SamplePair> test;
};

// Input column layout. Either the CSV already carries the 3 aggregated
// group columns, or it carries raw schedule columns plus a column->group
// assignment (values 1..3).
struct ColumnLayout {
    bool pre_aggregated = true;
    std::vector<int> group_of;  // one entry per raw schedule column when !pre_aggregated

    int schedule_columns() const {
        return pre_aggregated ? kGroups : static_cast<int>(group_of.size());
    }
};

// Reads and validates a CSV (header; timestamp, load, schedules), scales the
// load column into [0,1] and aggregates raw schedules when needed. Throws
// IngestError on malformed rows, duplicate/gapped timestamps, partial days or
// a constant load column; InsufficientData below 3 full days.
LoadDataset ingest_csv(const std::string& path, const ColumnLayout& layout);

// Sums raw schedule columns into the 3 groups. groups[j] in {1,2,3} assigns
// raw column j; anything else throws GroupingError.
Mat aggregate_schedules(const Mat& raw, const std::vector<int>& groups);

// Advances schedule channels by lag_steps so they align contemporaneously
// with the load: shifted[g] = recorded[g + lag]. The recorded head values
// describe pre-sample production and are discarded; the trailing day, left
// without full schedule coverage, is dropped and the day count adjusted.
LoadDataset shift_schedules(const LoadDataset& dataset, int lag_steps = 8);

// Builds one SamplePair per day t with both t+1 and t+2 present, then splits
// chronologically: pairs with t < split_at train, the rest test.
SampleSplit build_samples(const LoadDataset& dataset, int split_at);

// Debug export: one flattened predictor/target row per sample.
void export_samples_csv(const std::string& path, const std::vector<SamplePair>& samples);

}  // namespace loadcast::series
