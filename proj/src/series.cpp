#include "loadcast/series.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>

#include "loadcast/csv.hpp"
#include "loadcast/errors.hpp"

namespace loadcast::series {

namespace {

// Days since 1970-01-01 for a civil date (Howard Hinnant's algorithm).
std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return static_cast<std::int64_t>(era) * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

// "YYYY-MM-DD HH:MM[:SS]" with ' ' or 'T' separator -> minutes since epoch.
bool parse_timestamp(const std::string& s, std::int64_t& minutes_out) {
    int y, mo, d, h, mi, se = 0;
    char sep;
    int n = std::sscanf(s.c_str(), "%4d-%2d-%2d%c%2d:%2d:%2d", &y, &mo, &d, &sep, &h, &mi, &se);
    if (n < 6 || (sep != ' ' && sep != 'T')) return false;
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 || mi > 59) return false;
    if (se != 0) return false;  // readings sit on the 15-minute grid
    minutes_out = days_from_civil(y, mo, d) * 1440 + h * 60 + mi;
    return true;
}

}  // namespace

Vec LoadDataset::flat_load() const {
    Vec out(static_cast<Eigen::Index>(days.size()) * freq_per_day);
    Eigen::Index at = 0;
    for (const auto& day : days) {
        out.segment(at, freq_per_day) = day.load;
        at += freq_per_day;
    }
    return out;
}

LoadDataset ingest_csv(const std::string& path, const ColumnLayout& layout) {
    const csv::Table table = csv::read_file(path);
    const int sched_cols = layout.schedule_columns();
    const std::size_t want_cols = 2 + static_cast<std::size_t>(sched_cols);
    if (table.header.size() != want_cols) {
        throw IngestError("expected " + std::to_string(want_cols) + " columns (timestamp, load, " +
                          std::to_string(sched_cols) + " schedules), file has " +
                          std::to_string(table.header.size()));
    }
    const int step_minutes = 1440 / kStepsPerDay;

    std::vector<double> raw_load;
    std::vector<std::vector<double>> raw_sched(static_cast<std::size_t>(sched_cols));
    raw_load.reserve(table.rows.size());

    std::int64_t prev_minutes = 0;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::string where = "row " + std::to_string(r + 2);  // 1-based, after header
        if (row.size() != want_cols) throw IngestError(where + ": wrong cell count");

        std::int64_t minutes;
        if (!parse_timestamp(row[0], minutes)) {
            throw IngestError(where + ": bad timestamp '" + row[0] + "'");
        }
        if (r == 0) {
            if (minutes % 1440 != 0) {
                throw IngestError("first timestamp must start a day at 00:00, got '" + row[0] + "'");
            }
        } else if (minutes == prev_minutes) {
            throw IngestError(where + ": duplicate timestamp '" + row[0] + "'");
        } else if (minutes != prev_minutes + step_minutes) {
            throw IngestError(where + ": timestamp '" + row[0] + "' breaks the " +
                              std::to_string(step_minutes) + "-minute grid (missing rows?)");
        }
        prev_minutes = minutes;

        double v;
        if (!csv::parse_double(row[1], v)) {
            throw IngestError(where + ", column '" + table.header[1] + "': non-numeric cell '" +
                              row[1] + "'");
        }
        raw_load.push_back(v);
        for (int c = 0; c < sched_cols; ++c) {
            if (!csv::parse_double(row[2 + c], v)) {
                throw IngestError(where + ", column '" + table.header[2 + c] +
                                  "': non-numeric cell '" + row[2 + c] + "'");
            }
            raw_sched[static_cast<std::size_t>(c)].push_back(v);
        }
    }

    const std::size_t n = raw_load.size();
    if (n % kStepsPerDay != 0) {
        throw IngestError("file ends mid-day: " + std::to_string(n) + " rows is not a multiple of " +
                          std::to_string(kStepsPerDay));
    }
    const std::size_t n_days = n / kStepsPerDay;
    if (n_days < 3) {
        throw InsufficientData("need at least 3 full days, got " + std::to_string(n_days));
    }

    const auto [mn, mx] = std::minmax_element(raw_load.begin(), raw_load.end());
    if (*mx <= *mn) {
        throw IngestError("constant load column (min == max): scaling undefined");
    }

    LoadDataset ds;
    ds.freq_per_day = kStepsPerDay;
    ds.scale = ScaleParams{*mn, *mx};
    ds.days.resize(n_days);
    const std::int64_t first_day = (prev_minutes - static_cast<std::int64_t>(n - 1) * step_minutes) / 1440;
    for (std::size_t d = 0; d < n_days; ++d) {
        CalendarDay& day = ds.days[d];
        day.date = first_day + static_cast<std::int64_t>(d);
        day.load.resize(kStepsPerDay);
        for (int s = 0; s < kStepsPerDay; ++s) {
            day.load[s] = ds.scale.scale(raw_load[d * kStepsPerDay + static_cast<std::size_t>(s)]);
        }
        if (layout.pre_aggregated) {
            day.sched.resize(kStepsPerDay, kGroups);
            for (int c = 0; c < kGroups; ++c) {
                for (int s = 0; s < kStepsPerDay; ++s) {
                    day.sched(s, c) = raw_sched[static_cast<std::size_t>(c)]
                                               [d * kStepsPerDay + static_cast<std::size_t>(s)];
                }
            }
        } else {
            Mat raw(kStepsPerDay, sched_cols);
            for (int c = 0; c < sched_cols; ++c) {
                for (int s = 0; s < kStepsPerDay; ++s) {
                    raw(s, c) = raw_sched[static_cast<std::size_t>(c)]
                                         [d * kStepsPerDay + static_cast<std::size_t>(s)];
                }
            }
            day.sched = aggregate_schedules(raw, layout.group_of);
        }
    }
    return ds;
}

Mat aggregate_schedules(const Mat& raw, const std::vector<int>& groups) {
    if (static_cast<Eigen::Index>(groups.size()) != raw.cols()) {
        throw GroupingError("group map covers " + std::to_string(groups.size()) + " columns, raw has " +
                            std::to_string(raw.cols()));
    }
    Mat out = Mat::Zero(raw.rows(), kGroups);
    for (Eigen::Index c = 0; c < raw.cols(); ++c) {
        const int g = groups[static_cast<std::size_t>(c)];
        if (g < 1 || g > kGroups) {
            throw GroupingError("schedule column " + std::to_string(c) + " assigned to invalid group " +
                                std::to_string(g));
        }
        out.col(g - 1) += raw.col(c);
    }
    return out;
}

LoadDataset shift_schedules(const LoadDataset& dataset, int lag_steps) {
    if (lag_steps < 0) throw ParamError("lag_steps must be >= 0");
    if (lag_steps >= dataset.freq_per_day) {
        throw LagError("lag_steps " + std::to_string(lag_steps) + " >= steps per day " +
                       std::to_string(dataset.freq_per_day));
    }
    if (lag_steps == 0) return dataset;
    if (dataset.n_days() < 2) {
        throw LagError("shift needs at least 2 days to drop the incomplete boundary day");
    }

    const int S = dataset.freq_per_day;
    LoadDataset out;
    out.freq_per_day = S;
    out.scale = dataset.scale;
    out.days.resize(dataset.days.size() - 1);  // trailing day loses schedule coverage
    for (std::size_t d = 0; d + 1 < dataset.days.size(); ++d) {
        CalendarDay& day = out.days[d];
        day.date = dataset.days[d].date;
        day.load = dataset.days[d].load;
        day.sched.resize(S, kGroups);
        for (int s = 0; s < S; ++s) {
            const int src = s + lag_steps;
            const CalendarDay& from = src < S ? dataset.days[d] : dataset.days[d + 1];
            day.sched.row(s) = from.sched.row(src % S);
        }
    }
    return out;
}

SampleSplit build_samples(const LoadDataset& dataset, int split_at) {
    const int n_days = dataset.n_days();
    if (n_days < 3) throw InsufficientData("need at least 3 days to form one sample pair");
    const int n_pairs = n_days - 2;  // day t needs t+1 and t+2
    if (split_at < 1 || split_at > n_pairs - 1) {
        throw SplitError("split_at " + std::to_string(split_at) +
                         " must leave at least one train and one test pair (valid range 1.." +
                         std::to_string(n_pairs - 1) + ")");
    }

    const int S = dataset.freq_per_day;
    SampleSplit split;
    for (int t = 0; t < n_pairs; ++t) {
        SamplePair pair;
        pair.day_index = t;
        pair.predictors.resize(S, kFeatureCols);
        pair.predictors.leftCols(kGroups) = dataset.days[static_cast<std::size_t>(t)].sched;
        pair.predictors.col(kGroups) = dataset.days[static_cast<std::size_t>(t)].load;
        pair.target.resize(2 * S);
        pair.target.head(S) = dataset.days[static_cast<std::size_t>(t) + 1].load;
        pair.target.tail(S) = dataset.days[static_cast<std::size_t>(t) + 2].load;
        (t < split_at ? split.train : split.test).push_back(std::move(pair));
    }
    return split;
}

void export_samples_csv(const std::string& path, const std::vector<SamplePair>& samples) {
    csv::Table table;
    table.header.push_back("day_index");
    if (!samples.empty()) {
        const int S = static_cast<int>(samples.front().predictors.rows());
        const char* names[kFeatureCols] = {"x1", "x2", "x3", "load"};
        for (int c = 0; c < kFeatureCols; ++c) {
            for (int s = 0; s < S; ++s) {
                table.header.push_back(std::string(names[c]) + "_" + std::to_string(s));
            }
        }
        for (int p = 0; p < 2 * S; ++p) table.header.push_back("target_" + std::to_string(p));
    }
    for (const auto& sample : samples) {
        std::vector<std::string> row;
        row.push_back(std::to_string(sample.day_index));
        for (Eigen::Index c = 0; c < sample.predictors.cols(); ++c) {
            for (Eigen::Index s = 0; s < sample.predictors.rows(); ++s) {
                row.push_back(csv::format_double(sample.predictors(s, c)));
            }
        }
        for (Eigen::Index p = 0; p < sample.target.size(); ++p) {
            row.push_back(csv::format_double(sample.target[p]));
        }
        table.rows.push_back(std::move(row));
    }
    csv::write_file(path, table);
}

}  // namespace loadcast::series
