#pragma once

// CSV ingestion of age-specific rate tables, long or wide layout.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "phasefit/smooth.hpp"

namespace phasefit {

enum class TableFormat { long_format, wide_format };

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            fields.push_back(trim(line.substr(start, i - start)));
            start = i + 1;
        }
    }
    return fields;
}

inline bool parse_number(std::string_view field, double& out) {
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last && !field.empty();
}

inline double parse_rate(std::string_view field, std::size_t line_no) {
    double rate = 0.0;
    if (!parse_number(field, rate))
        throw std::invalid_argument("line " + std::to_string(line_no) + ": non-numeric rate '" +
                                    std::string(field) + "'");
    if (!std::isfinite(rate))
        throw std::invalid_argument("line " + std::to_string(line_no) + ": non-finite rate");
    if (rate < 0.0)
        throw std::invalid_argument("line " + std::to_string(line_no) + ": negative rate " +
                                    std::string(field));
    return rate;
}

inline double parse_age(std::string_view field, std::size_t line_no) {
    double age = 0.0;
    if (!parse_number(field, age) || !std::isfinite(age))
        throw std::invalid_argument("line " + std::to_string(line_no) + ": non-numeric age '" +
                                    std::string(field) + "'");
    return age;
}

/// Lines of the input with Windows line endings tolerated and blank lines
/// dropped; second member of each pair is the 1-based line number.
inline std::vector<std::pair<std::string_view, std::size_t>> logical_lines(
    std::string_view text) {
    std::vector<std::pair<std::string_view, std::size_t>> lines;
    std::size_t start = 0, line_no = 1;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        const bool last = end == std::string_view::npos;
        if (last) end = text.size();
        std::string_view line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!trim(line).empty()) lines.emplace_back(line, line_no);
        if (last) break;
        start = end + 1;
        ++line_no;
    }
    return lines;
}

}  // namespace detail

/// Age-by-year table of rates. Wide input always yields a complete grid;
/// long input may omit (year, age) cells, in which case a year simply has
/// fewer observations.
class RateTable {
public:
    RateTable(std::vector<std::string> years,
              std::vector<std::vector<Observation>> observations_per_year)
        : years_(std::move(years)), obs_(std::move(observations_per_year)) {
        if (years_.size() != obs_.size())
            throw std::invalid_argument("RateTable: one observation list per year required");
        if (years_.empty()) throw std::invalid_argument("RateTable: empty table");
        for (std::size_t y = 0; y < years_.size(); ++y) {
            if (obs_[y].empty())
                throw std::invalid_argument("RateTable: year " + years_[y] +
                                            " has no observations");
            for (std::size_t i = 0; i < obs_[y].size(); ++i) {
                const Observation& o = obs_[y][i];
                if (!std::isfinite(o.age) || !std::isfinite(o.rate) || o.rate < 0.0)
                    throw std::invalid_argument("RateTable: invalid cell in year " + years_[y]);
                if (i > 0 && !(obs_[y][i - 1].age < o.age))
                    throw std::invalid_argument("RateTable: duplicate or unsorted ages in year " +
                                                years_[y]);
                age_union_.push_back(o.age);
            }
        }
        std::sort(age_union_.begin(), age_union_.end());
        age_union_.erase(std::unique(age_union_.begin(), age_union_.end()), age_union_.end());
    }

    const std::vector<std::string>& years() const { return years_; }
    const std::vector<double>& ages() const { return age_union_; }

    const std::vector<Observation>& observations(std::size_t year_index) const {
        return obs_[year_index];
    }

    std::size_t year_index(std::string_view year) const {
        for (std::size_t y = 0; y < years_.size(); ++y)
            if (years_[y] == year) return y;
        throw std::invalid_argument("unknown year '" + std::string(year) + "'");
    }

    /// True when every year covers the full age union.
    bool complete() const {
        for (const auto& o : obs_)
            if (o.size() != age_union_.size()) return false;
        return true;
    }

    bool operator==(const RateTable& other) const {
        if (years_ != other.years_) return false;
        for (std::size_t y = 0; y < obs_.size(); ++y) {
            if (obs_[y].size() != other.obs_[y].size()) return false;
            for (std::size_t i = 0; i < obs_[y].size(); ++i)
                if (obs_[y][i].age != other.obs_[y][i].age ||
                    obs_[y][i].rate != other.obs_[y][i].rate)
                    return false;
        }
        return true;
    }

private:
    std::vector<std::string> years_;
    std::vector<std::vector<Observation>> obs_;
    std::vector<double> age_union_;
};

namespace detail {

inline RateTable parse_long(const std::vector<std::pair<std::string_view, std::size_t>>& lines) {
    std::vector<std::string> years;
    std::vector<std::vector<Observation>> obs;
    std::size_t start_row = 0;

    // the first line is a header if any of its fields is non-numeric
    if (!lines.empty()) {
        double ignored = 0.0;
        bool any_non_numeric = false;
        for (std::string_view f : split_fields(lines[0].first))
            if (!parse_number(f, ignored)) any_non_numeric = true;
        if (any_non_numeric) start_row = 1;
    }

    for (std::size_t r = start_row; r < lines.size(); ++r) {
        const auto& [line, line_no] = lines[r];
        const std::vector<std::string_view> fields = split_fields(line);
        if (fields.size() != 3)
            throw std::invalid_argument("line " + std::to_string(line_no) +
                                        ": malformed row (expected year,age,rate)");
        const std::string year(fields[0]);
        if (year.empty())
            throw std::invalid_argument("line " + std::to_string(line_no) + ": empty year label");
        const double age = parse_age(fields[1], line_no);
        const double rate = parse_rate(fields[2], line_no);

        std::size_t y = 0;
        for (; y < years.size(); ++y)
            if (years[y] == year) break;
        if (y == years.size()) {
            years.push_back(year);
            obs.emplace_back();
        }
        for (const Observation& o : obs[y])
            if (o.age == age)
                throw std::invalid_argument("line " + std::to_string(line_no) +
                                            ": duplicate cell for year " + year + ", age " +
                                            std::string(fields[1]));
        obs[y].push_back({age, rate});
    }

    if (years.empty()) throw std::invalid_argument("empty table");
    for (auto& o : obs)
        std::sort(o.begin(), o.end(),
                  [](const Observation& a, const Observation& b) { return a.age < b.age; });
    return RateTable(std::move(years), std::move(obs));
}

inline RateTable parse_wide(const std::vector<std::pair<std::string_view, std::size_t>>& lines) {
    if (lines.empty()) throw std::invalid_argument("empty table");
    const std::vector<std::string_view> header = split_fields(lines[0].first);
    if (header.size() < 2)
        throw std::invalid_argument("line " + std::to_string(lines[0].second) +
                                    ": wide header needs an age column and at least one year");
    std::vector<std::string> years;
    for (std::size_t c = 1; c < header.size(); ++c) {
        const std::string year(header[c]);
        if (year.empty())
            throw std::invalid_argument("line " + std::to_string(lines[0].second) +
                                        ": empty year label in header");
        if (std::find(years.begin(), years.end(), year) != years.end())
            throw std::invalid_argument("duplicate year column '" + year + "'");
        years.push_back(year);
    }

    std::vector<std::pair<double, std::vector<double>>> rows;
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto& [line, line_no] = lines[r];
        const std::vector<std::string_view> fields = split_fields(line);
        if (fields.size() != header.size())
            throw std::invalid_argument("line " + std::to_string(line_no) +
                                        ": malformed row (expected " +
                                        std::to_string(header.size()) + " fields)");
        const double age = parse_age(fields[0], line_no);
        for (const auto& row : rows)
            if (row.first == age)
                throw std::invalid_argument("line " + std::to_string(line_no) +
                                            ": duplicate age row " + std::string(fields[0]));
        std::vector<double> rates;
        rates.reserve(years.size());
        for (std::size_t c = 1; c < fields.size(); ++c) {
            if (fields[c].empty())
                throw std::invalid_argument("line " + std::to_string(line_no) +
                                            ": missing cell for year " + years[c - 1]);
            rates.push_back(parse_rate(fields[c], line_no));
        }
        rows.emplace_back(age, std::move(rates));
    }
    if (rows.empty()) throw std::invalid_argument("empty table");
    std::sort(rows.begin(), rows.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    std::vector<std::vector<Observation>> obs(years.size());
    for (auto& o : obs) o.reserve(rows.size());
    for (const auto& [age, rates] : rows)
        for (std::size_t y = 0; y < years.size(); ++y) obs[y].push_back({age, rates[y]});
    return RateTable(std::move(years), std::move(obs));
}

}  // namespace detail

/// Parse comma-separated text into a validated RateTable.
/// Long layout: year,age,rate triples, optional header.
/// Wide layout: mandatory header "age,<year>,<year>,..." then one row per age.
inline RateTable parse_table(std::string_view text, TableFormat format) {
    const auto lines = detail::logical_lines(text);
    return format == TableFormat::long_format ? detail::parse_long(lines)
                                              : detail::parse_wide(lines);
}

/// One year's column as a RateCurve labelled by the year.
inline RateCurve curve_for_year(const RateTable& table, std::string_view year) {
    const std::size_t y = table.year_index(year);
    return RateCurve(table.years()[y], table.observations(y));
}

}  // namespace phasefit
