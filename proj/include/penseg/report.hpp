#pragma once

// Structured-text reports and series files.
//
// A report is a sequence of `key = value` lines. Values are numbers (17
// significant digits), booleans, bare strings or arrays `[v1, v2, ...]`.
// Blank lines and lines starting with '#' are ignored. Keys are unique and
// made of [A-Za-z0-9_.-].

#include "penseg/core.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace penseg {

inline constexpr std::string_view kVersion = "0.1.0";

/// "%.17g", with inf and nan spelled "inf", "-inf" and "nan".
std::string format_number(double value);

class Report {
public:
    void set(std::string key, double value);
    void set(std::string key, int value);
    void set(std::string key, bool value);
    void set(std::string key, std::string_view value);
    void set(std::string key, const char* value) { set(std::move(key), std::string_view(value)); }
    void set(std::string key, std::span<const double> values);
    void set(std::string key, std::span<const int> values);
    void set(std::string key, const std::vector<double>& values) { set(std::move(key), std::span<const double>(values)); }
    void set(std::string key, const std::vector<int>& values) { set(std::move(key), std::span<const int>(values)); }
    void set(std::string key, const Eigen::VectorXd& values);

    void comment(std::string text);

    std::string str() const;

private:
    void put(std::string key, std::string value);

    std::vector<std::pair<std::string, std::string>> lines_;  // empty key: comment
};

/// Parsed report: key to raw value text.
class ReportData {
public:
    static ReportData parse(std::string_view text);

    bool contains(std::string_view key) const;
    const std::string& raw(std::string_view key) const;
    double number(std::string_view key) const;
    int integer(std::string_view key) const;
    bool boolean(std::string_view key) const;
    std::vector<double> numbers(std::string_view key) const;
    std::vector<int> integers(std::string_view key) const;
    const std::map<std::string, std::string, std::less<>>& entries() const { return entries_; }

private:
    std::map<std::string, std::string, std::less<>> entries_;
};

double parse_number(std::string_view text);

/// Writes to a sibling temporary and renames it over `path`.
void write_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

/// One observation per line, or `time,value` rows whose times run 1..T.
/// An optional non-numeric first line is a header; '#' lines are skipped.
TimeSeries parse_series(std::string_view text);
TimeSeries read_series(const std::filesystem::path& path);
std::string format_series(const TimeSeries& x);

}  // namespace penseg
