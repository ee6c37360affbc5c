#include "penseg/report.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <system_error>
#include <unistd.h>

namespace penseg {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

bool valid_key(std::string_view key) {
    return !key.empty() && std::all_of(key.begin(), key.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-';
    });
}

template <typename Range, typename Format>
std::string join_array(const Range& values, Format format) {
    std::string out = "[";
    bool first = true;
    for (const auto& v : values) {
        if (!first) out += ", ";
        out += format(v);
        first = false;
    }
    return out + "]";
}

std::vector<std::string_view> split_array(std::string_view raw) {
    raw = trim(raw);
    if (raw.size() < 2 || raw.front() != '[' || raw.back() != ']') throw InputError("expected an array: " + std::string(raw));
    raw = trim(raw.substr(1, raw.size() - 2));
    std::vector<std::string_view> out;
    if (raw.empty()) return out;
    std::size_t start = 0;
    while (true) {
        const auto comma = raw.find(',', start);
        out.push_back(trim(raw.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto sep = line.find_first_of(",\t", start);
        out.push_back(trim(line.substr(start, sep - start)));
        if (sep == std::string_view::npos) break;
        start = sep + 1;
    }
    return out;
}

bool is_number(std::string_view s) {
    try {
        parse_number(s);
        return true;
    } catch (const InputError&) {
        return false;
    }
}

}  // namespace

std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

double parse_number(std::string_view text) {
    text = trim(text);
    if (text == "inf" || text == "+inf") return std::numeric_limits<double>::infinity();
    if (text == "-inf") return -std::numeric_limits<double>::infinity();
    if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size())
        throw InputError("not a number: '" + std::string(text) + "'");
    return value;
}

void Report::put(std::string key, std::string value) {
    if (!valid_key(key)) throw InputError("invalid report key: " + key);
    for (auto& [k, v] : lines_) {
        if (k == key) {
            v = std::move(value);
            return;
        }
    }
    lines_.emplace_back(std::move(key), std::move(value));
}

void Report::set(std::string key, double value) { put(std::move(key), format_number(value)); }
void Report::set(std::string key, int value) { put(std::move(key), std::to_string(value)); }
void Report::set(std::string key, bool value) { put(std::move(key), value ? "true" : "false"); }

void Report::set(std::string key, std::string_view value) {
    if (value.find('\n') != std::string_view::npos) throw InputError("report strings are single-line");
    put(std::move(key), std::string(value));
}

void Report::set(std::string key, std::span<const double> values) {
    put(std::move(key), join_array(values, format_number));
}

void Report::set(std::string key, std::span<const int> values) {
    put(std::move(key), join_array(values, [](int v) { return std::to_string(v); }));
}

void Report::set(std::string key, const Eigen::VectorXd& values) {
    set(std::move(key), std::span<const double>(values.data(), static_cast<std::size_t>(values.size())));
}

void Report::comment(std::string text) { lines_.emplace_back(std::string(), std::move(text)); }

std::string Report::str() const {
    std::string out;
    for (const auto& [k, v] : lines_) {
        if (k.empty()) {
            out += "# " + v + "\n";
        } else {
            out += k + " = " + v + "\n";
        }
    }
    return out;
}

ReportData ReportData::parse(std::string_view text) {
    ReportData data;
    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        const auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string_view::npos)
            throw InputError("report line " + std::to_string(line_no) + " has no '='");
        const std::string key(trim(t.substr(0, eq)));
        if (!valid_key(key)) throw InputError("report line " + std::to_string(line_no) + " has an invalid key");
        if (!data.entries_.emplace(key, std::string(trim(t.substr(eq + 1)))).second)
            throw InputError("duplicate report key: " + key);
    }
    return data;
}

bool ReportData::contains(std::string_view key) const { return entries_.find(key) != entries_.end(); }

const std::string& ReportData::raw(std::string_view key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) throw InputError("missing report key: " + std::string(key));
    return it->second;
}

double ReportData::number(std::string_view key) const { return parse_number(raw(key)); }

int ReportData::integer(std::string_view key) const {
    const double v = number(key);
    if (v != std::floor(v) || std::abs(v) > 2e9) throw InputError("not an integer: " + std::string(key));
    return static_cast<int>(v);
}

bool ReportData::boolean(std::string_view key) const {
    const auto& v = raw(key);
    if (v == "true") return true;
    if (v == "false") return false;
    throw InputError("not a boolean: " + std::string(key));
}

std::vector<double> ReportData::numbers(std::string_view key) const {
    std::vector<double> out;
    for (auto item : split_array(raw(key))) out.push_back(parse_number(item));
    return out;
}

std::vector<int> ReportData::integers(std::string_view key) const {
    std::vector<int> out;
    for (double v : numbers(key)) {
        if (v != std::floor(v)) throw InputError("not an integer array: " + std::string(key));
        out.push_back(static_cast<int>(v));
    }
    return out;
}

void write_atomic(const std::filesystem::path& path, std::string_view content) {
    auto tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InputError("cannot write " + path.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            std::error_code ignored;
            std::filesystem::remove(tmp, ignored);
            throw InputError("cannot write " + path.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw InputError("cannot write " + path.string());
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

TimeSeries parse_series(std::string_view text) {
    std::vector<std::pair<std::size_t, std::vector<std::string_view>>> rows;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto nl = text.find('\n', start);
        const auto line = trim(text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start));
        ++line_no;
        if (!line.empty() && line.front() != '#') rows.emplace_back(line_no, split_fields(line));
        if (nl == std::string_view::npos) break;
        start = nl + 1;
    }
    if (!rows.empty() && !std::all_of(rows.front().second.begin(), rows.front().second.end(), is_number))
        rows.erase(rows.begin());
    if (rows.empty()) throw InputError("the series is empty");

    const std::size_t width = rows.front().second.size();
    if (width != 1 && width != 2) throw InputError("expected one or two columns");
    std::vector<double> values;
    values.reserve(rows.size());
    for (const auto& [no, fields] : rows) {
        const std::string where = "line " + std::to_string(no);
        if (fields.size() != width) throw InputError(where + ": inconsistent column count");
        try {
            if (width == 2) {
                const double t = parse_number(fields[0]);
                if (t != static_cast<double>(values.size() + 1))
                    throw InputError("time column must run 1..T without gaps");
            }
            const double v = parse_number(fields[width - 1]);
            if (!std::isfinite(v)) throw InputError("non-finite observation");
            values.push_back(v);
        } catch (const InputError& e) {
            throw InputError(where + ": " + e.what());
        }
    }
    return TimeSeries(values);
}

TimeSeries read_series(const std::filesystem::path& path) { return parse_series(read_file(path)); }

std::string format_series(const TimeSeries& x) {
    std::string out;
    for (Eigen::Index t = 0; t < x.size(); ++t) out += format_number(x.values()[t]) + "\n";
    return out;
}

}  // namespace penseg
