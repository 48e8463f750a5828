#include "wfcast/csv.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "wfcast/util.hpp"

namespace wfcast {

namespace {

std::string trim(std::string s) {
    const auto issp = [](unsigned char c) { return std::isspace(c) != 0; };
    while (!s.empty() && issp(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
    while (!s.empty() && issp(static_cast<unsigned char>(s.back()))) s.pop_back();
    return s;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

// Splits one CSV line, honoring double-quoted fields (embedded delimiters and
// doubled quotes).
std::vector<std::string> split_line(const std::string& line, char delimiter) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == delimiter) {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

struct DateParts {
    int year = 0, month = 0, day = 0;
    bool ok = false;
};

DateParts split_date(const std::string& text, char& sep_out) {
    DateParts out;
    int parts[3] = {0, 0, 0};
    int idx = 0;
    std::string digits;
    char sep = 0;
    for (char c : text) {
        if (std::isdigit(static_cast<unsigned char>(c))) {
            digits.push_back(c);
        } else if (c == '-' || c == '/' || c == '.') {
            if (digits.empty() || idx >= 2) return out;
            if (sep == 0) sep = c;
            parts[idx++] = std::stoi(digits);
            digits.clear();
        } else {
            return out;
        }
    }
    if (digits.empty() || idx != 2) return out;
    parts[2] = std::stoi(digits);
    out.year = parts[0];
    out.month = parts[1];
    out.day = parts[2];
    out.ok = true;
    sep_out = sep;
    return out;
}

// Canonical ISO date string, or empty on failure. "auto" treats a 4-digit
// leading field as year-first, otherwise day-first.
std::string parse_date(const std::string& raw, const std::string& format) {
    const std::string text = trim(raw);
    char sep = 0;
    auto parts = split_date(text, sep);
    if (!parts.ok) return {};
    int y, m, d;
    std::string fmt = format;
    if (fmt == "auto") fmt = parts.year >= 1000 ? "iso" : "dmy";
    if (fmt == "iso") {
        y = parts.year;
        m = parts.month;
        d = parts.day;
    } else if (fmt == "dmy") {
        d = parts.year;
        m = parts.month;
        y = parts.day;
    } else if (fmt == "mdy") {
        m = parts.year;
        d = parts.month;
        y = parts.day;
    } else {
        throw std::invalid_argument("ingest_csv: unknown date_format " + format);
    }
    if (y < 1000 || y > 9999 || m < 1 || m > 12 || d < 1 || d > 31) return {};
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
    return buf;
}

// Strict numeric coercion; tolerates surrounding whitespace and thousands
// separators inside quoted exports ("1,234.56").
bool parse_close(const std::string& raw, double& out) {
    std::string text = trim(raw);
    text.erase(std::remove(text.begin(), text.end(), ','), text.end());
    if (text.empty()) return false;
    try {
        std::size_t pos = 0;
        out = std::stod(text, &pos);
        return pos == text.size() && std::isfinite(out);
    } catch (const std::exception&) {
        return false;
    }
}

}  // namespace

PriceSeries ingest_csv(const std::string& path, const CsvOptions& options) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("ingest_csv: cannot open " + path);

    std::string header;
    if (!std::getline(in, header))
        throw std::invalid_argument("ingest_csv: empty file " + path);
    if (header.size() >= 3 && header[0] == '\xEF' && header[1] == '\xBB' && header[2] == '\xBF')
        header.erase(0, 3);

    const auto columns = split_line(header, options.delimiter);
    int date_idx = -1, close_idx = -1;
    const std::string want_date = lower(trim(options.date_column));
    const std::string want_close = lower(trim(options.close_column));
    for (std::size_t i = 0; i < columns.size(); ++i) {
        const auto name = lower(trim(columns[i]));
        if (name == want_date && date_idx < 0) date_idx = static_cast<int>(i);
        if (name == want_close && close_idx < 0) close_idx = static_cast<int>(i);
    }
    if (date_idx < 0 || close_idx < 0)
        throw std::invalid_argument("ingest_csv: header of " + path + " lacks required columns '" +
                                    options.date_column + "' and/or '" + options.close_column + "'");

    struct Row {
        std::string date;
        double close;
        std::size_t line_no;
    };
    std::vector<Row> rows;
    std::vector<std::string> problems;
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_line(line, options.delimiter);
        const auto need = static_cast<std::size_t>(std::max(date_idx, close_idx));
        if (fields.size() <= need) {
            problems.push_back("line " + std::to_string(line_no) + ": too few fields");
            continue;
        }
        const auto date = parse_date(fields[static_cast<std::size_t>(date_idx)], options.date_format);
        if (date.empty()) {
            problems.push_back("line " + std::to_string(line_no) + ": unparseable date '" +
                               trim(fields[static_cast<std::size_t>(date_idx)]) + "'");
            continue;
        }
        double close = 0.0;
        if (!parse_close(fields[static_cast<std::size_t>(close_idx)], close)) {
            problems.push_back("line " + std::to_string(line_no) + ": unparseable close '" +
                               trim(fields[static_cast<std::size_t>(close_idx)]) + "'");
            continue;
        }
        if (close <= 0.0) {
            problems.push_back("line " + std::to_string(line_no) + ": non-positive close " +
                               format_double(close));
            continue;
        }
        rows.push_back(Row{date, close, line_no});
    }

    std::stable_sort(rows.begin(), rows.end(),
                     [](const Row& a, const Row& b) { return a.date < b.date; });
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i].date == rows[i - 1].date)
            problems.push_back("line " + std::to_string(rows[i].line_no) + ": duplicate date " +
                               rows[i].date);

    if (!problems.empty()) {
        std::ostringstream msg;
        msg << "ingest_csv: " << path << " rejected (" << problems.size() << " problem row(s)):";
        const std::size_t shown = std::min<std::size_t>(problems.size(), 20);
        for (std::size_t i = 0; i < shown; ++i) msg << "\n  " << problems[i];
        if (shown < problems.size()) msg << "\n  ... " << problems.size() - shown << " more";
        throw std::invalid_argument(msg.str());
    }
    if (rows.empty()) throw std::invalid_argument("ingest_csv: no data rows in " + path);

    PriceSeries series;
    series.dates.reserve(rows.size());
    series.closes.reserve(rows.size());
    for (const auto& row : rows) {
        series.dates.push_back(row.date);
        series.closes.push_back(row.close);
    }
    series.validate();
    return series;
}

void write_price_csv(const std::string& path, const PriceSeries& series) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_price_csv: cannot open " + path);
    out << "date,close\n";
    for (std::size_t i = 0; i < series.size(); ++i)
        out << series.dates[i] << ',' << format_double(series.closes[i]) << '\n';
    if (!out) throw std::runtime_error("write_price_csv: write failed for " + path);
}

std::uint64_t fingerprint(const PriceSeries& series) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < series.size(); ++i) {
        h = fnv1a64(series.dates[i], h);
        h = fnv1a64(",", h);
        h = fnv1a64(format_double(series.closes[i]), h);
        h = fnv1a64(";", h);
    }
    return h;
}

}  // namespace wfcast
