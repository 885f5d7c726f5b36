#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hspoly/errors.hpp"

namespace hspoly {

/// Minimal RFC-4180-style CSV reader: quoted fields, embedded commas and
/// quotes, CR/LF line endings. Lines starting with '#' are treated as
/// comments and skipped (our own writers emit such provenance headers).
class CsvReader {
public:
    explicit CsvReader(const std::string& path) : stream_(path), path_(path) {
        if (!stream_) throw data_error("cannot open CSV file: " + path);
    }

    /// Reads the next record; returns false at end of input. `line_number`
    /// reports the 1-based physical line the record started on.
    bool next(std::vector<std::string>& fields, long& line_number) {
        std::string line;
        for (;;) {
            if (!std::getline(stream_, line)) return false;
            ++line_;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            if (line[0] == '#') continue;
            break;
        }
        line_number = line_;
        fields.clear();
        std::string field;
        bool in_quotes = false;
        std::size_t pos = 0;
        for (;;) {
            if (pos == line.size()) {
                if (in_quotes) {
                    // Quoted field continues across a line break.
                    if (!std::getline(stream_, line))
                        throw data_error("unterminated quoted field in " + path_, line_);
                    ++line_;
                    if (!line.empty() && line.back() == '\r') line.pop_back();
                    field.push_back('\n');
                    pos = 0;
                    continue;
                }
                fields.push_back(field);
                return true;
            }
            const char c = line[pos];
            if (in_quotes) {
                if (c == '"') {
                    if (pos + 1 < line.size() && line[pos + 1] == '"') {
                        field.push_back('"');
                        ++pos;
                    } else {
                        in_quotes = false;
                    }
                } else {
                    field.push_back(c);
                }
            } else if (c == '"' && field.empty()) {
                in_quotes = true;
            } else if (c == ',') {
                fields.push_back(field);
                field.clear();
            } else {
                field.push_back(c);
            }
            ++pos;
        }
    }

private:
    std::ifstream stream_;
    std::string path_;
    long line_ = 0;
};

/// Append-only CSV writer that flushes after every row so an interrupted run
/// leaves a valid prefix on disk.
class CsvWriter {
public:
    explicit CsvWriter(const std::string& path) : stream_(path, std::ios::trunc) {
        if (!stream_) throw data_error("cannot open CSV file for writing: " + path);
    }

    void comment(const std::string& text) {
        stream_ << "# " << text << '\n';
        stream_.flush();
    }

    void row(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) stream_ << ',';
            stream_ << escape(fields[i]);
        }
        stream_ << '\n';
        stream_.flush();
    }

    void raw_line(const std::string& line) {
        stream_ << line << '\n';
        stream_.flush();
    }

    static std::string escape(const std::string& field) {
        if (field.find_first_of(",\"\n") == std::string::npos) return field;
        std::string quoted = "\"";
        for (char c : field) {
            if (c == '"') quoted += "\"\"";
            else quoted.push_back(c);
        }
        quoted.push_back('"');
        return quoted;
    }

private:
    std::ofstream stream_;
};

/// Strict double parse; '.' decimal separator, full-field match required.
inline double parse_double(const std::string& field, long row, long column) {
    const char* begin = field.data();
    const char* end = begin + field.size();
    while (begin != end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end != begin && (*(end - 1) == ' ' || *(end - 1) == '\t')) --end;
    double value = 0.0;
    const auto result = std::from_chars(begin, end, value);
    if (result.ec != std::errc() || result.ptr != end || begin == end)
        throw data_error("non-numeric cell '" + field + "'", row, column);
    return value;
}

inline std::string format_double(double value, int precision = 12) {
    std::ostringstream out;
    out.precision(precision);
    out << value;
    return out.str();
}

}  // namespace hspoly
