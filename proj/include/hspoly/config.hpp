#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "hspoly/errors.hpp"
#include "hspoly/version.hpp"

namespace hspoly {

/// Key-value experiment configuration: one `key = value` pair per line,
/// '#' comments, later assignments override earlier ones. The resolved
/// text is recorded verbatim in every output header for provenance.
class KvConfig {
public:
    KvConfig() = default;

    static KvConfig from_file(const std::string& path) {
        std::ifstream stream(path);
        if (!stream) throw data_error("cannot open config file: " + path);
        std::stringstream buffer;
        buffer << stream.rdbuf();
        return from_text(buffer.str());
    }

    static KvConfig from_text(const std::string& text) {
        KvConfig config;
        std::istringstream stream(text);
        std::string line;
        long line_number = 0;
        while (std::getline(stream, line)) {
            ++line_number;
            const std::string trimmed = trim(line.substr(0, line.find('#')));
            if (trimmed.empty()) continue;
            const auto eq = trimmed.find('=');
            if (eq == std::string::npos)
                throw data_error("config line is not 'key = value'", line_number);
            const std::string key = trim(trimmed.substr(0, eq));
            const std::string value = trim(trimmed.substr(eq + 1));
            if (key.empty()) throw data_error("empty config key", line_number);
            config.values_[key] = value;
        }
        return config;
    }

    /// Apply a "key=value" override (CLI flag form).
    void set(const std::string& assignment) {
        const auto eq = assignment.find('=');
        if (eq == std::string::npos)
            throw argument_error("override must have the form key=value: " + assignment);
        values_[trim(assignment.substr(0, eq))] = trim(assignment.substr(eq + 1));
    }

    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get(const std::string& key, const std::string& fallback) const {
        const auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    std::string require(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end()) throw argument_error("missing config key: " + key);
        return it->second;
    }

    double get_double(const std::string& key, double fallback) const {
        return has(key) ? parse_number(require(key), key) : fallback;
    }

    long get_long(const std::string& key, long fallback) const {
        const double value = get_double(key, static_cast<double>(fallback));
        const long rounded = static_cast<long>(value);
        if (static_cast<double>(rounded) != value)
            throw argument_error("config key " + key + " must be an integer");
        return rounded;
    }

    /// Grid values: comma list ("30,60,120") and/or inclusive ranges ("2:16"
    /// or "2:16:2" with a stride).
    std::vector<long> get_grid(const std::string& key) const {
        std::vector<long> grid;
        std::istringstream stream(require(key));
        std::string token;
        while (std::getline(stream, token, ',')) {
            token = trim(token);
            if (token.empty()) continue;
            const auto colon = token.find(':');
            if (colon == std::string::npos) {
                grid.push_back(static_cast<long>(parse_number(token, key)));
                continue;
            }
            const auto second = token.find(':', colon + 1);
            const long start = static_cast<long>(parse_number(token.substr(0, colon), key));
            const long stop = static_cast<long>(parse_number(
                token.substr(colon + 1, second == std::string::npos ? std::string::npos
                                                                    : second - colon - 1),
                key));
            const long stride =
                second == std::string::npos
                    ? 1
                    : static_cast<long>(parse_number(token.substr(second + 1), key));
            if (stride < 1) throw argument_error("config key " + key + ": stride must be >= 1");
            for (long v = start; v <= stop; v += stride) grid.push_back(v);
        }
        if (grid.empty()) throw argument_error("config key " + key + " yields an empty grid");
        return grid;
    }

    std::vector<double> get_double_grid(const std::string& key) const {
        std::vector<double> grid;
        std::istringstream stream(require(key));
        std::string token;
        while (std::getline(stream, token, ',')) {
            token = trim(token);
            if (!token.empty()) grid.push_back(parse_number(token, key));
        }
        if (grid.empty()) throw argument_error("config key " + key + " yields an empty grid");
        return grid;
    }

    /// Canonical resolved text: sorted key = value lines.
    std::string resolved_text() const {
        std::ostringstream out;
        for (const auto& [key, value] : values_) out << key << " = " << value << '\n';
        return out.str();
    }

    std::string digest() const { return digest_hex(resolved_text()); }

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    static std::string trim(const std::string& text) {
        const auto begin = text.find_first_not_of(" \t\r");
        if (begin == std::string::npos) return "";
        const auto end = text.find_last_not_of(" \t\r");
        return text.substr(begin, end - begin + 1);
    }

    static double parse_number(const std::string& token, const std::string& key) {
        if (token == "inf") return std::numeric_limits<double>::infinity();
        try {
            std::size_t used = 0;
            const double value = std::stod(token, &used);
            if (used != token.size()) throw std::invalid_argument(token);
            return value;
        } catch (const std::exception&) {
            throw argument_error("config key " + key + ": cannot parse number '" + token + "'");
        }
    }

    std::map<std::string, std::string> values_;
};

}  // namespace hspoly
