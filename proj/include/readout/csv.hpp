#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace readout::csv {

// Numeric CSV with one header row. Lines starting with '#' before the header
// are collected as "key=value" metadata; other comment lines are ignored.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    std::map<std::string, std::string> meta;

    // Index of a named column; throws DataError when absent.
    std::size_t column(const std::string& name) const;
    std::vector<double> column_values(std::size_t index) const;
};

// Throws DataError naming "<file>:<line>" on any malformed row.
Table read(const std::filesystem::path& path);
Table parse(const std::string& text, const std::string& source_name);

// Shortest form that round-trips (17 significant digits at most).
std::string format_double(double value);

class Writer {
public:
    explicit Writer(std::vector<std::string> header);
    void meta(const std::string& key, const std::string& value);
    void meta(const std::string& key, double value);
    void row(const std::vector<double>& values);
    std::string str() const;
    void save(const std::filesystem::path& path) const;

private:
    std::vector<std::string> header_;
    std::vector<std::pair<std::string, std::string>> meta_;
    std::string body_;
};

}  // namespace readout::csv
