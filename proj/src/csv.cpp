#include "readout/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "readout/common.hpp"

namespace readout::csv {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) {
        out.push_back(trim(field));
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

}  // namespace

std::size_t Table::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) {
            return i;
        }
    }
    throw DataError("missing column '" + name + "'");
}

std::vector<double> Table::column_values(std::size_t index) const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        out.push_back(r.at(index));
    }
    return out;
}

Table parse(const std::string& text, const std::string& source_name) {
    Table table;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    auto fail = [&](const std::string& msg) {
        throw DataError(source_name + ":" + std::to_string(line_no) + ": " + msg);
    };
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty()) {
            continue;
        }
        if (t.front() == '#') {
            if (table.header.empty()) {
                const auto body = trim(std::string_view(t).substr(1));
                const auto eq = body.find('=');
                if (eq != std::string::npos) {
                    table.meta[trim(std::string_view(body).substr(0, eq))] =
                        trim(std::string_view(body).substr(eq + 1));
                }
            }
            continue;
        }
        auto fields = split(t);
        if (table.header.empty()) {
            table.header = std::move(fields);
            continue;
        }
        if (fields.size() != table.header.size()) {
            fail("expected " + std::to_string(table.header.size()) + " fields, got " +
                 std::to_string(fields.size()));
        }
        std::vector<double> values;
        values.reserve(fields.size());
        for (const auto& f : fields) {
            double v = 0.0;
            const char* begin = f.data();
            const char* end = f.data() + f.size();
            auto [ptr, ec] = std::from_chars(begin, end, v);
            if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
                fail("not a finite number: '" + f + "'");
            }
            values.push_back(v);
        }
        table.rows.push_back(std::move(values));
    }
    if (table.header.empty()) {
        throw DataError(source_name + ": no header row");
    }
    return table;
}

Table read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError(path.string() + ": cannot open file");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
}

std::string format_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc()) {
        throw std::runtime_error("format_double: conversion failed");
    }
    return std::string(buf, ptr);
}

Writer::Writer(std::vector<std::string> header) : header_(std::move(header)) {}

void Writer::meta(const std::string& key, const std::string& value) {
    meta_.emplace_back(key, value);
}

void Writer::meta(const std::string& key, double value) {
    meta_.emplace_back(key, format_double(value));
}

void Writer::row(const std::vector<double>& values) {
    if (values.size() != header_.size()) {
        throw std::invalid_argument("csv row width does not match header");
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) {
            body_ += ',';
        }
        body_ += format_double(values[i]);
    }
    body_ += '\n';
}

std::string Writer::str() const {
    std::string out;
    for (const auto& [k, v] : meta_) {
        out += "# " + k + "=" + v + "\n";
    }
    for (std::size_t i = 0; i < header_.size(); ++i) {
        if (i > 0) {
            out += ',';
        }
        out += header_[i];
    }
    out += '\n';
    out += body_;
    return out;
}

void Writer::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error(path.string() + ": cannot write file");
    }
    out << str();
    if (!out) {
        throw std::runtime_error(path.string() + ": write failed");
    }
}

}  // namespace readout::csv
