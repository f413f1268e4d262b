#include "itseval/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "itseval/error.hpp"

namespace itseval::csv {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(trim(cur));
    return fields;
}

}  // namespace

Table Table::read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return read_string(buf.str(), path);
}

Table Table::read_string(const std::string& text, const std::string& origin) {
    Table t;
    t.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line))
        throw InputError(origin + ": empty file, expected a header row");
    t.header_ = split_line(line);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto fields = split_line(line);
        if (fields.size() != t.header_.size())
            throw InputError(origin + ":" + std::to_string(lineno) + ": expected " +
                             std::to_string(t.header_.size()) + " fields, got " +
                             std::to_string(fields.size()));
        t.rows_.push_back(std::move(fields));
    }
    return t;
}

bool Table::has_column(const std::string& name) const {
    return std::find(header_.begin(), header_.end(), name) != header_.end();
}

std::size_t Table::column(const std::string& name) const {
    auto it = std::find(header_.begin(), header_.end(), name);
    if (it == header_.end())
        throw InputError(origin_ + ": missing required column '" + name + "'");
    return static_cast<std::size_t>(it - header_.begin());
}

double Table::number(std::size_t row, const std::string& name) const {
    const std::string& s = cell(row, name);
    const char* b = s.data();
    const char* e = b + s.size();
    double v = 0;
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e)
        throw InputError(origin_ + ":" + std::to_string(file_line(row)) +
                         ": field '" + name + "' is not a number: '" + s + "'");
    return v;
}

long Table::integer(std::size_t row, const std::string& name) const {
    const std::string& s = cell(row, name);
    const char* b = s.data();
    const char* e = b + s.size();
    long v = 0;
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e)
        throw InputError(origin_ + ":" + std::to_string(file_line(row)) +
                         ": field '" + name + "' is not an integer: '" + s + "'");
    return v;
}

Writer::Writer(std::vector<std::string> header) : width_(header.size()) {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out_ += ',';
        out_ += header[i];
    }
    out_ += '\n';
}

void Writer::row(const std::vector<std::string>& fields) {
    if (fields.size() != width_)
        throw Error("csv writer: row width mismatch");
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out_ += ',';
        out_ += fields[i];
    }
    out_ += '\n';
}

void Writer::write_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write file: " + path);
    out << out_;
}

std::string Writer::format(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    double back = 0;
    // Prefer the shortest representation that round-trips.
    for (int prec = 1; prec < 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        std::sscanf(buf, "%lf", &back);
        if (back == v) return buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace itseval::csv
