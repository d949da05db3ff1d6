#pragma once

// Minimal CSV table: header, rows of cells, optional `# key = value` preamble.
// Doubles are written in shortest round-trip form so that a rerun with the
// same inputs reproduces the file byte for byte.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace lpqn::bench {

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, res.ptr);
}

using Cell = std::variant<std::string, long long, double>;

inline std::string cell_text(const Cell& c) {
  if (const auto* s = std::get_if<std::string>(&c)) {
    if (s->find_first_of(",\"\n") == std::string::npos) return *s;
    std::string q = "\"";
    for (char ch : *s) {
      if (ch == '"') q += '"';
      q += ch;
    }
    return q + "\"";
  }
  if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
  return format_double(std::get<double>(c));
}

class Table {
 public:
  explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}

  void add(std::vector<Cell> row) {
    if (row.size() != header_.size()) throw std::logic_error("Table::add: row width does not match header");
    rows_.push_back(std::move(row));
  }

  void append(const Table& other) {
    if (other.header_ != header_) throw std::logic_error("Table::append: header mismatch");
    rows_.insert(rows_.end(), other.rows_.begin(), other.rows_.end());
  }

  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<Cell>>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header_.size(); ++i)
      if (header_[i] == name) return i;
    throw std::out_of_range("Table: no column '" + name + "'");
  }

  /// Header plus rows, without the preamble.
  std::string body() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < header_.size(); ++i) os << (i ? "," : "") << header_[i];
    os << '\n';
    for (const auto& r : rows_) {
      for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << cell_text(r[i]);
      os << '\n';
    }
    return os.str();
  }

  void write(std::ostream& os, const std::vector<std::pair<std::string, std::string>>& preamble = {}) const {
    for (const auto& [k, v] : preamble) os << "# " << k << " = " << v << '\n';
    os << body();
  }

  void write_file(const std::string& path, const std::vector<std::pair<std::string, std::string>>& preamble = {}) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write '" + path + "'");
    write(f, preamble);
    if (!f) throw std::runtime_error("write failed for '" + path + "'");
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<Cell>> rows_;
};

inline double as_double(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return *d;
  if (const auto* i = std::get_if<long long>(&c)) return static_cast<double>(*i);
  throw std::invalid_argument("cell is not numeric");
}

inline const std::string& as_string(const Cell& c) { return std::get<std::string>(c); }

}  // namespace lpqn::bench
