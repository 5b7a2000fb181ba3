#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "stegcap/error.hpp"

namespace stegcap::io {

/// One parsed CSV record and the 1-based line it starts on.
struct CsvRecord {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<CsvRecord> rows;
};

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) throw Error("format_double: conversion failed");
  return std::string(buf, end);
}

inline double parse_double(std::string_view text, std::size_t line = 0, std::size_t column = 0) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || text.empty())
    throw SchemaError("expected a number, got '" + std::string(text) + "'", line, column);
  return value;
}

inline std::string quote_field(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline void write_record(std::ostream& os, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) os << ',';
    os << quote_field(fields[i]);
  }
  os << '\n';
}

inline void write_csv(std::ostream& os, const CsvTable& t) {
  write_record(os, t.header);
  for (const auto& r : t.rows) write_record(os, r.fields);
}

/// RFC-4180 reader: quoted fields may hold commas, doubled quotes and line
/// breaks; CRLF and LF endings are both accepted. The first record is the header.
inline CsvTable read_csv(std::istream& is) {
  std::vector<CsvRecord> records;
  CsvRecord cur;
  std::string field;
  std::size_t line = 1;
  bool in_quotes = false;
  bool field_started = false;
  bool record_open = false;
  cur.line = line;

  auto end_field = [&] {
    cur.fields.push_back(field);
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(cur));
    cur = CsvRecord{};
    record_open = false;
  };

  char c;
  while (is.get(c)) {
    if (!record_open) {
      cur.line = line;
      record_open = true;
    }
    if (in_quotes) {
      if (c == '"') {
        if (is.peek() == '"') {
          is.get(c);
          field += '"';
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started && !field.empty())
          throw SchemaError("quote inside unquoted field", line, cur.fields.size() + 1);
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (is.peek() == '\n') break;
        [[fallthrough]];
      case '\n':
        end_record();
        ++line;
        break;
      default:
        field += c;
        field_started = true;
    }
  }
  if (in_quotes) throw SchemaError("unterminated quoted field", line);
  if (record_open) end_record();

  CsvTable t;
  if (records.empty()) return t;
  t.header = std::move(records.front().fields);
  for (std::size_t i = 1; i < records.size(); ++i) {
    // A lone empty field is a blank line.
    if (records[i].fields.size() == 1 && records[i].fields[0].empty()) continue;
    t.rows.push_back(std::move(records[i]));
  }
  return t;
}

}  // namespace stegcap::io
