#include "tfo/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "tfo/common.hpp"

namespace tfo::csv {

Table::Table(std::vector<std::string> header, std::vector<std::vector<std::string>> rows)
    : header_(std::move(header)), rows_(std::move(rows)) {
  for (std::size_t i = 0; i < header_.size(); ++i) index_[header_[i]] = i;
}

std::size_t Table::column(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error(ErrorCode::MissingColumn, "column '" + name + "' not found");
  return it->second;
}

const std::string& Table::at(std::size_t row, const std::string& name) const {
  return rows_.at(row).at(column(name));
}

double Table::number(std::size_t row, const std::string& name) const {
  const auto& s = at(row, name);
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::MalformedCsv, "row " + std::to_string(row + 2) + ", column '" + name +
                                             "': not a number: '" + s + "'");
  }
}

long Table::integer(std::size_t row, const std::string& name) const {
  const auto& s = at(row, name);
  long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw Error(ErrorCode::MalformedCsv, "row " + std::to_string(row + 2) + ", column '" + name +
                                             "': not an integer: '" + s + "'");
  return v;
}

std::optional<long> Table::optional_integer(std::size_t row, const std::string& name) const {
  if (is_missing(at(row, name))) return std::nullopt;
  return integer(row, name);
}

bool is_missing(const std::string& field) { return field.empty() || field == "NA"; }

namespace {

// Reads one logical record; returns false at end of input.
bool read_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line_no,
                 const std::string& source) {
  fields.clear();
  std::string field;
  bool in_quotes = false;
  bool any = false;
  int ch;
  while ((ch = in.get()) != EOF) {
    any = true;
    const char c = char(ch);
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          field.push_back('"');
          in.get();
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line_no;
        field.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\r') {
      // tolerate CRLF
    } else if (c == '\n') {
      ++line_no;
      fields.push_back(std::move(field));
      return true;
    } else {
      field.push_back(c);
    }
  }
  if (in_quotes)
    throw Error(ErrorCode::MalformedCsv, source + ":" + std::to_string(line_no) + ": unterminated quote");
  if (!any) return false;
  fields.push_back(std::move(field));
  return true;
}

}  // namespace

Table parse(std::istream& in, const std::string& source) {
  std::vector<std::string> header;
  std::size_t line_no = 1;
  if (!read_record(in, header, line_no, source))
    throw Error(ErrorCode::MalformedCsv, source + ": missing header");
  if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0].erase(0, 3);
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> fields;
  while (read_record(in, fields, line_no, source)) {
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() != header.size())
      throw Error(ErrorCode::MalformedCsv,
                  source + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
    rows.push_back(fields);
  }
  return Table(std::move(header), std::move(rows));
}

Table read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MalformedCsv, "cannot open " + path);
  return parse(in, path);
}

void require_columns(const Table& t, const std::vector<std::string>& columns,
                     const std::string& source) {
  for (const auto& c : columns)
    if (!t.has(c)) throw Error(ErrorCode::MissingColumn, source + ": column '" + c + "' not found");
}

std::string escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << escape(fields[i]);
  }
  out << '\n';
}

std::string format_number(double v) {
  if (std::isnan(v)) return "NA";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) return std::to_string(v);
  return std::string(buf, ptr);
}

}  // namespace tfo::csv
