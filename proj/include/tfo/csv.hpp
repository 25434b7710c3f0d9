// Minimal RFC 4180 CSV reading/writing with header-indexed access.
#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace tfo::csv {

class Table {
 public:
  Table() = default;
  Table(std::vector<std::string> header, std::vector<std::vector<std::string>> rows);

  const std::vector<std::string>& header() const { return header_; }
  std::size_t size() const { return rows_.size(); }
  bool has(const std::string& column) const { return index_.count(column) > 0; }

  /// Throws MissingColumn when absent.
  std::size_t column(const std::string& name) const;

  const std::string& at(std::size_t row, const std::string& name) const;
  const std::vector<std::string>& row(std::size_t r) const { return rows_[r]; }

  /// Throws MalformedCsv with the row/column location on a parse failure.
  double number(std::size_t row, const std::string& name) const;
  long integer(std::size_t row, const std::string& name) const;
  /// Empty or "NA" fields read as nullopt.
  std::optional<long> optional_integer(std::size_t row, const std::string& name) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
  std::unordered_map<std::string, std::size_t> index_;
};

Table parse(std::istream& in, const std::string& source = "<stream>");
Table read_file(const std::string& path);

/// Requires every listed column in the header.
void require_columns(const Table& t, const std::vector<std::string>& columns,
                     const std::string& source);

std::string escape(const std::string& field);
void write_row(std::ostream& out, const std::vector<std::string>& fields);

/// Shortest round-trippable decimal form.
std::string format_number(double v);

bool is_missing(const std::string& field);

}  // namespace tfo::csv
