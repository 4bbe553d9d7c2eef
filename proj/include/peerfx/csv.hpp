#pragma once

// RFC 4180 CSV: comma separated, double-quote quoting with "" escapes, CRLF
// or LF line ends, quoted fields may span lines.

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace peerfx {

struct CsvRow {
  std::size_t line = 0;  // 1-based line where the record starts
  std::vector<std::string> fields;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<CsvRow> rows;

  // Index of a header column; throws Parse when absent.
  std::size_t column(const std::string& name) const;
};

// Throws Parse on an unterminated quote or a stray quote inside an unquoted
// field. Blank lines are skipped. A UTF-8 byte-order mark is dropped.
std::vector<CsvRow> parse_csv(const std::string& text);
CsvTable parse_csv_table(const std::string& text);
CsvTable read_csv_file(const std::string& path);

std::string read_file(const std::string& path);

// Quotes a field when it holds a comma, quote, CR or LF.
std::string csv_escape(const std::string& field);

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}
  void row(const std::vector<std::string>& fields);

 private:
  std::ostream& out_;
};

// %.17g: parses back to the same double.
std::string format_double(double v);

}  // namespace peerfx
