#include "peerfx/csv.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "peerfx/error.hpp"

namespace peerfx {

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw Error(ErrorKind::Parse, "missing column '" + name + "'");
}

std::vector<CsvRow> parse_csv(const std::string& input) {
  std::string_view text = input;
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);

  std::vector<CsvRow> rows;
  CsvRow cur;
  std::string field;
  std::size_t line = 1;
  cur.line = 1;
  bool in_quotes = false;
  bool quoted = false;      // current field started with a quote
  bool row_has_data = false;

  auto end_field = [&]() {
    cur.fields.push_back(std::move(field));
    field.clear();
    quoted = false;
  };
  auto end_row = [&]() {
    if (row_has_data || !cur.fields.empty()) {
      end_field();
      rows.push_back(std::move(cur));
    }
    cur = CsvRow{};
    field.clear();
    quoted = false;
    row_has_data = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty() || quoted) {
          throw Error(ErrorKind::Parse, "line " + std::to_string(line) + ": unexpected quote");
        }
        in_quotes = true;
        quoted = true;
        row_has_data = true;
        break;
      case ',':
        end_field();
        row_has_data = true;
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') break;
        [[fallthrough]];
      case '\n':
        end_row();
        ++line;
        cur.line = line;
        break;
      default:
        if (quoted) {
          throw Error(ErrorKind::Parse,
                      "line " + std::to_string(line) + ": text after closing quote");
        }
        field.push_back(c);
        row_has_data = true;
    }
  }
  if (in_quotes) throw Error(ErrorKind::Parse, "unterminated quoted field");
  end_row();
  return rows;
}

CsvTable parse_csv_table(const std::string& text) {
  auto rows = parse_csv(text);
  if (rows.empty()) throw Error(ErrorKind::Parse, "empty CSV: header missing");
  CsvTable t;
  t.header = std::move(rows.front().fields);
  for (auto& h : t.header) {
    const auto b = h.find_first_not_of(" \t");
    const auto e = h.find_last_not_of(" \t");
    h = b == std::string::npos ? std::string{} : h.substr(b, e - b + 1);
  }
  t.rows.assign(std::make_move_iterator(rows.begin() + 1), std::make_move_iterator(rows.end()));
  for (const auto& r : t.rows) {
    if (r.fields.size() != t.header.size()) {
      throw Error(ErrorKind::Parse, "line " + std::to_string(r.line) + ": expected " +
                                        std::to_string(t.header.size()) + " fields, found " +
                                        std::to_string(r.fields.size()));
    }
  }
  return t;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

CsvTable read_csv_file(const std::string& path) {
  try {
    return parse_csv_table(read_file(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Io) throw;
    throw Error(e.kind(), path + ": " + e.what());
  }
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ << ',';
    out_ << csv_escape(fields[i]);
  }
  out_ << '\n';
}

std::string format_double(double v) {
  if (std::isnan(v)) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace peerfx
