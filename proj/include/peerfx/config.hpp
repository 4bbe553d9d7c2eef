#pragma once

// Flat key=value configuration text: one pair per line, '#' starts a comment,
// surrounding whitespace ignored.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace peerfx {

class KeyValues {
 public:
  // Throws Parse with the line number on a line without '=' or a repeated key.
  static KeyValues parse(const std::string& text);
  static KeyValues load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

  // Typed accessors throw Parse on malformed values.
  std::optional<double> get_double(const std::string& key) const;
  std::optional<std::int64_t> get_int(const std::string& key) const;
  std::optional<std::uint64_t> get_uint(const std::string& key) const;
  std::optional<bool> get_bool(const std::string& key) const;
  std::optional<std::vector<double>> get_doubles(const std::string& key) const;  // comma list

  // Keys not in `known`, for typo diagnostics.
  std::vector<std::string> unknown_keys(const std::vector<std::string>& known) const;

  const std::map<std::string, std::string>& items() const noexcept { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

double parse_double(const std::string& s, const std::string& what);
std::int64_t parse_int(const std::string& s, const std::string& what);
std::uint64_t parse_uint(const std::string& s, const std::string& what);

}  // namespace peerfx
