#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sbcli {

/// Shortest decimal that reads back to the same double; "nan"/"inf" spelled out.
std::string fmt(double x);
std::string fmt(std::uint64_t x);
std::string fmt(const std::optional<double>& x);

/// RFC 4180 writer with LF line endings.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}
  void row(const std::vector<std::string>& cells);

 private:
  std::ostream& os_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header column; throws std::runtime_error if absent.
  std::size_t column(std::string_view name) const;
};

/// Parses RFC 4180 text (quoted fields, doubled quotes, CRLF or LF).
CsvTable parse_csv(std::istream& is);

std::string join(const std::vector<double>& values, char sep);
std::vector<double> split_numbers(std::string_view text, char sep);

}  // namespace sbcli
