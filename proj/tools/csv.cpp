#include "csv.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace sbcli {

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string fmt(std::uint64_t x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string fmt(const std::optional<double>& x) { return x ? fmt(*x) : std::string(); }

void CsvWriter::row(const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) os_ << ',';
    const std::string& c = cells[i];
    if (c.find_first_of(",\"\r\n") == std::string::npos) {
      os_ << c;
      continue;
    }
    os_ << '"';
    for (char ch : c) {
      if (ch == '"') os_ << '"';
      os_ << ch;
    }
    os_ << '"';
  }
  os_ << '\n';
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw std::runtime_error("missing column '" + std::string(name) + "'");
}

CsvTable parse_csv(std::istream& is) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool any = false;
  char ch;
  auto end_record = [&] {
    record.push_back(std::move(field));
    field.clear();
    if (!(record.size() == 1 && record[0].empty())) records.push_back(std::move(record));
    record.clear();
    any = false;
  };
  while (is.get(ch)) {
    any = true;
    if (quoted) {
      if (ch == '"') {
        if (is.peek() == '"') {
          is.get(ch);
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
      continue;
    }
    switch (ch) {
      case '"': quoted = true; break;
      case ',':
        record.push_back(std::move(field));
        field.clear();
        break;
      case '\r':
        if (is.peek() == '\n') is.get(ch);
        end_record();
        break;
      case '\n': end_record(); break;
      default: field += ch;
    }
  }
  if (quoted) throw std::runtime_error("unterminated quoted field");
  if (any) end_record();
  CsvTable t;
  if (records.empty()) throw std::runtime_error("empty CSV input");
  t.header = std::move(records.front());
  t.rows.assign(std::make_move_iterator(records.begin() + 1), std::make_move_iterator(records.end()));
  for (const auto& r : t.rows)
    if (r.size() != t.header.size()) throw std::runtime_error("ragged CSV row");
  return t;
}

std::string join(const std::vector<double>& values, char sep) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += sep;
    out += fmt(values[i]);
  }
  return out;
}

std::vector<double> split_numbers(std::string_view text, char sep) {
  std::vector<double> out;
  if (text.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const std::size_t end = text.find(sep, start);
    const std::string_view tok = text.substr(start, end == std::string_view::npos ? text.size() - start : end - start);
    double v = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
      throw std::runtime_error("not a number: '" + std::string(tok) + "'");
    out.push_back(v);
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

}  // namespace sbcli
