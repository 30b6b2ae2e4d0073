#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "rwr/dataset.hpp"
#include "rwr/error.hpp"

namespace rwr::harness {

/// One dropped row: 1-based data row (header excluded) and the reason.
struct DroppedRow {
  std::size_t row = 0;
  std::string reason;
};

struct CsvDiagnostics {
  std::size_t rows_read = 0;
  std::vector<DroppedRow> dropped;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

/// Finite double or nullopt for NA, empty, non-numeric and inf/nan cells.
inline std::optional<double> parse_cell(std::string_view cell) {
  if (cell.empty()) return std::nullopt;
  if (cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace detail

/// Parses numeric CSV text with a header row. Rows with missing or
/// non-numeric cells are dropped and listed in `diagnostics`; a row with the
/// wrong number of fields is a ParseError.
inline Dataset parse_csv(std::istream& in, const std::string& target_column, CsvDiagnostics* diagnostics = nullptr) {
  CsvDiagnostics local;
  CsvDiagnostics& diag = diagnostics ? *diagnostics : local;
  diag = {};
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    for (auto f : detail::split_fields(line)) header.emplace_back(f);
    break;
  }
  if (header.empty()) throw ParseError(0, 0, "missing header row");
  std::optional<std::size_t> target;
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == target_column) target = j;
  if (!target) throw Error(ErrorKind::MissingTarget, "target column '" + target_column + "' not in header");

  std::vector<std::string> names;
  for (std::size_t j = 0; j < header.size(); ++j)
    if (j != *target) names.push_back(header[j]);
  const std::size_t d = names.size();
  std::vector<double> features, targets;
  std::vector<double> row(header.size());
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    const std::size_t data_row = ++diag.rows_read;
    const auto fields = detail::split_fields(line);
    if (fields.size() != header.size())
      throw ParseError(data_row, std::min(fields.size(), header.size()),
                       "expected " + std::to_string(header.size()) + " fields, found " + std::to_string(fields.size()));
    bool ok = true;
    for (std::size_t j = 0; j < fields.size() && ok; ++j) {
      const auto v = detail::parse_cell(fields[j]);
      if (!v) {
        diag.dropped.push_back({data_row, "column '" + header[j] + "': unusable value '" + std::string(fields[j]) + "'"});
        ok = false;
      } else {
        row[j] = *v;
      }
    }
    if (!ok) continue;
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j == *target)
        targets.push_back(row[j]);
      else
        features.push_back(row[j]);
    }
  }
  if (targets.empty()) throw Error(ErrorKind::EmptyAfterFiltering, "no usable rows remain after filtering");
  const std::size_t n = targets.size();
  return Dataset(n, d, std::move(features), std::move(targets), std::move(names));
}

inline Dataset load_csv(const std::string& path, const std::string& target_column,
                        CsvDiagnostics* diagnostics = nullptr) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path + "'");
  return parse_csv(in, target_column, diagnostics);
}

}  // namespace rwr::harness
