#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace agri {

struct CsvTable {
  std::string source;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  /// 1-based line number of each row in the source, for diagnostics.
  std::vector<std::size_t> lines;

  /// Index of a header column, or npos.
  std::size_t column(std::string_view name) const;
};

/// RFC-4180-ish reader: quoted fields, doubled quotes, CRLF tolerated.
/// Blank lines are skipped. Rows whose width differs from the header throw.
CsvTable read_csv(std::istream& in, std::string source);
CsvTable read_csv_file(const std::filesystem::path& path);

std::string csv_escape(std::string_view field);
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

/// Shortest decimal text that parses back to exactly the same double.
std::string format_number(double value);
/// Strict full-field parse; throws agri::ParseError naming `what` on failure.
double parse_number(std::string_view text, std::string_view what);

std::string_view trim(std::string_view text);

}  // namespace agri
