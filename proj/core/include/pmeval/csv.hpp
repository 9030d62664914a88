#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pmeval::csv {

struct Row {
  std::size_t line = 0;  // 1-based line in the source file
  std::vector<std::string> fields;
};

/// Header-indexed CSV table (RFC 4180 quoting, CRLF tolerant).
class Table {
 public:
  static Table parse(std::string_view text, const std::string& source_name);
  static Table read(const std::filesystem::path& path);

  const std::vector<std::string>& header() const { return header_; }
  const std::vector<Row>& rows() const { return rows_; }
  const std::string& source() const { return source_; }

  std::optional<std::size_t> column(std::string_view name) const;
  /// Throws SchemaError naming the file when the column is absent.
  std::size_t require_column(std::string_view name) const;

 private:
  std::string source_;
  std::vector<std::string> header_;
  std::vector<Row> rows_;
};

/// Quotes a field when it contains a delimiter, quote or newline.
std::string escape(std::string_view field);

std::string join_row(const std::vector<std::string>& fields);

/// Fixed, locale-independent rendering used for every numeric CSV column.
std::string format_number(double value);

/// Parses a decimal; throws SchemaError with "<source>:<line>" context.
double parse_number(std::string_view text, const std::string& source, std::size_t line,
                    std::string_view column);

}  // namespace pmeval::csv
