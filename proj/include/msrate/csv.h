#ifndef MSRATE_CSV_H
#define MSRATE_CSV_H

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace msrate::csv {

// Every CSV this project writes starts with "# schema=<name>/<version>".
inline constexpr std::string_view kSchemaPrefix = "# schema=";

struct Table {
  std::optional<std::string> schema;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> find(std::string_view column) const;
  // Throws SchemaMismatch when the column is missing.
  std::size_t index(std::string_view column) const;
};

enum class SchemaPolicy {
  Required,  // our own artifacts
  Optional,  // externally produced files; checked only if present
};

// Reads a table. When `schema` is given, a schema line must match it exactly
// (or be absent under SchemaPolicy::Optional).
Table read(std::istream& in, std::optional<std::string_view> schema = std::nullopt,
           SchemaPolicy policy = SchemaPolicy::Required);
Table read_file(const std::string& path, std::optional<std::string_view> schema = std::nullopt,
                SchemaPolicy policy = SchemaPolicy::Required);

std::vector<std::string> split_line(std::string_view line);

void write_schema(std::ostream& out, std::string_view schema);
void write_row(std::ostream& out, const std::vector<std::string>& fields);

// Shortest representation that round-trips exactly.
std::string format_double(double value);
double parse_double(std::string_view text, std::string_view what);
long long parse_int(std::string_view text, std::string_view what);

}  // namespace msrate::csv

#endif  // MSRATE_CSV_H
