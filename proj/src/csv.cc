#include "msrate/csv.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "msrate/error.h"

namespace msrate::csv {

std::optional<std::size_t> Table::find(std::string_view column) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == column) return i;
  return std::nullopt;
}

std::size_t Table::index(std::string_view column) const {
  if (auto i = find(column)) return *i;
  throw Error(ErrorKind::SchemaMismatch, "missing column '" + std::string(column) + "'");
}

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

Table read(std::istream& in, std::optional<std::string_view> schema, SchemaPolicy policy) {
  Table table;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.rfind(kSchemaPrefix, 0) == 0) {
      if (!have_header) table.schema = line.substr(kSchemaPrefix.size());
      continue;
    }
    if (line[0] == '#') continue;
    auto fields = split_line(line);
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size())
      throw Error(ErrorKind::SchemaMismatch, "row has " + std::to_string(fields.size()) +
                                                 " fields, header has " +
                                                 std::to_string(table.header.size()));
    table.rows.push_back(std::move(fields));
  }
  if (!have_header) throw Error(ErrorKind::SchemaMismatch, "CSV has no header row");
  if (schema) {
    if (table.schema) {
      if (*table.schema != *schema)
        throw Error(ErrorKind::SchemaMismatch,
                    "expected schema " + std::string(*schema) + ", found " + *table.schema);
    } else if (policy == SchemaPolicy::Required) {
      throw Error(ErrorKind::SchemaMismatch, "missing schema line, expected " + std::string(*schema));
    }
  }
  return table;
}

Table read_file(const std::string& path, std::optional<std::string_view> schema,
                SchemaPolicy policy) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  try {
    return read(in, schema, policy);
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

void write_schema(std::ostream& out, std::string_view schema) {
  out << kSchemaPrefix << schema << '\n';
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    const std::string& f = fields[i];
    if (f.find_first_of(",\"\n") == std::string::npos) {
      out << f;
      continue;
    }
    out << '"';
    for (char c : f) {
      if (c == '"') out << '"';
      out << c;
    }
    out << '"';
  }
  out << '\n';
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

double parse_double(std::string_view text, std::string_view what) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size())
    throw Error(ErrorKind::SchemaMismatch,
                "bad number '" + std::string(text) + "' in column " + std::string(what));
  return v;
}

long long parse_int(std::string_view text, std::string_view what) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size())
    throw Error(ErrorKind::SchemaMismatch,
                "bad integer '" + std::string(text) + "' in column " + std::string(what));
  return v;
}

}  // namespace msrate::csv
