#include "genrl/io/csv.hpp"

#include <charconv>

#include "genrl/error.hpp"
#include "genrl/io/json_io.hpp"

namespace genrl::io {

std::string format_double(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

namespace {

void append_record(std::string& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i > 0) out += ',';
    out += csv_escape(cells[i]);
  }
  out += "\r\n";
}

}  // namespace

void write_csv(const std::string& path, const CsvTable& table) {
  for (const auto& row : table.rows)
    require(row.size() == table.header.size(), "write_csv: ragged row");
  std::string out;
  append_record(out, table.header);
  for (const auto& row : table.rows) append_record(out, row);
  write_text(path, out);
}

CsvTable read_csv(const std::string& path) {
  const std::string text = read_text(path);
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool field_open = false;  // distinguishes an empty trailing field from no field

  const auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_open = false;
  };
  const auto end_record = [&] {
    end_field();
    records.push_back(std::move(record));
    record.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"' && field.empty() && !field_open) {
      quoted = true;
      field_open = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
      end_record();
      ++i;
    } else if (c == '\n') {
      end_record();
    } else {
      field += c;
      field_open = true;
    }
  }
  require(!quoted, "read_csv: '" + path + "' ends inside a quoted field");
  if (field_open || !record.empty()) end_record();

  CsvTable table;
  require(!records.empty(), "read_csv: '" + path + "' is empty");
  table.header = std::move(records.front());
  table.rows.assign(std::make_move_iterator(records.begin() + 1),
                    std::make_move_iterator(records.end()));
  for (const auto& row : table.rows)
    require(row.size() == table.header.size(), "read_csv: '" + path + "' has a ragged row");
  return table;
}

}  // namespace genrl::io
