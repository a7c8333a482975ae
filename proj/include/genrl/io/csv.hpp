#pragma once

#include <string>
#include <vector>

namespace genrl::io {

// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

// Field quoting per RFC 4180: fields containing commas, quotes, or line
// breaks are wrapped in quotes with embedded quotes doubled.
std::string csv_escape(const std::string& field);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// Writes header + rows with CRLF record separators.
void write_csv(const std::string& path, const CsvTable& table);

// Full RFC 4180 reader: quoted fields may contain separators and line
// breaks. The first record becomes the header.
CsvTable read_csv(const std::string& path);

}  // namespace genrl::io
