#pragma once

#include <string>
#include <vector>

namespace shiftem {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const;  // -1 if absent
};

/// RFC-4180 style: quoted fields, embedded commas/quotes, CRLF tolerant.
CsvTable parse_csv(const std::string& text);
CsvTable read_csv_file(const std::string& path);

std::string csv_escape(const std::string& field);

}  // namespace shiftem
