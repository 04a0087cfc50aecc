#pragma once

#include <string>
#include <vector>

namespace tl {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;  // raw cells; empty string = missing
};

// Reads a UTF-8, comma-delimited CSV with a header row. Supports quoted
// fields with embedded commas, newlines, and "" escapes. CRLF tolerated.
CsvTable read_csv(const std::string& path);

// Writes rows of preformatted cells; quotes any cell containing a comma,
// quote, or newline. Used for the plot-ready diagnostic exports.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

}  // namespace tl
