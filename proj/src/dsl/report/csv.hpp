#pragma once

#include <string>
#include <vector>

// Deterministic CSV/JSON table emission.  All floating-point formatting
// goes through format_double so repeated runs are byte-identical.

namespace dsl::report {

std::string format_double(double v);

class Table {
 public:
  explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}

  Table& add_row(std::vector<std::string> cells);
  std::string to_csv() const;
  std::string to_json() const;  // array of objects keyed by the header
  size_t rows() const { return rows_.size(); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// Writes via a temp file + rename so readers never see partial output.
void write_file_atomic(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

}  // namespace dsl::report
