#pragma once

#include "bsnn/common.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace bsnn {

/// Shortest decimal string that parses back to exactly `v`; "nan", "inf", "-inf" otherwise.
std::string format_double(Scalar v);

/// Header plus rows of pre-formatted cells, written with '\n' line endings.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  const std::vector<std::string>& header() const noexcept { return header_; }
  std::size_t rows() const noexcept { return rows_.size(); }

  CsvTable& begin_row();
  CsvTable& add(Scalar v);
  CsvTable& add(Index v);
  CsvTable& add(int v) { return add(static_cast<Index>(v)); }
  CsvTable& add(std::uint64_t v);
  CsvTable& add(const std::optional<Scalar>& v);  ///< empty cell when absent
  CsvTable& add(std::string v);
  CsvTable& add(const char* v) { return add(std::string(v)); }

  void write(std::ostream& out) const;
  void write(const std::filesystem::path& path) const;
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace bsnn
