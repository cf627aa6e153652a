#include "bsnn/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace bsnn {

std::string format_double(Scalar v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {
  if (header_.empty()) throw InvalidArgument("CSV header is empty");
}

CsvTable& CsvTable::begin_row() {
  if (!rows_.empty() && rows_.back().size() != header_.size())
    throw InvalidArgument("CSV row has " + std::to_string(rows_.back().size()) + " cells, header has " +
                          std::to_string(header_.size()));
  rows_.emplace_back();
  return *this;
}

CsvTable& CsvTable::add(std::string v) {
  if (rows_.empty()) throw InvalidArgument("CSV cell added before begin_row()");
  if (v.find_first_of(",\n\"") != std::string::npos) {
    std::string quoted = "\"";
    for (char c : v) {
      if (c == '"') quoted += '"';
      quoted += c;
    }
    v = quoted + "\"";
  }
  rows_.back().push_back(std::move(v));
  return *this;
}

CsvTable& CsvTable::add(Scalar v) { return add(format_double(v)); }
CsvTable& CsvTable::add(Index v) { return add(std::to_string(v)); }
CsvTable& CsvTable::add(std::uint64_t v) { return add(std::to_string(v)); }
CsvTable& CsvTable::add(const std::optional<Scalar>& v) { return add(v ? format_double(*v) : std::string()); }

void CsvTable::write(std::ostream& out) const {
  auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out << ',';
      out << cells[i];
    }
    out << '\n';
  };
  line(header_);
  for (const auto& r : rows_) {
    if (r.size() != header_.size()) throw InvalidArgument("CSV row width does not match the header");
    line(r);
  }
}

void CsvTable::write(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write(out);
  if (!out) throw Error("write failed: " + path.string());
}

std::string CsvTable::str() const {
  std::ostringstream os;
  write(os);
  return os.str();
}

}  // namespace bsnn
