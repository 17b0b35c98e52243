#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "tauclock/error.hpp"

namespace tauclock {

/// Fixed 17-significant-digit rendering ("%.17g"); NaN and infinities are
/// spelled nan, inf, -inf on every platform.
inline std::string fmt17(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Plain CSV table preceded by `#`-prefixed metadata lines.
class CsvTable {
 public:
  void meta(std::string_view key, std::string_view value) {
    meta_ += "# ";
    meta_ += key;
    meta_ += ": ";
    meta_ += value;
    meta_ += '\n';
  }
  void meta(std::string_view key, double value) { meta(key, fmt17(value)); }

  void columns(std::vector<std::string> names) { columns_ = std::move(names); }

  void row(const std::vector<std::string>& cells) {
    detail::require(cells.size() == columns_.size(), ErrorKind::invalid_input, "CSV row width mismatch");
    rows_.push_back(cells);
  }

  void write(std::ostream& os) const {
    os << meta_;
    write_line(os, columns_);
    for (const auto& r : rows_) write_line(os, r);
  }

  std::string str() const {
    std::ostringstream os;
    write(os);
    return os.str();
  }

 private:
  static void write_line(std::ostream& os, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) os << ',';
      os << cells[i];
    }
    os << '\n';
  }

  std::string meta_;
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  detail::require(static_cast<bool>(out), ErrorKind::io, "cannot open " + path + " for writing");
  out << content;
  out.flush();
  detail::require(static_cast<bool>(out), ErrorKind::io, "failed writing " + path);
}

}  // namespace tauclock
