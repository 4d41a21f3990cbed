#pragma once
// Deterministic CSV/text formatting: all floating-point values are printed
// with 12 significant digits so repeated runs are byte-identical.

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace spinroute {

inline std::string format_g12(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : out_(path) {
    if (!out_)
      throw std::runtime_error("csv: cannot open '" + path + "' for writing");
  }

  void header(const std::vector<std::string>& names) { line(names); }

  void row(const std::vector<double>& values) {
    std::string s;
    for (std::size_t k = 0; k < values.size(); ++k) {
      if (k) s += ',';
      s += format_g12(values[k]);
    }
    out_ << s << '\n';
  }

  void line(const std::vector<std::string>& cells) {
    std::string s;
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (k) s += ',';
      s += cells[k];
    }
    out_ << s << '\n';
  }

 private:
  std::ofstream out_;
};

}  // namespace spinroute
