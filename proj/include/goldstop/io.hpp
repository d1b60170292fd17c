#pragma once

// Table output: CSV with 17 significant digits and atomic file replacement.

#include <concepts>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include "goldstop/errors.hpp"
#include "goldstop/simulator.hpp"

namespace goldstop {

/// Shortest-round-trip style formatting fixed at %.17g.
inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(std::ostream& out, const std::vector<std::string>& header) : out_(&out) {
    row_strings(header);
  }

  CsvWriter& cell(double v) { return raw(format_real(v)); }
  template <std::integral T>
  CsvWriter& cell(T v) {
    return raw(std::to_string(v));
  }
  CsvWriter& cell(const std::string& v) { return raw(v); }
  void end_row() {
    *out_ << '\n';
    first_ = true;
  }

 private:
  CsvWriter& raw(const std::string& s) {
    if (!first_) *out_ << ',';
    *out_ << s;
    first_ = false;
    return *this;
  }
  void row_strings(const std::vector<std::string>& cells) {
    for (const auto& c : cells) raw(c);
    end_row();
  }

  std::ostream* out_;
  bool first_ = true;
};

/// rule_id,mean,std_error,n_paths,seed,step
inline void write_estimates_csv(std::ostream& out, const std::vector<MonteCarloEstimate>& rows) {
  CsvWriter w(out, {"rule_id", "mean", "std_error", "n_paths", "seed", "step"});
  for (const auto& e : rows) {
    w.cell(e.rule_id).cell(e.mean).cell(e.std_error).cell(e.n_paths).cell(e.seed).cell(e.step);
    w.end_row();
  }
}

/// Writes `contents` to a sibling temporary file and renames it over `path`.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    f << contents;
    f.flush();
    if (!f) throw std::runtime_error("write to " + tmp.string() + " failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot rename onto " + path.string() + ": " + ec.message());
  }
}

}  // namespace goldstop
