#pragma once

#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "qc1d/errors.hpp"
#include "qc1d/potential.hpp"
#include "qc1d/version.hpp"

namespace qc1d {

/// Fixed 17-significant-digit formatting; CSV output must be byte-identical
/// across runs of the same configuration.
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// First line of every CSV: tool version, potential, strain, and the four
/// linearization constants, space-separated key=value pairs.
inline void write_meta_line(std::ostream& os, const std::string& command,
                            const std::string& potential_desc, double strain,
                            const LinearizedCoeffs& c, const std::string& extra = "") {
  os << "#meta tool=qc1d version=" << version_string << " command=" << command
     << " potential=" << potential_desc << " F=" << fmt17(strain)
     << " phi1F=" << fmt17(c.phi1_f) << " phi2F=" << fmt17(c.phi2_f)
     << " phi1_2F=" << fmt17(c.phi1_2f) << " phi2_2F=" << fmt17(c.phi2_2f);
  if (!extra.empty()) os << ' ' << extra;
  os << '\n';
}

class CsvFile {
 public:
  explicit CsvFile(const std::string& path) : path_(path), os_(path, std::ios::binary) {
    if (!os_) throw IoError("cannot open '" + path + "' for writing");
  }
  ~CsvFile() = default;

  std::ostream& stream() { return os_; }
  const std::string& path() const { return path_; }

  void close() {
    os_.flush();
    if (!os_) throw IoError("write to '" + path_ + "' failed");
    os_.close();
  }

 private:
  std::string path_;
  std::ofstream os_;
};

}  // namespace qc1d
