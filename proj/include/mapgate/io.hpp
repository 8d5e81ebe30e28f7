#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "mapgate/dynamics.hpp"
#include "mapgate/linalg.hpp"
#include "mapgate/tomography.hpp"

namespace mapgate {

/// Formats doubles with 12 significant digits, independent of locale.
std::string format_number(double x);

/// Comma-separated rows. Fields are written verbatim; callers avoid commas.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  CsvWriter& cell(double x);
  CsvWriter& cell(const std::string& s);
  CsvWriter& cell(bool b);
  void end_row();
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  bool first_ = true;
};

/// time_ns, P00, P01, P10, P11, leak_total.
void write_time_series(const std::filesystem::path& path, const std::vector<PopulationSample>& samples);

/// Writes `<stem>.re.csv` and `<stem>.im.csv`, each a plain rows x cols grid
/// of real and imaginary parts without header. Returns both paths.
std::vector<std::filesystem::path> write_complex_matrix(const std::filesystem::path& stem, const CMatrix& m);
CMatrix read_complex_matrix(const std::filesystem::path& stem);

/// 16 x 16 with Pauli labels as header row and first column.
void write_ptm(const std::filesystem::path& path, const Ptm& r);

}  // namespace mapgate
