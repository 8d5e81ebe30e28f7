#include "mapgate/io.hpp"

#include <charconv>
#include <sstream>

#include "mapgate/errors.hpp"

namespace mapgate {
namespace {

void write_real_grid(const std::filesystem::path& path, const RMatrix& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_number(m(i, j));
    }
    out << '\n';
  }
}

RMatrix read_real_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
      double v = 0.0;
      const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
      if (res.ec != std::errc{}) throw std::runtime_error("bad number '" + field + "' in " + path.string());
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw std::runtime_error("ragged matrix file " + path.string());
    }
    rows.push_back(std::move(row));
  }
  RMatrix m(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return m;
}

std::filesystem::path with_suffix(const std::filesystem::path& stem, const char* suffix) {
  return stem.parent_path() / (stem.filename().string() + suffix);
}

}  // namespace

std::string format_number(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, 12);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : path_(path), out_(path) {
  if (!out_) throw std::runtime_error("cannot write " + path.string());
  for (const auto& h : header) cell(h);
  end_row();
}

CsvWriter& CsvWriter::cell(double x) { return cell(format_number(x)); }

CsvWriter& CsvWriter::cell(bool b) { return cell(std::string(b ? "true" : "false")); }

CsvWriter& CsvWriter::cell(const std::string& s) {
  if (!first_) out_ << ',';
  out_ << s;
  first_ = false;
  return *this;
}

void CsvWriter::end_row() {
  out_ << '\n';
  first_ = true;
  if (!out_) throw std::runtime_error("write failed for " + path_.string());
}

void write_time_series(const std::filesystem::path& path, const std::vector<PopulationSample>& samples) {
  CsvWriter csv(path, {"time_ns", "P00", "P01", "P10", "P11", "leak_total"});
  for (const auto& s : samples) {
    csv.cell(units::to_ns(s.time));
    for (double p : s.computational) csv.cell(p);
    csv.cell(s.leakage);
    csv.end_row();
  }
}

std::vector<std::filesystem::path> write_complex_matrix(const std::filesystem::path& stem, const CMatrix& m) {
  const auto re = with_suffix(stem, ".re.csv");
  const auto im = with_suffix(stem, ".im.csv");
  write_real_grid(re, m.real());
  write_real_grid(im, m.imag());
  return {re, im};
}

CMatrix read_complex_matrix(const std::filesystem::path& stem) {
  const RMatrix re = read_real_grid(with_suffix(stem, ".re.csv"));
  const RMatrix im = read_real_grid(with_suffix(stem, ".im.csv"));
  if (re.rows() != im.rows() || re.cols() != im.cols()) {
    throw std::runtime_error("real and imaginary parts differ in shape for " + stem.string());
  }
  CMatrix m(re.rows(), re.cols());
  m.real() = re;
  m.imag() = im;
  return m;
}

void write_ptm(const std::filesystem::path& path, const Ptm& r) {
  std::vector<std::string> header{"pauli"};
  for (const auto& l : pauli_labels()) header.push_back(l);
  CsvWriter csv(path, header);
  for (int i = 0; i < 16; ++i) {
    csv.cell(pauli_labels()[static_cast<std::size_t>(i)]);
    for (int j = 0; j < 16; ++j) csv.cell(r(i, j));
    csv.end_row();
  }
}

}  // namespace mapgate
