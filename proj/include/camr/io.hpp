#ifndef CAMR_IO_HPP
#define CAMR_IO_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace camr::io {

// All CSV output goes through these helpers so that reruns are
// byte-identical: doubles printed with round-trip precision, '\n' endings.
std::string format_double(double x);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // throws if missing
  double as_double(std::size_t row, int col) const;
  std::int64_t as_int(std::size_t row, int col) const;
};

Csv read_csv(const std::filesystem::path& path);

void write_matrix_csv(const std::filesystem::path& path,
                      const std::vector<std::string>& header,
                      const Eigen::MatrixXd& values);

// FNV-1a over the raw bytes; used for config/input hashes in manifests.
std::uint64_t fnv1a64(const std::string& bytes);
std::uint64_t fnv1a64_file(const std::filesystem::path& path);
std::string hex64(std::uint64_t value);

}  // namespace camr::io

#endif
