#pragma once

// Persistence formats.
//
// Snapshot container (little endian):
//   char[4] "CDR1" | u32 version = 1 | u64 N_h | u64 N_T | f64[N_h * (N_T + 1)]
// with the matrix stored column by column (one column per time point).
//
// Blob container (little endian), a flat list of named entries:
//   char[4] "CDRB" | u32 version = 1 | u64 entry count | entries...
//   entry: u32 name length | name bytes | u8 kind | payload
//     kind 0 (matrix): u64 rows | u64 cols | f64[rows * cols] column major
//     kind 1 (text):   u64 length | bytes

#include "cdrpipe/fom.hpp"
#include "cdrpipe/kernel.hpp"
#include "cdrpipe/pod.hpp"
#include "cdrpipe/rom.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <map>
#include <string>

namespace cdr::io {

inline constexpr std::uint32_t kFormatVersion = 1;

void write_snapshots(const std::filesystem::path& path, const Eigen::Ref<const Eigen::MatrixXd>& states);
Eigen::MatrixXd read_snapshots(const std::filesystem::path& path);

/// CSV with header `t,f`, values printed round-trip exact.
void write_qoi_csv(const std::filesystem::path& path, const Eigen::VectorXd& times,
                   const Eigen::VectorXd& values);
/// Returns a two-column matrix (t, f).
Eigen::MatrixX2d read_qoi_csv(const std::filesystem::path& path);

void write_singular_values_csv(const std::filesystem::path& path, const Eigen::VectorXd& sigma);

class Blob {
 public:
  void put(const std::string& name, Eigen::MatrixXd value);
  void put(const std::string& name, std::string value);
  void put_scalar(const std::string& name, double value);

  const Eigen::MatrixXd& matrix(const std::string& name) const;
  const std::string& text(const std::string& name) const;
  double scalar(const std::string& name) const;
  Eigen::VectorXd vector(const std::string& name) const;
  bool has(const std::string& name) const;

  void write(const std::filesystem::path& path) const;
  static Blob read(const std::filesystem::path& path);

 private:
  std::map<std::string, Eigen::MatrixXd> matrices_;
  std::map<std::string, std::string> texts_;
};

Blob to_blob(const ReducedOperatorSet& red);
ReducedOperatorSet reduced_from_blob(const Blob& blob);

Blob to_blob(const KernelModel& model);
KernelModel kernel_from_blob(const Blob& blob);

Blob to_blob(const AffineOperatorSet& ops);

Blob to_blob(const ReducedBasis& basis);
ReducedBasis basis_from_blob(const Blob& blob);

/// Writes the basis as a snapshot container plus `<stem>_sv.csv`.
void write_basis(const std::filesystem::path& path, const ReducedBasis& basis);

}  // namespace cdr::io
