#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace equibound {

// One audit unit. d is the availability era (0 = pre, 1 = post); y is the
// observed outcome and exists exactly when d = 0; g is an opaque group label.
struct UnitRecord {
  std::vector<double> x;
  int d = 0;
  int t = 0;
  std::optional<int> y;
  int g = 0;
};

// Immutable unit-level dataset. Enforces on construction:
//   d = 0 -> t = 0 and y present; d = 1 -> y absent;
//   at least one (d=0, y=1) record and at least one d=1 record.
// Covariates are stored column-major so kernels can run over whole columns.
class AuditFrame {
 public:
  static AuditFrame from_records(const std::vector<UnitRecord>& records);
  static AuditFrame from_columns(std::size_t dim, std::vector<double> x_colmajor,
                                 std::vector<std::int8_t> d, std::vector<std::int8_t> t,
                                 std::vector<std::int8_t> y, std::vector<std::int32_t> g);

  std::size_t size() const { return n_; }
  std::size_t dim() const { return dim_; }

  int d(std::size_t i) const { return d_[i]; }
  int t(std::size_t i) const { return t_[i]; }
  // Valid only for pre-era records (d = 0).
  int y(std::size_t i) const { return y_[i]; }
  bool has_y(std::size_t i) const { return y_[i] >= 0; }
  int group(std::size_t i) const { return g_[i]; }

  double x(std::size_t i, std::size_t j) const { return x_[j * n_ + i]; }
  std::span<const double> x_column(std::size_t j) const {
    return {x_.data() + j * n_, n_};
  }
  std::vector<double> x_row(std::size_t i) const;

  const std::set<int>& groups() const { return groups_; }
  std::size_t count_pre() const { return n_pre_; }
  std::size_t count_post() const { return n_ - n_pre_; }

 private:
  AuditFrame() = default;
  void validate() const;

  std::size_t n_ = 0, dim_ = 0, n_pre_ = 0;
  std::vector<double> x_;        // column-major, column j at [j*n, (j+1)*n)
  std::vector<std::int8_t> d_, t_;
  std::vector<std::int8_t> y_;   // -1 when absent (post-era)
  std::vector<std::int32_t> g_;
  std::set<int> groups_;
};

// Column naming for the delimited-text format: x1..xD for covariates plus the
// named d/t/y/g columns. y is written empty for post-era rows.
struct CsvSchema {
  char delimiter = ',';
  std::string d = "d";
  std::string t = "t";
  std::string y = "y";
  std::string g = "g";
  std::string x_prefix = "x";
};

AuditFrame load_frame(const std::filesystem::path& path, const CsvSchema& schema = {});
void save_frame(const AuditFrame& frame, const std::filesystem::path& path,
                const CsvSchema& schema = {});

// Subframe with only group g's records (file order preserved); re-validates.
AuditFrame slice_group(const AuditFrame& frame, int g);

// Deterministic era-stratified fold assignment. Within each era the shuffled
// records are dealt round-robin, so per-era fold sizes differ by at most one
// and every fold sees both eras.
struct FoldAssignment {
  int k = 0;
  std::vector<std::int32_t> fold;  // per record, in frame order
  std::uint64_t seed = 0;
};

FoldAssignment make_folds(const AuditFrame& frame, int k, std::uint64_t seed);

}  // namespace equibound
