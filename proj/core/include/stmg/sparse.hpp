#pragma once

// Compressed sparse row matrices and deterministic vector kernels.

#include <iosfwd>
#include <span>
#include <vector>

#include "stmg/types.hpp"

namespace stmg {

class CsrMatrix {
 public:
  CsrMatrix() = default;
  /// Builds the structure from per-row column lists; lists are sorted and
  /// deduplicated. Values start at zero.
  CsrMatrix(Index rows, Index cols, const std::vector<std::vector<Index>>& pattern);

  [[nodiscard]] Index rows() const { return rows_; }
  [[nodiscard]] Index cols() const { return cols_; }
  [[nodiscard]] Index nnz() const { return static_cast<Index>(col_idx_.size()); }

  [[nodiscard]] const std::vector<Index>& row_ptr() const { return row_ptr_; }
  [[nodiscard]] const std::vector<Index>& col_idx() const { return col_idx_; }
  [[nodiscard]] std::vector<double>& values() { return values_; }
  [[nodiscard]] const std::vector<double>& values() const { return values_; }

  /// Position of (row, col) in the value array, or -1 if not in the pattern.
  [[nodiscard]] Index find(Index row, Index col) const;
  /// Value at (row, col); zero outside the pattern.
  [[nodiscard]] double coeff(Index row, Index col) const;
  /// Adds to an entry of the pattern; throws if (row, col) is not stored.
  void add(Index row, Index col, double value);
  void set_zero();

  /// y = A x
  void multiply(std::span<const double> x, std::span<double> y) const;
  /// y[i] = (A x)[i] for the listed rows only.
  void multiply_rows(std::span<const Index> rows, std::span<const double> x,
                     std::span<double> y) const;
  [[nodiscard]] double row_dot(Index row, std::span<const double> x) const;

  [[nodiscard]] CsrMatrix transpose() const;

  void write_matrix_market(std::ostream& out) const;

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<Index> row_ptr_{0};
  std::vector<Index> col_idx_;
  std::vector<double> values_;
};

/// Reduction in fixed chunks of 1024 entries summed in chunk order, so the
/// result does not depend on how callers split the work.
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double norm_inf(std::span<const double> a);
/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

/// Plain-text vector dump, one value per line with full precision.
void write_vector(std::ostream& out, std::span<const double> v);

}  // namespace stmg
