#include "stmg/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

namespace stmg {

CsrMatrix::CsrMatrix(Index rows, Index cols, const std::vector<std::vector<Index>>& pattern)
    : rows_(rows), cols_(cols) {
  if (static_cast<Index>(pattern.size()) != rows) {
    throw Error("CsrMatrix: pattern has " + std::to_string(pattern.size()) + " rows, expected " +
                std::to_string(rows));
  }
  row_ptr_.assign(rows + 1, 0);
  for (Index i = 0; i < rows; ++i) {
    std::vector<Index> row = pattern[i];
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    for (Index c : row) {
      if (c < 0 || c >= cols) throw Error("CsrMatrix: column index out of range");
    }
    col_idx_.insert(col_idx_.end(), row.begin(), row.end());
    row_ptr_[i + 1] = static_cast<Index>(col_idx_.size());
  }
  values_.assign(col_idx_.size(), 0.0);
}

Index CsrMatrix::find(Index row, Index col) const {
  const auto begin = col_idx_.begin() + row_ptr_[row];
  const auto end = col_idx_.begin() + row_ptr_[row + 1];
  const auto it = std::lower_bound(begin, end, col);
  if (it == end || *it != col) return -1;
  return static_cast<Index>(it - col_idx_.begin());
}

double CsrMatrix::coeff(Index row, Index col) const {
  const Index pos = find(row, col);
  return pos < 0 ? 0.0 : values_[pos];
}

void CsrMatrix::add(Index row, Index col, double value) {
  const Index pos = find(row, col);
  if (pos < 0) {
    throw Error("CsrMatrix::add: entry (" + std::to_string(row) + ", " + std::to_string(col) +
                ") is not in the sparsity pattern");
  }
  values_[pos] += value;
}

void CsrMatrix::set_zero() { std::fill(values_.begin(), values_.end(), 0.0); }

double CsrMatrix::row_dot(Index row, std::span<const double> x) const {
  double s = 0.0;
  for (Index p = row_ptr_[row]; p < row_ptr_[row + 1]; ++p) s += values_[p] * x[col_idx_[p]];
  return s;
}

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  for (Index i = 0; i < rows_; ++i) y[i] = row_dot(i, x);
}

void CsrMatrix::multiply_rows(std::span<const Index> rows, std::span<const double> x,
                              std::span<double> y) const {
  for (Index i : rows) y[i] = row_dot(i, x);
}

CsrMatrix CsrMatrix::transpose() const {
  CsrMatrix t;
  t.rows_ = cols_;
  t.cols_ = rows_;
  t.row_ptr_.assign(cols_ + 1, 0);
  for (Index c : col_idx_) ++t.row_ptr_[c + 1];
  for (Index i = 0; i < cols_; ++i) t.row_ptr_[i + 1] += t.row_ptr_[i];
  t.col_idx_.resize(col_idx_.size());
  t.values_.resize(values_.size());
  std::vector<Index> next(t.row_ptr_.begin(), t.row_ptr_.end() - 1);
  for (Index i = 0; i < rows_; ++i) {
    for (Index p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      const Index q = next[col_idx_[p]]++;
      t.col_idx_[q] = i;
      t.values_[q] = values_[p];
    }
  }
  return t;
}

void CsrMatrix::write_matrix_market(std::ostream& out) const {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << rows_ << ' ' << cols_ << ' ' << nnz() << '\n';
  const auto old = out.precision(17);
  for (Index i = 0; i < rows_; ++i) {
    for (Index p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      out << i + 1 << ' ' << col_idx_[p] + 1 << ' ' << values_[p] << '\n';
    }
  }
  out.precision(old);
}

namespace {
constexpr std::size_t kChunk = 1024;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("dot: size mismatch");
  double total = 0.0;
  for (std::size_t start = 0; start < a.size(); start += kChunk) {
    const std::size_t end = std::min(a.size(), start + kChunk);
    double partial = 0.0;
    for (std::size_t i = start; i < end; ++i) partial += a[i] * b[i];
    total += partial;
  }
  return total;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double norm_inf(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void write_vector(std::ostream& out, std::span<const double> v) {
  const auto old = out.precision(17);
  for (double x : v) out << x << '\n';
  out.precision(old);
}

}  // namespace stmg
