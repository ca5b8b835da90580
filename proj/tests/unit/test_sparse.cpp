#include <gtest/gtest.h>

#include <sstream>

#include "stmg/sparse.hpp"
#include "support.hpp"

namespace stmg {
namespace {

CsrMatrix small_matrix() {
  CsrMatrix a(3, 4, {{2, 0, 2}, {1}, {3, 0}});
  a.add(0, 0, 1.0);
  a.add(0, 2, 2.0);
  a.add(1, 1, 3.0);
  a.add(2, 0, 4.0);
  a.add(2, 3, 5.0);
  a.add(2, 3, 1.0);
  return a;
}

TEST(Csr, StructureIsSortedAndDeduplicated) {
  const auto a = small_matrix();
  EXPECT_EQ(a.nnz(), 5);
  EXPECT_EQ(a.row_ptr(), (std::vector<Index>{0, 2, 3, 5}));
  EXPECT_EQ(a.col_idx(), (std::vector<Index>{0, 2, 1, 0, 3}));
  EXPECT_EQ(a.coeff(2, 3), 6.0);
  EXPECT_EQ(a.coeff(1, 0), 0.0);
  EXPECT_EQ(a.find(1, 0), -1);
}

TEST(Csr, AddOutsidePatternThrows) {
  auto a = small_matrix();
  EXPECT_THROW(a.add(1, 0, 1.0), Error);
  EXPECT_THROW(CsrMatrix(1, 2, {{2}}), Error);
  EXPECT_THROW(CsrMatrix(2, 2, {{0}}), Error);
}

TEST(Csr, MultiplyMatchesDense) {
  const auto a = small_matrix();
  const Vector x{1.0, -2.0, 0.5, 3.0};
  Vector y(3);
  a.multiply(x, y);
  const Eigen::VectorXd ref = testing::dense(a) * testing::as_eigen(x);
  for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(y[i], ref(i));
  Vector part(3, 7.0);
  const std::vector<Index> rows{2};
  a.multiply_rows(rows, x, part);
  EXPECT_DOUBLE_EQ(part[2], y[2]);
  EXPECT_DOUBLE_EQ(part[0], 7.0);
  EXPECT_DOUBLE_EQ(a.row_dot(0, x), y[0]);
}

TEST(Csr, TransposeIsAdjoint) {
  const auto a = small_matrix();
  const auto at = a.transpose();
  EXPECT_EQ(at.rows(), 4);
  EXPECT_EQ(at.cols(), 3);
  EXPECT_TRUE(testing::dense(at).isApprox(testing::dense(a).transpose()));
}

TEST(Csr, MatrixMarketDump) {
  std::ostringstream out;
  small_matrix().write_matrix_market(out);
  const std::string s = out.str();
  EXPECT_EQ(s.rfind("%%MatrixMarket matrix coordinate real general", 0), 0u);
  EXPECT_NE(s.find("3 4 5\n"), std::string::npos);
  EXPECT_NE(s.find("3 4 6"), std::string::npos);
}

TEST(Vectors, DotIsIndependentOfSplitting) {
  const auto a = testing::random_vector(5000, 1);
  const auto b = testing::random_vector(5000, 2);
  double ref = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) ref += a[i] * b[i];
  EXPECT_NEAR(dot(a, b), ref, 1e-10);
  EXPECT_EQ(dot(a, b), dot(a, b));
  EXPECT_NEAR(norm2(a), std::sqrt(dot(a, a)), 1e-14);
  EXPECT_THROW(dot(a, std::span<const double>(b).first(10)), Error);
}

TEST(Vectors, AxpyAndNorms) {
  Vector y{1.0, 2.0, -3.0};
  axpy(2.0, Vector{1.0, 1.0, 1.0}, y);
  EXPECT_EQ(y, (Vector{3.0, 4.0, -1.0}));
  EXPECT_EQ(norm_inf(y), 4.0);
  std::ostringstream out;
  write_vector(out, Vector{0.1, 2.0});
  EXPECT_EQ(out.str(), "0.10000000000000001\n2\n");
}

}  // namespace
}  // namespace stmg
