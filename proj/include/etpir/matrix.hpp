#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "etpir/field.hpp"

namespace etpir {

class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Raised by invert/solve when the input is square but not invertible.
class SingularMatrix : public Error {
 public:
  using Error::Error;
};

/// Dense row-major matrix over GF(q). Entries are stored as raw residues; the
/// field is carried once per matrix.
class Matrix {
 public:
  /// Empty 0 x 0 placeholder over GF(2).
  Matrix() : Matrix(PrimeField(2), 0, 0) {}
  Matrix(PrimeField field, std::size_t rows, std::size_t cols);
  Matrix(PrimeField field, std::size_t rows, std::size_t cols, std::vector<std::uint64_t> entries);

  static Matrix identity(PrimeField field, std::size_t n);
  /// Builds from signed integer rows, reducing each entry mod q.
  static Matrix from_rows(PrimeField field, std::initializer_list<std::initializer_list<std::int64_t>> rows);
  static Matrix diagonal(PrimeField field, std::span<const std::uint64_t> diag);
  static Matrix row_vector(PrimeField field, std::vector<std::uint64_t> values);
  static Matrix column_vector(PrimeField field, std::vector<std::uint64_t> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  const PrimeField& field() const noexcept { return field_; }
  bool empty() const noexcept { return rows_ == 0 || cols_ == 0; }

  std::uint64_t operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  std::uint64_t& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  FieldElement at(std::size_t i, std::size_t j) const;
  void set(std::size_t i, std::size_t j, const FieldElement& v);

  std::span<const std::uint64_t> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<std::uint64_t> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  const std::vector<std::uint64_t>& data() const noexcept { return data_; }

  Matrix transpose() const;
  Matrix select_rows(std::span<const std::size_t> indices) const;
  Matrix select_cols(std::span<const std::size_t> indices) const;
  Matrix block(std::size_t row0, std::size_t col0, std::size_t nrows, std::size_t ncols) const;
  /// Copies `src` into this matrix with its top-left corner at (row0, col0).
  void paste(std::size_t row0, std::size_t col0, const Matrix& src);

  friend bool operator==(const Matrix& a, const Matrix& b) noexcept {
    return a.field_ == b.field_ && a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  PrimeField field_;
  std::size_t rows_;
  std::size_t cols_;
  std::vector<std::uint64_t> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, std::uint64_t s);
/// y = A x for a raw residue vector x.
std::vector<std::uint64_t> mat_vec(const Matrix& a, std::span<const std::uint64_t> x);
/// y = x^T A.
std::vector<std::uint64_t> vec_mat(std::span<const std::uint64_t> x, const Matrix& a);
std::uint64_t dot(const PrimeField& f, std::span<const std::uint64_t> a, std::span<const std::uint64_t> b);

Matrix hstack(const Matrix& a, const Matrix& b);
Matrix vstack(const Matrix& a, const Matrix& b);
Matrix kron(const Matrix& a, const Matrix& b);

std::size_t rank(const Matrix& a);
FieldElement det(const Matrix& a);
Matrix invert(const Matrix& a);
/// Solves A x = b for square invertible A.
std::vector<std::uint64_t> solve(const Matrix& a, std::span<const std::uint64_t> b);

/// m x n Vandermonde: row i holds the points raised to the power i.
Matrix vandermonde(std::size_t m, std::span<const std::uint64_t> points, const PrimeField& field);

/// Systematic parity check [-P | I] of an N x E generator whose top E x E
/// block is invertible: H C = 0, H is (N-E) x N.
Matrix nullspace_systematic(const Matrix& generator);

/// True iff every k x k row-submatrix of the m x k input is invertible.
/// Enumerates all C(m, k) subsets, so the cost is exponential in k.
bool is_mds(const Matrix& g);

/// Binomial coefficient saturating at UINT64_MAX.
std::uint64_t binomial(std::uint64_t n, std::uint64_t k);

struct MdsCertificate {
  bool ok = true;
  /// True when all C(m, k) row subsets were checked.
  bool exhaustive = true;
  std::uint64_t subsets_checked = 0;
  std::uint64_t subsets_total = 0;
  /// First failing row subset, if any.
  std::vector<std::size_t> witness;
};

/// Exhaustive MDS check when C(m, k) <= budget; above the budget, checks
/// `budget` uniformly drawn row subsets instead and reports exhaustive=false.
MdsCertificate certify_mds(const Matrix& g, std::uint64_t budget, Rng& rng);

Matrix random_matrix(const PrimeField& field, std::size_t rows, std::size_t cols, Rng& rng);
/// Uniform element of GL_n(GF(q)) by rejection.
Matrix random_full_rank(std::size_t n, const PrimeField& field, Rng& rng);

/// Calls fn(subset) for every k-subset of [0, n) in lexicographic order.
/// Iteration stops early when fn returns false.
template <typename Fn>
void for_each_subset(std::size_t n, std::size_t k, Fn&& fn) {
  if (k > n) return;
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  for (;;) {
    if (!fn(std::span<const std::size_t>(idx))) return;
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

// Fixture text format: "rows cols q" then row-major integers.
std::string to_text(const Matrix& m);
Matrix from_text(const std::string& text);
void write_text(std::ostream& os, const Matrix& m);
Matrix read_text(std::istream& is);

/// 64-bit FNV-1a digest of (q, shape, entries) as 16 hex digits.
std::string fingerprint(const Matrix& m);

}  // namespace etpir
