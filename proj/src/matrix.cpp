#include "etpir/matrix.hpp"

#include <algorithm>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace etpir {

namespace {

void require_same_field(const Matrix& a, const Matrix& b, const char* op) {
  if (!(a.field() == b.field())) {
    throw FieldMismatch(std::string(op) + ": matrices over GF(" + std::to_string(a.field().modulus()) +
                        ") and GF(" + std::to_string(b.field().modulus()) + ")");
  }
}

std::string shape(const Matrix& m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

// Forward elimination in place. Returns the rank; `det` receives the product
// of pivots with the sign of the row permutation (meaningful for square input).
std::size_t eliminate(Matrix& a, std::uint64_t* det_out) {
  const PrimeField& f = a.field();
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  std::size_t r = 0;
  std::uint64_t det = 1;
  bool negate = false;
  for (std::size_t c = 0; c < n && r < m; ++c) {
    std::size_t piv = r;
    while (piv < m && a(piv, c) == 0) ++piv;
    if (piv == m) continue;
    if (piv != r) {
      auto pr = a.row(piv);
      auto rr = a.row(r);
      std::swap_ranges(pr.begin() + c, pr.end(), rr.begin() + c);
      negate = !negate;
    }
    const std::uint64_t p = a(r, c);
    det = f.mul(det, p);
    const std::uint64_t pinv = f.inv(p);
    auto prow = a.row(r);
    for (std::size_t i = r + 1; i < m; ++i) {
      const std::uint64_t lead = a(i, c);
      if (lead == 0) continue;
      const std::uint64_t factor = f.mul(lead, pinv);
      auto row = a.row(i);
      for (std::size_t j = c; j < n; ++j) {
        if (prow[j] != 0) row[j] = f.sub(row[j], f.mul(factor, prow[j]));
      }
    }
    ++r;
  }
  if (det_out) {
    const std::uint64_t d = (m == n && r == n) ? det : 0;
    *det_out = negate ? f.neg(d) : d;
  }
  return r;
}

}  // namespace

Matrix::Matrix(PrimeField field, std::size_t rows, std::size_t cols)
    : field_(field), rows_(rows), cols_(cols), data_(rows * cols, 0) {}

Matrix::Matrix(PrimeField field, std::size_t rows, std::size_t cols, std::vector<std::uint64_t> entries)
    : field_(field), rows_(rows), cols_(cols), data_(std::move(entries)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("matrix " + std::to_string(rows) + "x" + std::to_string(cols) + " given " +
                     std::to_string(data_.size()) + " entries");
  }
  for (std::uint64_t v : data_) {
    if (v >= field.modulus()) throw Error("matrix entry " + std::to_string(v) + " not reduced mod q");
  }
}

Matrix Matrix::identity(PrimeField field, std::size_t n) {
  Matrix m(field, n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1 % field.modulus();
  return m;
}

Matrix Matrix::from_rows(PrimeField field, std::initializer_list<std::initializer_list<std::int64_t>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  Matrix m(field, r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("ragged row list");
    std::size_t j = 0;
    for (std::int64_t v : row) m(i, j++) = field.reduce(v);
    ++i;
  }
  return m;
}

Matrix Matrix::diagonal(PrimeField field, std::span<const std::uint64_t> diag) {
  Matrix m(field, diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = field.reduce_unsigned(diag[i]);
  return m;
}

Matrix Matrix::row_vector(PrimeField field, std::vector<std::uint64_t> values) {
  const std::size_t n = values.size();
  return Matrix(field, 1, n, std::move(values));
}

Matrix Matrix::column_vector(PrimeField field, std::vector<std::uint64_t> values) {
  const std::size_t n = values.size();
  return Matrix(field, n, 1, std::move(values));
}

FieldElement Matrix::at(std::size_t i, std::size_t j) const {
  if (i >= rows_ || j >= cols_) throw ShapeError("index out of range for " + shape(*this));
  return FieldElement(field_, data_[i * cols_ + j]);
}

void Matrix::set(std::size_t i, std::size_t j, const FieldElement& v) {
  if (!(v.field() == field_)) throw FieldMismatch("element field differs from matrix field");
  if (i >= rows_ || j >= cols_) throw ShapeError("index out of range for " + shape(*this));
  data_[i * cols_ + j] = v.value();
}

Matrix Matrix::transpose() const {
  Matrix t(field_, cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
  Matrix s(field_, indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= rows_) throw ShapeError("row index out of range for " + shape(*this));
    auto src = row(indices[i]);
    std::copy(src.begin(), src.end(), s.row(i).begin());
  }
  return s;
}

Matrix Matrix::select_cols(std::span<const std::size_t> indices) const {
  Matrix s(field_, rows_, indices.size());
  for (std::size_t j = 0; j < indices.size(); ++j) {
    if (indices[j] >= cols_) throw ShapeError("column index out of range for " + shape(*this));
    for (std::size_t i = 0; i < rows_; ++i) s(i, j) = (*this)(i, indices[j]);
  }
  return s;
}

Matrix Matrix::block(std::size_t row0, std::size_t col0, std::size_t nrows, std::size_t ncols) const {
  if (row0 + nrows > rows_ || col0 + ncols > cols_) throw ShapeError("block outside " + shape(*this));
  Matrix b(field_, nrows, ncols);
  for (std::size_t i = 0; i < nrows; ++i)
    for (std::size_t j = 0; j < ncols; ++j) b(i, j) = (*this)(row0 + i, col0 + j);
  return b;
}

void Matrix::paste(std::size_t row0, std::size_t col0, const Matrix& src) {
  require_same_field(*this, src, "paste");
  if (row0 + src.rows() > rows_ || col0 + src.cols() > cols_) throw ShapeError("paste outside " + shape(*this));
  for (std::size_t i = 0; i < src.rows(); ++i)
    for (std::size_t j = 0; j < src.cols(); ++j) (*this)(row0 + i, col0 + j) = src(i, j);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  require_same_field(a, b, "matmul");
  if (a.cols() != b.rows()) throw ShapeError("matmul " + shape(a) + " by " + shape(b));
  const PrimeField& f = a.field();
  Matrix c(f, a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto crow = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const std::uint64_t aik = a(i, k);
      if (aik == 0) continue;
      auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) {
        if (brow[j] != 0) crow[j] = f.add(crow[j], f.mul(aik, brow[j]));
      }
    }
  }
  return c;
}

Matrix operator*(const Matrix& a, const Matrix& b) { return matmul(a, b); }

Matrix operator+(const Matrix& a, const Matrix& b) {
  require_same_field(a, b, "add");
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("add " + shape(a) + " and " + shape(b));
  Matrix c = a;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) = a.field().add(a(i, j), b(i, j));
  return c;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  require_same_field(a, b, "sub");
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("sub " + shape(a) + " and " + shape(b));
  Matrix c = a;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) = a.field().sub(a(i, j), b(i, j));
  return c;
}

Matrix scale(const Matrix& a, std::uint64_t s) {
  Matrix c = a;
  s = a.field().reduce_unsigned(s);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) = a.field().mul(a(i, j), s);
  return c;
}

std::uint64_t dot(const PrimeField& f, std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
  if (a.size() != b.size()) throw ShapeError("dot product of lengths " + std::to_string(a.size()) + " and " +
                                             std::to_string(b.size()));
  std::uint64_t s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s = f.add(s, f.mul(a[i], b[i]));
  return s;
}

std::vector<std::uint64_t> mat_vec(const Matrix& a, std::span<const std::uint64_t> x) {
  if (a.cols() != x.size()) throw ShapeError("mat_vec " + shape(a) + " by length " + std::to_string(x.size()));
  std::vector<std::uint64_t> y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) y[i] = dot(a.field(), a.row(i), x);
  return y;
}

std::vector<std::uint64_t> vec_mat(std::span<const std::uint64_t> x, const Matrix& a) {
  if (a.rows() != x.size()) throw ShapeError("vec_mat length " + std::to_string(x.size()) + " by " + shape(a));
  const PrimeField& f = a.field();
  std::vector<std::uint64_t> y(a.cols(), 0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    if (x[i] == 0) continue;
    auto r = a.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) y[j] = f.add(y[j], f.mul(x[i], r[j]));
  }
  return y;
}

Matrix hstack(const Matrix& a, const Matrix& b) {
  require_same_field(a, b, "hstack");
  if (a.rows() != b.rows()) throw ShapeError("hstack " + shape(a) + " and " + shape(b));
  Matrix c(a.field(), a.rows(), a.cols() + b.cols());
  c.paste(0, 0, a);
  c.paste(0, a.cols(), b);
  return c;
}

Matrix vstack(const Matrix& a, const Matrix& b) {
  require_same_field(a, b, "vstack");
  if (a.cols() != b.cols()) throw ShapeError("vstack " + shape(a) + " and " + shape(b));
  Matrix c(a.field(), a.rows() + b.rows(), a.cols());
  c.paste(0, 0, a);
  c.paste(a.rows(), 0, b);
  return c;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  require_same_field(a, b, "kron");
  const PrimeField& f = a.field();
  Matrix c(f, a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const std::uint64_t s = a(i, j);
      if (s == 0) continue;
      for (std::size_t k = 0; k < b.rows(); ++k)
        for (std::size_t l = 0; l < b.cols(); ++l) c(i * b.rows() + k, j * b.cols() + l) = f.mul(s, b(k, l));
    }
  return c;
}

std::size_t rank(const Matrix& a) {
  Matrix work = a;
  return eliminate(work, nullptr);
}

FieldElement det(const Matrix& a) {
  if (a.rows() != a.cols()) throw ShapeError("det of non-square " + shape(a));
  if (a.rows() == 0) return FieldElement::one(a.field());
  Matrix work = a;
  std::uint64_t d = 0;
  eliminate(work, &d);
  return FieldElement(a.field(), d);
}

Matrix invert(const Matrix& a) {
  if (a.rows() != a.cols()) throw ShapeError("invert of non-square " + shape(a));
  const PrimeField& f = a.field();
  const std::size_t n = a.rows();
  Matrix aug = hstack(a, Matrix::identity(f, n));
  const std::size_t w = 2 * n;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    while (piv < n && aug(piv, c) == 0) ++piv;
    if (piv == n) throw SingularMatrix("matrix " + shape(a) + " is singular");
    if (piv != c) std::swap_ranges(aug.row(piv).begin(), aug.row(piv).end(), aug.row(c).begin());
    const std::uint64_t pinv = f.inv(aug(c, c));
    auto prow = aug.row(c);
    for (std::size_t j = c; j < w; ++j) prow[j] = f.mul(prow[j], pinv);
    for (std::size_t i = 0; i < n; ++i) {
      if (i == c) continue;
      const std::uint64_t factor = aug(i, c);
      if (factor == 0) continue;
      auto row = aug.row(i);
      for (std::size_t j = c; j < w; ++j) {
        if (prow[j] != 0) row[j] = f.sub(row[j], f.mul(factor, prow[j]));
      }
    }
  }
  return aug.block(0, n, n, n);
}

std::vector<std::uint64_t> solve(const Matrix& a, std::span<const std::uint64_t> b) {
  if (a.rows() != a.cols()) throw ShapeError("solve with non-square " + shape(a));
  if (b.size() != a.rows()) throw ShapeError("solve right-hand side length mismatch");
  const PrimeField& f = a.field();
  const std::size_t n = a.rows();
  Matrix aug = hstack(a, Matrix::column_vector(f, std::vector<std::uint64_t>(b.begin(), b.end())));
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    while (piv < n && aug(piv, c) == 0) ++piv;
    if (piv == n) throw SingularMatrix("matrix " + shape(a) + " is singular");
    if (piv != c) std::swap_ranges(aug.row(piv).begin(), aug.row(piv).end(), aug.row(c).begin());
    const std::uint64_t pinv = f.inv(aug(c, c));
    auto prow = aug.row(c);
    for (std::size_t j = c; j <= n; ++j) prow[j] = f.mul(prow[j], pinv);
    for (std::size_t i = 0; i < n; ++i) {
      if (i == c) continue;
      const std::uint64_t factor = aug(i, c);
      if (factor == 0) continue;
      auto row = aug.row(i);
      for (std::size_t j = c; j <= n; ++j) {
        if (prow[j] != 0) row[j] = f.sub(row[j], f.mul(factor, prow[j]));
      }
    }
  }
  std::vector<std::uint64_t> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = aug(i, n);
  return x;
}

Matrix vandermonde(std::size_t m, std::span<const std::uint64_t> points, const PrimeField& field) {
  std::vector<std::uint64_t> reduced;
  reduced.reserve(points.size());
  for (std::uint64_t p : points) reduced.push_back(field.reduce_unsigned(p));
  for (std::size_t i = 0; i < reduced.size(); ++i)
    for (std::size_t j = i + 1; j < reduced.size(); ++j)
      if (reduced[i] == reduced[j]) throw Error("vandermonde: duplicate evaluation point " + std::to_string(reduced[i]));
  Matrix v(field, m, reduced.size());
  for (std::size_t j = 0; j < reduced.size(); ++j) {
    std::uint64_t p = 1 % field.modulus();
    for (std::size_t i = 0; i < m; ++i) {
      v(i, j) = p;
      p = field.mul(p, reduced[j]);
    }
  }
  return v;
}

Matrix nullspace_systematic(const Matrix& generator) {
  const PrimeField& f = generator.field();
  const std::size_t n = generator.rows();
  const std::size_t e = generator.cols();
  if (e > n) throw ShapeError("nullspace_systematic: generator " + shape(generator) + " is wider than tall");
  if (e == 0) return Matrix::identity(f, n);
  const Matrix top = generator.block(0, 0, e, e);
  Matrix top_inv(f, 0, 0);
  try {
    top_inv = invert(top);
  } catch (const SingularMatrix&) {
    throw SingularMatrix("nullspace_systematic: top " + std::to_string(e) + "x" + std::to_string(e) +
                         " block of the generator is singular");
  }
  // H C = -P C_top + C_bottom = 0  =>  P = C_bottom C_top^{-1}.
  const Matrix p = generator.block(e, 0, n - e, e) * top_inv;
  Matrix h(f, n - e, n);
  for (std::size_t i = 0; i < n - e; ++i) {
    for (std::size_t j = 0; j < e; ++j) h(i, j) = f.neg(p(i, j));
    h(i, e + i) = 1;
  }
  return h;
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;
    if (r > std::numeric_limits<std::uint64_t>::max()) return std::numeric_limits<std::uint64_t>::max();
  }
  return static_cast<std::uint64_t>(r);
}

bool is_mds(const Matrix& g) {
  if (g.rows() < g.cols()) throw ShapeError("is_mds: " + shape(g) + " has fewer rows than columns");
  bool ok = true;
  for_each_subset(g.rows(), g.cols(), [&](std::span<const std::size_t> s) {
    ok = det(g.select_rows(s)).value() != 0;
    return ok;
  });
  return ok;
}

MdsCertificate certify_mds(const Matrix& g, std::uint64_t budget, Rng& rng) {
  if (g.rows() < g.cols()) throw ShapeError("certify_mds: " + shape(g) + " has fewer rows than columns");
  MdsCertificate cert;
  cert.subsets_total = binomial(g.rows(), g.cols());
  if (cert.subsets_total <= budget) {
    for_each_subset(g.rows(), g.cols(), [&](std::span<const std::size_t> s) {
      ++cert.subsets_checked;
      if (det(g.select_rows(s)).value() == 0) {
        cert.ok = false;
        cert.witness.assign(s.begin(), s.end());
        return false;
      }
      return true;
    });
    return cert;
  }
  cert.exhaustive = false;
  std::vector<std::size_t> all(g.rows());
  std::iota(all.begin(), all.end(), 0);
  for (std::uint64_t t = 0; t < budget; ++t) {
    // Partial Fisher-Yates draws a uniform k-subset.
    for (std::size_t i = 0; i < g.cols(); ++i) {
      std::size_t j = i + rng.below(g.rows() - i);
      std::swap(all[i], all[j]);
    }
    std::vector<std::size_t> s(all.begin(), all.begin() + g.cols());
    std::sort(s.begin(), s.end());
    ++cert.subsets_checked;
    if (det(g.select_rows(s)).value() == 0) {
      cert.ok = false;
      cert.witness = std::move(s);
      break;
    }
  }
  return cert;
}

Matrix random_matrix(const PrimeField& field, std::size_t rows, std::size_t cols, Rng& rng) {
  std::vector<std::uint64_t> v(rows * cols);
  for (auto& x : v) x = rng.uniform(field);
  return Matrix(field, rows, cols, std::move(v));
}

Matrix random_full_rank(std::size_t n, const PrimeField& field, Rng& rng) {
  for (;;) {
    Matrix m = random_matrix(field, n, n, rng);
    if (rank(m) == n) return m;
  }
}

void write_text(std::ostream& os, const Matrix& m) {
  os << m.rows() << ' ' << m.cols() << ' ' << m.field().modulus() << '\n';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) os << (j ? " " : "") << m(i, j);
    os << '\n';
  }
}

Matrix read_text(std::istream& is) {
  std::size_t rows = 0, cols = 0;
  std::uint64_t q = 0;
  if (!(is >> rows >> cols >> q)) throw Error("matrix text: bad header");
  PrimeField f(q);
  std::vector<std::uint64_t> v(rows * cols);
  for (auto& x : v) {
    std::int64_t raw = 0;
    if (!(is >> raw)) throw Error("matrix text: expected " + std::to_string(rows * cols) + " entries");
    x = f.reduce(raw);
  }
  return Matrix(f, rows, cols, std::move(v));
}

std::string to_text(const Matrix& m) {
  std::ostringstream os;
  write_text(os, m);
  return os.str();
}

Matrix from_text(const std::string& text) {
  std::istringstream is(text);
  return read_text(is);
}

std::string fingerprint(const Matrix& m) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  feed(m.field().modulus());
  feed(m.rows());
  feed(m.cols());
  for (std::uint64_t v : m.data()) feed(v);
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace etpir
