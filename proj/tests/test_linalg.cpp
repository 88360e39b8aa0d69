#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <map>
#include <sstream>

#include "etpir/matrix.hpp"

using namespace etpir;

namespace {

// Leibniz-expansion determinant over Z then reduced; independent of elimination.
std::int64_t leibniz(const std::vector<std::vector<std::int64_t>>& a) {
  const std::size_t n = a.size();
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  std::int64_t total = 0;
  do {
    std::int64_t term = 1;
    for (std::size_t i = 0; i < n; ++i) term *= a[i][perm[i]];
    std::size_t inversions = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) inversions += perm[i] > perm[j];
    total += inversions % 2 ? -term : term;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return total;
}

std::vector<std::vector<std::int64_t>> to_int(const Matrix& m) {
  std::vector<std::vector<std::int64_t>> out(m.rows(), std::vector<std::int64_t>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out[i][j] = static_cast<std::int64_t>(m(i, j));
  return out;
}

}  // namespace

TEST_CASE("matmul") {
  const PrimeField f7(7);
  Rng rng(3);
  const Matrix m = random_matrix(f7, 3, 3, rng);
  CHECK(Matrix::identity(f7, 3) * m == m);

  const PrimeField f3(3);
  CHECK(Matrix::from_rows(f3, {{1, 2}, {0, 1}}) * Matrix::from_rows(f3, {{1, 0}, {1, 1}}) ==
        Matrix::from_rows(f3, {{0, 2}, {1, 1}}));

  for (int i = 0; i < 20; ++i) {
    const Matrix a = random_matrix(f7, 4, 4, rng), b = random_matrix(f7, 4, 4, rng), c = random_matrix(f7, 4, 4, rng);
    CHECK(a * (b * c) == (a * b) * c);
  }
  CHECK_THROWS_AS(Matrix(f7, 2, 3) * Matrix(f7, 2, 3), ShapeError);
  CHECK_THROWS_AS(Matrix(f7, 2, 2) * Matrix(f3, 2, 2), FieldMismatch);
}

TEST_CASE("rank") {
  const PrimeField f7(7);
  CHECK(rank(Matrix(f7, 3, 5)) == 0);
  CHECK(rank(Matrix::identity(f7, 4)) == 4);
  const std::vector<std::uint64_t> pts{1, 2, 3};
  CHECK(rank(vandermonde(3, pts, f7)) == 3);
  Rng rng(4);
  for (int i = 0; i < 30; ++i) {
    const Matrix a = random_matrix(f7, 3, 5, rng);
    CHECK(rank(a) == rank(a.transpose()));
  }
  // Rank over GF(2) differs from the rational rank.
  CHECK(rank(Matrix::from_rows(PrimeField(2), {{1, 1}, {1, -1}})) == 1);
}

TEST_CASE("det") {
  const PrimeField f7(7);
  CHECK(det(Matrix::identity(f7, 5)).value() == 1);
  CHECK(det(Matrix::from_rows(f7, {{1, 2, 3}, {4, 5, 6}, {1, 2, 3}})).value() == 0);
  const std::vector<std::uint64_t> pts{1, 2, 3};
  CHECK(det(vandermonde(3, pts, f7)).value() == 2);
  CHECK_THROWS_AS(det(Matrix(f7, 2, 3)), ShapeError);

  Rng rng(8);
  const PrimeField f101(101);
  for (std::size_t n = 1; n <= 5; ++n) {
    for (int t = 0; t < 20; ++t) {
      const Matrix a = random_matrix(f101, n, n, rng);
      CHECK(det(a).value() == f101.reduce(leibniz(to_int(a))));
    }
  }
}

TEST_CASE("invert") {
  const PrimeField f7(7);
  CHECK(invert(Matrix::identity(f7, 4)) == Matrix::identity(f7, 4));
  Rng rng(9);
  for (int i = 0; i < 20; ++i) {
    const Matrix m = random_full_rank(4, f7, rng);
    CHECK(m * invert(m) == Matrix::identity(f7, 4));
    CHECK(invert(invert(m)) == m);
  }
  const PrimeField f3(3);
  CHECK(invert(Matrix::from_rows(f3, {{1, 1}, {0, 1}})) == Matrix::from_rows(f3, {{1, 2}, {0, 1}}));
  CHECK_THROWS_AS(invert(Matrix::from_rows(f7, {{1, 2}, {2, 4}})), SingularMatrix);
  CHECK_THROWS_AS(invert(Matrix(f7, 2, 3)), ShapeError);
}

TEST_CASE("solve") {
  const PrimeField f101(101);
  Rng rng(10);
  for (int i = 0; i < 10; ++i) {
    const Matrix a = random_full_rank(5, f101, rng);
    std::vector<std::uint64_t> x(5);
    for (auto& v : x) v = rng.uniform(f101);
    const auto b = mat_vec(a, x);
    CHECK(solve(a, b) == x);
  }
}

TEST_CASE("kron") {
  const PrimeField f7(7);
  Rng rng(12);
  const Matrix a = random_matrix(f7, 2, 3, rng);
  CHECK(kron(a, Matrix::identity(f7, 1)) == a);
  CHECK(kron(Matrix::identity(f7, 2), Matrix::identity(f7, 3)) == Matrix::identity(f7, 6));
  for (int i = 0; i < 20; ++i) {
    const Matrix x = random_matrix(f7, 3, 3, rng), y = random_matrix(f7, 3, 3, rng);
    CHECK(rank(kron(x, y)) == rank(x) * rank(y));
  }
  for (int i = 0; i < 10; ++i) {
    const Matrix p = random_matrix(f7, 2, 3, rng), q = random_matrix(f7, 3, 2, rng);
    const Matrix r = random_matrix(f7, 2, 2, rng), s = random_matrix(f7, 2, 4, rng);
    CHECK(kron(p, r) * kron(q, s) == kron(p * q, r * s));
  }
  // Entry layout: block (i, j) is a(i, j) * b.
  const Matrix b = Matrix::from_rows(f7, {{1, 2}, {3, 4}});
  const Matrix k = kron(Matrix::from_rows(f7, {{0, 1}, {2, 0}}), b);
  CHECK(k == Matrix::from_rows(f7, {{0, 0, 1, 2}, {0, 0, 3, 4}, {2, 4, 0, 0}, {6, 1, 0, 0}}));
}

TEST_CASE("vandermonde") {
  const PrimeField f7(7);
  const std::vector<std::uint64_t> pts{3, 5, 6};
  const Matrix v1 = vandermonde(1, pts, f7);
  CHECK(v1 == Matrix::from_rows(f7, {{1, 1, 1}}));
  // V^4 on three points: four rows of powers 0..3, one column per point.
  const Matrix v4 = vandermonde(4, pts, f7);
  CHECK(v4.rows() == 4);
  CHECK(v4.cols() == 3);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(v4(i, j) == f7.pow(pts[j], i));
  const std::vector<std::uint64_t> dup{1, 2, 1};
  CHECK_THROWS_AS(vandermonde(2, dup, f7), Error);
}

TEST_CASE("nullspace_systematic") {
  const PrimeField f(101);
  const Matrix c44 = Matrix::from_rows(f, {{1, 0}, {0, 1}, {1, 1}, {1, 2}, {2, 3}});
  const Matrix h44 = nullspace_systematic(c44);
  CHECK(h44 == Matrix::from_rows(f, {{-1, -1, 1, 0, 0}, {-1, -2, 0, 1, 0}, {-2, -3, 0, 0, 1}}));
  CHECK(h44 * c44 == Matrix(f, 3, 2));

  const Matrix c45 = Matrix::from_rows(f, {{1, 0}, {0, 1}, {1, 1}, {1, 2}});
  const Matrix h45 = nullspace_systematic(c45);
  CHECK(h45 == Matrix::from_rows(f, {{-1, -1, 1, 0}, {-1, -2, 0, 1}}));
  CHECK(h45 * c45 == Matrix(f, 2, 2));

  CHECK(nullspace_systematic(Matrix(f, 4, 0)) == Matrix::identity(f, 4));

  Rng rng(13);
  for (int i = 0; i < 20; ++i) {
    const Matrix c = vstack(random_full_rank(3, f, rng), random_matrix(f, 3, 3, rng));
    const Matrix h = nullspace_systematic(c);
    CHECK(h * c == Matrix(f, 3, 3));
    CHECK(rank(c) + rank(h) == 6);
  }
  CHECK_THROWS_AS(nullspace_systematic(Matrix::from_rows(f, {{0}, {1}, {1}})), SingularMatrix);
}

TEST_CASE("is_mds") {
  const PrimeField f(101);
  // GRS generator transposed: N x E with rows lambda^j * phi.
  const std::vector<std::uint64_t> lambdas{1, 2, 3, 4, 5, 6}, phis{3, 1, 4, 1, 5, 9};
  Matrix grs = vandermonde(3, lambdas, f) * Matrix::diagonal(f, phis);
  CHECK(is_mds(grs.transpose()));

  Matrix with_zero = grs.transpose();
  for (std::size_t j = 0; j < 3; ++j) with_zero(2, j) = 0;
  CHECK_FALSE(is_mds(with_zero));

  CHECK_THROWS_AS(is_mds(Matrix(f, 2, 3)), ShapeError);

  // Cross-check against a rank-based oracle on random small matrices over GF(5).
  const PrimeField f5(5);
  Rng rng(14);
  for (int t = 0; t < 50; ++t) {
    const Matrix g = random_matrix(f5, 5, 2, rng);
    bool oracle = true;
    for (std::size_t a = 0; a < 5; ++a)
      for (std::size_t b = a + 1; b < 5; ++b) {
        const std::size_t rows[] = {a, b};
        if (rank(g.select_rows(rows)) != 2) oracle = false;
      }
    CHECK(is_mds(g) == oracle);
  }
}

TEST_CASE("certify_mds sampling") {
  const PrimeField f(101);
  Rng rng(15);
  const std::vector<std::uint64_t> lambdas{1, 2, 3, 4, 5, 6, 7};
  const Matrix g = vandermonde(3, lambdas, f).transpose();
  const MdsCertificate full = certify_mds(g, 1000, rng);
  CHECK(full.ok);
  CHECK(full.exhaustive);
  CHECK(full.subsets_checked == 35);
  const MdsCertificate partial = certify_mds(g, 10, rng);
  CHECK(partial.ok);
  CHECK_FALSE(partial.exhaustive);
  CHECK(partial.subsets_checked == 10);
  CHECK(partial.subsets_total == 35);

  Matrix bad = g;
  for (std::size_t j = 0; j < 3; ++j) bad(4, j) = bad(1, j);
  const MdsCertificate fail = certify_mds(bad, 1000, rng);
  CHECK_FALSE(fail.ok);
  CHECK(fail.witness.size() == 3);
}

TEST_CASE("random_full_rank") {
  const PrimeField f2(2);
  Rng rng(16);
  for (int i = 0; i < 20; ++i) CHECK(random_full_rank(1, f2, rng) == Matrix::identity(f2, 1));
  for (int i = 0; i < 50; ++i) CHECK(det(random_full_rank(3, PrimeField(3), rng)).value() != 0);

  std::map<std::vector<std::uint64_t>, int> counts;
  for (int i = 0; i < 10000; ++i) ++counts[random_full_rank(2, f2, rng).data()];
  CHECK(counts.size() == 6);
  for (auto& [m, c] : counts) {
    CHECK(c / 10000.0 >= 0.14);
    CHECK(c / 10000.0 <= 0.19);
  }
}

TEST_CASE("for_each_subset order and count") {
  std::vector<std::vector<std::size_t>> seen;
  for_each_subset(4, 2, [&](std::span<const std::size_t> s) {
    seen.emplace_back(s.begin(), s.end());
    return true;
  });
  CHECK(seen == std::vector<std::vector<std::size_t>>{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}});
  std::size_t n = 0;
  for_each_subset(7, 3, [&](std::span<const std::size_t>) { return ++n < 5; });
  CHECK(n == 5);
  CHECK(binomial(9, 3) == 84);
  CHECK(binomial(3, 5) == 0);
}

TEST_CASE("text fixture format") {
  const PrimeField f(11);
  const Matrix m = Matrix::from_rows(f, {{1, 2, 3}, {4, 5, 10}});
  const std::string text = to_text(m);
  CHECK(text.rfind("2 3 11", 0) == 0);
  CHECK(from_text(text) == m);
  CHECK(from_text("2 2 5\n1 -1\n7 0") == Matrix::from_rows(PrimeField(5), {{1, 4}, {2, 0}}));
  CHECK_THROWS_AS(from_text("2 2 5\n1 2 3"), Error);
  CHECK(fingerprint(m) == fingerprint(from_text(text)));
  CHECK(fingerprint(m).size() == 16);
  CHECK(fingerprint(m) != fingerprint(m.transpose()));
}
