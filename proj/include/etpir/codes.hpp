#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "etpir/matrix.hpp"

namespace etpir {

/// (N, E) MDS code for the shared noise: each query row's E noise symbols
/// are spread over the N servers by `generator`, and `parity` projects a row
/// of N answers onto the noise-free subspace.
struct NoiseCode {
  Matrix generator;  // N x E
  Matrix parity;     // (N-E) x N, systematic [-P | I]
  Matrix p;          // (N-E) x E

  /// Derives the systematic parity check from an explicit generator whose
  /// top E x E block is invertible.
  static NoiseCode from_generator(Matrix generator);

  std::size_t servers() const { return generator.rows(); }
  std::size_t eavesdropped() const { return generator.cols(); }
};

/// Generator with rows (1, n, n^2, ..., n^{E-1}) for servers n = 1..N.
/// Requires q > N. E = 0 yields an empty generator and H = I.
NoiseCode build_noise_code(std::size_t servers, std::size_t eavesdropped, const PrimeField& field);

/// N x (N-E) desired-symbol precoder whose row n is (n^E, ..., n^{N-1}).
/// Concatenated with the noise generator it forms the full N x N Vandermonde
/// on the points 1..N, so parity * result is invertible and any N-E of its
/// rows are independent.
Matrix build_desired_generator(std::size_t servers, std::size_t eavesdropped, const PrimeField& field);

/// Generalized Reed-Solomon code G = V^E(points) * diag(multipliers),
/// optionally with one extra column evaluated at infinity (the unit vector
/// e_E scaled by its multiplier), which lets N = q + 1.
struct GrsCode {
  std::vector<std::uint64_t> points;       // finite evaluation points, distinct
  std::vector<std::uint64_t> multipliers;  // nonzero, one per column
  bool point_at_infinity = false;          // last column evaluated at infinity
  Matrix generator;                        // E x N

  std::size_t servers() const { return generator.cols(); }
  std::size_t rows() const { return generator.rows(); }
};

/// Defaults: points 1..N, multipliers all one. Verifies every E x E column
/// submatrix is invertible.
GrsCode build_grs(std::size_t servers, std::size_t eavesdropped, const PrimeField& field,
                  std::optional<std::vector<std::uint64_t>> points = std::nullopt,
                  std::optional<std::vector<std::uint64_t>> multipliers = std::nullopt);

/// Doubly-extended variant: finite points 0..N-2 plus infinity, multipliers
/// one. Works whenever q >= N - 1, e.g. N = 3 over GF(2).
GrsCode build_grs_extended(std::size_t servers, std::size_t eavesdropped, const PrimeField& field);

/// N x N matrix [G ; 0 I] mapping (X_1..X_E, W_k) to the N answers.
Matrix grs_answer_matrix(const GrsCode& code);

}  // namespace etpir
