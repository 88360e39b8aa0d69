#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "etpir/codes.hpp"
#include "etpir/plan.hpp"

namespace etpir {

/// GRS code used when E >= T: the default points 1..N when q > N, otherwise
/// the doubly-extended code (needs N <= q + 1).
GrsCode default_high_code(const SchemeParams& params);

struct HighSessionOptions {
  std::optional<GrsCode> grs;
  /// E x K(N-E) matrix whose row j is the mask U_{j+1}; sampled when absent.
  std::optional<Matrix> masks;
};

struct HighSession {
  SchemeParams params;
  DerivedCounts counts;
  std::size_t desired = 1;
  GrsCode grs;
  Matrix masks;    // E x K(N-E)
  Matrix queries;  // N x K(N-E), row n-1 is Q_n
  Matrix answer_inverse;  // inverse of [G ; 0 I]
};

/// Q_n = sum_j U_j G[j, n], plus the unit vector e^{[k]}_{n-E} for n > E.
Matrix high_query_vectors(const SchemeParams& params, const GrsCode& grs, std::size_t desired, const Matrix& masks);

HighSession open_high_session(const SchemeParams& params, std::size_t desired, Rng& rng,
                              const HighSessionOptions& options = {});

/// Row n-1 of `queries`; messages concatenated as W_1..W_K.
std::vector<std::uint64_t> high_queries(const HighSession& session);

/// <Q_n, W> + <G[:, n], S> for server n (1-based) and E shared symbols S.
std::uint64_t high_answer(std::size_t server, std::span<const std::uint64_t> query,
                          std::span<const std::uint64_t> messages, std::span<const std::uint64_t> noise,
                          const GrsCode& grs);

/// Inverts [G ; 0 I] on the N answers and returns the last N - E coordinates.
std::vector<std::uint64_t> high_decode(const HighSession& session, std::span<const std::uint64_t> answers);

}  // namespace etpir
