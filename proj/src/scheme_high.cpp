#include "etpir/scheme_high.hpp"

namespace etpir {

GrsCode default_high_code(const SchemeParams& params) {
  params.validate();
  if (params.regime() != Regime::kHighEavesdrop) throw InvalidParams("GRS scheme needs E >= T");
  const PrimeField f = params.field();
  if (params.modulus > params.servers) return build_grs(params.servers, params.eavesdropped, f);
  if (params.modulus + 1 >= params.servers) return build_grs_extended(params.servers, params.eavesdropped, f);
  throw InvalidParams("q = " + std::to_string(params.modulus) + " too small for an MDS code of length " +
                      std::to_string(params.servers));
}

Matrix high_query_vectors(const SchemeParams& params, const GrsCode& grs, std::size_t desired, const Matrix& masks) {
  const std::size_t N = params.servers, E = params.eavesdropped;
  const std::size_t width = params.messages * (N - E);
  if (masks.rows() != E || masks.cols() != width) throw ShapeError("masks must be E x K(N-E)");
  Matrix q = grs.generator.transpose() * masks;  // row n: sum_j G[j, n] U_j
  for (std::size_t i = 0; i < N - E; ++i) {
    auto& cell = q(E + i, (desired - 1) * (N - E) + i);
    cell = params.field().add(cell, 1);
  }
  return q;
}

HighSession open_high_session(const SchemeParams& params, std::size_t desired, Rng& rng,
                              const HighSessionOptions& options) {
  params.validate();
  if (params.regime() != Regime::kHighEavesdrop) throw InvalidParams("GRS scheme needs E >= T");
  if (desired < 1 || desired > params.messages) throw InvalidParams("desired message index out of range");
  HighSession s;
  s.params = params;
  s.counts = derive_counts(params);
  s.desired = desired;
  s.grs = options.grs ? *options.grs : default_high_code(params);
  if (s.grs.servers() != params.servers || s.grs.rows() != params.eavesdropped)
    throw InvalidParams("GRS generator must be E x N");
  const std::size_t width = params.messages * (params.servers - params.eavesdropped);
  s.masks = options.masks ? *options.masks : random_matrix(params.field(), params.eavesdropped, width, rng);
  s.queries = high_query_vectors(params, s.grs, desired, s.masks);
  s.answer_inverse = invert(grs_answer_matrix(s.grs));
  return s;
}

std::vector<std::uint64_t> high_queries(const HighSession& session) { return session.queries.data(); }

std::uint64_t high_answer(std::size_t server, std::span<const std::uint64_t> query,
                          std::span<const std::uint64_t> messages, std::span<const std::uint64_t> noise,
                          const GrsCode& grs) {
  const PrimeField& f = grs.generator.field();
  if (server < 1 || server > grs.servers()) throw ShapeError("answer: server index out of range");
  if (query.size() != messages.size() || noise.size() != grs.rows()) throw ShapeError("answer: length mismatch");
  std::uint64_t acc = dot(f, query, messages);
  for (std::size_t j = 0; j < noise.size(); ++j) acc = f.add(acc, f.mul(grs.generator(j, server - 1), noise[j]));
  return acc;
}

std::vector<std::uint64_t> high_decode(const HighSession& session, std::span<const std::uint64_t> answers) {
  const std::size_t N = session.params.servers, E = session.params.eavesdropped;
  if (answers.size() != N) throw ShapeError("decode: need one answer per server");
  const std::vector<std::uint64_t> x = vec_mat(answers, session.answer_inverse);
  return {x.begin() + static_cast<std::ptrdiff_t>(E), x.end()};
}

}  // namespace etpir
