#include "etpir/codes.hpp"

#include <numeric>

namespace etpir {

namespace {

void require_points(std::size_t servers, const PrimeField& field) {
  if (field.modulus() <= servers) {
    throw Error("GF(" + std::to_string(field.modulus()) + ") has too few nonzero elements for " +
                std::to_string(servers) + " distinct evaluation points");
  }
}

}  // namespace

NoiseCode NoiseCode::from_generator(Matrix generator) {
  Matrix parity = nullspace_systematic(generator);
  const std::size_t n = generator.rows();
  const std::size_t e = generator.cols();
  Matrix p(generator.field(), n - e, e);
  for (std::size_t i = 0; i < n - e; ++i)
    for (std::size_t j = 0; j < e; ++j) p(i, j) = generator.field().neg(parity(i, j));
  return NoiseCode{std::move(generator), std::move(parity), std::move(p)};
}

NoiseCode build_noise_code(std::size_t servers, std::size_t eavesdropped, const PrimeField& field) {
  if (eavesdropped >= servers) throw Error("noise code needs E < N");
  require_points(servers, field);
  Matrix c(field, servers, eavesdropped);
  for (std::size_t n = 0; n < servers; ++n) {
    std::uint64_t x = 1;
    for (std::size_t j = 0; j < eavesdropped; ++j) {
      c(n, j) = x;
      x = field.mul(x, n + 1);
    }
  }
  return NoiseCode::from_generator(std::move(c));
}

Matrix build_desired_generator(std::size_t servers, std::size_t eavesdropped, const PrimeField& field) {
  if (eavesdropped >= servers) throw Error("desired generator needs E < N");
  require_points(servers, field);
  Matrix g(field, servers, servers - eavesdropped);
  for (std::size_t n = 0; n < servers; ++n) {
    std::uint64_t x = field.pow(n + 1, eavesdropped);
    for (std::size_t c = 0; c < servers - eavesdropped; ++c) {
      g(n, c) = x;
      x = field.mul(x, n + 1);
    }
  }
  return g;
}

namespace {

GrsCode finish_grs(std::size_t eavesdropped, const PrimeField& field, std::vector<std::uint64_t> points,
                   std::vector<std::uint64_t> multipliers, bool infinity) {
  const std::size_t n = points.size() + (infinity ? 1 : 0);
  if (multipliers.size() != n) throw Error("GRS: need one multiplier per server");
  for (std::uint64_t m : multipliers)
    if (field.reduce_unsigned(m) == 0) throw Error("GRS: column multipliers must be nonzero");
  Matrix g(field, eavesdropped, n);
  g.paste(0, 0, vandermonde(eavesdropped, points, field));  // rejects duplicate points
  if (infinity) g(eavesdropped - 1, n - 1) = 1;
  for (std::size_t j = 0; j < n; ++j) {
    const std::uint64_t m = field.reduce_unsigned(multipliers[j]);
    for (std::size_t i = 0; i < eavesdropped; ++i) g(i, j) = field.mul(g(i, j), m);
  }
  if (!is_mds(g.transpose())) throw Error("GRS generator failed the MDS check");
  return GrsCode{std::move(points), std::move(multipliers), infinity, std::move(g)};
}

}  // namespace

GrsCode build_grs(std::size_t servers, std::size_t eavesdropped, const PrimeField& field,
                  std::optional<std::vector<std::uint64_t>> points,
                  std::optional<std::vector<std::uint64_t>> multipliers) {
  if (eavesdropped < 1 || eavesdropped > servers) throw Error("GRS needs 1 <= E <= N");
  if (!points) {
    require_points(servers, field);
    points.emplace(servers);
    std::iota(points->begin(), points->end(), 1);
  }
  if (points->size() != servers) throw Error("GRS: need one evaluation point per server");
  if (!multipliers) multipliers.emplace(servers, 1);
  return finish_grs(eavesdropped, field, std::move(*points), std::move(*multipliers), false);
}

GrsCode build_grs_extended(std::size_t servers, std::size_t eavesdropped, const PrimeField& field) {
  if (eavesdropped < 1 || eavesdropped > servers) throw Error("GRS needs 1 <= E <= N");
  if (field.modulus() + 1 < servers) throw Error("extended GRS needs N <= q + 1");
  std::vector<std::uint64_t> points(servers - 1);
  std::iota(points.begin(), points.end(), 0);
  return finish_grs(eavesdropped, field, std::move(points), std::vector<std::uint64_t>(servers, 1), true);
}

Matrix grs_answer_matrix(const GrsCode& code) {
  const std::size_t n = code.servers();
  const std::size_t e = code.rows();
  Matrix m(code.generator.field(), n, n);
  m.paste(0, 0, code.generator);
  for (std::size_t i = 0; i < n - e; ++i) m(e + i, e + i) = 1;
  return m;
}

}  // namespace etpir
