#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <map>

#include "etpir/scheme_high.hpp"

using namespace etpir;

namespace {

std::vector<std::uint64_t> answers(const HighSession& s, std::span<const std::uint64_t> w,
                                   std::span<const std::uint64_t> noise) {
  std::vector<std::uint64_t> a;
  for (std::size_t n = 1; n <= s.params.servers; ++n) a.push_back(high_answer(n, s.queries.row(n - 1), w, noise, s.grs));
  return a;
}

std::vector<std::uint64_t> draw(const PrimeField& f, std::size_t n, Rng& rng) {
  std::vector<std::uint64_t> v(n);
  for (auto& x : v) x = rng.uniform(f);
  return v;
}

}  // namespace

TEST_CASE("first E servers get pure masked vectors") {
  const SchemeParams p{2, 3, 1, 2, 5};
  Rng rng(1);
  HighSessionOptions o;
  o.masks = Matrix(p.field(), 2, 2);
  for (std::size_t k = 1; k <= 2; ++k) {
    const HighSession s = open_high_session(p, k, rng, o);
    CHECK(s.queries.row(0)[0] == 0);
    CHECK(s.queries.row(1)[1] == 0);
    std::vector<std::uint64_t> unit(2, 0);
    unit[k - 1] = 1;
    CHECK(std::vector<std::uint64_t>(s.queries.row(2).begin(), s.queries.row(2).end()) == unit);
  }
}

TEST_CASE("answers") {
  const SchemeParams p{2, 3, 1, 2, 5};
  Rng rng(2);
  const HighSession s = open_high_session(p, 1, rng);
  const std::vector<std::uint64_t> zero_w(2, 0), zero_s(2, 0);
  for (std::size_t n = 1; n <= 3; ++n) CHECK(high_answer(n, s.queries.row(n - 1), zero_w, zero_s, s.grs) == 0);
  const auto w = draw(p.field(), 2, rng);
  for (std::size_t n = 1; n <= 3; ++n)
    CHECK(high_answer(n, s.queries.row(n - 1), w, zero_s, s.grs) == dot(p.field(), s.queries.row(n - 1), w));

  // A_n = X_1 G[1, n] + X_2 G[2, n] + W_k[n - E] for n > E, with X_j = <U_j, W> + S_j.
  const auto noise = draw(p.field(), 2, rng);
  const PrimeField& f = p.field();
  const auto a = answers(s, w, noise);
  for (std::size_t n = 0; n < 3; ++n) {
    std::uint64_t expect = 0;
    for (std::size_t j = 0; j < 2; ++j) {
      const std::uint64_t x = f.add(dot(f, s.masks.row(j), w), noise[j]);
      expect = f.add(expect, f.mul(x, s.grs.generator(j, n)));
    }
    if (n == 2) expect = f.add(expect, w[0]);
    CHECK(a[n] == expect);
  }
}

TEST_CASE("round trips") {
  Rng rng(3);
  for (const SchemeParams& p : {SchemeParams{2, 3, 1, 2, 5}, SchemeParams{3, 4, 2, 2, 7}, SchemeParams{2, 5, 2, 3, 11},
                                SchemeParams{3, 5, 1, 1, kDefaultModulus}, SchemeParams{2, 3, 2, 2, 2},
                                SchemeParams{2, 3, 1, 2, 2}}) {
    const std::size_t width = p.messages * (p.servers - p.eavesdropped);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t k = 1 + trial % p.messages;
      const HighSession s = open_high_session(p, k, rng);
      const auto w = draw(p.field(), width, rng);
      const auto noise = draw(p.field(), p.eavesdropped, rng);
      const std::vector<std::uint64_t> expect(w.begin() + (k - 1) * (p.servers - p.eavesdropped),
                                              w.begin() + k * (p.servers - p.eavesdropped));
      REQUIRE(high_decode(s, answers(s, w, noise)) == expect);
    }
  }
}

TEST_CASE("rate for four servers, two eavesdropped") {
  const SchemeParams p{3, 4, 2, 2, 7};
  Rng rng(4);
  const HighSession s = open_high_session(p, 2, rng);
  CHECK(s.queries.rows() == 4);
  CHECK(s.counts.message_length == 2);
  CHECK(s.counts.rate(p) == Rational(1, 2));
  CHECK(capacity(p) == Rational(1, 2));
}

TEST_CASE("zero error over every mask at q = 3") {
  const SchemeParams p{2, 3, 1, 2, 3};
  const PrimeField f = p.field();
  Rng rng(5);
  const GrsCode grs = default_high_code(p);
  const auto w = draw(f, 2, rng);
  const auto noise = draw(f, 2, rng);
  std::size_t checked = 0;
  for (std::uint64_t code = 0; code < 81; ++code) {  // 3^(E K (N-E)) = 3^4
    Matrix masks(f, 2, 2);
    std::uint64_t c = code;
    for (std::size_t i = 0; i < 4; ++i, c /= 3) masks(i / 2, i % 2) = c % 3;
    for (std::size_t k = 1; k <= 2; ++k) {
      const HighSession s = open_high_session(p, k, rng, {grs, masks});
      CHECK(high_decode(s, answers(s, w, noise)) == std::vector<std::uint64_t>{w[k - 1]});
      ++checked;
    }
  }
  CHECK(checked == 162);
}

TEST_CASE("any E query vectors are jointly uniform at q = 3") {
  const SchemeParams p{2, 3, 1, 2, 3};
  const PrimeField f = p.field();
  const GrsCode grs = default_high_code(p);
  for (std::size_t k = 1; k <= 2; ++k)
    for (auto [a, b] : {std::pair{0, 1}, std::pair{0, 2}, std::pair{1, 2}}) {
      std::map<std::vector<std::uint64_t>, int> counts;
      for (std::uint64_t code = 0; code < 81; ++code) {
        Matrix masks(f, 2, 2);
        std::uint64_t c = code;
        for (std::size_t i = 0; i < 4; ++i, c /= 3) masks(i / 2, i % 2) = c % 3;
        const Matrix q = high_query_vectors(p, grs, k, masks);
        std::vector<std::uint64_t> key(q.row(a).begin(), q.row(a).end());
        key.insert(key.end(), q.row(b).begin(), q.row(b).end());
        ++counts[key];
      }
      CHECK(counts.size() == 81);
    }
}

TEST_CASE("code selection") {
  CHECK_FALSE(default_high_code({2, 3, 1, 2, 5}).point_at_infinity);
  CHECK(default_high_code({2, 3, 1, 2, 2}).point_at_infinity);
  CHECK(default_high_code({2, 3, 2, 2, 3}).point_at_infinity);
  CHECK_THROWS_AS(default_high_code({2, 5, 1, 2, 2}), InvalidParams);
  CHECK_THROWS_AS(default_high_code({2, 5, 3, 2, 7}), InvalidParams);
  Rng rng(6);
  CHECK_THROWS_AS(open_high_session({2, 3, 1, 2, 5}, 3, rng), InvalidParams);
}
