#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>

#include "etpir/plan.hpp"

using namespace etpir;

namespace {

// Colluding-PIR capacity without eavesdropper, (1 + T/N + ... + (T/N)^{K-1})^{-1}.
Rational tpir(std::uint64_t K, std::uint64_t N, std::uint64_t T) {
  Rational sum = 0;
  for (std::uint64_t i = 0; i < K; ++i) {
    Rational term = 1;
    for (std::uint64_t j = 0; j < i; ++j) term *= Rational(T, N);
    sum += term;
  }
  return 1 / sum;
}

Rational frac(std::int64_t p, std::int64_t q) { return Rational(p, q); }

}  // namespace

TEST_CASE("capacity golden values") {
  CHECK(capacity(2, 3, 2, 1) == frac(4, 9));
  CHECK(capacity(3, 3, 2, 1) == frac(8, 21));
  CHECK(capacity(2, 4, 2, 1) == frac(9, 16));
  CHECK(capacity(2, 5, 3, 2) == frac(9, 20));
  for (std::uint64_t K = 1; K <= 5; ++K) CHECK(capacity(K, 3, 1, 2) == frac(1, 3));
  CHECK(to_string(capacity(2, 3, 2, 1)) == "4/9");
  CHECK(to_string(Rational(3)) == "3");
}

TEST_CASE("capacity single message") {
  for (std::uint64_t N = 2; N <= 7; ++N)
    for (std::uint64_t T = 1; T <= N; ++T)
      for (std::uint64_t E = 0; E < T; ++E) CHECK(capacity(1, N, T, E) == Rational(N - E, N));
}

TEST_CASE("capacity reduces to colluding PIR without eavesdropper") {
  for (std::uint64_t N = 2; N <= 8; ++N)
    for (std::uint64_t T = 1; T < N; ++T)
      for (std::uint64_t K = 1; K <= 5; ++K) CHECK(capacity(K, N, T, 0) == tpir(K, N, T));
}

TEST_CASE("capacity without collusion") {
  for (std::uint64_t N = 2; N <= 8; ++N)
    for (std::uint64_t E = 1; E < N; ++E)
      for (std::uint64_t K = 1; K <= 5; ++K) CHECK(capacity(K, N, 1, E) == Rational(N - E, N));
}

TEST_CASE("capacity is monotone") {
  for (std::uint64_t N = 2; N <= 6; ++N)
    for (std::uint64_t T = 1; T <= N; ++T)
      for (std::uint64_t E = 0; E < N; ++E)
        for (std::uint64_t K = 1; K <= 4; ++K) {
          const Rational c = capacity(K, N, T, E);
          CHECK(capacity(K + 1, N, T, E) <= c);
          if (T < N) CHECK(capacity(K, N, T + 1, E) <= c);
          if (E + 1 < N) CHECK(capacity(K, N, T, E + 1) <= c);
        }
}

TEST_CASE("capacity limit for many messages") {
  // Distance to the limit is (1 - E/N)(1 - r) r^K / (1 - r^K) with r = (T-E)/(N-E),
  // so the 1e-6 tolerance at K = 40 only holds once r^40 is that small.
  for (std::uint64_t N = 3; N <= 6; ++N)
    for (std::uint64_t T = 1; T < N; ++T)
      for (std::uint64_t E = 0; E < T; ++E) {
        const Rational r(T - E, N - E);
        const Rational limit = 1 - Rational(std::max(T, E), N);
        for (std::uint64_t K : {40ULL, 120ULL}) {
          Rational rk = 1;
          for (std::uint64_t i = 0; i < K; ++i) rk *= r;
          const Rational gap = capacity(K, N, T, E) - limit;
          CHECK(gap == Rational(N - E, N) * (1 - r) * rk / (1 - rk));
          if (K == 120 || rk < Rational(1, 10000000)) CHECK(gap.convert_to<double>() < 1e-6);
        }
      }
}

TEST_CASE("capacity argument errors") {
  CHECK_THROWS_AS(capacity(2, 3, 2, 3), InvalidParams);
  CHECK_THROWS_AS(capacity(0, 3, 2, 1), InvalidParams);
  CHECK_THROWS_AS(capacity(2, 3, 0, 1), InvalidParams);
  CHECK(capacity(2, 3, 3, 1) == frac(2, 3) / (1 + Rational(2, 2)));
}

TEST_CASE("rho_min") {
  CHECK(rho_min(2, 3, 2, 1) == frac(3, 4));
  CHECK(rho_min(2, 5, 3, 2) == frac(8, 9));
  CHECK(rho_min(3, 5, 3, 0) == 0);
  CHECK(rho_min(2, 4, 2, 2) == 1);
}

TEST_CASE("derive_counts examples") {
  {
    const DerivedCounts c = derive_counts({2, 3, 2, 1, 7});
    CHECK(c.message_length == 4);
    CHECK(c.mixtures_per_server == 2);
    CHECK(c.downloads_per_server == 3);
    CHECK(c.sums_per_type == std::vector<std::uint64_t>{1, 1});
    CHECK(c.effective_servers == 2);
    CHECK(c.extended_length == 4);
  }
  {
    const DerivedCounts c = derive_counts({2, 4, 2, 1, 7});
    CHECK(c.message_length == 9);
    CHECK(c.mixtures_per_server == 3);
    CHECK(c.downloads_per_server == 4);
    CHECK(c.sums_per_type == std::vector<std::uint64_t>{1, 2});
  }
  {
    const DerivedCounts c = derive_counts({2, 4, 3, 2, 7});
    CHECK(c.message_length == 4);
    CHECK(c.extended_length == 6);
    CHECK(c.effective_servers == 3);
    CHECK(c.downloads_per_server == 3);
  }
  {
    const SchemeParams p{2, 3, 1, 2, 5};
    const DerivedCounts c = derive_counts(p);
    CHECK(c.regime == Regime::kHighEavesdrop);
    CHECK(c.message_length == 1);
    CHECK(c.downloads_per_server == 1);
    CHECK(c.noise_symbols == 2);
    CHECK(c.rate(p) == frac(1, 3));
  }
  CHECK_THROWS_AS(derive_counts({2, 3, 3, 1, 7}), InvalidParams);
  CHECK_THROWS_AS(derive_counts({2, 3, 2, 1, 9}), InvalidParams);
  CHECK_THROWS_AS((SchemeParams{2, 3, 2, 1, 3}.validate_for_default_codes()), InvalidParams);
}

TEST_CASE("download count forms agree") {
  for (std::uint64_t N = 2; N <= 8; ++N)
    for (std::uint64_t T = 1; T < N; ++T)
      for (std::uint64_t E = 0; E < T; ++E)
        for (std::uint64_t K = 1; K <= 5; ++K)
          CHECK(downloads_sum_form(K, N, T, E) == downloads_quotient_form(K, N, T, E));
}

TEST_CASE("counts meet capacity and the noise bound exactly") {
  for (std::uint64_t N = 2; N <= 7; ++N)
    for (std::uint64_t T = 1; T < N; ++T)
      for (std::uint64_t E = 0; E < N; ++E)
        for (std::uint64_t K = 1; K <= 4; ++K) {
          const SchemeParams p{K, N, T, E, 7};
          const DerivedCounts c = derive_counts(p);
          CHECK(c.rate(p) == capacity(p));
          CHECK(Rational(c.noise_symbols) == rho_min(p) * c.message_length);
        }
}

TEST_CASE("subsets_lex") {
  CHECK(subsets_lex(3, 2) == std::vector<std::vector<std::size_t>>{{1, 2}, {1, 3}, {2, 3}});
  CHECK(subsets_lex(3, 3).size() == 1);
}

TEST_CASE("index map for two messages, three servers") {
  const SchemeParams p{2, 3, 2, 1, 7};
  const IndexMap m = build_index_map(p, derive_counts(p));
  REQUIRE(m.row_count() == 3);
  CHECK(m.rows()[0].members == std::vector<std::size_t>{1});
  CHECK(m.rows()[1].members == std::vector<std::size_t>{2});
  CHECK(m.rows()[2].members == std::vector<std::size_t>{1, 2});
  // Server n holds a_{2n-1}, b_{2n-1}, a_{2n} + b_{2n}.
  for (std::size_t n = 1; n <= 3; ++n) {
    CHECK(m.indices(1, n, 1, 1) == std::vector<std::size_t>{2 * n - 1});
    CHECK(m.indices(2, n, 1, 2) == std::vector<std::size_t>{2 * n - 1});
    CHECK(m.indices(1, n, 2, 1) == std::vector<std::size_t>{2 * n});
    CHECK(m.indices(2, n, 2, 1) == std::vector<std::size_t>{2 * n});
    CHECK(m.indices(1, n, 1, 2).empty());
  }
}

TEST_CASE("index map partitions each message's mixtures") {
  for (const SchemeParams& p : {SchemeParams{3, 3, 2, 1, 7}, SchemeParams{3, 5, 3, 1, 7}, SchemeParams{4, 4, 2, 0, 7}}) {
    const DerivedCounts c = derive_counts(p);
    const IndexMap m = build_index_map(p, c);
    CHECK(m.row_count() == c.downloads_per_server);
    for (std::size_t k = 1; k <= p.messages; ++k) {
      std::multiset<std::size_t> seen;
      for (std::size_t n = 1; n <= p.servers; ++n)
        for (std::size_t layer = 1; layer <= m.layers(); ++layer)
          for (std::size_t t = 1; t <= m.types_in_layer(layer); ++t) {
            const auto idx = m.indices(k, n, layer, t);
            CHECK((idx.empty() || idx.size() == c.sums_per_type[layer - 1]));
            seen.insert(idx.begin(), idx.end());
          }
      const std::size_t total = p.servers * c.mixtures_per_server;
      REQUIRE(seen.size() == total);
      std::size_t expect = 1;
      for (std::size_t v : seen) CHECK(v == expect++);
      CHECK(m.rows_with(k).size() == c.mixtures_per_server);
    }
    // Rows are grouped layer-major, types lexicographic.
    for (std::size_t r = 1; r < m.row_count(); ++r) {
      const auto& a = m.rows()[r - 1];
      const auto& b = m.rows()[r];
      CHECK((a.layer < b.layer || (a.layer == b.layer && a.members <= b.members)));
    }
  }
}

TEST_CASE("index map for one message") {
  for (std::uint64_t N = 2; N <= 6; ++N)
    for (std::uint64_t T = 1; T < N; ++T)
      for (std::uint64_t E = 0; E < T; ++E) {
        const SchemeParams p{1, N, T, E, 7};
        const IndexMap m = build_index_map(p, derive_counts(p));
        CHECK(m.layers() == 1);
        CHECK(m.types_in_layer(1) == 1);
        CHECK(m.sums_per_type(1) == 1);
      }
  const SchemeParams high{2, 3, 1, 2, 5};
  CHECK_THROWS_AS(build_index_map(high, derive_counts(high)), InvalidParams);
}
