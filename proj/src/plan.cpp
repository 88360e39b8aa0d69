#include "etpir/plan.hpp"

#include <limits>

#include "etpir/matrix.hpp"

namespace etpir {

namespace {

std::uint64_t checked_pow(std::uint64_t base, std::uint64_t exp) {
  std::uint64_t r = 1;
  for (std::uint64_t i = 0; i < exp; ++i) {
    if (base != 0 && r > std::numeric_limits<std::uint64_t>::max() / base) {
      throw InvalidParams("count overflow computing " + std::to_string(base) + "^" + std::to_string(exp));
    }
    r *= base;
  }
  return r;
}

void check_formula_args(std::uint64_t K, std::uint64_t N, std::uint64_t T, std::uint64_t E) {
  if (K == 0) throw InvalidParams("need at least one message");
  if (N == 0) throw InvalidParams("need at least one server");
  if (T == 0 || T > N) throw InvalidParams("collusion threshold must lie in [1, N]");
  if (E >= N) throw InvalidParams("eavesdropping threshold must be below N");
}

}  // namespace

std::string to_string(const Rational& r) {
  const auto num = boost::multiprecision::numerator(r);
  const auto den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

const char* to_string(Regime r) { return r == Regime::kLowEavesdrop ? "low_eavesdrop" : "high_eavesdrop"; }

void SchemeParams::validate() const {
  if (messages < 1) throw InvalidParams("K must be at least 1");
  if (servers < 2) throw InvalidParams("N must be at least 2");
  if (collusion < 1 || collusion > servers - 1) throw InvalidParams("T must lie in [1, N-1]");
  if (eavesdropped > servers - 1) throw InvalidParams("E must lie in [0, N-1]");
  if (!is_prime(modulus)) throw InvalidParams("q = " + std::to_string(modulus) + " is not prime");
}

void SchemeParams::validate_for_default_codes() const {
  validate();
  if (modulus <= servers) {
    throw InvalidParams("q = " + std::to_string(modulus) + " too small: need q > N = " + std::to_string(servers) +
                        " distinct nonzero evaluation points");
  }
}

std::string describe(const SchemeParams& p) {
  return "K=" + std::to_string(p.messages) + " N=" + std::to_string(p.servers) + " T=" +
         std::to_string(p.collusion) + " E=" + std::to_string(p.eavesdropped) + " q=" + std::to_string(p.modulus);
}

Rational capacity(std::uint64_t K, std::uint64_t N, std::uint64_t T, std::uint64_t E) {
  check_formula_args(K, N, T, E);
  const Rational secure_fraction(N - E, N);
  if (E >= T) return secure_fraction;
  const Rational ratio(T - E, N - E);
  Rational sum = 0;
  Rational term = 1;
  for (std::uint64_t i = 0; i < K; ++i) {
    sum += term;
    term *= ratio;
  }
  return secure_fraction / sum;
}

Rational rho_min(std::uint64_t K, std::uint64_t N, std::uint64_t T, std::uint64_t E) {
  return Rational(E, N) / capacity(K, N, T, E);
}

std::uint64_t downloads_sum_form(std::uint64_t K, std::uint64_t N, std::uint64_t T, std::uint64_t E) {
  std::uint64_t total = 0;
  for (std::uint64_t layer = 1; layer <= K; ++layer) {
    total += binomial(K, layer) * checked_pow(N - T, layer - 1) * checked_pow(T - E, K - layer);
  }
  return total;
}

std::uint64_t downloads_quotient_form(std::uint64_t K, std::uint64_t N, std::uint64_t T, std::uint64_t E) {
  if (T >= N) throw InvalidParams("quotient form of D_n needs T < N");
  return (checked_pow(N - E, K) - checked_pow(T - E, K)) / (N - T);
}

DerivedCounts derive_counts(const SchemeParams& p) {
  p.validate();
  const std::uint64_t K = p.messages, N = p.servers, T = p.collusion, E = p.eavesdropped;
  DerivedCounts c;
  c.regime = p.regime();
  c.effective_servers = std::max(N - E, T);
  if (c.regime == Regime::kHighEavesdrop) {
    c.message_length = N - E;
    c.extended_length = N - E;
    c.mixtures_per_server = 1;
    c.downloads_per_server = 1;
    c.noise_symbols = E;
    return c;
  }
  for (std::uint64_t layer = 1; layer <= K; ++layer) {
    c.sums_per_type.push_back(checked_pow(N - T, layer - 1) * checked_pow(T - E, K - layer));
  }
  c.message_length = checked_pow(N - E, K);
  c.mixtures_per_server = checked_pow(N - E, K - 1);
  c.extended_length = c.effective_servers * c.mixtures_per_server;
  c.downloads_per_server = downloads_sum_form(K, N, T, E);
  c.noise_symbols = E * c.downloads_per_server;
  return c;
}

std::vector<std::vector<std::size_t>> subsets_lex(std::size_t K, std::size_t size) {
  std::vector<std::vector<std::size_t>> out;
  for_each_subset(K, size, [&](std::span<const std::size_t> s) {
    std::vector<std::size_t> v;
    v.reserve(s.size());
    for (std::size_t i : s) v.push_back(i + 1);
    out.push_back(std::move(v));
    return true;
  });
  return out;
}

bool QueryRow::contains(std::size_t message) const {
  for (std::size_t m : members)
    if (m == message) return true;
  return false;
}

IndexMap::IndexMap(const SchemeParams& p, const DerivedCounts& c)
    : messages_(p.messages),
      layers_(p.messages),
      mixtures_per_server_(c.mixtures_per_server),
      sums_(c.sums_per_type) {
  if (c.regime != Regime::kLowEavesdrop) {
    throw InvalidParams("index map exists only for the layered scheme (E < T)");
  }
  for (std::size_t layer = 1; layer <= layers_; ++layer) {
    std::vector<std::size_t> firsts;
    std::size_t t = 1;
    for (auto& members : subsets_lex(messages_, layer)) {
      firsts.push_back(rows_.size());
      type_rank_[members] = t;
      for (std::size_t pos = 0; pos < sums_[layer - 1]; ++pos) rows_.push_back({layer, t, members, pos});
      ++t;
    }
    type_first_row_.push_back(std::move(firsts));
  }
  rows_with_.assign(messages_, {});
  slot_.assign(messages_, std::vector<std::size_t>(rows_.size(), std::numeric_limits<std::size_t>::max()));
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    for (std::size_t m : rows_[r].members) {
      slot_[m - 1][r] = rows_with_[m - 1].size();
      rows_with_[m - 1].push_back(r);
    }
  }
}

std::size_t IndexMap::types_in_layer(std::size_t layer) const { return type_first_row_.at(layer - 1).size(); }

std::size_t IndexMap::type_index(const std::vector<std::size_t>& members) const {
  const auto it = type_rank_.find(members);
  if (it == type_rank_.end()) throw Error("index map: no such message subset");
  return it->second;
}

std::size_t IndexMap::row_of(std::size_t layer, std::size_t type_index, std::size_t position) const {
  if (layer < 1 || layer > layers_ || type_index < 1 || type_index > types_in_layer(layer) ||
      position >= sums_[layer - 1]) {
    throw Error("index map: no row for layer " + std::to_string(layer) + " type " + std::to_string(type_index));
  }
  return type_first_row_[layer - 1][type_index - 1] + position;
}

std::size_t IndexMap::slot(std::size_t message, std::size_t row) const {
  const std::size_t s = slot_.at(message - 1).at(row);
  if (s == std::numeric_limits<std::size_t>::max()) {
    throw Error("row " + std::to_string(row) + " does not contain message " + std::to_string(message));
  }
  return s;
}

std::vector<std::size_t> IndexMap::indices(std::size_t message, std::size_t server, std::size_t layer,
                                           std::size_t type_index) const {
  std::vector<std::size_t> out;
  const std::size_t first = row_of(layer, type_index, 0);
  if (!rows_[first].contains(message)) return out;
  for (std::size_t pos = 0; pos < sums_[layer - 1]; ++pos) {
    out.push_back((server - 1) * mixtures_per_server_ + slot(message, first + pos) + 1);
  }
  return out;
}

IndexMap build_index_map(const SchemeParams& p, const DerivedCounts& c) { return IndexMap(p, c); }

}  // namespace etpir
