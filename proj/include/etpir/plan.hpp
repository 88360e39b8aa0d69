#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "etpir/field.hpp"

namespace etpir {

using Rational = boost::multiprecision::cpp_rational;

/// "p/q" in lowest terms ("p" when the denominator is 1).
std::string to_string(const Rational& r);

class InvalidParams : public Error {
 public:
  using Error::Error;
};

/// Which achievable scheme applies: fewer eavesdropped links than colluding
/// servers (layered interference-alignment scheme) or at least as many
/// (GRS-masked unit-vector scheme).
enum class Regime { kLowEavesdrop, kHighEavesdrop };

const char* to_string(Regime r);

struct SchemeParams {
  std::uint64_t messages = 1;      // K
  std::uint64_t servers = 2;       // N
  std::uint64_t collusion = 1;     // T
  std::uint64_t eavesdropped = 0;  // E
  std::uint64_t modulus = kDefaultModulus;

  Regime regime() const noexcept {
    return eavesdropped < collusion ? Regime::kLowEavesdrop : Regime::kHighEavesdrop;
  }
  PrimeField field() const { return PrimeField(modulus); }

  /// Structural constraints shared by every scheme builder:
  /// K >= 1, N >= 2, 1 <= T <= N-1, 0 <= E <= N-1, q prime.
  void validate() const;
  /// validate() plus the default evaluation points 1..N being distinct and
  /// nonzero, i.e. q > N.
  void validate_for_default_codes() const;

  friend bool operator==(const SchemeParams&, const SchemeParams&) = default;
};

std::string describe(const SchemeParams& p);

/// Capacity of retrieval under T-collusion and E-eavesdropping, exact.
/// Accepts T = N (the series form stays well defined). Throws InvalidParams
/// for E >= N, T == 0 or K == 0.
Rational capacity(std::uint64_t messages, std::uint64_t servers, std::uint64_t collusion,
                  std::uint64_t eavesdropped);
/// Minimum shared randomness per desired symbol: (E/N) / capacity.
Rational rho_min(std::uint64_t messages, std::uint64_t servers, std::uint64_t collusion,
                 std::uint64_t eavesdropped);

inline Rational capacity(const SchemeParams& p) {
  return capacity(p.messages, p.servers, p.collusion, p.eavesdropped);
}
inline Rational rho_min(const SchemeParams& p) {
  return rho_min(p.messages, p.servers, p.collusion, p.eavesdropped);
}

struct DerivedCounts {
  Regime regime = Regime::kLowEavesdrop;
  std::uint64_t message_length = 0;        // L
  std::uint64_t extended_length = 0;       // L' = N_eff * L_n (padded with zero dummies)
  std::uint64_t mixtures_per_server = 0;   // L_n, per message
  std::uint64_t downloads_per_server = 0;  // D_n
  std::uint64_t effective_servers = 0;     // N_eff = max(N - E, T)
  std::uint64_t noise_symbols = 0;         // E * D_n
  /// sums_per_type[i] = number of (i+1)-sums of each type at one server.
  std::vector<std::uint64_t> sums_per_type;

  std::uint64_t total_downloads(const SchemeParams& p) const { return p.servers * downloads_per_server; }
  Rational rate(const SchemeParams& p) const { return Rational(message_length, total_downloads(p)); }
  Rational rho(const SchemeParams&) const { return Rational(noise_symbols, message_length); }
};

DerivedCounts derive_counts(const SchemeParams& p);

/// D_n as the sum over layers of C(K, i) * I_i.
std::uint64_t downloads_sum_form(std::uint64_t K, std::uint64_t N, std::uint64_t T, std::uint64_t E);
/// D_n as ((N-E)^K - (T-E)^K) / (N-T); requires T < N.
std::uint64_t downloads_quotient_form(std::uint64_t K, std::uint64_t N, std::uint64_t T, std::uint64_t E);

/// All size-`size` subsets of {1..K} in lexicographic order.
std::vector<std::vector<std::size_t>> subsets_lex(std::size_t K, std::size_t size);

/// One downloaded symbol position, identical at every server.
struct QueryRow {
  std::size_t layer = 0;       // number of messages mixed, 1-based
  std::size_t type_index = 0;  // lexicographic rank of the message subset within its layer, 1-based
  std::vector<std::size_t> members;  // message indices, 1-based, ascending
  std::size_t position = 0;    // 0-based index among rows of the same type

  bool contains(std::size_t message) const;
};

/// Row layout of one server's downloads and the global numbering of each
/// message's mixtures. Rows are ordered layer-major, then by type, then by
/// position; mixtures of a message are numbered from 1 to N*L_n, server-major
/// and then in row order, counting only rows whose type contains the message.
class IndexMap {
 public:
  IndexMap() = default;
  IndexMap(const SchemeParams& p, const DerivedCounts& c);

  const std::vector<QueryRow>& rows() const noexcept { return rows_; }
  std::size_t row_count() const noexcept { return rows_.size(); }
  std::size_t layers() const noexcept { return layers_; }
  std::size_t types_in_layer(std::size_t layer) const;
  std::size_t sums_per_type(std::size_t layer) const { return sums_[layer - 1]; }

  /// Lexicographic rank (1-based) of a message subset within its layer.
  std::size_t type_index(const std::vector<std::size_t>& members) const;
  /// Row index of (layer, type_index, position); all 1-based except position.
  std::size_t row_of(std::size_t layer, std::size_t type_index, std::size_t position) const;
  /// Rank of row r among this server's rows that contain `message`.
  std::size_t slot(std::size_t message, std::size_t row) const;
  /// Rows containing `message`, in order; its size is L_n.
  const std::vector<std::size_t>& rows_with(std::size_t message) const { return rows_with_[message - 1]; }
  /// Global 1-based indices of `message`'s mixtures at (server, layer, type).
  /// Empty when the type does not contain the message.
  std::vector<std::size_t> indices(std::size_t message, std::size_t server, std::size_t layer,
                                   std::size_t type_index) const;

 private:
  std::size_t messages_ = 0;
  std::size_t layers_ = 0;
  std::size_t mixtures_per_server_ = 0;
  std::vector<std::uint64_t> sums_;
  std::vector<QueryRow> rows_;
  std::vector<std::vector<std::size_t>> type_first_row_;
  std::map<std::vector<std::size_t>, std::size_t> type_rank_;
  std::vector<std::vector<std::size_t>> rows_with_;
  std::vector<std::vector<std::size_t>> slot_;  // slot_[message-1][row], SIZE_MAX if absent
};

IndexMap build_index_map(const SchemeParams& p, const DerivedCounts& c);

}  // namespace etpir
