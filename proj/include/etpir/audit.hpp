#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "etpir/scheme_high.hpp"
#include "etpir/scheme_low.hpp"

namespace etpir {

/// Answers of every server as linear maps of the message symbols and of the
/// shared noise symbols, with the queries fixed.
struct LinearScheme {
  SchemeParams params;
  std::size_t message_length = 0;  // L, real symbols per message (no dummies)
  std::size_t noise_symbols = 0;   // columns of each noise map
  std::vector<Matrix> message_maps;  // per server, answers x K*L
  std::vector<Matrix> noise_maps;    // per server, answers x noise_symbols

  std::size_t total_downloads() const;
  /// Same queries with every noise coefficient set to zero.
  LinearScheme strip_noise() const;
};

LinearScheme linear_scheme(const RetrievalSession& session);
LinearScheme linear_scheme(const HighSession& session);

/// Stacked maps of a server subset (0-based).
struct LinearView {
  Matrix message_map;  // M_W
  Matrix noise_map;    // M_S
  std::vector<std::size_t> subset;
};

LinearView linear_view(const LinearScheme& scheme, const std::vector<std::size_t>& subset);

struct SecurityVerdict {
  std::vector<std::size_t> subset;  // 1-based servers
  std::size_t rank_joint = 0;       // rank [M_W | M_S]
  std::size_t rank_noise = 0;       // rank M_S
  bool pass = false;
  std::string fingerprint;          // of [M_W | M_S], set on failure
};

/// Leakage-free iff rank [M_W | M_S] = rank M_S: with uniform W and S the
/// gap is exactly I(W ; A) in q-ary units.
SecurityVerdict check_security(const LinearScheme& scheme, const std::vector<std::size_t>& subset);
/// Every E-subset of servers.
std::vector<SecurityVerdict> check_security_all(const LinearScheme& scheme);

struct EntropyVerdict {
  std::vector<std::size_t> subset;  // 1-based
  std::uint64_t states = 0;
  std::uint64_t distinct_answers = 0;
  bool independent = false;  // P(a, w) = P(a) P(w) for every a, w, compared as exact counts
};

/// Enumerates every message and noise realization over GF(q) and tests
/// independence of the subset's answers from the messages exactly.
/// Throws Error when q^(K L + noise) exceeds max_states.
EntropyVerdict exhaustive_security(const LinearScheme& scheme, const std::vector<std::size_t>& subset,
                                   std::uint64_t max_states = 1u << 24);

struct StructuralPrivacy {
  bool pass = true;
  std::uint64_t desired_subsets = 0;
  std::optional<std::vector<std::size_t>> desired_witness;  // 1-based
  std::uint64_t pair_subsets = 0;
  std::vector<std::pair<std::size_t, std::vector<std::size_t>>> pair_witnesses;  // (layer, subset)
  std::string fingerprint;
};

/// Privacy conditions 1 and 2' over all C(N, T) server subsets.
StructuralPrivacy check_privacy_structural(const PrecodingBundle& bundle);
/// GRS scheme: every T columns of G independent, so any T masked queries are uniform.
StructuralPrivacy check_privacy_structural(const HighSession& session);

enum class HighCorruption { kNone, kUnmaskedFirstServer };

struct ExhaustivePrivacy {
  std::vector<std::size_t> subset;  // 1-based
  std::uint64_t states_per_index = 0;
  bool identical = false;       // joint law of (Q, A, W, S) the same for every desired index
  bool queries_uniform = false; // Q alone uniform over GF(q)^(T K (N-E))
  bool pass = false;
};

/// Full enumeration of masks, messages and noise for the GRS scheme.
/// Throws Error above max_states per desired index.
ExhaustivePrivacy check_privacy_exhaustive(const SchemeParams& params, const std::vector<std::size_t>& subset,
                                           HighCorruption corruption = HighCorruption::kNone,
                                           std::uint64_t max_states = 100000000);

struct CorrectnessStats {
  std::uint64_t trials = 0;
  std::uint64_t recovered = 0;
  std::uint64_t decode_singular = 0;  // epsilon-error events
  std::uint64_t wrong = 0;            // decoded to a different message: never expected
  bool zero_error_guaranteed = false; // T <= N - E or E >= T
  DecodeMode mode = DecodeMode::kFaithful;
  bool privacy_certified = true;

  double failure_rate() const { return trials ? double(trials - recovered) / double(trials) : 0.0; }
};

/// Fresh precoders, mixing matrices, messages and noise in every trial;
/// desired index cycles through 1..K.
CorrectnessStats check_correctness(const SchemeParams& params, std::uint64_t trials, Rng& rng,
                                   DecodeMode mode = DecodeMode::kFaithful);

struct RateAudit {
  Rational rate;
  Rational capacity;
  Rational rho;
  Rational rho_min;
  std::uint64_t downloads = 0;
  std::uint64_t noise_symbols = 0;
  bool rate_optimal = false;    // rate == capacity
  bool rho_optimal = false;     // rho == rho_min
  bool within_bounds = false;   // rate <= capacity and rho >= rho_min
};

RateAudit audit_rate_and_rho(const LinearScheme& scheme);

struct MdsAudit {
  std::string name;
  bool ok = false;
  bool exhaustive = false;
  std::uint64_t subsets_checked = 0;
  std::uint64_t subsets_total = 0;
};

struct AuditOptions {
  std::uint64_t seed = 1;
  DecodeMode mode = DecodeMode::kFaithful;
  std::uint64_t trials = 100;
  std::size_t desired = 1;
  /// Field multiplications allowed per MDS certificate.
  std::uint64_t mds_work_budget = 20000000;
  /// States allowed for the exhaustive GRS privacy check; skipped above.
  std::uint64_t exhaustive_limit = 1000000;
};

struct AuditReport {
  SchemeParams params;
  Regime regime = Regime::kLowEavesdrop;
  DecodeMode mode = DecodeMode::kFaithful;
  std::vector<SecurityVerdict> security;
  StructuralPrivacy privacy_structural;
  std::vector<ExhaustivePrivacy> privacy_exhaustive;
  CorrectnessStats correctness;
  RateAudit rate;
  std::vector<MdsAudit> mds;
  bool pass = false;
};

/// Builds one scheme instance from the seed and runs every check.
AuditReport run_audit(const SchemeParams& params, const AuditOptions& options = {});

nlohmann::json to_json(const AuditReport& report);
nlohmann::json counts_json(const SchemeParams& params, const DerivedCounts& counts);

}  // namespace etpir
