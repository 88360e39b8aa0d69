#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "etpir/codes.hpp"
#include "etpir/matrix.hpp"
#include "etpir/plan.hpp"

namespace etpir {

/// A randomized construction did not meet its invertibility conditions
/// within the attempt budget; usually q is too small for the parameters.
class ResampleExhausted : public Error {
 public:
  using Error::Error;
};

/// The final linear system (or an interference solve) was singular. In
/// faithful mode with T > N - E this is the expected epsilon-error event.
class DecodeSingular : public Error {
 public:
  using Error::Error;
};

/// Precoder shared by every undesired message for one layer pair
/// (layer, layer + 1). Inside a block of B = lower + upper positions,
/// positions [0, lower) are the layer-`layer` sums of a type without the
/// desired message, positions [lower, B) are the sums of that type plus the
/// desired message. Block row n is held by server n.
struct LayerPrecoder {
  std::size_t layer = 0;  // 1-based
  std::size_t lower = 0;  // I_layer
  std::size_t upper = 0;  // I_{layer+1}
  Matrix generator;       // N*B x T*B, top T block rows identity
  Matrix interference;    // (N-E)*B x (T-E)*B, [I ; M blocks]
  /// M_{i,j} for i in [0, N-T), j in [0, T-E), stored at i * (T-E) + j.
  std::vector<Matrix> blocks;
  /// Rows of `interference` observed directly from pure-interference sums,
  /// in the order the decoder stacks them (projection-major, then position).
  std::vector<std::size_t> exposed_rows;
  Matrix exposed_inverse;
  MdsCertificate mds;

  std::size_t block() const { return lower + upper; }
};

struct PrecodingBundle {
  SchemeParams params;
  DerivedCounts counts;
  NoiseCode noise;
  /// N*L_n x L' precoder of the desired message; row (n-1)*L_n + s feeds
  /// the s-th mixture of the desired message at server n.
  Matrix desired;
  /// Set when `desired` = base (x) I_{L_n}.
  std::optional<Matrix> desired_base;
  std::vector<LayerPrecoder> layers;  // one per layer pair, K - 1 entries
  std::uint64_t desired_attempts = 1;
  std::uint64_t pair_attempts = 0;
};

struct PrecodingOptions {
  std::optional<NoiseCode> noise;
  /// N x N_eff matrix expanded as base (x) I_{L_n}.
  std::optional<Matrix> desired_base;
  /// Full N*L_n x L' desired precoder; takes precedence over desired_base.
  std::optional<Matrix> desired;
  /// Per layer pair, the (N-T)*(T-E) blocks M_{i,j}; missing layers are drawn at random.
  std::vector<std::vector<Matrix>> interference_blocks;
  std::uint64_t resample_budget = 64;
  /// Field multiplications spent on the MDS check of each interference
  /// matrix. Every k-row subset is checked when C(m, k) k^3 fits, otherwise
  /// budget / k^3 uniformly drawn subsets.
  std::uint64_t mds_work_budget = 20000000;
  /// Resample random pair precoders until the (possibly sampled) MDS check passes.
  bool require_mds = true;
};

/// Subset count certify_mds may afford for a k-column matrix under a work budget.
std::uint64_t mds_subset_budget(std::size_t columns, std::uint64_t work_budget);

/// Builds all precoders for E < T < N. Injected parts must satisfy the
/// privacy and decodability conditions or InvalidParams is thrown; random
/// parts are redrawn until they do, up to the resample budget.
PrecodingBundle build_precoding(const SchemeParams& params, Rng& rng, const PrecodingOptions& options = {});

/// Pair generator assembled from the blocks M_{i,j} and the noise code's P.
Matrix assemble_pair_generator(const SchemeParams& params, std::size_t block, const std::vector<Matrix>& blocks,
                               const Matrix& p);
Matrix assemble_interference(const SchemeParams& params, std::size_t block, const std::vector<Matrix>& blocks);

/// Row-subset of `generator` formed by the given servers' blocks of `block` rows each.
Matrix server_rows(const Matrix& generator, std::span<const std::size_t> servers, std::size_t block);

/// First T-subset (0-based servers) whose desired rows are rank deficient.
std::optional<std::vector<std::size_t>> desired_privacy_violation(const PrecodingBundle& bundle);
/// First T-subset whose pair-precoder block rows are singular, for one layer pair.
std::optional<std::vector<std::size_t>> pair_privacy_violation(const SchemeParams& params, const LayerPrecoder& layer);

enum class DecodeMode { kFaithful, kRetry };

const char* to_string(DecodeMode m);

struct SessionOptions {
  DecodeMode mode = DecodeMode::kFaithful;
  std::uint64_t retry_budget = 64;
  PrecodingOptions precoding;
  /// Replaces the sampled mixing matrices U_1..U_K (each L' x L').
  std::optional<std::vector<Matrix>> mixing;
};

/// Per-server coefficient rows: row r holds, for each message k, the L'
/// coefficients at columns [(k-1) L', k L'), zero when k is absent from the row's type.
struct QueryPlan {
  std::size_t messages = 0;
  std::size_t extended_length = 0;
  std::vector<Matrix> servers;

  std::span<const std::uint64_t> coefficients(std::size_t server, std::size_t row, std::size_t message) const {
    return servers[server - 1].row(row).subspan((message - 1) * extended_length, extended_length);
  }
};

/// S: row r holds the E noise symbols mixed into query row r.
struct CommonRandomness {
  Matrix symbols;  // D_n x E
};

CommonRandomness draw_common_randomness(const SchemeParams& params, const DerivedCounts& counts, Rng& rng);

struct RetrievalSession {
  SchemeParams params;
  DerivedCounts counts;
  IndexMap index;
  std::size_t desired = 1;
  PrecodingBundle bundle;
  std::vector<Matrix> mixing;  // U_k, L' x L'
  /// For each message k and each layer pair (layer, type rank) it is undesired in,
  /// the first row of U_k used; the pair consumes T*B consecutive rows.
  std::vector<std::map<std::pair<std::size_t, std::size_t>, std::size_t>> cursors;
  std::vector<std::size_t> rows_used;  // rows of U_k consumed, per message
  QueryPlan queries;
  DecodeMode mode = DecodeMode::kFaithful;
  /// False in retry mode: resampling U_l conditions its distribution.
  bool privacy_certified = true;
  std::uint64_t mixing_resamples = 0;
  /// L x L system mapping the desired message to its cleaned combinations.
  Matrix desired_system;
  std::optional<Matrix> desired_inverse;
};

RetrievalSession open_session(const SchemeParams& params, std::size_t desired, Rng& rng,
                              const SessionOptions& options = {});
/// Reuses an existing bundle and samples fresh mixing matrices.
RetrievalSession open_session(PrecodingBundle bundle, std::size_t desired, Rng& rng,
                              const SessionOptions& options = {});

/// Messages are zero-padded to L' and concatenated, K*L' entries.
std::vector<std::uint64_t> pad_messages(const std::vector<std::vector<std::uint64_t>>& messages,
                                        std::size_t extended_length);

/// One answer symbol: <coefficients, padded messages> + <noise generator row, noise row>.
std::uint64_t answer_row(const PrimeField& field, std::span<const std::uint64_t> coefficients,
                         std::span<const std::uint64_t> padded_messages, std::span<const std::uint64_t> noise_row,
                         std::span<const std::uint64_t> noise_coefficients);

/// The D_n answers of server n (1-based).
std::vector<std::uint64_t> answer_query(std::size_t server, const Matrix& query,
                                        std::span<const std::uint64_t> padded_messages,
                                        const CommonRandomness& noise, const NoiseCode& code);

/// Recovers the desired message (L symbols) from all N answer vectors.
std::vector<std::uint64_t> decode(const RetrievalSession& session,
                                  const std::vector<std::vector<std::uint64_t>>& answers);

}  // namespace etpir
