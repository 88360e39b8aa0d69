#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include "etpir/audit.hpp"

namespace etpir {

enum class FrameType : std::uint8_t { kQuery = 0x01, kAnswer = 0x02, kError = 0x03 };

/// Codes carried in the single payload element of an error frame.
enum class WireError : std::uint64_t {
  kParamsMismatch = 1,
  kSequence = 2,
  kMalformed = 3,
  kShape = 4,
};

/// Magic "ETP1", type byte, K N T E q, payload length in bytes, sequence
/// number, then the payload elements; every integer is 8-byte little endian.
struct Frame {
  FrameType type = FrameType::kQuery;
  SchemeParams params;
  std::uint64_t seq = 0;
  std::vector<std::uint64_t> payload;

  friend bool operator==(const Frame&, const Frame&) = default;
};

inline constexpr std::size_t kFrameHeaderBytes = 4 + 1 + 5 * 8 + 8 + 8;

/// Bad magic, unknown type, truncated input or inconsistent length.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// The peer answered with an error frame.
class RemoteError : public ProtocolError {
 public:
  RemoteError(WireError code, const std::string& what) : ProtocolError(what), code(code) {}
  WireError code;
};

std::vector<std::uint8_t> encode_frame(const Frame& frame);
/// Payload length declared in a complete header; throws ProtocolError on a bad header.
std::uint64_t frame_payload_bytes(std::span<const std::uint8_t> header);
Frame decode_frame(std::span<const std::uint8_t> bytes);

/// Per-server public code data; the default codes when absent.
struct PublicCodes {
  std::optional<NoiseCode> noise;  // E < T
  std::optional<GrsCode> grs;      // E >= T
};

/// One replica: messages at rest, the seed shared with the other servers,
/// and the retrieval counter that keys the common randomness.
class ServerState {
 public:
  ServerState(SchemeParams params, std::size_t server, const std::vector<std::vector<std::uint64_t>>& messages,
              std::uint64_t shared_seed, const PublicCodes& codes = {});

  /// Handles one query frame and returns the answer or an error frame.
  Frame handle(const Frame& query);
  std::vector<std::uint8_t> handle_bytes(std::span<const std::uint8_t> bytes);

  std::size_t server() const { return server_; }
  std::uint64_t retrievals() const { return counter_; }
  /// E noise symbols for query row `row` of retrieval `counter`.
  std::vector<std::uint64_t> noise_row(std::uint64_t counter, std::uint64_t row) const;

 private:
  Frame error(const Frame& query, WireError code) const;

  SchemeParams params_;
  std::size_t server_;
  std::uint64_t seed_;
  std::size_t row_length_ = 0;  // elements per query payload
  std::size_t rows_ = 0;        // query rows per retrieval
  std::vector<std::uint64_t> padded_;
  std::vector<std::uint64_t> noise_coefficients_;  // C_S[n, :] or G[:, n]
  std::uint64_t counter_ = 0;
  std::optional<std::uint64_t> next_seq_;
  std::mutex mutex_;
};

enum class Transport { kInProcess, kTcpLoopback };

const char* to_string(Transport t);

enum class Direction { kToServer, kToUser };

struct DeploymentOptions {
  Transport transport = Transport::kInProcess;
  std::uint64_t shared_seed = 1;
  PublicCodes codes;
  /// Observes every frame on the wire (server is 1-based).
  std::function<void(std::size_t server, Direction, std::span<const std::uint8_t>)> tap;
  /// May rewrite frames in flight; runs before the tap.
  std::function<void(std::size_t server, Direction, std::vector<std::uint8_t>&)> interceptor;
};

/// N servers holding the same messages, reachable in process or over
/// loopback TCP with one listening thread per server.
class Deployment {
 public:
  Deployment(SchemeParams params, const std::vector<std::vector<std::uint64_t>>& messages,
             DeploymentOptions options = {});
  ~Deployment();
  Deployment(const Deployment&) = delete;
  Deployment& operator=(const Deployment&) = delete;

  const SchemeParams& params() const { return params_; }
  const DeploymentOptions& options() const { return options_; }
  std::size_t servers() const { return params_.servers; }
  /// Loopback port of server n (tcp only).
  std::uint16_t port(std::size_t server) const;

  /// Sends the frames to server n in order over one connection and returns
  /// the raw responses, one per frame.
  std::vector<std::vector<std::uint8_t>> exchange(std::size_t server,
                                                  const std::vector<std::vector<std::uint8_t>>& frames);

 private:
  struct Impl;
  SchemeParams params_;
  DeploymentOptions options_;
  std::unique_ptr<Impl> impl_;
};

struct RetrieveOptions {
  DecodeMode mode = DecodeMode::kFaithful;
  PublicCodes codes;
};

struct RetrievalOutcome {
  SchemeParams params;
  Regime regime = Regime::kLowEavesdrop;
  std::size_t desired = 1;
  std::optional<std::vector<std::uint64_t>> message;  // empty on an epsilon-error event
  std::uint64_t downloads = 0;      // answer symbols
  std::uint64_t upload_symbols = 0; // query elements sent
  std::uint64_t bytes_sent = 0;
  std::uint64_t bytes_received = 0;
  DecodeMode mode = DecodeMode::kFaithful;
  bool privacy_certified = true;
  /// Coefficients of every query frame, per server (rows are frames).
  std::vector<Matrix> queries;
};

/// Queries all servers concurrently, joins on every answer, checks each
/// answer's sequence number against its query and decodes.
RetrievalOutcome retrieve(Deployment& deployment, std::size_t desired, Rng& rng, const RetrieveOptions& options = {});

/// Linear view an eavesdropper on the given servers (0-based) reconstructs
/// from captured query frames and the public noise code.
LinearScheme tapped_scheme(const SchemeParams& params, const std::vector<std::size_t>& servers,
                           const std::vector<std::vector<Frame>>& captured_queries, const PublicCodes& codes = {});

/// Message length each server stores: L.
std::size_t stored_message_length(const SchemeParams& params);
std::vector<std::vector<std::uint64_t>> random_messages(const SchemeParams& params, Rng& rng);

/// msg_1.bin .. msg_K.bin (8-byte little-endian elements) plus messages.json.
void save_messages(const std::filesystem::path& dir, const SchemeParams& params,
                   const std::vector<std::vector<std::uint64_t>>& messages);
std::pair<SchemeParams, std::vector<std::vector<std::uint64_t>>> load_messages(const std::filesystem::path& dir);

}  // namespace etpir
