#include "etpir/net.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <future>
#include <thread>

namespace etpir {

namespace {

constexpr std::uint8_t kMagic[4] = {'E', 'T', 'P', '1'};
constexpr std::uint64_t kMaxPayloadBytes = std::uint64_t{1} << 28;

void put64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  const auto b = encode_le64(v);
  out.insert(out.end(), b.begin(), b.end());
}

std::uint64_t get64(std::span<const std::uint8_t> bytes, std::size_t offset) {
  return decode_le64(bytes.subspan(offset, 8));
}

std::string errno_text(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

bool read_exact(int fd, std::uint8_t* buf, std::size_t n) {
  std::size_t got = 0;
  while (got < n) {
    const ssize_t r = ::recv(fd, buf + got, n - got, 0);
    if (r == 0) return false;
    if (r < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    got += static_cast<std::size_t>(r);
  }
  return true;
}

bool write_all(int fd, std::span<const std::uint8_t> bytes) {
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    const ssize_t r = ::send(fd, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (r < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    sent += static_cast<std::size_t>(r);
  }
  return true;
}

// Reads one frame; nullopt on a clean end of stream.
std::optional<std::vector<std::uint8_t>> read_frame(int fd) {
  std::vector<std::uint8_t> buf(kFrameHeaderBytes);
  if (!read_exact(fd, buf.data(), buf.size())) return std::nullopt;
  const std::uint64_t len = frame_payload_bytes(buf);
  buf.resize(kFrameHeaderBytes + len);
  if (len && !read_exact(fd, buf.data() + kFrameHeaderBytes, len)) throw ProtocolError("stream ended inside a frame");
  return buf;
}

}  // namespace

std::vector<std::uint8_t> encode_frame(const Frame& f) {
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  out.reserve(kFrameHeaderBytes + 8 * f.payload.size());
  out.push_back(static_cast<std::uint8_t>(f.type));
  for (std::uint64_t v : {f.params.messages, f.params.servers, f.params.collusion, f.params.eavesdropped,
                          f.params.modulus})
    put64(out, v);
  put64(out, 8 * f.payload.size());
  put64(out, f.seq);
  for (std::uint64_t v : f.payload) put64(out, v);
  return out;
}

std::uint64_t frame_payload_bytes(std::span<const std::uint8_t> header) {
  if (header.size() < kFrameHeaderBytes) throw ProtocolError("truncated frame header");
  if (!std::equal(kMagic, kMagic + 4, header.begin())) throw ProtocolError("bad magic");
  const std::uint8_t type = header[4];
  if (type < 0x01 || type > 0x03) throw ProtocolError("unknown frame type " + std::to_string(type));
  const std::uint64_t len = get64(header, 45);
  if (len % 8 != 0) throw ProtocolError("payload length is not a whole number of elements");
  if (len > kMaxPayloadBytes) throw ProtocolError("payload too large");
  return len;
}

Frame decode_frame(std::span<const std::uint8_t> bytes) {
  const std::uint64_t len = frame_payload_bytes(bytes);
  if (bytes.size() != kFrameHeaderBytes + len) throw ProtocolError("frame length does not match its header");
  Frame f;
  f.type = static_cast<FrameType>(bytes[4]);
  f.params = {get64(bytes, 5), get64(bytes, 13), get64(bytes, 21), get64(bytes, 29), get64(bytes, 37)};
  f.seq = get64(bytes, 53);
  for (std::size_t off = kFrameHeaderBytes; off < bytes.size(); off += 8) f.payload.push_back(get64(bytes, off));
  return f;
}

ServerState::ServerState(SchemeParams params, std::size_t server,
                         const std::vector<std::vector<std::uint64_t>>& messages, std::uint64_t shared_seed,
                         const PublicCodes& codes)
    : params_(params), server_(server), seed_(shared_seed) {
  params_.validate();
  if (server < 1 || server > params_.servers) throw InvalidParams("server index out of range");
  const DerivedCounts c = derive_counts(params_);
  if (messages.size() != params_.messages) throw InvalidParams("need K messages");
  for (const auto& m : messages) {
    if (m.size() != c.message_length) throw InvalidParams("each message must hold L symbols");
    for (std::uint64_t v : m)
      if (v >= params_.modulus) throw InvalidParams("message symbol is not a field element");
  }
  const PrimeField f = params_.field();
  if (params_.regime() == Regime::kLowEavesdrop) {
    row_length_ = params_.messages * c.extended_length;
    rows_ = c.downloads_per_server;
    padded_ = pad_messages(messages, c.extended_length);
    const NoiseCode code = codes.noise ? *codes.noise : build_noise_code(params_.servers, params_.eavesdropped, f);
    noise_coefficients_.assign(code.generator.row(server - 1).begin(), code.generator.row(server - 1).end());
  } else {
    row_length_ = params_.messages * c.message_length;
    rows_ = 1;
    for (const auto& m : messages) padded_.insert(padded_.end(), m.begin(), m.end());
    const GrsCode grs = codes.grs ? *codes.grs : default_high_code(params_);
    for (std::size_t j = 0; j < grs.rows(); ++j) noise_coefficients_.push_back(grs.generator(j, server - 1));
  }
}

std::vector<std::uint64_t> ServerState::noise_row(std::uint64_t counter, std::uint64_t row) const {
  Rng rng(mix_seed({seed_, counter, row}));
  const PrimeField f = params_.field();
  std::vector<std::uint64_t> s(params_.eavesdropped);
  for (auto& v : s) v = rng.uniform(f);
  return s;
}

Frame ServerState::error(const Frame& query, WireError code) const {
  return Frame{FrameType::kError, params_, query.seq, {static_cast<std::uint64_t>(code)}};
}

Frame ServerState::handle(const Frame& query) {
  std::lock_guard lock(mutex_);
  if (query.type != FrameType::kQuery) return error(query, WireError::kMalformed);
  if (!(query.params == params_)) return error(query, WireError::kParamsMismatch);
  if (query.payload.size() != row_length_) return error(query, WireError::kShape);
  for (std::uint64_t v : query.payload)
    if (v >= params_.modulus) return error(query, WireError::kMalformed);
  if (query.seq >= rows_) return error(query, WireError::kSequence);
  if (query.seq == 0) {
    ++counter_;
  } else if (next_seq_ != query.seq) {
    next_seq_.reset();
    return error(query, WireError::kSequence);
  }
  next_seq_ = query.seq + 1;
  const PrimeField f = params_.field();
  const std::vector<std::uint64_t> s = noise_row(counter_, query.seq);
  const std::uint64_t a = f.add(dot(f, query.payload, padded_), dot(f, noise_coefficients_, s));
  return Frame{FrameType::kAnswer, params_, query.seq, {a}};
}

std::vector<std::uint8_t> ServerState::handle_bytes(std::span<const std::uint8_t> bytes) {
  Frame query;
  try {
    query = decode_frame(bytes);
  } catch (const Error&) {
    return encode_frame(Frame{FrameType::kError, params_, 0, {static_cast<std::uint64_t>(WireError::kMalformed)}});
  }
  return encode_frame(handle(query));
}

const char* to_string(Transport t) { return t == Transport::kInProcess ? "inproc" : "tcp"; }

struct Deployment::Impl {
  std::vector<std::unique_ptr<ServerState>> states;
  std::vector<int> listeners;
  std::vector<std::uint16_t> ports;
  std::vector<std::thread> threads;
  std::atomic<bool> stopping{false};
  std::mutex hook_mutex;

  void serve(std::size_t index) {
    const int lfd = listeners[index];
    while (!stopping.load()) {
      const int c = ::accept(lfd, nullptr, nullptr);
      if (c < 0) {
        if (stopping.load()) return;
        continue;
      }
      try {
        while (auto frame = read_frame(c)) {
          const std::vector<std::uint8_t> reply = states[index]->handle_bytes(*frame);
          if (!write_all(c, reply)) break;
        }
      } catch (const ProtocolError&) {
        write_all(c, states[index]->handle_bytes({}));
      }
      ::close(c);
    }
  }
};

Deployment::Deployment(SchemeParams params, const std::vector<std::vector<std::uint64_t>>& messages,
                       DeploymentOptions options)
    : params_(params), options_(std::move(options)), impl_(std::make_unique<Impl>()) {
  for (std::size_t n = 1; n <= params_.servers; ++n)
    impl_->states.push_back(
        std::make_unique<ServerState>(params_, n, messages, options_.shared_seed, options_.codes));
  if (options_.transport == Transport::kInProcess) return;
  for (std::size_t n = 0; n < params_.servers; ++n) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw Error(errno_text("socket"));
    impl_->listeners.push_back(fd);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(fd, 8) < 0)
      throw Error(errno_text("bind"));
    socklen_t len = sizeof addr;
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    impl_->ports.push_back(ntohs(addr.sin_port));
  }
  for (std::size_t n = 0; n < params_.servers; ++n) impl_->threads.emplace_back([this, n] { impl_->serve(n); });
}

Deployment::~Deployment() {
  impl_->stopping.store(true);
  for (int fd : impl_->listeners) {
    ::shutdown(fd, SHUT_RDWR);
    ::close(fd);
  }
  for (auto& t : impl_->threads) t.join();
}

std::uint16_t Deployment::port(std::size_t server) const {
  if (options_.transport != Transport::kTcpLoopback) throw Error("in-process deployment has no ports");
  return impl_->ports.at(server - 1);
}

std::vector<std::vector<std::uint8_t>> Deployment::exchange(std::size_t server,
                                                            const std::vector<std::vector<std::uint8_t>>& frames) {
  if (server < 1 || server > params_.servers) throw InvalidParams("server index out of range");
  const auto hook = [&](Direction d, std::vector<std::uint8_t>& bytes) {
    if (!options_.interceptor && !options_.tap) return;
    std::lock_guard lock(impl_->hook_mutex);
    if (options_.interceptor) options_.interceptor(server, d, bytes);
    if (options_.tap) options_.tap(server, d, bytes);
  };
  std::vector<std::vector<std::uint8_t>> outgoing = frames;
  for (auto& f : outgoing) hook(Direction::kToServer, f);

  std::vector<std::vector<std::uint8_t>> replies;
  if (options_.transport == Transport::kInProcess) {
    for (const auto& f : outgoing) replies.push_back(impl_->states[server - 1]->handle_bytes(f));
  } else {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw Error(errno_text("socket"));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(impl_->ports[server - 1]);
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
      ::close(fd);
      throw Error(errno_text("connect"));
    }
    try {
      for (const auto& f : outgoing) {
        if (!write_all(fd, f)) throw ProtocolError(errno_text("send"));
        auto reply = read_frame(fd);
        if (!reply) throw ProtocolError("server closed the connection");
        replies.push_back(std::move(*reply));
      }
    } catch (...) {
      ::close(fd);
      throw;
    }
    ::close(fd);
  }
  for (auto& r : replies) hook(Direction::kToUser, r);
  return replies;
}

namespace {

std::vector<std::uint64_t> collect_answers(const SchemeParams& params, std::size_t server,
                                           const std::vector<std::vector<std::uint8_t>>& replies,
                                           std::uint64_t& bytes_received) {
  std::vector<std::uint64_t> out;
  for (std::size_t r = 0; r < replies.size(); ++r) {
    bytes_received += replies[r].size();
    const Frame f = decode_frame(replies[r]);
    if (f.type == FrameType::kError) {
      const WireError code = f.payload.empty() ? WireError::kMalformed : static_cast<WireError>(f.payload[0]);
      throw RemoteError(code, "server " + std::to_string(server) + " rejected row " + std::to_string(r) +
                                  " with error " + std::to_string(static_cast<std::uint64_t>(code)));
    }
    if (f.type != FrameType::kAnswer || !(f.params == params) || f.payload.size() != 1)
      throw ProtocolError("server " + std::to_string(server) + " sent a malformed answer");
    if (f.seq != r)
      throw ProtocolError("server " + std::to_string(server) + ": answer " + std::to_string(f.seq) +
                          " arrived in slot " + std::to_string(r));
    if (f.payload[0] >= params.modulus) throw ProtocolError("answer symbol is not a field element");
    out.push_back(f.payload[0]);
  }
  return out;
}

}  // namespace

RetrievalOutcome retrieve(Deployment& deployment, std::size_t desired, Rng& rng, const RetrieveOptions& options) {
  const SchemeParams params = deployment.params();
  const std::size_t N = params.servers;
  RetrievalOutcome out;
  out.params = params;
  out.regime = params.regime();
  out.desired = desired;
  out.mode = options.mode;

  std::optional<RetrievalSession> low;
  std::optional<HighSession> high;
  if (out.regime == Regime::kLowEavesdrop) {
    SessionOptions o;
    o.mode = options.mode;
    o.precoding.noise = options.codes.noise;
    low = open_session(params, desired, rng, o);
    out.privacy_certified = low->privacy_certified;
    out.queries = low->queries.servers;
  } else {
    HighSessionOptions o;
    o.grs = options.codes.grs;
    high = open_high_session(params, desired, rng, o);
    for (std::size_t n = 0; n < N; ++n) out.queries.push_back(high->queries.select_rows(std::vector<std::size_t>{n}));
  }

  std::vector<std::vector<std::vector<std::uint8_t>>> frames(N);
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t r = 0; r < out.queries[n].rows(); ++r) {
      const auto row = out.queries[n].row(r);
      frames[n].push_back(encode_frame(Frame{FrameType::kQuery, params, r, {row.begin(), row.end()}}));
      out.bytes_sent += frames[n].back().size();
      out.upload_symbols += row.size();
    }

  std::vector<std::future<std::vector<std::vector<std::uint8_t>>>> pending;
  for (std::size_t n = 0; n < N; ++n)
    pending.push_back(std::async(std::launch::async, [&deployment, &frames, n] {
      return deployment.exchange(n + 1, frames[n]);
    }));
  std::vector<std::vector<std::vector<std::uint8_t>>> replies;
  for (auto& p : pending) replies.push_back(p.get());

  std::vector<std::vector<std::uint64_t>> answers;
  for (std::size_t n = 0; n < N; ++n) {
    answers.push_back(collect_answers(params, n + 1, replies[n], out.bytes_received));
    out.downloads += answers.back().size();
  }

  if (low) {
    try {
      out.message = decode(*low, answers);
    } catch (const DecodeSingular&) {
      out.message.reset();
    }
  } else {
    std::vector<std::uint64_t> flat;
    for (const auto& a : answers) flat.push_back(a.at(0));
    out.message = high_decode(*high, flat);
  }
  return out;
}

LinearScheme tapped_scheme(const SchemeParams& params, const std::vector<std::size_t>& servers,
                           const std::vector<std::vector<Frame>>& captured, const PublicCodes& codes) {
  if (captured.size() != servers.size()) throw InvalidParams("one capture per tapped server");
  const PrimeField f = params.field();
  const DerivedCounts c = derive_counts(params);
  const std::size_t K = params.messages, E = params.eavesdropped, L = c.message_length;
  const bool low = params.regime() == Regime::kLowEavesdrop;
  const std::size_t stride = low ? c.extended_length : L;
  const std::size_t rows = low ? c.downloads_per_server : 1;
  LinearScheme ls;
  ls.params = params;
  ls.message_length = L;
  ls.noise_symbols = rows * E;
  // Servers that were not tapped contribute empty maps.
  ls.message_maps.assign(params.servers, Matrix(f, 0, K * L));
  ls.noise_maps.assign(params.servers, Matrix(f, 0, ls.noise_symbols));
  for (std::size_t i = 0; i < servers.size(); ++i) {
    const std::size_t n = servers[i];
    std::vector<std::uint64_t> coef;
    if (low) {
      const NoiseCode code = codes.noise ? *codes.noise : build_noise_code(params.servers, E, f);
      coef.assign(code.generator.row(n).begin(), code.generator.row(n).end());
    } else {
      const GrsCode grs = codes.grs ? *codes.grs : default_high_code(params);
      for (std::size_t j = 0; j < E; ++j) coef.push_back(grs.generator(j, n));
    }
    Matrix mw(f, captured[i].size(), K * L);
    Matrix ms(f, captured[i].size(), ls.noise_symbols);
    for (std::size_t r = 0; r < captured[i].size(); ++r) {
      const Frame& fr = captured[i][r];
      if (fr.type != FrameType::kQuery || fr.payload.size() != K * stride || fr.seq >= rows)
        throw ProtocolError("captured frame is not a query of this scheme");
      for (std::size_t k = 0; k < K; ++k)
        for (std::size_t j = 0; j < L; ++j) mw(r, k * L + j) = fr.payload[k * stride + j];
      for (std::size_t e = 0; e < E; ++e) ms(r, fr.seq * E + e) = coef[e];
    }
    ls.message_maps[n] = std::move(mw);
    ls.noise_maps[n] = std::move(ms);
  }
  return ls;
}

std::size_t stored_message_length(const SchemeParams& params) { return derive_counts(params).message_length; }

std::vector<std::vector<std::uint64_t>> random_messages(const SchemeParams& params, Rng& rng) {
  const PrimeField f = params.field();
  std::vector<std::vector<std::uint64_t>> w(params.messages, std::vector<std::uint64_t>(stored_message_length(params)));
  for (auto& m : w)
    for (auto& v : m) v = rng.uniform(f);
  return w;
}

void save_messages(const std::filesystem::path& dir, const SchemeParams& params,
                   const std::vector<std::vector<std::uint64_t>>& messages) {
  std::filesystem::create_directories(dir);
  for (std::size_t k = 0; k < messages.size(); ++k) {
    std::ofstream os(dir / ("msg_" + std::to_string(k + 1) + ".bin"), std::ios::binary);
    for (std::uint64_t v : messages[k]) {
      const auto b = encode_le64(v);
      os.write(reinterpret_cast<const char*>(b.data()), 8);
    }
    if (!os) throw Error("cannot write message file");
  }
  const nlohmann::json side = {{"schema", "messages_v1"},
                               {"K", params.messages},
                               {"N", params.servers},
                               {"T", params.collusion},
                               {"E", params.eavesdropped},
                               {"q", params.modulus},
                               {"L", messages.empty() ? 0 : messages[0].size()}};
  std::ofstream(dir / "messages.json") << side.dump(2) << "\n";
}

std::pair<SchemeParams, std::vector<std::vector<std::uint64_t>>> load_messages(const std::filesystem::path& dir) {
  std::ifstream js(dir / "messages.json");
  if (!js) throw Error("missing messages.json in " + dir.string());
  const nlohmann::json side = nlohmann::json::parse(js);
  const SchemeParams p{side.at("K").get<std::uint64_t>(), side.at("N").get<std::uint64_t>(),
                       side.at("T").get<std::uint64_t>(), side.at("E").get<std::uint64_t>(),
                       side.at("q").get<std::uint64_t>()};
  const std::size_t L = side.at("L").get<std::size_t>();
  const PrimeField f = p.field();
  std::vector<std::vector<std::uint64_t>> w;
  for (std::size_t k = 1; k <= p.messages; ++k) {
    std::ifstream is(dir / ("msg_" + std::to_string(k) + ".bin"), std::ios::binary);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    if (bytes.size() != 8 * L) throw Error("msg_" + std::to_string(k) + ".bin does not hold L elements");
    std::vector<std::uint64_t> m;
    for (std::size_t i = 0; i < L; ++i)
      m.push_back(decode_element(f, std::span<const std::uint8_t>(bytes).subspan(8 * i, 8)).value());
    w.push_back(std::move(m));
  }
  return {p, w};
}

}  // namespace etpir
