#include "etpir/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "CLI11.hpp"
#include "etpir/net.hpp"

namespace etpir {

namespace {

using nlohmann::json;

struct Common {
  std::uint64_t K = 0, N = 0, T = 0, E = 0;
  std::uint64_t q = kDefaultModulus;
  std::uint64_t seed = 1;
  std::string mode = "faithful";
  bool retry = false;
  CLI::Option* seed_opt = nullptr;

  SchemeParams params() const { return {K, N, T, E, q}; }
  DecodeMode decode_mode() const { return retry || mode == "retry" ? DecodeMode::kRetry : DecodeMode::kFaithful; }
  std::uint64_t resolved_seed() const {
    if (seed_opt && seed_opt->count() > 0) return seed;
    if (const char* env = std::getenv("ETPIR_SEED")) {
      try {
        return std::stoull(env);
      } catch (const std::exception&) {
        throw CLI::ValidationError("ETPIR_SEED", "must be an unsigned integer");
      }
    }
    return seed;
  }
};

void add_params(CLI::App* app, Common& c, bool with_q = true) {
  app->add_option("-K,--messages", c.K, "number of messages")->required();
  app->add_option("-N,--servers", c.N, "number of servers")->required();
  app->add_option("-T,--collusion", c.T, "colluding servers")->required();
  app->add_option("-E,--eavesdropped", c.E, "eavesdropped links")->required();
  if (with_q) app->add_option("-q,--modulus", c.q, "prime field size");
}

void add_seed(CLI::App* app, Common& c) {
  c.seed_opt = app->add_option("--seed", c.seed, "RNG seed (falls back to ETPIR_SEED)");
}

void add_mode(CLI::App* app, Common& c) {
  app->add_option("--mode", c.mode, "decode mode")->check(CLI::IsMember({"faithful", "retry"}));
  app->add_flag("--retry", c.retry, "same as --mode retry");
}

json params_json(const SchemeParams& p) {
  return {{"K", p.messages}, {"N", p.servers}, {"T", p.collusion}, {"E", p.eavesdropped}, {"q", p.modulus}};
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) rows.push_back(std::vector<std::uint64_t>(m.row(r).begin(), m.row(r).end()));
  return rows;
}

json mds_json(const MdsCertificate& c) {
  json j = {{"ok", c.ok},
            {"exhaustive", c.exhaustive},
            {"subsets_checked", c.subsets_checked},
            {"subsets_total", c.subsets_total}};
  if (!c.witness.empty()) j["witness"] = c.witness;
  return j;
}

json envelope(const char* command) { return {{"schema", "report_v1"}, {"command", command}}; }

void write_matrix(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream os(path);
  write_text(os, m);
  if (!os) throw Error("cannot write " + path.string());
}

int run_capacity(const Common& c, std::ostream& out) {
  const SchemeParams p = c.params();
  json j = envelope("capacity");
  j["params"] = params_json(p);
  j["capacity"] = to_string(capacity(p));
  j["rho_min"] = to_string(rho_min(p));
  if (p.collusion < p.servers && p.eavesdropped < p.servers) j["counts"] = counts_json(p, derive_counts(p));
  out << j.dump(2) << "\n";
  return 0;
}

int run_plan(const Common& c, std::ostream& out) {
  const SchemeParams p = c.params();
  p.validate();
  const DerivedCounts counts = derive_counts(p);
  json j = envelope("plan");
  j["params"] = params_json(p);
  j["capacity"] = to_string(capacity(p));
  j["rho_min"] = to_string(rho_min(p));
  j["counts"] = counts_json(p, counts);
  if (p.regime() == Regime::kLowEavesdrop) {
    const IndexMap index = build_index_map(p, counts);
    json rows = json::array();
    for (const QueryRow& r : index.rows())
      rows.push_back({{"layer", r.layer}, {"type", r.members}, {"type_index", r.type_index}, {"position", r.position}});
    j["rows"] = rows;
  } else {
    j["rows"] = json::array({{{"layer", 0}, {"type", "masked unit vector"}, {"position", 0}}});
  }
  out << j.dump(2) << "\n";
  return 0;
}

int run_codes(const Common& c, std::ostream& out) {
  const SchemeParams p = c.params();
  p.validate();
  const PrimeField f = p.field();
  json j = envelope("codes");
  j["params"] = params_json(p);
  if (p.regime() == Regime::kLowEavesdrop) {
    const NoiseCode code = build_noise_code(p.servers, p.eavesdropped, f);
    j["C_S"] = matrix_json(code.generator);
    j["H_S"] = matrix_json(code.parity);
    j["P"] = matrix_json(code.p);
    j["H_S_C_S_zero"] = code.parity * code.generator == Matrix(f, p.servers - p.eavesdropped, p.eavesdropped);
    if (p.collusion <= p.servers - p.eavesdropped)
      j["G_desired"] = matrix_json(build_desired_generator(p.servers, p.eavesdropped, f));
    else
      j["G_desired"] = "random (T > N - E)";
  } else {
    const GrsCode grs = default_high_code(p);
    j["G"] = matrix_json(grs.generator);
    j["points"] = grs.points;
    j["point_at_infinity"] = grs.point_at_infinity;
    j["answer_matrix"] = matrix_json(grs_answer_matrix(grs));
  }
  out << j.dump(2) << "\n";
  return 0;
}

int run_build(const Common& c, const std::string& out_dir, std::ostream& out) {
  const SchemeParams p = c.params();
  p.validate();
  Rng rng(c.resolved_seed());
  json j = envelope("build");
  j["params"] = params_json(p);
  j["seed"] = c.resolved_seed();
  const std::filesystem::path dir(out_dir);
  if (!out_dir.empty()) std::filesystem::create_directories(dir);
  bool ok = true;
  if (p.regime() == Regime::kLowEavesdrop) {
    const PrecodingBundle b = build_precoding(p, rng);
    j["desired_attempts"] = b.desired_attempts;
    j["pair_attempts"] = b.pair_attempts;
    j["noise_mds"] = is_mds(b.noise.generator);
    j["desired_fingerprint"] = fingerprint(b.desired);
    json layers = json::array();
    for (const LayerPrecoder& lp : b.layers) {
      layers.push_back({{"layer", lp.layer},
                        {"block", lp.block()},
                        {"generator_fingerprint", fingerprint(lp.generator)},
                        {"interference_shape", {lp.interference.rows(), lp.interference.cols()}},
                        {"mds", mds_json(lp.mds)}});
      ok = ok && lp.mds.ok;
    }
    j["layers"] = layers;
    const StructuralPrivacy sp = check_privacy_structural(b);
    j["privacy_structural"] = sp.pass;
    ok = ok && sp.pass;
    if (!out_dir.empty()) {
      write_matrix(dir / "noise_generator.txt", b.noise.generator);
      write_matrix(dir / "noise_parity.txt", b.noise.parity);
      write_matrix(dir / "desired.txt", b.desired);
      for (const LayerPrecoder& lp : b.layers) {
        write_matrix(dir / ("pair_generator_" + std::to_string(lp.layer) + ".txt"), lp.generator);
        write_matrix(dir / ("interference_" + std::to_string(lp.layer) + ".txt"), lp.interference);
      }
    }
  } else {
    const GrsCode grs = default_high_code(p);
    j["G"] = matrix_json(grs.generator);
    j["mds"] = is_mds(grs.generator.transpose());
    ok = j["mds"].get<bool>();
    if (!out_dir.empty()) write_matrix(dir / "grs_generator.txt", grs.generator);
  }
  j["pass"] = ok;
  out << j.dump(2) << "\n";
  return ok ? 0 : 1;
}

int run_retrieve(const Common& c, std::size_t desired, const std::string& transport, const std::string& messages_dir,
                 const std::string& save_dir, std::ostream& out) {
  Rng rng(c.resolved_seed());
  SchemeParams p = c.params();
  std::vector<std::vector<std::uint64_t>> messages;
  if (!messages_dir.empty()) {
    auto loaded = load_messages(messages_dir);
    if (!(loaded.first == p)) throw InvalidParams("stored messages were written for different parameters");
    messages = std::move(loaded.second);
  } else {
    p.validate();
    messages = random_messages(p, rng);
  }
  if (!save_dir.empty()) save_messages(save_dir, p, messages);
  DeploymentOptions o;
  o.transport = transport == "tcp" ? Transport::kTcpLoopback : Transport::kInProcess;
  o.shared_seed = mix_seed({c.resolved_seed(), 0x5eed});
  Deployment d(p, messages, o);
  RetrieveOptions ro;
  ro.mode = c.decode_mode();
  const RetrievalOutcome r = retrieve(d, desired, rng, ro);
  const bool ok = r.message && *r.message == messages.at(desired - 1);
  json j = envelope("retrieve");
  j["params"] = params_json(p);
  j["transport"] = to_string(o.transport);
  j["desired"] = desired;
  j["regime"] = to_string(r.regime);
  j["mode"] = to_string(r.mode);
  j["privacy_certified"] = r.privacy_certified;
  j["decoded"] = r.message.has_value();
  j["epsilon_error"] = !r.message.has_value();
  j["recovered"] = ok;
  j["message_length"] = messages.at(desired - 1).size();
  j["downloads"] = r.downloads;
  j["upload_symbols"] = r.upload_symbols;
  j["bytes_sent"] = r.bytes_sent;
  j["bytes_received"] = r.bytes_received;
  j["rate"] = to_string(Rational(messages.at(desired - 1).size(), r.downloads));
  j["capacity"] = to_string(capacity(p));
  out << j.dump(2) << "\n";
  return ok ? 0 : 1;
}

int run_audit_cmd(const Common& c, std::size_t desired, std::uint64_t trials, std::ostream& out) {
  AuditOptions o;
  o.seed = c.resolved_seed();
  o.mode = c.decode_mode();
  o.trials = trials;
  o.desired = desired;
  const AuditReport rep = run_audit(c.params(), o);
  json j = to_json(rep);
  j["command"] = "audit";
  j["seed"] = o.seed;
  out << j.dump(2) << "\n";
  return rep.pass ? 0 : 1;
}

int run_sweep(const Common& c, std::uint64_t max_n, std::uint64_t max_k, bool build, std::uint64_t max_extended,
              std::ostream& out) {
  if (max_n < 2 || max_k < 1) throw InvalidParams("sweep needs --max-n >= 2 and --max-k >= 1");
  Rng rng(c.resolved_seed());
  json rows = json::array();
  bool all = true;
  for (std::uint64_t K = 1; K <= max_k; ++K)
    for (std::uint64_t N = 2; N <= max_n; ++N)
      for (std::uint64_t T = 1; T < N; ++T)
        for (std::uint64_t E = 0; E < N; ++E) {
          const SchemeParams p{K, N, T, E, c.q};
          const DerivedCounts counts = derive_counts(p);
          const Rational cap = capacity(p), rho_lo = rho_min(p);
          Rational rate = counts.rate(p), rho = counts.rho(p);
          bool built = false;
          if (build && counts.extended_length <= max_extended) {
            LinearScheme ls;
            if (p.regime() == Regime::kLowEavesdrop)
              ls = linear_scheme(open_session(p, 1, rng));
            else
              ls = linear_scheme(open_high_session(p, 1, rng));
            const RateAudit a = audit_rate_and_rho(ls);
            rate = a.rate;
            rho = a.rho;
            built = true;
          }
          const bool equal = rate == cap && rho == rho_lo;
          all = all && equal && rate <= cap && rho >= rho_lo;
          rows.push_back({{"K", K},
                          {"N", N},
                          {"T", T},
                          {"E", E},
                          {"regime", to_string(p.regime())},
                          {"capacity", to_string(cap)},
                          {"achieved_rate", to_string(rate)},
                          {"rho_min", to_string(rho_lo)},
                          {"rho", to_string(rho)},
                          {"built", built},
                          {"equal", equal}});
        }
  json j = envelope("sweep");
  j["max_n"] = max_n;
  j["max_k"] = max_k;
  j["rows"] = rows;
  j["all_equal"] = all;
  out << j.dump(2) << "\n";
  return all ? 0 : 1;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Private retrieval with colluding servers and eavesdropped links"};
  app.require_subcommand(1);
  Common c;

  auto* cap = app.add_subcommand("capacity", "exact capacity and minimum shared randomness");
  add_params(cap, c, false);
  auto* plan = app.add_subcommand("plan", "sub-packetization and download layout");
  add_params(plan, c, false);
  auto* codes = app.add_subcommand("codes", "noise code, parity check and query codes");
  add_params(codes, c);
  auto* build = app.add_subcommand("build", "build precoders and certify them");
  add_params(build, c);
  add_seed(build, c);
  std::string out_dir;
  build->add_option("--out", out_dir, "directory for matrix fixtures");

  auto* retr = app.add_subcommand("retrieve", "deploy N servers and retrieve one message");
  add_params(retr, c);
  add_seed(retr, c);
  add_mode(retr, c);
  std::size_t desired = 1;
  std::string transport = "inproc", messages_dir, save_dir;
  retr->add_option("-k,--desired", desired, "desired message index")->check(CLI::PositiveNumber);
  retr->add_option("--transport", transport, "inproc or tcp")->check(CLI::IsMember({"inproc", "tcp"}));
  retr->add_option("--load", messages_dir, "load messages from this directory");
  retr->add_option("--save", save_dir, "write the messages to this directory");

  auto* aud = app.add_subcommand("audit", "security, privacy, correctness, rate and MDS checks");
  add_params(aud, c);
  add_seed(aud, c);
  add_mode(aud, c);
  std::uint64_t trials = 100;
  aud->add_option("-k,--desired", desired, "desired message index")->check(CLI::PositiveNumber);
  aud->add_option("--trials", trials, "end-to-end retrievals");

  auto* sweep = app.add_subcommand("sweep", "achieved rate against capacity over a grid");
  std::uint64_t max_n = 5, max_k = 3, max_extended = 64;
  bool sweep_build = false;
  sweep->add_option("--max-n", max_n, "largest N");
  sweep->add_option("--max-k", max_k, "largest K");
  sweep->add_option("-q,--modulus", c.q, "prime field size for built schemes");
  sweep->add_flag("--build", sweep_build, "build schemes whose extended length is small");
  sweep->add_option("--max-extended", max_extended, "largest L' built with --build");
  add_seed(sweep, c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*cap) return run_capacity(c, out);
    if (*plan) return run_plan(c, out);
    if (*codes) return run_codes(c, out);
    if (*build) return run_build(c, out_dir, out);
    if (*retr) return run_retrieve(c, desired, transport, messages_dir, save_dir, out);
    if (*aud) return run_audit_cmd(c, desired, trials, out);
    if (*sweep) return run_sweep(c, max_n, max_k, sweep_build, max_extended, out);
  } catch (const CLI::ValidationError& e) {
    err << json{{"error", e.what()}}.dump() << "\n";
    return 2;
  } catch (const InvalidParams& e) {
    err << json{{"error", e.what()}, {"kind", "invalid_params"}}.dump() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << json{{"error", e.what()}}.dump() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace etpir
