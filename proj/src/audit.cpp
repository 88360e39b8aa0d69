#include "etpir/audit.hpp"

#include <algorithm>
#include <map>

namespace etpir {

namespace {

std::vector<std::size_t> one_based(std::span<const std::size_t> s) {
  std::vector<std::size_t> out;
  for (std::size_t x : s) out.push_back(x + 1);
  return out;
}

std::uint64_t checked_power(std::uint64_t base, std::uint64_t exp, std::uint64_t limit) {
  std::uint64_t r = 1;
  for (std::uint64_t i = 0; i < exp; ++i) {
    if (r > limit / base) return limit + 1;
    r *= base;
  }
  return r;
}

// Odometer over GF(q)^n; returns false after the last vector.
bool advance(std::vector<std::uint64_t>& v, std::uint64_t q) {
  for (auto& x : v) {
    if (++x < q) return true;
    x = 0;
  }
  return false;
}

MdsAudit mds_entry(std::string name, const MdsCertificate& c) {
  return {std::move(name), c.ok, c.exhaustive, c.subsets_checked, c.subsets_total};
}

std::vector<std::uint64_t> draw(const PrimeField& f, std::size_t n, Rng& rng) {
  std::vector<std::uint64_t> v(n);
  for (auto& x : v) x = rng.uniform(f);
  return v;
}

nlohmann::json rational_json(const Rational& r) { return to_string(r); }

}  // namespace

std::size_t LinearScheme::total_downloads() const {
  std::size_t d = 0;
  for (const Matrix& m : message_maps) d += m.rows();
  return d;
}

LinearScheme LinearScheme::strip_noise() const {
  LinearScheme out = *this;
  for (Matrix& m : out.noise_maps) m = Matrix(m.field(), m.rows(), m.cols());
  return out;
}

LinearScheme linear_scheme(const RetrievalSession& s) {
  const SchemeParams& p = s.params;
  const PrimeField f = p.field();
  const std::size_t K = p.messages, E = p.eavesdropped;
  const std::size_t L = s.counts.message_length, Lext = s.counts.extended_length;
  const std::size_t D = s.counts.downloads_per_server;
  LinearScheme out;
  out.params = p;
  out.message_length = L;
  out.noise_symbols = D * E;
  for (std::size_t n = 1; n <= p.servers; ++n) {
    const Matrix& q = s.queries.servers[n - 1];
    Matrix mw(f, D, K * L);
    Matrix ms(f, D, D * E);
    for (std::size_t r = 0; r < D; ++r) {
      for (std::size_t k = 0; k < K; ++k)
        for (std::size_t i = 0; i < L; ++i) mw(r, k * L + i) = q(r, k * Lext + i);
      for (std::size_t e = 0; e < E; ++e) ms(r, r * E + e) = s.bundle.noise.generator(n - 1, e);
    }
    out.message_maps.push_back(std::move(mw));
    out.noise_maps.push_back(std::move(ms));
  }
  return out;
}

LinearScheme linear_scheme(const HighSession& s) {
  const SchemeParams& p = s.params;
  const PrimeField f = p.field();
  LinearScheme out;
  out.params = p;
  out.message_length = s.counts.message_length;
  out.noise_symbols = p.eavesdropped;
  for (std::size_t n = 0; n < p.servers; ++n) {
    out.message_maps.push_back(s.queries.select_rows(std::vector<std::size_t>{n}));
    Matrix ms(f, 1, p.eavesdropped);
    for (std::size_t e = 0; e < p.eavesdropped; ++e) ms(0, e) = s.grs.generator(e, n);
    out.noise_maps.push_back(std::move(ms));
  }
  return out;
}

LinearView linear_view(const LinearScheme& scheme, const std::vector<std::size_t>& subset) {
  const PrimeField f = scheme.params.field();
  LinearView v{Matrix(f, 0, scheme.params.messages * scheme.message_length), Matrix(f, 0, scheme.noise_symbols),
               subset};
  for (std::size_t n : subset) {
    v.message_map = vstack(v.message_map, scheme.message_maps.at(n));
    v.noise_map = vstack(v.noise_map, scheme.noise_maps.at(n));
  }
  return v;
}

SecurityVerdict check_security(const LinearScheme& scheme, const std::vector<std::size_t>& subset) {
  const LinearView v = linear_view(scheme, subset);
  const Matrix joint = hstack(v.message_map, v.noise_map);
  SecurityVerdict out;
  out.subset = one_based(subset);
  out.rank_joint = rank(joint);
  out.rank_noise = rank(v.noise_map);
  out.pass = out.rank_joint == out.rank_noise;
  if (!out.pass) out.fingerprint = fingerprint(joint);
  return out;
}

std::vector<SecurityVerdict> check_security_all(const LinearScheme& scheme) {
  std::vector<SecurityVerdict> out;
  for_each_subset(scheme.params.servers, scheme.params.eavesdropped, [&](std::span<const std::size_t> s) {
    out.push_back(check_security(scheme, {s.begin(), s.end()}));
    return true;
  });
  return out;
}

EntropyVerdict exhaustive_security(const LinearScheme& scheme, const std::vector<std::size_t>& subset,
                                   std::uint64_t max_states) {
  const LinearView v = linear_view(scheme, subset);
  const PrimeField& f = v.message_map.field();
  const std::uint64_t q = f.modulus();
  const std::size_t nw = v.message_map.cols(), ns = v.noise_map.cols();
  const std::uint64_t states = checked_power(q, nw + ns, max_states);
  if (states > max_states) throw Error("exhaustive security: q^(K L + noise) exceeds the state limit");
  const std::uint64_t per_message = checked_power(q, ns, max_states);
  const std::uint64_t message_count = states / per_message;

  std::map<std::vector<std::uint64_t>, std::uint64_t> by_answer;
  std::map<std::pair<std::vector<std::uint64_t>, std::vector<std::uint64_t>>, std::uint64_t> by_pair;
  std::vector<std::uint64_t> w(nw, 0);
  do {
    const std::vector<std::uint64_t> aw = mat_vec(v.message_map, w);
    std::vector<std::uint64_t> s(ns, 0);
    do {
      std::vector<std::uint64_t> a = mat_vec(v.noise_map, s);
      for (std::size_t i = 0; i < a.size(); ++i) a[i] = f.add(a[i], aw[i]);
      ++by_answer[a];
      ++by_pair[{a, w}];
    } while (advance(s, q));
  } while (advance(w, q));

  EntropyVerdict out;
  out.subset = one_based(subset);
  out.states = states;
  out.distinct_answers = by_answer.size();
  // Every (a, w) must occur, with count(a, w) * total = count(a) * count(w).
  out.independent = by_pair.size() == by_answer.size() * message_count;
  for (const auto& [key, c] : by_pair)
    if (!out.independent || c * states != by_answer.at(key.first) * per_message) {
      out.independent = false;
      break;
    }
  return out;
}

StructuralPrivacy check_privacy_structural(const PrecodingBundle& bundle) {
  const SchemeParams& p = bundle.params;
  StructuralPrivacy out;
  const std::uint64_t subsets = binomial(p.servers, p.collusion);
  out.desired_subsets = subsets;
  if (auto w = desired_privacy_violation(bundle)) {
    out.desired_witness = one_based(*w);
    out.fingerprint = fingerprint(bundle.desired);
    out.pass = false;
  }
  for (const LayerPrecoder& lp : bundle.layers) {
    out.pair_subsets += subsets;
    if (auto w = pair_privacy_violation(p, lp)) {
      out.pair_witnesses.push_back({lp.layer, one_based(*w)});
      if (out.fingerprint.empty()) out.fingerprint = fingerprint(lp.generator);
      out.pass = false;
    }
  }
  return out;
}

StructuralPrivacy check_privacy_structural(const HighSession& session) {
  const SchemeParams& p = session.params;
  StructuralPrivacy out;
  for_each_subset(p.servers, p.collusion, [&](std::span<const std::size_t> s) {
    ++out.desired_subsets;
    if (rank(session.grs.generator.select_cols(s)) != p.collusion) {
      out.desired_witness = one_based(s);
      out.fingerprint = fingerprint(session.grs.generator);
      out.pass = false;
      return false;
    }
    return true;
  });
  return out;
}

ExhaustivePrivacy check_privacy_exhaustive(const SchemeParams& params, const std::vector<std::size_t>& subset,
                                           HighCorruption corruption, std::uint64_t max_states) {
  params.validate();
  if (params.regime() != Regime::kHighEavesdrop) throw InvalidParams("exhaustive privacy covers the GRS scheme");
  const std::size_t N = params.servers, E = params.eavesdropped, K = params.messages;
  const std::size_t width = K * (N - E);
  const PrimeField f = params.field();
  const std::uint64_t q = params.modulus;
  const std::uint64_t states = checked_power(q, E * width + width + E, max_states);
  if (states > max_states) throw Error("exhaustive privacy: state count exceeds the limit");
  const GrsCode grs = default_high_code(params);

  using Key = std::vector<std::uint64_t>;
  std::vector<std::map<Key, std::uint64_t>> joint(K);
  std::map<Key, std::uint64_t> queries_only;
  for (std::size_t k = 1; k <= K; ++k) {
    std::vector<std::uint64_t> u(E * width, 0);
    do {
      Matrix masks(f, E, width);
      for (std::size_t i = 0; i < u.size(); ++i) masks(i / width, i % width) = u[i];
      Matrix qv = high_query_vectors(params, grs, k, masks);
      if (corruption == HighCorruption::kUnmaskedFirstServer) {
        for (std::size_t c = 0; c < width; ++c) qv(0, c) = 0;
        qv(0, (k - 1) * (N - E)) = 1;
      }
      Key qkey;
      for (std::size_t n : subset) qkey.insert(qkey.end(), qv.row(n).begin(), qv.row(n).end());
      if (k == 1) ++queries_only[qkey];
      std::vector<std::uint64_t> w(width, 0);
      do {
        std::vector<std::uint64_t> s(E, 0);
        do {
          Key key = qkey;
          for (std::size_t n : subset) key.push_back(high_answer(n + 1, qv.row(n), w, s, grs));
          key.insert(key.end(), w.begin(), w.end());
          key.insert(key.end(), s.begin(), s.end());
          ++joint[k - 1][key];
        } while (advance(s, q));
      } while (advance(w, q));
    } while (advance(u, q));
  }

  ExhaustivePrivacy out;
  out.subset = one_based(subset);
  out.states_per_index = states;
  out.identical = std::all_of(joint.begin(), joint.end(), [&](const auto& h) { return h == joint[0]; });
  const std::uint64_t cells = checked_power(q, subset.size() * width, UINT64_MAX - 1);
  const std::uint64_t masks_total = checked_power(q, E * width, UINT64_MAX - 1);
  out.queries_uniform = queries_only.size() == cells &&
                        std::all_of(queries_only.begin(), queries_only.end(),
                                    [&](const auto& kv) { return kv.second * cells == masks_total; });
  out.pass = out.identical && out.queries_uniform;
  return out;
}

CorrectnessStats check_correctness(const SchemeParams& params, std::uint64_t trials, Rng& rng, DecodeMode mode) {
  params.validate();
  const PrimeField f = params.field();
  const std::size_t K = params.messages, N = params.servers, E = params.eavesdropped, T = params.collusion;
  CorrectnessStats st;
  st.mode = mode;
  st.zero_error_guaranteed = T <= N - E || E >= T;
  st.privacy_certified = mode == DecodeMode::kFaithful || params.regime() == Regime::kHighEavesdrop;
  for (std::uint64_t t = 0; t < trials; ++t) {
    const std::size_t k = 1 + t % K;
    ++st.trials;
    if (params.regime() == Regime::kHighEavesdrop) {
      const HighSession s = open_high_session(params, k, rng);
      const std::size_t width = K * (N - E);
      const std::vector<std::uint64_t> w = draw(f, width, rng);
      const std::vector<std::uint64_t> noise = draw(f, E, rng);
      std::vector<std::uint64_t> a;
      for (std::size_t n = 1; n <= N; ++n) a.push_back(high_answer(n, s.queries.row(n - 1), w, noise, s.grs));
      const std::vector<std::uint64_t> expect(w.begin() + static_cast<std::ptrdiff_t>((k - 1) * (N - E)),
                                              w.begin() + static_cast<std::ptrdiff_t>(k * (N - E)));
      (high_decode(s, a) == expect ? st.recovered : st.wrong)++;
      continue;
    }
    SessionOptions o;
    o.mode = mode;
    const RetrievalSession s = open_session(params, k, rng, o);
    if (!s.privacy_certified) st.privacy_certified = false;
    std::vector<std::vector<std::uint64_t>> messages;
    for (std::size_t m = 0; m < K; ++m) messages.push_back(draw(f, s.counts.message_length, rng));
    const std::vector<std::uint64_t> padded = pad_messages(messages, s.counts.extended_length);
    const CommonRandomness noise = draw_common_randomness(params, s.counts, rng);
    std::vector<std::vector<std::uint64_t>> answers;
    for (std::size_t n = 1; n <= N; ++n)
      answers.push_back(answer_query(n, s.queries.servers[n - 1], padded, noise, s.bundle.noise));
    try {
      (decode(s, answers) == messages[k - 1] ? st.recovered : st.wrong)++;
    } catch (const DecodeSingular&) {
      ++st.decode_singular;
    }
  }
  return st;
}

RateAudit audit_rate_and_rho(const LinearScheme& scheme) {
  RateAudit r;
  const SchemeParams& p = scheme.params;
  r.downloads = scheme.total_downloads();
  r.noise_symbols = scheme.noise_symbols;
  r.rate = Rational(scheme.message_length, r.downloads);
  r.rho = Rational(r.noise_symbols, scheme.message_length);
  r.capacity = capacity(p);
  r.rho_min = rho_min(p);
  r.rate_optimal = r.rate == r.capacity;
  r.rho_optimal = r.rho == r.rho_min;
  r.within_bounds = r.rate <= r.capacity && r.rho >= r.rho_min;
  return r;
}

AuditReport run_audit(const SchemeParams& params, const AuditOptions& options) {
  params.validate();
  AuditReport rep;
  rep.params = params;
  rep.regime = params.regime();
  rep.mode = options.mode;
  Rng rng(options.seed);
  if (rep.regime == Regime::kLowEavesdrop) {
    SessionOptions o;
    o.mode = options.mode;
    o.precoding.mds_work_budget = options.mds_work_budget;
    const RetrievalSession s = open_session(params, options.desired, rng, o);
    const LinearScheme ls = linear_scheme(s);
    rep.security = check_security_all(ls);
    rep.privacy_structural = check_privacy_structural(s.bundle);
    rep.rate = audit_rate_and_rho(ls);
    const std::uint64_t budget = mds_subset_budget(params.eavesdropped, options.mds_work_budget);
    if (params.eavesdropped > 0) rep.mds.push_back(mds_entry("C_S", certify_mds(s.bundle.noise.generator, budget, rng)));
    if (s.bundle.desired_base)
      rep.mds.push_back(mds_entry("G_(N,E)", certify_mds(*s.bundle.desired_base,
                                                         mds_subset_budget(s.bundle.desired_base->cols(),
                                                                           options.mds_work_budget),
                                                         rng)));
    for (const LayerPrecoder& lp : s.bundle.layers)
      rep.mds.push_back(mds_entry("M_int[" + std::to_string(lp.layer) + "]", lp.mds));
  } else {
    const HighSession s = open_high_session(params, options.desired, rng);
    const LinearScheme ls = linear_scheme(s);
    rep.security = check_security_all(ls);
    rep.privacy_structural = check_privacy_structural(s);
    rep.rate = audit_rate_and_rho(ls);
    rep.mds.push_back(mds_entry("G_(N,E)", certify_mds(s.grs.generator.transpose(),
                                                       mds_subset_budget(params.eavesdropped, options.mds_work_budget),
                                                       rng)));
    const std::size_t width = params.messages * (params.servers - params.eavesdropped);
    const std::uint64_t states =
        checked_power(params.modulus, params.eavesdropped * width + width + params.eavesdropped, options.exhaustive_limit);
    if (states <= options.exhaustive_limit)
      for_each_subset(params.servers, params.collusion, [&](std::span<const std::size_t> sub) {
        rep.privacy_exhaustive.push_back(
            check_privacy_exhaustive(params, {sub.begin(), sub.end()}, HighCorruption::kNone, options.exhaustive_limit));
        return true;
      });
  }
  rep.correctness = check_correctness(params, options.trials, rng, options.mode);

  const bool secure = std::all_of(rep.security.begin(), rep.security.end(), [](const auto& v) { return v.pass; });
  const bool exhaustive_ok = std::all_of(rep.privacy_exhaustive.begin(), rep.privacy_exhaustive.end(),
                                         [](const auto& v) { return v.pass; });
  const bool mds_ok = std::all_of(rep.mds.begin(), rep.mds.end(), [](const auto& m) { return m.ok; });
  const CorrectnessStats& c = rep.correctness;
  const bool correct = c.wrong == 0 && (c.recovered == c.trials || !c.zero_error_guaranteed);
  rep.pass = secure && rep.privacy_structural.pass && exhaustive_ok && mds_ok && correct && rep.rate.rate_optimal &&
             rep.rate.rho_optimal;
  return rep;
}

nlohmann::json counts_json(const SchemeParams& p, const DerivedCounts& c) {
  return {{"regime", to_string(c.regime)},
          {"L", c.message_length},
          {"L_ext", c.extended_length},
          {"L_n", c.mixtures_per_server},
          {"D_n", c.downloads_per_server},
          {"N_eff", c.effective_servers},
          {"noise_symbols", c.noise_symbols},
          {"sums_per_type", c.sums_per_type},
          {"total_downloads", c.total_downloads(p)},
          {"rate", to_string(c.rate(p))},
          {"rho", to_string(c.rho(p))}};
}

nlohmann::json to_json(const AuditReport& r) {
  using nlohmann::json;
  json security = json::array();
  for (const auto& v : r.security) {
    json e = {{"subset", v.subset}, {"rank_joint", v.rank_joint}, {"rank_noise", v.rank_noise}, {"pass", v.pass}};
    if (!v.fingerprint.empty()) e["fingerprint"] = v.fingerprint;
    security.push_back(e);
  }
  json pairs = json::array();
  for (const auto& [layer, subset] : r.privacy_structural.pair_witnesses)
    pairs.push_back({{"layer", layer}, {"subset", subset}});
  json privacy = {{"pass", r.privacy_structural.pass},
                  {"desired_subsets", r.privacy_structural.desired_subsets},
                  {"pair_subsets", r.privacy_structural.pair_subsets},
                  {"pair_witnesses", pairs}};
  if (r.privacy_structural.desired_witness) privacy["desired_witness"] = *r.privacy_structural.desired_witness;
  if (!r.privacy_structural.fingerprint.empty()) privacy["fingerprint"] = r.privacy_structural.fingerprint;
  json exhaustive = json::array();
  for (const auto& e : r.privacy_exhaustive)
    exhaustive.push_back({{"subset", e.subset},
                          {"states_per_index", e.states_per_index},
                          {"identical", e.identical},
                          {"queries_uniform", e.queries_uniform},
                          {"pass", e.pass}});
  json mds = json::array();
  for (const auto& m : r.mds)
    mds.push_back({{"name", m.name},
                   {"ok", m.ok},
                   {"exhaustive", m.exhaustive},
                   {"subsets_checked", m.subsets_checked},
                   {"subsets_total", m.subsets_total}});
  const CorrectnessStats& c = r.correctness;
  return {{"schema", "report_v1"},
          {"params",
           {{"K", r.params.messages},
            {"N", r.params.servers},
            {"T", r.params.collusion},
            {"E", r.params.eavesdropped},
            {"q", r.params.modulus}}},
          {"regime", to_string(r.regime)},
          {"mode", to_string(r.mode)},
          {"privacy_certified", c.privacy_certified},
          {"security", security},
          {"privacy_structural", privacy},
          {"privacy_exhaustive", exhaustive},
          {"correctness",
           {{"trials", c.trials},
            {"recovered", c.recovered},
            {"decode_singular", c.decode_singular},
            {"wrong", c.wrong},
            {"failure_rate", c.failure_rate()},
            {"zero_error_guaranteed", c.zero_error_guaranteed}}},
          {"rate",
           {{"rate", rational_json(r.rate.rate)},
            {"capacity", rational_json(r.rate.capacity)},
            {"rho", rational_json(r.rate.rho)},
            {"rho_min", rational_json(r.rate.rho_min)},
            {"downloads", r.rate.downloads},
            {"noise_symbols", r.rate.noise_symbols},
            {"rate_optimal", r.rate.rate_optimal},
            {"rho_optimal", r.rate.rho_optimal},
            {"within_bounds", r.rate.within_bounds}}},
          {"mds", mds},
          {"pass", r.pass}};
}

}  // namespace etpir
