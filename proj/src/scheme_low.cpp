#include "etpir/scheme_low.hpp"

#include <algorithm>

namespace etpir {

namespace {

std::string subset_text(std::span<const std::size_t> s) {
  std::string out = "{";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i] + 1);
  return out + "}";
}

void require_shape(const Matrix& m, std::size_t rows, std::size_t cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw InvalidParams(std::string(what) + " must be " + std::to_string(rows) + "x" + std::to_string(cols) +
                        ", got " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

// (H (x) I_{L_n}) * desired: row j*L_n + s is the s-th desired combination
// left in parity output j once the noise is cancelled.
Matrix projected_desired(const PrecodingBundle& b) {
  const Matrix id = Matrix::identity(b.params.field(), b.counts.mixtures_per_server);
  return kron(b.noise.parity, id) * b.desired;
}

std::vector<std::size_t> exposed_rows(const SchemeParams& p, const LayerPrecoder& lp) {
  std::vector<std::size_t> rows;
  for (std::size_t j = 0; j < p.servers - p.eavesdropped; ++j)
    for (std::size_t pos = 0; pos < lp.lower; ++pos) rows.push_back(j * lp.block() + pos);
  return rows;
}

struct LayerVerdict {
  bool private_ok = false;
  bool exposed_ok = false;
};

LayerVerdict finish_layer(const SchemeParams& p, const Matrix& noise_p, LayerPrecoder& lp, Rng& rng,
                          std::uint64_t mds_work_budget) {
  lp.generator = assemble_pair_generator(p, lp.block(), lp.blocks, noise_p);
  lp.interference = assemble_interference(p, lp.block(), lp.blocks);
  lp.exposed_rows = exposed_rows(p, lp);
  LayerVerdict v;
  v.private_ok = !pair_privacy_violation(p, lp).has_value();
  try {
    lp.exposed_inverse = invert(lp.interference.select_rows(lp.exposed_rows));
    v.exposed_ok = true;
  } catch (const SingularMatrix&) {
  }
  lp.mds = certify_mds(lp.interference, mds_subset_budget(lp.interference.cols(), mds_work_budget), rng);
  return v;
}

}  // namespace

std::uint64_t mds_subset_budget(std::size_t columns, std::uint64_t work_budget) {
  const std::uint64_t cube = static_cast<std::uint64_t>(columns) * columns * columns;
  return std::max<std::uint64_t>(16, work_budget / std::max<std::uint64_t>(cube, 1));
}

Matrix assemble_pair_generator(const SchemeParams& params, std::size_t block, const std::vector<Matrix>& blocks,
                               const Matrix& p) {
  const std::size_t N = params.servers, T = params.collusion, E = params.eavesdropped;
  const PrimeField f = params.field();
  if (blocks.size() != (N - T) * (T - E)) throw InvalidParams("pair precoder needs (N-T)(T-E) blocks");
  Matrix g(f, N * block, T * block);
  for (std::size_t n = 0; n < T; ++n)
    for (std::size_t i = 0; i < block; ++i) g(n * block + i, n * block + i) = 1;
  const Matrix id = Matrix::identity(f, block);
  for (std::size_t i = 0; i < N - T; ++i) {
    const std::size_t row0 = (T + i) * block;
    for (std::size_t c = 0; c < E; ++c) {
      // N_{i,c} = P[T-E+i, c] I - sum_t P[t, c] M_{i,t}
      Matrix acc = scale(id, p(T - E + i, c));
      for (std::size_t t = 0; t < T - E; ++t) acc = acc - scale(blocks[i * (T - E) + t], p(t, c));
      g.paste(row0, c * block, acc);
    }
    for (std::size_t t = 0; t < T - E; ++t) g.paste(row0, (E + t) * block, blocks[i * (T - E) + t]);
  }
  return g;
}

Matrix assemble_interference(const SchemeParams& params, std::size_t block, const std::vector<Matrix>& blocks) {
  const std::size_t N = params.servers, T = params.collusion, E = params.eavesdropped;
  Matrix m(params.field(), (N - E) * block, (T - E) * block);
  m.paste(0, 0, Matrix::identity(params.field(), (T - E) * block));
  for (std::size_t i = 0; i < N - T; ++i)
    for (std::size_t t = 0; t < T - E; ++t) m.paste((T - E + i) * block, t * block, blocks.at(i * (T - E) + t));
  return m;
}

Matrix server_rows(const Matrix& generator, std::span<const std::size_t> servers, std::size_t block) {
  std::vector<std::size_t> rows;
  rows.reserve(servers.size() * block);
  for (std::size_t s : servers)
    for (std::size_t i = 0; i < block; ++i) rows.push_back(s * block + i);
  return generator.select_rows(rows);
}

std::optional<std::vector<std::size_t>> desired_privacy_violation(const PrecodingBundle& bundle) {
  const std::size_t L_n = bundle.counts.mixtures_per_server;
  const std::size_t T = bundle.params.collusion;
  std::optional<std::vector<std::size_t>> witness;
  for_each_subset(bundle.params.servers, T, [&](std::span<const std::size_t> s) {
    if (rank(server_rows(bundle.desired, s, L_n)) == T * L_n) return true;
    witness.emplace(s.begin(), s.end());
    return false;
  });
  return witness;
}

std::optional<std::vector<std::size_t>> pair_privacy_violation(const SchemeParams& params, const LayerPrecoder& layer) {
  const std::size_t T = params.collusion;
  std::optional<std::vector<std::size_t>> witness;
  for_each_subset(params.servers, T, [&](std::span<const std::size_t> s) {
    if (rank(server_rows(layer.generator, s, layer.block())) == T * layer.block()) return true;
    witness.emplace(s.begin(), s.end());
    return false;
  });
  return witness;
}

PrecodingBundle build_precoding(const SchemeParams& params, Rng& rng, const PrecodingOptions& options) {
  params.validate();
  if (params.regime() != Regime::kLowEavesdrop) throw InvalidParams("layered scheme needs E < T");
  const std::size_t K = params.messages, N = params.servers, T = params.collusion, E = params.eavesdropped;
  const PrimeField f = params.field();

  PrecodingBundle b;
  b.params = params;
  b.counts = derive_counts(params);
  const std::size_t L_n = b.counts.mixtures_per_server;
  const std::size_t L = b.counts.message_length;
  const std::size_t Lext = b.counts.extended_length;

  if (options.noise) {
    require_shape(options.noise->generator, N, E, "noise generator");
    if (!(options.noise->parity * options.noise->generator == Matrix(f, N - E, E)) || !is_mds(options.noise->generator))
      throw InvalidParams("injected noise code is not an MDS code with a matching parity check");
    b.noise = *options.noise;
  } else {
    b.noise = build_noise_code(N, E, f);
  }

  auto desired_ok = [&]() -> std::string {
    if (auto w = desired_privacy_violation(b)) return "desired precoder is rank deficient on servers " + subset_text(*w);
    if (rank(projected_desired(b)) != L) return "desired precoder does not survive noise cancellation";
    return {};
  };
  if (options.desired || options.desired_base || T <= N - E) {
    if (options.desired) {
      b.desired = *options.desired;
    } else {
      b.desired_base = options.desired_base ? *options.desired_base : build_desired_generator(N, E, f);
      require_shape(*b.desired_base, N, b.counts.effective_servers, "desired base");
      b.desired = kron(*b.desired_base, Matrix::identity(f, L_n));
    }
    require_shape(b.desired, N * L_n, Lext, "desired precoder");
    if (auto why = desired_ok(); !why.empty()) throw InvalidParams(why);
  } else {
    for (b.desired_attempts = 1;; ++b.desired_attempts) {
      b.desired = random_matrix(f, N * L_n, Lext, rng);
      if (desired_ok().empty()) break;
      if (b.desired_attempts >= options.resample_budget)
        throw ResampleExhausted("desired precoder: no draw met privacy condition within " +
                                std::to_string(options.resample_budget) + " attempts at q = " +
                                std::to_string(params.modulus));
    }
  }

  const Matrix& noise_p = b.noise.p;
  for (std::size_t layer = 1; layer < K; ++layer) {
    LayerPrecoder lp;
    lp.layer = layer;
    lp.lower = b.counts.sums_per_type[layer - 1];
    lp.upper = b.counts.sums_per_type[layer];
    const std::size_t B = lp.block();
    const bool injected = options.interference_blocks.size() >= layer && !options.interference_blocks[layer - 1].empty();
    if (injected) {
      lp.blocks = options.interference_blocks[layer - 1];
      if (lp.blocks.size() != (N - T) * (T - E)) throw InvalidParams("injected interference needs (N-T)(T-E) blocks");
      for (const Matrix& m : lp.blocks) require_shape(m, B, B, "interference block");
      const LayerVerdict v = finish_layer(params, noise_p, lp, rng, options.mds_work_budget);
      if (!v.private_ok)
        throw InvalidParams("injected pair precoder for layer " + std::to_string(layer) + " violates privacy");
      if (!v.exposed_ok)
        throw InvalidParams("injected interference matrix for layer " + std::to_string(layer) +
                            " cannot be solved from the exposed sums");
      ++b.pair_attempts;
    } else {
      for (std::uint64_t attempt = 1;; ++attempt) {
        ++b.pair_attempts;
        lp.blocks.clear();
        for (std::size_t i = 0; i < (N - T) * (T - E); ++i) lp.blocks.push_back(random_matrix(f, B, B, rng));
        const LayerVerdict v = finish_layer(params, noise_p, lp, rng, options.mds_work_budget);
        if (v.private_ok && v.exposed_ok && (lp.mds.ok || !options.require_mds)) break;
        if (attempt >= options.resample_budget)
          throw ResampleExhausted("pair precoder for layer " + std::to_string(layer) + ": no draw within " +
                                  std::to_string(options.resample_budget) + " attempts at q = " +
                                  std::to_string(params.modulus));
      }
    }
    b.layers.push_back(std::move(lp));
  }
  return b;
}

const char* to_string(DecodeMode m) { return m == DecodeMode::kFaithful ? "faithful" : "retry"; }

CommonRandomness draw_common_randomness(const SchemeParams& params, const DerivedCounts& counts, Rng& rng) {
  return CommonRandomness{random_matrix(params.field(), counts.downloads_per_server, params.eavesdropped, rng)};
}

RetrievalSession open_session(const SchemeParams& params, std::size_t desired, Rng& rng,
                              const SessionOptions& options) {
  if (desired < 1 || desired > params.messages) throw InvalidParams("desired message index out of range");
  return open_session(build_precoding(params, rng, options.precoding), desired, rng, options);
}

RetrievalSession open_session(PrecodingBundle bundle, std::size_t desired, Rng& rng, const SessionOptions& options) {
  const SchemeParams params = bundle.params;
  const std::size_t K = params.messages, N = params.servers, T = params.collusion;
  if (desired < 1 || desired > K) throw InvalidParams("desired message index out of range");
  const PrimeField f = params.field();

  RetrievalSession s;
  s.params = params;
  s.counts = bundle.counts;
  s.index = build_index_map(params, s.counts);
  s.desired = desired;
  s.bundle = std::move(bundle);
  s.mode = options.mode;
  s.privacy_certified = options.mode == DecodeMode::kFaithful;
  const std::size_t L = s.counts.message_length;
  const std::size_t L_n = s.counts.mixtures_per_server;
  const std::size_t Lext = s.counts.extended_length;

  if (options.mixing) {
    if (options.mixing->size() != K) throw InvalidParams("need one mixing matrix per message");
    for (const Matrix& u : *options.mixing) {
      require_shape(u, Lext, Lext, "mixing matrix");
      if (rank(u) != Lext) throw InvalidParams("mixing matrices must be invertible");
    }
    s.mixing = *options.mixing;
  } else {
    for (std::size_t k = 0; k < K; ++k) s.mixing.push_back(random_full_rank(Lext, f, rng));
  }

  // Undesired messages walk their rows of U_k in layer order, then type order.
  s.cursors.resize(K);
  s.rows_used.assign(K, 0);
  for (std::size_t k = 1; k <= K; ++k) {
    if (k == desired) {
      s.rows_used[k - 1] = Lext;
      continue;
    }
    std::size_t cursor = 0;
    for (std::size_t layer = 1; layer < K; ++layer) {
      const std::size_t B = s.bundle.layers[layer - 1].block();
      std::size_t t = 1;
      for (const auto& members : subsets_lex(K, layer)) {
        const bool has_k = std::find(members.begin(), members.end(), k) != members.end();
        const bool has_l = std::find(members.begin(), members.end(), desired) != members.end();
        if (has_k && !has_l) {
          s.cursors[k - 1][{layer, t}] = cursor;
          cursor += T * B;
        }
        ++t;
      }
    }
    if (cursor != T * L_n) throw Error("internal: undesired message consumed " + std::to_string(cursor) + " rows");
    s.rows_used[k - 1] = cursor;
  }

  const Matrix fbar = projected_desired(s.bundle);
  for (;;) {
    s.desired_system = fbar * s.mixing[desired - 1].block(0, 0, Lext, L);
    try {
      s.desired_inverse = invert(s.desired_system);
      break;
    } catch (const SingularMatrix&) {
      if (s.mode == DecodeMode::kFaithful || options.mixing) {
        s.desired_inverse.reset();
        break;
      }
      if (s.mixing_resamples >= options.retry_budget)
        throw ResampleExhausted("retry mode: no invertible desired system within " +
                                std::to_string(options.retry_budget) + " redraws");
      ++s.mixing_resamples;
      s.mixing[desired - 1] = random_full_rank(Lext, f, rng);
    }
  }

  s.queries.messages = K;
  s.queries.extended_length = Lext;
  const std::size_t D = s.counts.downloads_per_server;
  for (std::size_t n = 1; n <= N; ++n) {
    Matrix q(f, D, K * Lext);
    for (std::size_t r = 0; r < D; ++r) {
      const QueryRow& row = s.index.rows()[r];
      const bool has_l = row.contains(desired);
      std::vector<std::size_t> base;
      for (std::size_t m : row.members)
        if (m != desired) base.push_back(m);
      for (std::size_t k : row.members) {
        std::vector<std::uint64_t> coef;
        if (k == desired) {
          coef = vec_mat(s.bundle.desired.row((n - 1) * L_n + s.index.slot(desired, r)), s.mixing[k - 1]);
        } else {
          const std::size_t layer = has_l ? row.layer - 1 : row.layer;
          const LayerPrecoder& lp = s.bundle.layers[layer - 1];
          const std::size_t pos = has_l ? lp.lower + row.position : row.position;
          const std::size_t first = s.cursors[k - 1].at({layer, s.index.type_index(base)});
          const Matrix rows = s.mixing[k - 1].block(first, 0, T * lp.block(), Lext);
          coef = vec_mat(lp.generator.row((n - 1) * lp.block() + pos), rows);
        }
        std::copy(coef.begin(), coef.end(), q.row(r).begin() + static_cast<std::ptrdiff_t>((k - 1) * Lext));
      }
    }
    s.queries.servers.push_back(std::move(q));
  }
  return s;
}

std::vector<std::uint64_t> pad_messages(const std::vector<std::vector<std::uint64_t>>& messages,
                                        std::size_t extended_length) {
  std::vector<std::uint64_t> out(messages.size() * extended_length, 0);
  for (std::size_t k = 0; k < messages.size(); ++k) {
    if (messages[k].size() > extended_length) throw ShapeError("message longer than the extended length");
    std::copy(messages[k].begin(), messages[k].end(), out.begin() + static_cast<std::ptrdiff_t>(k * extended_length));
  }
  return out;
}

std::uint64_t answer_row(const PrimeField& field, std::span<const std::uint64_t> coefficients,
                         std::span<const std::uint64_t> padded_messages, std::span<const std::uint64_t> noise_row,
                         std::span<const std::uint64_t> noise_coefficients) {
  if (coefficients.size() != padded_messages.size() || noise_row.size() != noise_coefficients.size())
    throw ShapeError("answer: coefficient and symbol lengths differ");
  return field.add(dot(field, coefficients, padded_messages), dot(field, noise_coefficients, noise_row));
}

std::vector<std::uint64_t> answer_query(std::size_t server, const Matrix& query,
                                        std::span<const std::uint64_t> padded_messages,
                                        const CommonRandomness& noise, const NoiseCode& code) {
  if (server < 1 || server > code.servers()) throw ShapeError("answer: server index out of range");
  if (noise.symbols.rows() != query.rows() || noise.symbols.cols() != code.eavesdropped())
    throw ShapeError("answer: common randomness has the wrong shape");
  std::vector<std::uint64_t> out(query.rows());
  for (std::size_t r = 0; r < query.rows(); ++r)
    out[r] = answer_row(query.field(), query.row(r), padded_messages, noise.symbols.row(r),
                        code.generator.row(server - 1));
  return out;
}

std::vector<std::uint64_t> decode(const RetrievalSession& s, const std::vector<std::vector<std::uint64_t>>& answers) {
  const std::size_t N = s.params.servers, E = s.params.eavesdropped, K = s.params.messages;
  const std::size_t D = s.counts.downloads_per_server;
  const std::size_t L_n = s.counts.mixtures_per_server;
  const std::size_t l = s.desired;
  const PrimeField f = s.params.field();
  if (answers.size() != N) throw ShapeError("decode: need answers from every server");
  for (const auto& a : answers)
    if (a.size() != D) throw ShapeError("decode: each server returns D_n symbols");

  // Noise cancellation: projected[r][j] = sum_n H[j, n] A_n[r].
  const Matrix& h = s.bundle.noise.parity;
  std::vector<std::vector<std::uint64_t>> projected(D, std::vector<std::uint64_t>(N - E, 0));
  for (std::size_t r = 0; r < D; ++r)
    for (std::size_t j = 0; j < N - E; ++j) {
      std::uint64_t acc = 0;
      for (std::size_t n = 0; n < N; ++n) acc = f.add(acc, f.mul(h(j, n), answers[n][r]));
      projected[r][j] = acc;
    }

  // Interference cancellation, one layer pair and undesired type at a time.
  for (std::size_t layer = 1; layer < K; ++layer) {
    const LayerPrecoder& lp = s.bundle.layers[layer - 1];
    const std::size_t B = lp.block();
    std::size_t t = 1;
    for (const auto& members : subsets_lex(K, layer)) {
      const std::size_t type = t++;
      if (std::find(members.begin(), members.end(), l) != members.end()) continue;
      std::vector<std::uint64_t> exposed;
      for (std::size_t j = 0; j < N - E; ++j)
        for (std::size_t p = 0; p < lp.lower; ++p) exposed.push_back(projected[s.index.row_of(layer, type, p)][j]);
      const std::vector<std::uint64_t> basis = mat_vec(lp.exposed_inverse, exposed);
      std::vector<std::size_t> with_l = members;
      with_l.insert(std::upper_bound(with_l.begin(), with_l.end(), l), l);
      const std::size_t upper_type = s.index.type_index(with_l);
      for (std::size_t j = 0; j < N - E; ++j)
        for (std::size_t p = 0; p < lp.upper; ++p) {
          const std::uint64_t interference = dot(f, lp.interference.row(j * B + lp.lower + p), basis);
          auto& cell = projected[s.index.row_of(layer + 1, upper_type, p)][j];
          cell = f.sub(cell, interference);
        }
    }
  }

  std::vector<std::uint64_t> cleaned((N - E) * L_n);
  const auto& rows = s.index.rows_with(l);
  for (std::size_t slot = 0; slot < L_n; ++slot)
    for (std::size_t j = 0; j < N - E; ++j) cleaned[j * L_n + slot] = projected[rows[slot]][j];
  if (!s.desired_inverse) throw DecodeSingular("desired combinations are linearly dependent for this draw of U");
  return mat_vec(*s.desired_inverse, cleaned);
}

}  // namespace etpir
