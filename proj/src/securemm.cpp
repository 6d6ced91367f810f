#include "s3rec/securemm.hpp"

#include <cmath>
#include <cstring>
#include <map>
#include <sstream>

namespace s3rec {

namespace {

// FNV-1a over the public support; both parties must agree on l_y exactly.
uint64_t support_digest(size_t rows, size_t cols, const std::vector<Loc>& locs) {
  uint64_t h = 1469598103934665603ULL;
  auto mix = [&](uint64_t v) {
    for (int i = 0; i < 8; i++) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 1099511628211ULL;
    }
  };
  mix(rows);
  mix(cols);
  mix(locs.size());
  for (const auto& l : locs) {
    mix(l.row);
    mix(l.col);
  }
  return h;
}

// Snapshot-diff helper so reports show only this protocol's traffic.
struct StatsDelta {
  explicit StatsDelta(const ChannelStats& stats) : stats_(stats) {
    before_payload_ = stats.payload_sent;
    before_total_ = stats.bytes_sent;
  }
  void fill(ProtocolReport& report) const {
    for (int p = 0; p < kNumPhases; p++) {
      report.payload_bytes[p] = stats_.payload_sent[p] - before_payload_[p];
      report.total_bytes[p] = stats_.bytes_sent[p] - before_total_[p];
    }
  }
  void fill_payload(std::array<uint64_t, kNumPhases>& out) const {
    for (int p = 0; p < kNumPhases; p++) {
      out[p] = stats_.payload_sent[p] - before_payload_[p];
    }
  }
  const ChannelStats& stats_;
  std::array<uint64_t, kNumPhases> before_payload_{};
  std::array<uint64_t, kNumPhases> before_total_{};
};

void exchange_digest(PartySession& session, uint64_t digest, const char* what) {
  std::vector<uint8_t> mine;
  put_u64(mine, digest);
  std::vector<uint8_t> theirs;
  if (session.party_id() == 0) {
    session.send(Phase::Offline, MsgType::Control, mine);
    theirs = session.recv_expect(MsgType::Control);
  } else {
    theirs = session.recv_expect(MsgType::Control);
    session.send(Phase::Offline, MsgType::Control, mine);
  }
  if (theirs.size() != 8) throw ProtocolError("digest frame must be 8 bytes");
  uint64_t peer = ByteReader(theirs).u64();
  if (peer != digest) {
    throw ProtocolError(std::string(what) + " digest mismatch: parties disagree on the support");
  }
}

void send_control_u64(PartySession& session, Phase phase, uint64_t value) {
  std::vector<uint8_t> payload;
  put_u64(payload, value);
  session.send(phase, MsgType::Control, payload);
}

uint64_t recv_control_u64(PartySession& session) {
  auto payload = session.recv_expect(MsgType::Control);
  if (payload.size() != 8) throw ProtocolError("control frame must be 8 bytes");
  return ByteReader(payload).u64();
}

size_t ceil_log2(size_t v) {
  size_t bits = 0;
  while ((1ULL << bits) < v) bits++;
  return bits;
}

}  // namespace

SharedMatrix shared_add(const SharedMatrix& a, const SharedMatrix& b) {
  if (a.rows != b.rows || a.cols != b.cols) throw ShapeError("shared add: shape mismatch");
  SharedMatrix out = a;
  for (size_t i = 0; i < out.shares.size(); i++) out.shares[i] = share_add(a.shares[i], b.shares[i]);
  return out;
}

SharedMatrix shared_truncate(const SharedMatrix& m, int f, int party_id) {
  SharedMatrix out = m;
  if (static_cast<uint32_t>(f) > m.scale) throw UsageError("truncate below scale zero");
  for (auto& s : out.shares) s.value = trunc_local(s.value, f, party_id);
  out.scale = m.scale - static_cast<uint32_t>(f);
  return out;
}

std::optional<RingMatrix> reconstruct(PartySession& session, const SharedMatrix& m, int to) {
  auto opened = rec_batch(session, m.shares, to);
  if (!opened) return std::nullopt;
  RingMatrix out(m.rows, m.cols);
  out.data() = std::move(*opened);
  return out;
}

std::string ProtocolReport::to_text() const {
  std::ostringstream os;
  os << "protocol = " << protocol;
  if (!mode.empty()) os << "\nmode = " << mode;
  if (!pir_backend.empty()) os << "\npir_backend = " << pir_backend;
  os << "\nk = " << k << "\nm = " << m << "\nt = " << t
     << "\ndistinct_rows = " << distinct_rows << "\ntriples_consumed = " << triples_consumed
     << "\nscalar_muls = " << scalar_muls << "\npir_queries = " << pir_queries
     << "\nciphertexts_sent = " << ciphertexts_sent;
  for (int p = 0; p < kNumPhases; p++) {
    os << "\npayload_bytes." << kPhaseNames[p] << " = " << payload_bytes[p];
  }
  os << "\n";
  return os.str();
}

SharedMatrix matmul_dense(PartySession& session, MatmulDims dims, const RingMatrix* x,
                          const RingMatrix* y, TripleStore& triples, ProtocolReport* report) {
  size_t k = dims.k, m = dims.m;
  bool is_p0 = session.party_id() == 0;
  if (is_p0 && (x == nullptr || x->rows() != k || x->cols() != m)) {
    throw ShapeError("matmul_dense: P_0 must provide X of shape k x m");
  }
  if (!is_p0 && (y == nullptr || y->rows() != m || y->cols() != m)) {
    throw ShapeError("matmul_dense: P_1 must provide Y of shape m x m");
  }
  StatsDelta delta(session.stats());

  // Input phase: P_0 shares X, then P_1 shares Y.
  std::vector<Share> x_shares, y_shares;
  if (is_p0) {
    x_shares = shr_batch(session, x->data(), dims.x_scale);
    y_shares = shr_recv_batch(session, m * m, dims.y_scale);
  } else {
    x_shares = shr_recv_batch(session, k * m, dims.x_scale);
    y_shares = shr_batch(session, y->data(), dims.y_scale);
  }

  // One multiplication per (i, j, a) in row-major order, all openings in a
  // single batch.
  std::vector<Share> lhs, rhs;
  lhs.reserve(k * m * m);
  rhs.reserve(k * m * m);
  for (size_t i = 0; i < k; i++) {
    for (size_t j = 0; j < m; j++) {
      for (size_t a = 0; a < m; a++) {
        lhs.push_back(x_shares[i * m + a]);
        rhs.push_back(y_shares[a * m + j]);
      }
    }
  }
  size_t before_triples = triples.consumed();
  std::vector<Share> products = mul_batch(session, lhs, rhs, triples);

  SharedMatrix out;
  out.rows = k;
  out.cols = m;
  out.scale = dims.x_scale + dims.y_scale;
  out.shares.assign(k * m, Share{session.party_id(), RingElement{0}, out.scale});
  size_t idx = 0;
  for (size_t i = 0; i < k; i++) {
    for (size_t j = 0; j < m; j++) {
      RingElement acc{0};
      for (size_t a = 0; a < m; a++) acc += products[idx++].value;
      out.at(i, j) = Share{session.party_id(), acc, out.scale};
    }
  }

  if (report != nullptr) {
    report->protocol = "dense";
    report->k = k;
    report->m = m;
    report->t = m * m;
    report->triples_consumed = triples.consumed() - before_triples;
    report->scalar_muls = k * m * m;
    delta.fill(*report);
  }
  return out;
}

SharedMatrix matmul_insensitive(PartySession& session, MatmulDims dims,
                                const std::vector<Loc>& public_support, const RingMatrix* x,
                                const SparseMatrix<RingElement>* y, TripleStore& triples,
                                ProtocolReport* report) {
  size_t k = dims.k, m = dims.m, t = public_support.size();
  bool is_p0 = session.party_id() == 0;
  if (is_p0 && (x == nullptr || x->rows() != k || x->cols() != m)) {
    throw ShapeError("matmul_insensitive: P_0 must provide X of shape k x m");
  }
  if (!is_p0) {
    if (y == nullptr || y->rows() != m || y->cols() != m) {
      throw ShapeError("matmul_insensitive: P_1 must provide Y of shape m x m");
    }
    if (y->locs() != public_support) {
      throw UsageError("matmul_insensitive: Y's support differs from the public support");
    }
  }
  StatsDelta delta(session.stats());

  exchange_digest(session, support_digest(m, m, public_support), "l_y");

  // Input phase: bin contents only. P_0 shares x_{i,a} for every output row
  // i and support entry (a, j); P_1 shares v_y.
  std::vector<Share> x_shares, y_shares;
  if (is_p0) {
    std::vector<RingElement> bins(k * t);
    for (size_t i = 0; i < k; i++) {
      for (size_t e = 0; e < t; e++) bins[i * t + e] = (*x)(i, public_support[e].row);
    }
    x_shares = shr_batch(session, bins, dims.x_scale);
    y_shares = shr_recv_batch(session, t, dims.y_scale);
  } else {
    x_shares = shr_recv_batch(session, k * t, dims.x_scale);
    y_shares = shr_batch(session, y->vals(), dims.y_scale);
  }

  std::vector<Share> lhs, rhs;
  lhs.reserve(k * t);
  rhs.reserve(k * t);
  for (size_t i = 0; i < k; i++) {
    for (size_t e = 0; e < t; e++) {
      lhs.push_back(x_shares[i * t + e]);
      rhs.push_back(y_shares[e]);
    }
  }
  size_t before_triples = triples.consumed();
  std::vector<Share> products;
  if (!lhs.empty()) products = mul_batch(session, lhs, rhs, triples);

  SharedMatrix out;
  out.rows = k;
  out.cols = m;
  out.scale = dims.x_scale + dims.y_scale;
  out.shares.assign(k * m, Share{session.party_id(), RingElement{0}, out.scale});
  for (size_t i = 0; i < k; i++) {
    for (size_t e = 0; e < t; e++) {
      out.at(i, public_support[e].col).value += products[i * t + e].value;
    }
  }

  if (report != nullptr) {
    report->protocol = "insensitive";
    report->k = k;
    report->m = m;
    report->t = t;
    report->triples_consumed = triples.consumed() - before_triples;
    report->scalar_muls = k * t;
    delta.fill(*report);
  }
  return out;
}

SharedMatrix matmul_sensitive(PartySession& session, MatmulDims dims,
                              const SensitiveOptions& options, const SensitiveInputsP0* p0,
                              const SensitiveInputsP1* p1, ProtocolReport* report) {
  size_t k = dims.k, m = dims.m;
  bool is_p0 = session.party_id() == 0;
  if (is_p0 && (p0 == nullptr || p0->x == nullptr || p0->key == nullptr || p0->rng == nullptr)) {
    throw UsageError("matmul_sensitive: P_0 needs X, an AHE key pair and randomness");
  }
  if (!is_p0 && (p1 == nullptr || p1->y == nullptr || p1->rng == nullptr)) {
    throw UsageError("matmul_sensitive: P_1 needs Y and randomness");
  }
  if (is_p0 && (p0->x->rows() != k || p0->x->cols() != m)) {
    throw ShapeError("matmul_sensitive: X must be k x m");
  }
  if (!is_p0 && (p1->y->rows() != m || p1->y->cols() != m)) {
    throw ShapeError("matmul_sensitive: Y must be m x m");
  }
  StatsDelta delta(session.stats());

  SharedMatrix out;
  out.rows = k;
  out.cols = m;
  out.scale = dims.x_scale + dims.y_scale;
  out.shares.assign(k * m, Share{session.party_id(), RingElement{0}, out.scale});

  size_t ciphertexts_sent = 0;
  size_t pir_queries = 0;
  size_t distinct = 0;
  size_t t = 0;

  if (is_p0) {
    const AheKeyPair& kp = *p0->key;
    // Offline: hand the peer the public key (Fig.-5 offline line).
    session.send(Phase::Offline, MsgType::Control, kp.pk().serialize());

    // Mask magnitude check: sums of <= m products of two 64-bit values.
    size_t l_sum = 128 + ceil_log2(std::max<size_t>(m, 1)) + 1;
    if (l_sum + static_cast<size_t>(options.sigma) + 1 >= static_cast<size_t>(kp.pk().bits())) {
      throw ConfigError("mask range exceeds the AHE plaintext space");
    }

    // Encrypt X elementwise.
    std::vector<std::vector<AheCiphertext>> enc_x(k, std::vector<AheCiphertext>(m));
    for (size_t i = 0; i < k; i++) {
      for (size_t a = 0; a < m; a++) {
        enc_x[i][a] = kp.enc(ahe_lift((*p0->x)(i, a)), *p0->rng);
      }
    }

    if (options.mode == SensitiveMode::Pir) {
      // Column-blob database: entry a holds the k ciphertexts of X column a.
      size_t ct_bytes = kp.pk().ciphertext_bytes();
      std::vector<std::vector<uint8_t>> blobs(m);
      for (size_t a = 0; a < m; a++) {
        blobs[a].reserve(k * ct_bytes);
        for (size_t i = 0; i < k; i++) ahe_serialize_into(kp.pk(), enc_x[i][a], blobs[a]);
      }
      PirDatabase db = PirDatabase::from_blobs(std::move(blobs));

      uint64_t query_count = recv_control_u64(session);
      for (uint64_t q = 0; q < query_count; q++) {
        auto query = session.recv_expect(MsgType::PirQuery);
        auto response = pir_respond(db, query);
        session.send(Phase::Compute, MsgType::PirResponse, response);
      }
      // Semantic counter: retrieved column blobs carry k matrix ciphertexts
      // each, independent of the PIR backend's wire encoding.
      ciphertexts_sent = k * query_count;
    } else {
      std::vector<uint8_t> all;
      all.reserve(k * m * kp.pk().ciphertext_bytes());
      for (size_t i = 0; i < k; i++) {
        for (size_t a = 0; a < m; a++) ahe_serialize_into(kp.pk(), enc_x[i][a], all);
      }
      session.send(Phase::Compute, MsgType::AheCiphertextBatch, all);
      ciphertexts_sent = k * m;
    }

    // Receive the k*m masked inner products and decrypt into shares.
    auto masked = session.recv_expect(MsgType::AheCiphertextBatch);
    size_t ct_bytes = kp.pk().ciphertext_bytes();
    if (masked.size() != k * m * ct_bytes) {
      throw ProtocolError("masked result batch has unexpected size");
    }
    for (size_t i = 0; i < k; i++) {
      for (size_t j = 0; j < m; j++) {
        auto block = std::span<const uint8_t>(masked).subspan((i * m + j) * ct_bytes, ct_bytes);
        mpz_class sum = kp.dec(ahe_deserialize(kp.pk(), block));
        out.at(i, j).value = ahe_lower(sum);
      }
    }
  } else {
    const SparseMatrix<RingElement>& y = *p1->y;
    t = y.nnz();
    auto pk_bytes = session.recv_expect(MsgType::Control);
    AhePublicKey pk = AhePublicKey::deserialize(pk_bytes);

    size_t l_sum = 128 + ceil_log2(std::max<size_t>(m, 1)) + 1;
    if (l_sum + static_cast<size_t>(options.sigma) + 1 >= static_cast<size_t>(pk.bits())) {
      throw ConfigError("mask range exceeds the AHE plaintext space");
    }

    // Distinct nonzero rows of Y, ascending; one retrieval per row.
    std::vector<uint32_t> rows;
    for (const auto& l : y.locs()) {
      if (rows.empty() || rows.back() != l.row) rows.push_back(l.row);
    }
    distinct = rows.size();

    size_t ct_bytes = pk.ciphertext_bytes();
    // Retrieved (or transferred) ciphertexts of X, addressed [row a][i].
    std::map<uint32_t, std::vector<AheCiphertext>> columns;

    if (options.mode == SensitiveMode::Pir) {
      size_t padded = rows.size();
      if (options.alpha_pub > 0) {
        padded = std::max(padded,
                          static_cast<size_t>(std::ceil(options.alpha_pub * static_cast<double>(m))));
        padded = std::min(padded, m);
      }
      send_control_u64(session, Phase::Compute, padded);
      bool ahe_backend = options.pir_backend == PirBackend::AheLinear;
      if (ahe_backend && p1->pir_client_key == nullptr) {
        throw UsageError("ahe-linear PIR backend needs a client key pair at P_1");
      }
      PirClient client = ahe_backend ? PirClient(p1->pir_client_key, m, k * ct_bytes)
                                     : PirClient(m, k * ct_bytes);
      for (size_t q = 0; q < padded; q++) {
        // Dummy retrievals (index 0) fill the padding beyond the real rows.
        size_t a = q < rows.size() ? rows[q] : 0;
        auto query = client.make_query(a, *p1->rng);
        session.send(Phase::Compute, MsgType::PirQuery, query);
        auto response = session.recv_expect(MsgType::PirResponse);
        auto blob = client.extract(response);
        if (q < rows.size()) {
          std::vector<AheCiphertext> col(k);
          for (size_t i = 0; i < k; i++) {
            col[i] = ahe_deserialize(pk, std::span<const uint8_t>(blob).subspan(i * ct_bytes, ct_bytes));
          }
          columns.emplace(rows[q], std::move(col));
        }
      }
      pir_queries = padded;
    } else {
      auto all = session.recv_expect(MsgType::AheCiphertextBatch);
      if (all.size() != k * m * ct_bytes) throw ProtocolError("encrypted matrix batch size mismatch");
      for (uint32_t a = 0; a < m; a++) {
        std::vector<AheCiphertext> col(k);
        for (size_t i = 0; i < k; i++) {
          col[i] = ahe_deserialize(
              pk, std::span<const uint8_t>(all).subspan((i * m + a) * ct_bytes, ct_bytes));
        }
        columns.emplace(a, std::move(col));
      }
    }

    auto support = column_support(y);
    std::vector<uint8_t> masked;
    masked.reserve(k * m * ct_bytes);
    for (size_t i = 0; i < k; i++) {
      for (size_t j = 0; j < m; j++) {
        std::optional<AheCiphertext> beta;
        for (const auto& [a, v] : support[j]) {
          const auto& col = columns.at(a);
          AheCiphertext term = ahe_p_mul(pk, col[i], ahe_lift(v));
          beta = beta ? ahe_c_add(pk, *beta, term) : term;
        }
        // Statistical mask: g uniform in [0, 2^(l_sum + sigma)); P_1's share
        // is -(g mod 2^64).
        mpz_class g = p1->rng->uniform_bits(l_sum + static_cast<size_t>(options.sigma));
        AheCiphertext mask = ahe_enc(pk, g, *p1->rng);
        AheCiphertext result = beta ? ahe_c_add(pk, *beta, mask) : mask;
        ahe_serialize_into(pk, result, masked);
        out.at(i, j).value = -ahe_lower(g);
      }
    }
    session.send(Phase::Compute, MsgType::AheCiphertextBatch, masked);
    ciphertexts_sent = k * m;
  }

  if (report != nullptr) {
    report->protocol = "sensitive";
    report->mode = options.mode == SensitiveMode::Pir ? "pir" : "full-transfer";
    report->pir_backend =
        options.mode != SensitiveMode::Pir
            ? ""
            : (options.pir_backend == PirBackend::AheLinear ? "ahe-linear" : "plain");
    report->k = k;
    report->m = m;
    report->t = t;
    report->distinct_rows = distinct;
    report->pir_queries = pir_queries;
    report->ciphertexts_sent = ciphertexts_sent;
    delta.fill(*report);
  }
  return out;
}

RealMatrix st_mpc(PartySession& session, double gamma, MatmulDims dims,
                  const FixedPointCodec& codec, const SensitiveOptions& options,
                  const StMpcInputsP0* p0, const StMpcInputsP1* p1, TripleStore& triples,
                  StMpcReport* report) {
  size_t k = dims.k, m = dims.m;
  bool is_p0 = session.party_id() == 0;
  uint32_t f = static_cast<uint32_t>(codec.frac_bits);
  StatsDelta delta(session.stats());

  // Public diagonal support for D^T + E^T: all m cells, values included
  // even when zero, so the shape leaks nothing about the data.
  std::vector<Loc> diag_support(m);
  for (size_t i = 0; i < m; i++) {
    diag_support[i] = {static_cast<uint32_t>(i), static_cast<uint32_t>(i)};
  }

  MatmulDims sub{k, m, f, f};

  SharedMatrix r0, r1;
  if (is_p0) {
    if (p0 == nullptr || p0->u == nullptr) throw UsageError("st_mpc: P_0 must provide U");
    if (p0->u->rows() != k || p0->u->cols() != m) throw ShapeError("st_mpc: U must be k x m");
    RealMatrix half = (gamma / 2.0) * (*p0->u);
    RingMatrix x1 = encode_matrix(half, codec);
    r0 = matmul_insensitive(session, sub, diag_support, &x1, nullptr, triples,
                            report ? &report->insensitive : nullptr);
    RealMatrix neg = -gamma * (*p0->u);
    RingMatrix x2 = encode_matrix(neg, codec);
    SensitiveInputsP0 sp0{&x2, p0->key, p0->rng};
    r1 = matmul_sensitive(session, sub, options, &sp0, nullptr,
                          report ? &report->sensitive : nullptr);
  } else {
    if (p1 == nullptr || p1->d == nullptr || p1->e == nullptr || p1->s == nullptr) {
      throw UsageError("st_mpc: P_1 must provide D, E and S");
    }
    // Y1 = D^T + E^T on the full diagonal.
    DiagonalMatrix<double> de(m);
    for (size_t i = 0; i < m; i++) de.diag[i] = p1->d->diag[i] + p1->e->diag[i];
    auto y1 = encode_sparse(de.to_sparse_full(), codec);
    r0 = matmul_insensitive(session, sub, diag_support, nullptr, &y1, triples,
                            report ? &report->insensitive : nullptr);
    auto y2 = encode_sparse(p1->s->transpose(), codec);
    SensitiveInputsP1 sp1{&y2, p1->pir_client_key, p1->rng};
    r1 = matmul_sensitive(session, sub, options, nullptr, &sp1,
                          report ? &report->sensitive : nullptr);
  }

  SharedMatrix sum = shared_add(r0, r1);
  auto opened = reconstruct(session, sum, 0);

  if (report != nullptr) delta.fill_payload(report->payload_bytes);

  if (!opened) return RealMatrix();
  return decode_matrix(*opened, codec, 2 * static_cast<int>(f));
}

}  // namespace s3rec
