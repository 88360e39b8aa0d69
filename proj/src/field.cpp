#include "etpir/field.hpp"

#include <limits>

namespace etpir {

namespace {

std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
  return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % m);
}

std::uint64_t powmod(std::uint64_t b, std::uint64_t e, std::uint64_t m) {
  std::uint64_t r = 1 % m;
  b %= m;
  while (e) {
    if (e & 1) r = mulmod(r, b, m);
    b = mulmod(b, b, m);
    e >>= 1;
  }
  return r;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

bool is_prime(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t p : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
    if (n % p == 0) return n == p;
  }
  std::uint64_t d = n - 1;
  int s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  // These twelve bases are a deterministic witness set below 3.3e24.
  for (std::uint64_t a : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
    std::uint64_t x = powmod(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int r = 1; r < s; ++r) {
      x = mulmod(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

PrimeField::PrimeField(std::uint64_t modulus) : q_(modulus), small_(modulus < (1ULL << 32)) {
  if (!is_prime(modulus)) {
    throw Error("field modulus " + std::to_string(modulus) + " is not prime");
  }
}

std::uint64_t PrimeField::pow(std::uint64_t base, std::uint64_t exp) const noexcept {
  std::uint64_t r = 1;
  while (exp) {
    if (exp & 1) r = mul(r, base);
    base = mul(base, base);
    exp >>= 1;
  }
  return r;
}

std::uint64_t PrimeField::inv(std::uint64_t a) const {
  if (a == 0) throw DivisionByZero("inverse of zero in GF(" + std::to_string(q_) + ")");
  return pow(a, q_ - 2);
}

std::uint64_t PrimeField::reduce(std::int64_t v) const noexcept {
  if (v >= 0) return static_cast<std::uint64_t>(v) % q_;
  // -(v+1) avoids overflow at INT64_MIN.
  std::uint64_t m = (static_cast<std::uint64_t>(-(v + 1)) + 1) % q_;
  return m == 0 ? 0 : q_ - m;
}

FieldElement::FieldElement(PrimeField field, std::uint64_t value) : field_(field), value_(value) {
  if (value >= field.modulus()) {
    throw Error("value " + std::to_string(value) + " outside GF(" + std::to_string(field.modulus()) + ")");
  }
}

void FieldElement::check_same(const FieldElement& o) const {
  if (!(field_ == o.field_)) {
    throw FieldMismatch("operands from GF(" + std::to_string(field_.modulus()) + ") and GF(" +
                        std::to_string(o.field_.modulus()) + ")");
  }
}

FieldElement FieldElement::operator+(const FieldElement& o) const {
  check_same(o);
  return FieldElement(field_, field_.add(value_, o.value_), Trusted{});
}

FieldElement FieldElement::operator-(const FieldElement& o) const {
  check_same(o);
  return FieldElement(field_, field_.sub(value_, o.value_), Trusted{});
}

FieldElement FieldElement::operator*(const FieldElement& o) const {
  check_same(o);
  return FieldElement(field_, field_.mul(value_, o.value_), Trusted{});
}

FieldElement FieldElement::inv() const { return FieldElement(field_, field_.inv(value_), Trusted{}); }

std::uint64_t Rng::uniform(const PrimeField& f) { return below(f.modulus()); }

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw Error("Rng::below: empty range");
  const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
  // 2^64 mod bound; words in the top `excess` values would bias low residues.
  const std::uint64_t excess = (max % bound + 1) % bound;
  for (;;) {
    std::uint64_t w = engine_();
    if (excess == 0 || w <= max - excess) return w % bound;
  }
}

FieldElement uniform_sample(const PrimeField& field, Rng& rng) {
  return FieldElement(field, rng.uniform(field));
}

std::uint64_t mix_seed(std::initializer_list<std::uint64_t> words) {
  std::uint64_t h = 0x6A09E667F3BCC909ULL;
  for (std::uint64_t w : words) h = splitmix64(h ^ splitmix64(w));
  return h;
}

std::array<std::uint8_t, 8> encode_le64(std::uint64_t v) {
  std::array<std::uint8_t, 8> out{};
  for (int i = 0; i < 8; ++i) out[i] = static_cast<std::uint8_t>(v >> (8 * i));
  return out;
}

std::uint64_t decode_le64(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8) throw Error("short read decoding 8-byte integer");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | bytes[i];
  return v;
}

std::array<std::uint8_t, 8> encode_element(const FieldElement& e) { return encode_le64(e.value()); }

FieldElement decode_element(const PrimeField& field, std::span<const std::uint8_t> bytes) {
  return FieldElement(field, decode_le64(bytes));
}

}  // namespace etpir
