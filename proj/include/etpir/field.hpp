#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace etpir {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FieldMismatch : public Error {
 public:
  using Error::Error;
};

class DivisionByZero : public Error {
 public:
  using Error::Error;
};

/// Deterministic Miller-Rabin, exact for every 64-bit input.
bool is_prime(std::uint64_t n);

/// GF(q) for a prime q < 2^64. A PrimeField is a small value type; copies are
/// cheap and two fields compare equal iff their moduli match.
class PrimeField {
 public:
  explicit PrimeField(std::uint64_t modulus);

  std::uint64_t modulus() const noexcept { return q_; }

  // Raw residue arithmetic; inputs must already lie in [0, q).
  std::uint64_t add(std::uint64_t a, std::uint64_t b) const noexcept {
    std::uint64_t s = a + b;
    // a, b < q < 2^64, so overflow of the sum means s wrapped past 2^64.
    if (s < a || s >= q_) s -= q_;
    return s;
  }
  std::uint64_t sub(std::uint64_t a, std::uint64_t b) const noexcept {
    return a >= b ? a - b : a + (q_ - b);
  }
  std::uint64_t neg(std::uint64_t a) const noexcept { return a == 0 ? 0 : q_ - a; }
  std::uint64_t mul(std::uint64_t a, std::uint64_t b) const noexcept {
    if (small_) return (a * b) % q_;
    return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % q_);
  }
  std::uint64_t pow(std::uint64_t base, std::uint64_t exp) const noexcept;
  /// Throws DivisionByZero for a == 0.
  std::uint64_t inv(std::uint64_t a) const;

  /// Reduces an arbitrary signed integer into [0, q).
  std::uint64_t reduce(std::int64_t v) const noexcept;
  std::uint64_t reduce_unsigned(std::uint64_t v) const noexcept { return v % q_; }

  friend bool operator==(const PrimeField& a, const PrimeField& b) noexcept {
    return a.q_ == b.q_;
  }

 private:
  std::uint64_t q_;
  bool small_;  // q < 2^32: products fit in 64 bits
};

/// The Mersenne prime used by randomized constructions unless overridden.
inline constexpr std::uint64_t kDefaultModulus = 2147483647ULL;

class FieldElement {
 public:
  FieldElement(PrimeField field, std::uint64_t value);

  static FieldElement zero(PrimeField f) { return FieldElement(f, 0); }
  static FieldElement one(PrimeField f) { return FieldElement(f, 1); }
  static FieldElement from_signed(PrimeField f, std::int64_t v) {
    return FieldElement(f, f.reduce(v));
  }

  std::uint64_t value() const noexcept { return value_; }
  const PrimeField& field() const noexcept { return field_; }
  bool is_zero() const noexcept { return value_ == 0; }

  FieldElement operator+(const FieldElement& o) const;
  FieldElement operator-(const FieldElement& o) const;
  FieldElement operator*(const FieldElement& o) const;
  FieldElement operator-() const { return FieldElement(field_, field_.neg(value_), Trusted{}); }
  FieldElement inv() const;
  FieldElement pow(std::uint64_t e) const {
    return FieldElement(field_, field_.pow(value_, e), Trusted{});
  }

  friend bool operator==(const FieldElement& a, const FieldElement& b) noexcept {
    return a.field_ == b.field_ && a.value_ == b.value_;
  }

 private:
  struct Trusted {};
  FieldElement(PrimeField f, std::uint64_t v, Trusted) : field_(f), value_(v) {}
  void check_same(const FieldElement& o) const;

  PrimeField field_;
  std::uint64_t value_;
};

inline FieldElement add(const FieldElement& a, const FieldElement& b) { return a + b; }
inline FieldElement mul(const FieldElement& a, const FieldElement& b) { return a * b; }
inline FieldElement inv(const FieldElement& a) { return a.inv(); }

/// Seeded random source. Every random choice in the library is drawn from an
/// Rng handed in by the caller; an Rng is never shared between threads.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform residue in [0, q) by rejection on the 64-bit word range.
  std::uint64_t uniform(const PrimeField& f);
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

 private:
  std::mt19937_64 engine_;
};

FieldElement uniform_sample(const PrimeField& field, Rng& rng);

/// Mixes several words into one seed (splitmix64 finaliser chain).
std::uint64_t mix_seed(std::initializer_list<std::uint64_t> words);

// Wire/file representation: 8-byte little-endian unsigned integers.
std::array<std::uint8_t, 8> encode_le64(std::uint64_t v);
std::uint64_t decode_le64(std::span<const std::uint8_t> bytes);
std::array<std::uint8_t, 8> encode_element(const FieldElement& e);
/// Throws Error when the decoded integer is not a residue of `field`.
FieldElement decode_element(const PrimeField& field, std::span<const std::uint8_t> bytes);

}  // namespace etpir
