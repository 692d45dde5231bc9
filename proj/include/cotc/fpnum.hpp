// Software floating-point kernel for the F_{e,s} number system: numbers of the
// form sign * S * 2^(E-s) with a 2s-bit significand (0 <= S <= 2^{2s}-1) and an
// e-bit exponent, rounded to nearest with ties toward the smaller absolute
// value and overflow saturating at +-B.  With e = 0 the exponent is pinned to 0
// (fixed-point grid, B_s = 2^s - 2^{-s}).
//
// Every operation computes its exact result first (arbitrary-precision
// rationals; an enclosure for exp) and rounds once.  All arithmetic is
// integer-exact internally, so results are bit-identical across platforms and
// runs.  Values are immutable and operations are pure; the only shared state
// is a mutex-guarded memo table for exp.

#pragma once

#include <gmpxx.h>
#include <mpfr.h>

#include <cstdint>
#include <mutex>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace cotc {

using Rational = mpq_class;  // exact pre-rounding intermediate

class DivisionByZeroError : public std::runtime_error {
 public:
  DivisionByZeroError() : std::runtime_error("division by zero in F_{e,s}") {}
};

class PrecisionError : public std::runtime_error {
 public:
  explicit PrecisionError(const std::string& what) : std::runtime_error(what) {}
};

struct PrecisionConfig {
  int e = 0;  // exponent bits
  int s = 2;  // half the significand bit count ("2s-bit precision")

  // Significand magnitudes must fit in int64 and products in int128.
  static constexpr int kMaxS = 31;
  static constexpr int kMaxE = 8;

  void validate() const {
    if (s < 1 || s > kMaxS) throw PrecisionError("precision s out of supported range [1,31]");
    if (e < 0 || e > kMaxE) throw PrecisionError("exponent bits e out of supported range [0,8]");
  }

  std::int64_t max_significand() const { return (std::int64_t{1} << (2 * s)) - 1; }

  // e = 0 uses the fixed exponent 0; otherwise E in [-2^{e-1}, 2^e - 1 - 2^{e-1}].
  int exponent_min() const { return e == 0 ? 0 : -(1 << (e - 1)); }
  int exponent_max() const { return e == 0 ? 0 : (1 << e) - 1 - (1 << (e - 1)); }

  // B_{e,s}, the largest representable magnitude.
  Rational max_magnitude() const {
    Rational b(max_significand());
    int t = exponent_max() - s;
    if (t >= 0)
      mpq_mul_2exp(b.get_mpq_t(), b.get_mpq_t(), static_cast<unsigned>(t));
    else
      mpq_div_2exp(b.get_mpq_t(), b.get_mpq_t(), static_cast<unsigned>(-t));
    return b;
  }

  bool operator==(const PrecisionConfig&) const = default;
};

class FpNumber {
 public:
  // Zero in F_{0,1}; containers need a default state, real values come from
  // the factories below.
  FpNumber() : sig_(0), exp_(0), cfg_{0, 1} {}

  static FpNumber zero(PrecisionConfig cfg) {
    cfg.validate();
    return FpNumber(0, 0, cfg);
  }

  static FpNumber max_positive(PrecisionConfig cfg) {
    cfg.validate();
    return FpNumber(cfg.max_significand(), cfg.exponent_max(), cfg);
  }

  // Accepts any valid (signed significand, exponent) pair and canonicalizes it
  // to the smallest-|exponent| representation (zero gets sign +1, exponent 0).
  static FpNumber from_scaled(std::int64_t signed_significand, int exponent, PrecisionConfig cfg);

  // Exactly representable rationals only.
  static FpNumber from_rational_exact(const Rational& q, PrecisionConfig cfg);
  static FpNumber from_int(long v, PrecisionConfig cfg) { return from_rational_exact(Rational(v), cfg); }

  int sign() const { return sig_ < 0 ? -1 : 1; }
  std::int64_t significand() const { return sig_ < 0 ? -sig_ : sig_; }
  int exponent() const { return exp_; }
  std::int64_t signed_significand() const { return sig_; }
  const PrecisionConfig& cfg() const { return cfg_; }
  bool is_zero() const { return sig_ == 0; }

  Rational value() const {
    Rational v(sig_);
    int t = exp_ - cfg_.s;
    if (t >= 0)
      mpq_mul_2exp(v.get_mpq_t(), v.get_mpq_t(), static_cast<unsigned>(t));
    else
      mpq_div_2exp(v.get_mpq_t(), v.get_mpq_t(), static_cast<unsigned>(-t));
    return v;
  }

  // Exact decimal expansion (dyadic rationals always have one).
  std::string to_decimal_string() const;

  bool operator==(const FpNumber& o) const {
    return sig_ == o.sig_ && exp_ == o.exp_ && cfg_ == o.cfg_;
  }
  bool operator!=(const FpNumber& o) const { return !(*this == o); }

  // Value order; mixed-cfg comparison is a programming error.
  bool operator<(const FpNumber& o) const {
    if (cfg_.e == 0 && o.cfg_.e == 0) return sig_ < o.sig_;
    return value() < o.value();
  }
  bool operator<=(const FpNumber& o) const { return *this == o || *this < o; }

  friend FpNumber add_rounded(const FpNumber&, const FpNumber&);
  friend FpNumber sub_rounded(const FpNumber&, const FpNumber&);
  friend FpNumber mul_rounded(const FpNumber&, const FpNumber&);
  friend FpNumber div_rounded(const FpNumber&, const FpNumber&);
  friend FpNumber relu(const FpNumber&);
  friend FpNumber round_to_grid(const Rational&, PrecisionConfig);

 private:
  FpNumber(std::int64_t sig, int exp, PrecisionConfig cfg) : sig_(sig), exp_(exp), cfg_(cfg) {}

  static FpNumber canonical(std::int64_t signed_significand, int exponent, PrecisionConfig cfg);

  std::int64_t sig_;  // sign * S
  std::int32_t exp_;  // E; always 0 when cfg.e == 0
  PrecisionConfig cfg_;
};

using FpVec = std::vector<FpNumber>;

struct FpMat {
  std::size_t rows = 0, cols = 0;
  FpVec data;  // row-major

  FpMat() = default;
  FpMat(std::size_t r, std::size_t c, FpNumber fill) : rows(r), cols(c), data(r * c, fill) {}

  FpNumber& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  const FpNumber& at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  bool operator==(const FpMat&) const = default;
};

namespace detail {

inline void require_same_cfg(const FpNumber& a, const FpNumber& b) {
  if (!(a.cfg() == b.cfg())) throw std::invalid_argument("mixed PrecisionConfig operands");
}

// floor(log2(n)) for n > 0.
inline long floor_log2(const mpz_class& n) {
  return static_cast<long>(mpz_sizeinbase(n.get_mpz_t(), 2)) - 1;
}

inline Rational pow2(long t) {
  Rational r(1);
  if (t >= 0)
    mpq_mul_2exp(r.get_mpq_t(), r.get_mpq_t(), static_cast<unsigned>(t));
  else
    mpq_div_2exp(r.get_mpq_t(), r.get_mpq_t(), static_cast<unsigned>(-t));
  return r;
}

}  // namespace detail

inline FpNumber FpNumber::canonical(std::int64_t signed_significand, int exponent, PrecisionConfig cfg) {
  cfg.validate();
  std::int64_t mag = signed_significand < 0 ? -signed_significand : signed_significand;
  if (mag > cfg.max_significand()) throw std::invalid_argument("significand out of range");
  if (exponent < cfg.exponent_min() || exponent > cfg.exponent_max())
    throw std::invalid_argument("exponent out of range");
  if (mag == 0) return FpNumber(0, 0, cfg);
  if (cfg.e == 0) return FpNumber(signed_significand, 0, cfg);

  // Minimal-|E| representation: value = m * 2^g with m odd, then S(E) = m * 2^{g+s-E}.
  int tz = __builtin_ctzll(static_cast<unsigned long long>(mag));
  std::int64_t m = mag >> tz;
  long g = exponent - cfg.s + tz;
  long e_hi = g + cfg.s;  // integrality bound
  mpz_class q = mpz_class(cfg.max_significand()) / m;
  long e_lo = g + cfg.s - detail::floor_log2(q);  // S(E) <= max bound
  e_hi = std::min<long>(e_hi, cfg.exponent_max());
  e_lo = std::max<long>(e_lo, cfg.exponent_min());
  long e_star = e_lo > 0 ? e_lo : (e_hi < 0 ? e_hi : 0);
  std::int64_t s_mag = m << (g + cfg.s - e_star);
  return FpNumber(signed_significand < 0 ? -s_mag : s_mag, static_cast<int>(e_star), cfg);
}

inline FpNumber FpNumber::from_scaled(std::int64_t signed_significand, int exponent, PrecisionConfig cfg) {
  return canonical(signed_significand, exponent, cfg);
}

// Correct rounding: nearest element of F_{e,s}, ties to the smaller absolute
// value, |x| >= B saturating to sign(x)*B.
inline FpNumber round_to_grid(const Rational& x, PrecisionConfig cfg) {
  cfg.validate();
  const int sg = sgn(x);
  if (sg == 0) return FpNumber::zero(cfg);
  Rational a = abs(x);
  const std::int64_t m = cfg.max_significand();
  if (a >= cfg.max_magnitude())
    return FpNumber::canonical(sg < 0 ? -m : m, cfg.exponent_max(), cfg);

  // Smallest exponent scale whose progression {k * 2^{E-s}} reaches a.
  int e_sel = cfg.exponent_min();
  while (a > Rational(m) * detail::pow2(e_sel - cfg.s)) ++e_sel;

  // Nearest point of that progression: k = ceil(t - 1/2) with t = a * 2^{s - e_sel}
  // (the ceil form sends exact halves to the smaller magnitude).
  Rational t = a * detail::pow2(cfg.s - e_sel);
  mpz_class num = t.get_num(), den = t.get_den();
  mpz_class k = (2 * num + den - 1) / (2 * den);  // ceil((2n-d)/(2d)), positive numerator
  Rational c1 = Rational(k) * detail::pow2(e_sel - cfg.s);

  // Near a zone boundary the top of the next-finer progression can be closer.
  if (e_sel > cfg.exponent_min()) {
    Rational c2 = Rational(m) * detail::pow2(e_sel - 1 - cfg.s);
    Rational d1 = abs(a - c1), d2 = a - c2;
    if (d2 < d1 || (d2 == d1 && c2 < c1)) return FpNumber::canonical(sg < 0 ? -m : m, e_sel - 1, cfg);
  }
  std::int64_t ks = static_cast<std::int64_t>(mpz_get_si(k.get_mpz_t()));
  return FpNumber::canonical(sg < 0 ? -ks : ks, e_sel, cfg);
}

inline FpNumber FpNumber::from_rational_exact(const Rational& q, PrecisionConfig cfg) {
  FpNumber r = round_to_grid(q, cfg);
  if (r.value() != q) throw std::invalid_argument("value not representable in F_{e,s}");
  return r;
}

inline FpNumber add_rounded(const FpNumber& a, const FpNumber& b) {
  detail::require_same_cfg(a, b);
  const PrecisionConfig cfg = a.cfg_;
  if (cfg.e == 0) {
    // Exact on the 2^{-s} grid; rounding can only saturate.
    std::int64_t t = a.sig_ + b.sig_;
    const std::int64_t m = cfg.max_significand();
    if (t > m) t = m;
    if (t < -m) t = -m;
    return FpNumber(t, 0, cfg);
  }
  return round_to_grid(a.value() + b.value(), cfg);
}

inline FpNumber sub_rounded(const FpNumber& a, const FpNumber& b) {
  detail::require_same_cfg(a, b);
  const PrecisionConfig cfg = a.cfg_;
  if (cfg.e == 0) {
    std::int64_t t = a.sig_ - b.sig_;
    const std::int64_t m = cfg.max_significand();
    if (t > m) t = m;
    if (t < -m) t = -m;
    return FpNumber(t, 0, cfg);
  }
  return round_to_grid(a.value() - b.value(), cfg);
}

inline FpNumber mul_rounded(const FpNumber& a, const FpNumber& b) {
  detail::require_same_cfg(a, b);
  const PrecisionConfig cfg = a.cfg_;
  if (cfg.e == 0) {
    // value = p * 2^{-2s}; round p / 2^s to an integer, ties toward zero.
    __int128 p = static_cast<__int128>(a.sig_) * b.sig_;
    bool neg = p < 0;
    unsigned __int128 mag = neg ? static_cast<unsigned __int128>(-p) : static_cast<unsigned __int128>(p);
    unsigned __int128 q = mag >> cfg.s;
    unsigned __int128 r = mag & ((static_cast<unsigned __int128>(1) << cfg.s) - 1);
    unsigned __int128 half = static_cast<unsigned __int128>(1) << (cfg.s - 1);
    if (r > half) ++q;
    const auto m = static_cast<unsigned __int128>(cfg.max_significand());
    if (q > m) q = m;
    auto sig = static_cast<std::int64_t>(q);
    return FpNumber(neg ? -sig : sig, 0, cfg);
  }
  return round_to_grid(a.value() * b.value(), cfg);
}

inline FpNumber div_rounded(const FpNumber& a, const FpNumber& b) {
  detail::require_same_cfg(a, b);
  if (b.is_zero()) throw DivisionByZeroError();
  const PrecisionConfig cfg = a.cfg_;
  if (cfg.e == 0) {
    // value = a.sig / b.sig; scaled target is a.sig * 2^s / b.sig.
    auto amag = static_cast<unsigned __int128>(a.sig_ < 0 ? -a.sig_ : a.sig_);
    auto bmag = static_cast<unsigned __int128>(b.sig_ < 0 ? -b.sig_ : b.sig_);
    unsigned __int128 n = amag << cfg.s;
    unsigned __int128 q = n / bmag, r = n % bmag;
    if (2 * r > bmag) ++q;  // exact halves stay with the smaller magnitude
    const auto m = static_cast<unsigned __int128>(cfg.max_significand());
    if (q > m) q = m;
    bool neg = (a.sig_ < 0) != (b.sig_ < 0);
    auto sig = static_cast<std::int64_t>(q);
    return FpNumber(neg ? -sig : sig, 0, cfg);
  }
  return round_to_grid(a.value() / b.value(), cfg);
}

// max(x, 0) never leaves the grid; no rounding.
inline FpNumber relu(const FpNumber& x) {
  return x.sig_ < 0 ? FpNumber::zero(x.cfg_) : x;
}

namespace detail {

struct ExpKey {
  int e, s;
  std::int64_t sig;
  int exp;
  bool operator==(const ExpKey&) const = default;
};

struct ExpKeyHash {
  std::size_t operator()(const ExpKey& k) const {
    std::uint64_t h = 0x9e3779b97f4a7c15ull;
    auto mix = [&h](std::uint64_t v) {
      h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    };
    mix(static_cast<std::uint64_t>(k.e));
    mix(static_cast<std::uint64_t>(k.s));
    mix(static_cast<std::uint64_t>(k.sig));
    mix(static_cast<std::uint64_t>(k.exp));
    return static_cast<std::size_t>(h);
  }
};

class MpfrValue {
 public:
  explicit MpfrValue(mpfr_prec_t prec) { mpfr_init2(v_, prec); }
  ~MpfrValue() { mpfr_clear(v_); }
  MpfrValue(const MpfrValue&) = delete;
  MpfrValue& operator=(const MpfrValue&) = delete;
  mpfr_ptr get() { return v_; }
  mpfr_srcptr get() const { return v_; }

 private:
  mpfr_t v_;
};

inline Rational mpfr_to_rational(mpfr_srcptr x) {
  mpz_class mant;
  mpfr_exp_t e2 = mpfr_get_z_2exp(mant.get_mpz_t(), x);
  Rational r(mant);
  if (e2 >= 0)
    mpq_mul_2exp(r.get_mpq_t(), r.get_mpq_t(), static_cast<unsigned long>(e2));
  else
    mpq_div_2exp(r.get_mpq_t(), r.get_mpq_t(), static_cast<unsigned long>(-e2));
  return r;
}

// Correctly rounded exp via interval refinement: at each precision we hold
// exp(x) in [lo, hi]; once both endpoints round to the same grid point that
// point is the correct rounding (rounding is monotone).  For x != 0, exp(x)
// is transcendental, so the enclosure cannot straddle a tie midpoint forever.
inline FpNumber exp_rounded_uncached(const FpNumber& x) {
  const PrecisionConfig cfg = x.cfg();
  const Rational xq = x.value();
  const Rational b_mag = cfg.max_magnitude();
  // Half of the smallest positive grid point: at or below it, round to 0.
  const Rational tiny = detail::pow2(cfg.exponent_min() - cfg.s - 1);

  for (mpfr_prec_t prec = 96; prec <= (mpfr_prec_t{1} << 20); prec *= 2) {
    MpfrValue lo(prec), hi(prec);
    mpfr_set_q(lo.get(), xq.get_mpq_t(), MPFR_RNDD);
    mpfr_exp(lo.get(), lo.get(), MPFR_RNDD);
    mpfr_set_q(hi.get(), xq.get_mpq_t(), MPFR_RNDU);
    mpfr_exp(hi.get(), hi.get(), MPFR_RNDU);

    // Guard the far cases in mpfr before converting to rationals, so the
    // conversion never builds numbers with astronomically large exponents.
    if (mpfr_cmp_q(lo.get(), b_mag.get_mpq_t()) >= 0) return FpNumber::max_positive(cfg);
    if (mpfr_cmp_q(hi.get(), tiny.get_mpq_t()) <= 0) return FpNumber::zero(cfg);

    FpNumber flo = round_to_grid(mpfr_to_rational(lo.get()), cfg);
    FpNumber fhi = round_to_grid(mpfr_to_rational(hi.get()), cfg);
    if (flo == fhi) return flo;
  }
  throw std::logic_error("exp_rounded: enclosure failed to converge");
}

}  // namespace detail

inline FpNumber exp_rounded(const FpNumber& x) {
  if (x.is_zero()) return round_to_grid(Rational(1), x.cfg());
  static std::mutex memo_mutex;
  static std::unordered_map<detail::ExpKey, FpNumber, detail::ExpKeyHash> memo;
  detail::ExpKey key{x.cfg().e, x.cfg().s, x.signed_significand(), x.exponent()};
  {
    std::lock_guard<std::mutex> lock(memo_mutex);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
  }
  FpNumber r = detail::exp_rounded_uncached(x);
  {
    std::lock_guard<std::mutex> lock(memo_mutex);
    memo.emplace(key, r);
  }
  return r;
}

// Strict left fold of rounded binary additions.  Order is part of the
// contract: iterated rounded addition is not associative.
inline FpNumber sum_iter(std::span<const FpNumber> xs) {
  if (xs.empty()) throw std::invalid_argument("sum_iter: empty sequence");
  FpNumber acc = xs[0];
  for (std::size_t i = 1; i < xs.size(); ++i) acc = add_rounded(acc, xs[i]);
  return acc;
}

// sum_iter over elementwise rounded products.
inline FpNumber inner_rounded(std::span<const FpNumber> x, std::span<const FpNumber> y) {
  if (x.size() != y.size()) throw std::invalid_argument("inner_rounded: length mismatch");
  if (x.empty()) throw std::invalid_argument("inner_rounded: empty vectors");
  FpNumber acc = mul_rounded(x[0], y[0]);
  for (std::size_t i = 1; i < x.size(); ++i) acc = add_rounded(acc, mul_rounded(x[i], y[i]));
  return acc;
}

inline FpMat matmul_rounded(const FpMat& a, const FpMat& b) {
  if (a.cols != b.rows) throw std::invalid_argument("matmul_rounded: shape mismatch");
  if (a.cols == 0) throw std::invalid_argument("matmul_rounded: empty inner dimension");
  FpMat out;
  out.rows = a.rows;
  out.cols = b.cols;
  out.data.reserve(a.rows * b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < b.cols; ++j) {
      FpNumber acc = mul_rounded(a.at(i, 0), b.at(0, j));
      for (std::size_t k = 1; k < a.cols; ++k)
        acc = add_rounded(acc, mul_rounded(a.at(i, k), b.at(k, j)));
      out.data.push_back(acc);
    }
  return out;
}

// Rounded matrix * vector, the shape every transformer layer actually uses.
inline FpVec matvec_rounded(const FpMat& a, std::span<const FpNumber> x) {
  if (a.cols != x.size()) throw std::invalid_argument("matvec_rounded: shape mismatch");
  if (a.cols == 0) throw std::invalid_argument("matvec_rounded: empty inner dimension");
  FpVec out;
  out.reserve(a.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    FpNumber acc = mul_rounded(a.at(i, 0), x[0]);
    for (std::size_t k = 1; k < a.cols; ++k) acc = add_rounded(acc, mul_rounded(a.at(i, k), x[k]));
    out.push_back(acc);
  }
  return out;
}

// round(round(exp(x)) / sum_{e,s}(round(exp(x)))).  Throws DivisionByZeroError
// when every numerator rounds to 0.
inline FpVec softmax_rounded(std::span<const FpNumber> x) {
  if (x.empty()) throw std::invalid_argument("softmax_rounded: empty input");
  FpVec nums;
  nums.reserve(x.size());
  for (const FpNumber& v : x) nums.push_back(exp_rounded(v));
  FpNumber den = sum_iter(nums);
  FpVec out;
  out.reserve(x.size());
  for (const FpNumber& n : nums) out.push_back(div_rounded(n, den));
  return out;
}

inline std::string FpNumber::to_decimal_string() const {
  if (sig_ == 0) return "0";
  mpz_class mag(significand());
  int t = exp_ - cfg_.s;
  std::string out = sig_ < 0 ? "-" : "";
  if (t >= 0) {
    mpz_class v = mag << t;
    return out + v.get_str();
  }
  // mag / 2^{|t|} == mag * 5^{|t|} / 10^{|t|}
  int k = -t;
  mpz_class five = 1;
  for (int i = 0; i < k; ++i) five *= 5;
  mpz_class scaled = mag * five;
  std::string digits = scaled.get_str();
  if (static_cast<int>(digits.size()) <= k)
    digits.insert(0, static_cast<std::size_t>(k) + 1 - digits.size(), '0');
  digits.insert(digits.size() - k, ".");
  while (digits.back() == '0') digits.pop_back();
  if (digits.back() == '.') digits.pop_back();
  return out + digits;
}

inline std::ostream& operator<<(std::ostream& os, const FpNumber& v) {
  return os << v.to_decimal_string();
}

// Exact decimal text ("1.5", "-0.25") to a grid point; non-representable or
// malformed input throws.
inline FpNumber parse_decimal_exact(const std::string& text, PrecisionConfig cfg) {
  std::string t = text;
  bool neg = false;
  if (!t.empty() && (t[0] == '+' || t[0] == '-')) {
    neg = t[0] == '-';
    t.erase(0, 1);
  }
  auto dot = t.find('.');
  std::string ip = dot == std::string::npos ? t : t.substr(0, dot);
  std::string fp = dot == std::string::npos ? "" : t.substr(dot + 1);
  if (ip.empty() && fp.empty()) throw std::invalid_argument("bad decimal: '" + text + "'");
  for (char c : ip + fp)
    if (c < '0' || c > '9') throw std::invalid_argument("bad decimal: '" + text + "'");
  mpz_class num(ip.empty() ? "0" : ip);
  mpz_class den = 1;
  for (char c : fp) {
    num = num * 10 + (c - '0');
    den *= 10;
  }
  Rational q(num, den);
  q.canonicalize();
  if (neg) q = -q;
  return FpNumber::from_rational_exact(q, cfg);
}

}  // namespace cotc
