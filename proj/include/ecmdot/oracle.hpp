#pragma once

// Reference dot products. Every product is split exactly into a double pair
// (TwoProduct via fma) and both halves go into a fixed-point accumulator
// wide enough for the whole binary64 range, so the sum carries no rounding
// at all until it is read out. The read-out is a double-double (~106 bits).

#include <array>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <cstring>
#include <ranges>
#include <span>
#include <stdexcept>

namespace ecmdot {

/// Unevaluated sum hi + lo with |lo| <= ulp(hi)/2.
struct double_double {
  double hi = 0;
  double lo = 0;

  double value() const { return hi + lo; }
};

class exact_accumulator {
 public:
  void add(double x) {
    if (x == 0) return;
    if (!std::isfinite(x)) throw std::domain_error("non-finite summand");
    std::uint64_t bits;
    std::memcpy(&bits, &x, sizeof bits);
    const bool negative = bits >> 63;
    const int biased = static_cast<int>((bits >> 52) & 0x7ff);
    std::uint64_t mant = bits & ((std::uint64_t{1} << 52) - 1);
    // value = mant * 2^(pos - bias_offset), pos counted from 2^-1074
    int pos = 0;
    if (biased == 0) {
      pos = 0;
    } else {
      mant |= std::uint64_t{1} << 52;
      pos = biased - 1;
    }
    const int limb = pos / limb_bits;
    const int shift = pos % limb_bits;
    // mant < 2^53, shifted by < 32 -> < 2^85: spread over three limbs.
    const unsigned __int128 wide = static_cast<unsigned __int128>(mant) << shift;
    const std::int64_t sign = negative ? -1 : 1;
    for (int k = 0; k < 3; ++k) {
      const auto part = static_cast<std::int64_t>(
          static_cast<std::uint64_t>(wide >> (k * limb_bits)) & limb_mask);
      limbs_[limb + k] += sign * part;
    }
    if (++pending_ == normalize_every) normalize();
  }

  /// Adds a*b exactly.
  void add_product(double a, double b) {
    const double p = a * b;
    const double e = std::fma(a, b, -p);
    add(p);
    add(e);
  }

  double_double result() const {
    exact_accumulator copy = *this;
    copy.normalize();
    auto limbs = copy.limbs_;
    const bool negative = limbs[num_limbs - 1] < 0;
    if (negative) negate(limbs);
    int top = num_limbs - 1;
    while (top >= 0 && limbs[top] == 0) --top;
    if (top < 0) return {};
    // Five 32-bit limbs give at least 129 significant bits, more than a
    // double-double holds.
    double hi = 0, lo = 0;
    for (int k = std::max(0, top - 4); k <= top; ++k) {
      const double term =
          std::ldexp(static_cast<double>(limbs[k]), k * limb_bits - 1074);
      two_sum_into(hi, lo, term);
    }
    const double s = hi + lo;
    const double t = lo - (s - hi);
    hi = s;
    lo = t;
    if (negative) {
      hi = -hi;
      lo = -lo;
    }
    return {hi, lo};
  }

 private:
  static constexpr int limb_bits = 32;
  static constexpr std::int64_t limb_mask = (std::int64_t{1} << limb_bits) - 1;
  // 2^-1074 .. 2^1024 is 2098 bits; headroom for carries on top.
  static constexpr int num_limbs = 2098 / limb_bits + 4;
  static constexpr int normalize_every = 1 << 20;

  static void two_sum_into(double& hi, double& lo, double x) {
    const double s = hi + x;
    const double bb = s - hi;
    const double err = (hi - (s - bb)) + (x - bb);
    hi = s;
    lo += err;
  }

  static void negate(std::array<std::int64_t, num_limbs>& limbs) {
    for (auto& l : limbs) l = -l;
    carry(limbs);
  }

  static void carry(std::array<std::int64_t, num_limbs>& limbs) {
    for (int i = 0; i + 1 < num_limbs; ++i) {
      const std::int64_t c = limbs[i] >> limb_bits;  // floor division
      limbs[i] -= c * (std::int64_t{1} << limb_bits);
      limbs[i + 1] += c;
    }
  }

  void normalize() {
    carry(limbs_);
    pending_ = 0;
  }

  std::array<std::int64_t, num_limbs> limbs_{};
  int pending_ = 0;
};

template <std::floating_point T>
double_double oracle_dot(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size())
    throw std::invalid_argument("dot operands differ in length");
  exact_accumulator acc;
  for (std::size_t i = 0; i < a.size(); ++i)
    acc.add_product(static_cast<double>(a[i]), static_cast<double>(b[i]));
  return acc.result();
}

template <std::ranges::input_range R>
  requires std::floating_point<std::ranges::range_value_t<R>>
double_double oracle_sum(R&& r) {
  exact_accumulator acc;
  for (auto x : r) acc.add(static_cast<double>(x));
  return acc.result();
}

/// Sum |a_i b_i| / |sum a_i b_i|, both sides evaluated exactly.
template <std::floating_point T>
double condition_number(std::span<const T> a, std::span<const T> b) {
  exact_accumulator abs_acc;
  for (std::size_t i = 0; i < a.size(); ++i)
    abs_acc.add_product(std::fabs(static_cast<double>(a[i])),
                        std::fabs(static_cast<double>(b[i])));
  const double num = abs_acc.result().value();
  const double den = std::fabs(oracle_dot(a, b).value());
  return den == 0 ? INFINITY : num / den;
}

}  // namespace ecmdot
