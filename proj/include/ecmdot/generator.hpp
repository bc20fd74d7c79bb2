#pragma once

// Ill-conditioned dot-product inputs with a prescribed condition number
// sum|a_i b_i| / |sum a_i b_i|.
//
// Construction (after Ogita, Rump and Oishi's GenDot):
//  1. First half: a_i, b_i uniform in (-1,1) scaled by 2^e_i with e_i drawn
//     from [0, log2(cond)/2]; the first pair gets the largest exponent and the
//     last pair of the half exponent 0.
//  2. Second half: exponents fall linearly from log2(cond)/2 to 0; a_i is
//     random and b_i is chosen so that a_i b_i cancels the exact running dot
//     product down to a random value of size 2^e_i.
//  3. The final pair is fixed so the exact dot product equals
//     sum|a_i b_i| / cond.
//  4. The pairs are shuffled.
// Every value carries at most half the working precision's significand bits,
// so all products a_i*b_i are exact in the working precision and accuracy
// differences between kernels come from summation alone. If the achieved
// condition misses the target by more than a factor of three the exponent
// span is corrected and the construction repeats from the same random stream.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <utility>

#include "ecmdot/oracle.hpp"
#include "ecmdot/reduction.hpp"

namespace ecmdot {

namespace detail {

/// Uniform double in [0,1) from the top 53 bits; independent of the
/// standard library's distribution implementations.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform in (-1, 1) excluding zero.
inline double signed_uniform(std::mt19937_64& rng) {
  double v = 0;
  while (v == 0) v = 2 * unit_uniform(rng) - 1;
  return v;
}

inline double round_to_bits(double x, int bits) {
  if (x == 0 || !std::isfinite(x)) return x;
  int e = 0;
  const double f = std::frexp(x, &e);  // x = f * 2^e, 0.5 <= |f| < 1
  return std::ldexp(std::nearbyint(std::ldexp(f, bits)), e - bits);
}

template <std::floating_point T>
constexpr int half_precision_bits() {
  return std::numeric_limits<T>::digits / 2;
}

template <std::floating_point T>
dot_input<T> gen_dot_attempt(std::size_t n, double span_log2, double target,
                             std::mt19937_64& rng) {
  constexpr int bits = half_precision_bits<T>();
  auto draw = [&](double exponent) {
    return static_cast<T>(
        round_to_bits(std::ldexp(signed_uniform(rng), static_cast<int>(exponent)), bits));
  };

  dot_input<T> in;
  in.a.resize(n);
  in.b.resize(n);
  const double half_span = std::max(0.0, span_log2 / 2);
  const std::size_t first = n / 2;

  for (std::size_t i = 0; i < first; ++i) {
    double e = std::round(unit_uniform(rng) * half_span);
    if (i == 0) e = std::round(half_span) + 1;
    if (i + 1 == first) e = 0;
    in.a[i] = draw(e);
    in.b[i] = draw(e);
  }

  exact_accumulator running;
  for (std::size_t i = 0; i < first; ++i)
    running.add_product(in.a[i], in.b[i]);

  const std::size_t last = n - 1;
  for (std::size_t i = first; i < last; ++i) {
    const double frac = last - first > 1
                            ? static_cast<double>(i - first) / (last - first - 1)
                            : 1.0;
    const double e = std::round(half_span * (1 - frac));
    in.a[i] = draw(e);
    const double r = running.result().value();
    const double want = std::ldexp(signed_uniform(rng), static_cast<int>(e));
    in.b[i] = static_cast<T>(round_to_bits((want - r) / in.a[i], bits));
    running.add_product(in.a[i], in.b[i]);
  }

  // Fix the last pair: exact dot := sum|a_i b_i| / target.
  exact_accumulator abs_sum;
  for (std::size_t i = 0; i < last; ++i)
    abs_sum.add_product(std::fabs(static_cast<double>(in.a[i])),
                        std::fabs(static_cast<double>(in.b[i])));
  const double r = running.result().value();
  const double sign = signed_uniform(rng) < 0 ? -1.0 : 1.0;
  const double goal = sign * abs_sum.result().value() / target;
  in.a[last] = draw(0);
  in.b[last] = static_cast<T>(round_to_bits((goal - r) / in.a[last], bits));

  for (std::size_t i = n - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(rng() % (i + 1));
    std::swap(in.a[i], in.a[j]);
    std::swap(in.b[i], in.b[j]);
  }
  return in;
}

}  // namespace detail

template <std::floating_point T>
dot_input<T> gen_ill_conditioned(std::size_t n, double target_condition,
                                 std::uint64_t seed) {
  if (n < 4) throw std::invalid_argument("generator needs n >= 4");
  if (!(target_condition >= 1))
    throw std::invalid_argument("target condition must be >= 1");

  std::mt19937_64 rng(seed);
  double span = std::log2(target_condition);
  dot_input<T> best;
  double best_miss = INFINITY;
  for (int attempt = 0; attempt < 64; ++attempt) {
    auto in = detail::gen_dot_attempt<T>(n, span, target_condition, rng);
    const double achieved =
        condition_number<T>(std::span<const T>(in.a), std::span<const T>(in.b));
    const double miss = std::fabs(std::log10(achieved / target_condition));
    if (std::isfinite(achieved) && miss < best_miss) {
      best_miss = miss;
      best = std::move(in);
    }
    if (best_miss <= std::log10(3.0)) break;
    if (std::isfinite(achieved)) span += std::log2(target_condition / achieved);
  }
  return best;
}

}  // namespace ecmdot
