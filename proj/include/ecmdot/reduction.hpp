#pragma once

// Naive and Kahan-compensated dot products and sums with W x U independent
// accumulator groups (W SIMD lanes times U-way modulo unrolling).
//
// Index partition: consecutive blocks of G = W*U elements, element k of a
// block goes to group k. The n mod G tail is folded into group 0. The result
// therefore depends only on G; W and U only describe how the loop maps onto
// hardware.
//
// The compensation sequence must survive compilation unchanged: no
// reassociation and no contraction of the multiply into the subtraction.
// Targets linking ecmdot get -ffp-contract=off; fast-math is refused below.

#include <algorithm>
#include <array>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <ranges>
#include <span>
#include <stdexcept>
#include <vector>

#include "ecmdot/aligned.hpp"

#if defined(__FAST_MATH__)
#error "ecmdot/reduction.hpp must not be compiled with -ffast-math"
#endif

#if defined(__clang__)
#pragma clang fp contract(off)
#endif

namespace ecmdot {

struct variant_config {
  std::uint32_t lanes = 1;
  std::uint32_t unroll = 1;

  std::size_t groups() const { return std::size_t{lanes} * unroll; }
  bool operator==(const variant_config&) const = default;
};

inline void validate(const variant_config& cfg) {
  if (cfg.lanes < 1 || cfg.unroll < 1)
    throw std::invalid_argument("lanes and unroll must both be >= 1");
}

template <std::floating_point T>
struct dot_input {
  aligned_vector<T> a;
  aligned_vector<T> b;

  std::size_t size() const { return a.size(); }
};

template <std::floating_point T>
struct kahan_state {
  T sum{0};
  T c{0};

  void add(T x) {
    T y = x - c;
    T t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }

  /// Running sum with the pending compensation applied.
  T value() const { return sum - c; }
};

namespace detail {

// Accumulator storage: std::array for the dispatched group counts, a vector
// otherwise. G == 0 selects the vector.
template <class T, std::size_t G>
struct accumulators {
  std::array<T, G> v{};
  explicit accumulators(std::size_t) {}
  static constexpr std::size_t size() { return G; }
  T& operator[](std::size_t i) { return v[i]; }
};

template <class T>
struct accumulators<T, 0> {
  std::vector<T> v;
  explicit accumulators(std::size_t g) : v(g, T{0}) {}
  std::size_t size() const { return v.size(); }
  T& operator[](std::size_t i) { return v[i]; }
};

template <class T>
T kahan_combine(std::span<const T> sums, std::span<const T> comps) {
  kahan_state<T> total;
  for (std::size_t g = 0; g < sums.size(); ++g) total.add(sums[g] - comps[g]);
  return total.value();
}

template <class T, std::size_t G, class Term>
T kahan_groups(std::size_t n, std::size_t groups, Term term) {
  accumulators<T, G> sum(groups), c(groups);
  const std::size_t g_count = sum.size();
  const std::size_t blocks = n / g_count;
  for (std::size_t blk = 0; blk < blocks; ++blk) {
    const std::size_t base = blk * g_count;
    for (std::size_t g = 0; g < g_count; ++g) {
      T x = term(base + g);
      T y = x - c[g];
      T t = sum[g] + y;
      c[g] = (t - sum[g]) - y;
      sum[g] = t;
    }
  }
  for (std::size_t i = blocks * g_count; i < n; ++i) {
    T x = term(i);
    T y = x - c[0];
    T t = sum[0] + y;
    c[0] = (t - sum[0]) - y;
    sum[0] = t;
  }
  std::vector<T> s(g_count), k(g_count);
  for (std::size_t g = 0; g < g_count; ++g) {
    s[g] = sum[g];
    k[g] = c[g];
  }
  return kahan_combine<T>(s, k);
}

template <class T>
T pairwise_combine(std::vector<T> v) {
  while (v.size() > 1) {
    std::size_t half = v.size() / 2;
    for (std::size_t i = 0; i < half; ++i) v[i] = v[2 * i] + v[2 * i + 1];
    if (v.size() % 2) {
      v[half] = v.back();
      v.resize(half + 1);
    } else {
      v.resize(half);
    }
  }
  return v.empty() ? T{0} : v.front();
}

template <class T, std::size_t G, class Term>
T naive_groups(std::size_t n, std::size_t groups, Term term) {
  accumulators<T, G> sum(groups);
  const std::size_t g_count = sum.size();
  const std::size_t blocks = n / g_count;
  for (std::size_t blk = 0; blk < blocks; ++blk) {
    const std::size_t base = blk * g_count;
    for (std::size_t g = 0; g < g_count; ++g) sum[g] = sum[g] + term(base + g);
  }
  for (std::size_t i = blocks * g_count; i < n; ++i) sum[0] = sum[0] + term(i);
  std::vector<T> v(g_count);
  for (std::size_t g = 0; g < g_count; ++g) v[g] = sum[g];
  return pairwise_combine(std::move(v));
}

// Compile-time group counts keep accumulators in registers and let the
// compiler map the inner loop onto SIMD lanes.
template <class T, template <class, std::size_t, class> class Body, class Term>
T dispatch_groups(std::size_t n, std::size_t groups, Term term) {
  switch (groups) {
    case 1: return Body<T, 1, Term>::run(n, groups, term);
    case 2: return Body<T, 2, Term>::run(n, groups, term);
    case 4: return Body<T, 4, Term>::run(n, groups, term);
    case 8: return Body<T, 8, Term>::run(n, groups, term);
    case 16: return Body<T, 16, Term>::run(n, groups, term);
    case 32: return Body<T, 32, Term>::run(n, groups, term);
    case 64: return Body<T, 64, Term>::run(n, groups, term);
    default: return Body<T, 0, Term>::run(n, groups, term);
  }
}

template <class T, std::size_t G, class Term>
struct kahan_body {
  static T run(std::size_t n, std::size_t g, Term t) {
    return kahan_groups<T, G>(n, g, t);
  }
};

template <class T, std::size_t G, class Term>
struct naive_body {
  static T run(std::size_t n, std::size_t g, Term t) {
    return naive_groups<T, G>(n, g, t);
  }
};

template <class T>
void check_lengths(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size())
    throw std::invalid_argument("dot operands differ in length");
}

}  // namespace detail

template <std::floating_point T>
T naive_dot(std::span<const T> a, std::span<const T> b, variant_config cfg = {}) {
  validate(cfg);
  detail::check_lengths(a, b);
  const T* pa = a.data();
  const T* pb = b.data();
  auto term = [pa, pb](std::size_t i) { return pa[i] * pb[i]; };
  return detail::dispatch_groups<T, detail::naive_body>(a.size(), cfg.groups(), term);
}

template <std::floating_point T>
T kahan_dot(std::span<const T> a, std::span<const T> b, variant_config cfg = {}) {
  validate(cfg);
  detail::check_lengths(a, b);
  const T* pa = a.data();
  const T* pb = b.data();
  auto term = [pa, pb](std::size_t i) { return pa[i] * pb[i]; };
  return detail::dispatch_groups<T, detail::kahan_body>(a.size(), cfg.groups(), term);
}

template <std::floating_point T>
T naive_dot(const dot_input<T>& in, variant_config cfg = {}) {
  return naive_dot<T>(std::span<const T>(in.a), std::span<const T>(in.b), cfg);
}

template <std::floating_point T>
T kahan_dot(const dot_input<T>& in, variant_config cfg = {}) {
  return kahan_dot<T>(std::span<const T>(in.a), std::span<const T>(in.b), cfg);
}

/// Compensated sum over any sized random-access range; same partition and
/// combination as kahan_dot with every b[i] == 1.
template <std::ranges::random_access_range R>
  requires std::ranges::sized_range<R> &&
           std::floating_point<std::ranges::range_value_t<R>>
auto kahan_sum(R&& r, variant_config cfg = {}) {
  using T = std::ranges::range_value_t<R>;
  validate(cfg);
  auto first = std::ranges::begin(r);
  auto term = [first](std::size_t i) -> T {
    return first[static_cast<std::ranges::range_difference_t<R>>(i)];
  };
  return detail::dispatch_groups<T, detail::kahan_body>(
      static_cast<std::size_t>(std::ranges::size(r)), cfg.groups(), term);
}

}  // namespace ecmdot
