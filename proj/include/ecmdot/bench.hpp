#pragma once

// Cycles-per-work-unit measurements across a working-set sweep and in-memory
// thread scaling, plus comparison against ECM predictions.

#include <algorithm>
#include <atomic>
#include <barrier>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <sstream>
#include <string>
#include <system_error>
#include <thread>
#include <vector>

#if defined(__linux__)
#include <pthread.h>
#include <sched.h>
#endif

#include "ecmdot/aligned.hpp"
#include "ecmdot/ecm.hpp"
#include "ecmdot/error.hpp"
#include "ecmdot/kernel.hpp"
#include "ecmdot/machine.hpp"
#include "ecmdot/reduction.hpp"
#include "ecmdot/shorthand.hpp"

namespace ecmdot {

inline constexpr double level_guard = 0.6;

struct bench_variant {
  kernel_descriptor kernel;
  isa_class isa = isa_class::vec256;
  variant_config cfg;
  std::uint64_t seed = 1;
};

/// Default lanes for an ISA: one accumulator per SIMD lane, no unrolling.
inline variant_config default_config(const kernel_descriptor& kd, isa_class isa) {
  return {lane_width(isa, kd.elem_bytes), 1};
}

struct sweep_sample {
  std::uint64_t n = 0;
  std::uint64_t bytes_total = 0;
  memory_level level = memory_level::l1;
  double cy_per_wu = 0;  // median over repetitions
  double cy_per_wu_min = 0;
  double perf_gups = 0;
  std::uint32_t reps = 0;
  std::uint64_t calls_per_rep = 0;
  double work_units = 0;  // over all timed calls
};

struct scaling_sample {
  std::uint32_t threads = 1;
  double perf_gups = 0;
  std::uint64_t bytes_per_thread = 0;
  bool pinned = false;
};

struct comparison_row {
  memory_level level = memory_level::l1;
  double predicted_cy = 0;
  double measured_cy = 0;
  double deviation_pct = 0;
};

inline std::uint32_t iterations_per_wu(const kernel_descriptor& kd,
                                       std::uint32_t cacheline_bytes) {
  return cacheline_bytes / kd.elem_bytes;
}

inline std::uint64_t bytes_per_element(const kernel_descriptor& kd) {
  return std::uint64_t{kd.elem_bytes} * (kd.streams_loaded + kd.streams_stored);
}

/// Log-spaced array lengths between the two working-set sizes, each a whole
/// number of work units.
inline std::vector<std::uint64_t> sweep_sizes(std::uint64_t min_bytes,
                                              std::uint64_t max_bytes,
                                              std::uint32_t points,
                                              const kernel_descriptor& kd,
                                              std::uint32_t cacheline_bytes = 64) {
  if (!(min_bytes < max_bytes) || points < 2 || min_bytes == 0)
    throw std::invalid_argument("sweep range needs 0 < min_bytes < max_bytes and points >= 2");
  const std::uint64_t iters = iterations_per_wu(kd, cacheline_bytes);
  const double per_elem = static_cast<double>(bytes_per_element(kd));
  const double lo = std::log(static_cast<double>(min_bytes));
  const double hi = std::log(static_cast<double>(max_bytes));
  std::vector<std::uint64_t> out;
  for (std::uint32_t i = 0; i < points; ++i) {
    const double bytes = std::exp(lo + (hi - lo) * i / (points - 1));
    auto wus = static_cast<std::uint64_t>(std::llround(bytes / per_elem / iters));
    const std::uint64_t n = std::max<std::uint64_t>(1, wus) * iters;
    if (out.empty() || n > out.back()) out.push_back(n);
  }
  return out;
}

/// Smallest level whose capacity times the guard factor holds the working
/// set (boundary inclusive).
inline memory_level classify_level(std::uint64_t bytes_total,
                                   const machine_descriptor& md,
                                   double guard = level_guard) {
  const double b = static_cast<double>(bytes_total);
  if (b <= guard * static_cast<double>(md.l1_bytes)) return memory_level::l1;
  if (b <= guard * static_cast<double>(md.l2_bytes)) return memory_level::l2;
  if (b <= guard * static_cast<double>(md.llc_bytes)) return memory_level::l3;
  return memory_level::mem;
}

namespace detail {

using bench_clock = std::chrono::steady_clock;

inline double seconds_since(bench_clock::time_point t0) {
  return std::chrono::duration<double>(bench_clock::now() - t0).count();
}

/// Smallest observable tick of the benchmark clock, in seconds.
inline double timer_granularity() {
  static const double g = [] {
    double best = 1;
    for (int k = 0; k < 16; ++k) {
      auto t0 = bench_clock::now();
      auto t1 = t0;
      while (t1 == t0) t1 = bench_clock::now();
      best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
    }
    return best;
  }();
  return g;
}

/// Type-erased kernel over privately owned, cache-line aligned arrays.
class kernel_runner {
 public:
  kernel_runner(const bench_variant& v, std::uint64_t n) {
    if (v.kernel.algorithm == kernel_algorithm::none)
      throw model_error("kernel " + v.kernel.name + " has no runnable implementation");
    validate(v.cfg);
    if (v.kernel.elem_bytes == 4)
      bind<float>(v, n);
    else
      bind<double>(v, n);
  }
  double operator()() const { return run_(); }

 private:
  template <class T>
  void bind(const bench_variant& v, std::uint64_t n) {
    auto a = std::make_shared<aligned_vector<T>>();
    auto b = std::make_shared<aligned_vector<T>>();
    try {
      a->resize(n);
      b->resize(n);
    } catch (const std::bad_alloc&) {
      throw measurement_error("cannot allocate " + std::to_string(2 * n * sizeof(T)) +
                              " bytes for the benchmark arrays");
    }
    std::mt19937_64 rng(v.seed);
    for (std::uint64_t i = 0; i < n; ++i) {
      (*a)[i] = static_cast<T>(1 + static_cast<double>(rng() >> 11) * 0x1.0p-53);
      (*b)[i] = static_cast<T>(1 + static_cast<double>(rng() >> 11) * 0x1.0p-53);
    }
    const auto cfg = v.cfg;
    if (v.kernel.algorithm == kernel_algorithm::kahan_dot)
      run_ = [a, b, cfg] {
        return static_cast<double>(kahan_dot<T>(std::span<const T>(*a), std::span<const T>(*b), cfg));
      };
    else
      run_ = [a, b, cfg] {
        return static_cast<double>(naive_dot<T>(std::span<const T>(*a), std::span<const T>(*b), cfg));
      };
  }

  std::function<double()> run_;
};

inline std::atomic<double> result_sink{0};

}  // namespace detail

struct measure_options {
  double min_time_ms = 100;
  std::uint32_t reps = 7;
};

inline sweep_sample measure(const bench_variant& v, std::uint64_t n,
                            const machine_descriptor& md,
                            measure_options opt = {}) {
  using namespace detail;
  const std::uint32_t iters = iterations_per_wu(v.kernel, md.cacheline_bytes);
  if (n == 0 || n % iters != 0)
    throw std::invalid_argument("n must be a positive multiple of " +
                                std::to_string(iters) + " (one work unit)");
  if (opt.reps < 5) throw std::invalid_argument("at least 5 repetitions are required");

  kernel_runner run(v, n);
  double sink = run();  // warm-up; also pulls the data into the hierarchy

  const double min_rep_s = std::max(100 * timer_granularity(),
                                    opt.min_time_ms * 1e-3 / opt.reps);
  std::uint64_t calls = 1;
  for (;;) {
    auto t0 = bench_clock::now();
    for (std::uint64_t c = 0; c < calls; ++c) sink += run();
    const double dt = seconds_since(t0);
    if (dt >= min_rep_s) break;
    if (calls >= (std::uint64_t{1} << 40))
      throw measurement_error("repetition stays below 100x timer granularity");
    const double grow = dt > 0 ? 1.2 * min_rep_s / dt : 16;
    calls = std::max(calls * 2, static_cast<std::uint64_t>(calls * std::min(grow, 1e6)));
  }

  const double wus_per_call = static_cast<double>(n) / iters;
  std::vector<double> cy(opt.reps);
  for (std::uint32_t r = 0; r < opt.reps; ++r) {
    auto t0 = bench_clock::now();
    for (std::uint64_t c = 0; c < calls; ++c) sink += run();
    const double dt = seconds_since(t0);
    if (dt < 100 * timer_granularity())
      throw measurement_error("repetition shorter than 100x timer granularity");
    cy[r] = dt * md.clock_ghz * 1e9 / (static_cast<double>(calls) * wus_per_call);
  }
  result_sink.store(sink, std::memory_order_relaxed);

  std::vector<double> sorted = cy;
  std::sort(sorted.begin(), sorted.end());
  sweep_sample s;
  s.n = n;
  s.bytes_total = n * bytes_per_element(v.kernel);
  s.level = classify_level(s.bytes_total, md);
  s.cy_per_wu = sorted[sorted.size() / 2];
  s.cy_per_wu_min = sorted.front();
  const double updates = static_cast<double>(iters) * v.kernel.updates_per_iter;
  s.perf_gups = updates * md.clock_ghz / s.cy_per_wu;
  s.reps = opt.reps;
  s.calls_per_rep = calls;
  s.work_units = wus_per_call * static_cast<double>(calls) * opt.reps;
  return s;
}

inline std::vector<sweep_sample> sweep(const bench_variant& v,
                                       std::span<const std::uint64_t> sizes,
                                       const machine_descriptor& md,
                                       measure_options opt = {}) {
  std::vector<sweep_sample> out;
  out.reserve(sizes.size());
  for (auto n : sizes) out.push_back(measure(v, n, md, opt));
  return out;
}

namespace detail {

inline bool pin_to_cpu(unsigned cpu) {
#if defined(__linux__)
  cpu_set_t set;
  CPU_ZERO(&set);
  CPU_SET(cpu, &set);
  return pthread_setaffinity_np(pthread_self(), sizeof set, &set) == 0;
#else
  (void)cpu;
  return false;
#endif
}

}  // namespace detail

/// Per-thread array length that keeps each thread's working set at least
/// four times its share of the LLC.
inline std::uint64_t in_memory_elements(const bench_variant& v,
                                        const machine_descriptor& md) {
  const std::uint64_t iters = iterations_per_wu(v.kernel, md.cacheline_bytes);
  const std::uint64_t bytes = 4 * md.llc_bytes / md.cores;
  const std::uint64_t per = bytes_per_element(v.kernel);
  const std::uint64_t n = (bytes + per - 1) / per;
  return (n + iters - 1) / iters * iters;
}

inline std::vector<scaling_sample> thread_scaling(
    const bench_variant& v, std::span<const std::uint32_t> threads_list,
    const machine_descriptor& md, double min_time_ms = 200) {
  using namespace detail;
  const std::uint64_t n = in_memory_elements(v, md);
  const std::uint64_t bytes = n * bytes_per_element(v.kernel);

  std::uint64_t calls = 1;
  {
    kernel_runner probe(v, n);
    double sink = probe();
    auto t0 = bench_clock::now();
    sink += probe();
    const double one = std::max(seconds_since(t0), 1e-9);
    calls = std::max<std::uint64_t>(2, static_cast<std::uint64_t>(
                                           std::ceil(min_time_ms * 1e-3 / one)));
    result_sink.store(sink, std::memory_order_relaxed);
  }

  const unsigned cpus = std::max(1u, std::thread::hardware_concurrency());
  const double updates_per_call = static_cast<double>(n) * v.kernel.updates_per_iter;
  std::vector<scaling_sample> out;
  for (std::uint32_t t : threads_list) {
    if (t < 1) throw std::invalid_argument("thread counts must be >= 1");
    std::barrier sync(static_cast<std::ptrdiff_t>(t) + 1);
    std::atomic<bool> all_pinned{true};
    std::atomic<bool> failed{false};
    std::vector<std::thread> workers;
    std::string spawn_error;
    for (std::uint32_t w = 0; w < t && spawn_error.empty(); ++w) {
      try {
        workers.emplace_back([&, w] {
          if (!pin_to_cpu(w % cpus)) all_pinned = false;
          std::optional<kernel_runner> run;
          try {
            bench_variant local = v;
            local.seed = v.seed + w;
            run.emplace(local, n);
          } catch (...) {
            failed = true;
          }
          double sink = run ? (*run)() : 0.0;
          sync.arrive_and_wait();  // start
          if (run)
            for (std::uint64_t c = 0; c < calls; ++c) sink += (*run)();
          sync.arrive_and_wait();  // stop
          result_sink.store(sink, std::memory_order_relaxed);
        });
      } catch (const std::system_error& e) {
        spawn_error = e.what();
      }
    }
    // Workers that never started leave the barrier so the others can finish.
    for (auto missing = t - workers.size(); missing > 0; --missing)
      sync.arrive_and_drop();
    sync.arrive_and_wait();
    auto t0 = bench_clock::now();
    sync.arrive_and_wait();
    const double dt = seconds_since(t0);
    for (auto& th : workers) th.join();
    if (!spawn_error.empty())
      throw measurement_error("cannot spawn worker thread: " + spawn_error);
    if (failed) throw measurement_error("worker could not allocate its arrays");

    out.push_back({.threads = t,
                   .perf_gups = t * calls * updates_per_call / dt * 1e-9,
                   .bytes_per_thread = bytes,
                   .pinned = all_pinned.load() && t <= cpus});
  }
  return out;
}

/// One row per level present in the samples, using that level's median
/// sample (lower middle for even counts), ordered L1, L2, L3, MEM.
inline std::vector<comparison_row> compare(std::span<const sweep_sample> samples,
                                           const ecm_prediction& prediction) {
  std::vector<comparison_row> rows;
  for (auto level : all_memory_levels) {
    std::vector<double> cy;
    for (const auto& s : samples)
      if (s.level == level) cy.push_back(s.cy_per_wu);
    if (cy.empty()) continue;
    std::sort(cy.begin(), cy.end());
    const double measured = cy[(cy.size() - 1) / 2];
    const double predicted = prediction.cycles(level);
    rows.push_back({level, predicted, measured,
                    100 * (measured - predicted) / predicted});
  }
  return rows;
}

inline constexpr std::string_view sweep_csv_header =
    "kernel,isa,lanes,unroll,n,bytes,level,reps,cy_per_wu_median,cy_per_wu_min,perf_gups";
inline constexpr std::string_view scaling_csv_header =
    "kernel,isa,threads,bytes_per_thread,perf_gups,pinned";
inline constexpr std::string_view comparison_csv_header =
    "level,predicted_cy,measured_cy,deviation_pct";

inline void write_sweep_csv(std::ostream& os, const bench_variant& v,
                            std::span<const sweep_sample> samples) {
  os << sweep_csv_header << '\n';
  for (const auto& s : samples)
    os << v.kernel.name << ',' << to_string(v.isa) << ',' << v.cfg.lanes << ','
       << v.cfg.unroll << ',' << s.n << ',' << s.bytes_total << ','
       << to_string(s.level) << ',' << s.reps << ',' << format_fixed(s.cy_per_wu, 4)
       << ',' << format_fixed(s.cy_per_wu_min, 4) << ',' << format_fixed(s.perf_gups, 4)
       << '\n';
}

inline void write_scaling_csv(std::ostream& os, const bench_variant& v,
                              std::span<const scaling_sample> samples) {
  os << scaling_csv_header << '\n';
  for (const auto& s : samples)
    os << v.kernel.name << ',' << to_string(v.isa) << ',' << s.threads << ','
       << s.bytes_per_thread << ',' << format_fixed(s.perf_gups, 4) << ','
       << (s.pinned ? 1 : 0) << '\n';
}

inline void write_comparison_csv(std::ostream& os, std::span<const comparison_row> rows) {
  os << comparison_csv_header << '\n';
  for (const auto& r : rows)
    os << to_string(r.level) << ',' << format_fixed(r.predicted_cy, 4) << ','
       << format_fixed(r.measured_cy, 4) << ',' << format_fixed(r.deviation_pct, 2)
       << '\n';
}

inline memory_level parse_level(std::string_view s) {
  for (auto l : all_memory_levels)
    if (to_string(l) == s) return l;
  throw std::invalid_argument("unknown memory level '" + std::string(s) + "'");
}

/// Reads the level and timing columns back from a sweep CSV. Lines starting
/// with '#' are skipped; the first other line must be the header.
inline std::vector<sweep_sample> read_sweep_csv(std::istream& in) {
  std::vector<sweep_sample> out;
  std::string line;
  bool header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    if (!header) {
      if (line != sweep_csv_header)
        throw parse_error(line_no, "line " + std::to_string(line_no) +
                                       ": not a sweep CSV header");
      header = true;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 11)
      throw parse_error(line_no, "line " + std::to_string(line_no) +
                                     ": expected 11 columns");
    try {
      sweep_sample s;
      s.n = std::stoull(f[4]);
      s.bytes_total = std::stoull(f[5]);
      s.level = parse_level(f[6]);
      s.reps = static_cast<std::uint32_t>(std::stoul(f[7]));
      s.cy_per_wu = std::stod(f[8]);
      s.cy_per_wu_min = std::stod(f[9]);
      s.perf_gups = std::stod(f[10]);
      out.push_back(s);
    } catch (const std::logic_error& e) {
      throw parse_error(line_no, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!header) throw parse_error(line_no, "missing sweep CSV header");
  return out;
}

}  // namespace ecmdot
