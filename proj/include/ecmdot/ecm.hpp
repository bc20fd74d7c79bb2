#pragma once

// Execution-Cache-Memory model: in-core and data-transfer cycle contributions
// for one work unit, per-level runtime/performance predictions, multicore
// scaling and the saturation point.
//
// Intel overlap hypothesis throughout: cycles that retire loads or stores
// never overlap with cache-line transfers, all other in-core cycles do, and
// transfers between adjacent levels are mutually non-overlapping.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

#include "ecmdot/error.hpp"
#include "ecmdot/kernel.hpp"
#include "ecmdot/machine.hpp"

namespace ecmdot {

enum class memory_level { l1 = 0, l2 = 1, l3 = 2, mem = 3 };

inline constexpr std::array<memory_level, 4> all_memory_levels{
    memory_level::l1, memory_level::l2, memory_level::l3, memory_level::mem};

constexpr std::string_view to_string(memory_level l) {
  switch (l) {
    case memory_level::l1: return "L1";
    case memory_level::l2: return "L2";
    case memory_level::l3: return "L3";
    case memory_level::mem: return "MEM";
  }
  return "?";
}

/// Cycle contributions for one work unit: {t_ol || t_nol | t_l1l2 | t_l2l3 |
/// t_l3mem + penalty}.
struct ecm_model {
  double t_ol = 0;
  double t_nol = 0;
  double t_l1l2 = 0;
  double t_l2l3 = 0;
  double t_l3mem = 0;  // bandwidth term only
  double penalty = 0;

  bool operator==(const ecm_model&) const = default;
};

struct ecm_prediction {
  std::array<double, 4> cy{};    // cycles per work unit, indexed by memory_level
  std::array<double, 4> perf{};  // G updates/s
  std::uint32_t n_sat = 0;
  double p_roofline = 0;  // G updates/s

  double cycles(memory_level l) const { return cy[static_cast<int>(l)]; }
  double performance(memory_level l) const { return perf[static_cast<int>(l)]; }
};

struct in_core_time {
  double t_ol = 0;
  double t_nol = 0;
};

struct transfer_time {
  double t_l1l2 = 0;
  double t_l2l3 = 0;
  double t_l3mem = 0;
  double penalty = 0;
};

namespace detail {

inline double unit_cycles(std::uint32_t count, double per_cy, const char* unit) {
  if (count == 0) return 0;
  if (!(per_cy > 0))
    throw model_error(std::to_string(count) + " " + unit +
                      " instructions per work unit but the machine has no " +
                      unit + " unit for this ISA");
  return count / per_cy;
}

}  // namespace detail

inline in_core_time in_core_times(const work_unit_counts& c,
                                  const port_throughput& p) {
  using detail::unit_cycles;
  const double t_nol = std::max(unit_cycles(c.loads, p.loads_per_cy, "load"),
                                unit_cycles(c.stores, p.stores_per_cy, "store"));
  const double t_ol = std::max({unit_cycles(c.adds, p.adds_per_cy, "add"),
                                unit_cycles(c.muls, p.muls_per_cy, "mul"),
                                unit_cycles(c.fmas, p.fmas_per_cy, "fma")});
  return {t_ol, t_nol};
}

/// Each stored stream moves two lines per work unit (write-allocate, then
/// evict); loaded streams move one.
inline double cache_lines_moved(const work_unit_counts& c) {
  return c.cls_loaded + 2.0 * c.cls_stored;
}

inline transfer_time transfer_times(const work_unit_counts& c,
                                    const machine_descriptor& md) {
  const double cls = cache_lines_moved(c);
  return {cls * md.cy_per_cl_l1l2, cls * md.cy_per_cl_l2l3,
          cls * t_l3mem_per_cl(md), cls * md.penalty_cy_per_cl};
}

inline ecm_model make_model(in_core_time core, transfer_time data) {
  return {core.t_ol, core.t_nol, data.t_l1l2, data.t_l2l3, data.t_l3mem,
          data.penalty};
}

/// Cycles per work unit with data resident in L1, L2, L3 and memory. The
/// penalty only enters the memory level.
inline std::array<double, 4> predict(const ecm_model& m) {
  const double l1 = m.t_nol;
  const double l2 = l1 + m.t_l1l2;
  const double l3 = l2 + m.t_l2l3;
  const double mem = l3 + m.t_l3mem + m.penalty;
  return {std::max(m.t_ol, l1), std::max(m.t_ol, l2), std::max(m.t_ol, l3),
          std::max(m.t_ol, mem)};
}

/// G updates/s for `updates` per work unit taking `cy` cycles at `clock_ghz`.
inline double to_performance(double cy, double updates, double clock_ghz) {
  if (!(cy > 0)) throw model_error("cycle count must be positive");
  return updates * clock_ghz / cy;
}

/// Bandwidth-bound performance cap in G updates/s.
inline double roofline(double intensity_updates_per_byte, double bw_gbs) {
  return intensity_updates_per_byte * bw_gbs;
}

inline double scale(double p_mem_single, double p_roofline, std::uint32_t n) {
  return std::min(n * p_mem_single, p_roofline);
}

/// The numerator includes the latency penalty, the denominator is the pure
/// bandwidth term: saturation happens when bandwidth, not latency, is used up.
inline std::uint32_t saturation_cores(double cy_mem_with_penalty,
                                      double t_l3mem_raw) {
  if (!(t_l3mem_raw > 0))
    throw model_error("memory transfer time must be positive");
  return static_cast<std::uint32_t>(std::ceil(cy_mem_with_penalty / t_l3mem_raw));
}

struct kernel_model {
  work_unit_counts counts;
  ecm_model model;
  ecm_prediction prediction;
};

inline kernel_model model_kernel(const kernel_descriptor& kd, isa_class isa,
                                 const machine_descriptor& md) {
  kernel_model out;
  out.counts = expand(kd, isa, md.cacheline_bytes);
  out.model = make_model(in_core_times(out.counts, md.ports_for(isa)),
                         transfer_times(out.counts, md));
  auto& pred = out.prediction;
  pred.cy = predict(out.model);
  const double updates =
      static_cast<double>(out.counts.iterations) * kd.updates_per_iter;
  for (std::size_t i = 0; i < pred.cy.size(); ++i)
    pred.perf[i] = to_performance(pred.cy[i], updates, md.clock_ghz);
  pred.p_roofline = roofline(intensity(kd), md.bw_loadonly_gbs);
  if (out.model.t_l3mem > 0)
    pred.n_sat = saturation_cores(pred.cycles(memory_level::mem), out.model.t_l3mem);
  return out;
}

}  // namespace ecmdot
