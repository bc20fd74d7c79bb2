#pragma once

#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ecmdot/ecmdot.hpp"
#include "ecmdot_cli.hpp"

namespace ecmdot::fixtures {

struct triple {
  machine_descriptor machine;
  kernel_descriptor kernel;
  isa_class isa = isa_class::scalar;
};

inline double pick(std::mt19937_64& rng, double lo, double hi, double step) {
  const auto steps = static_cast<long>(std::llround((hi - lo) / step));
  std::uniform_int_distribution<long> d(0, steps);
  return lo + step * static_cast<double>(d(rng));
}

inline machine_descriptor random_machine(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> small(0, 3);
  machine_descriptor md;
  md.name = "R" + std::to_string(rng() % 100000);
  md.clock_ghz = pick(rng, 1.0, 4.0, 0.05);
  md.cores = static_cast<std::uint32_t>(1 + rng() % 64);
  md.cacheline_bytes = 1u << (6 + small(rng) % 2);
  md.l1_bytes = (16u << small(rng)) * 1024;
  md.l2_bytes = md.l1_bytes * (4u << small(rng));
  md.llc_bytes = md.l2_bytes * (8u << small(rng));
  md.cy_per_cl_l1l2 = pick(rng, 0.5, 4, 0.25);
  md.cy_per_cl_l2l3 = pick(rng, 0.5, 6, 0.01);
  md.bw_loadonly_gbs = pick(rng, 5, 200, 0.1);
  md.bw_peak_gbs = md.bw_loadonly_gbs + pick(rng, 0, 50, 0.1);
  md.penalty_cy_per_cl = small(rng) == 0 ? 0 : pick(rng, 0, 8, 0.05);
  const bool fma = rng() % 2;
  for (auto isa : all_isa_classes) {
    port_throughput p;
    p.loads_per_cy = pick(rng, 0.5, 3, 0.5);
    p.stores_per_cy = pick(rng, 0.5, 2, 0.5);
    p.adds_per_cy = pick(rng, 0.5, 2, 0.5);
    p.muls_per_cy = pick(rng, 0.5, 2, 0.5);
    p.fmas_per_cy = fma ? pick(rng, 0.5, 2, 0.5) : 0;
    md.ports[isa] = p;
  }
  validate(md);
  return md;
}

inline kernel_descriptor random_kernel(std::mt19937_64& rng, bool allow_fma) {
  kernel_descriptor kd;
  kd.name = "k" + std::to_string(rng() % 100000);
  kd.elem_bytes = rng() % 2 ? 4 : 8;
  kd.streams_loaded = static_cast<std::uint32_t>(1 + rng() % 3);
  kd.streams_stored = static_cast<std::uint32_t>(rng() % 2);
  kd.loads_per_iter = kd.streams_loaded + static_cast<std::uint32_t>(rng() % 2);
  kd.stores_per_iter = kd.streams_stored;
  kd.adds_per_iter = static_cast<std::uint32_t>(rng() % 6);
  kd.muls_per_iter = static_cast<std::uint32_t>(rng() % 3);
  kd.fmas_per_iter = allow_fma ? static_cast<std::uint32_t>(rng() % 2) : 0;
  kd.updates_per_iter = static_cast<std::uint32_t>(1 + rng() % 2);
  validate(kd);
  return kd;
}

inline triple random_triple(std::mt19937_64& rng) {
  triple t;
  t.machine = random_machine(rng);
  t.kernel = random_kernel(rng, t.machine.ports.begin()->second.fmas_per_cy > 0);
  t.isa = all_isa_classes[rng() % all_isa_classes.size()];
  return t;
}

/// Every model invariant that must hold for a valid triple. Returns the
/// violated ones, empty if all hold.
inline std::vector<std::string> check_invariants(const triple& t) {
  std::vector<std::string> bad;
  auto fail = [&](const std::string& what) {
    std::ostringstream os;
    os << t.machine.name << "/" << t.kernel.name << "/" << to_string(t.isa) << ": " << what;
    bad.push_back(os.str());
  };
  const auto km = model_kernel(t.kernel, t.isa, t.machine);
  const auto& m = km.model;
  const auto& p = km.prediction;

  double serial[4];
  serial[0] = m.t_nol;
  serial[1] = serial[0] + m.t_l1l2;
  serial[2] = serial[1] + m.t_l2l3;
  serial[3] = serial[2] + m.t_l3mem + m.penalty;
  for (int i = 0; i < 4; ++i) {
    if (p.cy[i] < m.t_ol) fail("cy below T_OL at level " + std::to_string(i));
    if (p.cy[i] < m.t_nol) fail("cy below T_nOL at level " + std::to_string(i));
    if (p.cy[i] < serial[i])
      fail("cy below non-overlapping sum at level " + std::to_string(i));
    if (p.cy[i] != std::max(m.t_ol, serial[i]))
      fail("cy is not the overlap maximum at level " + std::to_string(i));
    if (i > 0 && p.cy[i] < p.cy[i - 1]) fail("levels not monotone at " + std::to_string(i));
    if (i > 0 && p.perf[i] > p.perf[i - 1]) fail("performance increases outward");
  }

  shorthand_style exact{-1, -1, false};
  const auto text = format_shorthand(m, exact);
  if (!(parse_shorthand(text) == m)) fail("exact shorthand does not round-trip: " + text);
  const auto display = parse_shorthand(format_shorthand(m));
  const double core_tol = 0.005 + 1e-9, mem_tol = 0.05 + 1e-9;
  if (std::fabs(display.t_ol - m.t_ol) > core_tol ||
      std::fabs(display.t_nol - m.t_nol) > core_tol ||
      std::fabs(display.t_l1l2 - m.t_l1l2) > core_tol ||
      std::fabs(display.t_l2l3 - m.t_l2l3) > core_tol ||
      std::fabs(display.t_l3mem - m.t_l3mem) > mem_tol ||
      std::fabs(display.penalty - m.penalty) > mem_tol)
    fail("display shorthand drifts beyond its rounding");
  const auto ascii = format_shorthand(m, {-1, -1, true});
  if (!(parse_shorthand(ascii) == m)) fail("ascii shorthand does not round-trip");

  const double p_mem = p.performance(memory_level::mem);
  double prev = 0;
  for (std::uint32_t n = 1; n <= 2 * t.machine.cores; ++n) {
    const double s = scale(p_mem, p.p_roofline, n);
    if (s > p.p_roofline) fail("scaling exceeds the roofline cap");
    if (s < prev) fail("scaling curve not monotone");
    if (n * p_mem <= p.p_roofline && s != n * p_mem) fail("scaling below linear before the cap");
    prev = s;
  }
  if (m.t_l3mem > 0) {
    const double cy_mem = p.cycles(memory_level::mem);
    const double slack = 1e-12 * cy_mem;
    if (!(p.n_sat * m.t_l3mem >= cy_mem - slack) ||
        !((p.n_sat - 1) * m.t_l3mem < cy_mem + slack))
      fail("n_sat is not the smallest saturating core count");
  }
  return bad;
}

struct cli_result {
  int code = -1;
  std::string out;
  std::string err;
};

inline cli_result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "ecmdot");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  cli_result r;
  r.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

}  // namespace ecmdot::fixtures
