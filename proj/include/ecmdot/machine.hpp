#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ecmdot/error.hpp"
#include "ecmdot/key_value.hpp"

namespace ecmdot {

enum class isa_class { scalar, vec128, vec256 };

inline constexpr std::array<isa_class, 3> all_isa_classes{
    isa_class::scalar, isa_class::vec128, isa_class::vec256};

constexpr std::string_view to_string(isa_class isa) {
  switch (isa) {
    case isa_class::scalar: return "scalar";
    case isa_class::vec128: return "vec128";
    case isa_class::vec256: return "vec256";
  }
  return "?";
}

inline isa_class parse_isa(std::string_view s) {
  for (auto isa : all_isa_classes)
    if (to_string(isa) == s) return isa;
  throw not_found_error("unknown ISA class '" + std::string(s) +
                        "' (expected scalar, vec128 or vec256)");
}

/// SIMD register width in bytes; a scalar register holds exactly one element.
constexpr std::uint32_t register_bytes(isa_class isa, std::uint32_t elem_bytes) {
  switch (isa) {
    case isa_class::scalar: return elem_bytes;
    case isa_class::vec128: return 16;
    case isa_class::vec256: return 32;
  }
  return elem_bytes;
}

constexpr std::uint32_t lane_width(isa_class isa, std::uint32_t elem_bytes) {
  return std::max<std::uint32_t>(1, register_bytes(isa, elem_bytes) / elem_bytes);
}

/// Instructions retired per cycle for each execution resource. A zero entry
/// means the unit does not exist for this ISA class.
struct port_throughput {
  double loads_per_cy = 0;
  double stores_per_cy = 0;
  double adds_per_cy = 0;
  double muls_per_cy = 0;
  double fmas_per_cy = 0;

  bool operator==(const port_throughput&) const = default;
};

struct machine_descriptor {
  std::string name;
  double clock_ghz = 0;
  std::uint32_t cores = 0;
  std::map<isa_class, port_throughput> ports;
  std::uint32_t cacheline_bytes = 64;
  std::uint64_t l1_bytes = 0;
  std::uint64_t l2_bytes = 0;
  std::uint64_t llc_bytes = 0;
  double cy_per_cl_l1l2 = 0;
  double cy_per_cl_l2l3 = 0;
  double bw_loadonly_gbs = 0;
  double bw_peak_gbs = 0;
  /// Empirical extra cycles per cache line fetched from memory.
  double penalty_cy_per_cl = 0;

  bool operator==(const machine_descriptor&) const = default;

  const port_throughput& ports_for(isa_class isa) const {
    auto it = ports.find(isa);
    if (it == ports.end())
      throw model_error("machine " + name + " has no port table for " +
                        std::string(to_string(isa)));
    return it->second;
  }
};

inline void validate(const port_throughput& p, const std::string& prefix) {
  auto non_negative = [&](double v, const char* field) {
    if (!(v >= 0)) throw invariant_error(prefix + field, "must be >= 0");
  };
  non_negative(p.stores_per_cy, "stores_per_cy");
  non_negative(p.adds_per_cy, "adds_per_cy");
  non_negative(p.muls_per_cy, "muls_per_cy");
  non_negative(p.fmas_per_cy, "fmas_per_cy");
  if (!(p.loads_per_cy > 0))
    throw invariant_error(prefix + "loads_per_cy", "must be > 0");
}

inline void validate(const machine_descriptor& md) {
  if (md.name.empty()) throw invariant_error("name", "must not be empty");
  if (!(md.clock_ghz > 0)) throw invariant_error("clock_ghz", "must be > 0");
  if (md.cores < 1) throw invariant_error("cores", "must be >= 1");
  if (md.cacheline_bytes == 0 || !std::has_single_bit(md.cacheline_bytes))
    throw invariant_error("cacheline_bytes", "must be a power of two");
  if (md.l1_bytes == 0) throw invariant_error("l1_bytes", "must be > 0");
  if (!(md.l1_bytes < md.l2_bytes))
    throw invariant_error("l1_bytes", "must be smaller than l2_bytes");
  if (!(md.l2_bytes < md.llc_bytes))
    throw invariant_error("l2_bytes", "must be smaller than llc_bytes");
  if (!(md.cy_per_cl_l1l2 >= 0))
    throw invariant_error("cy_per_cl_l1l2", "must be >= 0");
  if (!(md.cy_per_cl_l2l3 >= 0))
    throw invariant_error("cy_per_cl_l2l3", "must be >= 0");
  if (!(md.bw_loadonly_gbs > 0))
    throw invariant_error("bw_loadonly_gbs", "must be > 0");
  if (!(md.bw_loadonly_gbs <= md.bw_peak_gbs))
    throw invariant_error("bw_loadonly_gbs", "must not exceed bw_peak_gbs");
  if (!(md.penalty_cy_per_cl >= 0))
    throw invariant_error("penalty_cy_per_cl", "must be >= 0");
  if (md.ports.empty())
    throw invariant_error("ports", "at least one [ports.<isa>] section is required");
  for (const auto& [isa, p] : md.ports)
    validate(p, "ports." + std::string(to_string(isa)) + ".");
}

/// Cycles to move one cache line between memory and L3 at the sustained
/// load-only bandwidth. Does not include the latency penalty.
inline double t_l3mem_per_cl(const machine_descriptor& md) {
  return md.cacheline_bytes * md.clock_ghz / md.bw_loadonly_gbs;
}

inline machine_descriptor load_machine(std::string_view source) {
  auto doc = kv::parse(source);
  machine_descriptor md;

  kv::reader top(doc.sections.front());
  md.name = top.required_text("name");
  md.clock_ghz = top.required_number("clock_ghz");
  md.cores = static_cast<std::uint32_t>(top.required_integer("cores"));
  md.cacheline_bytes =
      static_cast<std::uint32_t>(top.integer("cacheline_bytes").value_or(64));
  md.l1_bytes = top.required_integer("l1_bytes");
  md.l2_bytes = top.required_integer("l2_bytes");
  md.llc_bytes = top.required_integer("llc_bytes");
  md.cy_per_cl_l1l2 = top.required_number("cy_per_cl_l1l2");
  md.cy_per_cl_l2l3 = top.required_number("cy_per_cl_l2l3");
  md.bw_loadonly_gbs = top.required_number("bw_loadonly_gbs");
  md.bw_peak_gbs = top.required_number("bw_peak_gbs");
  md.penalty_cy_per_cl = top.required_number("penalty_cy_per_cl");
  top.reject_unknown();

  for (std::size_t i = 1; i < doc.sections.size(); ++i) {
    const auto& sec = doc.sections[i];
    constexpr std::string_view prefix = "ports.";
    if (!sec.name.starts_with(prefix))
      throw parse_error(sec.line, "line " + std::to_string(sec.line) +
                                      ": unknown section [" + sec.name + "]");
    isa_class isa;
    try {
      isa = parse_isa(std::string_view(sec.name).substr(prefix.size()));
    } catch (const not_found_error& e) {
      throw parse_error(sec.line,
                        "line " + std::to_string(sec.line) + ": " + e.what());
    }
    kv::reader r(sec);
    port_throughput p;
    p.loads_per_cy = r.required_number("loads_per_cy");
    p.stores_per_cy = r.required_number("stores_per_cy");
    p.adds_per_cy = r.required_number("adds_per_cy");
    p.muls_per_cy = r.required_number("muls_per_cy");
    p.fmas_per_cy = r.number("fmas_per_cy").value_or(0);
    r.reject_unknown();
    md.ports.emplace(isa, p);
  }

  validate(md);
  return md;
}

inline machine_descriptor load_machine_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw not_found_error("cannot open machine file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_machine(ss.str());
}

inline std::string format_machine(const machine_descriptor& md) {
  using kv::format_number;
  std::ostringstream os;
  os << "name = " << md.name << '\n'
     << "clock_ghz = " << format_number(md.clock_ghz) << '\n'
     << "cores = " << md.cores << '\n'
     << "cacheline_bytes = " << md.cacheline_bytes << '\n'
     << "l1_bytes = " << md.l1_bytes << '\n'
     << "l2_bytes = " << md.l2_bytes << '\n'
     << "llc_bytes = " << md.llc_bytes << '\n'
     << "cy_per_cl_l1l2 = " << format_number(md.cy_per_cl_l1l2) << '\n'
     << "cy_per_cl_l2l3 = " << format_number(md.cy_per_cl_l2l3) << '\n'
     << "bw_loadonly_gbs = " << format_number(md.bw_loadonly_gbs) << '\n'
     << "bw_peak_gbs = " << format_number(md.bw_peak_gbs) << '\n'
     << "penalty_cy_per_cl = " << format_number(md.penalty_cy_per_cl) << '\n';
  for (const auto& [isa, p] : md.ports) {
    os << "\n[ports." << to_string(isa) << "]\n"
       << "loads_per_cy = " << format_number(p.loads_per_cy) << '\n'
       << "stores_per_cy = " << format_number(p.stores_per_cy) << '\n'
       << "adds_per_cy = " << format_number(p.adds_per_cy) << '\n'
       << "muls_per_cy = " << format_number(p.muls_per_cy) << '\n'
       << "fmas_per_cy = " << format_number(p.fmas_per_cy) << '\n';
  }
  return os.str();
}

namespace detail {

inline constexpr std::uint64_t KiB = 1024;
inline constexpr std::uint64_t MiB = 1024 * KiB;

// SNB/IVB: 16-byte load ports, so 256-bit loads retire at 1/cy while
// scalar and 128-bit loads retire at 2/cy.
inline std::map<isa_class, port_throughput> sandy_ivy_ports() {
  port_throughput narrow{2, 1, 1, 1, 0};
  port_throughput wide{1, 0.5, 1, 1, 0};
  return {{isa_class::scalar, narrow},
          {isa_class::vec128, narrow},
          {isa_class::vec256, wide}};
}

inline std::map<isa_class, port_throughput> haswell_broadwell_ports() {
  port_throughput p{2, 1, 1, 2, 2};
  return {{isa_class::scalar, p}, {isa_class::vec128, p}, {isa_class::vec256, p}};
}

}  // namespace detail

/// Xeon E5-2680 (SNB), E5-2690 v2 (IVB), E5-2695 v3 (HSW) and D-1540 (BDW),
/// one socket each, fixed clock.
inline std::vector<machine_descriptor> builtin_machines() {
  using namespace detail;
  std::vector<machine_descriptor> out;

  out.push_back({.name = "SNB",
                 .clock_ghz = 2.7,
                 .cores = 8,
                 .ports = sandy_ivy_ports(),
                 .cacheline_bytes = 64,
                 .l1_bytes = 32 * KiB,
                 .l2_bytes = 256 * KiB,
                 .llc_bytes = 20 * MiB,
                 .cy_per_cl_l1l2 = 2,
                 .cy_per_cl_l2l3 = 2,
                 .bw_loadonly_gbs = 43.6,
                 .bw_peak_gbs = 51.2,
                 .penalty_cy_per_cl = 2.55});

  out.push_back({.name = "IVB",
                 .clock_ghz = 2.2,
                 .cores = 10,
                 .ports = sandy_ivy_ports(),
                 .cacheline_bytes = 64,
                 .l1_bytes = 32 * KiB,
                 .l2_bytes = 256 * KiB,
                 .llc_bytes = 25 * MiB,
                 .cy_per_cl_l1l2 = 2,
                 .cy_per_cl_l2l3 = 2,
                 .bw_loadonly_gbs = 46.1,
                 .bw_peak_gbs = 51.2,
                 .penalty_cy_per_cl = 1.45});

  // Single-core Uncore clock drop: 5.54 cy per two-line work unit.
  out.push_back({.name = "HSW",
                 .clock_ghz = 2.3,
                 .cores = 14,
                 .ports = haswell_broadwell_ports(),
                 .cacheline_bytes = 64,
                 .l1_bytes = 32 * KiB,
                 .l2_bytes = 256 * KiB,
                 .llc_bytes = 35 * MiB,
                 .cy_per_cl_l1l2 = 1,
                 .cy_per_cl_l2l3 = 2.77,
                 .bw_loadonly_gbs = 60.6,
                 .bw_peak_gbs = 68.3,
                 .penalty_cy_per_cl = 5.55});

  out.push_back({.name = "BDW",
                 .clock_ghz = 1.8,
                 .cores = 8,
                 .ports = haswell_broadwell_ports(),
                 .cacheline_bytes = 64,
                 .l1_bytes = 32 * KiB,
                 .l2_bytes = 256 * KiB,
                 .llc_bytes = 12 * MiB,
                 .cy_per_cl_l1l2 = 1,
                 .cy_per_cl_l2l3 = 2,
                 .bw_loadonly_gbs = 33,
                 .bw_peak_gbs = 34.1,
                 .penalty_cy_per_cl = 0.5});

  return out;
}

inline machine_descriptor builtin_machine(std::string_view name) {
  for (auto& md : builtin_machines())
    if (md.name == name) return md;
  throw not_found_error("no built-in machine named '" + std::string(name) + "'");
}

}  // namespace ecmdot
