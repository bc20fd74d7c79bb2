#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ecmdot/error.hpp"
#include "ecmdot/key_value.hpp"
#include "ecmdot/machine.hpp"

namespace ecmdot {

/// Which runnable reduction implements a kernel descriptor, if any.
enum class kernel_algorithm { none, naive_dot, kahan_dot };

constexpr std::string_view to_string(kernel_algorithm a) {
  switch (a) {
    case kernel_algorithm::none: return "none";
    case kernel_algorithm::naive_dot: return "naive-dot";
    case kernel_algorithm::kahan_dot: return "kahan-dot";
  }
  return "?";
}

inline kernel_algorithm parse_algorithm(std::string_view s) {
  for (auto a : {kernel_algorithm::none, kernel_algorithm::naive_dot,
                 kernel_algorithm::kahan_dot})
    if (to_string(a) == s) return a;
  throw invariant_error("algorithm", "unknown algorithm '" + std::string(s) + "'");
}

/// Per-scalar-iteration profile of a streaming loop kernel.
struct kernel_descriptor {
  std::string name;
  std::uint32_t elem_bytes = 8;
  std::uint32_t streams_loaded = 0;
  std::uint32_t streams_stored = 0;
  std::uint32_t loads_per_iter = 0;
  std::uint32_t stores_per_iter = 0;
  std::uint32_t adds_per_iter = 0;
  std::uint32_t muls_per_iter = 0;
  std::uint32_t fmas_per_iter = 0;
  std::uint32_t updates_per_iter = 1;
  kernel_algorithm algorithm = kernel_algorithm::none;

  bool operator==(const kernel_descriptor&) const = default;
};

/// Instruction and cache-line counts for one work unit, i.e. one cache line
/// per stream.
struct work_unit_counts {
  std::uint32_t iterations = 0;
  std::uint32_t bundles = 0;
  std::uint32_t loads = 0;
  std::uint32_t stores = 0;
  std::uint32_t adds = 0;
  std::uint32_t muls = 0;
  std::uint32_t fmas = 0;
  std::uint32_t cls_loaded = 0;
  std::uint32_t cls_stored = 0;

  bool operator==(const work_unit_counts&) const = default;
};

inline void validate(const kernel_descriptor& kd) {
  if (kd.name.empty()) throw invariant_error("name", "must not be empty");
  if (kd.elem_bytes != 4 && kd.elem_bytes != 8)
    throw invariant_error("elem_bytes", "must be 4 or 8");
  if (kd.loads_per_iter < kd.streams_loaded)
    throw invariant_error("loads_per_iter", "must be >= streams_loaded");
  if (kd.stores_per_iter < kd.streams_stored)
    throw invariant_error("stores_per_iter", "must be >= streams_stored");
}

inline work_unit_counts expand(const kernel_descriptor& kd, isa_class isa,
                               std::uint32_t cacheline_bytes) {
  const std::uint32_t lanes = lane_width(isa, kd.elem_bytes);
  const std::uint32_t iterations = cacheline_bytes / kd.elem_bytes;
  if (iterations == 0 || iterations % lanes != 0)
    throw model_error("lane width " + std::to_string(lanes) +
                      " does not divide the " + std::to_string(iterations) +
                      " iterations of a work unit");
  const std::uint32_t bundles = iterations / lanes;
  return {.iterations = iterations,
          .bundles = bundles,
          .loads = bundles * kd.loads_per_iter,
          .stores = bundles * kd.stores_per_iter,
          .adds = bundles * kd.adds_per_iter,
          .muls = bundles * kd.muls_per_iter,
          .fmas = bundles * kd.fmas_per_iter,
          .cls_loaded = kd.streams_loaded,
          .cls_stored = kd.streams_stored};
}

/// Updates per byte of streamed data.
inline double intensity(const kernel_descriptor& kd) {
  return static_cast<double>(kd.updates_per_iter) /
         (static_cast<double>(kd.elem_bytes) *
          (kd.streams_loaded + kd.streams_stored));
}

inline std::vector<kernel_descriptor> builtin_kernels() {
  auto dot = [](std::string name, std::uint32_t elem, std::uint32_t adds,
                kernel_algorithm algo) {
    return kernel_descriptor{.name = std::move(name),
                             .elem_bytes = elem,
                             .streams_loaded = 2,
                             .streams_stored = 0,
                             .loads_per_iter = 2,
                             .stores_per_iter = 0,
                             .adds_per_iter = adds,
                             .muls_per_iter = 1,
                             .fmas_per_iter = 0,
                             .updates_per_iter = 1,
                             .algorithm = algo};
  };
  // sum += a*b: one add. Kahan: y = prod-c; t = sum+y; c = (t-sum)-y: four.
  return {dot("naive-dot-sp", 4, 1, kernel_algorithm::naive_dot),
          dot("naive-dot-dp", 8, 1, kernel_algorithm::naive_dot),
          dot("kahan-dot-sp", 4, 4, kernel_algorithm::kahan_dot),
          dot("kahan-dot-dp", 8, 4, kernel_algorithm::kahan_dot)};
}

inline kernel_descriptor builtin_kernel(std::string_view name) {
  for (auto& kd : builtin_kernels())
    if (kd.name == name) return kd;
  throw not_found_error("no built-in kernel named '" + std::string(name) + "'");
}

inline kernel_descriptor load_kernel(std::string_view source) {
  auto doc = kv::parse(source);
  if (doc.sections.size() > 1) {
    const auto& s = doc.sections[1];
    throw parse_error(s.line, "line " + std::to_string(s.line) +
                                  ": unknown section [" + s.name + "]");
  }
  kv::reader r(doc.sections.front());
  auto count = [&](std::string_view key) {
    return static_cast<std::uint32_t>(r.required_integer(key));
  };
  kernel_descriptor kd;
  kd.name = r.required_text("name");
  kd.elem_bytes = count("elem_bytes");
  kd.streams_loaded = count("streams_loaded");
  kd.streams_stored = count("streams_stored");
  kd.loads_per_iter = count("loads_per_iter");
  kd.stores_per_iter = count("stores_per_iter");
  kd.adds_per_iter = count("adds_per_iter");
  kd.muls_per_iter = count("muls_per_iter");
  kd.fmas_per_iter = static_cast<std::uint32_t>(r.integer("fmas_per_iter").value_or(0));
  kd.updates_per_iter = count("updates_per_iter");
  if (auto a = r.text("algorithm")) kd.algorithm = parse_algorithm(*a);
  r.reject_unknown();
  validate(kd);
  return kd;
}

inline kernel_descriptor load_kernel_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw not_found_error("cannot open kernel file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_kernel(ss.str());
}

inline std::string format_kernel(const kernel_descriptor& kd) {
  std::ostringstream os;
  os << "name = " << kd.name << '\n'
     << "elem_bytes = " << kd.elem_bytes << '\n'
     << "streams_loaded = " << kd.streams_loaded << '\n'
     << "streams_stored = " << kd.streams_stored << '\n'
     << "loads_per_iter = " << kd.loads_per_iter << '\n'
     << "stores_per_iter = " << kd.stores_per_iter << '\n'
     << "adds_per_iter = " << kd.adds_per_iter << '\n'
     << "muls_per_iter = " << kd.muls_per_iter << '\n'
     << "fmas_per_iter = " << kd.fmas_per_iter << '\n'
     << "updates_per_iter = " << kd.updates_per_iter << '\n'
     << "algorithm = " << to_string(kd.algorithm) << '\n';
  return os.str();
}

}  // namespace ecmdot
