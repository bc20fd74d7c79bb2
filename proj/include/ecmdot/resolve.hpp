#pragma once

// Name resolution for machine and kernel references: built-in presets
// first, then file paths, then the directories listed in
// ECMDOT_MACHINE_PATH. A leading '@' forces file resolution.

#include <cstdlib>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ecmdot/error.hpp"
#include "ecmdot/kernel.hpp"
#include "ecmdot/machine.hpp"

namespace ecmdot {

inline constexpr const char* search_path_variable = "ECMDOT_MACHINE_PATH";

inline std::vector<std::filesystem::path> search_dirs_from_env() {
  std::vector<std::filesystem::path> dirs;
  const char* env = std::getenv(search_path_variable);
  if (!env) return dirs;
  std::string_view rest = env;
  while (!rest.empty()) {
    auto colon = rest.find(':');
    auto item = rest.substr(0, colon);
    if (!item.empty()) dirs.emplace_back(item);
    if (colon == std::string_view::npos) break;
    rest.remove_prefix(colon + 1);
  }
  return dirs;
}

namespace detail {

inline std::filesystem::path find_descriptor(std::string_view ref, std::string_view ext,
                                             const std::vector<std::filesystem::path>& dirs,
                                             bool allow_plain_path) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (allow_plain_path && fs::is_regular_file(fs::path(ref), ec)) return fs::path(ref);
  for (const auto& dir : dirs) {
    for (auto candidate : {dir / std::string(ref), dir / (std::string(ref) + std::string(ext))})
      if (fs::is_regular_file(candidate, ec)) return candidate;
  }
  return {};
}

}  // namespace detail

inline machine_descriptor resolve_machine(std::string_view ref,
                                          const std::vector<std::filesystem::path>& dirs) {
  if (ref.starts_with('@')) return load_machine_file(std::string(ref.substr(1)));
  for (auto& md : builtin_machines())
    if (md.name == ref) return md;
  auto path = detail::find_descriptor(ref, ".machine", dirs, true);
  if (path.empty())
    throw not_found_error("unknown machine '" + std::string(ref) +
                          "' (not a built-in, a file, or in " + search_path_variable + ")");
  return load_machine_file(path);
}

inline kernel_descriptor resolve_kernel(std::string_view ref,
                                        const std::vector<std::filesystem::path>& dirs) {
  if (ref.starts_with('@')) return load_kernel_file(std::string(ref.substr(1)));
  for (auto& kd : builtin_kernels())
    if (kd.name == ref) return kd;
  auto path = detail::find_descriptor(ref, ".kernel", dirs, true);
  if (path.empty())
    throw not_found_error("unknown kernel '" + std::string(ref) +
                          "' (not a built-in, a file, or in " + search_path_variable + ")");
  return load_kernel_file(path);
}

/// FNV-1a over the canonical descriptor text; identifies the exact
/// parameters a benchmark run used.
inline std::uint64_t descriptor_checksum(std::string_view canonical_text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : canonical_text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace ecmdot
