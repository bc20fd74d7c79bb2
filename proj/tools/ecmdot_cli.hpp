#pragma once

// Command-line front end. Kept in a header so tests can drive it in-process.
//
// Exit codes: 0 ok, 1 selftest failure, 2 machine/kernel resolution failure,
// 3 bad parameter or model error, 4 measurement failure.

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ecmdot/ecmdot.hpp"
#include "ecmdot/resolve.hpp"

namespace ecmdot::cli {

enum exit_code : int {
  ok = 0,
  selftest_failed = 1,
  resolution_failed = 2,
  bad_parameter = 3,
  measurement_failed = 4,
};

struct resolution_failure : error {
  using error::error;
};

struct options {
  std::string machine = "IVB";
  std::string kernel = "kahan-dot-sp";
  std::string isa = "vec256";
  std::optional<std::uint32_t> lanes;
  std::optional<std::uint32_t> unroll;
  std::uint64_t min_bytes = 4 * 1024;
  std::uint64_t max_bytes = 256 * 1024 * 1024;
  std::uint32_t points = 24;
  std::vector<std::uint32_t> threads{1};
  std::uint64_t seed = 42;
  double condition = 1e8;
  std::uint64_t n = 1024;
  double min_time_ms = 100;
  std::string format = "table";
  std::string output;
  std::string input;
  std::string machine_dir;
  bool list = false;
};

namespace detail {

inline machine_descriptor machine_of(const options& o) {
  try {
    return resolve_machine(o.machine, search_dirs_from_env());
  } catch (const error& e) {
    throw resolution_failure(e.what());
  }
}

inline kernel_descriptor kernel_of(const options& o) {
  try {
    return resolve_kernel(o.kernel, search_dirs_from_env());
  } catch (const error& e) {
    throw resolution_failure(e.what());
  }
}

inline bench_variant variant_of(const options& o, const kernel_descriptor& kd) {
  bench_variant v;
  v.kernel = kd;
  v.isa = parse_isa(o.isa);
  v.cfg = default_config(kd, v.isa);
  if (o.lanes) v.cfg.lanes = *o.lanes;
  if (o.unroll) v.cfg.unroll = *o.unroll;
  v.seed = o.seed;
  return v;
}

inline std::string checksum_hex(const machine_descriptor& md) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0')
     << descriptor_checksum(format_machine(md));
  return os.str();
}

inline void run_header(std::ostream& os, std::string_view what, const options& o,
                       const machine_descriptor& md, const bench_variant& v) {
  os << "# ecmdot " << what << '\n'
     << "# machine=" << md.name << " clock_ghz=" << kv::format_number(md.clock_ghz)
     << " descriptor_fnv1a=" << checksum_hex(md) << '\n'
     << "# kernel=" << v.kernel.name << " isa=" << to_string(v.isa)
     << " lanes=" << v.cfg.lanes << " unroll=" << v.cfg.unroll << '\n'
     << "# seed=" << o.seed << " min_time_ms=" << kv::format_number(o.min_time_ms) << '\n';
}

inline void print_row(std::ostream& os, const std::vector<std::string>& cells,
                      const std::vector<int>& widths) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) os << "  ";
    if (i + 1 < cells.size())
      os << std::left << std::setw(widths[i]) << cells[i];
    else
      os << cells[i];
  }
  os << '\n';
}

}  // namespace detail

inline int cmd_machines(const options& o, std::ostream& out) {
  using detail::print_row;
  auto machines = builtin_machines();
  if (o.format == "csv") {
    out << "name,clock_ghz,cores,llc_bytes,bw_loadonly_gbs,t_l3mem_per_cl,penalty_cy_per_cl\n";
    for (const auto& m : machines)
      out << m.name << ',' << kv::format_number(m.clock_ghz) << ',' << m.cores << ','
          << m.llc_bytes << ',' << kv::format_number(m.bw_loadonly_gbs) << ','
          << format_fixed(t_l3mem_per_cl(m), 2) << ','
          << kv::format_number(m.penalty_cy_per_cl) << '\n';
    return ok;
  }
  std::vector<int> w{5, 6, 6, 8, 10, 13, 11};
  print_row(out, {"name", "GHz", "cores", "LLC MiB", "BW GB/s", "T_L3Mem/CL", "penalty/CL"}, w);
  for (const auto& m : machines)
    print_row(out,
              {m.name, format_fixed(m.clock_ghz, 1), std::to_string(m.cores),
               format_trimmed(m.llc_bytes / 1048576.0, 1), format_trimmed(m.bw_loadonly_gbs, 1),
               format_fixed(t_l3mem_per_cl(m), 2), format_trimmed(m.penalty_cy_per_cl, 2)},
              w);
  return ok;
}

inline int cmd_show_machine(const options& o, std::ostream& out) {
  out << format_machine(detail::machine_of(o));
  return ok;
}

inline int cmd_kernels(const options& o, std::ostream& out) {
  auto kernels = builtin_kernels();
  if (o.format == "csv") {
    out << "name,elem_bytes,loads_per_iter,adds_per_iter,muls_per_iter,updates_per_iter,intensity\n";
    for (const auto& k : kernels)
      out << k.name << ',' << k.elem_bytes << ',' << k.loads_per_iter << ','
          << k.adds_per_iter << ',' << k.muls_per_iter << ',' << k.updates_per_iter << ','
          << kv::format_number(intensity(k)) << '\n';
    return ok;
  }
  std::vector<int> w{13, 5, 6, 5, 5, 9};
  detail::print_row(out, {"name", "elem", "loads", "adds", "muls", "UP/byte"}, w);
  for (const auto& k : kernels)
    detail::print_row(out,
                      {k.name, std::to_string(k.elem_bytes), std::to_string(k.loads_per_iter),
                       std::to_string(k.adds_per_iter), std::to_string(k.muls_per_iter),
                       "1/" + format_trimmed(1 / intensity(k), 2)},
                      w);
  return ok;
}

inline int cmd_predict(const options& o, std::ostream& out) {
  auto md = detail::machine_of(o);
  auto kd = detail::kernel_of(o);
  const auto isa = parse_isa(o.isa);
  auto km = model_kernel(kd, isa, md);
  const auto& p = km.prediction;
  if (o.format == "csv") {
    out << "machine,kernel,isa,level,cy,perf_gups,n_sat,roofline_gups\n";
    for (auto l : all_memory_levels)
      out << md.name << ',' << kd.name << ',' << to_string(isa) << ',' << to_string(l)
          << ',' << format_fixed(p.cycles(l), 4) << ',' << format_fixed(p.performance(l), 4)
          << ',' << p.n_sat << ',' << format_fixed(p.p_roofline, 4) << '\n';
    return ok;
  }
  const auto updates = km.counts.iterations * kd.updates_per_iter;
  out << "machine      " << md.name << " (" << format_trimmed(md.clock_ghz, 2) << " GHz, "
      << md.cores << " cores)\n"
      << "kernel       " << kd.name << ", " << to_string(isa) << ", " << updates
      << " updates per work unit\n"
      << "model        " << format_shorthand(km.model) << " cy\n"
      << "prediction   " << format_levels(p.cy, 2, false) << " cy\n"
      << "performance  " << format_levels(p.perf, 2, true) << " G updates/s\n"
      << "n_sat        " << p.n_sat << " cores\n"
      << "roofline     " << format_fixed(p.p_roofline, 2) << " G updates/s\n";
  return ok;
}

inline int cmd_bench_sweep(const options& o, std::ostream& out) {
  auto md = detail::machine_of(o);
  auto kd = detail::kernel_of(o);
  auto v = detail::variant_of(o, kd);
  auto sizes = sweep_sizes(o.min_bytes, o.max_bytes, o.points, kd, md.cacheline_bytes);
  auto samples = sweep(v, sizes, md, {.min_time_ms = o.min_time_ms});
  if (o.format == "csv") {
    detail::run_header(out, "bench sweep", o, md, v);
    write_sweep_csv(out, v, samples);
    return ok;
  }
  detail::run_header(out, "bench sweep", o, md, v);
  std::vector<int> w{10, 12, 5, 10, 10, 9};
  detail::print_row(out, {"n", "bytes", "level", "cy/WU", "min cy/WU", "GUP/s"}, w);
  for (const auto& s : samples)
    detail::print_row(out,
                      {std::to_string(s.n), std::to_string(s.bytes_total),
                       std::string(to_string(s.level)), format_fixed(s.cy_per_wu, 2),
                       format_fixed(s.cy_per_wu_min, 2), format_fixed(s.perf_gups, 2)},
                      w);
  return ok;
}

inline int cmd_bench_scaling(const options& o, std::ostream& out) {
  auto md = detail::machine_of(o);
  auto kd = detail::kernel_of(o);
  auto v = detail::variant_of(o, kd);
  auto samples = thread_scaling(v, o.threads, md, o.min_time_ms);
  detail::run_header(out, "bench scaling", o, md, v);
  if (o.format == "csv") {
    write_scaling_csv(out, v, samples);
    return ok;
  }
  auto km = model_kernel(kd, v.isa, md);
  std::vector<int> w{7, 12, 9, 10, 6};
  detail::print_row(out, {"threads", "bytes/thread", "GUP/s", "model", "pinned"}, w);
  for (const auto& s : samples)
    detail::print_row(out,
                      {std::to_string(s.threads), std::to_string(s.bytes_per_thread),
                       format_fixed(s.perf_gups, 2),
                       format_fixed(scale(km.prediction.performance(memory_level::mem),
                                          km.prediction.p_roofline, s.threads),
                                    2),
                       s.pinned ? "yes" : "no"},
                      w);
  return ok;
}

inline int cmd_compare(const options& o, std::ostream& out) {
  auto md = detail::machine_of(o);
  auto kd = detail::kernel_of(o);
  auto v = detail::variant_of(o, kd);
  std::vector<sweep_sample> samples;
  if (!o.input.empty()) {
    std::ifstream in(o.input);
    if (!in) throw std::invalid_argument("cannot open " + o.input);
    samples = read_sweep_csv(in);
  } else {
    auto sizes = sweep_sizes(o.min_bytes, o.max_bytes, o.points, kd, md.cacheline_bytes);
    samples = sweep(v, sizes, md, {.min_time_ms = o.min_time_ms});
  }
  auto km = model_kernel(kd, v.isa, md);
  auto rows = compare(samples, km.prediction);
  if (o.format == "csv") {
    write_comparison_csv(out, rows);
    return ok;
  }
  out << "model " << format_shorthand(km.model) << " cy on " << md.name << '\n';
  std::vector<int> w{5, 10, 10, 10};
  detail::print_row(out, {"level", "predicted", "measured", "deviation"}, w);
  for (const auto& r : rows) {
    std::string dev = (r.deviation_pct >= 0 ? "+" : "") + format_fixed(r.deviation_pct, 1) + "%";
    detail::print_row(out,
                      {std::string(to_string(r.level)), format_fixed(r.predicted_cy, 2),
                       format_fixed(r.measured_cy, 2), dev},
                      w);
  }
  return ok;
}

namespace detail {

template <class T>
int accuracy_report(const options& o, const kernel_descriptor& kd, std::ostream& out) {
  constexpr double u = std::numeric_limits<T>::epsilon() / 2;
  auto in = gen_ill_conditioned<T>(o.n, o.condition, o.seed);
  std::span<const T> a(in.a), b(in.b);
  const double reference = oracle_dot<T>(a, b).value();
  const double achieved = condition_number<T>(a, b);
  std::vector<variant_config> configs;
  if (o.lanes || o.unroll) {
    configs.push_back({o.lanes.value_or(1), o.unroll.value_or(1)});
  } else {
    for (std::uint32_t w : {1u, 4u, 8u})
      for (std::uint32_t un : {1u, 2u, 4u}) configs.push_back({w, un});
  }
  auto err_u = [&](double v) { return std::fabs(v - reference) / std::fabs(reference) / u; };
  auto sci = [](double v) {
    std::ostringstream os;
    os << std::setprecision(9) << v;
    return os.str();
  };
  if (o.format == "csv") {
    out << "precision,lanes,unroll,n,condition,seed,achieved_condition,oracle,naive,kahan,"
           "naive_err_u,kahan_err_u\n";
  } else {
    out << "precision    " << (kd.elem_bytes == 4 ? "binary32" : "binary64") << " (u = 2^"
        << (kd.elem_bytes == 4 ? "-24" : "-53") << ")\n"
        << "n            " << o.n << '\n'
        << "condition    target " << sci(o.condition) << ", achieved " << sci(achieved) << '\n'
        << "seed         " << o.seed << '\n'
        << "oracle       " << std::setprecision(17) << reference << '\n';
    print_row(out, {"lanes", "unroll", "naive", "kahan", "naive err/u", "kahan err/u"},
              {5, 6, 16, 16, 12, 12});
  }
  for (auto cfg : configs) {
    const double naive = naive_dot<T>(a, b, cfg);
    const double kahan = kahan_dot<T>(a, b, cfg);
    if (o.format == "csv")
      out << (kd.elem_bytes == 4 ? "sp" : "dp") << ',' << cfg.lanes << ',' << cfg.unroll
          << ',' << o.n << ',' << sci(o.condition) << ',' << o.seed << ',' << sci(achieved)
          << ',' << sci(reference) << ',' << sci(naive) << ',' << sci(kahan) << ','
          << sci(err_u(naive)) << ',' << sci(err_u(kahan)) << '\n';
    else
      print_row(out,
                {std::to_string(cfg.lanes), std::to_string(cfg.unroll), sci(naive), sci(kahan),
                 format_fixed(err_u(naive), 2), format_fixed(err_u(kahan), 2)},
                {5, 6, 16, 16, 12, 12});
  }
  return ok;
}

}  // namespace detail

inline int cmd_accuracy(const options& o, std::ostream& out) {
  auto kd = detail::kernel_of(o);
  if (o.n < 4) throw std::invalid_argument("accuracy needs -n >= 4");
  if (!(o.condition >= 1)) throw std::invalid_argument("--condition must be >= 1");
  return kd.elem_bytes == 4 ? detail::accuracy_report<float>(o, kd, out)
                            : detail::accuracy_report<double>(o, kd, out);
}

inline int cmd_selftest(const options& o, std::ostream& out) {
  if (o.list) {
    if (o.format == "csv") out << "case,description\n";
    for (const auto& c : golden_cases()) {
      if (o.format == "csv")
        out << c.name << ",\"" << c.description << "\"\n";
      else
        out << std::left << std::setw(26) << c.name << c.description << '\n';
    }
    return ok;
  }
  machine_source machines = [&](std::string_view name) {
    if (o.machine_dir.empty()) return builtin_machine(name);
    return load_machine_file(std::filesystem::path(o.machine_dir) /
                             (std::string(name) + ".machine"));
  };
  auto results = run_golden_cases(machines);
  std::size_t failed = 0;
  if (o.format == "csv") out << "case,result,detail\n";
  for (const auto& r : results) {
    if (!r.passed) ++failed;
    if (o.format == "csv")
      out << r.name << ',' << (r.passed ? "pass" : "fail") << ",\"" << r.detail << "\"\n";
    else
      out << (r.passed ? "PASS " : "FAIL ") << r.name
          << (r.passed ? "" : ": " + r.detail) << '\n';
  }
  if (o.format != "csv")
    out << results.size() - failed << "/" << results.size() << " golden cases passed\n";
  return failed ? selftest_failed : ok;
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"ECM performance model and Kahan dot-product benchmark toolkit", "ecmdot"};
  app.require_subcommand(1);
  options o;

  auto add_format = [&](CLI::App* sub) {
    sub->add_option("--format", o.format, "Output format")
        ->check(CLI::IsMember({"table", "csv"}));
    sub->add_option("-o,--output", o.output, "Write output to this file");
  };
  auto add_target = [&](CLI::App* sub) {
    sub->add_option("-m,--machine", o.machine,
                    "Machine preset, descriptor file, or @file")
        ->capture_default_str();
    sub->add_option("-k,--kernel", o.kernel, "Kernel preset, descriptor file, or @file")
        ->capture_default_str();
    sub->add_option("--isa", o.isa, "Instruction set class")
        ->check(CLI::IsMember({"scalar", "vec128", "vec256"}))
        ->capture_default_str();
  };
  auto add_variant = [&](CLI::App* sub) {
    sub->add_option("--lanes", o.lanes, "Accumulator lanes (default: ISA lane width)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--unroll", o.unroll, "Unroll factor (default: 1)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--seed", o.seed, "Seed for array initialization")->capture_default_str();
    sub->add_option("--min-time-ms", o.min_time_ms, "Minimum timed duration per size")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  };
  auto add_sweep = [&](CLI::App* sub) {
    sub->add_option("--min-bytes", o.min_bytes, "Smallest working set")->capture_default_str();
    sub->add_option("--max-bytes", o.max_bytes, "Largest working set")->capture_default_str();
    sub->add_option("--points", o.points, "Number of sizes")->capture_default_str();
  };

  auto* machines = app.add_subcommand("machines", "List built-in machine presets");
  std::string show;
  machines->add_option("--show", show, "Print the descriptor of one machine");
  add_format(machines);

  auto* kernels = app.add_subcommand("kernels", "List built-in kernel presets");
  add_format(kernels);

  auto* predict = app.add_subcommand("predict", "ECM model and prediction for a kernel");
  add_target(predict);
  add_format(predict);

  auto* bench = app.add_subcommand("bench", "Run benchmarks");
  bench->require_subcommand(1);
  auto* bench_sweep = bench->add_subcommand("sweep", "Cycles per work unit vs. working set");
  add_target(bench_sweep);
  add_variant(bench_sweep);
  add_sweep(bench_sweep);
  add_format(bench_sweep);
  auto* bench_scaling = bench->add_subcommand("scaling", "In-memory thread scaling");
  add_target(bench_scaling);
  add_variant(bench_scaling);
  bench_scaling->add_option("--threads", o.threads, "Comma-separated thread counts")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  add_format(bench_scaling);

  auto* cmp = app.add_subcommand("compare", "Measured vs. predicted cycles per level");
  add_target(cmp);
  add_variant(cmp);
  add_sweep(cmp);
  cmp->add_option("--input", o.input, "Read a sweep CSV instead of measuring");
  add_format(cmp);

  auto* accuracy = app.add_subcommand("accuracy", "Naive vs. Kahan vs. exact reference");
  accuracy->add_option("-k,--kernel", o.kernel, "Kernel (selects precision)")
      ->capture_default_str();
  accuracy->add_option("-n", o.n, "Vector length")->capture_default_str();
  accuracy->add_option("--condition", o.condition, "Target condition number")
      ->capture_default_str();
  accuracy->add_option("--seed", o.seed, "Generator seed")->capture_default_str();
  accuracy->add_option("--lanes", o.lanes, "Only this lane count")->check(CLI::PositiveNumber);
  accuracy->add_option("--unroll", o.unroll, "Only this unroll factor")
      ->check(CLI::PositiveNumber);
  add_format(accuracy);

  auto* selftest = app.add_subcommand("selftest", "Check the published model numbers");
  selftest->add_flag("--list", o.list, "List the cases without running them");
  selftest->add_option("--machine-dir", o.machine_dir,
                       "Load SNB/IVB/HSW/BDW from <dir>/<NAME>.machine instead of presets");
  add_format(selftest);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? ok : bad_parameter;
  }

  std::ofstream file;
  std::ostream* sink = &out;
  auto output_path = o.output;
  if (!output_path.empty()) {
    file.open(output_path, std::ios::binary);
    if (!file) {
      err << "error: cannot write " << output_path << '\n';
      return bad_parameter;
    }
    sink = &file;
  }

  try {
    if (machines->parsed()) {
      if (!show.empty()) {
        o.machine = show;
        return cmd_show_machine(o, *sink);
      }
      return cmd_machines(o, *sink);
    }
    if (kernels->parsed()) return cmd_kernels(o, *sink);
    if (predict->parsed()) return cmd_predict(o, *sink);
    if (bench_sweep->parsed()) return cmd_bench_sweep(o, *sink);
    if (bench_scaling->parsed()) return cmd_bench_scaling(o, *sink);
    if (cmp->parsed()) return cmd_compare(o, *sink);
    if (accuracy->parsed()) return cmd_accuracy(o, *sink);
    if (selftest->parsed()) return cmd_selftest(o, *sink);
  } catch (const resolution_failure& e) {
    err << "error: " << e.what() << '\n';
    return resolution_failed;
  } catch (const measurement_error& e) {
    err << "error: " << e.what() << '\n';
    return measurement_failed;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return bad_parameter;
  }
  return bad_parameter;
}

}  // namespace ecmdot::cli
