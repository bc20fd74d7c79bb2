#pragma once

// Golden cases: the published analytic numbers for the four Xeon presets
// and the dot kernels, checked against this library's model pipeline.

#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ecmdot/ecm.hpp"
#include "ecmdot/kernel.hpp"
#include "ecmdot/machine.hpp"
#include "ecmdot/shorthand.hpp"

namespace ecmdot {

using machine_source = std::function<machine_descriptor(std::string_view name)>;

struct golden_case {
  std::string name;
  std::string description;
  /// Empty on success, otherwise a description of the mismatch.
  std::function<std::optional<std::string>(const machine_source&)> check;
};

struct golden_result {
  std::string name;
  bool passed = false;
  std::string detail;
};

namespace detail {

class mismatch_log {
 public:
  void near(std::string_view what, double got, double want, double tol) {
    if (!(std::fabs(got - want) <= tol)) {
      if (!msg_.empty()) msg_ += "; ";
      std::ostringstream os;
      os << what << " = " << got << ", expected " << want << " +/- " << tol;
      msg_ += os.str();
    }
  }
  void equal(std::string_view what, std::string_view got, std::string_view want) {
    if (got != want) {
      if (!msg_.empty()) msg_ += "; ";
      msg_ += std::string(what) + " = \"" + std::string(got) + "\", expected \"" +
              std::string(want) + "\"";
    }
  }
  std::optional<std::string> result() const {
    if (msg_.empty()) return std::nullopt;
    return msg_;
  }

 private:
  std::string msg_;
};

inline void check_levels(mismatch_log& log, std::string_view what,
                         const std::array<double, 4>& got,
                         const std::array<double, 4>& want, double tol) {
  for (std::size_t i = 0; i < 4; ++i)
    log.near(std::string(what) + "[" + std::string(to_string(all_memory_levels[i])) + "]",
             got[i], want[i], tol);
}

struct model_expectation {
  std::string_view machine;
  std::string_view kernel;
  isa_class isa;
  std::array<double, 4> cy;
  std::array<double, 4> perf;
  std::optional<std::uint32_t> n_sat;
  double cy_tol;
  double perf_tol;
};

inline golden_case model_case(std::string name, std::string description,
                              model_expectation e) {
  return {std::move(name), std::move(description),
          [e](const machine_source& machines) {
            mismatch_log log;
            auto km = model_kernel(builtin_kernel(e.kernel), e.isa, machines(e.machine));
            check_levels(log, "cy", km.prediction.cy, e.cy, e.cy_tol);
            check_levels(log, "perf", km.prediction.perf, e.perf, e.perf_tol);
            if (e.n_sat && km.prediction.n_sat != *e.n_sat)
              log.near("n_sat", km.prediction.n_sat, *e.n_sat, 0);
            return log.result();
          }};
}

}  // namespace detail

inline std::vector<golden_case> golden_cases() {
  using detail::mismatch_log;
  using detail::model_case;
  std::vector<golden_case> cases;

  for (auto [name, want] : {std::pair{"SNB", 3.96}, std::pair{"IVB", 3.05},
                            std::pair{"HSW", 2.43}, std::pair{"BDW", 3.49}}) {
    std::string n = name;
    double w = want;
    cases.push_back({"t-l3mem-per-cl-" + n, "memory transfer cycles per line on " + n,
                     [n, w](const machine_source& m) {
                       mismatch_log log;
                       log.near("t_l3mem_per_cl", t_l3mem_per_cl(m(n)), w, 0.01);
                       return log.result();
                     }});
  }

  cases.push_back({"ivb-descriptor", "IVB clock, cores and load-only bandwidth",
                   [](const machine_source& m) {
                     mismatch_log log;
                     auto md = m("IVB");
                     log.near("clock_ghz", md.clock_ghz, 2.2, 1e-12);
                     log.near("cores", md.cores, 10, 0);
                     log.near("bw_loadonly_gbs", md.bw_loadonly_gbs, 46.1, 1e-12);
                     return log.result();
                   }});
  cases.push_back({"hsw-uncore", "HSW single-core L2-L3 cost and core count",
                   [](const machine_source& m) {
                     mismatch_log log;
                     auto md = m("HSW");
                     log.near("cy_per_cl_l2l3", md.cy_per_cl_l2l3, 2.77, 1e-12);
                     log.near("cores", md.cores, 14, 0);
                     return log.result();
                   }});
  cases.push_back({"bdw-penalty", "BDW latency penalty per cache line",
                   [](const machine_source& m) {
                     mismatch_log log;
                     log.near("penalty_cy_per_cl", m("BDW").penalty_cy_per_cl, 0.5, 1e-12);
                     return log.result();
                   }});

  cases.push_back({"expand-kahan-sp", "Kahan SP work-unit instruction counts",
                   [](const machine_source&) {
                     mismatch_log log;
                     auto kd = builtin_kernel("kahan-dot-sp");
                     auto v = expand(kd, isa_class::vec256, 64);
                     log.near("vec256.bundles", v.bundles, 2, 0);
                     log.near("vec256.adds", v.adds, 8, 0);
                     log.near("vec256.muls", v.muls, 2, 0);
                     log.near("vec256.loads", v.loads, 4, 0);
                     log.near("vec256.cls_loaded", v.cls_loaded, 2, 0);
                     auto s = expand(kd, isa_class::scalar, 64);
                     log.near("scalar.adds", s.adds, 64, 0);
                     log.near("scalar.loads", s.loads, 32, 0);
                     return log.result();
                   }});
  cases.push_back({"expand-naive-sp", "naive SP AVX work-unit instruction counts",
                   [](const machine_source&) {
                     mismatch_log log;
                     auto v = expand(builtin_kernel("naive-dot-sp"), isa_class::vec256, 64);
                     log.near("adds", v.adds, 2, 0);
                     log.near("muls", v.muls, 2, 0);
                     log.near("loads", v.loads, 4, 0);
                     return log.result();
                   }});
  cases.push_back({"expand-kahan-dp", "Kahan DP scalar work-unit instruction counts",
                   [](const machine_source&) {
                     mismatch_log log;
                     auto kd = builtin_kernel("kahan-dot-dp");
                     log.near("elem_bytes", kd.elem_bytes, 8, 0);
                     log.near("adds_per_iter", kd.adds_per_iter, 4, 0);
                     auto s = expand(kd, isa_class::scalar, 64);
                     log.near("adds", s.adds, 32, 0);
                     log.near("loads", s.loads, 16, 0);
                     return log.result();
                   }});
  cases.push_back({"intensity", "computational intensity of SP and DP dot",
                   [](const machine_source&) {
                     mismatch_log log;
                     log.near("sp", intensity(builtin_kernel("kahan-dot-sp")), 1.0 / 8, 1e-15);
                     log.near("dp", intensity(builtin_kernel("kahan-dot-dp")), 1.0 / 16, 1e-15);
                     return log.result();
                   }});

  cases.push_back({"in-core-times", "T_OL and T_nOL for Kahan SP on IVB and HSW",
                   [](const machine_source& m) {
                     mismatch_log log;
                     auto kd = builtin_kernel("kahan-dot-sp");
                     auto ivb = m("IVB");
                     auto hsw = m("HSW");
                     auto t = in_core_times(expand(kd, isa_class::vec256, 64),
                                            ivb.ports_for(isa_class::vec256));
                     log.near("IVB vec256 t_ol", t.t_ol, 8, 1e-12);
                     log.near("IVB vec256 t_nol", t.t_nol, 4, 1e-12);
                     t = in_core_times(expand(kd, isa_class::vec256, 64),
                                       hsw.ports_for(isa_class::vec256));
                     log.near("HSW vec256 t_ol", t.t_ol, 8, 1e-12);
                     log.near("HSW vec256 t_nol", t.t_nol, 2, 1e-12);
                     t = in_core_times(expand(kd, isa_class::scalar, 64),
                                       ivb.ports_for(isa_class::scalar));
                     log.near("IVB scalar t_ol", t.t_ol, 64, 1e-12);
                     log.near("IVB scalar t_nol", t.t_nol, 16, 1e-12);
                     return log.result();
                   }});
  cases.push_back({"transfer-times", "cache and memory transfer terms for dot",
                   [](const machine_source& m) {
                     mismatch_log log;
                     auto c = expand(builtin_kernel("naive-dot-sp"), isa_class::vec256, 64);
                     auto t = transfer_times(c, m("IVB"));
                     log.near("IVB t_l1l2", t.t_l1l2, 4, 1e-12);
                     log.near("IVB t_l2l3", t.t_l2l3, 4, 1e-12);
                     log.near("IVB t_l3mem", t.t_l3mem, 6.1, 0.05);
                     log.near("IVB penalty", t.penalty, 2.9, 1e-9);
                     t = transfer_times(c, m("HSW"));
                     log.near("HSW t_l1l2", t.t_l1l2, 2, 1e-12);
                     log.near("HSW t_l2l3", t.t_l2l3, 5.54, 1e-9);
                     log.near("HSW t_l3mem", t.t_l3mem, 4.9, 0.05);
                     log.near("HSW penalty", t.penalty, 11.1, 1e-9);
                     return log.result();
                   }});
  cases.push_back({"generic-prediction", "{2 || 4 | 4 | 4 | 9} -> {4 ] 8 ] 12 ] 21}",
                   [](const machine_source&) {
                     mismatch_log log;
                     detail::check_levels(log, "cy", predict(parse_shorthand("{2 ‖ 4 | 4 | 4 | 9}")),
                                          {4, 8, 12, 21}, 0);
                     return log.result();
                   }});
  cases.push_back({"performance-conversion", "cycles to G updates/s at 2.2 GHz",
                   [](const machine_source&) {
                     mismatch_log log;
                     log.near("21 cy", to_performance(21, 16, 2.2), 1.68, 0.01);
                     log.near("8 cy", to_performance(8, 16, 2.2), 4.40, 0.01);
                     return log.result();
                   }});
  cases.push_back({"roofline-ivb", "bandwidth caps for SP and DP dot on IVB",
                   [](const machine_source& m) {
                     mismatch_log log;
                     auto md = m("IVB");
                     log.near("sp", roofline(intensity(builtin_kernel("kahan-dot-sp")), md.bw_loadonly_gbs), 5.76, 0.01);
                     log.near("dp", roofline(intensity(builtin_kernel("kahan-dot-dp")), md.bw_loadonly_gbs), 2.88, 0.01);
                     return log.result();
                   }});
  cases.push_back({"saturation", "saturation core counts on IVB",
                   [](const machine_source&) {
                     mismatch_log log;
                     log.near("ceil(21/6.1)", saturation_cores(21, 6.1), 4, 0);
                     log.near("ceil(64/6.1)", saturation_cores(64, 6.1), 11, 0);
                     log.near("ceil(32/6.1)", saturation_cores(32, 6.1), 6, 0);
                     return log.result();
                   }});
  cases.push_back({"shorthand-ivb-avx-kahan", "model string for AVX Kahan SP on IVB",
                   [](const machine_source& m) {
                     mismatch_log log;
                     auto km = model_kernel(builtin_kernel("kahan-dot-sp"), isa_class::vec256, m("IVB"));
                     log.equal("shorthand", format_shorthand(km.model), "{8 ‖ 4 | 4 | 4 | 6.1+2.9}");
                     return log.result();
                   }});

  cases.push_back(model_case("ivb-naive-sp-vec256", "naive SP AVX on IVB",
                             {"IVB", "naive-dot-sp", isa_class::vec256,
                              {4, 8, 12, 21}, {8.80, 4.40, 2.93, 1.68}, 4, 0.05, 0.01}));
  cases.push_back(model_case("ivb-kahan-sp-scalar", "scalar Kahan SP on IVB",
                             {"IVB", "kahan-dot-sp", isa_class::scalar,
                              {64, 64, 64, 64}, {0.55, 0.55, 0.55, 0.55}, 11, 0.05, 0.01}));
  cases.push_back(model_case("ivb-kahan-sp-vec128", "SSE Kahan SP on IVB",
                             {"IVB", "kahan-dot-sp", isa_class::vec128,
                              {16, 16, 16, 21}, {2.20, 2.20, 2.20, 1.68}, 4, 0.05, 0.01}));
  cases.push_back(model_case("ivb-kahan-sp-vec256", "AVX Kahan SP on IVB",
                             {"IVB", "kahan-dot-sp", isa_class::vec256,
                              {8, 8, 12, 21}, {4.40, 4.40, 2.93, 1.68}, 4, 0.05, 0.01}));
  cases.push_back(model_case("ivb-kahan-dp-scalar", "scalar Kahan DP on IVB",
                             {"IVB", "kahan-dot-dp", isa_class::scalar,
                              {32, 32, 32, 32}, {0.55, 0.55, 0.55, 0.55}, 6, 0.05, 0.01}));
  cases.push_back(model_case("snb-kahan-sp-vec256", "AVX Kahan SP on SNB",
                             {"SNB", "kahan-dot-sp", isa_class::vec256,
                              {8, 8, 12, 25}, {5.40, 5.40, 3.60, 1.73}, std::nullopt, 0.1, 0.02}));
  cases.push_back(model_case("hsw-kahan-sp-vec256", "AVX Kahan SP on HSW",
                             {"HSW", "kahan-dot-sp", isa_class::vec256,
                              {8, 8, 9.54, 25.54}, {4.60, 4.60, 3.86, 1.44}, std::nullopt, 0.1, 0.02}));
  cases.push_back(model_case("bdw-kahan-sp-vec256", "AVX Kahan SP on BDW",
                             {"BDW", "kahan-dot-sp", isa_class::vec256,
                              {8, 8, 8, 16}, {3.60, 3.60, 3.60, 1.8}, std::nullopt, 0.1, 0.02}));
  return cases;
}

inline std::vector<golden_result> run_golden_cases(const machine_source& machines) {
  std::vector<golden_result> out;
  for (const auto& c : golden_cases()) {
    golden_result r{c.name, false, {}};
    try {
      auto failure = c.check(machines);
      r.passed = !failure;
      if (failure) r.detail = *failure;
    } catch (const std::exception& e) {
      r.detail = e.what();
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace ecmdot
