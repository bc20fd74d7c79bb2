#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "support.hpp"

using ecmdot::fixtures::run_cli;
namespace fs = std::filesystem;

namespace {

class scratch_dir {
 public:
  scratch_dir() {
    path_ = fs::temp_directory_path() /
            ("ecmdot-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter_++));
    fs::create_directories(path_);
  }
  ~scratch_dir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
  static inline int counter_ = 0;
};

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::vector<std::string> data_rows(const std::string& csv) {
  std::vector<std::string> out;
  for (auto& l : lines(csv))
    if (!l.empty() && l[0] != '#') out.push_back(l);
  return out;
}

std::string columns(const std::string& row, std::size_t count) {
  std::size_t pos = 0;
  for (std::size_t i = 0; i < count && pos != std::string::npos; ++i)
    pos = row.find(',', pos + (i ? 1 : 0));
  return row.substr(0, pos);
}

}  // namespace

TEST(Cli, PredictIvbTable) {
  auto r = run_cli({"predict", "-m", "IVB", "-k", "kahan-dot-sp", "--isa", "vec256"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out,
            "machine      IVB (2.2 GHz, 10 cores)\n"
            "kernel       kahan-dot-sp, vec256, 16 updates per work unit\n"
            "model        {8 ‖ 4 | 4 | 4 | 6.1+2.9} cy\n"
            "prediction   {8 ⌉ 8 ⌉ 12 ⌉ 21.01} cy\n"
            "performance  {4.40 ⌉ 4.40 ⌉ 2.93 ⌉ 1.68} G updates/s\n"
            "n_sat        4 cores\n"
            "roofline     5.76 G updates/s\n");
}

TEST(Cli, PredictBdwPerformanceLine) {
  auto r = run_cli({"predict", "-m", "BDW", "-k", "kahan-dot-sp", "--isa", "vec256"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("performance  {3.60 ⌉ 3.60 ⌉ 3.60 ⌉ 1.80}"), std::string::npos) << r.out;
}

TEST(Cli, PredictCsvGolden) {
  auto r = run_cli({"predict", "-m", "IVB", "-k", "kahan-dot-sp", "--format", "csv"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out,
            "machine,kernel,isa,level,cy,perf_gups,n_sat,roofline_gups\n"
            "IVB,kahan-dot-sp,vec256,L1,8.0000,4.4000,4,5.7625\n"
            "IVB,kahan-dot-sp,vec256,L2,8.0000,4.4000,4,5.7625\n"
            "IVB,kahan-dot-sp,vec256,L3,12.0000,2.9333,4,5.7625\n"
            "IVB,kahan-dot-sp,vec256,MEM,21.0085,1.6755,4,5.7625\n");
}

TEST(Cli, ListingCsvGolden) {
  auto m = run_cli({"machines", "--format", "csv"});
  EXPECT_EQ(m.code, 0);
  EXPECT_EQ(m.out,
            "name,clock_ghz,cores,llc_bytes,bw_loadonly_gbs,t_l3mem_per_cl,penalty_cy_per_cl\n"
            "SNB,2.7,8,20971520,43.6,3.96,2.55\n"
            "IVB,2.2,10,26214400,46.1,3.05,1.45\n"
            "HSW,2.3,14,36700160,60.6,2.43,5.55\n"
            "BDW,1.8,8,12582912,33,3.49,0.5\n");
  auto k = run_cli({"kernels", "--format", "csv"});
  EXPECT_EQ(k.code, 0);
  EXPECT_EQ(k.out,
            "name,elem_bytes,loads_per_iter,adds_per_iter,muls_per_iter,updates_per_iter,intensity\n"
            "naive-dot-sp,4,2,1,1,1,0.125\n"
            "naive-dot-dp,8,2,1,1,1,0.0625\n"
            "kahan-dot-sp,4,2,4,1,1,0.125\n"
            "kahan-dot-dp,8,2,4,1,1,0.0625\n");
}

TEST(Cli, ShowMachineRoundTrips) {
  auto r = run_cli({"machines", "--show", "HSW"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(ecmdot::load_machine(r.out), ecmdot::builtin_machine("HSW"));
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run_cli({"predict", "-m", "NOPE"}).code, 2);
  EXPECT_EQ(run_cli({"predict", "-k", "nope"}).code, 2);
  EXPECT_EQ(run_cli({"predict", "-m", "@/nonexistent.machine"}).code, 2);
  EXPECT_EQ(run_cli({"predict", "--isa", "avx512"}).code, 3);
  EXPECT_EQ(run_cli({}).code, 3);
  EXPECT_EQ(run_cli({"frobnicate"}).code, 3);
  EXPECT_EQ(run_cli({"accuracy", "-n", "2"}).code, 3);
  EXPECT_EQ(run_cli({"accuracy", "--condition", "0.5"}).code, 3);
  EXPECT_EQ(run_cli({"bench", "sweep", "--min-bytes", "100", "--max-bytes", "10"}).code, 3);
  EXPECT_EQ(run_cli({"--help"}).code, 0);
  auto r = run_cli({"predict", "-m", "NOPE"});
  EXPECT_NE(r.err.find("NOPE"), std::string::npos);
  EXPECT_TRUE(r.out.empty());
}

TEST(Cli, ModelErrorExitsThree) {
  scratch_dir dir;
  auto text = ecmdot::format_machine(ecmdot::builtin_machine("IVB"));
  text = text.substr(0, text.find("[ports.vec128]"));
  std::ofstream(dir.path() / "scalar-only.machine") << text;
  auto r = run_cli({"predict", "-m", "@" + (dir.path() / "scalar-only.machine").string(),
                    "--isa", "vec256"});
  EXPECT_EQ(r.code, 3) << r.err;
  EXPECT_NE(r.err.find("vec256"), std::string::npos);
}

TEST(Cli, MeasurementErrorExitsFour) {
  // A petabyte-sized working set cannot be allocated.
  auto r = run_cli({"bench", "sweep", "--min-bytes", "1000000000000000", "--max-bytes",
                    "2000000000000000", "--points", "2", "--min-time-ms", "1"});
  EXPECT_EQ(r.code, 4) << r.err;
}

TEST(Cli, SearchPathAndFileResolution) {
  scratch_dir dir;
  auto md = ecmdot::builtin_machine("IVB");
  md.name = "LAB";
  md.clock_ghz = 1;
  std::ofstream(dir.path() / "LAB.machine") << ecmdot::format_machine(md);

  EXPECT_EQ(run_cli({"predict", "-m", "LAB"}).code, 2);
  ::setenv(ecmdot::search_path_variable, ("/nonexistent:" + dir.path().string()).c_str(), 1);
  auto r = run_cli({"predict", "-m", "LAB"});
  ::unsetenv(ecmdot::search_path_variable);
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("LAB (1 GHz, 10 cores)"), std::string::npos) << r.out;

  auto direct = run_cli({"predict", "-m", (dir.path() / "LAB.machine").string()});
  EXPECT_EQ(direct.code, 0);
  auto forced = run_cli({"predict", "-m", "@" + (dir.path() / "LAB.machine").string()});
  EXPECT_EQ(forced.code, 0);
  EXPECT_EQ(direct.out, forced.out);

  auto kernel = run_cli({"predict", "-k",
                         std::string(ECMDOT_SOURCE_DIR) + "/kernels/kahan-dot-dp.kernel"});
  EXPECT_EQ(kernel.code, 0);
  EXPECT_EQ(kernel.out, run_cli({"predict", "-k", "kahan-dot-dp"}).out);
}

TEST(Cli, SelftestPasses) {
  auto r = run_cli({"selftest"});
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
  auto shipped = run_cli({"selftest", "--machine-dir", std::string(ECMDOT_SOURCE_DIR) + "/machines"});
  EXPECT_EQ(shipped.code, 0) << shipped.out;
}

TEST(Cli, SelftestDetectsTamperedDescriptor) {
  scratch_dir dir;
  for (const auto& md : ecmdot::builtin_machines()) {
    auto copy = md;
    if (copy.name == "IVB") copy.bw_loadonly_gbs /= 2;
    std::ofstream(dir.path() / (copy.name + ".machine")) << ecmdot::format_machine(copy);
  }
  auto r = run_cli({"selftest", "--machine-dir", dir.path().string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("FAIL t-l3mem-per-cl-IVB"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("PASS t-l3mem-per-cl-SNB"), std::string::npos);
}

TEST(Cli, SelftestList) {
  auto r = run_cli({"selftest", "--list", "--format", "csv"});
  EXPECT_EQ(r.code, 0);
  auto rows = lines(r.out);
  EXPECT_EQ(rows.size(), ecmdot::golden_cases().size() + 1);
  EXPECT_EQ(rows[0], "case,description");
  EXPECT_EQ(columns(rows[1], 1), "t-l3mem-per-cl-SNB");
  EXPECT_EQ(r.out.find("PASS"), std::string::npos);
}

TEST(Cli, SelftestCsv) {
  auto r = run_cli({"selftest", "--format", "csv"});
  EXPECT_EQ(r.code, 0);
  auto rows = lines(r.out);
  EXPECT_EQ(rows.front(), "case,result,detail");
  EXPECT_EQ(rows.size(), ecmdot::golden_cases().size() + 1);
  EXPECT_EQ(rows[1], "t-l3mem-per-cl-SNB,pass,\"\"");
}

TEST(Cli, AccuracyIsReproducible) {
  std::vector<std::string> args{"accuracy", "-k", "kahan-dot-sp", "-n", "1024", "--condition",
                                "1e8", "--seed", "42", "--format", "csv"};
  auto first = run_cli(args);
  auto second = run_cli(args);
  EXPECT_EQ(first.code, 0) << first.err;
  EXPECT_EQ(first.out, second.out);
  auto rows = lines(first.out);
  ASSERT_EQ(rows.size(), 10u);
  EXPECT_EQ(rows[0],
            "precision,lanes,unroll,n,condition,seed,achieved_condition,oracle,naive,kahan,"
            "naive_err_u,kahan_err_u");
  EXPECT_EQ(columns(rows[1], 6), "sp,1,1,1024,100000000,42");
  auto table = run_cli({"accuracy", "--lanes", "4", "--unroll", "2"});
  EXPECT_EQ(table.code, 0);
  EXPECT_EQ(lines(table.out).size(), 7u);
}

TEST(Cli, BenchSweepCsv) {
  std::vector<std::string> args{"bench", "sweep", "-k", "naive-dot-sp", "--min-bytes", "4096",
                                "--max-bytes", "65536", "--points", "3", "--min-time-ms", "5",
                                "--format", "csv", "--seed", "9"};
  auto first = run_cli(args);
  auto second = run_cli(args);
  ASSERT_EQ(first.code, 0) << first.err;
  auto rows = data_rows(first.out);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0], ecmdot::sweep_csv_header);
  EXPECT_NE(first.out.find("# seed=9"), std::string::npos);
  EXPECT_NE(first.out.find("descriptor_fnv1a="), std::string::npos);
  // Structure is deterministic; only the timing columns may change.
  auto again = data_rows(second.out);
  ASSERT_EQ(again.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_EQ(columns(rows[i], 8), columns(again[i], 8));
  EXPECT_EQ(lines(first.out)[0], lines(second.out)[0]);
  EXPECT_EQ(lines(first.out)[1], lines(second.out)[1]);
}

TEST(Cli, BenchScalingCsv) {
  auto md = ecmdot::builtin_machine("IVB");
  auto r = run_cli({"bench", "scaling", "-k", "naive-dot-dp", "--threads", "1,2,4",
                    "--min-time-ms", "5", "--format", "csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto rows = data_rows(r.out);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0], ecmdot::scaling_csv_header);
  EXPECT_EQ(columns(rows[3], 3), "naive-dot-dp,vec256,4");
}

TEST(Cli, CompareFromCsvAndOutputFile) {
  scratch_dir dir;
  const auto csv = dir.path() / "sweep.csv";
  std::ofstream(csv) << "# recorded elsewhere\n"
                     << ecmdot::sweep_csv_header << '\n'
                     << "kahan-dot-sp,vec256,8,1,512,4096,L1,7,8.8000,8.5000,4.0000\n"
                     << "kahan-dot-sp,vec256,8,1,8388608,67108864,MEM,7,42.0000,40.0000,0.8381\n";
  const auto out = dir.path() / "cmp.csv";
  auto r = run_cli({"compare", "-m", "IVB", "-k", "kahan-dot-sp", "--input", csv.string(),
                    "--format", "csv", "-o", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  std::ifstream in(out);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(),
            "level,predicted_cy,measured_cy,deviation_pct\n"
            "L1,8.0000,8.8000,10.00\n"
            "MEM,21.0085,42.0000,99.92\n");
  auto table = run_cli({"compare", "--input", csv.string()});
  EXPECT_EQ(table.code, 0);
  EXPECT_NE(table.out.find("+10.0%"), std::string::npos) << table.out;
}
