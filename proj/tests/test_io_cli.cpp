#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "cartanflow/io.hpp"
#include "cartanflow/oracles.hpp"
#include "cli.hpp"

using namespace cartanflow;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& text) {
    static int counter = 0;
    path = "cartanflow_test_" + std::to_string(counter++) + ".json";
    std::ofstream f(path);
    f << text;
  }
  ~TempFile() { std::remove(path.c_str()); }
};

int run_cli(const std::vector<std::string>& args, std::string* out_text = nullptr,
            std::string* err_text = nullptr) {
  std::stringstream out, err;
  int code = cli::run(args, out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return code;
}

}  // namespace

TEST_CASE("path spec JSON round trip") {
  oracles::SplitMix64 rng(19);
  oracles::InstanceGenerator gen{complex_svd(3, 2), 19};
  PathSpec spec = gen.random_trig_path(rng);
  std::string text = io::path_spec_to_json(spec);
  PathSpec back = io::parse_path_spec(text);
  CHECK(back.family == spec.family);
  CHECK(back.kind == spec.kind);
  REQUIRE(back.cos_coeffs.size() == spec.cos_coeffs.size());
  CHECK((back.const_coeff - spec.const_coeff).norm() <= 1e-15);
  for (size_t j = 0; j < spec.cos_coeffs.size(); ++j)
    CHECK((back.cos_coeffs[j] - spec.cos_coeffs[j]).norm() <= 1e-15);
}

TEST_CASE("path spec JSON: malformed inputs raise InputError") {
  CHECK_THROWS_AS(io::parse_path_spec("{oops"), InputError);
  CHECK_THROWS_AS(io::parse_path_spec("{}"), InputError);
  CHECK_THROWS_AS(io::parse_path_spec(R"({"family":"herm-evd:2","kind":"x"})"),
                  InputError);
  CHECK_THROWS_AS(
      io::parse_path_spec(
          R"({"family":"quat-evd:2","kind":"builtin","data":{"name":"rellich"}})"),
      UnsupportedFamily);
  // wrong shape
  CHECK_THROWS_AS(io::parse_path_spec(R"({"family":"herm-evd:2","kind":"trigpoly",
      "data":{"const":[[1,0],[0,-1],[0,0]]}})"),
                  InputError);
}

TEST_CASE("sampled path specs parse and evaluate") {
  std::string text = R"({
    "family": "real-sym-evd:2",
    "kind": "samples",
    "data": {
      "times": [0, 0.5, 1, 1.5],
      "matrices": [
        [[0,0],[0,0]],
        [[0.5,0],[0,-0.5]],
        [[1,0],[0,-1]],
        [[1.5,0],[0,-1.5]]
      ]
    }
  })";
  PathSpec spec = io::parse_path_spec(text);
  CHECK(spec.t_start == 0.0);
  CHECK(spec.t_end == 1.5);
  PathPoint pt = eval_path(spec, 0.75);
  CHECK(std::abs(pt.value.data(0, 0).real() - 0.75) <= 1e-12);
  CHECK(std::abs(pt.derivative->data(0, 0).real() - 1.0) <= 1e-10);
}

TEST_CASE("format_double round-trips") {
  for (double x : {0.0, 1.0, -1.5, 0.1, 3.141592653589793, 1e-300, 2e17}) {
    CHECK(std::stod(io::format_double(x)) == x);
  }
}

TEST_CASE("CSV output is byte-identical across runs") {
  PathSpec spec = builtin_spec("rotation-flow");
  auto grid = make_grid(0, 1, 11);
  std::stringstream a, b;
  io::write_path(a, analytic_flow(spec, grid), io::OutputFormat::Csv);
  io::write_path(b, analytic_flow(spec, grid), io::OutputFormat::Csv);
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("# cartanflow v1", 0) == 0);
}

TEST_CASE("cli: diagonalize produces rows and the version header") {
  TempFile spec(io::path_spec_to_json(builtin_spec("rellich")));
  std::string out;
  int code = run_cli({"diagonalize", spec.path, "--grid", "-1:1:101"}, &out);
  CHECK(code == cli::kOk);
  // 101 data rows + header comment + column header + 2 footer comments
  int lines = 0;
  for (char c : out)
    if (c == '\n') ++lines;
  CHECK(lines == 105);
  CHECK(out.rfind("# cartanflow v1", 0) == 0);

  std::string out2;
  run_cli({"diagonalize", spec.path, "--grid", "-1:1:101"}, &out2);
  CHECK(out == out2);  // deterministic
}

TEST_CASE("cli: exit codes") {
  {
    TempFile bad("{not json");
    std::string err;
    CHECK(run_cli({"diagonalize", bad.path}, nullptr, &err) == cli::kInputError);
    CHECK(!err.empty());
  }
  {
    TempFile spec(io::path_spec_to_json(builtin_spec("rellich")));
    std::string err;
    CHECK(run_cli({"flow", spec.path}, nullptr, &err) == cli::kNearSingular);
    CHECK(err.find("near-singular") != std::string::npos);
  }
  {
    TempFile spec(io::path_spec_to_json(builtin_spec("rotation-flow")));
    CHECK(run_cli({"flow", spec.path, "--grid", "0:6.283:1001"}) == cli::kOk);
  }
  {
    // an asymmetric matrix fails the membership check: exit 4 from `check`
    TempFile spec(R"({
      "family": "real-sym-evd:2",
      "kind": "trigpoly",
      "data": {"const": [[0, 1], [-1, 0]]}
    })");
    std::string out;
    CHECK(run_cli({"check", spec.path, "--grid", "0:1:11"}, &out) ==
          cli::kCheckFailure);
    CHECK(out.find("[FAIL] membership") != std::string::npos);
  }
  CHECK(run_cli({"corpus", "unknown-name"}) == cli::kInputError);
  CHECK(run_cli({"families"}) == cli::kOk);
}

TEST_CASE("cli: check passes on rotation-flow and reports the kink split") {
  {
    TempFile spec(io::path_spec_to_json(builtin_spec("rotation-flow")));
    std::string out;
    int code = run_cli({"check", spec.path, "--grid", "0:1:101"}, &out);
    CHECK(code == cli::kOk);
    CHECK(out.find("[FAIL]") == std::string::npos);
    CHECK(out.find("\"all_pass\": true") != std::string::npos);
  }
  {
    TempFile spec(io::path_spec_to_json(builtin_spec("chamber-cross")));
    std::string out;
    int code = run_cli({"check", spec.path, "--grid", "-1:1:201"}, &out);
    // the flow cannot cross the singular point; the lift diagnostics still run
    CHECK(code == cli::kOk);
    CHECK(out.find("lift-kink") != std::string::npos);
    // sorted-curve derivative jump ~ 2, lifted jump ~ 0
    CHECK(out.find("sorted jump 2") != std::string::npos);
  }
}

TEST_CASE("cli: grid variants and measurable output") {
  TempFile spec(io::path_spec_to_json(builtin_spec("rotation-flow")));
  {
    std::string out;
    CHECK(run_cli({"diagonalize", spec.path, "--times", "0,0.5,1.0"}, &out) ==
          cli::kOk);
    int lines = 0;
    for (char c : out)
      if (c == '\n') ++lines;
    CHECK(lines == 7);  // 2 header + 3 rows + 2 footer
  }
  {
    std::string out;
    CHECK(run_cli({"diagonalize", spec.path, "--grid", "0:1:5",
                   "--measurable"}, &out) == cli::kOk);
    CHECK(out.find("u_0_0") != std::string::npos);  // per-sample U emitted
    CHECK(out.find("mu_1") != std::string::npos);
  }
  std::string err;
  CHECK(run_cli({"diagonalize", spec.path, "--grid", "1:0:5"}, nullptr, &err) ==
        cli::kInputError);
  CHECK(run_cli({"diagonalize", spec.path, "--times", "1,0.5"}, nullptr,
                &err) == cli::kInputError);
  CHECK(run_cli({"diagonalize", spec.path, "--tol", "bogus=1"}, nullptr,
                &err) == cli::kInputError);
}

TEST_CASE("cli: check passes on the regular part of rellich") {
  TempFile spec(io::path_spec_to_json(builtin_spec("rellich")));
  std::string out;
  int code = run_cli({"check", spec.path, "--grid", "0.35:1:51"}, &out);
  CHECK(code == cli::kOk);
  CHECK(out.find("[FAIL]") == std::string::npos);
}

TEST_CASE("sampled paths feed the lift and flow") {
  // rotation-flow resampled at 101 points; the interpolant drives both sweeps
  PathSpec dense = builtin_spec("rotation-flow");
  PathSpec spec;
  spec.family = dense.family;
  spec.kind = PathSpec::Kind::Samples;
  spec.t_start = 0.0;
  spec.t_end = 1.0;
  for (int i = 0; i <= 100; ++i) {
    double t = i / 100.0;
    spec.times.push_back(t);
    spec.samples.push_back(eval_path(dense, t).value.data);
  }
  auto grid = make_grid(0.05, 0.95, 91);
  DiagonalizedPath lift = c1_lift(spec, grid);
  for (int i = 0; i < 91; ++i) {
    CHECK(std::abs(lift.lambda_lift[i][0] - 2.0) <= 1e-5);
    CHECK(std::abs(lift.lambda_lift[i][1] + 2.0) <= 1e-5);
  }
  DiagonalizedPath flow = analytic_flow(spec, grid);
  double worst = 0;
  for (double r : flow.residual_offdiag) worst = std::max(worst, r);
  CHECK(worst <= 1e-5);  // limited by the cubic interpolant, not the ODE step
}

TEST_CASE("cli: corpus and flow file output") {
  std::string out;
  CHECK(run_cli({"corpus"}, &out) == cli::kOk);
  CHECK(out.find("rellich") != std::string::npos);

  TempFile spec(io::path_spec_to_json(builtin_spec("rotation-flow")));
  std::string ignored;
  int code = run_cli({"flow", spec.path, "--grid", "0:1:11", "--format",
                      "json", "--out", "cartanflow_test_out.json"},
                     &ignored);
  CHECK(code == cli::kOk);
  std::ifstream f("cartanflow_test_out.json");
  REQUIRE(f.good());
  std::stringstream buf;
  buf << f.rdbuf();
  CHECK(buf.str().find("\"cartanflow v1\"") != std::string::npos);
  CHECK(buf.str().find("max_residual_offdiag") != std::string::npos);
  std::remove("cartanflow_test_out.json");
}
