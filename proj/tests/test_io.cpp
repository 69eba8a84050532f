#include <doctest.h>

#include <json.hpp>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "qavg/io.hpp"
#include "qavg/version.hpp"

using namespace qavg;

namespace {

std::filesystem::path temp_file(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("io: raw64 round trip") {
  std::mt19937_64 rng(3);
  std::vector<std::uint64_t> values(1000);
  for (auto& v : values) v = rng();
  auto path = temp_file("qavg_test_roundtrip.raw64");
  write_raw64(path, 7, values);
  Raw64File file = read_raw64(path);
  CHECK(file.m == 7);
  CHECK(file.values == values);
  std::filesystem::remove(path);
}

TEST_CASE("io: raw64 header bytes are pinned") {
  auto path = temp_file("qavg_test_header.raw64");
  std::vector<std::uint64_t> values = {2};
  write_raw64(path, 3, values);
  std::string bytes = slurp(path);
  REQUIRE(bytes.size() == 24);
  const unsigned char expected[16] = {'Q', 'A', 'V', 'S', 1, 0, 3, 0, 1, 0, 0, 0, 0, 0, 0, 0};
  CHECK(std::memcmp(bytes.data(), expected, 16) == 0);
  CHECK(static_cast<unsigned char>(bytes[16]) == 2);  // first value, little-endian
  std::filesystem::remove(path);
}

TEST_CASE("io: raw64 rejects foreign and truncated files") {
  auto path = temp_file("qavg_test_bad.raw64");
  {
    std::ofstream out(path, std::ios::binary);
    out << "not a sequence file at all";
  }
  CHECK_THROWS_WITH_AS(read_raw64(path), doctest::Contains("not a raw64"), std::runtime_error);
  {
    std::ofstream out(path, std::ios::binary);
    out << "QAVS";
  }
  CHECK_THROWS_WITH_AS(read_raw64(path), doctest::Contains("truncated"), std::runtime_error);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_raw64(path), std::runtime_error);
}

TEST_CASE("io: manifest json round trip") {
  RecursionParams params{3, Rational::parse("1.05"), MeanKind::power(2)};
  SequenceRun r = run(params, 100);
  RunManifest mf = make_manifest(r, 500'000, Thresholds{});
  CHECK(mf.alpha == "21/20");  // decimal input echoed in exact form
  CHECK(mf.mean == "p:2");
  CHECK(mf.status == "complete");
  CHECK(mf.tool_version == kToolVersion);

  RunManifest back = manifest_from_json(manifest_to_json(mf));
  CHECK(back.alpha == mf.alpha);
  CHECK(back.mean == mf.mean);
  CHECK(back.m == mf.m);
  CHECK(back.n_requested == mf.n_requested);
  CHECK(back.max_terms == mf.max_terms);
  CHECK(back.thresholds.tau_sqrt == mf.thresholds.tau_sqrt);
  CHECK(back.timestamp == mf.timestamp);
}

TEST_CASE("io: manifest records breakdowns") {
  SequenceRun r = run({1, Rational::parse("3/2"), MeanKind::arithmetic()}, 100);
  RunManifest mf = make_manifest(r, kDefaultMaxTerms, Thresholds{});
  CHECK(mf.status == "broken");
  REQUIRE(mf.breakdown.has_value());
  CHECK(mf.breakdown->step == 7);
  RunManifest back = manifest_from_json(manifest_to_json(mf));
  CHECK(*back.breakdown == *mf.breakdown);
}

TEST_CASE("io: manifest replay reproduces the run byte for byte") {
  RecursionParams params{4, Rational::parse("5/4"), MeanKind::arithmetic()};
  SequenceRun original = run(params, 20'000);
  RunManifest mf = make_manifest(original, kDefaultMaxTerms, Thresholds{});

  auto path = temp_file("qavg_test_manifest.json");
  write_manifest(path, mf);
  SequenceRun replayed = replay(load_manifest(path));
  REQUIRE(replayed.values.size() == original.values.size());
  CHECK(std::memcmp(replayed.values.data(), original.values.data(),
                    original.values.size() * sizeof(std::uint64_t)) == 0);
  std::filesystem::remove(path);
}

TEST_CASE("io: sequence csv golden") {
  SequenceRun r = run({1, Rational(1), MeanKind::arithmetic()}, 5);
  std::ostringstream out;
  write_sequence_csv(out, r);
  CHECK(out.str() == "n,value\n1,1\n2,2\n3,2\n4,3\n5,3\n");
}

TEST_CASE("io: sequence json carries params, status, and values") {
  SequenceRun r = run({2, Rational::parse("1/2"), MeanKind::arithmetic()}, 4);
  std::ostringstream out;
  write_sequence_json(out, r);
  auto j = nlohmann::json::parse(out.str());
  CHECK(j["m"] == 2);
  CHECK(j["alpha"] == "1/2");
  CHECK(j["mean"] == "arith");
  CHECK(j["status"] == "complete");
  CHECK(j["values"] == nlohmann::json::array({1, 1, 1, 1}));
}

TEST_CASE("io: breakdown json shape") {
  auto j = nlohmann::json::parse(breakdown_json(Breakdown{7, 1, 0}, 6));
  CHECK(j["error"] == "breakdown");
  CHECK(j["step"] == 7);
  CHECK(j["branch"] == 1);
  CHECK(j["argument"] == 0);
  CHECK(j["computed_terms"] == 6);
}

TEST_CASE("io: csv schemas are stable") {
  CHECK(std::string(kCurveCsvHeader) == "n,q,ratio_sqrt");
  CHECK(std::string(kSlopeCsvHeader) ==
        "alpha,m,n,window_start,window_end,lsq_slope,lsq_intercept,tail_mean_ratio,"
        "max_abs_residual_ratio,predicted_slope");
  CHECK(std::string(kScanCsvHeader) ==
        "alpha,m,n,phase,final_ratio_sqrt,final_ratio_linear,lsq_slope,predicted_slope,"
        "breakdown_step,breakdown_branch,breakdown_argument,error");
  CHECK(std::string(kUniversalityCsvHeader) ==
        "p,mean,m,n,phase,final_ratio_sqrt,breakdown_step,error");
  CHECK(std::string(kBreakdownCsvHeader) == "alpha,m,n,outcome,step,branch,argument");
}

TEST_CASE("io: scan rows keep the column count with and without data") {
  PhaseScanResult errored;
  errored.alpha = Rational::parse("1/2");
  errored.error = "bad, thing";
  std::ostringstream out;
  write_scan_row(out, errored);
  std::string line = out.str();
  CHECK(std::count(line.begin(), line.end(), ',') >= 11);
  CHECK(line.find("\"bad, thing\"") != std::string::npos);

  PhaseScanResult good;
  good.alpha = Rational(1);
  good.point = classify_phase({2, Rational(1), MeanKind::arithmetic()}, 2'000);
  std::ostringstream out2;
  write_scan_row(out2, good);
  std::string line2 = out2.str();
  // outside quotes, both rows carry the same 11 separators
  CHECK(std::count(line2.begin(), line2.end(), ',') == 11);
  CHECK(line2.find("critical_sqrt") != std::string::npos);
}

TEST_CASE("io: curve csv matches its header") {
  std::vector<CurvePoint> curve = {{1, 1, 0.7071}, {2, 1, 0.5}};
  std::ostringstream out;
  write_curve_csv(out, curve);
  CHECK(out.str().rfind("n,q,ratio_sqrt\n1,1,0.7071\n2,1,0.5\n", 0) == 0);
}
