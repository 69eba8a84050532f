#include <doctest.h>

#include <json.hpp>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fs::path scratch_dir() {
  fs::path dir = fs::temp_directory_path() / "qavg_cli_tests";
  fs::create_directories(dir);
  return dir;
}

CliResult run_cli(const std::string& args, const std::string& env_prefix = "") {
  static int counter = 0;
  fs::path out_path = scratch_dir() / ("stdout_" + std::to_string(counter) + ".txt");
  fs::path err_path = scratch_dir() / ("stderr_" + std::to_string(counter) + ".txt");
  ++counter;

  std::string cmd = env_prefix + QAVG_CLI_PATH " " + args + " >" + out_path.string() + " 2>" +
                    err_path.string();
  int status = std::system(cmd.c_str());
  CliResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.out = slurp(out_path);
  result.err = slurp(err_path);
  fs::remove(out_path);
  fs::remove(err_path);
  return result;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line))
    if (!line.empty()) lines.push_back(line);
  return lines;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  return fields;
}

}  // namespace

TEST_CASE("cli: generate prints the known m=1 opening") {
  auto res = run_cli("generate --m 1 --alpha 1 --n 15 --format csv");
  CHECK(res.exit_code == 0);
  auto lines = lines_of(res.out);
  REQUIRE(lines.size() == 16);
  CHECK(lines[0] == "n,value");
  const std::uint64_t golden[] = {1, 2, 2, 3, 3, 3, 4, 4, 4, 4, 5, 5, 5, 5, 5};
  for (int n = 1; n <= 15; ++n)
    CHECK(lines[n] == std::to_string(n) + "," + std::to_string(golden[n - 1]));
}

TEST_CASE("cli: decimal alpha freezes the sequence and echoes exactly") {
  fs::path out = scratch_dir() / "halves.csv";
  auto res = run_cli("generate --m 2 --alpha 0.5 --n 100 --out " + out.string());
  CHECK(res.exit_code == 0);
  auto lines = lines_of(slurp(out));
  REQUIRE(lines.size() == 101);
  for (std::size_t i = 1; i < lines.size(); ++i)
    CHECK(lines[i] == std::to_string(i) + ",1");

  json manifest = json::parse(slurp(out.string() + ".manifest.json"));
  CHECK(manifest["params"]["alpha"] == "1/2");
  CHECK(manifest["params"]["mean"] == "arith");
  CHECK(manifest["status"] == "complete");
  fs::remove(out);
  fs::remove(out.string() + ".manifest.json");
}

TEST_CASE("cli: breakdown exits 2 with structured details on stderr") {
  fs::path out = scratch_dir() / "broken.csv";
  auto res = run_cli("generate --m 1 --alpha 1.5 --n 100000 --out " + out.string());
  CHECK(res.exit_code == 2);
  json details = json::parse(res.err);
  CHECK(details["error"] == "breakdown");
  CHECK(details["step"] == 7);
  CHECK(details["branch"] == 1);
  CHECK(details["argument"] == 0);
  CHECK(details["computed_terms"] == 6);
  // partial values were still written
  CHECK(lines_of(slurp(out)).size() == 7);
  json manifest = json::parse(slurp(out.string() + ".manifest.json"));
  CHECK(manifest["status"] == "broken");
  fs::remove(out);
  fs::remove(out.string() + ".manifest.json");
}

TEST_CASE("cli: usage errors exit 3") {
  CHECK(run_cli("generate --m 1 --n 5").exit_code == 3);              // missing alpha
  CHECK(run_cli("generate --m 1 --alpha 2/0 --n 5").exit_code == 3);  // zero denominator
  CHECK(run_cli("generate --m 1 --alpha x --n 5").exit_code == 3);
  CHECK(run_cli("generate --m 1 --alpha 1 --n 5 --mean median").exit_code == 3);
  CHECK(run_cli("generate --m 1 --alpha 1 --n 5 --format xml").exit_code == 3);
  CHECK(run_cli("nonsense").exit_code == 3);
  CHECK(run_cli("generate --m 0 --alpha 1 --n 5").exit_code == 3);
  CHECK(run_cli("generate --m 1 --alpha 1 --n 5 --format raw64").exit_code == 3);  // no --out
}

TEST_CASE("cli: capacity errors exit 4, via flag and via environment") {
  auto res = run_cli("--max-terms 10 generate --m 1 --alpha 1 --n 100");
  CHECK(res.exit_code == 4);
  CHECK(json::parse(res.err)["error"] == "capacity");
  CHECK(json::parse(res.err)["detail"].get<std::string>().find("10") != std::string::npos);

  auto env_res = run_cli("generate --m 1 --alpha 1 --n 100", "QAVG_MAX_TERMS=10 ");
  CHECK(env_res.exit_code == 4);
}

TEST_CASE("cli: verify-blocks on a fresh run") {
  auto res = run_cli("verify-blocks --m 3 --n 50000");
  CHECK(res.exit_code == 0);
  CHECK(res.out == "verified 50000 terms\n");
  CHECK(run_cli("verify-blocks --m 1 --n 15").exit_code == 0);
}

TEST_CASE("cli: verify-blocks flags a corrupted replay") {
  fs::path raw = scratch_dir() / "blocks.raw64";
  REQUIRE(run_cli("generate --m 3 --alpha 1 --n 50 --format raw64 --out " + raw.string())
              .exit_code == 0);
  CHECK(run_cli("verify-blocks --in " + raw.string()).exit_code == 0);

  // negate one stored value (set the sign bit region to all-ones)
  {
    std::fstream f(raw, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(16 + 19 * 8);
    const char junk[8] = {~0, ~0, ~0, ~0, ~0, ~0, ~0, ~0};
    f.write(junk, 8);
  }
  auto res = run_cli("verify-blocks --in " + raw.string());
  CHECK(res.exit_code == 1);
  CHECK(res.out.find("mismatch at n=20") != std::string::npos);

  // --m disagreeing with the header is a usage error
  CHECK(run_cli("verify-blocks --m 5 --in " + raw.string()).exit_code == 3);
  fs::remove(raw);
  fs::remove(raw.string() + ".manifest.json");
}

TEST_CASE("cli: slope lands on the predicted value") {
  auto res = run_cli("slope --m 3 --alpha 1.25 --n 200000");
  CHECK(res.exit_code == 0);
  auto lines = lines_of(res.out);
  REQUIRE(lines.size() == 2);
  auto fields = split_csv(lines[1]);
  REQUIRE(fields.size() == 10);
  CHECK(fields[0] == "5/4");
  double slope = std::stod(fields[5]);
  CHECK(slope == doctest::Approx(0.2).epsilon(0.01));
  CHECK(std::stod(fields[9]) == doctest::Approx(0.2));

  // a run that breaks cannot be fitted
  CHECK(run_cli("slope --m 1 --alpha 2 --n 1000").exit_code == 2);
}

TEST_CASE("cli: scan classifies the phase grid") {
  auto res = run_cli("scan --m 3 --alpha-lo 0.5 --alpha-hi 1.5 --grid 5 --n 20000");
  CHECK(res.exit_code == 0);
  auto lines = lines_of(res.out);
  REQUIRE(lines.size() == 6);
  const char* expected[] = {"frozen", "frozen", "critical_sqrt", "linear", "linear"};
  for (int i = 0; i < 5; ++i) {
    auto fields = split_csv(lines[i + 1]);
    CHECK(fields[3] == expected[i]);
  }

  auto js = run_cli("scan --m 3 --alpha-lo 0.5 --alpha-hi 1.5 --grid 5 --n 5000 --format json");
  CHECK(js.exit_code == 0);
  CHECK(json::parse(js.out).size() == 5);
}

TEST_CASE("cli: universality sweep with curve files") {
  fs::path dir = scratch_dir() / "curves";
  auto res = run_cli("universality --m 3 --p -1,0,1,2,max --n 5000 --curve-dir " + dir.string());
  CHECK(res.exit_code == 0);
  auto lines = lines_of(res.out);
  REQUIRE(lines.size() == 6);
  CHECK(split_csv(lines[1])[0] == "-1");
  CHECK(split_csv(lines[5])[0] == "inf");
  for (const char* label : {"-1", "0", "1", "2", "inf"}) {
    fs::path curve = dir / (std::string("universality_m3_p") + label + ".csv");
    REQUIRE(fs::exists(curve));
    CHECK(lines_of(slurp(curve))[0] == "n,q,ratio_sqrt");
  }
  fs::remove_all(dir);
}

TEST_CASE("cli: breakdown probe and grid scan") {
  auto res = run_cli("breakdown --m 1 --alpha 1.5 --n 1000");
  CHECK(res.exit_code == 2);
  auto lines = lines_of(res.out);
  REQUIRE(lines.size() == 2);
  CHECK(lines[1] == "3/2,1,1000,broken,7,1,0");

  CHECK(run_cli("breakdown --m 3 --alpha 1 --n 10000").exit_code == 0);

  fs::path out = scratch_dir() / "bd.csv";
  auto grid = run_cli("breakdown --m 3 --alpha-lo 1 --alpha-hi 1.5 --grid 3 --n 10000 --out " +
                      out.string());
  CHECK(grid.exit_code == 0);
  CHECK(lines_of(slurp(out)).size() == 4);
  json bracket = json::parse(grid.out);
  CHECK(bracket["largest_surviving_alpha"] == "3/2");
  CHECK(bracket["smallest_breaking_alpha"].is_null());
  fs::remove(out);
}

TEST_CASE("cli: repeated generate runs are byte-identical") {
  fs::path a = scratch_dir() / "rep_a.raw64";
  fs::path b = scratch_dir() / "rep_b.raw64";
  std::string args = "generate --m 4 --alpha 1.25 --n 30000 --format raw64 --out ";
  REQUIRE(run_cli(args + a.string()).exit_code == 0);
  REQUIRE(run_cli(args + b.string()).exit_code == 0);
  CHECK(slurp(a) == slurp(b));
  json ma = json::parse(slurp(a.string() + ".manifest.json"));
  json mb = json::parse(slurp(b.string() + ".manifest.json"));
  CHECK(ma["params"] == mb["params"]);
  CHECK(ma["n_requested"] == mb["n_requested"]);
  for (auto p : {a, b}) {
    fs::remove(p);
    fs::remove(p.string() + ".manifest.json");
  }
}
