#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qavg/engine.hpp"
#include "qavg/errors.hpp"
#include "qavg/experiments.hpp"
#include "qavg/io.hpp"
#include "qavg/theory.hpp"
#include "qavg/version.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitMismatch = 1;
constexpr int kExitBreakdown = 2;
constexpr int kExitUsage = 3;
constexpr int kExitCapacity = 4;

// Output sink: --out path or stdout.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary);
      if (!file_) throw std::runtime_error("cannot open output file: " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }
  bool is_file() const { return file_.is_open(); }

 private:
  std::ofstream file_;
};

std::vector<qavg::MeanKind> parse_mean_list(const std::string& csv) {
  std::vector<qavg::MeanKind> kinds;
  std::stringstream ss(csv);
  std::string token;
  while (std::getline(ss, token, ',')) {
    if (token.empty()) continue;
    kinds.push_back(qavg::MeanKind::parse(token));
  }
  if (kinds.empty()) throw std::invalid_argument("--p needs at least one mean kind");
  return kinds;
}

json phase_point_json(const qavg::PhasePoint& pt) {
  json j{{"alpha", pt.alpha.str()},
         {"m", pt.m},
         {"mean", pt.mean.name()},
         {"n", pt.n_terms},
         {"phase", qavg::phase_name(pt.phase)}};
  if (pt.final_ratio_sqrt) j["final_ratio_sqrt"] = *pt.final_ratio_sqrt;
  if (pt.final_ratio_linear) j["final_ratio_linear"] = *pt.final_ratio_linear;
  if (pt.slope) {
    j["lsq_slope"] = pt.slope->lsq_slope;
    j["tail_mean_ratio"] = pt.slope->tail_mean_ratio;
  }
  if (pt.breakdown)
    j["breakdown"] = json{{"step", pt.breakdown->step},
                          {"branch", pt.breakdown->branch},
                          {"argument", pt.breakdown->argument}};
  return j;
}

struct GenerateArgs {
  std::uint32_t m = 1;
  std::string alpha;
  std::string mean = "arith";
  std::uint64_t n = 0;
  std::string out;
  std::string format = "csv";
};

int run_generate(const GenerateArgs& args, std::uint64_t max_terms) {
  qavg::RecursionParams params{args.m, qavg::Rational::parse(args.alpha),
                               qavg::MeanKind::parse(args.mean)};
  qavg::SequenceRun run = qavg::run(params, args.n, max_terms);

  if (args.format == "raw64") {
    if (args.out.empty()) throw std::invalid_argument("--format raw64 requires --out");
    qavg::write_raw64(args.out, params.m, run.values);
  } else {
    Sink sink(args.out);
    if (args.format == "json")
      qavg::write_sequence_json(sink.stream(), run);
    else
      qavg::write_sequence_csv(sink.stream(), run);
  }
  if (!args.out.empty()) {
    qavg::write_manifest(args.out + ".manifest.json",
                         qavg::make_manifest(run, max_terms, qavg::Thresholds{}));
  }
  if (!run.complete()) {
    std::cerr << qavg::breakdown_json(*run.breakdown, run.size()) << '\n';
    return kExitBreakdown;
  }
  return kExitOk;
}

struct VerifyArgs {
  std::uint32_t m = 0;
  std::uint64_t n = 0;
  std::string in;
};

int run_verify_blocks(const VerifyArgs& args, std::uint64_t max_terms) {
  std::vector<std::uint64_t> values;
  std::uint32_t m = args.m;
  if (!args.in.empty()) {
    qavg::Raw64File file = qavg::read_raw64(args.in);
    if (args.m != 0 && args.m != file.m)
      throw std::invalid_argument("--m disagrees with the raw64 header");
    m = file.m;
    values = std::move(file.values);
  } else {
    if (args.m == 0 || args.n == 0)
      throw std::invalid_argument("verify-blocks needs --m and --n, or --in");
    qavg::RecursionParams params{m, qavg::Rational(1), qavg::MeanKind::arithmetic()};
    values = qavg::run(params, args.n, max_terms).values;
  }
  for (std::uint64_t n = 1; n <= values.size(); ++n) {
    std::uint64_t expected = qavg::predict_critical(n, m);
    if (values[n - 1] != expected) {
      std::cout << "mismatch at n=" << n << ": value=" << values[n - 1]
                << " predicted=" << expected << '\n';
      return kExitMismatch;
    }
  }
  std::cout << "verified " << values.size() << " terms\n";
  return kExitOk;
}

struct ScanArgs {
  std::uint32_t m = 1;
  std::string alpha_lo, alpha_hi;
  std::uint32_t grid = 2;
  std::uint64_t n = 0;
  std::string out;
  std::string format = "csv";
  qavg::Thresholds thresholds;
};

int run_scan(const ScanArgs& args, std::uint64_t max_terms) {
  if (args.n > max_terms)
    throw qavg::CapacityError("requested " + std::to_string(args.n) +
                              " terms exceeds the budget of " + std::to_string(max_terms));
  auto rows = qavg::phase_scan(args.m, qavg::Rational::parse(args.alpha_lo),
                               qavg::Rational::parse(args.alpha_hi), args.grid, args.n,
                               args.thresholds);
  Sink sink(args.out);
  if (args.format == "json") {
    json arr = json::array();
    for (const auto& row : rows) {
      json j{{"alpha", row.alpha.str()}};
      if (row.point) j.update(phase_point_json(*row.point));
      if (!row.error.empty()) j["error"] = row.error;
      arr.push_back(j);
    }
    sink.stream() << arr.dump(2) << '\n';
  } else {
    sink.stream() << qavg::kScanCsvHeader << '\n' << std::flush;
    for (const auto& row : rows) {
      qavg::write_scan_row(sink.stream(), row);
      sink.stream() << std::flush;
    }
  }
  return kExitOk;
}

struct SlopeArgs {
  std::uint32_t m = 1;
  std::string alpha;
  std::uint64_t n = 0;
  double window = 0.5;
  std::string out;
  std::string format = "csv";
};

int run_slope(const SlopeArgs& args, std::uint64_t max_terms) {
  qavg::Rational alpha = qavg::Rational::parse(args.alpha);
  qavg::RecursionParams params{args.m, alpha, qavg::MeanKind::arithmetic()};
  qavg::SequenceRun run = qavg::run(params, args.n, max_terms);
  if (!run.complete()) {
    std::cerr << qavg::breakdown_json(*run.breakdown, run.size()) << '\n';
    return kExitBreakdown;
  }
  qavg::SlopeEstimate est = qavg::estimate_slope(run, args.window);
  double predicted = qavg::predicted_slope(alpha).to_double();
  Sink sink(args.out);
  if (args.format == "json") {
    json j{{"alpha", alpha.str()},       {"m", args.m},
           {"n", args.n},                {"window_start", est.window_start},
           {"window_end", est.window_end}, {"lsq_slope", est.lsq_slope},
           {"lsq_intercept", est.lsq_intercept}, {"tail_mean_ratio", est.tail_mean_ratio},
           {"max_abs_residual_ratio", est.max_abs_residual_ratio}, {"predicted_slope", predicted}};
    sink.stream() << j.dump(2) << '\n';
  } else {
    sink.stream() << qavg::kSlopeCsvHeader << '\n';
    qavg::write_slope_row(sink.stream(), alpha, args.m, args.n, est, predicted);
  }
  return kExitOk;
}

struct UniversalityArgs {
  std::uint32_t m = 1;
  std::string p_list = "-1,0,1,2,4,8,max";
  std::uint64_t n = 0;
  std::string out;
  std::string format = "csv";
  std::string curve_dir;
  qavg::Thresholds thresholds;
};

int run_universality(const UniversalityArgs& args, std::uint64_t max_terms) {
  if (args.n > max_terms)
    throw qavg::CapacityError("requested " + std::to_string(args.n) +
                              " terms exceeds the budget of " + std::to_string(max_terms));
  std::vector<qavg::MeanKind> kinds = parse_mean_list(args.p_list);
  auto rows = qavg::universality_suite(args.m, kinds, args.n, args.thresholds);

  if (!args.curve_dir.empty()) {
    std::filesystem::create_directories(args.curve_dir);
    for (const auto& row : rows) {
      if (row.curve.empty()) continue;
      std::filesystem::path path = std::filesystem::path(args.curve_dir) /
                                   ("universality_m" + std::to_string(args.m) + "_p" +
                                    row.mean.p_label() + ".csv");
      std::ofstream curve_out(path);
      if (!curve_out) throw std::runtime_error("cannot open curve file: " + path.string());
      qavg::write_curve_csv(curve_out, row.curve);
    }
  }

  Sink sink(args.out);
  if (args.format == "json") {
    json arr = json::array();
    for (const auto& row : rows) {
      json j{{"p", row.mean.p_label()}, {"mean", row.mean.name()}};
      if (row.point) j.update(phase_point_json(*row.point));
      if (!row.error.empty()) j["error"] = row.error;
      arr.push_back(j);
    }
    sink.stream() << arr.dump(2) << '\n';
  } else {
    sink.stream() << qavg::kUniversalityCsvHeader << '\n' << std::flush;
    for (const auto& row : rows) {
      qavg::write_universality_row(sink.stream(), args.m, args.n, row);
      sink.stream() << std::flush;
    }
  }
  return kExitOk;
}

struct BreakdownArgs {
  std::uint32_t m = 1;
  std::string alpha;
  std::string alpha_lo, alpha_hi;
  std::uint32_t grid = 0;
  std::uint64_t n = 0;
  std::string out;
  std::string format = "csv";
};

int run_breakdown(const BreakdownArgs& args, std::uint64_t max_terms) {
  if (args.n > max_terms)
    throw qavg::CapacityError("requested " + std::to_string(args.n) +
                              " terms exceeds the budget of " + std::to_string(max_terms));
  if (!args.alpha.empty()) {
    qavg::RecursionParams params{args.m, qavg::Rational::parse(args.alpha),
                                 qavg::MeanKind::arithmetic()};
    qavg::BreakdownReport report = qavg::detect_breakdown(params, args.n);
    Sink sink(args.out);
    if (args.format == "json") {
      json j{{"alpha", params.alpha.str()},
             {"m", args.m},
             {"n", args.n},
             {"outcome", report.survived() ? "survived" : "broken"}};
      if (report.breakdown)
        j["breakdown"] = json{{"step", report.breakdown->step},
                              {"branch", report.breakdown->branch},
                              {"argument", report.breakdown->argument}};
      sink.stream() << j.dump(2) << '\n';
    } else {
      sink.stream() << qavg::kBreakdownCsvHeader << '\n';
      qavg::write_breakdown_row(sink.stream(), report);
    }
    return report.survived() ? kExitOk : kExitBreakdown;
  }

  if (args.alpha_lo.empty() || args.alpha_hi.empty() || args.grid == 0)
    throw std::invalid_argument("breakdown needs --alpha, or --alpha-lo/--alpha-hi/--grid");
  qavg::AlphaStarScan scan =
      qavg::scan_alpha_star(args.m, qavg::Rational::parse(args.alpha_lo),
                            qavg::Rational::parse(args.alpha_hi), args.grid, args.n);
  Sink sink(args.out);
  sink.stream() << qavg::kBreakdownCsvHeader << '\n' << std::flush;
  for (const auto& report : scan.reports) {
    qavg::write_breakdown_row(sink.stream(), report);
    sink.stream() << std::flush;
  }
  // Empirical bracket at this horizon, never an extrapolated limit.
  json bracket{{"m", scan.m}, {"horizon", scan.horizon}};
  bracket["largest_surviving_alpha"] =
      scan.largest_surviving ? json(scan.largest_surviving->str()) : json();
  bracket["smallest_breaking_alpha"] =
      scan.smallest_breaking ? json(scan.smallest_breaking->str()) : json();
  if (scan.monotonicity_violation)
    bracket["monotonicity_violation"] = json{{"breaking", scan.monotonicity_violation->first.str()},
                                             {"surviving", scan.monotonicity_violation->second.str()}};
  (sink.is_file() ? std::cout : std::cerr) << bracket.dump() << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"averaged meta-Fibonacci sequence toolkit"};
  app.set_version_flag("--version", qavg::kToolVersion);
  app.require_subcommand(1);

  std::uint64_t max_terms = qavg::kDefaultMaxTerms;
  app.add_option("--max-terms", max_terms, "history budget in terms")
      ->envname("QAVG_MAX_TERMS");

  GenerateArgs gen;
  auto* gen_cmd = app.add_subcommand("generate", "compute a sequence; write values and manifest");
  gen_cmd->add_option("--m", gen.m, "averaging length")->required();
  gen_cmd->add_option("--alpha", gen.alpha, "scale factor: a/b or decimal")->required();
  gen_cmd->add_option("--mean", gen.mean, "arith|p:<int>|geo|harm|max");
  gen_cmd->add_option("--n", gen.n, "number of terms")->required();
  gen_cmd->add_option("--out", gen.out, "output path (stdout if omitted)");
  gen_cmd->add_option("--format", gen.format, "csv|json|raw64")
      ->check(CLI::IsMember({"csv", "json", "raw64"}));

  VerifyArgs verify;
  auto* verify_cmd =
      app.add_subcommand("verify-blocks", "check a critical run against the block predictor");
  verify_cmd->add_option("--m", verify.m, "averaging length");
  verify_cmd->add_option("--n", verify.n, "number of terms");
  verify_cmd->add_option("--in", verify.in, "raw64 file to verify instead of a fresh run");

  ScanArgs scan;
  auto* scan_cmd = app.add_subcommand("scan", "phase classification over an alpha grid");
  scan_cmd->add_option("--m", scan.m, "averaging length")->required();
  scan_cmd->add_option("--alpha-lo", scan.alpha_lo, "grid start")->required();
  scan_cmd->add_option("--alpha-hi", scan.alpha_hi, "grid end")->required();
  scan_cmd->add_option("--grid", scan.grid, "number of grid points")->required();
  scan_cmd->add_option("--n", scan.n, "terms per point")->required();
  scan_cmd->add_option("--out", scan.out, "output path (stdout if omitted)");
  scan_cmd->add_option("--format", scan.format, "csv|json")
      ->check(CLI::IsMember({"csv", "json"}));
  scan_cmd->add_option("--tau-sqrt", scan.thresholds.tau_sqrt, "critical-phase tolerance");
  scan_cmd->add_option("--tau-lin", scan.thresholds.tau_lin, "linear-phase slope tolerance");
  scan_cmd->add_option("--window", scan.thresholds.window_fraction, "tail window fraction");

  SlopeArgs slope;
  auto* slope_cmd = app.add_subcommand("slope", "tail slope statistics of one run");
  slope_cmd->add_option("--m", slope.m, "averaging length")->required();
  slope_cmd->add_option("--alpha", slope.alpha, "scale factor")->required();
  slope_cmd->add_option("--n", slope.n, "number of terms")->required();
  slope_cmd->add_option("--window", slope.window, "tail window fraction");
  slope_cmd->add_option("--out", slope.out, "output path (stdout if omitted)");
  slope_cmd->add_option("--format", slope.format, "csv|json")
      ->check(CLI::IsMember({"csv", "json"}));

  UniversalityArgs uni;
  auto* uni_cmd = app.add_subcommand("universality", "mean-kind sweep at alpha = 1");
  uni_cmd->add_option("--m", uni.m, "averaging length")->required();
  uni_cmd->add_option("--p", uni.p_list, "comma list of exponents, e.g. -1,0,1,2,4,8,max");
  uni_cmd->add_option("--n", uni.n, "terms per mean kind")->required();
  uni_cmd->add_option("--out", uni.out, "output path (stdout if omitted)");
  uni_cmd->add_option("--format", uni.format, "csv|json")
      ->check(CLI::IsMember({"csv", "json"}));
  uni_cmd->add_option("--curve-dir", uni.curve_dir, "directory for per-p curve CSV files");
  uni_cmd->add_option("--tau-sqrt", uni.thresholds.tau_sqrt, "critical-phase tolerance");
  uni_cmd->add_option("--window", uni.thresholds.window_fraction, "tail window fraction");

  BreakdownArgs bd;
  auto* bd_cmd = app.add_subcommand("breakdown", "survival probe for one alpha or a grid");
  bd_cmd->add_option("--m", bd.m, "averaging length")->required();
  bd_cmd->add_option("--alpha", bd.alpha, "single probe point");
  bd_cmd->add_option("--alpha-lo", bd.alpha_lo, "grid start");
  bd_cmd->add_option("--alpha-hi", bd.alpha_hi, "grid end");
  bd_cmd->add_option("--grid", bd.grid, "number of grid points");
  bd_cmd->add_option("--n", bd.n, "horizon")->required();
  bd_cmd->add_option("--out", bd.out, "output path (stdout if omitted)");
  bd_cmd->add_option("--format", bd.format, "csv|json")
      ->check(CLI::IsMember({"csv", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (gen_cmd->parsed()) return run_generate(gen, max_terms);
    if (verify_cmd->parsed()) return run_verify_blocks(verify, max_terms);
    if (scan_cmd->parsed()) return run_scan(scan, max_terms);
    if (slope_cmd->parsed()) return run_slope(slope, max_terms);
    if (uni_cmd->parsed()) return run_universality(uni, max_terms);
    if (bd_cmd->parsed()) return run_breakdown(bd, max_terms);
  } catch (const qavg::CapacityError& e) {
    std::cerr << json{{"error", "capacity"}, {"detail", e.what()}}.dump() << '\n';
    return kExitCapacity;
  } catch (const std::invalid_argument& e) {
    std::cerr << json{{"error", "usage"}, {"detail", e.what()}}.dump() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "internal"}, {"detail", e.what()}}.dump() << '\n';
    return 1;
  }
  return kExitUsage;
}
