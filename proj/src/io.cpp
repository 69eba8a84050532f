#include "qavg/io.hpp"

#include <json.hpp>

#include <cstdio>
#include <cstring>
#include <ctime>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "qavg/errors.hpp"
#include "qavg/version.hpp"

namespace qavg {

namespace {

using nlohmann::json;

constexpr char kRawMagic[4] = {'Q', 'A', 'V', 'S'};
constexpr std::uint16_t kRawVersion = 1;

void put_u16_le(std::string& buf, std::uint16_t v) {
  buf.push_back(static_cast<char>(v & 0xff));
  buf.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u64_le(std::string& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint16_t get_u16_le(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint64_t get_u64_le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string quoted = "\"";
  for (char c : field) {
    if (c == '"') quoted += "\"\"";
    else quoted += c;
  }
  quoted += '"';
  return quoted;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string opt_double(const std::optional<double>& v) {
  return v.has_value() ? fmt_double(*v) : std::string();
}

json breakdown_to_json(const Breakdown& b) {
  return json{{"step", b.step}, {"branch", b.branch}, {"argument", b.argument}};
}

Breakdown breakdown_from_json(const json& j) {
  Breakdown b;
  b.step = j.at("step").get<std::uint64_t>();
  b.branch = j.at("branch").get<std::uint32_t>();
  b.argument = j.at("argument").get<std::int64_t>();
  return b;
}

}  // namespace

RecursionParams RunManifest::params() const {
  return RecursionParams{m, Rational::parse(alpha), MeanKind::parse(mean)};
}

RunManifest make_manifest(const SequenceRun& run, std::uint64_t max_terms,
                          const Thresholds& thresholds) {
  RunManifest mf;
  mf.tool_version = kToolVersion;
  mf.m = run.params.m;
  mf.alpha = run.params.alpha.str();
  mf.mean = run.params.mean.name();
  mf.n_requested = run.n_requested;
  mf.max_terms = max_terms;
  mf.thresholds = thresholds;
  mf.timestamp = iso8601_utc_now();
  mf.status = run.complete() ? "complete" : "broken";
  mf.breakdown = run.breakdown;
  return mf;
}

std::string manifest_to_json(const RunManifest& mf) {
  json j{{"tool_version", mf.tool_version},
         {"params", json{{"m", mf.m}, {"alpha", mf.alpha}, {"mean", mf.mean}}},
         {"n_requested", mf.n_requested},
         {"max_terms", mf.max_terms},
         {"thresholds", json{{"tau_sqrt", mf.thresholds.tau_sqrt},
                             {"tau_lin", mf.thresholds.tau_lin},
                             {"delta_slack", mf.thresholds.delta_slack},
                             {"window_fraction", mf.thresholds.window_fraction}}},
         {"timestamp", mf.timestamp},
         {"status", mf.status}};
  if (mf.breakdown.has_value()) j["breakdown"] = breakdown_to_json(*mf.breakdown);
  return j.dump(2) + "\n";
}

RunManifest manifest_from_json(const std::string& json_text) {
  json j = json::parse(json_text);
  RunManifest mf;
  mf.tool_version = j.at("tool_version").get<std::string>();
  const json& p = j.at("params");
  mf.m = p.at("m").get<std::uint32_t>();
  mf.alpha = p.at("alpha").get<std::string>();
  mf.mean = p.at("mean").get<std::string>();
  mf.n_requested = j.at("n_requested").get<std::uint64_t>();
  mf.max_terms = j.value("max_terms", kDefaultMaxTerms);
  if (j.contains("thresholds")) {
    const json& t = j.at("thresholds");
    mf.thresholds.tau_sqrt = t.value("tau_sqrt", mf.thresholds.tau_sqrt);
    mf.thresholds.tau_lin = t.value("tau_lin", mf.thresholds.tau_lin);
    mf.thresholds.delta_slack = t.value("delta_slack", mf.thresholds.delta_slack);
    mf.thresholds.window_fraction = t.value("window_fraction", mf.thresholds.window_fraction);
  }
  mf.timestamp = j.value("timestamp", "");
  mf.status = j.value("status", "");
  if (j.contains("breakdown")) mf.breakdown = breakdown_from_json(j.at("breakdown"));
  return mf;
}

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open manifest for writing: " + path.string());
  out << manifest_to_json(manifest);
}

RunManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open manifest: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return manifest_from_json(buf.str());
}

SequenceRun replay(const RunManifest& manifest) {
  return run(manifest.params(), manifest.n_requested, manifest.max_terms);
}

void write_raw64(const std::filesystem::path& path, std::uint32_t m,
                 std::span<const std::uint64_t> values) {
  if (m > 0xffff) throw std::invalid_argument("raw64 header stores m as 16 bits");
  std::string buf;
  buf.reserve(16 + values.size() * 8);
  buf.append(kRawMagic, 4);
  put_u16_le(buf, kRawVersion);
  put_u16_le(buf, static_cast<std::uint16_t>(m));
  put_u64_le(buf, values.size());
  for (std::uint64_t v : values) put_u64_le(buf, v);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open raw64 file for writing: " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw std::runtime_error("short write to raw64 file: " + path.string());
}

Raw64File read_raw64(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open raw64 file: " + path.string());
  unsigned char header[16];
  in.read(reinterpret_cast<char*>(header), 16);
  if (in.gcount() != 16) throw std::runtime_error("raw64 file truncated: " + path.string());
  if (std::memcmp(header, kRawMagic, 4) != 0)
    throw std::runtime_error("not a raw64 sequence file: " + path.string());
  if (get_u16_le(header + 4) != kRawVersion)
    throw std::runtime_error("unsupported raw64 version in " + path.string());

  Raw64File file;
  file.m = get_u16_le(header + 6);
  std::uint64_t count = get_u64_le(header + 8);
  file.values.resize(count);
  std::vector<unsigned char> body(count * 8);
  in.read(reinterpret_cast<char*>(body.data()), static_cast<std::streamsize>(body.size()));
  if (static_cast<std::uint64_t>(in.gcount()) != body.size())
    throw std::runtime_error("raw64 file truncated: " + path.string());
  for (std::uint64_t i = 0; i < count; ++i) file.values[i] = get_u64_le(body.data() + i * 8);
  return file;
}

void write_sequence_csv(std::ostream& out, const SequenceRun& run) {
  out << "n,value\n";
  for (std::uint64_t n = 1; n <= run.size(); ++n) out << n << ',' << run.at(n) << '\n';
}

void write_sequence_json(std::ostream& out, const SequenceRun& run) {
  json j{{"tool_version", kToolVersion},
         {"m", run.params.m},
         {"alpha", run.params.alpha.str()},
         {"mean", run.params.mean.name()},
         {"n_requested", run.n_requested},
         {"status", run.complete() ? "complete" : "broken"},
         {"values", run.values}};
  if (run.breakdown.has_value()) j["breakdown"] = breakdown_to_json(*run.breakdown);
  out << j.dump(2) << '\n';
}

std::string breakdown_json(const Breakdown& breakdown, std::uint64_t computed_terms) {
  json j = breakdown_to_json(breakdown);
  j["error"] = "breakdown";
  j["computed_terms"] = computed_terms;
  return j.dump();
}

const char* const kCurveCsvHeader = "n,q,ratio_sqrt";
const char* const kSlopeCsvHeader =
    "alpha,m,n,window_start,window_end,lsq_slope,lsq_intercept,tail_mean_ratio,"
    "max_abs_residual_ratio,predicted_slope";
const char* const kScanCsvHeader =
    "alpha,m,n,phase,final_ratio_sqrt,final_ratio_linear,lsq_slope,predicted_slope,"
    "breakdown_step,breakdown_branch,breakdown_argument,error";
const char* const kUniversalityCsvHeader =
    "p,mean,m,n,phase,final_ratio_sqrt,breakdown_step,error";
const char* const kBreakdownCsvHeader = "alpha,m,n,outcome,step,branch,argument";

void write_curve_csv(std::ostream& out, std::span<const CurvePoint> curve) {
  out << kCurveCsvHeader << '\n';
  for (const CurvePoint& pt : curve)
    out << pt.n << ',' << pt.q << ',' << fmt_double(pt.ratio_sqrt) << '\n';
}

void write_slope_row(std::ostream& out, const Rational& alpha, std::uint32_t m,
                     std::uint64_t n_terms, const SlopeEstimate& est, double predicted) {
  out << alpha.str() << ',' << m << ',' << n_terms << ',' << est.window_start << ','
      << est.window_end << ',' << fmt_double(est.lsq_slope) << ','
      << fmt_double(est.lsq_intercept) << ',' << fmt_double(est.tail_mean_ratio) << ','
      << fmt_double(est.max_abs_residual_ratio) << ',' << fmt_double(predicted) << '\n';
}

void write_scan_row(std::ostream& out, const PhaseScanResult& row) {
  out << row.alpha.str() << ',';
  if (row.point.has_value()) {
    const PhasePoint& pt = *row.point;
    double predicted =
        pt.alpha.is_positive() ? predicted_slope(pt.alpha).to_double() : 0.0;
    out << pt.m << ',' << pt.n_terms << ',' << phase_name(pt.phase) << ','
        << opt_double(pt.final_ratio_sqrt) << ',' << opt_double(pt.final_ratio_linear) << ',';
    if (pt.slope.has_value()) out << fmt_double(pt.slope->lsq_slope);
    out << ',' << fmt_double(predicted) << ',';
    if (pt.breakdown.has_value())
      out << pt.breakdown->step << ',' << pt.breakdown->branch << ',' << pt.breakdown->argument;
    else
      out << ",,";
    out << ',';
  } else {
    out << ",,,,,,,,,,";
  }
  out << csv_escape(row.error) << '\n';
}

void write_universality_row(std::ostream& out, std::uint32_t m, std::uint64_t n_terms,
                            const UniversalityResult& row) {
  out << row.mean.p_label() << ',' << row.mean.name() << ',' << m << ',' << n_terms << ',';
  if (row.point.has_value()) {
    out << phase_name(row.point->phase) << ',' << opt_double(row.point->final_ratio_sqrt) << ',';
    if (row.point->breakdown.has_value()) out << row.point->breakdown->step;
    out << ',';
  } else {
    out << ",,,";
  }
  out << csv_escape(row.error) << '\n';
}

void write_breakdown_row(std::ostream& out, const BreakdownReport& report) {
  out << report.params.alpha.str() << ',' << report.params.m << ',' << report.horizon << ','
      << (report.survived() ? "survived" : "broken") << ',';
  if (report.breakdown.has_value()) {
    out << report.breakdown->step << ',' << report.breakdown->branch << ','
        << report.breakdown->argument;
  } else {
    out << ",,";
  }
  out << '\n';
}

std::string iso8601_utc_now() {
  std::time_t now = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

}  // namespace qavg
