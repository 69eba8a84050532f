#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "qavg/engine.hpp"
#include "qavg/experiments.hpp"

namespace qavg {

/**
 * Everything needed to reproduce a run byte-for-byte: exact parameters,
 * horizon, budget, tool version, and the thresholds that were in effect.
 * The timestamp records when the run happened; replay ignores it.
 */
struct RunManifest {
  std::string tool_version;
  std::uint32_t m = 1;
  std::string alpha;  // exact form, e.g. "21/20"
  std::string mean;   // MeanKind::name() token
  std::uint64_t n_requested = 0;
  std::uint64_t max_terms = kDefaultMaxTerms;
  Thresholds thresholds;
  std::string timestamp;  // ISO 8601 UTC
  std::string status;     // "complete" or "broken"
  std::optional<Breakdown> breakdown;

  RecursionParams params() const;
};

RunManifest make_manifest(const SequenceRun& run, std::uint64_t max_terms,
                          const Thresholds& thresholds);

std::string manifest_to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const std::string& json_text);

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);
RunManifest load_manifest(const std::filesystem::path& path);

/// Re-executes the manifest's run; the result is bit-identical to the
/// original value array.
SequenceRun replay(const RunManifest& manifest);

/**
 * raw64: little-endian binary sequence file. 16-byte header
 *   bytes 0-3   magic "QAVS"
 *   bytes 4-5   format version (1), u16 LE
 *   bytes 6-7   averaging length m, u16 LE
 *   bytes 8-15  value count, u64 LE
 * followed by count u64 LE values.
 */
struct Raw64File {
  std::uint32_t m = 1;
  std::vector<std::uint64_t> values;
};

void write_raw64(const std::filesystem::path& path, std::uint32_t m,
                 std::span<const std::uint64_t> values);
Raw64File read_raw64(const std::filesystem::path& path);

/// "n,value" rows.
void write_sequence_csv(std::ostream& out, const SequenceRun& run);
/// Whole run as one JSON object (params, status, values).
void write_sequence_json(std::ostream& out, const SequenceRun& run);

/// Structured breakdown details for stderr, e.g.
/// {"error":"breakdown","step":7,"branch":1,"argument":0,...}.
std::string breakdown_json(const Breakdown& breakdown, std::uint64_t computed_terms);

// Stable CSV schemas. Writers emit the header once, then one row per call;
// callers flush between rows so partial sweeps survive a failing point.
extern const char* const kCurveCsvHeader;
extern const char* const kSlopeCsvHeader;
extern const char* const kScanCsvHeader;
extern const char* const kUniversalityCsvHeader;
extern const char* const kBreakdownCsvHeader;

void write_curve_csv(std::ostream& out, std::span<const CurvePoint> curve);
void write_slope_row(std::ostream& out, const Rational& alpha, std::uint32_t m,
                     std::uint64_t n_terms, const SlopeEstimate& estimate, double predicted);
void write_scan_row(std::ostream& out, const PhaseScanResult& row);
void write_universality_row(std::ostream& out, std::uint32_t m, std::uint64_t n_terms,
                            const UniversalityResult& row);
void write_breakdown_row(std::ostream& out, const BreakdownReport& report);

std::string iso8601_utc_now();

}  // namespace qavg
