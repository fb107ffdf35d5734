#pragma once

// Text file formats.
//
// Trace file (`qolcr-trace 1`):
//
//     # qolcr-trace 1
//     # samples = 60000
//     # lambda0_m = 8.1e-07
//     # ...                               (key = value metadata)
//     # columns = index reported_d_um intensity coincidence [true_d_um expected_intensity expected_coincidence expected_tpi]
//     0 0 1203 97
//     ...
//
// Numbers are written in the shortest form that parses back to the same
// double. Calibrated records (`qolcr-record 1`) and calibration tables
// (`qolcr-calibration 1`) share the header layout.

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "qolcr/calib.hpp"
#include "qolcr/measure.hpp"
#include "qolcr/scan_synth.hpp"

namespace qolcr {

/// Shortest round-trip decimal representation (locale independent).
std::string format_double(double value);

/// Columns of a trace file exactly as stored (positions in um).
struct TraceFile {
  std::map<std::string, std::string> header;
  std::vector<double> reported_d_um;
  std::vector<double> intensity;
  std::vector<double> coincidence;
  bool has_truth = false;
  std::vector<double> true_d_um;
  std::vector<double> expected_intensity;
  std::vector<double> expected_coincidence;
  std::vector<double> expected_tpi;
};

TraceFile to_trace_file(const ScanTrace& trace);
ScanTrace from_trace_file(const TraceFile& file);

std::string format_trace_file(const TraceFile& file);
/// Throws ParseError naming the offending line.
TraceFile parse_trace_file(std::string_view text);

/// Write to a temporary sibling and rename over `path`. Throws IoError.
void write_text_atomic(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

void write_trace(const std::filesystem::path& path, const ScanTrace& trace);
ScanTrace read_trace(const std::filesystem::path& path);

/// Columns: reported_d_um calibrated_d_um correction_nm extrapolated [true_d_um true_correction_nm]
/// for every trace sample. The correction is calibrated minus reported position.
std::string format_calibration_table(const ScanTrace& trace, const CalibrationMap& map);

std::string format_record(const CalibratedRecord& record);
CalibratedRecord parse_record(std::string_view text);
void write_record(const std::filesystem::path& path, const CalibratedRecord& record);
CalibratedRecord read_record(const std::filesystem::path& path);

/// Two columns: lag_um value.
std::string format_autocorrelogram(const Autocorrelogram& acf);

}  // namespace qolcr
