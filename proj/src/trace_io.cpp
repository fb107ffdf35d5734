#include "qolcr/trace_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <system_error>

#include "qolcr/config.hpp"
#include "qolcr/errors.hpp"

namespace qolcr {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kTraceMagic = "qolcr-trace 1";
constexpr std::string_view kRecordMagic = "qolcr-record 1";
constexpr std::string_view kCalibrationMagic = "qolcr-calibration 1";

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    const std::size_t b = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t' && s[i] != '\r') ++i;
    if (i > b) out.push_back(s.substr(b, i - b));
  }
  return out;
}

double parse_double(std::string_view token, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    if (token == "nan") return std::numeric_limits<double>::quiet_NaN();
    throw ParseError("invalid number '" + std::string(token) + "'", line);
  }
  return v;
}

std::uint64_t parse_u64(std::string_view token, std::size_t line) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size())
    throw ParseError("invalid integer '" + std::string(token) + "'", line);
  return v;
}

struct Parsed {
  std::map<std::string, std::string> header;
  std::map<std::string, std::size_t> header_line;
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> row_line;
};

// Splits a document into '# key = value' header entries and numeric rows.
Parsed parse_table(std::string_view text, std::string_view magic) {
  Parsed p;
  std::size_t line_no = 0;
  bool seen_magic = false;
  std::size_t width = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const auto raw = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    const auto line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      const auto body = trim(line.substr(1));
      if (!seen_magic) {
        if (body != magic) throw ParseError("expected header '# " + std::string(magic) + "'", line_no);
        seen_magic = true;
        continue;
      }
      const auto eq = body.find('=');
      if (eq == std::string_view::npos) throw ParseError("header line without '='", line_no);
      const std::string key(trim(body.substr(0, eq)));
      if (key.empty()) throw ParseError("empty header key", line_no);
      p.header[key] = std::string(trim(body.substr(eq + 1)));
      p.header_line[key] = line_no;
      continue;
    }
    if (!seen_magic) throw ParseError("expected header '# " + std::string(magic) + "'", line_no);
    const auto tokens = split_ws(line);
    if (width == 0) width = tokens.size();
    if (tokens.size() != width)
      throw ParseError("expected " + std::to_string(width) + " columns, found " + std::to_string(tokens.size()),
                       line_no);
    std::vector<double> row;
    row.reserve(tokens.size());
    for (auto t : tokens) row.push_back(parse_double(t, line_no));
    p.rows.push_back(std::move(row));
    p.row_line.push_back(line_no);
  }
  if (!seen_magic) throw ParseError("empty document", line_no == 0 ? 1 : line_no);
  return p;
}

const std::string& require(const Parsed& p, const std::string& key) {
  const auto it = p.header.find(key);
  if (it == p.header.end()) throw ParseError("missing header key '" + key + "'", 1);
  return it->second;
}

std::size_t line_of(const Parsed& p, const std::string& key) {
  const auto it = p.header_line.find(key);
  return it == p.header_line.end() ? 1 : it->second;
}

double header_double(const Parsed& p, const std::string& key) {
  return parse_double(require(p, key), line_of(p, key));
}

std::uint64_t header_u64(const Parsed& p, const std::string& key) {
  return parse_u64(require(p, key), line_of(p, key));
}

void put(std::string& out, std::string_view key, std::string_view value) {
  out += "# ";
  out += key;
  out += " = ";
  out += value;
  out += '\n';
}

std::vector<std::pair<std::string, std::string>> metadata_entries(const TraceMetadata& m) {
  std::vector<std::pair<std::string, std::string>> e{
      {"lambda0_m", format_double(m.lambda0)},
      {"bandwidth_m", format_double(m.bandwidth)},
      {"lambda_p_m", format_double(m.lambda_p)},
      {"velocity_m_per_s", format_double(m.velocity)},
      {"sample_rate_hz", format_double(m.sample_rate)},
      {"stage_seed", std::to_string(m.stage_seed)},
      {"noise_seed", std::to_string(m.noise_seed)},
      {"poisson", m.poisson ? "1" : "0"},
      {"surfaces", std::to_string(m.surfaces.size())},
  };
  for (std::size_t j = 0; j < m.surfaces.size(); ++j) {
    e.emplace_back("surface_" + std::to_string(j),
                   format_double(m.surfaces[j].r) + " " + format_double(m.surfaces[j].z));
  }
  return e;
}

void put_metadata(std::string& out, const TraceMetadata& m) {
  for (const auto& [k, v] : metadata_entries(m)) put(out, k, v);
}

TraceMetadata read_metadata(const Parsed& p) {
  TraceMetadata m;
  m.lambda0 = header_double(p, "lambda0_m");
  m.bandwidth = header_double(p, "bandwidth_m");
  m.lambda_p = header_double(p, "lambda_p_m");
  m.velocity = header_double(p, "velocity_m_per_s");
  m.sample_rate = header_double(p, "sample_rate_hz");
  m.stage_seed = header_u64(p, "stage_seed");
  m.noise_seed = header_u64(p, "noise_seed");
  m.poisson = header_u64(p, "poisson") != 0;
  const auto n = header_u64(p, "surfaces");
  for (std::uint64_t j = 0; j < n; ++j) {
    const auto key = "surface_" + std::to_string(j);
    const auto tokens = split_ws(require(p, key));
    if (tokens.size() != 2) throw ParseError("surface entry needs 'r z_m'", line_of(p, key));
    m.surfaces.push_back(Surface{parse_double(tokens[0], line_of(p, key)), parse_double(tokens[1], line_of(p, key))});
  }
  return m;
}

void check_count(const Parsed& p, std::size_t expected) {
  if (p.rows.size() != expected) {
    const std::size_t line = p.row_line.empty() ? line_of(p, "samples") : p.row_line.back();
    throw ParseError("header declares " + std::to_string(expected) + " samples, found " +
                         std::to_string(p.rows.size()),
                     line);
  }
}

void check_index(const Parsed& p, std::size_t i) {
  if (p.rows[i][0] != static_cast<double>(i))
    throw ParseError("expected sample index " + std::to_string(i), p.row_line[i]);
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

TraceFile to_trace_file(const ScanTrace& trace) {
  TraceFile f;
  const std::size_t n = trace.size();
  f.reported_d_um.reserve(n);
  for (double d : trace.reported_d) f.reported_d_um.push_back(to_unit(d, 1e6));
  f.intensity = trace.intensity;
  f.coincidence = trace.coincidence;
  f.has_truth = trace.truth.has_value();
  if (f.has_truth) {
    for (double d : trace.truth->true_d) f.true_d_um.push_back(to_unit(d, 1e6));
    f.expected_intensity = trace.truth->intensity;
    f.expected_coincidence = trace.truth->coincidence;
    f.expected_tpi = trace.truth->tpi;
  }
  f.header["samples"] = std::to_string(n);
  for (auto& [k, v] : metadata_entries(trace.metadata)) f.header[k] = std::move(v);
  return f;
}

ScanTrace from_trace_file(const TraceFile& file) {
  Parsed p;
  p.header = file.header;
  ScanTrace t;
  t.metadata = read_metadata(p);
  t.reported_d.reserve(file.reported_d_um.size());
  for (double d : file.reported_d_um) t.reported_d.push_back(d / 1e6);
  t.intensity = file.intensity;
  t.coincidence = file.coincidence;
  if (file.has_truth) {
    ScanTruth truth;
    for (double d : file.true_d_um) truth.true_d.push_back(d / 1e6);
    truth.intensity = file.expected_intensity;
    truth.coincidence = file.expected_coincidence;
    truth.tpi = file.expected_tpi;
    t.truth = std::move(truth);
  }
  return t;
}

std::string format_trace_file(const TraceFile& f) {
  std::string out;
  out.reserve(f.reported_d_um.size() * (f.has_truth ? 96 : 40) + 1024);
  out += "# ";
  out += kTraceMagic;
  out += '\n';
  for (const auto& [k, v] : f.header) {
    if (k == "columns" || k == "has_truth") continue;
    put(out, k, v);
  }
  put(out, "has_truth", f.has_truth ? "1" : "0");
  put(out, "columns",
      f.has_truth ? "index reported_d_um intensity coincidence true_d_um expected_intensity expected_coincidence "
                    "expected_tpi"
                  : "index reported_d_um intensity coincidence");
  for (std::size_t i = 0; i < f.reported_d_um.size(); ++i) {
    out += std::to_string(i);
    for (double v : {f.reported_d_um[i], f.intensity[i], f.coincidence[i]}) {
      out += ' ';
      out += format_double(v);
    }
    if (f.has_truth) {
      for (double v : {f.true_d_um[i], f.expected_intensity[i], f.expected_coincidence[i], f.expected_tpi[i]}) {
        out += ' ';
        out += format_double(v);
      }
    }
    out += '\n';
  }
  return out;
}

TraceFile parse_trace_file(std::string_view text) {
  const auto p = parse_table(text, kTraceMagic);
  TraceFile f;
  f.header = p.header;
  f.header.erase("columns");
  f.header.erase("has_truth");
  const auto n = header_u64(p, "samples");
  f.has_truth = header_u64(p, "has_truth") != 0;
  check_count(p, n);
  const std::size_t width = f.has_truth ? 8 : 4;
  for (std::size_t i = 0; i < p.rows.size(); ++i) {
    const auto& r = p.rows[i];
    if (r.size() != width)
      throw ParseError("expected " + std::to_string(width) + " columns, found " + std::to_string(r.size()),
                       p.row_line[i]);
    check_index(p, i);
    f.reported_d_um.push_back(r[1]);
    f.intensity.push_back(r[2]);
    f.coincidence.push_back(r[3]);
    if (f.has_truth) {
      f.true_d_um.push_back(r[4]);
      f.expected_intensity.push_back(r[5]);
      f.expected_coincidence.push_back(r[6]);
      f.expected_tpi.push_back(r[7]);
    }
  }
  for (std::size_t i = 1; i < f.reported_d_um.size(); ++i) {
    if (!(f.reported_d_um[i] > f.reported_d_um[i - 1]))
      throw ParseError("reported positions must increase", p.row_line[i]);
  }
  (void)read_metadata(p);
  return f;
}

void write_text_atomic(const fs::path& path, std::string_view text) {
  const auto dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError("directory does not exist: " + dir.string());
  std::random_device rd;
  const auto tmp = dir / ("." + path.filename().string() + ".tmp" + std::to_string(rd()));
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open for writing: " + tmp.string());
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    os.flush();
    if (!os) {
      os.close();
      fs::remove(tmp, ec);
      throw IoError("write failed: " + tmp.string());
    }
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignore;
    fs::remove(tmp, ignore);
    throw IoError("cannot rename onto " + path.string() + ": " + ec.message());
  }
}

std::string read_text(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open for reading: " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  if (is.bad()) throw IoError("read failed: " + path.string());
  return ss.str();
}

void write_trace(const fs::path& path, const ScanTrace& trace) {
  write_text_atomic(path, format_trace_file(to_trace_file(trace)));
}

ScanTrace read_trace(const fs::path& path) { return from_trace_file(parse_trace_file(read_text(path))); }

std::string format_calibration_table(const ScanTrace& trace, const CalibrationMap& map) {
  std::string out;
  out += "# ";
  out += kCalibrationMagic;
  out += '\n';
  put(out, "samples", std::to_string(trace.size()));
  put(out, "interpolation", CalibrationMap::interpolation());
  put(out, "knots", std::to_string(map.reported_knots().size()));
  put(out, "domain_um", format_double(map.domain_begin() * 1e6) + " " + format_double(map.domain_end() * 1e6));
  put_metadata(out, trace.metadata);
  const bool truth = trace.truth.has_value();
  put(out, "columns",
      truth ? "reported_d_um calibrated_d_um correction_nm extrapolated true_d_um true_correction_nm"
            : "reported_d_um calibrated_d_um correction_nm extrapolated");
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const double dr = trace.reported_d[i];
    const double dc = map(dr);
    out += format_double(dr * 1e6) + ' ' + format_double(dc * 1e6) + ' ' + format_double((dc - dr) * 1e9) + ' ' +
           (map.extrapolated(dr) ? '1' : '0');
    if (truth) {
      const double dt = trace.truth->true_d[i];
      out += ' ' + format_double(dt * 1e6) + ' ' + format_double((dt - dr) * 1e9);
    }
    out += '\n';
  }
  return out;
}

std::string format_record(const CalibratedRecord& record) {
  std::string out;
  out.reserve(record.size() * 32 + 1024);
  out += "# ";
  out += kRecordMagic;
  out += '\n';
  put(out, "samples", std::to_string(record.size()));
  put(out, "start_m", format_double(record.start));
  put(out, "step_m", format_double(record.step));
  put_metadata(out, record.metadata);
  put(out, "columns", "index d_um intensity");
  for (std::size_t i = 0; i < record.size(); ++i) {
    out += std::to_string(i);
    out += ' ';
    out += format_double(record.position(i) * 1e6);
    out += ' ';
    out += format_double(record.intensity[i]);
    out += '\n';
  }
  return out;
}

CalibratedRecord parse_record(std::string_view text) {
  const auto p = parse_table(text, kRecordMagic);
  CalibratedRecord r;
  r.start = header_double(p, "start_m");
  r.step = header_double(p, "step_m");
  if (!(r.step > 0.0)) throw ParseError("step_m must be positive", line_of(p, "step_m"));
  r.metadata = read_metadata(p);
  check_count(p, header_u64(p, "samples"));
  for (std::size_t i = 0; i < p.rows.size(); ++i) {
    if (p.rows[i].size() != 3) throw ParseError("expected 3 columns", p.row_line[i]);
    check_index(p, i);
    r.intensity.push_back(p.rows[i][2]);
  }
  return r;
}

void write_record(const fs::path& path, const CalibratedRecord& record) {
  write_text_atomic(path, format_record(record));
}

CalibratedRecord read_record(const fs::path& path) { return parse_record(read_text(path)); }

std::string format_autocorrelogram(const Autocorrelogram& acf) {
  std::string out = "# lag_um value\n";
  for (std::size_t i = 0; i < acf.size(); ++i) {
    out += format_double(acf.lag(i) * 1e6);
    out += ' ';
    out += format_double(acf.values[i]);
    out += '\n';
  }
  return out;
}

}  // namespace qolcr
