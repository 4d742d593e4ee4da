// Copyright 2026 The csqpt authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CSQPT_IO_HPP
#define CSQPT_IO_HPP

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "csqpt/histogram.hpp"
#include "csqpt/mle.hpp"
#include "csqpt/process.hpp"
#include "csqpt/simulator.hpp"

// File formats.  All text formats are line oriented, start with a
// "csqpt <kind> <schema-version>" header line, and print floating-point
// values with 17 significant digits so doubles round-trip exactly.  The
// dataset format additionally has a compact binary twin.  Byte-level
// examples live in the README.

namespace csqpt {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

#ifndef CSQPT_DOXYGEN_INTERNAL
namespace detail {

class LineParser {
public:
  LineParser(std::istream& in, std::string context) : in_(in), context_(std::move(context)) {}

  std::istringstream next(const std::string& expected_tag) {
    std::string line;
    if (!std::getline(in_, line))
      throw DataError(context_ + ": unexpected end of file, expected '" + expected_tag + "'");
    ++line_no_;
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag != expected_tag)
      throw DataError(context_ + ":" + std::to_string(line_no_) + ": expected '" + expected_tag +
                      "', found '" + tag + "'");
    return ss;
  }

  std::istringstream raw() {
    std::string line;
    if (!std::getline(in_, line))
      throw DataError(context_ + ": unexpected end of file");
    ++line_no_;
    return std::istringstream(line);
  }

  const std::string& context() const { return context_; }

private:
  std::istream& in_;
  std::string context_;
  int line_no_ = 0;
};

template <typename T>
T parse_value(std::istringstream& ss, const std::string& what) {
  T v{};
  if (!(ss >> v)) throw DataError("malformed field: " + what);
  return v;
}

inline void check_version(int version, int supported, const std::string& kind) {
  if (version != supported)
    throw DataError(kind + ": unsupported schema version " + std::to_string(version) +
                    " (supported: " + std::to_string(supported) + ")");
}

inline std::ofstream open_out(const std::string& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw DataError("cannot open for writing: " + path);
  return out;
}

inline std::ifstream open_in(const std::string& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw DataError("cannot open for reading: " + path);
  return in;
}

}  // namespace detail
#endif

// ---------------------------------------------------------------------------
// Process tensor files
// ---------------------------------------------------------------------------
//
//   csqpt tensor 1
//   dims <dim_in> <dim_out> <heralded 0|1>
//   layout h-major
//   entries <count>
//   <re> <im>            (row-major over the flattened operator)
//   ...
//   end

inline void write_tensor(std::ostream& out, const ProcessTensor& e) {
  e.validate_dims();
  out << "csqpt tensor 1\n";
  out << "dims " << e.dim_in << " " << e.dim_out << " " << (e.heralded ? 1 : 0) << "\n";
  out << "layout h-major\n";
  out << "entries " << e.op.size() << "\n";
  for (Eigen::Index r = 0; r < e.op.rows(); ++r)
    for (Eigen::Index c = 0; c < e.op.cols(); ++c)
      out << format_double(e.op(r, c).real()) << " " << format_double(e.op(r, c).imag()) << "\n";
  out << "end\n";
}

inline ProcessTensor read_tensor(std::istream& in, const std::string& context = "tensor") {
  detail::LineParser parser(in, context);
  auto header = parser.next("csqpt");
  const auto kind = detail::parse_value<std::string>(header, "file kind");
  if (kind != "tensor") throw DataError(context + ": not a tensor file");
  detail::check_version(detail::parse_value<int>(header, "version"), 1, context);

  ProcessTensor e;
  auto dims = parser.next("dims");
  e.dim_in = detail::parse_value<int>(dims, "dim_in");
  e.dim_out = detail::parse_value<int>(dims, "dim_out");
  e.heralded = detail::parse_value<int>(dims, "heralded") != 0;
  auto layout = parser.next("layout");
  if (detail::parse_value<std::string>(layout, "layout") != "h-major")
    throw DataError(context + ": unknown flattening layout");
  auto entries = parser.next("entries");
  const auto count = detail::parse_value<Eigen::Index>(entries, "entry count");
  const Eigen::Index dim = static_cast<Eigen::Index>(e.dim_in) * e.dim_out;
  if (count != dim * dim) throw DataError(context + ": entry count does not match dims");
  e.op.resize(dim, dim);
  for (Eigen::Index r = 0; r < dim; ++r) {
    for (Eigen::Index c = 0; c < dim; ++c) {
      auto line = parser.raw();
      const double re = detail::parse_value<double>(line, "entry re");
      const double im = detail::parse_value<double>(line, "entry im");
      e.op(r, c) = Complex(re, im);
    }
  }
  parser.next("end");
  if (hermiticity_defect(e.op) > 1e-8)
    throw DataError(context + ": stored operator is not Hermitian");
  e.op = hermitize(e.op);
  return e;
}

inline void save_tensor(const std::string& path, const ProcessTensor& e) {
  auto out = detail::open_out(path);
  write_tensor(out, e);
}

inline ProcessTensor load_tensor(const std::string& path) {
  auto in = detail::open_in(path);
  return read_tensor(in, path);
}

// ---------------------------------------------------------------------------
// Homodyne dataset files (text)
// ---------------------------------------------------------------------------
//
//   csqpt dataset 1
//   seed <u64>
//   eta <f>
//   phase <uniform|spaced> <count> <offset>
//   probes <M>
//   probe <label> <re> <im> <g> <deficit> <n_records>   (M lines)
//   records <label>
//   <theta> <x>                                         (n_records lines)
//   ...                                                 (per probe)
//   end

inline void write_dataset(std::ostream& out, const HomodyneDataset& ds) {
  out << "csqpt dataset 1\n";
  out << "seed " << ds.seed << "\n";
  out << "eta " << format_double(ds.eta) << "\n";
  out << "phase " << (ds.phase.kind == PhaseKind::UniformRandom ? "uniform" : "spaced") << " "
      << ds.phase.count << " " << format_double(ds.phase.offset) << "\n";
  out << "probes " << ds.probes.size() << "\n";
  for (std::size_t m = 0; m < ds.probes.size(); ++m) {
    out << "probe " << ds.probes[m].label << " " << format_double(ds.probes[m].alpha.real())
        << " " << format_double(ds.probes[m].alpha.imag()) << " " << format_double(ds.g[m])
        << " " << format_double(ds.trace_deficit[m]) << " " << ds.records[m].size() << "\n";
  }
  for (std::size_t m = 0; m < ds.probes.size(); ++m) {
    out << "records " << ds.probes[m].label << "\n";
    for (const auto& rec : ds.records[m])
      out << format_double(rec.theta) << " " << format_double(rec.x) << "\n";
  }
  out << "end\n";
}

inline HomodyneDataset read_dataset(std::istream& in, const std::string& context = "dataset") {
  detail::LineParser parser(in, context);
  auto header = parser.next("csqpt");
  const auto kind = detail::parse_value<std::string>(header, "file kind");
  if (kind != "dataset") throw DataError(context + ": not a dataset file");
  detail::check_version(detail::parse_value<int>(header, "version"), 1, context);

  HomodyneDataset ds;
  auto seed_line = parser.next("seed");
  ds.seed = detail::parse_value<std::uint64_t>(seed_line, "seed");
  auto eta_line = parser.next("eta");
  ds.eta = detail::parse_value<double>(eta_line, "eta");
  auto phase_line = parser.next("phase");
  const auto phase_kind = detail::parse_value<std::string>(phase_line, "phase kind");
  if (phase_kind == "uniform")
    ds.phase.kind = PhaseKind::UniformRandom;
  else if (phase_kind == "spaced")
    ds.phase.kind = PhaseKind::EvenlySpaced;
  else
    throw DataError(context + ": unknown phase distribution '" + phase_kind + "'");
  ds.phase.count = detail::parse_value<int>(phase_line, "phase count");
  ds.phase.offset = detail::parse_value<double>(phase_line, "phase offset");

  auto probes_line = parser.next("probes");
  const int n_probes = detail::parse_value<int>(probes_line, "probe count");
  if (n_probes < 1) throw DataError(context + ": dataset holds no probes");
  std::vector<std::size_t> n_records(n_probes);
  ds.probes.resize(n_probes);
  ds.g.resize(n_probes);
  ds.trace_deficit.resize(n_probes);
  ds.records.resize(n_probes);
  for (int m = 0; m < n_probes; ++m) {
    auto line = parser.next("probe");
    ds.probes[m].label = detail::parse_value<int>(line, "probe label");
    const double re = detail::parse_value<double>(line, "alpha re");
    const double im = detail::parse_value<double>(line, "alpha im");
    ds.probes[m].alpha = Complex(re, im);
    ds.g[m] = detail::parse_value<double>(line, "g");
    ds.trace_deficit[m] = detail::parse_value<double>(line, "trace deficit");
    n_records[m] = detail::parse_value<std::size_t>(line, "record count");
  }
  for (int m = 0; m < n_probes; ++m) {
    parser.next("records");
    ds.records[m].resize(n_records[m]);
    for (std::size_t i = 0; i < n_records[m]; ++i) {
      auto line = parser.raw();
      ds.records[m][i].theta = detail::parse_value<double>(line, "theta");
      ds.records[m][i].x = detail::parse_value<double>(line, "x");
    }
  }
  parser.next("end");
  return ds;
}

inline void save_dataset(const std::string& path, const HomodyneDataset& ds) {
  auto out = detail::open_out(path);
  write_dataset(out, ds);
}

inline HomodyneDataset load_dataset(const std::string& path) {
  auto in = detail::open_in(path);
  return read_dataset(in, path);
}

// ---------------------------------------------------------------------------
// Homodyne dataset files (binary twin)
// ---------------------------------------------------------------------------
//
// Little-endian: magic "CSQPTDS1", u64 seed, f64 eta, u32 phase kind,
// u32 phase count, f64 phase offset, u32 probe count, then per probe
// (i32 label, f64 alpha re/im, f64 g, f64 deficit, u64 n) and per probe
// n pairs of f64 (theta, x).

inline void save_dataset_binary(const std::string& path, const HomodyneDataset& ds) {
  auto out = detail::open_out(path, true);
  auto put = [&](const void* p, std::size_t n) { out.write(static_cast<const char*>(p), n); };
  out.write("CSQPTDS1", 8);
  put(&ds.seed, 8);
  put(&ds.eta, 8);
  const std::uint32_t kind = ds.phase.kind == PhaseKind::UniformRandom ? 0 : 1;
  const std::uint32_t count = static_cast<std::uint32_t>(ds.phase.count);
  put(&kind, 4);
  put(&count, 4);
  put(&ds.phase.offset, 8);
  const std::uint32_t n_probes = static_cast<std::uint32_t>(ds.probes.size());
  put(&n_probes, 4);
  for (std::size_t m = 0; m < ds.probes.size(); ++m) {
    const std::int32_t label = ds.probes[m].label;
    const double re = ds.probes[m].alpha.real(), im = ds.probes[m].alpha.imag();
    const std::uint64_t n = ds.records[m].size();
    put(&label, 4);
    put(&re, 8);
    put(&im, 8);
    put(&ds.g[m], 8);
    put(&ds.trace_deficit[m], 8);
    put(&n, 8);
  }
  for (const auto& records : ds.records)
    for (const auto& rec : records) {
      put(&rec.theta, 8);
      put(&rec.x, 8);
    }
}

inline HomodyneDataset load_dataset_binary(const std::string& path) {
  auto in = detail::open_in(path, true);
  auto get = [&](void* p, std::size_t n) {
    if (!in.read(static_cast<char*>(p), static_cast<std::streamsize>(n)))
      throw DataError(path + ": truncated binary dataset");
  };
  char magic[8];
  get(magic, 8);
  if (std::memcmp(magic, "CSQPTDS1", 8) != 0)
    throw DataError(path + ": not a csqpt binary dataset");
  HomodyneDataset ds;
  get(&ds.seed, 8);
  get(&ds.eta, 8);
  std::uint32_t kind = 0, count = 0;
  get(&kind, 4);
  get(&count, 4);
  get(&ds.phase.offset, 8);
  ds.phase.kind = kind == 0 ? PhaseKind::UniformRandom : PhaseKind::EvenlySpaced;
  ds.phase.count = static_cast<int>(count);
  std::uint32_t n_probes = 0;
  get(&n_probes, 4);
  if (n_probes == 0) throw DataError(path + ": dataset holds no probes");
  ds.probes.resize(n_probes);
  ds.g.resize(n_probes);
  ds.trace_deficit.resize(n_probes);
  ds.records.resize(n_probes);
  std::vector<std::uint64_t> counts(n_probes);
  for (std::uint32_t m = 0; m < n_probes; ++m) {
    std::int32_t label = 0;
    double re = 0.0, im = 0.0;
    get(&label, 4);
    get(&re, 8);
    get(&im, 8);
    get(&ds.g[m], 8);
    get(&ds.trace_deficit[m], 8);
    get(&counts[m], 8);
    ds.probes[m] = {Complex(re, im), label};
  }
  for (std::uint32_t m = 0; m < n_probes; ++m) {
    ds.records[m].resize(counts[m]);
    for (auto& rec : ds.records[m]) {
      get(&rec.theta, 8);
      get(&rec.x, 8);
    }
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Histogram files (sampled or analytic bin weights)
// ---------------------------------------------------------------------------
//
//   csqpt histogram 1
//   eta <f>
//   grid <n_theta> <n_x> <x_min> <x_max>
//   probes <M>
//   probe <label> <re> <im> <g> <deficit> <total> <n_bins>  (M lines)
//   bins <label>
//   <u> <v> <weight>                                        (n_bins lines)
//   ...
//   end

inline void write_histogram(std::ostream& out, const QuadratureHistogram& h) {
  out << "csqpt histogram 1\n";
  out << "eta " << format_double(h.eta) << "\n";
  out << "grid " << format_double(h.grid.dtheta) << " " << h.grid.n_x << " " << format_double(h.grid.x_min)
      << " " << format_double(h.grid.x_max) << "\n";
  out << "probes " << h.num_probes() << "\n";
  for (int m = 0; m < h.num_probes(); ++m) {
    out << "probe " << m << " " << format_double(h.probe_alphas[m].real()) << " "
        << format_double(h.probe_alphas[m].imag()) << " " << format_double(h.g[m]) << " "
        << format_double(h.trace_deficit[m]) << " " << format_double(h.total[m]) << " "
        << h.counts[m].size() << "\n";
  }
  for (int m = 0; m < h.num_probes(); ++m) {
    out << "bins " << m << "\n";
    for (const auto& [key, weight] : h.counts[m])
      out << key.first << " " << key.second << " " << format_double(weight) << "\n";
  }
  out << "end\n";
}

inline QuadratureHistogram read_histogram(std::istream& in,
                                          const std::string& context = "histogram") {
  detail::LineParser parser(in, context);
  auto header = parser.next("csqpt");
  const auto kind = detail::parse_value<std::string>(header, "file kind");
  if (kind != "histogram") throw DataError(context + ": not a histogram file");
  detail::check_version(detail::parse_value<int>(header, "version"), 1, context);

  QuadratureHistogram h;
  auto eta_line = parser.next("eta");
  h.eta = detail::parse_value<double>(eta_line, "eta");
  auto grid_line = parser.next("grid");
  h.grid.dtheta = detail::parse_value<double>(grid_line, "dtheta");
  h.grid.n_x = detail::parse_value<int>(grid_line, "n_x");
  h.grid.x_min = detail::parse_value<double>(grid_line, "x_min");
  h.grid.x_max = detail::parse_value<double>(grid_line, "x_max");
  h.grid.validate();

  auto probes_line = parser.next("probes");
  const int n_probes = detail::parse_value<int>(probes_line, "probe count");
  if (n_probes < 1) throw DataError(context + ": histogram holds no probes");
  std::vector<std::size_t> n_bins(n_probes);
  h.counts.resize(n_probes);
  h.dropped.assign(n_probes, 0);
  for (int m = 0; m < n_probes; ++m) {
    auto line = parser.next("probe");
    (void)detail::parse_value<int>(line, "probe label");
    const double re = detail::parse_value<double>(line, "alpha re");
    const double im = detail::parse_value<double>(line, "alpha im");
    h.probe_alphas.push_back(Complex(re, im));
    h.g.push_back(detail::parse_value<double>(line, "g"));
    h.trace_deficit.push_back(detail::parse_value<double>(line, "trace deficit"));
    h.total.push_back(detail::parse_value<double>(line, "total"));
    n_bins[m] = detail::parse_value<std::size_t>(line, "bin count");
  }
  for (int m = 0; m < n_probes; ++m) {
    parser.next("bins");
    for (std::size_t i = 0; i < n_bins[m]; ++i) {
      auto line = parser.raw();
      const int u = detail::parse_value<int>(line, "u");
      const int v = detail::parse_value<int>(line, "v");
      const double w = detail::parse_value<double>(line, "weight");
      if (u < 0 || u >= h.grid.n_theta() || v < 0 || v >= h.grid.n_x)
        throw DataError(context + ": bin index out of range");
      h.counts[m][{u, v}] = w;
    }
  }
  parser.next("end");
  return h;
}

inline void save_histogram(const std::string& path, const QuadratureHistogram& h) {
  auto out = detail::open_out(path);
  write_histogram(out, h);
}

inline QuadratureHistogram load_histogram(const std::string& path) {
  auto in = detail::open_in(path);
  return read_histogram(in, path);
}

// Peek at the first line to decide between dataset and histogram inputs.
inline bool file_is_histogram(const std::string& path) {
  auto in = detail::open_in(path);
  std::string tag, kind;
  in >> tag >> kind;
  return tag == "csqpt" && kind == "histogram";
}

// ---------------------------------------------------------------------------
// Likelihood trace and tables
// ---------------------------------------------------------------------------

inline void save_loglik_trace(const std::string& path, const std::vector<double>& trace) {
  auto out = detail::open_out(path);
  out << "iteration\tloglik\n";
  for (std::size_t i = 0; i < trace.size(); ++i)
    out << i << "\t" << format_double(trace[i]) << "\n";
}

// Tab-separated table with a header row.
inline void save_table(const std::string& path, const std::vector<std::string>& columns,
                       const std::vector<std::vector<std::string>>& rows) {
  auto out = detail::open_out(path);
  for (std::size_t c = 0; c < columns.size(); ++c)
    out << columns[c] << (c + 1 < columns.size() ? '\t' : '\n');
  for (const auto& row : rows) {
    if (row.size() != columns.size()) throw ConfigError("save_table: ragged row");
    for (std::size_t c = 0; c < row.size(); ++c)
      out << row[c] << (c + 1 < row.size() ? '\t' : '\n');
  }
}

}  // namespace csqpt

#endif  // CSQPT_IO_HPP
