#include "dreg/paths.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "dreg/errors.hpp"

namespace dreg {

TimeGrid::TimeGrid(double horizon, std::size_t steps)
    : horizon_(horizon), steps_(steps) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw PreconditionError("TimeGrid: horizon must be positive and finite");
  }
  if (steps == 0) {
    throw PreconditionError("TimeGrid: steps must be positive");
  }
}

std::size_t TimeGrid::index_of(double t) const {
  const double pos = t / dt();
  const double rounded = std::nearbyint(pos);
  if (!std::isfinite(pos) || rounded < 0.0 ||
      rounded > static_cast<double>(steps_) ||
      std::abs(t - time(static_cast<std::size_t>(rounded))) > 0.5 * dt()) {
    throw AlignmentError("time " + format_double(t) +
                         " is not aligned to the grid");
  }
  return static_cast<std::size_t>(rounded);
}

CadlagPath::CadlagPath(TimeGrid grid, std::vector<double> values,
                       std::vector<Jump> jumps)
    : grid_(grid), values_(std::move(values)), jumps_(std::move(jumps)) {
  if (values_.size() != grid_.nodes()) {
    throw PreconditionError("CadlagPath: expected " +
                            std::to_string(grid_.nodes()) + " values, got " +
                            std::to_string(values_.size()));
  }
  std::size_t prev = 0;
  for (const Jump& j : jumps_) {
    if (j.index == 0 || j.index > grid_.steps() || j.index <= prev) {
      throw PreconditionError(
          "CadlagPath: jump indices must be strictly increasing in (0, n]");
    }
    if (j.size == 0.0 || !std::isfinite(j.size)) {
      throw PreconditionError("CadlagPath: jump sizes must be finite, nonzero");
    }
    prev = j.index;
  }
}

CadlagPath CadlagPath::constant(const TimeGrid& grid, double value) {
  return CadlagPath(grid, std::vector<double>(grid.nodes(), value));
}

CadlagPath CadlagPath::from_function(const TimeGrid& grid,
                                     const std::function<double(double)>& f) {
  std::vector<double> v(grid.nodes());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(grid.time(i));
  return CadlagPath(grid, std::move(v));
}

CadlagPath CadlagPath::step(const TimeGrid& grid, std::vector<Jump> jumps) {
  std::map<std::size_t, double> merged;
  for (const Jump& j : jumps) merged[j.index] += j.size;
  std::vector<Jump> registry;
  for (const auto& [idx, size] : merged) {
    if (size != 0.0) registry.push_back({idx, size});
  }
  std::vector<double> v(grid.nodes(), 0.0);
  double level = 0.0;
  std::size_t next = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (next < registry.size() && registry[next].index == i) {
      level += registry[next].size;
      ++next;
    }
    v[i] = level;
  }
  return CadlagPath(grid, std::move(v), std::move(registry));
}

double CadlagPath::jump_at(std::size_t i) const {
  auto it = std::lower_bound(
      jumps_.begin(), jumps_.end(), i,
      [](const Jump& j, std::size_t idx) { return j.index < idx; });
  return (it != jumps_.end() && it->index == i) ? it->size : 0.0;
}

std::vector<double> CadlagPath::left_values() const {
  std::vector<double> left(values_);
  for (const Jump& j : jumps_) left[j.index] = values_[j.index] - j.size;
  return left;
}

std::vector<double> CadlagPath::dense_jumps() const {
  std::vector<double> d(values_.size(), 0.0);
  for (const Jump& j : jumps_) d[j.index] = j.size;
  return d;
}

CadlagPath CadlagPath::map(const std::function<double(double)>& phi) const {
  std::vector<double> v(values_.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = phi(values_[i]);
  std::vector<Jump> js;
  for (const Jump& j : jumps_) {
    const double d = v[j.index] - phi(values_[j.index] - j.size);
    if (d != 0.0) js.push_back({j.index, d});
  }
  return CadlagPath(grid_, std::move(v), std::move(js));
}

double eval(const CadlagPath& path, double t, Side side) {
  const std::size_t i = path.grid().index_of(t);
  return side == Side::right ? path.value(i) : path.left_value(i);
}

JumpMeasure extract_jumps(const CadlagPath& path) {
  JumpMeasure mu;
  mu.atoms.reserve(path.jumps().size());
  for (const Jump& j : path.jumps()) {
    mu.atoms.push_back({path.grid().time(j.index), j.size});
  }
  return mu;
}

std::vector<double> atom_left_values(const CadlagPath& path) {
  std::vector<double> out;
  out.reserve(path.jumps().size());
  for (const Jump& j : path.jumps()) out.push_back(path.left_value(j.index));
  return out;
}

double star_integral(const StarIntegrand& H, const JumpMeasure& mu,
                     std::span<const double> left_values, double t) {
  if (left_values.size() != mu.atoms.size()) {
    throw PreconditionError("star_integral: one left value per atom required");
  }
  double sum = 0.0;
  for (std::size_t a = 0; a < mu.atoms.size(); ++a) {
    if (mu.atoms[a].time > t) break;
    sum += H(mu.atoms[a].time, mu.atoms[a].size, left_values[a]);
  }
  return sum;
}

std::vector<double> star_trajectory(const StarIntegrand& H,
                                    const CadlagPath& path) {
  std::vector<double> out(path.grid().nodes(), 0.0);
  double acc = 0.0;
  std::size_t next = 0;
  const auto jumps = path.jumps();
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (next < jumps.size() && jumps[next].index == i) {
      acc += H(path.grid().time(i), jumps[next].size, path.left_value(i));
      ++next;
    }
    out[i] = acc;
  }
  return out;
}

CadlagPath combine(double a, const CadlagPath& x, double b,
                   const CadlagPath& y) {
  if (!(x.grid() == y.grid())) {
    throw GridMismatchError("combine: paths live on different grids");
  }
  std::vector<double> v(x.grid().nodes());
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = a * x.value(i) + b * y.value(i);
  }
  std::vector<Jump> js;
  const auto xj = x.jumps();
  const auto yj = y.jumps();
  std::size_t p = 0;
  std::size_t q = 0;
  while (p < xj.size() || q < yj.size()) {
    std::size_t idx;
    double size = 0.0;
    if (q == yj.size() || (p < xj.size() && xj[p].index < yj[q].index)) {
      idx = xj[p].index;
      size = a * xj[p++].size;
    } else if (p == xj.size() || yj[q].index < xj[p].index) {
      idx = yj[q].index;
      size = b * yj[q++].size;
    } else {
      idx = xj[p].index;
      size = a * xj[p++].size + b * yj[q++].size;
    }
    if (size != 0.0) js.push_back({idx, size});
  }
  return CadlagPath(x.grid(), std::move(v), std::move(js));
}

CadlagPath coarsen(const CadlagPath& path, std::size_t factor) {
  const TimeGrid& g = path.grid();
  if (factor == 0 || g.steps() % factor != 0) {
    throw PreconditionError("coarsen: factor must divide the step count");
  }
  const TimeGrid coarse(g.horizon(), g.steps() / factor);
  std::vector<double> v(coarse.nodes());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = path.value(k * factor);
  std::map<std::size_t, double> merged;
  for (const Jump& j : path.jumps()) {
    merged[(j.index + factor - 1) / factor] += j.size;
  }
  std::vector<Jump> js;
  for (const auto& [idx, size] : merged) {
    if (size != 0.0) js.push_back({idx, size});
  }
  return CadlagPath(coarse, std::move(v), std::move(js));
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v,
                           std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void write_path_csv(std::ostream& out, const CadlagPath& path) {
  out << "t,value,jump\n";
  const auto dense = path.dense_jumps();
  for (std::size_t i = 0; i < path.grid().nodes(); ++i) {
    out << format_double(path.grid().time(i)) << ','
        << format_double(path.value(i)) << ',' << format_double(dense[i])
        << '\n';
  }
}

void write_path_csv(const std::string& file, const CadlagPath& path) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw FormatError("cannot open " + file + " for writing");
  write_path_csv(out, path);
}

namespace {

double parse_double(std::string_view s, std::size_t line) {
  double v = 0.0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) {
    throw FormatError("line " + std::to_string(line) + ": bad number '" +
                      std::string(s) + "'");
  }
  return v;
}

}  // namespace

CadlagPath read_path_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty path CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t,value,jump") {
    throw FormatError("path CSV header must be 't,value,jump'");
  }
  std::vector<double> ts;
  std::vector<double> vs;
  std::vector<double> js;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) {
      throw FormatError("line " + std::to_string(lineno) +
                        ": expected three columns");
    }
    std::string_view sv(line);
    ts.push_back(parse_double(sv.substr(0, c1), lineno));
    vs.push_back(parse_double(sv.substr(c1 + 1, c2 - c1 - 1), lineno));
    js.push_back(parse_double(sv.substr(c2 + 1), lineno));
  }
  if (ts.size() < 2) throw FormatError("path CSV needs at least two rows");
  if (ts.front() != 0.0) throw FormatError("path CSV must start at t = 0");
  const TimeGrid grid(ts.back(), ts.size() - 1);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (std::abs(ts[i] - grid.time(i)) > 1e-9 * grid.dt()) {
      throw FormatError("path CSV times are not a uniform grid (row " +
                        std::to_string(i + 2) + ")");
    }
  }
  if (js.front() != 0.0) throw FormatError("jump registered at t = 0");
  std::vector<Jump> jumps;
  for (std::size_t i = 1; i < js.size(); ++i) {
    if (js[i] != 0.0) jumps.push_back({i, js[i]});
  }
  return CadlagPath(grid, std::move(vs), std::move(jumps));
}

CadlagPath read_path_csv(const std::string& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw FormatError("cannot open " + file);
  return read_path_csv(in);
}

}  // namespace dreg
