#include "dreg/levyexponent.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numbers>
#include <ostream>

#include "dreg/errors.hpp"
#include "dreg/paths.hpp"
#include "dreg/quadrature.hpp"

namespace dreg {

namespace {

constexpr Complex kI{0.0, 1.0};

// e^{iux} - 1 - i u k(x), with the small-|ux| branch expanded to avoid
// cancellation.
Complex integrand(double u, double x, const Truncation& k) {
  const double ux = u * x;
  Complex e;
  if (std::abs(ux) < 1e-4) {
    const double ux2 = ux * ux;
    e = Complex(-ux2 / 2.0 + ux2 * ux2 / 24.0, ux - ux2 * ux / 6.0);
  } else {
    e = Complex(std::cos(ux) - 1.0, std::sin(ux));
  }
  return e - kI * u * k(x);
}

double sinc(double a) {
  if (std::abs(a) < 1e-4) return 1.0 - a * a / 6.0;
  return std::sin(a) / a;
}

}  // namespace

GriddedDensity SignedMeasure::gaussian_density(double weight, double mean,
                                               double sd, std::size_t points,
                                               double span) {
  if (points < 3 || !(sd > 0.0)) throw PreconditionError("bad gaussian density grid");
  GriddedDensity g;
  g.x.resize(points);
  g.density.resize(points);
  const double lo = mean - span * sd;
  const double h = 2.0 * span * sd / static_cast<double>(points - 1);
  const double norm = weight / (sd * std::sqrt(2.0 * std::numbers::pi));
  for (std::size_t i = 0; i < points; ++i) {
    const double x = lo + h * static_cast<double>(i);
    const double z = (x - mean) / sd;
    g.x[i] = x;
    g.density[i] = norm * std::exp(-0.5 * z * z);
  }
  return g;
}

double SignedMeasure::small_jump_mass() const {
  double m = 0.0;
  for (const PointMass& a : atoms) m += std::min(1.0, a.x * a.x) * std::abs(a.weight);
  for (const GriddedDensity& g : densities) {
    for (std::size_t i = 1; i < g.x.size(); ++i) {
      const double f0 = std::min(1.0, g.x[i - 1] * g.x[i - 1]) * std::abs(g.density[i - 1]);
      const double f1 = std::min(1.0, g.x[i] * g.x[i]) * std::abs(g.density[i]);
      m += 0.5 * (g.x[i] - g.x[i - 1]) * (f0 + f1);
    }
  }
  return m;
}

Triplet1D operator+(const Triplet1D& l, const Triplet1D& r) {
  if (!(l.k == r.k)) throw PreconditionError("triplets use different truncations");
  Triplet1D out = l;
  out.b += r.b;
  out.c += r.c;
  out.lambda.atoms.insert(out.lambda.atoms.end(), r.lambda.atoms.begin(),
                          r.lambda.atoms.end());
  out.lambda.densities.insert(out.lambda.densities.end(),
                              r.lambda.densities.begin(), r.lambda.densities.end());
  return out;
}

void validate(const Triplet1D& t) {
  if (!std::isfinite(t.b) || !std::isfinite(t.c)) {
    throw PreconditionError("triplet drift and diffusion must be finite");
  }
  for (const PointMass& a : t.lambda.atoms) {
    if (a.x == 0.0) throw PreconditionError("Levy measure atom at 0");
    if (!std::isfinite(a.x) || !std::isfinite(a.weight)) {
      throw PreconditionError("Levy measure atom must be finite");
    }
  }
  for (const GriddedDensity& g : t.lambda.densities) {
    if (g.x.size() != g.density.size() || g.x.size() < 2) {
      throw PreconditionError("gridded density needs matching x and values");
    }
    for (std::size_t i = 1; i < g.x.size(); ++i) {
      if (!(g.x[i] > g.x[i - 1])) throw PreconditionError("density grid must increase");
    }
  }
  if (!std::isfinite(t.lambda.small_jump_mass())) {
    throw PreconditionError("int (1 ^ x^2) |Lambda| must be finite");
  }
}

Complex exponent_eval(const Triplet1D& t, double u) {
  Complex psi = kI * u * t.b - 0.5 * t.c * u * u;
  for (const PointMass& a : t.lambda.atoms) psi += a.weight * integrand(u, a.x, t.k);
  for (const GriddedDensity& g : t.lambda.densities) {
    Complex prev = g.density[0] * integrand(u, g.x[0], t.k);
    for (std::size_t i = 1; i < g.x.size(); ++i) {
      const Complex cur = g.density[i] * integrand(u, g.x[i], t.k);
      psi += 0.5 * (g.x[i] - g.x[i - 1]) * (prev + cur);
      prev = cur;
    }
  }
  return psi;
}

Complex exponent_eval(const TripletND& t, const Eigen::VectorXd& u) {
  const Eigen::Index d = u.size();
  if (t.b.size() != d || t.c.rows() != d || t.c.cols() != d) {
    throw PreconditionError("triplet dimension does not match u");
  }
  Complex psi = kI * u.dot(t.b) - 0.5 * u.dot(t.c * u);
  for (const auto& [x, w] : t.atoms) {
    if (x.size() != d) throw PreconditionError("atom dimension does not match u");
    const double r = x.norm();
    if (r == 0.0) throw PreconditionError("Levy measure atom at 0");
    const double kx = t.k(r) / r;
    const double ux = u.dot(x);
    psi += w * (Complex(std::cos(ux) - 1.0, std::sin(ux)) - kI * kx * ux);
  }
  return psi;
}

Complex ExponentGrid::at(double v) const {
  const double lo = u.front();
  const double h = du();
  const double s = (v - lo) / h;
  const double last = static_cast<double>(u.size() - 1);
  if (s < -1e-9 || s > last + 1e-9) {
    throw PreconditionError("u = " + format_double(v) + " outside the exponent grid");
  }
  const auto k = static_cast<std::size_t>(std::clamp(std::floor(s), 0.0, last - 1.0));
  const double a = std::clamp(s - static_cast<double>(k), 0.0, 1.0);
  return (1.0 - a) * psi[k] + a * psi[k + 1];
}

ExponentGrid sample_exponent(const Triplet1D& t, double u_max, std::size_t m) {
  validate(t);
  if (m < 2 || !(u_max > 0.0)) throw PreconditionError("bad exponent grid");
  ExponentGrid g;
  g.u.resize(m);
  g.psi.resize(m);
  const auto last = static_cast<double>(m - 1);
  for (std::size_t j = 0; j < m; ++j) {
    g.u[j] = j < m / 2 ? -u_max + 2.0 * u_max * static_cast<double>(j) / last
                       : u_max - 2.0 * u_max * static_cast<double>(m - 1 - j) / last;
  }
  if (m % 2 == 1) g.u[m / 2] = 0.0;
  const auto count = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < count; ++j) {
    g.psi[static_cast<std::size_t>(j)] = exponent_eval(t, g.u[static_cast<std::size_t>(j)]);
  }
  return g;
}

Complex phi_w(const ExponentGrid& psi, double w, double u) {
  if (w == 0.0) throw PreconditionError("w must be nonzero");
  const QuadratureRule& gl = gauss_legendre(64);
  Complex avg = 0.0;
  for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
    avg += gl.weights[i] * psi.at(u + gl.nodes[i] * w);
  }
  return psi.at(u) - 0.5 * avg;
}

Triplet1D RecoveredTriplet::triplet() const {
  Triplet1D t;
  t.b = b;
  t.c = c;
  t.k = k;
  t.lambda.densities.push_back(lambda);
  return t;
}

double RecoveredTriplet::mass(double lo, double hi) const {
  if (lambda.x.size() < 2) return 0.0;
  const double h = lambda.x[1] - lambda.x[0];
  double m = 0.0;
  for (std::size_t i = 0; i < lambda.x.size(); ++i) {
    const double a = std::max(lo, lambda.x[i] - 0.5 * h);
    const double e = std::min(hi, lambda.x[i] + 0.5 * h);
    if (e > a) m += lambda.density[i] * (e - a);
  }
  return m;
}

RecoveredTriplet recover_triplet(const ExponentGrid& psi, double w,
                                 const Truncation& k,
                                 const RecoveryOptions& options) {
  if (psi.u.size() < 512) throw PreconditionError("recovery needs at least 512 samples of psi");
  if (w == 0.0) throw PreconditionError("w must be nonzero");
  const double reach = std::abs(w);
  const double u_lim = psi.u_max() - reach;
  if (!(u_lim > options.b_u_hi)) throw PreconditionError("w too large for the psi grid");

  // Admissible subgrid: grid nodes with u +- w inside the grid.
  std::vector<double> us;
  std::vector<Complex> phis;
  for (double u : psi.u) {
    if (std::abs(u) <= u_lim + 1e-12) us.push_back(u);
  }
  phis.resize(us.size());
  const auto nu = static_cast<std::ptrdiff_t>(us.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < nu; ++j) {
    phis[static_cast<std::size_t>(j)] = phi_w(psi, w, us[static_cast<std::size_t>(j)]);
  }

  RecoveredTriplet r;
  r.w = w;
  r.k = k;
  double mean = 0.0;
  for (const Complex& p : phis) mean += p.real();
  mean /= static_cast<double>(phis.size());
  r.c = 6.0 * mean / (w * w);

  // G_w without its atom at 0, inverted by direct quadrature of
  // (1/2 pi) int phi(u) e^{-iux} du (trapezoid over the admissible u).
  const double du = psi.du();
  const std::size_t cells = options.cells;
  const double hx = (options.x_max - options.x_min) / static_cast<double>(cells);
  r.lambda.x.resize(cells);
  r.lambda.density.assign(cells, 0.0);
  r.recovered.assign(cells, false);
  const auto nc = static_cast<std::ptrdiff_t>(cells);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t cc = 0; cc < nc; ++cc) {
    const auto c = static_cast<std::size_t>(cc);
    const double x = options.x_min + (static_cast<double>(c) + 0.5) * hx;
    r.lambda.x[c] = x;
    const double factor = 1.0 - sinc(w * x);
    if (factor < options.guard) continue;
    double g = 0.0;
    for (std::size_t j = 0; j < us.size(); ++j) {
      const double wt = (j == 0 || j + 1 == us.size()) ? 0.5 : 1.0;
      const Complex p = phis[j] - mean;
      const double ux = us[j] * x;
      g += wt * (p.real() * std::cos(ux) + p.imag() * std::sin(ux));
    }
    g *= du / (2.0 * std::numbers::pi);
    r.lambda.density[c] = g / factor;
    r.recovered[c] = true;
  }
  r.unrecovered_cells =
      static_cast<std::size_t>(std::count(r.recovered.begin(), r.recovered.end(), false));

  Triplet1D partial;
  partial.k = k;
  partial.lambda.densities.push_back(r.lambda);
  double bsum = 0.0;
  std::size_t bcount = 0;
  for (std::size_t j = 0; j < psi.u.size(); ++j) {
    const double u = psi.u[j];
    if (u < options.b_u_lo || u > options.b_u_hi) continue;
    const Complex rest = psi.psi[j] + 0.5 * u * u * r.c - exponent_eval(partial, u);
    bsum += rest.imag() / u;
    ++bcount;
  }
  if (bcount == 0) throw PreconditionError("no psi samples in the drift window");
  r.b = bsum / static_cast<double>(bcount);

  const Triplet1D fitted = r.triplet();
  std::vector<double> err(us.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < nu; ++j) {
    const auto i = static_cast<std::size_t>(j);
    err[i] = std::abs(exponent_eval(fitted, us[i]) - psi.at(us[i]));
  }
  r.residual = *std::max_element(err.begin(), err.end());
  return r;
}

void write_exponent_csv(std::ostream& out, const ExponentGrid& g) {
  out << "u,re,im\n";
  for (std::size_t j = 0; j < g.u.size(); ++j) {
    out << format_double(g.u[j]) << ',' << format_double(g.psi[j].real()) << ','
        << format_double(g.psi[j].imag()) << '\n';
  }
}

void write_exponent_csv(const std::string& file, const ExponentGrid& g) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw FormatError("cannot write " + file);
  write_exponent_csv(out, g);
}

namespace {

double parse_field(std::string_view s, std::size_t lineno) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw FormatError("line " + std::to_string(lineno) + ": bad number '" +
                      std::string(s) + "'");
  }
  return v;
}

}  // namespace

ExponentGrid read_exponent_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty exponent CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "u,re,im") throw FormatError("exponent CSV header must be 'u,re,im'");
  ExponentGrid g;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) {
      throw FormatError("line " + std::to_string(lineno) + ": expected three columns");
    }
    const std::string_view sv(line);
    g.u.push_back(parse_field(sv.substr(0, c1), lineno));
    g.psi.emplace_back(parse_field(sv.substr(c1 + 1, c2 - c1 - 1), lineno),
                       parse_field(sv.substr(c2 + 1), lineno));
  }
  if (g.u.size() < 2) throw FormatError("exponent CSV needs at least two rows");
  const double h = g.u[1] - g.u[0];
  for (std::size_t j = 1; j < g.u.size(); ++j) {
    if (std::abs(g.u[j] - g.u[j - 1] - h) > 1e-9 * std::abs(h) || !(h > 0.0)) {
      throw FormatError("exponent CSV u values are not a uniform increasing grid");
    }
  }
  if (std::abs(g.u.front() + g.u.back()) > 1e-9 * std::abs(g.u.back())) {
    throw FormatError("exponent CSV u grid must be symmetric");
  }
  return g;
}

ExponentGrid read_exponent_csv(const std::string& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw FormatError("cannot open " + file);
  return read_exponent_csv(in);
}

nlohmann::json recovered_json(const RecoveredTriplet& r) {
  nlohmann::json grid = nlohmann::json::array();
  for (std::size_t i = 0; i < r.lambda.x.size(); ++i) {
    grid.push_back({r.lambda.x[i], r.lambda.density[i]});
  }
  return {
      {"b", r.b},
      {"c", r.c},
      {"w", r.w},
      {"truncation", r.k.name()},
      {"lambda_grid", grid},
      {"residual", r.residual},
      {"unrecovered_cells", r.unrecovered_cells},
  };
}

}  // namespace dreg
