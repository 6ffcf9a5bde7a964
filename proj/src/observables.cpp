#include "glasstn/observables.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace glasstn {

void CorrelatorMatrix::validate() const {
  const int l = static_cast<int>(sites.size());
  if (values.rows() != l || values.cols() != l)
    throw InvalidInputError("correlator matrix shape mismatch");
  for (int i = 0; i < l; ++i) {
    if (std::abs(values(i, i) - 1.0) > 1e-6)
      throw InvalidInputError("correlator diagonal must be 1");
    for (int j = 0; j < l; ++j) {
      if (std::abs(values(i, j)) > 1.0 + 1e-6)
        throw InvalidInputError("correlator entry exceeds 1");
      if (std::abs(values(i, j) - values(j, i)) > 1e-9)
        throw InvalidInputError("correlator matrix must be symmetric");
    }
  }
}

double error_metric(const CorrelatorMatrix& c, const CorrelatorMatrix& ref) {
  if (c.sites != ref.sites)
    throw InvalidInputError("error metric requires identical site sets");
  const int l = static_cast<int>(c.sites.size());
  double num = 0.0, den = 0.0;
  for (int i = 0; i < l; ++i)
    for (int j = 0; j < i; ++j) {
      const double diff = c.values(i, j) - ref.values(i, j);
      num += diff * diff;
      den += ref.values(i, j) * ref.values(i, j);
    }
  if (den == 0.0)
    throw UndefinedMetricError("reference correlators vanish off-diagonal");
  return std::sqrt(num / den);
}

double spin_glass_q2(const CorrelatorMatrix& c) {
  const int l = static_cast<int>(c.sites.size());
  if (l < 2) throw InvalidInputError("q^2 needs at least two sites");
  double sum = 0.0;
  for (int i = 0; i < l; ++i)
    for (int j = 0; j < i; ++j) sum += c.values(i, j) * c.values(i, j);
  return 2.0 * sum / (static_cast<double>(l) * (l - 1));
}

CdTable correlation_function(const CorrelatorMatrix& c, const std::vector<double>& singles,
                             const std::vector<std::vector<int>>& columns) {
  std::map<int, int> pos;
  for (std::size_t i = 0; i < c.sites.size(); ++i) pos[c.sites[i]] = static_cast<int>(i);
  if (singles.size() != c.sites.size())
    throw InvalidInputError("singles vector size mismatch");

  std::map<int, std::pair<double, int>> accum;  // d -> (sum, count)
  for (const auto& column : columns) {
    const int n = static_cast<int>(column.size());
    if (n < 3) continue;
    const int center = (n - 1) / 2;
    for (int row = 1; row + 1 < n; ++row) {
      if (row == center) continue;
      const int i = pos.at(column[center]);
      const int j = pos.at(column[row]);
      const int d = std::abs(row - center);
      const double value = std::abs(c.values(i, j) - singles[i] * singles[j]);
      auto& slot = accum[d];
      slot.first += value;
      slot.second += 1;
    }
  }
  CdTable table;
  for (const auto& [d, sc] : accum) {
    table.d.push_back(d);
    table.c.push_back(sc.first / sc.second);
    table.count.push_back(sc.second);
  }
  return table;
}

namespace {

struct LinearFit {
  double log_a0 = 0.0, a1 = 0.0, sse = 0.0;
};

LinearFit linear_fit_at_alpha(const std::vector<std::pair<double, double>>& pts,
                              double alpha) {
  // log C = log a0 - a1 * d^alpha, uniform weights.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(pts.size());
  for (const auto& [d, cval] : pts) {
    const double x = std::pow(d, alpha);
    const double y = std::log(cval);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double det = n * sxx - sx * sx;
  LinearFit fit;
  if (std::abs(det) < 1e-300) {
    fit.sse = std::numeric_limits<double>::infinity();
    return fit;
  }
  fit.a1 = -(n * sxy - sx * sy) / det;
  fit.log_a0 = (sy + fit.a1 * sx) / n;
  for (const auto& [d, cval] : pts) {
    const double r = std::log(cval) - (fit.log_a0 - fit.a1 * std::pow(d, alpha));
    fit.sse += r * r;
  }
  return fit;
}

double abs_rel_residual(const std::vector<std::pair<double, double>>& pts,
                        const CompressedExpFit& fit) {
  double total = 0.0;
  for (const auto& [d, cval] : pts) {
    const double model = fit.a0 * std::exp(-fit.a1 * std::pow(d, fit.alpha));
    total += std::abs((model - cval) / cval);
  }
  return total;
}

}  // namespace

CompressedExpFit fit_compressed_exponential(
    const std::vector<std::pair<double, double>>& points) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& [d, cval] : points)
    if (cval > 0.0 && d > 0.0) pts.push_back({d, cval});
  if (pts.size() < 4)
    throw FitFailureError("compressed-exponential fit needs >= 4 positive points");

  const double lo = 0.05, hi = 8.0;
  double best_alpha = 1.0;
  double best_sse = std::numeric_limits<double>::infinity();
  const int grid = 96;
  for (int k = 0; k <= grid; ++k) {
    const double alpha = lo + (hi - lo) * k / grid;
    const double sse = linear_fit_at_alpha(pts, alpha).sse;
    if (sse < best_sse) {
      best_sse = sse;
      best_alpha = alpha;
    }
  }
  const double step = (hi - lo) / grid;
  double a = std::max(lo, best_alpha - step);
  double b = std::min(hi, best_alpha + step);
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = linear_fit_at_alpha(pts, x1).sse;
  double f2 = linear_fit_at_alpha(pts, x2).sse;
  for (int it = 0; it < 200 && (b - a) > 1e-12; ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = linear_fit_at_alpha(pts, x1).sse;
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = linear_fit_at_alpha(pts, x2).sse;
    }
  }
  const double alpha = 0.5 * (a + b);
  LinearFit lin = linear_fit_at_alpha(pts, alpha);
  CompressedExpFit fit;
  fit.alpha = alpha;
  fit.a0 = std::exp(lin.log_a0);
  fit.a1 = lin.a1;
  if (!(fit.a0 > 0.0) || !(fit.a1 > 0.0) || !std::isfinite(lin.sse))
    throw FitFailureError("compressed-exponential fit did not converge (a0=" +
                          std::to_string(fit.a0) + ", a1=" + std::to_string(fit.a1) +
                          ")");
  fit.residual = abs_rel_residual(pts, fit);
  return fit;
}

CompressedExpFit fit_compressed_exponential(const CdTable& table) {
  std::vector<std::pair<double, double>> pts;
  for (std::size_t k = 0; k < table.d.size(); ++k) pts.push_back({table.d[k], table.c[k]});
  return fit_compressed_exponential(pts);
}

namespace {

std::vector<std::pair<double, double>> pooled_points(
    const std::vector<std::pair<double, CdTable>>& curves, double mu) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& [t_a, table] : curves) {
    const double scale = std::pow(t_a, 1.0 / mu);
    for (std::size_t k = 0; k < table.d.size(); ++k)
      if (table.c[k] > 0.0) pts.push_back({scale * table.d[k], table.c[k]});
  }
  return pts;
}

}  // namespace

double collapse_residual(const std::vector<std::pair<double, CdTable>>& curves,
                         double mu) {
  auto pts = pooled_points(curves, mu);
  CompressedExpFit fit = fit_compressed_exponential(pts);
  return fit.residual;
}

CollapseFit kz_collapse(const std::vector<std::pair<double, CdTable>>& curves,
                        double mu_min, double mu_max) {
  if (curves.size() < 3)
    throw InvalidInputError("scaling collapse needs at least three annealing times");
  CollapseFit out;
  const int grid = 60;
  double best_mu = mu_min;
  double best_res = std::numeric_limits<double>::infinity();
  double worst_res = 0.0;
  for (int k = 0; k <= grid; ++k) {
    const double mu = mu_min + (mu_max - mu_min) * k / grid;
    const double res = collapse_residual(curves, mu);
    out.scan.push_back({mu, res});
    worst_res = std::max(worst_res, res);
    if (res < best_res) {
      best_res = res;
      best_mu = mu;
    }
  }
  const double step = (mu_max - mu_min) / grid;
  double a = std::max(mu_min, best_mu - step);
  double b = std::min(mu_max, best_mu + step);
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = collapse_residual(curves, x1);
  double f2 = collapse_residual(curves, x2);
  for (int it = 0; it < 120 && (b - a) > 1e-10; ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = collapse_residual(curves, x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = collapse_residual(curves, x2);
    }
  }
  out.mu = 0.5 * (a + b);
  auto pts = pooled_points(curves, out.mu);
  CompressedExpFit fit = fit_compressed_exponential(pts);
  out.a0 = fit.a0;
  out.a1 = fit.a1;
  out.alpha = fit.alpha;
  out.residual = fit.residual;
  out.ambiguous = (worst_res - best_res) <= 1e-9 * std::max(1.0, worst_res);
  return out;
}

CdTable average_cd_tables(const std::vector<CdTable>& tables) {
  std::map<double, std::pair<double, int>> accum;  // d -> (weighted sum, count)
  std::map<double, int> realizations;
  for (const auto& t : tables)
    for (std::size_t k = 0; k < t.d.size(); ++k) {
      accum[t.d[k]].first += t.c[k];
      accum[t.d[k]].second += t.count[k];
      realizations[t.d[k]] += 1;
    }
  CdTable out;
  for (const auto& [d, sc] : accum) {
    out.d.push_back(d);
    out.c.push_back(sc.first / realizations[d]);
    out.count.push_back(sc.second);
  }
  return out;
}

// --- CSV ----------------------------------------------------------------------

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_correlator_csv(const CorrelatorMatrix& c, std::ostream& out) {
  out << "# method " << c.method << '\n';
  for (const auto& [k, v] : c.params) out << "# param " << k << ' ' << format_double(v) << '\n';
  out << "site";
  for (int s : c.sites) out << ',' << s;
  out << '\n';
  for (std::size_t i = 0; i < c.sites.size(); ++i) {
    out << c.sites[i];
    for (std::size_t j = 0; j < c.sites.size(); ++j)
      out << ',' << format_double(c.values(i, j));
    out << '\n';
  }
}

CorrelatorMatrix read_correlator_csv(std::istream& in) {
  CorrelatorMatrix c;
  std::string line;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream meta(line.substr(1));
      std::string word;
      meta >> word;
      if (word == "method") meta >> c.method;
      else if (word == "param") {
        std::string key;
        double value;
        if (meta >> key >> value) c.params[key] = value;
      }
      continue;
    }
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    if (c.sites.empty() && line.rfind("site", 0) == 0) {
      std::string head;
      row >> head;
      int s;
      while (row >> s) c.sites.push_back(s);
      continue;
    }
    double site;
    if (!(row >> site)) continue;
    std::vector<double> vals;
    double v;
    while (row >> v) vals.push_back(v);
    rows.push_back(std::move(vals));
  }
  const int l = static_cast<int>(c.sites.size());
  if (l == 0 || static_cast<int>(rows.size()) != l)
    throw IoError("malformed correlator csv");
  c.values.resize(l, l);
  for (int i = 0; i < l; ++i) {
    if (static_cast<int>(rows[i].size()) != l) throw IoError("ragged correlator csv");
    for (int j = 0; j < l; ++j) c.values(i, j) = rows[i][j];
  }
  return c;
}

void write_triplet_csv(const CorrelatorMatrix& c, std::ostream& out) {
  out << "i,j,c_ij\n";
  for (std::size_t i = 0; i < c.sites.size(); ++i)
    for (std::size_t j = i + 1; j < c.sites.size(); ++j)
      out << c.sites[i] << ',' << c.sites[j] << ','
          << format_double(c.values(i, j)) << '\n';
}

void write_singles_csv(const std::vector<int>& sites, const std::vector<double>& singles,
                       std::ostream& out) {
  out << "site,value\n";
  for (std::size_t i = 0; i < sites.size(); ++i)
    out << sites[i] << ',' << format_double(singles[i]) << '\n';
}

std::vector<double> read_singles_csv(std::istream& in) {
  std::vector<double> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("site", 0) == 0) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    int site;
    double v;
    if (row >> site >> v) out.push_back(v);
  }
  return out;
}

void write_cd_table_csv(const CdTable& table, std::ostream& out) {
  out << "d,C,count\n";
  for (std::size_t k = 0; k < table.d.size(); ++k)
    out << format_double(table.d[k]) << ',' << format_double(table.c[k]) << ','
        << table.count[k] << '\n';
}

CdTable read_cd_table_csv(std::istream& in) {
  CdTable table;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("d,", 0) == 0) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    double d, c;
    int count;
    if (row >> d >> c >> count) {
      table.d.push_back(d);
      table.c.push_back(c);
      table.count.push_back(count);
    }
  }
  return table;
}

void write_collapse_scan_csv(const CollapseFit& fit, std::ostream& out) {
  out << "mu,residual\n";
  for (const auto& [mu, res] : fit.scan)
    out << format_double(mu) << ',' << format_double(res) << '\n';
}

}  // namespace glasstn
