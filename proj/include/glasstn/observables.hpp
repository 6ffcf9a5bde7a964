#ifndef GLASSTN_OBSERVABLES_HPP
#define GLASSTN_OBSERVABLES_HPP

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "glasstn/errors.hpp"

namespace glasstn {

struct CorrelatorMatrix {
  std::vector<int> sites;
  Eigen::MatrixXd values;  // symmetric, |c_ij| <= 1 + 1e-6, unit diagonal
  std::string method;      // bmps | loop_corrected | oracle
  std::map<std::string, double> params;

  void validate() const;
};

// eps_c = sqrt( sum_{i>j} (c_ij - ref_ij)^2 / sum_{i>j} ref_ij^2 )
double error_metric(const CorrelatorMatrix& c, const CorrelatorMatrix& ref);

// q^2 = 2/(L(L-1)) sum_{i>j} c_ij^2
double spin_glass_q2(const CorrelatorMatrix& c);

struct CdTable {
  std::vector<double> d;
  std::vector<double> c;
  std::vector<int> count;
};

// C(d): mean of |c_ij - s_i s_j| over same-column pairs at distance d, one
// qubit pinned to the column center (floor convention) and column ends
// excluded. Columns list site ids in row order.
CdTable correlation_function(const CorrelatorMatrix& c, const std::vector<double>& singles,
                             const std::vector<std::vector<int>>& columns);

struct CompressedExpFit {
  double a0 = 0.0, a1 = 0.0, alpha = 0.0;
  double residual = 0.0;  // sum of |relative residuals|
};

// Least squares of log C against log a0 - a1 d^alpha (alpha by golden
// section over a coarse grid); needs >= 4 positive points.
CompressedExpFit fit_compressed_exponential(const CdTable& table);
CompressedExpFit fit_compressed_exponential(const std::vector<std::pair<double, double>>& pts);

struct CollapseFit {
  double a0 = 0.0, a1 = 0.0, alpha = 0.0;
  double mu = 0.0;
  double residual = 0.0;
  bool ambiguous = false;  // flat residual scan
  std::vector<std::pair<double, double>> scan;  // (mu, residual)
};

// Rescale d -> t_a^(1/mu) d, pool all curves, fit one compressed exponential;
// the returned mu minimizes the pooled absolute-relative residual.
CollapseFit kz_collapse(const std::vector<std::pair<double, CdTable>>& curves,
                        double mu_min = 1.5, double mu_max = 4.5);
double collapse_residual(const std::vector<std::pair<double, CdTable>>& curves,
                         double mu);

// Average C(d) tables pointwise over realizations (tables may differ in
// realized distances; counts are pooled).
CdTable average_cd_tables(const std::vector<CdTable>& tables);

// --- CSV formats -------------------------------------------------------------

void write_correlator_csv(const CorrelatorMatrix& c, std::ostream& out);
CorrelatorMatrix read_correlator_csv(std::istream& in);
void write_triplet_csv(const CorrelatorMatrix& c, std::ostream& out);
void write_singles_csv(const std::vector<int>& sites, const std::vector<double>& singles,
                       std::ostream& out);
std::vector<double> read_singles_csv(std::istream& in);
void write_cd_table_csv(const CdTable& table, std::ostream& out);
CdTable read_cd_table_csv(std::istream& in);
void write_collapse_scan_csv(const CollapseFit& fit, std::ostream& out);

std::string format_double(double v);  // shortest round-trip decimal

}  // namespace glasstn

#endif
