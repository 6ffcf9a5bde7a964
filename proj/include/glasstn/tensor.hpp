#ifndef GLASSTN_TENSOR_HPP
#define GLASSTN_TENSOR_HPP

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "glasstn/errors.hpp"
#include "glasstn/index.hpp"

namespace glasstn {

using cplx = std::complex<double>;

// Dense tensor with labeled legs. Data is linearized with the first index
// slowest (row-major over the index list) and shared between copies; all
// operations are pure and return new tensors.
class Tensor {
 public:
  Tensor();                     // rank-0 zero
  explicit Tensor(cplx value);  // rank-0 scalar
  explicit Tensor(std::vector<Index> indices);  // zero-filled
  Tensor(std::vector<Index> indices, std::vector<cplx> data);

  static Tensor random(std::vector<Index> indices, std::mt19937_64& rng);
  static Tensor random_real(std::vector<Index> indices, std::mt19937_64& rng);
  // Kronecker delta over two legs of equal extent.
  static Tensor identity(const Index& row, const Index& col);
  static Tensor diag(const Index& row, const Index& col, std::span<const double> values);

  int rank() const { return static_cast<int>(indices_.size()); }
  std::int64_t size() const { return static_cast<std::int64_t>(data_->size()); }
  const std::vector<Index>& indices() const { return indices_; }
  const std::vector<cplx>& data() const { return *data_; }

  bool has_index(const Index& idx) const;
  int index_position(const Index& idx) const;  // -1 if absent

  cplx scalar() const;  // rank-0 only
  cplx at(std::span<const int> coords) const;
  void set(std::span<const int> coords, cplx value);  // copies shared data first
  cplx at(std::initializer_list<int> coords) const {
    return at(std::span<const int>(coords.begin(), coords.size()));
  }
  void set(std::initializer_list<int> coords, cplx value) {
    set(std::span<const int>(coords.begin(), coords.size()), value);
  }

  Tensor permuted(std::span<const Index> order) const;
  Tensor permuted(const std::vector<Index>& order) const {
    return permuted(std::span<const Index>(order));
  }
  Tensor conj() const;
  Tensor replaced(const Index& from, const Index& to) const;
  Tensor scaled(cplx factor) const;
  // Multiply hyperplanes along `leg` by weights[i] (e.g. absorb bond weights).
  Tensor weighted(const Index& leg, std::span<const double> weights) const;

  double norm() const;       // Frobenius
  double max_abs() const;

  void write(std::ostream& out) const;
  static Tensor read(std::istream& in);

 private:
  void validate() const;

  std::vector<Index> indices_;
  std::shared_ptr<const std::vector<cplx>> data_;
};

// Sum over all shared legs; result carries a's free legs then b's.
Tensor contract(const Tensor& a, const Tensor& b);

Tensor add(const Tensor& a, const Tensor& b);        // aligns index order
Tensor subtract(const Tensor& a, const Tensor& b);

// True when the tensors carry the same leg set and the data agree entrywise
// (after index-order alignment) within atol + rtol * |reference|.
bool allclose(const Tensor& a, const Tensor& b, double rtol = 1e-12, double atol = 1e-14);

struct Factorization {
  Tensor left;                          // [left legs..., bond]
  std::vector<double> singular_values;  // descending, length bond.dim()
  Tensor right;                         // [bond, right legs...]
  Index bond;                           // shared by left and right
  double discarded_weight = 0.0;        // sum of discarded sv^2 / sum of all sv^2
};

// Truncated SVD across the given left-leg set. The new bond extent is
// min(max_rank, #sv > cutoff * sv_max, full rank), never below 1.
Factorization factorize(const Tensor& t, std::span<const Index> left_legs, int max_rank,
                        double cutoff = 1e-14);

// Map a tensor onto an Eigen matrix with `rows` legs slow and `cols` legs fast.
Eigen::MatrixXcd to_matrix(const Tensor& t, std::span<const Index> rows,
                           std::span<const Index> cols);
Tensor from_matrix(const Eigen::MatrixXcd& m, std::span<const Index> rows,
                   std::span<const Index> cols);

}  // namespace glasstn

#endif
