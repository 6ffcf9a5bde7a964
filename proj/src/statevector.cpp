#include "glasstn/statevector.hpp"

#include <cmath>

namespace glasstn {

StateVector::StateVector(int num_qubits) : num_qubits_(num_qubits) {
  if (num_qubits < 1 || num_qubits > kMaxQubits)
    throw SizeCapError("statevector supports 1.." + std::to_string(kMaxQubits) +
                       " qubits");
  amp_.assign(std::size_t{1} << num_qubits, cplx(0));
  amp_[0] = 1.0;
}

StateVector StateVector::from_amplitudes(int num_qubits, std::vector<cplx> amplitudes) {
  StateVector v(num_qubits);
  if (amplitudes.size() != v.amp_.size())
    throw InvalidInputError("amplitude count must be 2^L");
  v.amp_ = std::move(amplitudes);
  return v;
}

void StateVector::apply_gate(std::span<const int> qubits, const Eigen::MatrixXcd& u) {
  const int k = static_cast<int>(qubits.size());
  const int dim = 1 << k;
  if (u.rows() != dim || u.cols() != dim)
    throw InvalidInputError("gate dimension does not match qubit count");
  std::uint64_t targets = 0;
  std::vector<std::uint64_t> bit(k);
  for (int i = 0; i < k; ++i) {
    if (qubits[i] < 0 || qubits[i] >= num_qubits_)
      throw InvalidInputError("gate qubit out of range");
    bit[i] = std::uint64_t{1} << qubits[i];
    if (targets & bit[i]) throw InvalidInputError("repeated gate qubit");
    targets |= bit[i];
  }
  std::vector<std::uint64_t> pattern(dim, 0);
  for (int m = 0; m < dim; ++m)
    for (int i = 0; i < k; ++i)
      if (m & (1 << (k - 1 - i))) pattern[m] |= bit[i];

  const std::uint64_t n = amp_.size();
  Eigen::VectorXcd local(dim);
  for (std::uint64_t base = 0; base < n; ++base) {
    if (base & targets) continue;
    for (int m = 0; m < dim; ++m) local(m) = amp_[base | pattern[m]];
    Eigen::VectorXcd out = u * local;
    for (int m = 0; m < dim; ++m) amp_[base | pattern[m]] = out(m);
  }
}

void StateVector::apply_diagonal(std::span<const int> qubits, std::span<const cplx> diag) {
  const int k = static_cast<int>(qubits.size());
  const int dim = 1 << k;
  if (static_cast<int>(diag.size()) != dim)
    throw InvalidInputError("diagonal length does not match qubit count");
  const std::uint64_t n = amp_.size();
  for (std::uint64_t idx = 0; idx < n; ++idx) {
    int m = 0;
    for (int i = 0; i < k; ++i)
      m = (m << 1) | static_cast<int>((idx >> qubits[i]) & 1);
    amp_[idx] *= diag[m];
  }
}

double StateVector::norm() const {
  double s = 0.0;
  for (const auto& x : amp_) s += std::norm(x);
  return std::sqrt(s);
}

void StateVector::normalize() {
  double n = norm();
  if (n == 0.0) throw InvalidInputError("cannot normalize the zero vector");
  for (auto& x : amp_) x /= n;
}

cplx StateVector::overlap(const StateVector& other) const {
  if (other.num_qubits_ != num_qubits_)
    throw InvalidInputError("overlap of mismatched statevectors");
  cplx s = 0.0;
  for (std::size_t i = 0; i < amp_.size(); ++i) s += std::conj(amp_[i]) * other.amp_[i];
  return s;
}

CorrelatorData exact_z_correlators(const StateVector& v) {
  const int l = v.num_qubits();
  CorrelatorData out;
  out.singles.assign(l, 0.0);
  out.pairs = Eigen::MatrixXd::Zero(l, l);
  std::vector<double> z(l);
  const auto& amp = v.amplitudes();
  for (std::size_t n = 0; n < amp.size(); ++n) {
    const double p = std::norm(amp[n]);
    if (p == 0.0) continue;
    for (int q = 0; q < l; ++q) z[q] = ((n >> q) & 1) ? -1.0 : 1.0;
    for (int i = 0; i < l; ++i) {
      out.singles[i] += p * z[i];
      for (int j = 0; j <= i; ++j) out.pairs(i, j) += p * z[i] * z[j];
    }
  }
  for (int i = 0; i < l; ++i)
    for (int j = i + 1; j < l; ++j) out.pairs(i, j) = out.pairs(j, i);
  return out;
}

Eigen::MatrixXcd dense_hamiltonian(const DisorderInstance& instance, double gamma,
                                   double jx) {
  const int l = instance.lattice.graph.num_vertices;
  if (l > 14) throw SizeCapError("dense Hamiltonian capped at 14 qubits");
  const std::int64_t dim = std::int64_t{1} << l;
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);
  for (std::int64_t n = 0; n < dim; ++n) {
    double zz = 0.0;
    for (std::size_t e = 0; e < instance.lattice.graph.edges.size(); ++e) {
      const auto& [u, w] = instance.lattice.graph.edges[e];
      const double zu = ((n >> u) & 1) ? -1.0 : 1.0;
      const double zw = ((n >> w) & 1) ? -1.0 : 1.0;
      zz += instance.coupling(static_cast<int>(e)) * zu * zw;
    }
    h(n, n) += gamma * zz;
    for (int q = 0; q < l; ++q) h(n ^ (std::int64_t{1} << q), n) += jx;
  }
  return h;
}

StateVector dense_ground_state(const DisorderInstance& instance, double gamma, double jx) {
  Eigen::MatrixXcd h = dense_hamiltonian(instance, gamma, jx);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  const int l = instance.lattice.graph.num_vertices;
  Eigen::VectorXcd g = es.eigenvectors().col(0);
  std::vector<cplx> amp(g.data(), g.data() + g.size());
  return StateVector::from_amplitudes(l, std::move(amp));
}

double ground_energy(const DisorderInstance& instance, double gamma, double jx) {
  Eigen::MatrixXcd h = dense_hamiltonian(instance, gamma, jx);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  return es.eigenvalues()(0);
}

Eigen::MatrixXcd hermitian_propagator(const Eigen::MatrixXcd& h, double t) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  Eigen::VectorXcd phases(es.eigenvalues().size());
  for (Eigen::Index i = 0; i < phases.size(); ++i)
    phases(i) = std::exp(cplx(0.0, -es.eigenvalues()(i) * t));
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace glasstn
