#include "glasstn/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

namespace glasstn {

static_assert(std::endian::native == std::endian::little,
              "serialized tensor blobs assume a little-endian host");

namespace {

std::atomic<std::uint64_t> g_next_index_id{1};

using RowMajorMat =
    Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMajorMap = Eigen::Map<RowMajorMat>;
using ConstRowMajorMap = Eigen::Map<const RowMajorMat>;

std::int64_t product_of_dims(std::span<const Index> idxs) {
  std::int64_t p = 1;
  for (const auto& i : idxs) p *= i.dim();
  return p;
}

}  // namespace

Index Index::make(int dim, std::string tag) {
  if (dim < 1) throw InvalidInputError("Index extent must be >= 1");
  return Index(g_next_index_id.fetch_add(1, std::memory_order_relaxed), dim,
               std::move(tag));
}

Tensor::Tensor() : indices_(), data_(std::make_shared<std::vector<cplx>>(1, cplx(0))) {}

Tensor::Tensor(cplx value)
    : indices_(), data_(std::make_shared<std::vector<cplx>>(1, value)) {}

Tensor::Tensor(std::vector<Index> indices)
    : indices_(std::move(indices)),
      data_(std::make_shared<std::vector<cplx>>(product_of_dims(indices_), cplx(0))) {
  validate();
}

Tensor::Tensor(std::vector<Index> indices, std::vector<cplx> data)
    : indices_(std::move(indices)),
      data_(std::make_shared<std::vector<cplx>>(std::move(data))) {
  validate();
}

void Tensor::validate() const {
  for (std::size_t i = 0; i < indices_.size(); ++i) {
    if (!indices_[i].valid())
      throw MalformedTensorError("tensor leg is default-constructed");
    for (std::size_t j = i + 1; j < indices_.size(); ++j) {
      if (indices_[i].id() == indices_[j].id())
        throw MalformedTensorError("duplicate index id within one tensor");
    }
  }
  if (static_cast<std::int64_t>(data_->size()) != product_of_dims(indices_))
    throw MalformedTensorError("data size does not match index extents");
}

Tensor Tensor::random(std::vector<Index> indices, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<cplx> data(product_of_dims(indices));
  for (auto& x : data) {
    double re = dist(rng);
    double im = dist(rng);
    x = cplx(re, im);
  }
  return Tensor(std::move(indices), std::move(data));
}

Tensor Tensor::random_real(std::vector<Index> indices, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<cplx> data(product_of_dims(indices));
  for (auto& x : data) x = cplx(dist(rng), 0.0);
  return Tensor(std::move(indices), std::move(data));
}

Tensor Tensor::identity(const Index& row, const Index& col) {
  if (row.dim() != col.dim())
    throw InvalidInputError("identity requires equal extents");
  std::vector<cplx> data(static_cast<std::size_t>(row.dim()) * col.dim(), cplx(0));
  for (int i = 0; i < row.dim(); ++i) data[static_cast<std::size_t>(i) * col.dim() + i] = 1.0;
  return Tensor({row, col}, std::move(data));
}

Tensor Tensor::diag(const Index& row, const Index& col, std::span<const double> values) {
  if (row.dim() != col.dim() || static_cast<int>(values.size()) != row.dim())
    throw InvalidInputError("diag requires equal extents matching the value count");
  std::vector<cplx> data(static_cast<std::size_t>(row.dim()) * col.dim(), cplx(0));
  for (int i = 0; i < row.dim(); ++i)
    data[static_cast<std::size_t>(i) * col.dim() + i] = values[i];
  return Tensor({row, col}, std::move(data));
}

bool Tensor::has_index(const Index& idx) const { return index_position(idx) >= 0; }

int Tensor::index_position(const Index& idx) const {
  for (std::size_t i = 0; i < indices_.size(); ++i)
    if (indices_[i] == idx) return static_cast<int>(i);
  return -1;
}

cplx Tensor::scalar() const {
  if (rank() != 0) throw InvalidInputError("scalar() called on tensor of rank > 0");
  return (*data_)[0];
}

namespace {
std::int64_t offset_of(std::span<const Index> idxs, std::span<const int> coords) {
  if (coords.size() != idxs.size())
    throw InvalidInputError("coordinate count does not match rank");
  std::int64_t off = 0;
  for (std::size_t k = 0; k < idxs.size(); ++k) {
    if (coords[k] < 0 || coords[k] >= idxs[k].dim())
      throw InvalidInputError("coordinate out of range");
    off = off * idxs[k].dim() + coords[k];
  }
  return off;
}
}  // namespace

cplx Tensor::at(std::span<const int> coords) const {
  return (*data_)[offset_of(indices_, coords)];
}

void Tensor::set(std::span<const int> coords, cplx value) {
  auto off = offset_of(indices_, coords);
  if (data_.use_count() > 1) data_ = std::make_shared<std::vector<cplx>>(*data_);
  const_cast<std::vector<cplx>&>(*data_)[off] = value;
}

Tensor Tensor::permuted(std::span<const Index> order) const {
  const int r = rank();
  if (static_cast<int>(order.size()) != r)
    throw InvalidInputError("permutation order has wrong length");
  bool same = true;
  for (int k = 0; k < r; ++k)
    if (order[k] != indices_[k]) { same = false; break; }
  if (same) return *this;

  std::vector<std::int64_t> src_strides(r);
  std::int64_t s = 1;
  for (int k = r - 1; k >= 0; --k) {
    src_strides[k] = s;
    s *= indices_[k].dim();
  }
  std::vector<std::int64_t> axis_stride(r);
  std::vector<int> dims(r);
  std::vector<char> used(r, 0);
  for (int k = 0; k < r; ++k) {
    int pos = index_position(order[k]);
    if (pos < 0 || used[pos])
      throw InvalidInputError("permutation order is not a permutation of the legs");
    used[pos] = 1;
    axis_stride[k] = src_strides[pos];
    dims[k] = order[k].dim();
  }

  const std::vector<cplx>& src = *data_;
  std::vector<cplx> dst(src.size());
  std::vector<int> coords(r, 0);
  std::int64_t src_off = 0;
  const std::int64_t n = size();
  for (std::int64_t i = 0; i < n; ++i) {
    dst[i] = src[src_off];
    for (int k = r - 1; k >= 0; --k) {
      if (++coords[k] < dims[k]) {
        src_off += axis_stride[k];
        break;
      }
      coords[k] = 0;
      src_off -= axis_stride[k] * (dims[k] - 1);
    }
  }
  return Tensor(std::vector<Index>(order.begin(), order.end()), std::move(dst));
}

Tensor Tensor::conj() const {
  std::vector<cplx> data(*data_);
  for (auto& x : data) x = std::conj(x);
  return Tensor(indices_, std::move(data));
}

Tensor Tensor::replaced(const Index& from, const Index& to) const {
  int pos = index_position(from);
  if (pos < 0) throw InvalidInputError("replaced(): leg not found");
  if (from.dim() != to.dim())
    throw InvalidInputError("replaced(): extents differ");
  std::vector<Index> idxs = indices_;
  idxs[pos] = to;
  Tensor out;
  out.indices_ = std::move(idxs);
  out.data_ = data_;
  out.validate();
  return out;
}

Tensor Tensor::scaled(cplx factor) const {
  std::vector<cplx> data(*data_);
  for (auto& x : data) x *= factor;
  return Tensor(indices_, std::move(data));
}

Tensor Tensor::weighted(const Index& leg, std::span<const double> weights) const {
  int pos = index_position(leg);
  if (pos < 0) throw InvalidInputError("weighted(): leg not found");
  if (static_cast<int>(weights.size()) != leg.dim())
    throw InvalidInputError("weighted(): weight count does not match extent");
  std::int64_t inner = 1;
  for (int k = pos + 1; k < rank(); ++k) inner *= indices_[k].dim();
  const std::int64_t mid = leg.dim();
  const std::int64_t outer = size() / (inner * mid);
  std::vector<cplx> data(*data_);
  std::int64_t off = 0;
  for (std::int64_t o = 0; o < outer; ++o)
    for (std::int64_t m = 0; m < mid; ++m)
      for (std::int64_t i = 0; i < inner; ++i, ++off) data[off] *= weights[m];
  return Tensor(indices_, std::move(data));
}

double Tensor::norm() const {
  double s = 0.0;
  for (const auto& x : *data_) s += std::norm(x);
  return std::sqrt(s);
}

double Tensor::max_abs() const {
  double m = 0.0;
  for (const auto& x : *data_) m = std::max(m, std::abs(x));
  return m;
}

Tensor contract(const Tensor& a, const Tensor& b) {
  std::vector<Index> shared;
  std::vector<Index> free_a;
  std::vector<Index> free_b;
  for (const auto& ia : a.indices()) {
    if (b.has_index(ia)) shared.push_back(ia);
    else free_a.push_back(ia);
  }
  for (const auto& ib : b.indices()) {
    if (!a.has_index(ib)) free_b.push_back(ib);
  }

  std::vector<Index> a_order = free_a;
  a_order.insert(a_order.end(), shared.begin(), shared.end());
  std::vector<Index> b_order = shared;
  b_order.insert(b_order.end(), free_b.begin(), free_b.end());

  Tensor pa = a.permuted(a_order);
  Tensor pb = b.permuted(b_order);

  const std::int64_t k = product_of_dims(shared);
  const std::int64_t m = pa.size() / k;
  const std::int64_t n = pb.size() / k;

  std::vector<cplx> out(static_cast<std::size_t>(m) * n);
  ConstRowMajorMap ma(pa.data().data(), m, k);
  ConstRowMajorMap mb(pb.data().data(), k, n);
  RowMajorMap mo(out.data(), m, n);
  mo.noalias() = ma * mb;

  std::vector<Index> out_idx = free_a;
  out_idx.insert(out_idx.end(), free_b.begin(), free_b.end());
  return Tensor(std::move(out_idx), std::move(out));
}

Tensor add(const Tensor& a, const Tensor& b) {
  Tensor pb = b.permuted(a.indices());
  std::vector<cplx> data(a.data());
  const auto& db = pb.data();
  for (std::size_t i = 0; i < data.size(); ++i) data[i] += db[i];
  return Tensor(a.indices(), std::move(data));
}

Tensor subtract(const Tensor& a, const Tensor& b) {
  Tensor pb = b.permuted(a.indices());
  std::vector<cplx> data(a.data());
  const auto& db = pb.data();
  for (std::size_t i = 0; i < data.size(); ++i) data[i] -= db[i];
  return Tensor(a.indices(), std::move(data));
}

bool allclose(const Tensor& a, const Tensor& b, double rtol, double atol) {
  if (a.rank() != b.rank()) return false;
  for (const auto& i : a.indices())
    if (!b.has_index(i)) return false;
  Tensor pb = b.permuted(a.indices());
  double max_diff = 0.0;
  const auto& da = a.data();
  const auto& db = pb.data();
  for (std::size_t i = 0; i < da.size(); ++i)
    max_diff = std::max(max_diff, std::abs(da[i] - db[i]));
  return max_diff <= atol + rtol * a.max_abs();
}

Eigen::MatrixXcd to_matrix(const Tensor& t, std::span<const Index> rows,
                           std::span<const Index> cols) {
  std::vector<Index> order(rows.begin(), rows.end());
  order.insert(order.end(), cols.begin(), cols.end());
  Tensor p = t.permuted(order);
  const std::int64_t m = product_of_dims(rows);
  const std::int64_t n = product_of_dims(cols);
  return ConstRowMajorMap(p.data().data(), m, n);
}

Tensor from_matrix(const Eigen::MatrixXcd& mat, std::span<const Index> rows,
                   std::span<const Index> cols) {
  const std::int64_t m = product_of_dims(rows);
  const std::int64_t n = product_of_dims(cols);
  if (mat.rows() != m || mat.cols() != n)
    throw InvalidInputError("from_matrix(): shape mismatch");
  std::vector<cplx> data(static_cast<std::size_t>(m) * n);
  RowMajorMap(data.data(), m, n) = mat;
  std::vector<Index> idxs(rows.begin(), rows.end());
  idxs.insert(idxs.end(), cols.begin(), cols.end());
  return Tensor(std::move(idxs), std::move(data));
}

Factorization factorize(const Tensor& t, std::span<const Index> left_legs, int max_rank,
                        double cutoff) {
  if (left_legs.empty() || static_cast<int>(left_legs.size()) >= t.rank())
    throw InvalidPartitionError("factorize(): left legs must be a nonempty proper subset");
  if (max_rank < 1) throw InvalidInputError("factorize(): max_rank must be >= 1");
  for (const auto& l : left_legs)
    if (!t.has_index(l))
      throw InvalidPartitionError("factorize(): left leg not found in tensor");

  std::vector<Index> right_legs;
  for (const auto& i : t.indices()) {
    bool in_left = false;
    for (const auto& l : left_legs)
      if (l == i) { in_left = true; break; }
    if (!in_left) right_legs.push_back(i);
  }

  Eigen::MatrixXcd mat = to_matrix(t, left_legs, right_legs);
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(mat, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const int full = static_cast<int>(sv.size());

  int above = 0;
  const double floor = cutoff * (full > 0 ? sv(0) : 0.0);
  for (int i = 0; i < full; ++i)
    if (sv(i) > floor) ++above;
  int keep = std::max(1, std::min({max_rank, above, full}));

  double total = 0.0, kept = 0.0;
  for (int i = 0; i < full; ++i) {
    total += sv(i) * sv(i);
    if (i < keep) kept += sv(i) * sv(i);
  }

  Factorization f;
  f.bond = Index::make(keep, "svd");
  f.singular_values.assign(sv.data(), sv.data() + keep);
  f.discarded_weight = total > 0.0 ? std::max(0.0, (total - kept) / total) : 0.0;

  Eigen::MatrixXcd u = svd.matrixU().leftCols(keep);
  Eigen::MatrixXcd vh = svd.matrixV().leftCols(keep).adjoint();
  std::vector<Index> bond_only{f.bond};
  f.left = from_matrix(u, left_legs, bond_only);
  f.right = from_matrix(vh, bond_only, right_legs);
  return f;
}

namespace {

constexpr std::uint32_t kTensorMagic = 0x544e5447;  // "GTNT"
constexpr std::uint32_t kTensorVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw IoError("truncated tensor blob");
  return v;
}

}  // namespace

void Tensor::write(std::ostream& out) const {
  write_pod(out, kTensorMagic);
  write_pod(out, kTensorVersion);
  write_pod(out, static_cast<std::uint32_t>(rank()));
  // Ids are positional in the blob: process-global ids are transient, and
  // readers re-link legs by position, so stored blobs stay byte-stable.
  for (std::size_t k = 0; k < indices_.size(); ++k) {
    const auto& idx = indices_[k];
    write_pod(out, static_cast<std::uint64_t>(k));
    write_pod(out, static_cast<std::uint32_t>(idx.dim()));
    write_pod(out, static_cast<std::uint32_t>(idx.tag().size()));
    out.write(idx.tag().data(), static_cast<std::streamsize>(idx.tag().size()));
  }
  for (const auto& x : *data_) {
    write_pod(out, x.real());
    write_pod(out, x.imag());
  }
  if (!out) throw IoError("failed to write tensor blob");
}

Tensor Tensor::read(std::istream& in) {
  if (read_pod<std::uint32_t>(in) != kTensorMagic)
    throw IoError("bad tensor blob magic");
  if (read_pod<std::uint32_t>(in) != kTensorVersion)
    throw IoError("unsupported tensor blob version");
  const auto r = read_pod<std::uint32_t>(in);
  std::vector<Index> idxs;
  idxs.reserve(r);
  // Stored ids are re-created to stay globally unique within this process;
  // callers re-link legs by position (see NetworkState checkpoints).
  for (std::uint32_t k = 0; k < r; ++k) {
    (void)read_pod<std::uint64_t>(in);
    const auto dim = read_pod<std::uint32_t>(in);
    const auto tag_len = read_pod<std::uint32_t>(in);
    std::string tag(tag_len, '\0');
    in.read(tag.data(), tag_len);
    if (!in) throw IoError("truncated tensor blob");
    idxs.push_back(Index::make(static_cast<int>(dim), std::move(tag)));
  }
  std::int64_t n = 1;
  for (const auto& i : idxs) n *= i.dim();
  std::vector<cplx> data(static_cast<std::size_t>(n));
  for (auto& x : data) {
    double re = read_pod<double>(in);
    double im = read_pod<double>(in);
    x = cplx(re, im);
  }
  return Tensor(std::move(idxs), std::move(data));
}

}  // namespace glasstn
