#include "glasstn/tensor.hpp"

#include <gtest/gtest.h>

#include <sstream>

#include "test_support.hpp"

using namespace glasstn;

TEST(Tensor, IdentityContractionRelabels) {
  Index i = Index::make(2, "i"), j = Index::make(2, "j");
  Tensor id = Tensor::identity(i, j);
  Tensor v({j}, {cplx(0.3, 0.1), cplx(-0.7, 2.0)});
  Tensor out = contract(id, v);
  ASSERT_EQ(out.rank(), 1);
  EXPECT_EQ(out.indices()[0], i);
  EXPECT_EQ(out.at({0}), cplx(0.3, 0.1));
  EXPECT_EQ(out.at({1}), cplx(-0.7, 2.0));
}

TEST(Tensor, ScalarProduct) {
  Tensor a(cplx(2.0)), b(cplx(3.0));
  Tensor c = contract(a, b);
  EXPECT_EQ(c.rank(), 0);
  EXPECT_EQ(c.scalar(), cplx(6.0));
}

TEST(Tensor, MatrixProductMatchesNaiveLoops) {
  std::mt19937_64 rng(7);
  Index i = Index::make(2), k = Index::make(3), j = Index::make(4);
  Tensor a = Tensor::random({i, k}, rng);
  Tensor b = Tensor::random({k, j}, rng);
  Tensor c = contract(a, b);
  for (int ii = 0; ii < 2; ++ii)
    for (int jj = 0; jj < 4; ++jj) {
      cplx s = 0.0;
      for (int kk = 0; kk < 3; ++kk) s += a.at({ii, kk}) * b.at({kk, jj});
      EXPECT_NEAR(std::abs(c.at({ii, jj}) - s), 0.0, 1e-12);
    }
}

TEST(Tensor, ContractionOrderIndependent) {
  std::mt19937_64 rng(11);
  Index i = Index::make(3), k = Index::make(2), j = Index::make(4);
  Tensor a = Tensor::random({i, k}, rng);
  Tensor b = Tensor::random({k, j}, rng);
  Tensor ab = contract(a, b);
  Tensor ba = contract(b, a);
  EXPECT_TRUE(allclose(ab, ba, 1e-13));
}

TEST(Tensor, ContractionAssociativeOnChains) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> d(1, 4);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Index> bonds;
    for (int k = 0; k < 4; ++k) bonds.push_back(Index::make(d(rng)));
    std::vector<Tensor> chain;
    chain.push_back(Tensor::random({bonds[0]}, rng));
    for (int k = 0; k + 1 < 4; ++k)
      chain.push_back(Tensor::random({bonds[k], bonds[k + 1]}, rng));
    chain.push_back(Tensor::random({bonds[3]}, rng));

    Tensor left = chain[0];
    for (std::size_t t = 1; t < chain.size(); ++t) left = contract(left, chain[t]);
    Tensor right = chain.back();
    for (int t = static_cast<int>(chain.size()) - 2; t >= 0; --t)
      right = contract(chain[t], right);
    double denom = std::max(1e-300, std::abs(right.scalar()));
    EXPECT_LT(std::abs(left.scalar() - right.scalar()) / denom, 1e-12);
  }
}

TEST(Tensor, DuplicateLegRejected) {
  Index i = Index::make(2);
  EXPECT_THROW(Tensor({i, i}), MalformedTensorError);
}

TEST(Tensor, FactorizeOuterProductIsRankOne) {
  std::mt19937_64 rng(5);
  Index i = Index::make(3), j = Index::make(4);
  Tensor u = Tensor::random({i}, rng);
  Tensor v = Tensor::random({j}, rng);
  Tensor t = contract(u, v);
  std::vector<Index> left{i};
  auto f = factorize(t, left, 1);
  ASSERT_EQ(f.bond.dim(), 1);
  Tensor rebuilt = contract(f.left.weighted(f.bond, f.singular_values), f.right);
  EXPECT_TRUE(allclose(rebuilt, t, 1e-12, 1e-12));
  EXPECT_NEAR(f.discarded_weight, 0.0, 1e-24);
}

TEST(Tensor, FactorizeIdentitySingularValues) {
  Index i = Index::make(2), j = Index::make(2);
  Tensor id = Tensor::identity(i, j);
  std::vector<Index> left{i};
  auto f = factorize(id, left, 2);
  ASSERT_EQ(f.singular_values.size(), 2u);
  EXPECT_NEAR(f.singular_values[0], 1.0, 1e-14);
  EXPECT_NEAR(f.singular_values[1], 1.0, 1e-14);
  Tensor rebuilt = contract(f.left.weighted(f.bond, f.singular_values), f.right);
  EXPECT_TRUE(allclose(rebuilt, id, 1e-13, 1e-13));
}

TEST(Tensor, TruncatedFactorizeErrorMatchesDiscardedSpectrum) {
  std::mt19937_64 rng(17);
  Index i = Index::make(4), j = Index::make(4);
  Tensor t = Tensor::random({i, j}, rng);

  // Independent full-decomposition oracle.
  Eigen::MatrixXcd m(4, 4);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) m(a, b) = t.at({a, b});
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
  Eigen::VectorXd sv = svd.singularValues();
  double expected_sq_err = sv(2) * sv(2) + sv(3) * sv(3);

  std::vector<Index> left{i};
  auto f = factorize(t, left, 2);
  Tensor rebuilt = contract(f.left.weighted(f.bond, f.singular_values), f.right);
  Tensor diff = subtract(rebuilt, t);
  double sq_err = diff.norm() * diff.norm();
  EXPECT_NEAR(sq_err, expected_sq_err, 1e-10);
  EXPECT_NEAR(f.discarded_weight, expected_sq_err / sv.squaredNorm(), 1e-12);
}

TEST(Tensor, FactorizeRoundTripAtFullRank) {
  std::mt19937_64 rng(23);
  Index i = Index::make(3), j = Index::make(2), k = Index::make(4);
  Tensor t = Tensor::random({i, j, k}, rng);
  std::vector<Index> left{i, j};
  auto f = factorize(t, left, 100);
  Tensor rebuilt = contract(f.left.weighted(f.bond, f.singular_values), f.right);
  Tensor diff = subtract(rebuilt, t);
  EXPECT_LT(diff.norm() / t.norm(), 1e-12);
  // Isometry over the shared bond.
  Tensor gram = contract(f.left.conj(), f.left.replaced(f.bond, f.bond.sibling()));
  for (int a = 0; a < f.bond.dim(); ++a)
    for (int b = 0; b < f.bond.dim(); ++b)
      EXPECT_NEAR(std::abs(gram.at({a, b}) - (a == b ? 1.0 : 0.0)), 0.0, 1e-12);
}

TEST(Tensor, FactorizeRejectsBadPartition) {
  std::mt19937_64 rng(2);
  Index i = Index::make(2), j = Index::make(2);
  Tensor t = Tensor::random({i, j}, rng);
  std::vector<Index> all{i, j};
  std::vector<Index> none{};
  EXPECT_THROW(factorize(t, all, 2), InvalidPartitionError);
  EXPECT_THROW(factorize(t, none, 2), InvalidPartitionError);
}

TEST(Tensor, PermutedMatchesManualIndexing) {
  std::mt19937_64 rng(31);
  Index i = Index::make(2), j = Index::make(3), k = Index::make(4);
  Tensor t = Tensor::random({i, j, k}, rng);
  Tensor p = t.permuted(std::vector<Index>{k, i, j});
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 4; ++c) EXPECT_EQ(t.at({a, b, c}), p.at({c, a, b}));
}

TEST(Tensor, SerializationRoundTripsBitExactly) {
  std::mt19937_64 rng(41);
  Index i = Index::make(2, "site:0"), j = Index::make(5, "virtual");
  Tensor t = Tensor::random({i, j}, rng);
  std::stringstream buf;
  t.write(buf);
  Tensor r = Tensor::read(buf);
  ASSERT_EQ(r.rank(), 2);
  EXPECT_EQ(r.indices()[0].dim(), 2);
  EXPECT_EQ(r.indices()[0].tag(), "site:0");
  EXPECT_EQ(r.indices()[1].dim(), 5);
  ASSERT_EQ(r.data().size(), t.data().size());
  for (std::size_t n = 0; n < t.data().size(); ++n) {
    EXPECT_EQ(r.data()[n].real(), t.data()[n].real());
    EXPECT_EQ(r.data()[n].imag(), t.data()[n].imag());
  }
}

TEST(Tensor, WeightedScalesHyperplanes) {
  Index i = Index::make(2), j = Index::make(2);
  Tensor t({i, j}, {1.0, 2.0, 3.0, 4.0});
  std::vector<double> w{2.0, 10.0};
  Tensor s = t.weighted(j, w);
  EXPECT_EQ(s.at({0, 0}), cplx(2.0));
  EXPECT_EQ(s.at({0, 1}), cplx(20.0));
  EXPECT_EQ(s.at({1, 0}), cplx(6.0));
  EXPECT_EQ(s.at({1, 1}), cplx(40.0));
}
