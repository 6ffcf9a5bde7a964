#include "glasstn/contraction.hpp"

#include <gtest/gtest.h>

#include <algorithm>

#include "test_support.hpp"

using namespace glasstn;
using glasstn::tsupport::nested_loop_contract;

TEST(Contraction, SingleScalarPassesThrough) {
  Tensor s(cplx(4.5, -1.0));
  Tensor out = contract_network({s});
  EXPECT_EQ(out.scalar(), cplx(4.5, -1.0));
}

TEST(Contraction, FourCycleMatchesNestedLoopOracle) {
  std::mt19937_64 rng(19);
  Graph g = make_graph(4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}});
  auto tensors = tsupport::random_closed_network(g, 2, rng);
  cplx expect = nested_loop_contract(tensors);
  cplx got = contract_network(tensors).scalar();
  EXPECT_LT(std::abs(got - expect), 1e-12 * std::max(1.0, std::abs(expect)));
}

TEST(Contraction, OperandOrderInvariant) {
  std::mt19937_64 rng(29);
  Graph g = make_graph(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 4}, {1, 3}});
  auto tensors = tsupport::random_closed_network_mixed(g, 3, rng);
  cplx reference = contract_network(tensors).scalar();
  std::mt19937_64 shuffle_rng(1);
  for (int trial = 0; trial < 5; ++trial) {
    auto shuffled = tensors;
    std::shuffle(shuffled.begin(), shuffled.end(), shuffle_rng);
    cplx got = contract_network(shuffled).scalar();
    EXPECT_LT(std::abs(got - reference), 1e-10 * std::max(1.0, std::abs(reference)));
  }
}

TEST(Contraction, GreedyPathAgreesWithExhaustive) {
  std::mt19937_64 rng(37);
  Graph g = make_graph(6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {0, 5}, {1, 4}});
  auto tensors = tsupport::random_closed_network(g, 2, rng);
  ContractionOptions exhaustive;
  exhaustive.exhaustive_limit = 8;
  ContractionOptions greedy;
  greedy.exhaustive_limit = 1;
  cplx a = contract_network(tensors, exhaustive).scalar();
  cplx b = contract_network(tensors, greedy).scalar();
  EXPECT_LT(std::abs(a - b), 1e-10 * std::max(1.0, std::abs(a)));
}

TEST(Contraction, ExhaustivePlanNeverCostsMoreThanGreedy) {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 10; ++trial) {
    Graph g = tsupport::random_loopy_graph(9, rng);
    auto tensors = tsupport::random_closed_network_mixed(g, 4, rng);
    std::vector<std::vector<Index>> ops;
    for (const auto& t : tensors) ops.push_back(t.indices());
    if (ops.size() < 2) continue;
    auto dp = plan_contraction(ops, 12);
    auto greedy = plan_contraction(ops, 1);
    EXPECT_LE(dp.cost, greedy.cost * (1.0 + 1e-12));
  }
}

TEST(Contraction, BudgetEnforced) {
  std::mt19937_64 rng(53);
  Index a = Index::make(8), b = Index::make(8), c = Index::make(8);
  Tensor x = Tensor::random({a, b}, rng);
  Tensor y = Tensor::random({b, c}, rng);
  ContractionOptions opts;
  opts.cost_budget = 10;  // 8*8*8 = 512 multiplications needed
  EXPECT_THROW(contract_network({x, y}, opts), BudgetExceededError);
}

TEST(Contraction, TripleSharedLegRejected) {
  Index a = Index::make(2);
  Index b = Index::make(2), c = Index::make(2);
  Tensor x({a, b});
  Tensor y({a, c});
  Tensor z({a, b.sibling(), c.sibling()});
  EXPECT_THROW(contract_network({x, y, z}), InvalidInputError);
}

TEST(Contraction, DisconnectedNetworkContracts) {
  std::mt19937_64 rng(61);
  Index a = Index::make(2);
  Index b = Index::make(3);
  Tensor x = Tensor::random({a}, rng);
  Tensor x2 = Tensor::random({a}, rng);
  Tensor y = Tensor::random({b}, rng);
  Tensor y2 = Tensor::random({b}, rng);
  cplx expect = contract(x, x2).scalar() * contract(y, y2).scalar();
  cplx got = contract_network({x, y, x2, y2}).scalar();
  EXPECT_LT(std::abs(got - expect), 1e-12 * std::max(1.0, std::abs(expect)));
}
