#ifndef GLASSTN_CONTRACTION_HPP
#define GLASSTN_CONTRACTION_HPP

#include <limits>
#include <vector>

#include "glasstn/tensor.hpp"

namespace glasstn {

// One pairwise contraction: positions into the working list; both slots are
// consumed and the result is appended at the back.
struct ContractionStep {
  int lhs = 0;
  int rhs = 0;
};

struct ContractionPlan {
  std::vector<ContractionStep> steps;
  double cost = 0.0;  // total scalar multiplications
};

struct ContractionOptions {
  int exhaustive_limit = 8;  // optimal order by subset DP up to this many tensors
  double cost_budget = std::numeric_limits<double>::infinity();
};

// Pairwise-contraction order over the operand leg lists: exhaustive subset DP
// (optimal under the flop-count metric) up to exhaustive_limit operands,
// deterministic greedy beyond.
ContractionPlan plan_contraction(const std::vector<std::vector<Index>>& operands,
                                 int exhaustive_limit = 8);

Tensor execute_plan(std::vector<Tensor> tensors, const ContractionPlan& plan);

// Plan + execute; throws BudgetExceededError when the planned cost exceeds
// options.cost_budget.
Tensor contract_network(std::vector<Tensor> tensors,
                        const ContractionOptions& options = {});

}  // namespace glasstn

#endif
