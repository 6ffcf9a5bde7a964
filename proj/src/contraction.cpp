#include "glasstn/contraction.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <map>
#include <unordered_map>

namespace glasstn {

namespace {

constexpr int kMaxTrackedIds = 256;

struct IdMask {
  std::array<std::uint64_t, kMaxTrackedIds / 64> w{};

  void set(int bit) { w[bit >> 6] |= (std::uint64_t{1} << (bit & 63)); }
  bool any() const {
    for (auto x : w)
      if (x) return true;
    return false;
  }
  IdMask operator|(const IdMask& o) const {
    IdMask r;
    for (std::size_t i = 0; i < w.size(); ++i) r.w[i] = w[i] | o.w[i];
    return r;
  }
  IdMask operator&(const IdMask& o) const {
    IdMask r;
    for (std::size_t i = 0; i < w.size(); ++i) r.w[i] = w[i] & o.w[i];
    return r;
  }
};

double union_dim_product(const IdMask& m, const std::vector<double>& dims) {
  double p = 1.0;
  for (std::size_t word = 0; word < m.w.size(); ++word) {
    std::uint64_t bits = m.w[word];
    while (bits) {
      int b = std::countr_zero(bits);
      bits &= bits - 1;
      p *= dims[word * 64 + b];
    }
  }
  return p;
}

struct IndexedOperands {
  std::vector<IdMask> masks;     // per operand
  std::vector<double> dims;      // per tracked id
  IdMask open;                   // ids occurring exactly once overall
  bool ok = true;                // false when id count exceeds the tracker
};

IndexedOperands index_operands(const std::vector<std::vector<Index>>& operands) {
  IndexedOperands out;
  std::unordered_map<std::uint64_t, int> slot;
  std::vector<int> occurrences;
  out.masks.resize(operands.size());
  for (std::size_t t = 0; t < operands.size(); ++t) {
    for (const auto& idx : operands[t]) {
      auto it = slot.find(idx.id());
      int s;
      if (it == slot.end()) {
        s = static_cast<int>(out.dims.size());
        if (s >= kMaxTrackedIds) {
          out.ok = false;
          return out;
        }
        slot.emplace(idx.id(), s);
        out.dims.push_back(static_cast<double>(idx.dim()));
        occurrences.push_back(0);
      } else {
        s = it->second;
      }
      occurrences[s] += 1;
      if (occurrences[s] > 2)
        throw InvalidInputError("index id appears in more than two operands");
      out.masks[t].set(s);
    }
  }
  for (std::size_t s = 0; s < occurrences.size(); ++s)
    if (occurrences[s] == 1) out.open.set(static_cast<int>(s));
  return out;
}

// Free legs of a group = legs shared with the outside, plus globally open legs.
IdMask free_mask(const IdMask& in_group, const IdMask& outside, const IdMask& open) {
  return in_group & (outside | open);
}

ContractionPlan plan_exhaustive(const IndexedOperands& ops) {
  const int n = static_cast<int>(ops.masks.size());
  const std::uint32_t full = (n == 32) ? 0xffffffffu : ((1u << n) - 1);

  std::vector<IdMask> group_union(full + 1);
  for (int i = 0; i < n; ++i) group_union[1u << i] = ops.masks[i];
  for (std::uint32_t m = 1; m <= full; ++m) {
    if (std::popcount(m) < 2) continue;
    std::uint32_t low = m & (~m + 1);
    group_union[m] = group_union[low] | group_union[m ^ low];
  }

  std::vector<double> best(full + 1, std::numeric_limits<double>::infinity());
  std::vector<std::uint32_t> split(full + 1, 0);
  for (int i = 0; i < n; ++i) best[1u << i] = 0.0;

  for (std::uint32_t m = 1; m <= full; ++m) {
    if (std::popcount(m) < 2) continue;
    IdMask outside;
    for (int i = 0; i < n; ++i)
      if (!(m & (1u << i))) outside = outside | ops.masks[i];
    for (std::uint32_t s = (m - 1) & m; s; s = (s - 1) & m) {
      std::uint32_t c = m ^ s;
      if (s > c) continue;  // unordered split
      IdMask fa = free_mask(group_union[s], outside | group_union[c], ops.open);
      IdMask fb = free_mask(group_union[c], outside | group_union[s], ops.open);
      double step = union_dim_product(fa | fb, ops.dims);
      double cost = best[s] + best[c] + step;
      if (cost < best[m]) {
        best[m] = cost;
        split[m] = s;
      }
    }
  }

  // Unfold the split tree into steps over a working list. Slots: 0..n-1 are
  // the inputs; results are appended in execution order.
  ContractionPlan plan;
  plan.cost = best[full];
  struct Frame { std::uint32_t mask; };
  // Post-order emission via recursion on the split tree.
  std::vector<std::pair<std::uint32_t, int>> slot_of_mask;  // resolved groups
  int next_slot = n;
  std::vector<int> slot_lookup(full + 1, -1);
  for (int i = 0; i < n; ++i) slot_lookup[1u << i] = i;

  auto emit = [&](auto&& self, std::uint32_t mask) -> int {
    if (slot_lookup[mask] >= 0) return slot_lookup[mask];
    int a = self(self, split[mask]);
    int b = self(self, mask ^ split[mask]);
    plan.steps.push_back({std::min(a, b), std::max(a, b)});
    slot_lookup[mask] = next_slot++;
    return slot_lookup[mask];
  };
  emit(emit, full);
  return plan;
}

ContractionPlan plan_greedy(const IndexedOperands& ops) {
  const int n = static_cast<int>(ops.masks.size());
  ContractionPlan plan;
  struct Live {
    int slot;
    IdMask mask;
  };
  std::vector<Live> live;
  live.reserve(n);
  for (int i = 0; i < n; ++i) live.push_back({i, ops.masks[i]});
  int next_slot = n;

  while (live.size() > 1) {
    double best_cost = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 1;
    bool best_shares = false;
    for (std::size_t i = 0; i < live.size(); ++i) {
      for (std::size_t j = i + 1; j < live.size(); ++j) {
        IdMask outside = ops.open;
        for (std::size_t k = 0; k < live.size(); ++k)
          if (k != i && k != j) outside = outside | live[k].mask;
        IdMask fa = free_mask(live[i].mask, outside | live[j].mask, ops.open);
        IdMask fb = free_mask(live[j].mask, outside | live[i].mask, ops.open);
        double cost = union_dim_product(fa | fb, ops.dims);
        bool shares = (live[i].mask & live[j].mask).any();
        if (cost < best_cost || (cost == best_cost && shares && !best_shares)) {
          best_cost = cost;
          bi = i;
          bj = j;
          best_shares = shares;
        }
      }
    }
    plan.cost += best_cost;
    plan.steps.push_back({live[bi].slot, live[bj].slot});
    Live merged{next_slot++, live[bi].mask | live[bj].mask};
    live.erase(live.begin() + static_cast<std::ptrdiff_t>(bj));
    live.erase(live.begin() + static_cast<std::ptrdiff_t>(bi));
    live.push_back(merged);
  }
  return plan;
}

}  // namespace

ContractionPlan plan_contraction(const std::vector<std::vector<Index>>& operands,
                                 int exhaustive_limit) {
  if (operands.empty())
    throw InvalidInputError("plan_contraction(): no operands");
  if (operands.size() == 1) return ContractionPlan{};

  IndexedOperands ops = index_operands(operands);
  if (!ops.ok) {
    // Too many distinct legs for the exhaustive tracker; fall back to a
    // pairwise left fold which has no per-id bookkeeping.
    ContractionPlan plan;
    int next_slot = static_cast<int>(operands.size());
    int acc = 0;
    for (int i = 1; i < static_cast<int>(operands.size()); ++i) {
      plan.steps.push_back({acc, i});
      acc = next_slot++;
    }
    plan.cost = std::numeric_limits<double>::infinity();
    return plan;
  }
  if (static_cast<int>(operands.size()) <= exhaustive_limit)
    return plan_exhaustive(ops);
  return plan_greedy(ops);
}

Tensor execute_plan(std::vector<Tensor> tensors, const ContractionPlan& plan) {
  if (tensors.empty()) throw InvalidInputError("execute_plan(): no tensors");
  std::vector<Tensor> slots = std::move(tensors);
  std::vector<bool> alive(slots.size(), true);
  for (const auto& step : plan.steps) {
    slots.push_back(contract(slots[step.lhs], slots[step.rhs]));
    alive[step.lhs] = false;
    alive[step.rhs] = false;
    alive.push_back(true);
  }
  Tensor out;
  bool found = false;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (!alive[i]) continue;
    out = found ? contract(out, slots[i]) : slots[i];
    found = true;
  }
  if (!found) throw InvalidInputError("execute_plan(): empty result");
  return out;
}

Tensor contract_network(std::vector<Tensor> tensors, const ContractionOptions& options) {
  std::vector<std::vector<Index>> operands;
  operands.reserve(tensors.size());
  for (const auto& t : tensors) operands.push_back(t.indices());
  ContractionPlan plan = plan_contraction(operands, options.exhaustive_limit);
  if (plan.cost > options.cost_budget)
    throw BudgetExceededError("contraction cost exceeds the configured budget");
  return execute_plan(std::move(tensors), plan);
}

}  // namespace glasstn
