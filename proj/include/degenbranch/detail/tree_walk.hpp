#pragma once

#include <algorithm>
#include <fmt/format.h>
#include <optional>
#include <span>
#include <vector>

#include "degenbranch/branching.hpp"
#include "degenbranch/error.hpp"

namespace degenbranch::detail {

// Depth-first traversal of one ancestor's tree. Subtrees are independent, so
// visiting them one after another has the same law as a global event queue
// and keeps the stream consumption order fixed.
//
// Visitor interface:
//   begin(id, parent, birth_time, position)
//   point(time, record_index, position)          record time inside the life
//   died(death_time, position, n_offspring, first_child_id)
//   survived()                                   alive at the horizon
template <class Visitor>
void walk_tree(const RootBirth& root, double horizon, const BranchingRates& rates,
               const StableIndexVector& indices, std::span<const double> record_times,
               Stream& branching_rng, Stream& motion_rng, std::size_t population_cap,
               std::size_t& generated, Visitor& visitor) {
  const std::size_t d = indices.dim();
  if (root.position.size() != d) throw DomainError("root position dimension mismatch");
  if (!(horizon > root.time)) throw DomainError("horizon must exceed the root birth time");

  struct Pending {
    std::size_t id;
    std::optional<std::size_t> parent;
    double birth;
  };
  std::vector<Pending> stack;
  std::vector<double> stacked_positions;
  stack.push_back({0, std::nullopt, root.time});
  stacked_positions.insert(stacked_positions.end(), root.position.begin(), root.position.end());
  std::size_t next_id = 1;
  std::vector<double> x(d);

  auto advance = [&](double dt) {
    for (std::size_t k = 0; k < d; ++k) {
      x[k] += sample_stable_increment(indices.alpha(k), dt, motion_rng);
    }
  };

  while (!stack.empty()) {
    const Pending p = stack.back();
    stack.pop_back();
    std::copy(stacked_positions.end() - static_cast<std::ptrdiff_t>(d), stacked_positions.end(),
              x.begin());
    stacked_positions.resize(stacked_positions.size() - d);
    if (++generated > population_cap) {
      throw PopulationExplosionError(
          fmt::format("population cap of {} particles exceeded", population_cap));
    }
    visitor.begin(p.id, p.parent, p.birth, std::span<const double>(x));

    const double lifetime = branching_rng.exponential(rates.gamma);
    const double death = p.birth + lifetime;
    const bool dies = death < horizon;
    const double end = dies ? death : horizon;

    double last = p.birth;
    auto it = std::upper_bound(record_times.begin(), record_times.end(), p.birth);
    for (; it != record_times.end() && (*it < end || (!dies && *it == end)); ++it) {
      advance(*it - last);
      last = *it;
      visitor.point(*it, static_cast<std::size_t>(it - record_times.begin()),
                    std::span<const double>(x));
    }
    if (!dies) {
      visitor.survived();
      continue;
    }
    advance(death - last);
    const int children = sample_offspring_count(lifetime, rates.delta, branching_rng);
    visitor.died(death, std::span<const double>(x), children, next_id);
    if (children == 2) {
      // Second child pushed first so the first child is visited first.
      stack.push_back({next_id + 1, p.id, death});
      stacked_positions.insert(stacked_positions.end(), x.begin(), x.end());
      stack.push_back({next_id, p.id, death});
      stacked_positions.insert(stacked_positions.end(), x.begin(), x.end());
      next_id += 2;
    }
  }
}

}  // namespace degenbranch::detail
