#pragma once

#include <functional>
#include <string>
#include <vector>

namespace degenbranch {

struct SelftestCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Oracle and invariant suite: characteristic functions of the sampler,
// Plancherel, semigroup values, the one-ancestor mean identities and the
// closed-form constants. `progress` is called after each check.
std::vector<SelftestCheck> run_selftest(
    const std::function<void(const SelftestCheck&)>& progress = {});

}  // namespace degenbranch
