#include "degenbranch/branching.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "degenbranch/detail/tree_walk.hpp"
#include "degenbranch/error.hpp"

namespace degenbranch {

ModelParams::ModelParams(double gamma, double theta, double kappa, double n)
    : gamma_(gamma), theta_(theta), kappa_(kappa), n_(n) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw DomainError("gamma must be > 0");
  if (!(theta > 0.0) || !std::isfinite(theta)) throw DomainError("theta must be > 0");
  if (!(kappa > 0.0 && kappa < 1.0)) throw DomainError("kappa must lie in (0, 1)");
  if (!(n >= 1.0) || !std::isfinite(n)) throw DomainError("scale n must be >= 1");
  delta_n_ = theta * std::pow(n, -kappa);
  if (!(delta_n_ < gamma)) {
    throw DomainError(fmt::format("delta_n = {} must be below gamma = {}", delta_n_, gamma));
  }
}

double OffspringLaw::prob_two(double age) const { return 0.5 * std::exp(-delta * age); }

int sample_offspring_count(double age, double delta, Stream& rng) {
  if (!(age >= 0.0)) throw DomainError("offspring law needs age >= 0");
  if (!(delta >= 0.0)) throw DomainError("offspring law needs delta >= 0");
  return rng.uniform_open() < OffspringLaw{delta}.prob_two(age) ? 2 : 0;
}

namespace {

void check_rates(double gamma, double delta) {
  if (!(delta >= 0.0)) throw DomainError("delta must be >= 0");
  if (!(delta < gamma)) {
    throw DomainError(fmt::format("delta = {} must be below gamma = {}", delta, gamma));
  }
}

// int_0^T e^{-rate s} ds
double decay_integral(double rate, double horizon) {
  if (rate == 0.0) return horizon;
  return -std::expm1(-rate * horizon) / rate;
}

}  // namespace

double expected_population(double s, double gamma, double delta) {
  check_rates(gamma, delta);
  if (!(s >= 0.0)) throw DomainError("expected_population needs s >= 0");
  const double g = gamma - delta;
  return (1.0 - delta / g * std::expm1(-g * s)) * std::exp(-delta * s);
}

double integrated_expected_population(double horizon, double gamma, double delta) {
  check_rates(gamma, delta);
  if (!(horizon >= 0.0)) throw DomainError("horizon must be >= 0");
  const double ratio = delta / (gamma - delta);
  return (1.0 + ratio) * decay_integral(delta, horizon) - ratio * decay_integral(gamma, horizon);
}

SimulationDomain::SimulationDomain(std::vector<double> half_widths, double intensity)
    : half_widths_(std::move(half_widths)), intensity_(intensity) {
  if (half_widths_.empty()) throw DomainError("simulation domain needs d >= 1");
  for (double l : half_widths_) {
    if (!(l > 0.0) || !std::isfinite(l)) {
      throw DomainError("simulation box half-widths must be finite and > 0");
    }
  }
  if (!(intensity_ > 0.0)) throw DomainError("field intensity must be > 0");
}

double SimulationDomain::volume() const {
  double v = 1.0;
  for (double l : half_widths_) v *= 2.0 * l;
  return v;
}

bool SimulationDomain::contains(std::span<const double> x) const {
  for (std::size_t k = 0; k < half_widths_.size(); ++k) {
    if (std::abs(x[k]) > half_widths_[k]) return false;
  }
  return true;
}

std::vector<RootBirth> sample_initial_field(const SimulationDomain& domain, Stream& rng) {
  const std::uint64_t count = rng.poisson(domain.volume() * domain.intensity());
  std::vector<RootBirth> roots(count);
  for (auto& r : roots) {
    r.position.resize(domain.dim());
    for (std::size_t k = 0; k < domain.dim(); ++k) {
      const double l = domain.half_widths()[k];
      r.position[k] = rng.uniform(-l, l);
    }
  }
  return roots;
}

namespace {

class TreeBuilder {
 public:
  explicit TreeBuilder(TreeRealization& tree) : tree_(tree) {}

  void begin(std::size_t id, std::optional<std::size_t> parent, double birth,
             std::span<const double> x) {
    if (tree_.particles.size() <= id) tree_.particles.resize(id + 1);
    current_ = id;
    Particle& p = tree_.particles[id];
    p.id = id;
    p.parent = parent;
    p.birth_time = birth;
    p.birth_position.assign(x.begin(), x.end());
    p.recorded_path.push_back({birth, p.birth_position});
  }

  void point(double time, std::size_t, std::span<const double> x) {
    tree_.particles[current_].recorded_path.push_back({time, {x.begin(), x.end()}});
  }

  void died(double death, std::span<const double> x, int n_offspring, std::size_t first_child) {
    Particle& p = tree_.particles[current_];
    p.death_time = death;
    p.n_offspring = n_offspring;
    p.recorded_path.push_back({death, {x.begin(), x.end()}});
    if (n_offspring == 2) p.children = {first_child, first_child + 1};
  }

  void survived() {}

 private:
  TreeRealization& tree_;
  std::size_t current_ = 0;
};

}  // namespace

TreeRealization simulate_tree(const RootBirth& root, double horizon, const BranchingRates& rates,
                              const StableIndexVector& indices, Stream& branching_rng,
                              Stream& motion_rng, const TreeOptions& options) {
  check_rates(rates.gamma, rates.delta);
  if (!std::is_sorted(options.record_times.begin(), options.record_times.end())) {
    throw DomainError("record times must be sorted");
  }
  TreeRealization tree;
  tree.horizon = horizon;
  tree.seed = options.seed;
  tree.alphas = indices.alphas();
  TreeBuilder builder(tree);
  std::size_t generated = 0;
  detail::walk_tree(root, horizon, rates, indices, options.record_times, branching_rng,
                    motion_rng, options.population_cap, generated, builder);
  return tree;
}

TreeRealization simulate_tree(const RootBirth& root, double horizon, const BranchingRates& rates,
                              const StableIndexVector& indices, Stream& rng,
                              const TreeOptions& options) {
  return simulate_tree(root, horizon, rates, indices, rng, rng, options);
}

std::vector<ParticlePosition> positions_at(TreeRealization& tree, double s, Stream& rng) {
  if (!(s >= 0.0 && s <= tree.horizon)) {
    throw DomainError(fmt::format("query time {} outside [0, {}]", s, tree.horizon));
  }
  std::vector<ParticlePosition> out;
  for (Particle& p : tree.particles) {
    if (!p.alive_at(s)) continue;
    auto& path = p.recorded_path;
    auto after = std::upper_bound(path.begin(), path.end(), s,
                                  [](double t, const PathPoint& q) { return t < q.time; });
    const PathPoint& prev = *(after - 1);
    if (prev.time == s) {
      out.push_back({p.id, prev.position});
      continue;
    }
    if (after != path.end()) {
      throw DomainError(fmt::format(
          "particle {}: time {} lies between recorded times {} and {}; paths can only be "
          "extended forward",
          p.id, s, prev.time, after->time));
    }
    std::vector<double> x = prev.position;
    const double dt = s - prev.time;
    for (std::size_t k = 0; k < x.size(); ++k) {
      x[k] += sample_stable_increment(tree.alphas[k], dt, rng);
    }
    path.push_back({s, x});
    out.push_back({p.id, std::move(x)});
  }
  return out;
}

std::size_t count_alive(const TreeRealization& tree, double s) {
  return static_cast<std::size_t>(std::count_if(
      tree.particles.begin(), tree.particles.end(), [s](const Particle& p) { return p.alive_at(s); }));
}

}  // namespace degenbranch
