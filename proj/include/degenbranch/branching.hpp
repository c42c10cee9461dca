#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "degenbranch/rng.hpp"
#include "degenbranch/stable_motion.hpp"

namespace degenbranch {

// Lifetime rate and degeneration rate of one system.
struct BranchingRates {
  double gamma;
  double delta;
};

// Parameterization of one experiment scale: delta_n = theta * n^(-kappa).
class ModelParams {
 public:
  ModelParams(double gamma, double theta, double kappa, double n);

  double gamma() const { return gamma_; }
  double theta() const { return theta_; }
  double kappa() const { return kappa_; }
  double n() const { return n_; }
  double delta_n() const { return delta_n_; }
  BranchingRates rates() const { return {gamma_, delta_n_}; }

 private:
  double gamma_;
  double theta_;
  double kappa_;
  double n_;
  double delta_n_;
};

// Offspring law at age a: two children with probability exp(-delta a) / 2,
// otherwise none.
struct OffspringLaw {
  double delta;

  double prob_two(double age) const;
  double mean(double age) const { return 2.0 * prob_two(age); }
};

int sample_offspring_count(double age, double delta, Stream& rng);

// Mean population at time s of a system started from one age-0 ancestor:
//   [1 + delta/(gamma-delta) (1 - e^{-(gamma-delta)s})] e^{-delta s}.
double expected_population(double s, double gamma, double delta);

// Closed-form integral of expected_population over [0, horizon].
double integrated_expected_population(double horizon, double gamma, double delta);

// Truncation box prod_k [-L_k, L_k] for the Poisson initial field.
class SimulationDomain {
 public:
  explicit SimulationDomain(std::vector<double> half_widths, double intensity = 1.0);

  std::size_t dim() const { return half_widths_.size(); }
  const std::vector<double>& half_widths() const { return half_widths_; }
  double intensity() const { return intensity_; }
  double volume() const;
  bool contains(std::span<const double> x) const;

 private:
  std::vector<double> half_widths_;
  double intensity_;
};

struct RootBirth {
  double time = 0.0;
  std::vector<double> position;
};

std::vector<RootBirth> sample_initial_field(const SimulationDomain& domain, Stream& rng);

struct PathPoint {
  double time;
  std::vector<double> position;
};

struct Particle {
  std::size_t id = 0;
  std::optional<std::size_t> parent;
  double birth_time = 0.0;
  // Empty when the particle is alive at the horizon.
  std::optional<double> death_time;
  std::vector<double> birth_position;
  // Strictly increasing times; first entry is (birth_time, birth_position).
  std::vector<PathPoint> recorded_path;
  // 0 or 2 after a split event; empty while alive at the horizon.
  std::optional<int> n_offspring;
  std::vector<std::size_t> children;

  bool alive_at(double s) const {
    return birth_time <= s && (!death_time || s < *death_time);
  }
};

struct TreeRealization {
  std::vector<Particle> particles;
  double horizon = 0.0;
  std::uint64_t seed = 0;
  // Stability indices of the motion that generated the paths.
  std::vector<double> alphas;
};

inline constexpr std::size_t kDefaultPopulationCap = 10'000'000;

struct TreeOptions {
  // Positions are also recorded at these times for every particle alive then.
  std::vector<double> record_times;
  std::size_t population_cap = kDefaultPopulationCap;
  std::uint64_t seed = 0;
};

// Simulates one ancestor's tree up to `horizon`. Lifetimes are Exp(gamma);
// at each death before the horizon the offspring count is drawn at the
// particle's age and the children start afresh (age 0) at the parent's
// death position. Motion increments come from `motion_rng`, lifetimes and
// offspring from `branching_rng`, so the tree shape does not depend on how
// densely the paths are recorded.
TreeRealization simulate_tree(const RootBirth& root, double horizon, const BranchingRates& rates,
                              const StableIndexVector& indices, Stream& branching_rng,
                              Stream& motion_rng, const TreeOptions& options = {});

TreeRealization simulate_tree(const RootBirth& root, double horizon, const BranchingRates& rates,
                              const StableIndexVector& indices, Stream& rng,
                              const TreeOptions& options = {});

struct ParticlePosition {
  std::size_t id;
  std::vector<double> position;
};

// Positions of the particles alive at time s. A position not yet recorded is
// generated by one exact increment from the particle's latest recorded time
// and stored, so repeated queries return identical values. Paths are only
// extended forward: a query strictly between two recorded times would need
// a stable bridge and raises DomainError.
std::vector<ParticlePosition> positions_at(TreeRealization& tree, double s, Stream& rng);

std::size_t count_alive(const TreeRealization& tree, double s);

}  // namespace degenbranch
