#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "degenbranch/branching.hpp"
#include "degenbranch/quadrature.hpp"
#include "degenbranch/rng.hpp"
#include "degenbranch/stable_motion.hpp"
#include "degenbranch/test_function.hpp"

namespace degenbranch {

enum class CenteringMode { ExactInfinite, TruncationCorrected };

std::string_view to_string(CenteringMode m);
std::optional<CenteringMode> parse_centering_mode(std::string_view s);

struct FluctuationSample {
  double n = 0.0;
  double t = 0.0;
  double value = 0.0;
  std::uint64_t replicate_id = 0;
  std::uint64_t seed = 0;
  std::vector<double> half_widths;
  CenteringMode centering_mode = CenteringMode::TruncationCorrected;
  bool accuracy_flag = false;
  // |value(Delta) - value(Delta/2)| when this replicate was refined.
  std::optional<double> refinement_gap;
};

// Normalization F_n of the occupation fluctuation:
//   critical      sqrt(n^kappa ln n)
//   intermediate  n^((3 - bar_alpha) kappa / 2)
//   large         n^(kappa / 2)
double scaling_Fn(const ModelParams& params, const StableIndexVector& indices);

// int_box T_s phi(x) dx. Each coordinate factor is
//   (2 sigma sqrt(2 pi) / pi) int_0^inf e^{-sigma^2 z^2/2 - s z^alpha} cos(m z) sin(L z)/z dz
// (erf closed form at alpha = 2 or s = 0).
double box_mass(const TestFunction& phi, double s, const SimulationDomain& domain,
                const StableIndexVector& indices);

// Mean of <N(s), phi> for the system started from the Poisson field:
//   ExactInfinite        f_n(s) * intensity * int phi
//   TruncationCorrected  f_n(s) * intensity * int_box T_s phi
double centering_value(double s, const TestFunction& phi, const ModelParams& params,
                       const SimulationDomain& domain, const StableIndexVector& indices,
                       CenteringMode mode);

// int_{s0}^{s1} centering_value(s) ds; closed form for ExactInfinite,
// adaptive quadrature otherwise.
double centering_integral(double s0, double s1, const TestFunction& phi,
                          const ModelParams& params, const SimulationDomain& domain,
                          const StableIndexVector& indices, CenteringMode mode);

// Recording grid shared by every particle of a replicate: multiples of
// `spacing` (or spacing / 2 when refined) up to the largest horizon.
struct OccupationGrid {
  double spacing = 0.25;
  bool refine = false;
  // Absolute integration horizons n * t_j, increasing, multiples of spacing.
  std::vector<double> horizons;

  double record_step() const { return refine ? 0.5 * spacing : spacing; }
  std::vector<double> record_times() const;
  // Position of each horizon in record_times().
  std::vector<std::size_t> horizon_indices() const;
};

// int_0^{T_j} <N(s), phi> ds for each horizon T_j, by the trapezoid rule on
// each particle's life with nodes at its birth, the grid points and its
// death. `fine` uses every recorded point; `coarse` only the multiples of
// the spacing. Without refinement both coincide.
struct OccupationIntegrals {
  std::vector<double> coarse;
  std::vector<double> fine;
};

// Streaming accumulator following the tree-walk visitor interface.
class OccupationAccumulator {
 public:
  OccupationAccumulator(const TestFunction& phi, const OccupationGrid& grid);

  void begin(std::size_t id, std::optional<std::size_t> parent, double birth,
             std::span<const double> x);
  void point(double time, std::size_t record_index, std::span<const double> x);
  void died(double death, std::span<const double> x, int n_offspring, std::size_t first_child);
  void survived() {}

  // Adds the sums collected since the last drain to `out` (and `also`, when
  // given), then resets them.
  void drain_into(OccupationIntegrals& out, OccupationIntegrals* also = nullptr);
  OccupationIntegrals zero() const;

  static constexpr std::size_t kOffGrid = static_cast<std::size_t>(-1);

 private:
  void node(double time, double value, bool coarse);
  void credit(std::size_t j);

  const TestFunction& phi_;
  bool refine_;
  std::vector<double> horizons_;
  std::vector<std::size_t> horizon_index_;
  std::vector<double> coarse_;
  std::vector<double> fine_;
  double coarse_sum_ = 0.0, fine_sum_ = 0.0;
  double coarse_t_ = 0.0, coarse_v_ = 0.0;
  double fine_t_ = 0.0, fine_v_ = 0.0;
  std::size_t next_j_ = 0;
};

// A whole system: one tree per root of the Poisson field in the box.
struct SystemRealization {
  SimulationDomain domain;
  std::uint64_t replicate_id = 0;
  std::uint64_t seed = 0;
  std::vector<TreeRealization> trees;
  OccupationGrid grid;
};

SystemRealization simulate_system(const SimulationDomain& domain, const BranchingRates& rates,
                                  const StableIndexVector& indices, const OccupationGrid& grid,
                                  Stream& field_rng, Stream& branching_rng, Stream& motion_rng,
                                  std::size_t population_cap = kDefaultPopulationCap);

OccupationIntegrals occupation_integrals(const SystemRealization& system,
                                         const TestFunction& phi);

// One draw of <X_n(t), phi> from a simulated system; n * t must be one of
// the grid's horizons. The centering is integrated exactly over [0, nt]
// rather than on the grid. Sets accuracy_flag when the grid was refined and
// the two trapezoid values differ by more than refinement_tol.
FluctuationSample occupation_fluctuation(const SystemRealization& system,
                                         const TestFunction& phi, double t,
                                         const ModelParams& params,
                                         const StableIndexVector& indices, CenteringMode mode,
                                         double refinement_tol = 0.25);

// Everything one replicate of an experiment needs, sampled without
// materializing the trees. The secondary box, when present, must lie inside
// the primary one; its statistic reuses the trees rooted inside it.
struct ReplicatePlan {
  const StableIndexVector* indices = nullptr;
  BranchingRates rates{1.0, 0.0};
  const TestFunction* phi = nullptr;
  SimulationDomain primary{{1.0}};
  std::optional<SimulationDomain> secondary;
  OccupationGrid grid;
  std::size_t population_cap = kDefaultPopulationCap;
};

struct ReplicateOccupation {
  OccupationIntegrals primary;
  std::optional<OccupationIntegrals> secondary;
  std::size_t roots = 0;
  std::size_t particles = 0;
};

ReplicateOccupation simulate_occupation(const ReplicatePlan& plan, Stream& field_rng,
                                        Stream& branching_rng, Stream& motion_rng);

// Trapezoid approximation of int X(t) h(t) dt on a shared grid.
double time_integrated_statistic(std::span<const double> t_grid, std::span<const double> samples,
                                 std::span<const double> h_weights);

}  // namespace degenbranch
