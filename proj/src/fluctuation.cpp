#include "degenbranch/fluctuation.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numbers>

#include "degenbranch/detail/tree_walk.hpp"
#include "degenbranch/error.hpp"

namespace degenbranch {

namespace {

constexpr double kPi = std::numbers::pi;

// int_{-L}^{L} of one Gaussian factor after time s.
double box_mass_coordinate(double center, double width, double alpha, double s, double half) {
  if (s == 0.0 || alpha == 2.0) {
    const double spread = std::sqrt(2.0 * (width * width + 2.0 * s));
    return width * std::sqrt(0.5 * kPi) *
           (std::erf((half - center) / spread) + std::erf((half + center) / spread));
  }
  const FrequencyWindow win = frequency_window(width, alpha, s);
  const double mass = width * std::sqrt(2.0 * kPi);
  const double prefactor = 2.0 * mass / kPi;
  auto integrand = [&](double z) {
    return std::exp(-0.5 * width * width * z * z - s * std::pow(z, alpha)) *
           std::cos(center * z) * std::sin(half * z) / z;
  };
  const auto breaks = oscillation_breaks(win.upper, half + std::abs(center));
  const quad::Options opt{1e-9 * mass / prefactor, 1e-9, 4000};
  const quad::Result r = quad::require_converged(quad::integrate_panels(integrand, breaks, opt),
                                                 "box mass Fourier integral");
  return prefactor * r.value;
}

std::size_t snap_to_grid(double time, double step) {
  const double k = std::round(time / step);
  if (!(k >= 1.0) || std::abs(k * step - time) > 1e-9 * std::max(1.0, time)) {
    throw DomainError(
        fmt::format("time {} is not a positive multiple of the grid step {}", time, step));
  }
  return static_cast<std::size_t>(k);
}

}  // namespace

std::string_view to_string(CenteringMode m) {
  return m == CenteringMode::ExactInfinite ? "ExactInfinite" : "TruncationCorrected";
}

std::optional<CenteringMode> parse_centering_mode(std::string_view s) {
  if (s == "ExactInfinite") return CenteringMode::ExactInfinite;
  if (s == "TruncationCorrected") return CenteringMode::TruncationCorrected;
  return std::nullopt;
}

double scaling_Fn(const ModelParams& params, const StableIndexVector& indices) {
  const double n = params.n();
  const double kappa = params.kappa();
  switch (indices.regime()) {
    case Regime::Critical:
      if (n < 2.0) throw DomainError("critical normalization needs n >= 2");
      return std::sqrt(std::pow(n, kappa) * std::log(n));
    case Regime::Intermediate:
      return std::pow(n, 0.5 * (3.0 - indices.bar_alpha()) * kappa);
    case Regime::Large:
      return std::pow(n, 0.5 * kappa);
    case Regime::Subcritical:
      break;
  }
  throw UnsupportedRegimeError(fmt::format(
      "no fluctuation normalization for bar_alpha = {} <= 1", indices.bar_alpha()));
}

double box_mass(const TestFunction& phi, double s, const SimulationDomain& domain,
                const StableIndexVector& indices) {
  if (phi.dim() != indices.dim() || domain.dim() != indices.dim()) {
    throw DomainError("box_mass: dimension mismatch");
  }
  if (!(s >= 0.0)) throw DomainError("box_mass needs s >= 0");
  double total = 0.0;
  for (const auto& term : phi.terms()) {
    if (term.amplitude() == 0.0) continue;
    double product = term.amplitude();
    for (std::size_t k = 0; k < indices.dim(); ++k) {
      product *= box_mass_coordinate(term.centers()[k], term.widths()[k], indices.alpha(k), s,
                                     domain.half_widths()[k]);
    }
    total += product;
  }
  return total;
}

double centering_value(double s, const TestFunction& phi, const ModelParams& params,
                       const SimulationDomain& domain, const StableIndexVector& indices,
                       CenteringMode mode) {
  if (!(s >= 0.0 && s <= params.n())) {
    throw DomainError(fmt::format("centering time {} outside [0, n = {}]", s, params.n()));
  }
  const double f = expected_population(s, params.gamma(), params.delta_n());
  const double mass =
      mode == CenteringMode::ExactInfinite ? phi.integral() : box_mass(phi, s, domain, indices);
  return f * domain.intensity() * mass;
}

double centering_integral(double s0, double s1, const TestFunction& phi,
                          const ModelParams& params, const SimulationDomain& domain,
                          const StableIndexVector& indices, CenteringMode mode) {
  if (!(0.0 <= s0 && s0 <= s1 && s1 <= params.n())) {
    throw DomainError(
        fmt::format("centering interval [{}, {}] outside [0, n = {}]", s0, s1, params.n()));
  }
  const double gamma = params.gamma();
  const double delta = params.delta_n();
  if (mode == CenteringMode::ExactInfinite) {
    return domain.intensity() * phi.integral() *
           (integrated_expected_population(s1, gamma, delta) -
            integrated_expected_population(s0, gamma, delta));
  }
  if (s0 == s1) return 0.0;
  double scale = 0.0;
  for (const auto& term : phi.terms()) scale += std::abs(term.integral());
  if (scale == 0.0) return 0.0;
  auto integrand = [&](double s) {
    return expected_population(s, gamma, delta) * box_mass(phi, s, domain, indices);
  };
  const quad::Options opt{1e-10 * scale * (s1 - s0), 1e-10, 2000};
  const quad::Result r =
      quad::require_converged(quad::integrate(integrand, s0, s1, opt), "centering integral");
  return domain.intensity() * r.value;
}

std::vector<double> OccupationGrid::record_times() const {
  if (!(spacing > 0.0)) throw DomainError("grid spacing must be > 0");
  if (horizons.empty()) throw DomainError("grid needs at least one horizon");
  const double step = record_step();
  const std::size_t count = snap_to_grid(horizons.back(), step);
  std::vector<double> out(count);
  for (std::size_t k = 0; k < count; ++k) out[k] = static_cast<double>(k + 1) * step;
  return out;
}

std::vector<std::size_t> OccupationGrid::horizon_indices() const {
  std::vector<std::size_t> out;
  out.reserve(horizons.size());
  for (std::size_t j = 0; j < horizons.size(); ++j) {
    if (j > 0 && !(horizons[j] > horizons[j - 1])) {
      throw DomainError("grid horizons must be increasing");
    }
    snap_to_grid(horizons[j], spacing);
    out.push_back(snap_to_grid(horizons[j], record_step()) - 1);
  }
  return out;
}

OccupationAccumulator::OccupationAccumulator(const TestFunction& phi, const OccupationGrid& grid)
    : phi_(phi),
      refine_(grid.refine),
      horizons_(grid.horizons),
      horizon_index_(grid.horizon_indices()),
      coarse_(grid.horizons.size(), 0.0),
      fine_(grid.horizons.size(), 0.0) {}

void OccupationAccumulator::begin(std::size_t, std::optional<std::size_t>, double birth,
                                  std::span<const double> x) {
  const double v = phi_(x);
  coarse_sum_ = fine_sum_ = 0.0;
  coarse_t_ = fine_t_ = birth;
  coarse_v_ = fine_v_ = v;
  next_j_ = static_cast<std::size_t>(
      std::upper_bound(horizons_.begin(), horizons_.end(), birth) - horizons_.begin());
}

void OccupationAccumulator::node(double time, double value, bool coarse) {
  fine_sum_ += 0.5 * (time - fine_t_) * (value + fine_v_);
  fine_t_ = time;
  fine_v_ = value;
  if (coarse) {
    coarse_sum_ += 0.5 * (time - coarse_t_) * (value + coarse_v_);
    coarse_t_ = time;
    coarse_v_ = value;
  }
}

void OccupationAccumulator::credit(std::size_t j) {
  coarse_[j] += coarse_sum_;
  fine_[j] += fine_sum_;
}

void OccupationAccumulator::point(double time, std::size_t record_index,
                                  std::span<const double> x) {
  const bool coarse =
      record_index == kOffGrid || !refine_ || (record_index + 1) % 2 == 0;
  node(time, phi_(x), coarse);
  while (next_j_ < horizons_.size() && horizon_index_[next_j_] == record_index) {
    credit(next_j_++);
  }
}

void OccupationAccumulator::died(double death, std::span<const double> x, int, std::size_t) {
  node(death, phi_(x), true);
  while (next_j_ < horizons_.size()) credit(next_j_++);
}

OccupationIntegrals OccupationAccumulator::zero() const {
  return {std::vector<double>(horizons_.size(), 0.0), std::vector<double>(horizons_.size(), 0.0)};
}

void OccupationAccumulator::drain_into(OccupationIntegrals& out, OccupationIntegrals* also) {
  for (std::size_t j = 0; j < horizons_.size(); ++j) {
    out.coarse[j] += coarse_[j];
    out.fine[j] += fine_[j];
    if (also) {
      also->coarse[j] += coarse_[j];
      also->fine[j] += fine_[j];
    }
    coarse_[j] = fine_[j] = 0.0;
  }
}

SystemRealization simulate_system(const SimulationDomain& domain, const BranchingRates& rates,
                                  const StableIndexVector& indices, const OccupationGrid& grid,
                                  Stream& field_rng, Stream& branching_rng, Stream& motion_rng,
                                  std::size_t population_cap) {
  if (domain.dim() != indices.dim()) throw DomainError("simulate_system: dimension mismatch");
  SystemRealization out{domain, 0, 0, {}, grid};
  TreeOptions options;
  options.record_times = grid.record_times();
  options.population_cap = population_cap;
  const double horizon = grid.horizons.back();
  std::size_t generated = 0;
  for (const RootBirth& root : sample_initial_field(domain, field_rng)) {
    out.trees.push_back(
        simulate_tree(root, horizon, rates, indices, branching_rng, motion_rng, options));
    generated += out.trees.back().particles.size();
    options.population_cap = population_cap > generated ? population_cap - generated : 0;
  }
  return out;
}

OccupationIntegrals occupation_integrals(const SystemRealization& system,
                                         const TestFunction& phi) {
  OccupationAccumulator acc(phi, system.grid);
  OccupationIntegrals out = acc.zero();
  const double step = system.grid.record_step();
  for (const TreeRealization& tree : system.trees) {
    for (const Particle& p : tree.particles) {
      const auto& path = p.recorded_path;
      if (path.empty()) continue;
      acc.begin(p.id, p.parent, path.front().time, path.front().position);
      const std::size_t last = p.death_time ? path.size() - 1 : path.size();
      for (std::size_t i = 1; i < last; ++i) {
        const double k = std::round(path[i].time / step);
        const bool on_grid = k >= 1.0 && k * step == path[i].time;
        acc.point(path[i].time,
                  on_grid ? static_cast<std::size_t>(k) - 1 : OccupationAccumulator::kOffGrid,
                  path[i].position);
      }
      if (p.death_time) {
        acc.died(*p.death_time, path.back().position, p.n_offspring.value_or(0), 0);
      }
    }
    acc.drain_into(out);
  }
  return out;
}

FluctuationSample occupation_fluctuation(const SystemRealization& system,
                                         const TestFunction& phi, double t,
                                         const ModelParams& params,
                                         const StableIndexVector& indices, CenteringMode mode,
                                         double refinement_tol) {
  if (!(t > 0.0 && t <= 1.0)) throw DomainError("fluctuation time t must lie in (0, 1]");
  const double target = params.n() * t;
  const auto& horizons = system.grid.horizons;
  const auto it = std::find_if(horizons.begin(), horizons.end(), [&](double h) {
    return std::abs(h - target) <= 1e-9 * std::max(1.0, target);
  });
  if (it == horizons.end()) {
    throw DomainError(fmt::format("recorded grid does not cover [0, n t] = [0, {}]", target));
  }
  const auto j = static_cast<std::size_t>(it - horizons.begin());
  const OccupationIntegrals occ = occupation_integrals(system, phi);
  const double centering =
      centering_integral(0.0, *it, phi, params, system.domain, indices, mode);
  const double fn = scaling_Fn(params, indices);

  FluctuationSample out;
  out.n = params.n();
  out.t = t;
  out.value = (occ.coarse[j] - centering) / fn;
  out.replicate_id = system.replicate_id;
  out.seed = system.seed;
  out.half_widths = system.domain.half_widths();
  out.centering_mode = mode;
  if (system.grid.refine) {
    out.refinement_gap = std::abs(occ.coarse[j] - occ.fine[j]) / fn;
    out.accuracy_flag = *out.refinement_gap > refinement_tol;
  }
  return out;
}

ReplicateOccupation simulate_occupation(const ReplicatePlan& plan, Stream& field_rng,
                                        Stream& branching_rng, Stream& motion_rng) {
  if (!plan.indices || !plan.phi) throw DomainError("replicate plan is missing inputs");
  const std::size_t d = plan.indices->dim();
  if (plan.primary.dim() != d || plan.phi->dim() != d) {
    throw DomainError("replicate plan: dimension mismatch");
  }
  if (plan.secondary) {
    if (plan.secondary->dim() != d) throw DomainError("replicate plan: dimension mismatch");
    for (std::size_t k = 0; k < d; ++k) {
      if (plan.secondary->half_widths()[k] > plan.primary.half_widths()[k]) {
        throw DomainError("secondary box must lie inside the primary box");
      }
    }
    if (plan.secondary->intensity() != plan.primary.intensity()) {
      throw DomainError("secondary box must share the field intensity");
    }
  }
  const std::vector<double> record_times = plan.grid.record_times();
  const double horizon = plan.grid.horizons.back();
  OccupationAccumulator acc(*plan.phi, plan.grid);
  ReplicateOccupation out;
  out.primary = acc.zero();
  if (plan.secondary) out.secondary = acc.zero();

  const auto roots = sample_initial_field(plan.primary, field_rng);
  out.roots = roots.size();
  for (const RootBirth& root : roots) {
    detail::walk_tree(root, horizon, plan.rates, *plan.indices, record_times, branching_rng,
                      motion_rng, plan.population_cap, out.particles, acc);
    const bool inner = out.secondary && plan.secondary->contains(root.position);
    acc.drain_into(out.primary, inner ? &*out.secondary : nullptr);
  }
  return out;
}

double time_integrated_statistic(std::span<const double> t_grid, std::span<const double> samples,
                                 std::span<const double> h_weights) {
  if (t_grid.size() != samples.size() || t_grid.size() != h_weights.size()) {
    throw DomainError(fmt::format("grid sizes differ: t {}, samples {}, weights {}",
                                  t_grid.size(), samples.size(), h_weights.size()));
  }
  if (t_grid.size() < 2) throw DomainError("time integral needs at least two grid points");
  double total = 0.0;
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    const double dt = t_grid[i] - t_grid[i - 1];
    if (!(dt > 0.0)) throw DomainError("time grid must be increasing");
    total += 0.5 * dt * (samples[i] * h_weights[i] + samples[i - 1] * h_weights[i - 1]);
  }
  return total;
}

}  // namespace degenbranch
