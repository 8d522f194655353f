#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

namespace emtr::pso {

using Rng = std::mt19937_64;
using Vec = std::vector<double>;

struct Bounds {
  Vec lo;
  Vec hi;

  std::size_t dim() const { return lo.size(); }
  /// 0.5 * (hi - lo) per dimension.
  Vec default_vmax() const;

  /// theta1 in [-pi, pi], theta2 in [-pi/2, pi/2], theta3 in [-pi, pi].
  static Bounds rotation();
  /// Rotation bounds plus a symmetric translation box [-half_extent, half_extent]^3.
  static Bounds rotation_translation(double half_extent = 0.5);
};

struct Particle {
  Vec position;
  Vec velocity;
  Vec pbest_position;
  double pbest_fitness = std::numeric_limits<double>::infinity();
};

struct Subpopulation {
  std::vector<Particle> particles;
  Vec gbest_position;
  double gbest_fitness = std::numeric_limits<double>::infinity();
  Bounds bounds;
  Vec vmax;
  /// Bumped whenever gbest changes (personal-best updates or an accepted transfer).
  std::uint64_t gbest_version = 0;
};

struct PsoParams {
  double c1 = 1.49445;
  double c2 = 1.49445;
  double omega_start = 0.9;
  double omega_drop = 0.5;
  /// r1, r2 drawn per dimension; false draws one scalar pair per particle.
  bool per_dimension_r = true;

  /// omega(it) = omega_start - omega_drop * it / max_it
  double omega(int it, int max_it) const;
};

/// Positions uniform in bounds, velocities uniform in [-vmax, vmax]. Personal
/// bests start at the initial position with +inf fitness; gbest starts at
/// particle 0 and is settled by the first update_bests call.
Subpopulation init_subpopulation(std::size_t size, const Bounds& bounds, const Vec& vmax, Rng& rng);
Subpopulation init_subpopulation(std::size_t size, const Bounds& bounds, Rng& rng);

/// omega*v + c1r1*(pbest - x) + c2r2*(gbest - x) for a single coordinate.
inline double blend_velocity(double v, double x, double pbest, double gbest, double omega, double c1r1,
                             double c2r2) {
  return omega * v + c1r1 * (pbest - x) + c2r2 * (gbest - x);
}

/// New velocity of `p` for iteration `it`, clamped to [-vmax, vmax].
Vec step_velocity(const Particle& p, const Vec& gbest, const PsoParams& params, int it, int max_it,
                  const Vec& vmax, Rng& rng);

/// x + v clamped to bounds; `velocity` is zeroed on every clamped dimension.
Vec step_position(const Vec& position, Vec& velocity, const Bounds& bounds);

/// Moves every particle one step (velocity then position).
void advance(Subpopulation& sub, const PsoParams& params, int it, int max_it, Rng& rng);

struct BestUpdate {
  std::size_t improved_pbests = 0;
  bool gbest_changed = false;
  std::size_t nan_fitness = 0;  // particles skipped this round
};

/// Strict-improvement personal/global best update; ties keep the incumbent,
/// NaN fitness values are skipped and counted.
BestUpdate update_bests(Subpopulation& sub, std::span<const double> fitness);

/// Replaces gbest only if `fitness` is strictly better. Returns true on accept.
bool offer_gbest(Subpopulation& sub, const Vec& position, double fitness);

/// Clamps each coordinate into the bounds.
Vec clamp_to(const Vec& position, const Bounds& bounds);

}  // namespace emtr::pso
