#include "emtr/optimizer.hpp"

#include "emtr/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace emtr::pso {

Vec Bounds::default_vmax() const {
  Vec v(dim());
  for (std::size_t d = 0; d < dim(); ++d) v[d] = 0.5 * (hi[d] - lo[d]);
  return v;
}

Bounds Bounds::rotation() {
  using std::numbers::pi;
  return Bounds{{-pi, -pi / 2, -pi}, {pi, pi / 2, pi}};
}

Bounds Bounds::rotation_translation(double half_extent) {
  Bounds b = rotation();
  for (int k = 0; k < 3; ++k) {
    b.lo.push_back(-half_extent);
    b.hi.push_back(half_extent);
  }
  return b;
}

double PsoParams::omega(int it, int max_it) const {
  return omega_start - omega_drop * static_cast<double>(it) / static_cast<double>(max_it);
}

Subpopulation init_subpopulation(std::size_t size, const Bounds& bounds, const Vec& vmax, Rng& rng) {
  if (size == 0) throw Error(ErrorCode::InvalidArgument, "subpopulation size must be >= 1");
  if (bounds.lo.size() != bounds.hi.size() || vmax.size() != bounds.dim()) {
    throw Error(ErrorCode::InvalidArgument, "bounds/vmax dimension mismatch");
  }
  for (std::size_t d = 0; d < bounds.dim(); ++d) {
    if (!(bounds.lo[d] <= bounds.hi[d])) throw Error(ErrorCode::InvalidArgument, "bounds have lo > hi");
  }
  Subpopulation sub;
  sub.bounds = bounds;
  sub.vmax = vmax;
  sub.particles.resize(size);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& p : sub.particles) {
    p.position.resize(bounds.dim());
    p.velocity.resize(bounds.dim());
    for (std::size_t d = 0; d < bounds.dim(); ++d) {
      p.position[d] = bounds.lo[d] + u(rng) * (bounds.hi[d] - bounds.lo[d]);
      p.velocity[d] = -vmax[d] + u(rng) * 2.0 * vmax[d];
    }
    p.pbest_position = p.position;
  }
  sub.gbest_position = sub.particles.front().position;
  return sub;
}

Subpopulation init_subpopulation(std::size_t size, const Bounds& bounds, Rng& rng) {
  return init_subpopulation(size, bounds, bounds.default_vmax(), rng);
}

Vec step_velocity(const Particle& p, const Vec& gbest, const PsoParams& params, int it, int max_it,
                  const Vec& vmax, Rng& rng) {
  const std::size_t dim = p.position.size();
  if (p.velocity.size() != dim || p.pbest_position.size() != dim || gbest.size() != dim ||
      vmax.size() != dim) {
    throw Error(ErrorCode::InvalidArgument, "particle shape mismatch");
  }
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double omega = params.omega(it, max_it);
  double r1 = 0.0, r2 = 0.0;
  if (!params.per_dimension_r) {
    r1 = u(rng);
    r2 = u(rng);
  }
  Vec v(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    if (params.per_dimension_r) {
      r1 = u(rng);
      r2 = u(rng);
    }
    const double raw = blend_velocity(p.velocity[d], p.position[d], p.pbest_position[d], gbest[d], omega,
                                      params.c1 * r1, params.c2 * r2);
    v[d] = std::clamp(raw, -vmax[d], vmax[d]);
  }
  return v;
}

Vec step_position(const Vec& position, Vec& velocity, const Bounds& bounds) {
  if (position.size() != velocity.size() || position.size() != bounds.dim()) {
    throw Error(ErrorCode::InvalidArgument, "position/velocity/bounds shape mismatch");
  }
  Vec x(position.size());
  for (std::size_t d = 0; d < x.size(); ++d) {
    x[d] = position[d] + velocity[d];
    if (x[d] > bounds.hi[d]) {
      x[d] = bounds.hi[d];
      velocity[d] = 0.0;
    } else if (x[d] < bounds.lo[d]) {
      x[d] = bounds.lo[d];
      velocity[d] = 0.0;
    }
  }
  return x;
}

void advance(Subpopulation& sub, const PsoParams& params, int it, int max_it, Rng& rng) {
  for (auto& p : sub.particles) {
    p.velocity = step_velocity(p, sub.gbest_position, params, it, max_it, sub.vmax, rng);
    p.position = step_position(p.position, p.velocity, sub.bounds);
  }
}

BestUpdate update_bests(Subpopulation& sub, std::span<const double> fitness) {
  if (fitness.size() != sub.particles.size()) {
    throw Error(ErrorCode::InvalidArgument, "one fitness value per particle required");
  }
  BestUpdate result;
  for (std::size_t i = 0; i < fitness.size(); ++i) {
    auto& p = sub.particles[i];
    if (std::isnan(fitness[i])) {
      ++result.nan_fitness;
      continue;
    }
    if (fitness[i] < p.pbest_fitness) {
      p.pbest_fitness = fitness[i];
      p.pbest_position = p.position;
      ++result.improved_pbests;
    }
  }
  for (const auto& p : sub.particles) {
    if (p.pbest_fitness < sub.gbest_fitness) {
      sub.gbest_fitness = p.pbest_fitness;
      sub.gbest_position = p.pbest_position;
      result.gbest_changed = true;
    }
  }
  if (result.gbest_changed) ++sub.gbest_version;
  return result;
}

bool offer_gbest(Subpopulation& sub, const Vec& position, double fitness) {
  if (!(fitness < sub.gbest_fitness)) return false;
  sub.gbest_fitness = fitness;
  sub.gbest_position = position;
  ++sub.gbest_version;
  return true;
}

Vec clamp_to(const Vec& position, const Bounds& bounds) {
  Vec out(position.size());
  for (std::size_t d = 0; d < out.size(); ++d) out[d] = std::clamp(position[d], bounds.lo[d], bounds.hi[d]);
  return out;
}

}  // namespace emtr::pso
