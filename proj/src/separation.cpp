#include "strategio/geometry.hpp"
#include "strategio/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace strategio {

std::vector<int> SeparationReport::violations() const {
  std::vector<int> out;
  for (const auto& u : units)
    if (u.verdict != UnitVerdict::Satisfied) out.push_back(u.unit);
  return out;
}

namespace {

double min_distance(const Vector& w, const std::vector<const Vector*>& centers) {
  double best = std::numeric_limits<double>::infinity();
  for (const Vector* c : centers) best = std::min(best, (w - *c).squaredNorm());
  return std::sqrt(best);
}

const Vector* nearest(const Vector& w, const std::vector<const Vector*>& centers) {
  const Vector* arg = nullptr;
  double best = std::numeric_limits<double>::infinity();
  for (const Vector* c : centers) {
    const double d = (w - *c).squaredNorm();
    if (d < best) {
      best = d;
      arg = c;
    }
  }
  return arg;
}

Vector project_ball(const Vector& w, const Vector& center, double radius) {
  const Vector diff = w - center;
  const double norm = diff.norm();
  return norm <= radius ? w : Vector(center + diff * (radius / norm));
}

Vector random_direction(Rng& rng, Eigen::Index dim) {
  Vector u(dim);
  do {
    for (Eigen::Index i = 0; i < dim; ++i) u(i) = rng.normal();
  } while (u.norm() == 0.0);
  return u / u.norm();
}

// Projected (sub)gradient ascent of g(w) = min_j ||w - y_j|| over the ball.
Vector ascend(Vector w, const Vector& center, double delta, const std::vector<const Vector*>& lower, int steps) {
  Vector best = w;
  double best_g = min_distance(w, lower);
  double step = 0.2 * delta;
  for (int k = 0; k < steps; ++k) {
    const Vector* c = nearest(w, lower);
    Vector dir = w - *c;
    const double norm = dir.norm();
    if (norm == 0.0) break;
    w = project_ball(w + step * dir / norm, center, delta);
    const double g = min_distance(w, lower);
    if (g > best_g) {
      best_g = g;
      best = w;
    }
    step *= 0.99;
  }
  return best;
}

// Walks every grid point of the ball; returns the uncovered point with the
// largest margin, or nothing if every point lies in some lower ball.
bool grid_search(const Vector& center, double delta, const std::vector<const Vector*>& lower, int resolution,
                 Vector& witness, double& best_g) {
  const auto dim = center.size();
  const double h = delta / resolution;
  const int steps = 2 * resolution + 1;
  std::vector<int> idx(static_cast<std::size_t>(dim), 0);
  Vector w(dim);
  bool found = false;
  best_g = -std::numeric_limits<double>::infinity();
  const double d2 = delta * delta;
  for (;;) {
    for (Eigen::Index i = 0; i < dim; ++i) w(i) = center(i) - delta + h * idx[static_cast<std::size_t>(i)];
    if ((w - center).squaredNorm() <= d2 * (1.0 + 1e-12)) {
      bool covered = false;
      for (const Vector* c : lower)
        if ((w - *c).squaredNorm() <= d2) {
          covered = true;
          break;
        }
      if (!covered) {
        const double g = min_distance(w, lower);
        if (g > best_g) {
          best_g = g;
          witness = project_ball(w, center, delta);
          found = true;
        }
      }
    }
    Eigen::Index i = 0;
    while (i < dim && ++idx[static_cast<std::size_t>(i)] == steps) idx[static_cast<std::size_t>(i++)] = 0;
    if (i == dim) break;
  }
  return found;
}

}  // namespace

SeparationReport separation_of_types(const std::vector<TypedUnit>& units, double delta,
                                     const SeparationOptions& options) {
  require(delta > 0.0, ErrorCode::InvalidArgument, "delta must be positive");
  auto rank = [&](Intervention d) {
    return options.preference_rank.empty() ? d : options.preference_rank.at(static_cast<std::size_t>(d));
  };

  SeparationReport report;
  report.mode = SotMode::Finite;
  report.delta = delta;
  for (int i = 0; i < static_cast<int>(units.size()); ++i) {
    const auto& unit = units[i];
    require(unit.y.size() == units.front().y.size(), ErrorCode::DimensionMismatch, "units differ in dimension");
    UnitSeparation verdict;
    verdict.unit = i;
    verdict.type = unit.type;

    // Only lower-type centers within 2 delta can cover part of the ball.
    std::vector<const Vector*> lower;
    for (const auto& other : units)
      if (rank(other.type) < rank(unit.type) && (other.y - unit.y).norm() <= 2.0 * delta) lower.push_back(&other.y);

    if (lower.empty()) {
      verdict.witness = unit.y;
      verdict.margin = std::numeric_limits<double>::infinity();
      verdict.certificate = "no-lower-types";
      report.units.push_back(std::move(verdict));
      continue;
    }

    std::vector<Vector> starts{unit.y};
    std::vector<const Vector*> by_distance = lower;
    std::sort(by_distance.begin(), by_distance.end(), [&](const Vector* a, const Vector* b) {
      return (*a - unit.y).squaredNorm() < (*b - unit.y).squaredNorm();
    });
    for (std::size_t j = 0; j < std::min<std::size_t>(3, by_distance.size()); ++j) {
      Vector dir = unit.y - *by_distance[j];
      if (dir.norm() == 0.0) continue;
      dir /= dir.norm();
      starts.push_back(unit.y + delta * dir);
      starts.push_back(unit.y - delta * dir);
    }
    Rng rng = Rng::stream(options.seed, static_cast<std::uint64_t>(i));
    for (int j = 0; j < options.random_starts; ++j) starts.push_back(unit.y + delta * random_direction(rng, unit.y.size()));

    Vector best = unit.y;
    double best_g = -std::numeric_limits<double>::infinity();
    for (const auto& s : starts) {
      const Vector w = ascend(s, unit.y, delta, lower, options.ascent_steps);
      const double g = min_distance(w, lower);
      if (g > best_g) {
        best_g = g;
        best = w;
      }
    }

    if (best_g > delta) {
      verdict.verdict = UnitVerdict::Satisfied;
      verdict.witness = best;
      verdict.margin = best_g - delta;
      verdict.certificate = "ascent";
    } else if (unit.y.size() <= 3) {
      Vector w;
      double g = 0.0;
      if (grid_search(unit.y, delta, lower, options.grid_resolution, w, g) && g > delta) {
        verdict.verdict = UnitVerdict::Satisfied;
        verdict.witness = w;
        verdict.margin = g - delta;
        verdict.certificate = "grid-witness";
      } else {
        verdict.verdict = UnitVerdict::Violated;
        verdict.margin = best_g - delta;
        verdict.certificate = "grid";
      }
    } else {
      verdict.verdict = UnitVerdict::ProbablyViolated;
      verdict.margin = best_g - delta;
      verdict.certificate = "sampling";
      report.low_confidence = true;
    }
    if (verdict.verdict != UnitVerdict::Satisfied) report.satisfied = false;
    report.units.push_back(std::move(verdict));
  }
  return report;
}

SeparationReport separation_of_types_continuum(const std::vector<TypedUnit>& units, const BetaSet& betas,
                                               double delta) {
  require(delta > 0.0, ErrorCode::InvalidArgument, "delta must be positive");
  betas.validate();
  SeparationReport report;
  report.mode = SotMode::Continuum;
  report.delta = delta;
  for (int i = 0; i < static_cast<int>(units.size()); ++i) {
    const auto& unit = units[i];
    require(unit.y.size() == betas.T0(), ErrorCode::DimensionMismatch, "unit dimension does not match betas");
    const double eps = 1e-9 * (1.0 + unit.y.norm());
    const auto proj = project_onto_region(unit.y, shifted_region(betas, unit.type, delta), {1e-9, eps, 0});
    UnitSeparation verdict;
    verdict.unit = i;
    verdict.type = unit.type;
    verdict.certificate = "qp";
    verdict.margin = delta - proj.distance;
    if (proj.feasible && proj.distance <= delta + eps) {
      verdict.verdict = UnitVerdict::Satisfied;
      verdict.witness = proj.point;
    } else {
      verdict.verdict = UnitVerdict::Violated;
      report.satisfied = false;
    }
    report.units.push_back(std::move(verdict));
  }
  return report;
}

}  // namespace strategio
