#include "strategio/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace strategio {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

bool Halfspace::trivially_true() const {
  if (a.size() > 0 && a.cwiseAbs().maxCoeff() > 0.0) return false;
  return strict ? b < 0.0 : b <= 0.0;
}

bool Halfspace::contains(const Vector& y, double margin) const {
  const double lhs = a.dot(y);
  if (!strict) return lhs >= b;
  return lhs - b > 0.0 && lhs - b >= margin * a.norm();
}

bool Region::contains(const Vector& y, double strict_margin) const {
  return std::all_of(halfspaces.begin(), halfspaces.end(),
                     [&](const Halfspace& h) { return h.contains(y, strict_margin); });
}

void Region::validate() const {
  for (std::size_t i = 0; i < halfspaces.size(); ++i) {
    const auto& h = halfspaces[i];
    require(h.a.allFinite() && std::isfinite(h.b), ErrorCode::InvalidArgument,
            "halfspace " + std::to_string(i) + " has non-finite data");
    const bool zero = h.a.size() == 0 || h.a.cwiseAbs().maxCoeff() == 0.0;
    require(!zero || h.trivially_true(), ErrorCode::InvalidArgument,
            "halfspace " + std::to_string(i) + " has a zero normal and an unsatisfiable offset");
  }
}

ProjectionResult project_onto_region(const Vector& y, const Region& region, const ProjectionOptions& options) {
  const auto n = y.size();
  const int m = static_cast<int>(region.halfspaces.size());
  for (const auto& h : region.halfspaces)
    require(h.a.size() == n, ErrorCode::DimensionMismatch,
            "halfspace normal has length " + std::to_string(h.a.size()) + ", point has " + std::to_string(n));

  ProjectionResult out;
  out.multipliers = Vector::Zero(m);

  // Unit-normal form n_i . x >= c_i; zero-normal rows are either no-ops or
  // make the region empty.
  Matrix normals = Matrix::Zero(n, m);
  Vector offsets = Vector::Zero(m);
  std::vector<bool> live(static_cast<std::size_t>(m), false);
  for (int i = 0; i < m; ++i) {
    const auto& h = region.halfspaces[i];
    require(h.a.allFinite() && std::isfinite(h.b), ErrorCode::InvalidArgument, "halfspace has non-finite data");
    const double norm = h.a.norm();
    if (norm == 0.0) {
      if (h.trivially_true()) continue;
      out.point = y;
      out.distance = kInf;
      out.kkt_residual = kInf;
      out.converged = true;
      return out;
    }
    normals.col(i) = h.a / norm;
    offsets(i) = h.b / norm + (h.strict ? options.strict_margin : 0.0);
    live[i] = true;
  }

  const double scale = 1.0 + y.norm() + (m ? offsets.cwiseAbs().maxCoeff() : 0.0);
  const double feas_tol = 1e-13 * scale;
  const int cap = options.max_iterations > 0 ? options.max_iterations
                                             : std::max(100, 100 * std::max(m, 1) * static_cast<int>(std::max<Eigen::Index>(n, 1)));

  Vector x = y;
  Vector& lambda = out.multipliers;
  std::vector<int> active;
  auto slack = [&](int i) { return normals.col(i).dot(x) - offsets(i); };
  auto active_normals = [&]() {
    Matrix N(n, static_cast<Eigen::Index>(active.size()));
    for (std::size_t j = 0; j < active.size(); ++j) N.col(static_cast<Eigen::Index>(j)) = normals.col(active[j]);
    return N;
  };

  bool infeasible = false;
  bool converged = false;
  int iterations = 0;
  while (!infeasible) {
    int p = -1;
    double worst = -feas_tol;
    for (int i = 0; i < m; ++i) {
      if (!live[i] || std::find(active.begin(), active.end(), i) != active.end()) continue;
      const double s = slack(i);
      if (s < worst) {
        worst = s;
        p = i;
      }
    }
    if (p < 0) {
      converged = true;
      break;
    }
    // Raise the multiplier of p until it is satisfied, dropping active
    // constraints whose multipliers reach zero on the way.
    for (;;) {
      if (++iterations > cap) break;
      Vector z = normals.col(p);
      Vector r;
      if (!active.empty()) {
        const Matrix N = active_normals();
        r = N.colPivHouseholderQr().solve(normals.col(p));
        z -= N * r;
      }
      const double zz = z.squaredNorm();
      const double t_full = zz > 1e-24 ? -slack(p) / zz : kInf;
      double t_partial = kInf;
      int drop = -1;
      for (std::size_t j = 0; j < active.size(); ++j) {
        if (r(static_cast<Eigen::Index>(j)) > 1e-14) {
          const double ratio = lambda(active[j]) / r(static_cast<Eigen::Index>(j));
          if (ratio < t_partial) {
            t_partial = ratio;
            drop = static_cast<int>(j);
          }
        }
      }
      if (t_full == kInf && t_partial == kInf) {
        infeasible = true;
        break;
      }
      const double t = std::min(t_full, t_partial);
      if (t_full < kInf) x += t * z;
      for (std::size_t j = 0; j < active.size(); ++j) lambda(active[j]) -= t * r(static_cast<Eigen::Index>(j));
      lambda(p) += t;
      if (t_full <= t_partial) {
        active.push_back(p);
        break;
      }
      lambda(active[drop]) = 0.0;
      active.erase(active.begin() + drop);
    }
    if (iterations > cap) break;
  }
  out.iterations = iterations;

  if (infeasible) {
    out.point = x;
    out.distance = kInf;
    out.kkt_residual = kInf;
    out.converged = true;
    out.feasible = false;
    return out;
  }

  // Re-solve the equality-constrained projection on the final active set to
  // remove drift accumulated over the pivots.
  if (converged && !active.empty()) {
    const Matrix N = active_normals();
    Vector cA(static_cast<Eigen::Index>(active.size()));
    for (std::size_t j = 0; j < active.size(); ++j) cA(static_cast<Eigen::Index>(j)) = offsets(active[j]);
    const Vector lam = (N.transpose() * N).ldlt().solve(cA - N.transpose() * y);
    const Vector x_refined = y + N * lam;
    bool ok = lam.minCoeff() >= -1e-12 * scale;
    for (int i = 0; i < m && ok; ++i)
      if (live[i]) ok = normals.col(i).dot(x_refined) - offsets(i) >= -feas_tol;
    if (ok) {
      x = x_refined;
      lambda.setZero();
      for (std::size_t j = 0; j < active.size(); ++j)
        lambda(active[j]) = std::max(0.0, lam(static_cast<Eigen::Index>(j)));
    }
  }

  double primal = 0.0, comp = 0.0, dual = 0.0;
  Vector stationarity = x - y;
  for (int i = 0; i < m; ++i) {
    if (!live[i]) continue;
    const double s = slack(i);
    primal = std::max(primal, -s);
    comp = std::max(comp, std::abs(lambda(i) * s));
    dual = std::max(dual, -lambda(i));
    stationarity -= lambda(i) * normals.col(i);
  }
  out.point = x;
  out.distance = (x - y).norm();
  out.kkt_residual = primal + stationarity.norm() + comp + dual;
  out.converged = converged;
  out.feasible = converged && primal <= options.tol;
  return out;
}

Region type_region(const BetaSet& betas, Intervention d) {
  require(d >= 0 && d < betas.k(), ErrorCode::InvalidArgument, "intervention out of range");
  Region region;
  for (int other = 0; other < betas.k(); ++other) {
    if (other == d) continue;
    Halfspace h{betas[d] - betas[other], 0.0, false};
    if (h.trivially_true()) continue;
    region.halfspaces.push_back(std::move(h));
  }
  return region;
}

Region shifted_region(const BetaSet& betas, Intervention d, double delta) {
  require(d >= 0 && d < betas.k(), ErrorCode::InvalidArgument, "intervention out of range");
  Region region;
  for (int other = 0; other < betas.k(); ++other) {
    if (other == d) continue;
    const Vector diff = betas[d] - betas[other];
    const double shift = delta * diff.norm();
    if (other < d)
      region.halfspaces.push_back({diff, shift, true});
    else
      region.halfspaces.push_back({diff, -shift, false});
  }
  return region;
}

bool in_ball(const Vector& y, const std::vector<Vector>& centers, double delta) {
  require(delta > 0.0, ErrorCode::InvalidArgument, "delta must be positive");
  for (const auto& c : centers) {
    require(c.size() == y.size(), ErrorCode::DimensionMismatch, "center dimension mismatch");
    if ((y - c).norm() <= delta) return true;
  }
  return false;
}

bool in_type_ball(const Vector& y, const BetaSet& betas, Intervention d, double delta, double tol) {
  require(delta > 0.0, ErrorCode::InvalidArgument, "delta must be positive");
  const auto proj = project_onto_region(y, type_region(betas, d), {tol, 0.0, 0});
  if (!proj.converged) fail(ErrorCode::NotConverged, "projection onto type region did not converge");
  return proj.feasible && proj.distance <= delta + tol;
}

}  // namespace strategio
