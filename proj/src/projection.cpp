#include "chcda/projection.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace chcda {

namespace {

using Vec2 = Eigen::Vector2d;

constexpr std::array<std::array<double, 2>, 12> kCrossVertices = {{{0.35, 0.2},
                                                                    {0.65, 0.2},
                                                                    {0.65, 0.35},
                                                                    {0.8, 0.35},
                                                                    {0.8, 0.65},
                                                                    {0.65, 0.65},
                                                                    {0.65, 0.8},
                                                                    {0.35, 0.8},
                                                                    {0.35, 0.65},
                                                                    {0.2, 0.65},
                                                                    {0.2, 0.35},
                                                                    {0.35, 0.35}}};

bool inside_cross(const Vec2& x) {
  const bool vertical = x.x() >= 0.35 && x.x() <= 0.65 && x.y() >= 0.2 && x.y() <= 0.8;
  const bool horizontal = x.x() >= 0.2 && x.x() <= 0.8 && x.y() >= 0.35 && x.y() <= 0.65;
  return vertical || horizontal;
}

// Target traces needed by the edge terms of a_IP(target, .).
struct TargetTrace {
  double jump;
  double average;
};

TargetTrace target_trace(const SmoothTarget& target, const EdgeBasisTraces& tr, int q) {
  const Vec2& n = tr.normal;
  const Vec2& x = tr.points[q];
  const double average = n.dot(target.hessian(x) * n);
  // A smooth target has no interior jump.
  const double jump = tr.kind == EdgeKind::boundary ? -n.dot(target.gradient(x)) : 0.0;
  return {jump, average};
}

}  // namespace

double CosineTarget::value(const Vec2& x) const {
  const double a = kx_ * std::numbers::pi, b = ky_ * std::numbers::pi;
  return std::cos(a * x.x()) * std::cos(b * x.y());
}

Vec2 CosineTarget::gradient(const Vec2& x) const {
  const double a = kx_ * std::numbers::pi, b = ky_ * std::numbers::pi;
  return {-a * std::sin(a * x.x()) * std::cos(b * x.y()),
          -b * std::cos(a * x.x()) * std::sin(b * x.y())};
}

Eigen::Matrix2d CosineTarget::hessian(const Vec2& x) const {
  const double a = kx_ * std::numbers::pi, b = ky_ * std::numbers::pi;
  const double cx = std::cos(a * x.x()), sx = std::sin(a * x.x());
  const double cy = std::cos(b * x.y()), sy = std::sin(b * x.y());
  Eigen::Matrix2d h;
  h << -a * a * cx * cy, a * b * sx * sy, a * b * sx * sy, -b * b * cx * cy;
  return h;
}

CrossProfile::Distance CrossProfile::signed_distance(const Vec2& x) {
  double best = std::numeric_limits<double>::infinity();
  Vec2 nearest = Vec2::Zero();
  bool at_vertex = false;
  for (std::size_t k = 0; k < kCrossVertices.size(); ++k) {
    const auto& pa = kCrossVertices[k];
    const auto& pb = kCrossVertices[(k + 1) % kCrossVertices.size()];
    const Vec2 a(pa[0], pa[1]), b(pb[0], pb[1]);
    const Vec2 ab = b - a;
    const double s = std::clamp((x - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
    const Vec2 p = a + s * ab;
    const double dist = (x - p).norm();
    if (dist < best) {
      best = dist;
      nearest = p;
      at_vertex = s == 0.0 || s == 1.0;
    }
  }
  const double sign = inside_cross(x) ? 1.0 : -1.0;
  Distance out{sign * best, Vec2::Zero(), Eigen::Matrix2d::Zero()};
  if (best > 0.0) {
    const Vec2 r = (x - nearest) / best;
    out.grad = sign * r;
    if (at_vertex) out.hess = sign * (Eigen::Matrix2d::Identity() - r * r.transpose()) / best;
  }
  return out;
}

double CrossProfile::value(const Vec2& x) const {
  return std::tanh(signed_distance(x).d / (std::numbers::sqrt2 * epsilon_));
}

Vec2 CrossProfile::gradient(const Vec2& x) const {
  const Distance d = signed_distance(x);
  const double scale = 1.0 / (std::numbers::sqrt2 * epsilon_);
  const double th = std::tanh(d.d * scale);
  return (1.0 - th * th) * scale * d.grad;
}

Eigen::Matrix2d CrossProfile::hessian(const Vec2& x) const {
  const Distance d = signed_distance(x);
  const double scale = 1.0 / (std::numbers::sqrt2 * epsilon_);
  const double th = std::tanh(d.d * scale);
  const double sech2 = 1.0 - th * th;
  return sech2 * scale * d.hess - 2.0 * th * sech2 * scale * scale * d.grad * d.grad.transpose();
}

Eigen::VectorXd ritz_load(const Space& space, const SmoothTarget& target, PenaltySetting penalty) {
  const auto& rule = space.volume_rule();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(space.num_dofs());
  for (int t = 0; t < space.mesh().num_triangles(); ++t) {
    const ElementGeometry& g = space.geometry(t);
    const double det = std::abs(g.det);
    const auto& dofs = space.dofs().element(t);
    BasisValues basis = space.reference_tables()[0];
    g.push_forward(basis);  // Hessians are constant per element
    for (const auto& qp : rule.points) {
      const Eigen::Matrix2d ht = target.hessian(g.to_physical(qp.point));
      const double w = qp.weight * det;
      for (int i = 0; i < 6; ++i) b[dofs[i]] += w * (ht.array() * basis.hess[i].array()).sum();
    }
  }
  for (int e = 0; e < space.mesh().num_edges(); ++e) {
    const EdgeBasisTraces tr = edge_basis_traces(space, e);
    const double pen = penalty.sigma() / tr.length;
    for (int q = 0; q < EdgeBasisTraces::kPoints; ++q) {
      const TargetTrace tt = target_trace(target, tr, q);
      for (int k = 0; k < tr.num_dofs; ++k) {
        b[tr.dofs[k]] += tr.weights[q] * (tt.average * tr.jump[q][k] + tr.average[q][k] * tt.jump +
                                          pen * tt.jump * tr.jump[q][k]);
      }
    }
  }
  return b;
}

RitzResult ritz_project(std::shared_ptr<const Space> space, const SmoothTarget& target,
                        PenaltySetting penalty) {
  const int n = space->num_dofs();
  const SparseMatrix a = assemble_cip(*space, penalty).matrix;
  const Eigen::VectorXd c = assemble_mass(*space).matrix * Eigen::VectorXd::Ones(n);

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(a.nonZeros()) + 2 * static_cast<std::size_t>(n));
  for (int col = 0; col < a.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(a, col); it; ++it) triplets.emplace_back(it.row(), it.col(), it.value());
  }
  for (int i = 0; i < n; ++i) {
    if (c[i] == 0.0) continue;
    triplets.emplace_back(i, n, c[i]);
    triplets.emplace_back(n, i, c[i]);
  }
  SparseMatrix saddle(n + 1, n + 1);
  saddle.setFromTriplets(triplets.begin(), triplets.end());
  saddle.makeCompressed();

  Eigen::VectorXd rhs(n + 1);
  rhs.head(n) = ritz_load(*space, target, penalty);
  double mean = 0.0;
  const auto& rule = space->volume_rule();
  for (int t = 0; t < space->mesh().num_triangles(); ++t) {
    const ElementGeometry& g = space->geometry(t);
    for (const auto& qp : rule.points) mean += qp.weight * std::abs(g.det) * target.value(g.to_physical(qp.point));
  }
  rhs[n] = mean;

  Eigen::SparseLU<SparseMatrix> lu;
  lu.compute(saddle);
  if (lu.info() != Eigen::Success) {
    throw std::runtime_error("ritz_project: saddle-point factorization failed (" + lu.lastErrorMessage() +
                             ")");
  }
  const Eigen::VectorXd sol = lu.solve(rhs);
  if (lu.info() != Eigen::Success || !sol.allFinite()) {
    throw std::runtime_error("ritz_project: saddle-point solve failed");
  }
  RitzResult out{Field(space, sol.head(n)), sol[n]};
  return out;
}

Field project_initial_data(std::shared_ptr<const Space> space, const InitialData& data,
                           PenaltySetting penalty) {
  if (const auto* field = std::get_if<Field>(&data)) {
    if (field->values.size() != space->num_dofs()) {
      throw std::invalid_argument("project_initial_data: field does not match the space");
    }
    return *field;
  }
  const auto& target = std::get<std::shared_ptr<const SmoothTarget>>(data);
  if (!target) throw std::invalid_argument("project_initial_data: null target");
  return ritz_project(std::move(space), *target, penalty).field;
}

double norm_2h_error(const Field& field, const SmoothTarget& target, PenaltySetting penalty) {
  const Space& space = *field.space;
  const auto& rule = space.volume_rule();
  double sum = 0.0;
  for (int t = 0; t < space.mesh().num_triangles(); ++t) {
    const ElementGeometry& g = space.geometry(t);
    const double det = std::abs(g.det);
    const auto& dofs = space.dofs().element(t);
    BasisValues basis = space.reference_tables()[0];
    g.push_forward(basis);
    Eigen::Matrix2d hf = Eigen::Matrix2d::Zero();
    for (int i = 0; i < 6; ++i) hf += field.values[dofs[i]] * basis.hess[i];
    for (const auto& qp : rule.points) {
      const Eigen::Matrix2d diff = target.hessian(g.to_physical(qp.point)) - hf;
      sum += qp.weight * det * diff.squaredNorm();
    }
  }
  for (int e = 0; e < space.mesh().num_edges(); ++e) {
    const EdgeBasisTraces tr = edge_basis_traces(space, e);
    for (int q = 0; q < EdgeBasisTraces::kPoints; ++q) {
      double jump = target_trace(target, tr, q).jump;
      for (int k = 0; k < tr.num_dofs; ++k) jump -= tr.jump[q][k] * field.values[tr.dofs[k]];
      sum += penalty.sigma() / tr.length * tr.weights[q] * jump * jump;
    }
  }
  return std::sqrt(sum);
}

}  // namespace chcda
