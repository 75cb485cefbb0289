#pragma once

#include "chcda/forms.hpp"
#include "chcda/space.hpp"

#include <memory>
#include <variant>

namespace chcda {

/// Smooth function with pointwise value, gradient and Hessian.
class SmoothTarget {
 public:
  virtual ~SmoothTarget() = default;
  virtual double value(const Eigen::Vector2d& x) const = 0;
  virtual Eigen::Vector2d gradient(const Eigen::Vector2d& x) const = 0;
  virtual Eigen::Matrix2d hessian(const Eigen::Vector2d& x) const = 0;
};

class ConstantTarget final : public SmoothTarget {
 public:
  explicit ConstantTarget(double c) : c_(c) {}
  double value(const Eigen::Vector2d&) const override { return c_; }
  Eigen::Vector2d gradient(const Eigen::Vector2d&) const override { return Eigen::Vector2d::Zero(); }
  Eigen::Matrix2d hessian(const Eigen::Vector2d&) const override { return Eigen::Matrix2d::Zero(); }

 private:
  double c_;
};

/// cos(kx pi x) cos(ky pi y); zero normal derivative on the unit square.
class CosineTarget final : public SmoothTarget {
 public:
  CosineTarget(int kx = 1, int ky = 1) : kx_(kx), ky_(ky) {}
  double value(const Eigen::Vector2d& x) const override;
  Eigen::Vector2d gradient(const Eigen::Vector2d& x) const override;
  Eigen::Matrix2d hessian(const Eigen::Vector2d& x) const override;

 private:
  int kx_, ky_;
};

/// tanh(d(x) / (sqrt(2) eps)) with d the signed distance to a cross made of
/// [0.35,0.65]x[0.2,0.8] and [0.2,0.8]x[0.35,0.65], positive inside.
/// Derivatives are the almost-everywhere ones of the piecewise-smooth
/// distance function.
class CrossProfile final : public SmoothTarget {
 public:
  explicit CrossProfile(double epsilon) : epsilon_(epsilon) {}
  double value(const Eigen::Vector2d& x) const override;
  Eigen::Vector2d gradient(const Eigen::Vector2d& x) const override;
  Eigen::Matrix2d hessian(const Eigen::Vector2d& x) const override;

  /// Signed distance with its a.e. gradient and Hessian.
  struct Distance {
    double d;
    Eigen::Vector2d grad;
    Eigen::Matrix2d hess;
  };
  static Distance signed_distance(const Eigen::Vector2d& x);

 private:
  double epsilon_;
};

struct RitzResult {
  Field field;
  double multiplier = 0.0;  // Lagrange multiplier of the mean constraint; ~0 for valid targets
};

/// b_i = a_IP(target, psi_i) with the target's Hessian on triangles and its
/// traces on edges.
Eigen::VectorXd ritz_load(const Space& space, const SmoothTarget& target, PenaltySetting penalty);

/// Solves a_IP(P_h u - u, xi) = 0 for all xi and (P_h u - u, 1) = 0 through
/// the bordered saddle system. Throws std::runtime_error on a singular solve.
RitzResult ritz_project(std::shared_ptr<const Space> space, const SmoothTarget& target,
                        PenaltySetting penalty);

/// Initial data either as a smooth profile (Ritz-projected) or as ready-made
/// coefficients (returned unchanged).
using InitialData = std::variant<std::shared_ptr<const SmoothTarget>, Field>;

Field project_initial_data(std::shared_ptr<const Space> space, const InitialData& data,
                           PenaltySetting penalty);

/// Broken H^2 seminorm plus jump penalty of (target - field).
double norm_2h_error(const Field& field, const SmoothTarget& target, PenaltySetting penalty);

}  // namespace chcda
