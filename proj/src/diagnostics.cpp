#include "chcda/diagnostics.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

namespace chcda {

AnalysisConstants AnalysisConstants::textbook() { return AnalysisConstants{}; }

namespace {

// Solves (B + c c^T) y = r through the bordered system [B c; c^T -1].
class BorderedSolver {
 public:
  BorderedSolver(const SparseMatrix& b, const Eigen::VectorXd& c) : n_(static_cast<int>(b.rows())) {
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(b.nonZeros()) + 2 * static_cast<std::size_t>(n_) + 1);
    for (int col = 0; col < b.outerSize(); ++col) {
      for (SparseMatrix::InnerIterator it(b, col); it; ++it) triplets.emplace_back(it.row(), it.col(), it.value());
    }
    for (int i = 0; i < n_; ++i) {
      if (c[i] == 0.0) continue;
      triplets.emplace_back(i, n_, c[i]);
      triplets.emplace_back(n_, i, c[i]);
    }
    triplets.emplace_back(n_, n_, -1.0);
    SparseMatrix bordered(n_ + 1, n_ + 1);
    bordered.setFromTriplets(triplets.begin(), triplets.end());
    bordered.makeCompressed();
    lu_.compute(bordered);
    if (lu_.info() != Eigen::Success) {
      throw std::runtime_error("extremal_generalized_eigenvalues: factorization failed (" +
                               lu_.lastErrorMessage() + ")");
    }
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& r) const {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_ + 1);
    rhs.head(n_) = r;
    const Eigen::VectorXd sol = lu_.solve(rhs);
    return sol.head(n_);
  }

 private:
  int n_;
  Eigen::SparseLU<SparseMatrix> lu_;
};

struct Quadrature {
  double weight;
  double value;
  Eigen::Vector2d grad;
};

template <typename Fn>
void for_each_quadrature_point(const Space& space, const Eigen::VectorXd& phi, Fn&& fn) {
  const auto& rule = space.volume_rule();
  for (int t = 0; t < space.mesh().num_triangles(); ++t) {
    const ElementGeometry& g = space.geometry(t);
    const double det = std::abs(g.det);
    const auto& dofs = space.dofs().element(t);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      BasisValues b = space.reference_tables()[q];
      g.push_forward(b);
      Quadrature qp{rule.points[q].weight * det, 0.0, Eigen::Vector2d::Zero()};
      for (int i = 0; i < 6; ++i) {
        qp.value += phi[dofs[i]] * b.value[i];
        qp.grad += phi[dofs[i]] * b.grad[i];
      }
      fn(qp);
    }
  }
}

void require_same_space(const Field& a, const Field& b) {
  if (a.values.size() != b.values.size()) {
    throw std::invalid_argument("fields live on different spaces");
  }
}

}  // namespace

ExtremalEigenvalues extremal_generalized_eigenvalues(const SparseMatrix& a, const SparseMatrix& b,
                                                     const Eigen::VectorXd& c, double rel_tol,
                                                     int max_iter) {
  const int n = static_cast<int>(a.rows());
  if (b.rows() != n || c.size() != n) {
    throw std::invalid_argument("extremal_generalized_eigenvalues: size mismatch");
  }
  const BorderedSolver b_tilde(b, c);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  const double c_ones = c.sum();
  auto deflate = [&](Eigen::VectorXd& x) { x -= (c.dot(x) / c_ones) * ones; };
  auto apply_b = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return b * x + c * c.dot(x);
  };

  const int steps_cap = std::min(max_iter, n - 1);
  std::vector<Eigen::VectorXd> q;
  std::vector<Eigen::VectorXd> bq;
  std::vector<double> alpha, beta;

  std::mt19937_64 rng(0x5eed1234abcdULL);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = unit(rng);
  deflate(v);
  Eigen::VectorXd bv = apply_b(v);
  double norm = std::sqrt(v.dot(bv));
  v /= norm;
  bv /= norm;

  ExtremalEigenvalues out;
  for (int j = 0; j < steps_cap; ++j) {
    q.push_back(v);
    bq.push_back(bv);
    const Eigen::VectorXd av = a * v + c * c.dot(v);
    const double aj = v.dot(av);
    alpha.push_back(aj);
    Eigen::VectorXd w = b_tilde.solve(av);
    w -= aj * q[j];
    if (j > 0) w -= beta[j - 1] * q[j - 1];
    for (int pass = 0; pass < 2; ++pass) {
      for (int k = 0; k <= j; ++k) w -= bq[k].dot(w) * q[k];
      deflate(w);
    }
    Eigen::VectorXd bw = apply_b(w);
    const double bj = std::sqrt(std::max(w.dot(bw), 0.0));

    const int m = j + 1;
    Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(m, m);
    for (int k = 0; k < m; ++k) {
      tri(k, k) = alpha[k];
      if (k + 1 < m) tri(k, k + 1) = tri(k + 1, k) = beta[k];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tri);
    const Eigen::VectorXd& theta = es.eigenvalues();
    const double res_min = bj * std::abs(es.eigenvectors()(m - 1, 0));
    const double res_max = bj * std::abs(es.eigenvectors()(m - 1, m - 1));
    out.min = theta[0];
    out.max = theta[m - 1];
    out.iterations = m;
    const double scale = std::max(std::abs(out.min), std::abs(out.max));
    const bool done_min = res_min <= rel_tol * std::max(std::abs(out.min), 1e-300 + 1e-12 * scale);
    const bool done_max = res_max <= rel_tol * std::abs(out.max);
    const bool exhausted = bj <= 1e-14 * scale;
    if ((m >= 2 && done_min && done_max) || exhausted) {
      out.converged = true;
      break;
    }
    beta.push_back(bj);
    v = w / bj;
    bv = bw / bj;
  }
  return out;
}

CoercivityEstimate estimate_coercivity_continuity(const Space& space, PenaltySetting penalty) {
  const SparseMatrix a = assemble_cip(space, penalty).matrix;
  const SparseMatrix g = assemble_norm_2h_gram(space, penalty).matrix;
  const Eigen::VectorXd c = assemble_mass(space).matrix * Eigen::VectorXd::Ones(space.num_dofs());
  const ExtremalEigenvalues ev = extremal_generalized_eigenvalues(a, g, c);
  return {ev.min, ev.max, ev.iterations, ev.converged};
}

double estimate_poincare_constant(const Space& space, PenaltySetting penalty) {
  const SparseMatrix m = assemble_mass(space).matrix;
  const SparseMatrix k = assemble_stiffness(space).matrix;
  const SparseMatrix g = assemble_norm_2h_gram(space, penalty).matrix;
  const Eigen::VectorXd c = m * Eigen::VectorXd::Ones(space.num_dofs());
  const ExtremalEigenvalues km = extremal_generalized_eigenvalues(k, m, c);
  const ExtremalEigenvalues kg = extremal_generalized_eigenvalues(k, g, c);
  return std::max(1.0 / std::sqrt(km.min), std::sqrt(kg.max));
}

double estimate_interpolation_constant(const CoarseObservationGrid& grid) {
  const Space& space = *grid.space();
  const SparseMatrix m = assemble_mass(space).matrix;
  const SparseMatrix k = assemble_stiffness(space).matrix;
  const SparseMatrix residual = m - assemble_nudging(grid).matrix;
  const Eigen::VectorXd c = m * Eigen::VectorXd::Ones(space.num_dofs());
  const ExtremalEigenvalues ev = extremal_generalized_eigenvalues(residual, k, c);
  return std::sqrt(std::max(ev.max, 0.0)) / grid.resolution();
}

AnalysisConstants estimate_constants(const CoarseObservationGrid& grid, PenaltySetting penalty,
                                     const Field& reference) {
  const Space& space = *grid.space();
  AnalysisConstants c;
  const CoercivityEstimate ce = estimate_coercivity_continuity(space, penalty);
  c.c_coer = ce.c_coer;
  c.c_cont = ce.c_cont;
  c.c_p = estimate_poincare_constant(space, penalty);
  c.c_i = estimate_interpolation_constant(grid);
  c.c_inf = sup_norm(space, reference.values);
  c.c_data = l2_norm(reference);
  c.c_data_prime = c.c_inf;
  c.label = "estimated";
  return c;
}

double l2_norm(const Space& space, const Eigen::VectorXd& phi) {
  double sum = 0.0;
  for_each_quadrature_point(space, phi, [&](const Quadrature& qp) { sum += qp.weight * qp.value * qp.value; });
  return std::sqrt(sum);
}

double l2_error(const Space& space, const Eigen::VectorXd& phi, const Eigen::VectorXd& reference) {
  if (phi.size() != reference.size()) throw std::invalid_argument("l2_error: size mismatch");
  return l2_norm(space, phi - reference);
}

double l2_norm(const Field& phi) { return l2_norm(*phi.space, phi.values); }

double l2_error(const Field& phi, const Field& reference) {
  require_same_space(phi, reference);
  return l2_error(*phi.space, phi.values, reference.values);
}

double energy(const Space& space, const Eigen::VectorXd& phi, double epsilon) {
  const double half_eps2 = 0.5 * epsilon * epsilon;
  double sum = 0.0;
  for_each_quadrature_point(space, phi, [&](const Quadrature& qp) {
    const double w = qp.value * qp.value - 1.0;
    sum += qp.weight * (0.25 * w * w + half_eps2 * qp.grad.squaredNorm());
  });
  return sum;
}

double energy(const Field& phi, double epsilon) { return energy(*phi.space, phi.values, epsilon); }

double mass(const Space& space, const Eigen::VectorXd& phi) {
  double sum = 0.0;
  for_each_quadrature_point(space, phi, [&](const Quadrature& qp) { sum += qp.weight * qp.value; });
  return sum;
}

double sup_norm(const Space& space, const Eigen::VectorXd& phi) {
  double sup = phi.size() > 0 ? phi.cwiseAbs().maxCoeff() : 0.0;
  for_each_quadrature_point(space, phi, [&](const Quadrature& qp) { sup = std::max(sup, std::abs(qp.value)); });
  return sup;
}

GradSplitReport verify_grad_split(std::shared_ptr<const Space> space, PenaltySetting penalty,
                                  int samples, std::uint64_t seed) {
  const SparseMatrix m = assemble_mass(*space).matrix;
  const SparseMatrix k = assemble_stiffness(*space).matrix;
  const SparseMatrix g = assemble_norm_2h_gram(*space, penalty).matrix;
  const int n = space->num_dofs();

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_int_distribution<int> mode(1, 4);
  auto random_field = [&] {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = unit(rng);
    return v;
  };
  auto smooth_field = [&] {
    const int kx = mode(rng), ky = mode(rng);
    const double a = unit(rng), b = unit(rng), shift = unit(rng);
    return interpolate_nodal(space, [&](const Eigen::Vector2d& x) {
             return a * std::cos(kx * std::numbers::pi * x.x()) * std::cos(ky * std::numbers::pi * x.y()) +
                    b * std::tanh((x.x() - 0.5 - 0.3 * shift) / 0.07) + 0.2 * shift;
           }).values;
  };

  GradSplitReport report;
  for (int s = 0; s < samples; ++s) {
    Eigen::VectorXd w, v;
    switch (s % 4) {
      case 0: w = random_field(); v = random_field(); break;
      case 1: w = smooth_field(); v = random_field(); break;
      case 2: w = smooth_field(); v = smooth_field(); break;
      default: w = (s % 8 == 3) ? smooth_field() : random_field(); v = w; break;
    }
    const double wn = std::sqrt(std::max(w.dot(g * w), 0.0));
    const double vn = std::sqrt(std::max(v.dot(m * v), 0.0));
    if (wn < 1e-14 || vn < 1e-14) {
      ++report.excluded;
      continue;
    }
    report.max_ratio = std::max(report.max_ratio, std::abs(w.dot(k * v)) / (wn * vn));
    ++report.samples;
  }
  report.holds = report.max_ratio <= std::numbers::sqrt2 + 1e-10;
  return report;
}

std::string to_string(DecayStatus status) {
  switch (status) {
    case DecayStatus::decaying: return "decaying";
    case DecayStatus::non_decaying: return "non-decaying";
    case DecayStatus::degenerate: return "degenerate";
  }
  return "unknown";
}

DecayFit fit_decay_envelope(std::span<const double> errors, double dt) {
  const int n = static_cast<int>(errors.size());
  if (n < 20) throw std::invalid_argument("fit_decay_envelope: need at least 20 entries");
  DecayFit fit;
  fit.rate = std::numeric_limits<double>::quiet_NaN();
  fit.log_slope = std::numeric_limits<double>::quiet_NaN();
  fit.ratio = std::numeric_limits<double>::quiet_NaN();

  const double largest = *std::max_element(errors.begin(), errors.end());
  if (!(largest > 0.0)) {
    fit.status = DecayStatus::degenerate;
    fit.plateau = 0.0;
    return fit;
  }

  const int tail = std::max(1, n / 10);
  std::vector<double> last(errors.end() - tail, errors.end());
  std::sort(last.begin(), last.end());
  fit.plateau = tail % 2 == 1 ? last[tail / 2] : 0.5 * (last[tail / 2 - 1] + last[tail / 2]);

  fit.window_begin = std::min(2, n - 1);
  fit.window_end = n;
  for (int i = fit.window_begin; i < n; ++i) {
    if (errors[i] < 10.0 * fit.plateau) {
      fit.window_end = i;
      break;
    }
  }

  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int count = 0;
  for (int i = fit.window_begin; i < fit.window_end; ++i) {
    const double excess = errors[i] - fit.plateau;
    if (!(excess > 0.0)) continue;
    const double x = i, y = std::log(excess);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++count;
  }
  if (count < 3) {
    fit.status = DecayStatus::non_decaying;
    return fit;
  }
  const double denom = count * sxx - sx * sx;
  fit.log_slope = (count * sxy - sx * sy) / denom;
  fit.ratio = std::exp(-fit.log_slope);
  if (dt > 0.0) fit.rate = (fit.ratio - 1.0) / dt;
  fit.status = fit.log_slope < 0.0 ? DecayStatus::decaying : DecayStatus::non_decaying;
  return fit;
}

}  // namespace chcda
