#include "fdmv/losses.hpp"

#include <cmath>

namespace fdmv {

namespace {

void check_same_shape(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "loss inputs must have the same shape");
  require(a.rows() > 0 && a.cols() > 0, "loss inputs must be nonempty");
}

Matrix centered(const Matrix& y) { return y.rowwise() - y.colwise().mean(); }

// Zero mean, unit (population) variance columns.
Matrix standardized(const Matrix& y, const char* who) {
  Matrix c = centered(y);
  const double n = static_cast<double>(y.rows());
  for (Index j = 0; j < c.cols(); ++j) {
    const double sd = std::sqrt(c.col(j).squaredNorm() / n);
    if (!(sd > 1e-12)) throw ValidationError(std::string(who) + ": zero-variance dimension " + std::to_string(j));
    c.col(j) /= sd;
  }
  return c;
}

void fix_sign(Vector& v) {
  Index pivot = 0;
  const double peak = v.cwiseAbs().maxCoeff();
  while (std::abs(v(pivot)) < peak - 1e-12) ++pivot;
  if (v(pivot) < 0.0) v = -v;
}

}  // namespace

void LossConfig::validate() const {
  for (double v : {eta, bt_lambda, vicreg_inv, vicreg_var, vicreg_cov, cca_lambda})
    require(std::isfinite(v) && v >= 0.0, "loss weights must be finite and >= 0");
  require(std::isfinite(vicreg_eps) && vicreg_eps > 0.0, "vicreg_eps must be > 0");
}

PairLoss parse_pair_loss(const std::string& name) {
  if (name == "cosmean") return PairLoss::cosmean;
  if (name == "regularized_cosmean") return PairLoss::regularized_cosmean;
  if (name == "euclidean") return PairLoss::euclidean;
  if (name == "barlow_twins") return PairLoss::barlow_twins;
  if (name == "vicreg") return PairLoss::vicreg;
  if (name == "cca") return PairLoss::cca;
  throw ValidationError("unknown loss '" + name + "'");
}

std::string to_string(PairLoss kind) {
  switch (kind) {
    case PairLoss::cosmean: return "cosmean";
    case PairLoss::regularized_cosmean: return "regularized_cosmean";
    case PairLoss::euclidean: return "euclidean";
    case PairLoss::barlow_twins: return "barlow_twins";
    case PairLoss::vicreg: return "vicreg";
    case PairLoss::cca: return "cca";
  }
  return "?";
}

double cosmean(const Matrix& yl, const Matrix& yg) {
  check_same_shape(yl, yg);
  double total = 0.0;
  for (Index i = 0; i < yl.rows(); ++i) {
    const double nl = yl.row(i).norm(), ng = yg.row(i).norm();
    if (nl > 0.0 && ng > 0.0) total += yl.row(i).dot(yg.row(i)) / (nl * ng);
  }
  return 1.0 - total / static_cast<double>(yl.rows());
}

void cosmean_backward(const Matrix& yl, const Matrix& yg, double scale, Matrix& gl, Matrix& gg) {
  check_same_shape(yl, yg);
  const double s = -scale / static_cast<double>(yl.rows());
  for (Index i = 0; i < yl.rows(); ++i) {
    const double nl = yl.row(i).norm(), ng = yg.row(i).norm();
    if (!(nl > 0.0 && ng > 0.0)) continue;
    const double cos = yl.row(i).dot(yg.row(i)) / (nl * ng);
    gl.row(i) += s * (yg.row(i) / (nl * ng) - cos * yl.row(i) / (nl * nl));
    gg.row(i) += s * (yl.row(i) / (nl * ng) - cos * yg.row(i) / (ng * ng));
  }
}

DominantDirection dominant_direction_info(const Matrix& y) {
  require(y.rows() >= 1 && y.cols() >= 1, "dominant_direction: empty matrix");
  const Matrix yc = centered(y);
  const Matrix s = yc.transpose() * yc;
  const double scale = s.diagonal().sum();
  if (!(scale > 1e-300) || !(scale > 1e-24 * y.squaredNorm()))
    throw NumericalError("dominant_direction: centered embedding is numerically zero");

  const Index f = y.cols();
  DominantDirection out;
  if (f == 1) {
    out.direction = Vector::Ones(1);
    out.top = s(0, 0);
    return out;
  }

  // Two-vector subspace iteration with Rayleigh-Ritz; the second vector
  // yields the eigengap estimate.
  std::mt19937_64 rng(0x5eedULL);
  std::normal_distribution<double> normal;
  Matrix q(f, 2);
  for (Index j = 0; j < 2; ++j)
    for (Index i = 0; i < f; ++i) q(i, j) = normal(rng);
  q = Eigen::HouseholderQR<Matrix>(q).householderQ() * Matrix::Identity(f, 2);

  constexpr double kTol = 1e-10;
  constexpr int kMaxIter = 1000;
  for (int it = 1; it <= kMaxIter; ++it) {
    Matrix z = s * q;
    q = Eigen::HouseholderQR<Matrix>(z).householderQ() * Matrix::Identity(f, 2);
    Eigen::SelfAdjointEigenSolver<Matrix> small(q.transpose() * s * q);
    q = q * small.eigenvectors().rowwise().reverse();
    const double mu1 = small.eigenvalues()(1), mu2 = small.eigenvalues()(0);
    Vector v = q.col(0);
    const double residual = (s * v - mu1 * v).norm();
    if (mu1 - mu2 <= 1e-10 * mu1 && residual <= kTol * scale)
      throw ConvergenceError("dominant_direction: no eigengap (top two principal variances coincide)");
    if (residual <= kTol * scale) {
      fix_sign(v);
      out.direction = v;
      out.top = mu1;
      out.second = mu2;
      out.iterations = it;
      return out;
    }
  }
  throw ConvergenceError("dominant_direction: power iteration did not converge in 1000 iterations (eigengap ~ 0)");
}

Vector dominant_direction(const Matrix& y) { return dominant_direction_info(y).direction; }

Matrix dominant_direction_vjp(const Matrix& y, const DominantDirection& dd, const Vector& v) {
  const Matrix yc = centered(y);
  const Matrix s = yc.transpose() * yc;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(s);
  const Vector& c = dd.direction;
  // w = (mu I - S)^+ v restricted to the complement of c.
  Vector w = Vector::Zero(c.size());
  const Index f = c.size();
  for (Index k = 0; k < f - 1; ++k) {
    const auto qk = eig.eigenvectors().col(k);
    const double gap = dd.top - eig.eigenvalues()(k);
    if (gap > 0.0) w += (qk.dot(v) / gap) * qk;
  }
  return yc * (c * w.transpose() + w * c.transpose());
}

double regularized_cosmean(const Matrix& yk, const Matrix& yk2, double eta) {
  require(std::isfinite(eta) && eta >= 0.0, "eta must be >= 0");
  const double base = cosmean(yk, yk2);
  if (eta == 0.0) return base;
  return base + eta * std::abs(dominant_direction(yk).dot(dominant_direction(yk2)));
}

double total_loss(std::span<const ViewEmbedding> views, double eta) {
  require(views.size() >= 2, "total loss needs K >= 2 views");
  require(std::isfinite(eta) && eta >= 0.0, "eta must be >= 0");
  std::vector<Vector> dirs;
  if (eta != 0.0)
    for (const auto& v : views) dirs.push_back(dominant_direction(v.Y));
  double total = 0.0;
  const std::size_t k = views.size();
  for (std::size_t a = 0; a < k; ++a) {
    const std::size_t b = (a + 1) % k;
    total += cosmean(views[a].Y, views[b].Y);
    if (eta != 0.0) total += eta * std::abs(dirs[a].dot(dirs[b]));
  }
  return total;
}

double total_loss_backward(std::span<const ViewEmbedding> views, double eta, std::vector<Matrix>& grads) {
  require(views.size() >= 2, "total loss needs K >= 2 views");
  const std::size_t k = views.size();
  grads.assign(k, Matrix());
  for (std::size_t a = 0; a < k; ++a) grads[a] = Matrix::Zero(views[a].Y.rows(), views[a].Y.cols());

  std::vector<DominantDirection> dirs;
  if (eta != 0.0)
    for (const auto& v : views) dirs.push_back(dominant_direction_info(v.Y));

  double total = 0.0;
  std::vector<Vector> dir_grad(k);  // dL/dc_k
  for (std::size_t a = 0; a < k; ++a) {
    const std::size_t b = (a + 1) % k;
    total += cosmean(views[a].Y, views[b].Y);
    cosmean_backward(views[a].Y, views[b].Y, 1.0, grads[a], grads[b]);
    if (eta != 0.0) {
      const double inner = dirs[a].direction.dot(dirs[b].direction);
      total += eta * std::abs(inner);
      const double sgn = inner > 0.0 ? 1.0 : (inner < 0.0 ? -1.0 : 0.0);
      if (dir_grad[a].size() == 0) dir_grad[a] = Vector::Zero(dirs[a].direction.size());
      if (dir_grad[b].size() == 0) dir_grad[b] = Vector::Zero(dirs[b].direction.size());
      dir_grad[a] += eta * sgn * dirs[b].direction;
      dir_grad[b] += eta * sgn * dirs[a].direction;
    }
  }
  if (eta != 0.0)
    for (std::size_t a = 0; a < k; ++a) grads[a] += dominant_direction_vjp(views[a].Y, dirs[a], dir_grad[a]);
  return total;
}

double euclidean_loss(const Matrix& yl, const Matrix& yg) {
  check_same_shape(yl, yg);
  return (yl - yg).squaredNorm() / static_cast<double>(yl.rows());
}

double barlow_twins(const Matrix& yl, const Matrix& yg, double lambda) {
  check_same_shape(yl, yg);
  require(std::isfinite(lambda) && lambda >= 0.0, "Barlow Twins lambda must be >= 0");
  const Matrix c = standardized(yl, "barlow_twins").transpose() * standardized(yg, "barlow_twins") /
                   static_cast<double>(yl.rows());
  double on = 0.0, off = 0.0;
  for (Index i = 0; i < c.rows(); ++i)
    for (Index j = 0; j < c.cols(); ++j) {
      if (i == j)
        on += (1.0 - c(i, i)) * (1.0 - c(i, i));
      else
        off += c(i, j) * c(i, j);
    }
  return on + lambda * off;
}

double vicreg(const Matrix& yl, const Matrix& yg, double eta1, double eta2, double eta3, double eps) {
  check_same_shape(yl, yg);
  require(eta1 >= 0.0 && eta2 >= 0.0 && eta3 >= 0.0, "VICReg weights must be >= 0");
  require(eps > 0.0, "VICReg eps must be > 0");
  const double n = static_cast<double>(yl.rows());
  const double d = static_cast<double>(yl.cols());
  const double inv = (yl - yg).squaredNorm() / n;

  auto var_and_cov = [&](const Matrix& y, double& var_term, double& cov_term) {
    const Matrix c = centered(y);
    const Matrix cov = c.transpose() * c / n;
    for (Index j = 0; j < cov.rows(); ++j) {
      var_term += std::max(0.0, eps - std::sqrt(cov(j, j)));
      for (Index k = 0; k < cov.cols(); ++k)
        if (j != k) cov_term += cov(j, k) * cov(j, k);
    }
  };
  double var = 0.0, cov = 0.0;
  var_and_cov(yl, var, cov);
  var_and_cov(yg, var, cov);
  return eta1 * inv + eta2 * var / d + eta3 * cov / d;
}

double cca_loss(const Matrix& yl, const Matrix& yg, double lambda) {
  check_same_shape(yl, yg);
  require(std::isfinite(lambda) && lambda >= 0.0, "CCA lambda must be >= 0");
  const double root_n = std::sqrt(static_cast<double>(yl.rows()));
  const Matrix zl = standardized(yl, "cca_loss") / root_n;
  const Matrix zg = standardized(yg, "cca_loss") / root_n;
  const Matrix id = Matrix::Identity(yl.cols(), yl.cols());
  return (zl - zg).squaredNorm() +
         lambda * ((zl.transpose() * zl - id).squaredNorm() + (zg.transpose() * zg - id).squaredNorm());
}

double pair_loss(PairLoss kind, const Matrix& yl, const Matrix& yg, const LossConfig& cfg) {
  cfg.validate();
  switch (kind) {
    case PairLoss::cosmean: return cosmean(yl, yg);
    case PairLoss::regularized_cosmean: return regularized_cosmean(yl, yg, cfg.eta);
    case PairLoss::euclidean: return euclidean_loss(yl, yg);
    case PairLoss::barlow_twins: return barlow_twins(yl, yg, cfg.bt_lambda);
    case PairLoss::vicreg:
      return vicreg(yl, yg, cfg.vicreg_inv, cfg.vicreg_var, cfg.vicreg_cov, cfg.vicreg_eps);
    case PairLoss::cca: return cca_loss(yl, yg, cfg.cca_lambda);
  }
  return 0.0;
}

}  // namespace fdmv
