#include "fdmv/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fdmv/fde.hpp"

namespace fdmv {

void ProbeConfig::validate() const {
  require(std::isfinite(l2_weight) && l2_weight >= 0.0, "probe l2_weight must be >= 0");
  require(epochs >= 1, "probe epochs must be >= 1");
  require(std::isfinite(lr) && lr > 0.0, "probe lr must be > 0");
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_split_labels(const std::vector<Index>& split, const std::vector<int>& labels, const char* name) {
  for (Index i : split)
    require(labels[static_cast<std::size_t>(i)] >= 0,
            std::string("probe: node ") + std::to_string(i) + " in the " + name + " split has no label");
}

}  // namespace

ProbeResult linear_probe(const Matrix& y, const std::vector<int>& labels, const Splits& splits,
                         const ProbeConfig& cfg) {
  cfg.validate();
  require(static_cast<Index>(labels.size()) == y.rows(), "probe: one label per embedding row is required");
  require(y.allFinite(), "probe: embeddings must be finite");
  splits.validate(y.rows());
  require(!splits.train.empty(), "probe: empty training split");
  check_split_labels(splits.train, labels, "train");
  check_split_labels(splits.val, labels, "val");
  check_split_labels(splits.test, labels, "test");

  int n_classes = 0;
  std::vector<bool> present;
  for (Index i : splits.train) n_classes = std::max(n_classes, labels[static_cast<std::size_t>(i)] + 1);
  for (int l : labels) n_classes = std::max(n_classes, l + 1);
  present.assign(static_cast<std::size_t>(n_classes), false);
  for (Index i : splits.train) present[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])] = true;
  require(std::count(present.begin(), present.end(), true) >= 2, "probe: training split has a single class");

  const Index n = static_cast<Index>(splits.train.size());
  Matrix xt(n, y.cols());
  Matrix target = Matrix::Zero(n, n_classes);
  for (Index r = 0; r < n; ++r) {
    const Index i = splits.train[static_cast<std::size_t>(r)];
    xt.row(r) = y.row(i);
    target(r, labels[static_cast<std::size_t>(i)]) = 1.0;
  }
  const Eigen::RowVectorXd mean = xt.colwise().mean();
  xt.rowwise() -= mean;

  // Softmax cross-entropy is (1/2) lambda_max(X^T X / n)-smooth in W; the bias adds 1/2.
  double lambda_max = 0.0;
  if (xt.cols() > 0) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(xt.transpose() * xt / static_cast<double>(n), Eigen::EigenvaluesOnly);
    lambda_max = eig.eigenvalues().maxCoeff();
  }
  const double smooth = 0.5 * std::max(lambda_max, 1.0) + cfg.l2_weight;
  const double step = cfg.lr / smooth;

  Matrix w = Matrix::Zero(y.cols(), n_classes);
  Eigen::RowVectorXd bias = Eigen::RowVectorXd::Zero(n_classes);
  auto softmax_rows = [](Matrix z) {
    for (Index r = 0; r < z.rows(); ++r) {
      z.row(r).array() -= z.row(r).maxCoeff();
      z.row(r) = z.row(r).array().exp().matrix();
      z.row(r) /= z.row(r).sum();
    }
    return z;
  };
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Matrix logits = xt * w;
    logits.rowwise() += bias;
    const Matrix residual = (softmax_rows(std::move(logits)) - target) / static_cast<double>(n);
    w -= step * (xt.transpose() * residual + cfg.l2_weight * w);
    bias -= step * residual.colwise().sum();
  }
  if (!w.allFinite()) throw NumericalError("probe: training diverged");

  auto accuracy = [&](const std::vector<Index>& split) {
    if (split.empty()) return kNaN;
    Index correct = 0;
    for (Index i : split) {
      Eigen::RowVectorXd z = (y.row(i) - mean) * w + bias;
      Index pred = 0;
      z.maxCoeff(&pred);
      if (pred == labels[static_cast<std::size_t>(i)]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(split.size());
  };
  return {accuracy(splits.train), accuracy(splits.val), accuracy(splits.test)};
}

std::map<int, ClassRatio> rc_ratio(const Matrix& y, const std::vector<int>& labels) {
  require(static_cast<Index>(labels.size()) == y.rows(), "rc_ratio: one label per row is required");
  std::map<int, std::vector<Index>> members;
  for (Index i = 0; i < y.rows(); ++i)
    if (labels[static_cast<std::size_t>(i)] >= 0) members[labels[static_cast<std::size_t>(i)]].push_back(i);

  std::map<int, ClassRatio> out;
  for (const auto& [c, idx] : members) {
    ClassRatio r;
    r.members = static_cast<Index>(idx.size());
    if (idx.size() < 2) {
      r.flag = "too_few_members";
      out[c] = r;
      continue;
    }
    double intra = 0.0;
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < idx.size(); ++a)
      for (std::size_t b = a + 1; b < idx.size(); ++b, ++pairs) intra += (y.row(idx[a]) - y.row(idx[b])).norm();
    double inter = 0.0;
    std::size_t cross = 0;
    for (const auto& [c2, idx2] : members) {
      if (c2 == c) continue;
      for (Index i : idx)
        for (Index j : idx2) {
          inter += (y.row(i) - y.row(j)).norm();
          ++cross;
        }
    }
    r.d_intra = intra / static_cast<double>(pairs);
    r.d_inter = cross ? inter / static_cast<double>(cross) : 0.0;
    if (!(r.d_intra > 0.0)) {
      r.flag = "zero_intra_distance";
    } else if (cross == 0) {
      r.flag = "no_other_class";
    } else {
      r.defined = true;
      r.r = r.d_inter / r.d_intra;
    }
    out[c] = r;
  }
  return out;
}

Vector energy_spectrum(const Matrix& y) {
  require(y.rows() >= 2, "energy_spectrum: need at least two rows");
  const Matrix yc = y.rowwise() - y.colwise().mean();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(yc.transpose() * yc / static_cast<double>(y.rows()),
                                            Eigen::EigenvaluesOnly);
  Vector ev = eig.eigenvalues().reverse();
  return ev.cwiseMax(0.0);
}

Index effective_rank(const Matrix& y, double theta) {
  require(theta > 0.0 && theta <= 1.0, "effective_rank: theta must be in (0, 1]");
  const Vector ev = energy_spectrum(y);
  const double total = ev.sum();
  if (!(total > 0.0)) return 0;
  double acc = 0.0;
  for (Index k = 0; k < ev.size(); ++k) {
    acc += ev(k);
    if (acc >= theta * total * (1.0 - 1e-12)) return k + 1;
  }
  return ev.size();
}

Vector fourier_spread(const SpectralBasis& basis, const Matrix& y) {
  require(y.rows() == basis.size(), "fourier_spread: rows do not match the basis");
  return gft(basis, y).rowwise().norm();
}

Matrix mean_pool_readout(const Matrix& y, const std::vector<Index>& assignment) {
  require(static_cast<Index>(assignment.size()) == y.rows(), "readout: every node needs a graph id");
  Index groups = 0;
  for (Index g : assignment) {
    require(g >= 0, "readout: graph ids must be >= 0");
    groups = std::max(groups, g + 1);
  }
  Matrix pooled = Matrix::Zero(groups, y.cols());
  std::vector<Index> counts(static_cast<std::size_t>(groups), 0);
  for (Index i = 0; i < y.rows(); ++i) {
    pooled.row(assignment[i]) += y.row(i);
    ++counts[static_cast<std::size_t>(assignment[i])];
  }
  for (Index g = 0; g < groups; ++g) {
    require(counts[static_cast<std::size_t>(g)] > 0, "readout: graph " + std::to_string(g) + " has no nodes");
    pooled.row(g) /= static_cast<double>(counts[static_cast<std::size_t>(g)]);
  }
  return pooled;
}

Vector skip_expansion_coefficients(double alpha, double lambda, int m, int n, AsymptoticSign sign) {
  require(m >= 1 && n >= 0, "expansion: need m >= 1 and n >= 0");
  // Polynomials in x = tau^{-alpha}, truncated at degree n; index = degree.
  std::vector<double> e(static_cast<std::size_t>(n) + 1, 0.0);
  for (int j = 1; j <= n; ++j) e[static_cast<std::size_t>(j)] = ml_asymptotic_coefficient(alpha, lambda, j, sign);
  std::vector<double> power(e.size(), 0.0), total(e.size(), 0.0);
  power[0] = 1.0;
  for (int k = 1; k <= m; ++k) {
    std::vector<double> next(e.size(), 0.0);
    for (std::size_t a = 0; a < e.size(); ++a)
      for (std::size_t b = 1; a + b < e.size(); ++b) next[a + b] += power[a] * e[b];
    power = next;
    for (std::size_t d = 0; d < e.size(); ++d) total[d] += power[d];
  }
  Vector out(n);
  for (int j = 1; j <= n; ++j) out(j - 1) = total[static_cast<std::size_t>(j)];
  return out;
}

namespace {

TheoremView theorem_view(const Vector& lambda, const Vector& coeffs, double alpha, double tau, int m,
                         AsymptoticSign sign) {
  TheoremView v;
  v.alpha = alpha;
  v.order = alpha < 1.0 ? asymptotic_order(alpha) : 0;
  const Index n = lambda.size();
  v.exact = skip_multipliers(lambda, alpha, tau, m);
  v.asymptotic = Vector::Constant(n, 1.0);
  v.b = Matrix::Constant(n, v.order, kNaN);
  const double x = std::pow(tau, -alpha);
  for (Index i = 0; i < n; ++i) {
    if (lambda(i) < 1e-9) {
      v.asymptotic(i) = m + 1.0;
      continue;
    }
    const Vector b = skip_expansion_coefficients(alpha, lambda(i), m, v.order, sign);
    v.b.row(i) = b.transpose();
    double xp = 1.0;
    for (int j = 0; j < v.order; ++j) {
      xp *= x;
      v.asymptotic(i) += b(j) * xp;
    }
  }
  v.output_coefficients = v.exact.cwiseProduct(coeffs).cwiseAbs();
  return v;
}

}  // namespace

SpectralReport check_theorem_sgi(const SpectralBasis& basis, const Vector& x, double alpha_l, double alpha_g,
                                 double tau, int m, AsymptoticSign sign, double tolerance) {
  require(0.0 < alpha_l && alpha_l < alpha_g && alpha_g <= 1.0, "theorem check: need 0 < alpha_l < alpha_g <= 1");
  require(std::isfinite(tau) && tau > 0.0, "theorem check: tau must be > 0");
  require(m >= 1, "theorem check: m must be >= 1");
  require(x.size() == basis.size(), "theorem check: signal length does not match the basis");
  const Index zeros = (basis.eigenvalues.array().abs() < 1e-9).count();
  require(zeros == 1, "theorem check: graph must be connected (found " + std::to_string(zeros) +
                          " zero eigenvalues)");

  SpectralReport r;
  r.tau = tau;
  r.m = m;
  r.sign = sign;
  r.tolerance = tolerance;
  r.eigenvalues = basis.eigenvalues;
  const Vector coeffs = gft(basis, x);
  r.local = theorem_view(basis.eigenvalues, coeffs, alpha_l, tau, m, sign);
  r.global = theorem_view(basis.eigenvalues, coeffs, alpha_g, tau, m, sign);

  auto note = [&](const std::string& s) {
    if (r.violations.size() < 50) r.violations.push_back(s);
  };
  const Index n = basis.size();
  for (const TheoremView* v : {&r.local, &r.global}) {
    for (Index i = 1; i < n; ++i) {
      for (int j = 0; j < v->order; ++j) {
        const double b = v->b(i, j);
        if (!(b > 0.0)) {
          r.positivity = false;
          std::ostringstream s;
          s << "positivity: alpha=" << v->alpha << " i=" << i << " j=" << j + 1 << " b=" << b;
          note(s.str());
        }
        if (i >= 2 && b > v->b(i - 1, j) + 1e-12 * std::abs(v->b(i - 1, j))) {
          r.monotone = false;
          std::ostringstream s;
          s << "monotone: alpha=" << v->alpha << " j=" << j + 1 << " b(" << i << ")=" << b << " > b(" << i - 1
            << ")=" << v->b(i - 1, j);
          note(s.str());
        }
      }
      const double rel = std::abs(v->exact(i) - v->asymptotic(i)) / std::abs(v->exact(i));
      r.max_relative_error = std::max(r.max_relative_error, rel);
      if (!(rel <= tolerance)) {
        r.agreement = false;
        std::ostringstream s;
        s << "agreement: alpha=" << v->alpha << " i=" << i << " lambda=" << basis.eigenvalues(i)
          << " rel_error=" << rel;
        note(s.str());
      }
    }
  }
  const int common = std::min(r.local.order, r.global.order);
  for (Index i = 1; i < n; ++i)
    for (int j = 0; j < common; ++j)
      if (!(r.local.b(i, j) > r.global.b(i, j))) {
        r.ordering = false;
        std::ostringstream s;
        s << "ordering: i=" << i << " j=" << j + 1 << " b_l=" << r.local.b(i, j) << " b_g=" << r.global.b(i, j);
        note(s.str());
      }
  return r;
}

StabilityCurve discrepancy_curve(const SpectralBasis& a, const Matrix& ya, const SpectralBasis& b, const Matrix& yb,
                                 std::span<const Channel> channels, std::span<const double> times, double epsilon) {
  require(!channels.empty(), "stability: at least one channel is required");
  require(!times.empty(), "stability: empty time grid");
  require(ya.rows() == a.size() && yb.rows() == b.size() && ya.rows() == yb.rows() && ya.cols() == yb.cols(),
          "stability: state dimensions do not match");
  require(std::is_sorted(times.begin(), times.end()) && times.front() > 0.0,
          "stability: times must be positive and ascending");
  require(std::isfinite(epsilon) && epsilon > 0.0, "stability: perturbation magnitude must be > 0");
  StabilityCurve c;
  c.epsilon = epsilon;
  c.bound_alpha = 0.0;
  for (const auto& ch : channels) c.bound_alpha = std::max(c.bound_alpha, ch.alpha);
  const Matrix ha = gft(a, ya), hb = gft(b, yb);
  for (double t : times) {
    Matrix diff = Matrix::Zero(ya.rows(), ya.cols());
    for (const auto& ch : channels) {
      diff += ch.beta * (a.eigenvectors * (diffusion_multipliers(a.eigenvalues, ch.alpha, t).asDiagonal() * ha));
      diff -= ch.beta * (b.eigenvectors * (diffusion_multipliers(b.eigenvalues, ch.alpha, t).asDiagonal() * hb));
    }
    c.times.push_back(t);
    c.discrepancy.push_back(diff.norm());
  }
  c.fitted_C = c.discrepancy.front() / (epsilon * std::pow(c.times.front(), c.bound_alpha - 1.0));
  for (std::size_t k = 0; k < c.times.size(); ++k) {
    c.bound.push_back(c.fitted_C * epsilon * std::pow(c.times[k], c.bound_alpha - 1.0));
    if (c.discrepancy[k] > c.bound[k] * (1.0 + 1e-12)) c.bound_holds = false;
  }
  return c;
}

StabilityCurve stability_init_state(const SpectralBasis& basis, const Matrix& y0, const Matrix& direction,
                                    double eps, std::span<const Channel> channels, std::span<const double> times) {
  require(direction.rows() == y0.rows() && direction.cols() == y0.cols(), "stability: direction shape mismatch");
  const double norm = direction.norm();
  require(norm > 0.0, "stability: zero perturbation direction");
  const Matrix perturbed = y0 + (eps / norm) * direction;
  return discrepancy_curve(basis, y0, basis, perturbed, channels, times, eps);
}

StabilityCurve stability_weights(const SpectralBasis& basis, const Matrix& x, const Matrix& w, const Matrix& dw,
                                 std::span<const Channel> channels, std::span<const double> times) {
  require(x.cols() == w.rows() && w.rows() == dw.rows() && w.cols() == dw.cols(), "stability: weight shape mismatch");
  const double eps = (x * dw).norm();
  return discrepancy_curve(basis, x * w, basis, x * (w + dw), channels, times, eps);
}

StabilityCurve stability_topology(const Graph& g, const Matrix& y0, double ratio, PerturbMode mode,
                                  std::uint64_t seed, std::span<const Channel> channels,
                                  std::span<const double> times) {
  const Graph perturbed = perturb_graph(g, ratio, mode, seed);
  const double eps = ((normalized_laplacian(g) - normalized_laplacian(perturbed)) * y0).norm();
  return discrepancy_curve(spectral_basis(g), y0, spectral_basis(perturbed), y0, channels, times, eps);
}

}  // namespace fdmv
