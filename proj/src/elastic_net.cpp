#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "earlywarn/errors.hpp"
#include "earlywarn/learners.hpp"

namespace ew::learners {
namespace {

struct Standardized {
  Matrix z;
  Vector mean;
  Vector scale;
};

Standardized standardize(const Eigen::Ref<const Matrix>& x) {
  Standardized s;
  const double n = static_cast<double>(x.rows());
  s.mean = x.colwise().mean().transpose();
  s.scale.resize(x.cols());
  s.z.resize(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double var = (x.col(j).array() - s.mean(j)).square().sum() / n;
    const double sd = std::sqrt(var);
    if (sd <= 1e-12 * std::max(1.0, std::abs(s.mean(j)))) {
      s.scale(j) = 0.0;
      s.z.col(j).setZero();
    } else {
      s.scale(j) = sd;
      s.z.col(j) = (x.col(j).array() - s.mean(j)) / sd;
    }
  }
  return s;
}

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

void check_labels(const Eigen::Ref<const Vector>& y) {
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (y(i) != 0.0 && y(i) != 1.0) throw DomainError("labels must be 0 or 1");
  const double s = y.sum();
  if (s == 0.0 || s == static_cast<double>(y.size()))
    throw FitError("degenerate fit: all labels belong to one class");
}

// Proximal Newton: each outer step minimizes the penalized quadratic
// approximation of the loss by cyclic coordinate descent, then backtracks
// along the step until the true objective does not increase.
class Solver {
 public:
  Solver(const Matrix& z, const Eigen::Ref<const Vector>& y, const Vector& scale)
      : z_(z), y_(y), scale_(scale), n_(static_cast<double>(z.rows())) {
    beta_ = Vector::Zero(z.cols());
    const double ybar = y.mean();
    b0_ = std::log(ybar / (1.0 - ybar));
    eta_ = Vector::Constant(z.rows(), b0_);
  }

  void set_penalty(double lambda, double alpha) {
    l1_ = lambda * alpha;
    l2_ = lambda * (1.0 - alpha);
  }

  double objective() const { return objective_at(eta_, beta_); }

  // One outer step; returns the largest coefficient change actually taken.
  double step(double inner_tolerance) {
    const Eigen::Index n = z_.rows(), p = z_.cols();
    Vector w(n), u(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double q = sigmoid(eta_(i));
      w(i) = std::max(q * (1.0 - q), 1e-5);
      u(i) = eta_(i) + (y_(i) - q) / w(i);
    }
    // The intercept is profiled out by weighted centering, leaving the
    // quadratic 0.5 b'Cb - c'b in the coefficients alone.
    const double wsum = w.sum();
    const Vector zbar = z_.transpose() * w / wsum;
    const double ubar = w.dot(u) / wsum;
    const Matrix zw = z_.array().colwise() * w.array();
    const Matrix c2 = (z_.transpose() * zw - wsum * zbar * zbar.transpose()) / n_;
    const Vector c1 = (zw.transpose() * u - wsum * ubar * zbar) / n_;

    Vector beta = beta_;
    Vector cb = c2 * beta;
    const auto coordinate = [&](Eigen::Index j) {
      if (scale_(j) == 0.0) return 0.0;
      const double old = beta(j);
      const double g = c1(j) - cb(j) + c2(j, j) * old;
      const double next = soft_threshold(g, l1_) / (c2(j, j) + l2_);
      if (next == old) return 0.0;
      cb += (next - old) * c2.col(j);
      beta(j) = next;
      return std::abs(next - old);
    };

    for (int pass = 0; pass < 1000; ++pass) {
      double full = 0;
      for (Eigen::Index j = 0; j < p; ++j) full = std::max(full, coordinate(j));
      if (full < inner_tolerance) break;
      std::vector<Eigen::Index> active;
      for (Eigen::Index j = 0; j < p; ++j)
        if (beta(j) != 0.0) active.push_back(j);
      for (int inner = 0; inner < 1000; ++inner) {
        double d = 0;
        for (Eigen::Index j : active) d = std::max(d, coordinate(j));
        if (d < inner_tolerance) break;
      }
    }
    const double b0 = ubar - zbar.dot(beta);

    const Vector dbeta = beta - beta_;
    const double db0 = b0 - b0_;
    const Vector deta = (z_ * dbeta).array() + db0;
    const double current = objective();
    for (double t = 1.0; t > 1e-10; t /= 2.0) {
      const Vector eta = eta_ + t * deta;
      const Vector cand = beta_ + t * dbeta;
      if (objective_at(eta, cand) <= current) {
        // A full step keeps exact zeros from the soft threshold.
        beta_ = t == 1.0 ? beta : cand;
        b0_ += t * db0;
        eta_ = eta;
        return std::max(t * dbeta.lpNorm<Eigen::Infinity>(), t * std::abs(db0));
      }
    }
    return 0.0;
  }

  double intercept() const { return b0_; }
  const Vector& beta() const { return beta_; }

 private:
  double objective_at(const Vector& eta, const Vector& beta) const {
    double s = 0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) s += softplus(eta(i)) - y_(i) * eta(i);
    return s / n_ + l1_ * beta.lpNorm<1>() + 0.5 * l2_ * beta.squaredNorm();
  }

  const Matrix& z_;
  Eigen::Ref<const Vector> y_;
  const Vector& scale_;
  double n_;
  double l1_ = 0.0, l2_ = 0.0;
  double b0_ = 0.0;
  Vector beta_, eta_;
};

void run_to_convergence(Solver& solver, const FitControl& control, ElasticNetModel& model) {
  int sweeps = 0;
  while (sweeps < control.max_sweeps) {
    const double change = solver.step(control.tolerance * 0.1);
    ++sweeps;
    if (control.record_objective) model.objective_trace.push_back(solver.objective());
    if (change < control.tolerance) break;
  }
  model.sweeps = sweeps;
  model.intercept = solver.intercept();
  model.coefficients = solver.beta();
  model.fitted = true;
}

}  // namespace

double ElasticNetModel::linear_score(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  double s = intercept;
  for (Eigen::Index j = 0; j < coefficients.size(); ++j)
    if (feature_scales(j) > 0.0 && coefficients(j) != 0.0)
      s += coefficients(j) * (x(j) - feature_means(j)) / feature_scales(j);
  return s;
}

ElasticNetModel fit_elastic_net(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Vector>& y,
                                const ElasticNetParams& params, const FitControl& control) {
  auto path = fit_elastic_net_path(x, y, params.alpha, {params.lambda}, control);
  return std::move(path.front());
}

std::vector<ElasticNetModel> fit_elastic_net_path(const Eigen::Ref<const Matrix>& x,
                                                  const Eigen::Ref<const Vector>& y, double alpha,
                                                  const std::vector<double>& lambdas,
                                                  const FitControl& control) {
  if (x.rows() != y.size()) throw DomainError("row count of X and y differ");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ParameterError("alpha must lie in [0, 1]");
  for (double l : lambdas)
    if (!(l > 0.0)) throw ParameterError("lambda must be positive");
  check_labels(y);

  const Standardized s = standardize(x);
  std::vector<std::size_t> order(lambdas.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return lambdas[a] > lambdas[b]; });

  std::vector<ElasticNetModel> out(lambdas.size());
  Solver solver(s.z, y, s.scale);
  for (std::size_t k : order) {
    ElasticNetModel& m = out[k];
    m.params = {alpha, lambdas[k]};
    m.feature_means = s.mean;
    m.feature_scales = s.scale;
    solver.set_penalty(lambdas[k], alpha);
    run_to_convergence(solver, control, m);
  }
  return out;
}

double elastic_net_objective(const ElasticNetModel& model, const Eigen::Ref<const Matrix>& x,
                             const Eigen::Ref<const Vector>& y) {
  double loss = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double eta = model.linear_score(x.row(i));
    loss += softplus(eta) - y(i) * eta;
  }
  const auto& b = model.coefficients;
  return loss / static_cast<double>(x.rows()) +
         model.params.lambda * (model.params.alpha * b.lpNorm<1>() +
                                0.5 * (1.0 - model.params.alpha) * b.squaredNorm());
}

Vector predict_proba(const ElasticNetModel& model, const Eigen::Ref<const Matrix>& x) {
  if (!model.fitted) throw StateError("elastic net model is not fitted");
  if (x.cols() != model.coefficients.size()) throw SchemaError("column count differs from training");
  Vector p(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) p(i) = sigmoid(model.linear_score(x.row(i)));
  return p;
}

Vector importance(const ElasticNetModel& model) {
  if (!model.fitted) throw StateError("elastic net model is not fitted");
  return model.coefficients;
}

}  // namespace ew::learners
