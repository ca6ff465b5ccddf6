#include "mrpred/linear_model.hpp"

#include <charconv>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "mrpred/errors.hpp"
#include "mrpred/rng.hpp"

namespace mrpred::linear {

namespace {

void require_pe_domain(int n, int r, const char* what) {
  if (r < 0 || r > n - 3)
    throw DomainError(std::string(what) + ": expectation does not exist for r=" +
                      std::to_string(r) + " > n-3=" + std::to_string(n - 3));
}

double residual_scale(const LinearModelSpec& spec, int r) { return spec.tau2 + spec.profile(r); }

}  // namespace

void LinearModelSpec::validate() const {
  if (!std::isfinite(tau2) || tau2 < 0.0) throw ConfigError("tau2 must be finite and >= 0");
  if (!std::isfinite(beta0)) throw ConfigError("beta0 must be finite");
}

double LinearModelSpec::coefficient(int k) const {
  if (k == 0) return beta0;
  return std::sqrt(profile.increment(k));
}

Eigen::VectorXd LinearModelSpec::true_coefficients(int r) const {
  Eigen::VectorXd theta(r + 1);
  for (int k = 0; k <= r; ++k) theta[k] = coefficient(k);
  return theta;
}

TrainingSet sample_training(const LinearModelSpec& spec, int n, int r_max, std::uint64_t seed) {
  spec.validate();
  if (n < 1) throw ConfigError("sample_training: n must be >= 1");
  if (r_max < 0) throw ConfigError("sample_training: r_max must be >= 0");

  const Eigen::VectorXd beta = spec.true_coefficients(r_max);
  const double noise_sd = std::sqrt(residual_scale(spec, r_max));
  if (!beta.allFinite() || !std::isfinite(noise_sd))
    throw ConfigError("sample_training: nonfinite model parameters");

  TrainingSet T;
  T.n = n;
  T.r_max = r_max;
  T.seed = seed;
  T.covariates.resize(n, r_max + 1);
  T.responses.resize(n);

  Engine engine = make_engine(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    T.covariates(i, 0) = 1.0;
    double y = beta[0];
    for (int k = 1; k <= r_max; ++k) {
      const double x = normal(engine);
      T.covariates(i, k) = x;
      y += beta[k] * x;
    }
    y += noise_sd * normal(engine);
    T.responses[i] = y;
  }
  return T;
}

double exact_pe(const LinearModelSpec& spec, int n, int r) {
  require_pe_domain(n, r, "exact_pe");
  const double nd = n;
  return residual_scale(spec, r) * (nd + 1.0) * (nd - 2.0) / (nd * (nd - r - 2.0));
}

double exact_eps(const LinearModelSpec& spec, int n, int r) {
  require_pe_domain(n, r, "exact_eps");
  const double nd = n;
  return residual_scale(spec, r) / (nd - r - 2.0) * ((nd - 2.0) / nd + r);
}

double expected_cv(const LinearModelSpec& spec, int n, int r) {
  if (r < 0 || r > n - 4)
    throw DomainError("expected_cv: requires 0 <= r <= n-4, got r=" + std::to_string(r));
  return exact_pe(spec, n - 1, r);
}

double expected_ic(const LinearModelSpec& spec, int n, int r) {
  if (r < 0 || r + 1 > n) throw DomainError("expected_ic: requires r + 1 <= n");
  const double nd = n;
  return residual_scale(spec, r) * (nd - r - 1.0) * (nd + 2.0 * r + 2.0) / (nd * nd);
}

double expected_sigma_hat2(const LinearModelSpec& spec, int n, int r) {
  if (r < 0 || r + 1 > n) throw DomainError("expected_sigma_hat2: requires r + 1 <= n");
  return (n - r - 1.0) / n * residual_scale(spec, r);
}

double ue_factor(int n, int r) {
  if (r < 0 || r > n - 3) throw DomainError("ue: requires r <= n-3");
  const double nd = n;
  return (nd - 2.0) * (nd + 1.0) / ((nd - r - 2.0) * (nd - r - 1.0));
}

double ic_factor(int n, int r) {
  if (r < 0 || r + 1 > n) throw DomainError("ic: requires r + 1 <= n");
  return (n + 2.0 * (r + 1.0)) / n;
}

Eigen::VectorXd ols_fit(const TrainingSet& T, int r) {
  if (r < 0 || r > T.r_max) throw DomainError("ols_fit: r outside [0, r_max]");
  if (r + 1 > T.n) throw FitError("ols_fit: empirical risk minimizer not unique (r + 1 > n)");
  const auto design = T.covariates.leftCols(r + 1);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < r + 1) throw FitError("ols_fit: empirical risk minimizer not unique (rank deficient)");
  return qr.solve(T.responses);
}

double estimation_error(const Eigen::VectorXd& theta_hat, const LinearModelSpec& spec, int r) {
  if (theta_hat.size() != r + 1) throw DomainError("estimation_error: theta_hat must have r + 1 entries");
  return (theta_hat - spec.true_coefficients(r)).squaredNorm();
}

NestedLeastSquares::NestedLeastSquares(const TrainingSet& T, int r_hi) : n_(T.n), r_hi_(r_hi) {
  if (r_hi < 0 || r_hi > T.r_max) throw DomainError("least squares: r outside [0, r_max]");
  if (r_hi + 1 > T.n) throw FitError("least squares: empirical risk minimizer not unique (r + 1 > n)");

  const int p = r_hi + 1;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(T.covariates.leftCols(p));
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n_, p);
  r_factor_ = qr.matrixQR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
  qty_ = q.transpose() * T.responses;

  for (int j = 0; j < p; ++j) {
    if (std::abs(r_factor_(j, j)) <= 1e-12 * std::max(1.0, std::abs(r_factor_(0, 0))))
      throw FitError("least squares: empirical risk minimizer not unique (rank deficient)");
  }

  sigma2_.resize(p);
  cv_.resize(p);
  max_leverage_.resize(p);
  Eigen::VectorXd residual = T.responses;
  Eigen::VectorXd leverage = Eigen::VectorXd::Zero(n_);
  for (int r = 0; r < p; ++r) {
    residual -= qty_[r] * q.col(r);
    leverage += q.col(r).cwiseAbs2();
    sigma2_[r] = residual.squaredNorm() / n_;
    max_leverage_[r] = leverage.maxCoeff();
    double sum = 0.0;
    for (int i = 0; i < n_; ++i) {
      const double loo = residual[i] / (1.0 - leverage[i]);
      sum += loo * loo;
    }
    cv_[r] = sum / n_;
  }
}

void NestedLeastSquares::check(int r) const {
  if (r < 0 || r > r_hi_) throw DomainError("least squares: resolution outside fitted range");
}

double NestedLeastSquares::sigma_hat2(int r) const {
  check(r);
  return sigma2_[r];
}

double NestedLeastSquares::cv(int r) const {
  check(r);
  if (r + 1 > n_ - 1) throw FitError("cv: degenerate leave-one-out fit (r + 1 > n - 1)");
  if (max_leverage_[r] >= 1.0 - kLeverageTolerance)
    throw FitError("cv: degenerate leave-one-out fit (leverage " + std::to_string(max_leverage_[r]) +
                   " at r=" + std::to_string(r) + ")");
  return cv_[r];
}

double NestedLeastSquares::ue(int r) const { return sigma_hat2(r) * ue_factor(n_, r); }

double NestedLeastSquares::ic(int r) const { return sigma_hat2(r) * ic_factor(n_, r); }

double NestedLeastSquares::max_leverage(int r) const {
  check(r);
  return max_leverage_[r];
}

Eigen::VectorXd NestedLeastSquares::coefficients(int r) const {
  check(r);
  return r_factor_.topLeftCorner(r + 1, r + 1).triangularView<Eigen::Upper>().solve(qty_.head(r + 1));
}

double sigma_hat2(const TrainingSet& T, int r) { return NestedLeastSquares(T, r).sigma_hat2(r); }
double cv_error(const TrainingSet& T, int r) { return NestedLeastSquares(T, r).cv(r); }
double ue_error(const TrainingSet& T, int r) { return NestedLeastSquares(T, r).ue(r); }
double ic_error(const TrainingSet& T, int r) { return NestedLeastSquares(T, r).ic(r); }

void write_csv(const TrainingSet& T, std::ostream& os) {
  os << "y";
  for (int k = 0; k <= T.r_max; ++k) os << ",x" << k;
  os << '\n';
  const auto old_precision = os.precision(17);
  for (int i = 0; i < T.n; ++i) {
    os << T.responses[i];
    for (int k = 0; k <= T.r_max; ++k) os << ',' << T.covariates(i, k);
    os << '\n';
  }
  os.precision(old_precision);
}

TrainingSet read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("training csv: missing header");
  int columns = 0;
  {
    std::istringstream header(line);
    std::string cell;
    while (std::getline(header, cell, ',')) {
      const std::string expected = columns == 0 ? "y" : "x" + std::to_string(columns - 1);
      if (cell != expected) throw ConfigError("training csv: expected column '" + expected + "'");
      ++columns;
    }
  }
  if (columns < 2) throw ConfigError("training csv: need y and x0 columns");

  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
      if (ec != std::errc() || ptr != cell.data() + cell.size())
        throw ConfigError("training csv: bad number '" + cell + "'");
      row.push_back(value);
    }
    if (static_cast<int>(row.size()) != columns) throw ConfigError("training csv: ragged row");
    rows.push_back(std::move(row));
  }

  TrainingSet T;
  T.n = static_cast<int>(rows.size());
  T.r_max = columns - 2;
  T.covariates.resize(T.n, columns - 1);
  T.responses.resize(T.n);
  for (int i = 0; i < T.n; ++i) {
    T.responses[i] = rows[i][0];
    for (int k = 0; k < columns - 1; ++k) T.covariates(i, k) = rows[i][k + 1];
  }
  return T;
}

}  // namespace mrpred::linear
