#include "easimix/easi.hpp"

#include "easimix/linalg.hpp"

#include <cmath>
#include <string>

namespace easimix {

namespace {

void expect_size(const Vec& v, Eigen::Index n, const char* what) {
  if (v.size() != n)
    throw DimensionError(std::string(what) + ": expected length " + std::to_string(n) + ", got " +
                         std::to_string(v.size()));
}

void expect_shape(const Mat& m, Eigen::Index r, Eigen::Index c, const char* what) {
  if (m.rows() != r || m.cols() != c)
    throw DimensionError(std::string(what) + ": expected " + std::to_string(r) + "x" +
                         std::to_string(c) + ", got " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()));
}

void check_coefficients(const EasiCoefficients& c, const Dimensions& dims) {
  const int s = dims.modeled();
  if (static_cast<int>(c.b.size()) != dims.degree + 1)
    throw DimensionError("coefficients: expected R+1 Engel vectors");
  for (const auto& br : c.b) expect_size(br, s, "Engel vector b_r");
  if (static_cast<int>(c.A.size()) != dims.price_covariates + 1)
    throw DimensionError("coefficients: expected M_p+1 price blocks");
  for (const auto& a : c.A) expect_shape(a, s, s, "price block A_m");
  expect_shape(c.B, s, s, "price-utility block B");
  expect_shape(c.C, s, dims.demographics, "demographic block C");
  expect_shape(c.D, s, dims.utility_covariates, "utility-interaction block D");
}

Mat complete_square(const Mat& a) {
  const Eigen::Index s = a.rows();
  Mat full(s + 1, s + 1);
  full.topLeftCorner(s, s) = a;
  // Explicit loops sum rows and columns in the same order, so a symmetric
  // block completes to an exactly symmetric matrix.
  for (Eigen::Index l = 0; l < s; ++l) {
    double row = 0.0, col = 0.0;
    for (Eigen::Index k = 0; k < s; ++k) {
      row += a(l, k);
      col += a(k, l);
    }
    full(l, s) = -row;
    full(s, l) = -col;
  }
  full(s, s) = a.sum();
  return full;
}

Mat complete_rows(const Mat& c) {
  Mat full(c.rows() + 1, c.cols());
  full.topRows(c.rows()) = c;
  full.row(c.rows()) = -c.colwise().sum();
  return full;
}

}  // namespace

EasiCoefficients EasiCoefficients::zero(const Dimensions& dims) {
  const int s = dims.modeled();
  EasiCoefficients c;
  c.b.assign(dims.degree + 1, Vec::Zero(s));
  c.A.assign(dims.price_covariates + 1, Mat::Zero(s, s));
  c.B = Mat::Zero(s, s);
  c.C = Mat::Zero(s, dims.demographics);
  c.D = Mat::Zero(s, dims.utility_covariates);
  return c;
}

Mat FullCoefficients::price_matrix(const Vec& h_p) const {
  Mat out = A.front();
  for (std::size_t m = 1; m < A.size(); ++m) out += A[m] * h_p(static_cast<Eigen::Index>(m - 1));
  return out;
}

std::vector<int> Observation::positive_goods() const {
  std::vector<int> out;
  for (Eigen::Index l = 0; l < shares.size(); ++l)
    if (shares(l) > 0.0) out.push_back(static_cast<int>(l));
  return out;
}

Observation make_observation(Vec shares, Vec log_prices, double log_expenditure, Vec h, Vec h_p,
                             Vec h_y, Vec z, double weight) {
  if (shares.size() != log_prices.size())
    throw DimensionError("observation: shares and prices differ in length");
  if (shares.size() < 2) throw DimensionError("observation: need at least two goods");
  Observation obs;
  const Eigen::Index goods = shares.size();
  const Eigen::Index s = goods - 1;
  obs.rel_log_prices = log_prices.head(s).array() - log_prices(s);
  obs.shares = std::move(shares);
  obs.log_prices = std::move(log_prices);
  obs.log_expenditure = log_expenditure;
  obs.h = std::move(h);
  obs.h_p = std::move(h_p);
  obs.h_y = std::move(h_y);
  obs.z = std::move(z);
  obs.weight = weight;

  double censored_mass = 0.0;
  obs.latent = Vec::Zero(goods);
  for (Eigen::Index l = 0; l < s; ++l)
    if (!(obs.shares(l) > 0.0)) {
      obs.latent(l) = -0.1 / static_cast<double>(goods);
      censored_mass += obs.latent(l);
    }
  for (Eigen::Index l = 0; l < goods; ++l)
    if (obs.shares(l) > 0.0) obs.latent(l) = (1.0 - censored_mass) * obs.shares(l);
  return obs;
}

void check_observation(const Observation& obs, const Dimensions& dims) {
  expect_size(obs.shares, dims.goods, "shares");
  expect_size(obs.log_prices, dims.goods, "log prices");
  expect_size(obs.rel_log_prices, dims.modeled(), "relative log prices");
  expect_size(obs.latent, dims.goods, "latent shares");
  expect_size(obs.h, dims.demographics, "demographics h");
  expect_size(obs.h_p, dims.price_covariates, "price covariates h_p");
  expect_size(obs.h_y, dims.utility_covariates, "utility covariates h_y");
  expect_size(obs.z, dims.instruments, "instruments z");
  if ((obs.shares.array() < 0.0).any()) throw DataError("observation: negative share");
  if (std::abs(obs.shares.sum() - 1.0) > 1e-6) throw DataError("observation: shares do not sum to 1");
  if (!(obs.shares.array() > 0.0).any()) throw DataError("observation: no positive share");
}

double implicit_utility(const Vec& shares, const Vec& log_prices, double log_expenditure,
                        const Vec& h_p, const FullCoefficients& full) {
  const double stone = log_prices.dot(shares);
  const double quad = log_prices.dot(full.price_matrix(h_p) * log_prices);
  const double denom = 1.0 - 0.5 * log_prices.dot(full.B * log_prices);
  if (std::abs(denom) < kDegenerateDenominator)
    throw NumericalError("implicit utility: degenerate denominator 1 - p'Bp/2");
  return (log_expenditure - stone + 0.5 * quad) / denom;
}

double implicit_utility(const Observation& obs, const FullCoefficients& full) {
  return implicit_utility(obs.shares, obs.log_prices, obs.log_expenditure, obs.h_p, full);
}

Vec latent_to_observed(const Vec& latent) {
  double total = 0.0;
  for (Eigen::Index l = 0; l < latent.size(); ++l)
    if (latent(l) > 0.0) total += latent(l);
  if (!(total > 0.0)) throw DataError("latent shares: no good with positive consumption");
  Vec out = Vec::Zero(latent.size());
  for (Eigen::Index l = 0; l < latent.size(); ++l)
    if (latent(l) > 0.0) out(l) = latent(l) / total;
  return out;
}

Vec predicted_shares(const FullCoefficients& full, const Vec& log_prices, double y, const Vec& h,
                     const Vec& h_p, const Vec& h_y) {
  Vec w = Vec::Zero(log_prices.size());
  double yr = 1.0;
  for (const auto& br : full.b) {
    w += br * yr;
    yr *= y;
  }
  w += full.price_matrix(h_p) * log_prices;
  w += full.B * log_prices * y;
  if (h.size() > 0) w += full.C * h;
  if (h_y.size() > 0) w += full.D * h_y * y;
  return w;
}

Vec exogenous_vector(double y, const Vec& h, const Vec& h_y, const Dimensions& dims) {
  Vec x(dims.exogenous());
  double yr = 1.0;
  int k = 0;
  for (int r = 0; r <= dims.degree; ++r) {
    x(k++) = yr;
    yr *= y;
  }
  for (int m = 0; m < dims.demographics; ++m) x(k++) = h(m);
  for (int m = 0; m < dims.utility_covariates; ++m) x(k++) = h_y(m) * y;
  return x;
}

Vec endogenous_vector(const Vec& rel_log_prices, double y, const Vec& h_p, const Dimensions& dims) {
  const int s = dims.modeled();
  Vec p_star(dims.endogenous());
  p_star.head(s) = rel_log_prices;
  for (int m = 0; m < dims.price_covariates; ++m) p_star.segment((m + 1) * s, s) = rel_log_prices * h_p(m);
  p_star.tail(s) = rel_log_prices * y;
  return p_star;
}

DesignPair build_designs(const Observation& obs, double y, const Dimensions& dims) {
  if (!std::isfinite(y)) throw NumericalError("build_designs: non-finite implicit utility");
  expect_size(obs.rel_log_prices, dims.modeled(), "relative log prices");
  expect_size(obs.h, dims.demographics, "demographics h");
  expect_size(obs.h_p, dims.price_covariates, "price covariates h_p");
  expect_size(obs.h_y, dims.utility_covariates, "utility covariates h_y");
  expect_size(obs.z, dims.instruments, "instruments z");

  const int s = dims.modeled();
  const int nx = dims.exogenous();
  const int bw = dims.block_width();
  DesignPair d;
  d.x = exogenous_vector(y, obs.h, obs.h_y, dims);
  d.p_star = endogenous_vector(obs.rel_log_prices, y, obs.h_p, dims);

  d.F = Mat::Zero(s, dims.beta_dim());
  for (int l = 0; l < s; ++l) d.F.block(l, l * nx, 1, nx) = d.x.transpose();
  const Vec& p = obs.rel_log_prices;
  for (int m = 0; m < dims.price_blocks(); ++m) {
    double scale = 1.0;
    if (m >= 1 && m <= dims.price_covariates) scale = obs.h_p(m - 1);
    if (m == dims.price_blocks() - 1) scale = y;
    const int offset = s * nx + m * bw;
    for (int l = 0; l < s; ++l)
      for (int k = 0; k < s; ++k) {
        const int col = dims.symmetric ? linalg::vech_index(l, k, s) : l * s + k;
        d.F(l, offset + col) += p(k) * scale;
      }
  }

  const int ds = dims.endogenous();
  const int ell = dims.instruments;
  d.G = Mat::Zero(ds, dims.gamma_dim());
  for (int k = 0; k < ds; ++k) {
    d.G.block(k, k * nx, 1, nx) = d.x.transpose();
    if (ell > 0) d.G.block(k, ds * nx + k * ell, 1, ell) = obs.z.transpose();
  }
  return d;
}

Vec pack(const EasiCoefficients& coeffs, const Dimensions& dims) {
  check_coefficients(coeffs, dims);
  const int s = dims.modeled();
  const int nx = dims.exogenous();
  const int bw = dims.block_width();
  Vec beta(dims.beta_dim());
  for (int l = 0; l < s; ++l) {
    int k = l * nx;
    for (const auto& br : coeffs.b) beta(k++) = br(l);
    for (int m = 0; m < dims.demographics; ++m) beta(k++) = coeffs.C(l, m);
    for (int m = 0; m < dims.utility_covariates; ++m) beta(k++) = coeffs.D(l, m);
  }
  auto put_block = [&](const Mat& a, int offset, const char* name) {
    if (dims.symmetric) {
      if (!linalg::is_symmetric(a))
        throw DataError(std::string("pack: ") + name + " is not symmetric under the symmetry restriction");
      beta.segment(offset, bw) = linalg::vech(a);
    } else {
      for (int l = 0; l < s; ++l)
        for (int k = 0; k < s; ++k) beta(offset + l * s + k) = a(l, k);
    }
  };
  const int base = s * nx;
  for (int m = 0; m <= dims.price_covariates; ++m) put_block(coeffs.A[m], base + m * bw, "A_m");
  put_block(coeffs.B, base + (dims.price_blocks() - 1) * bw, "B");
  return beta;
}

EasiCoefficients unpack(const Vec& beta, const Dimensions& dims) {
  expect_size(beta, dims.beta_dim(), "packed coefficients");
  const int s = dims.modeled();
  const int nx = dims.exogenous();
  const int bw = dims.block_width();
  EasiCoefficients c = EasiCoefficients::zero(dims);
  for (int l = 0; l < s; ++l) {
    int k = l * nx;
    for (auto& br : c.b) br(l) = beta(k++);
    for (int m = 0; m < dims.demographics; ++m) c.C(l, m) = beta(k++);
    for (int m = 0; m < dims.utility_covariates; ++m) c.D(l, m) = beta(k++);
  }
  auto get_block = [&](int offset) {
    if (dims.symmetric) return linalg::unvech(beta.segment(offset, bw), s);
    Mat a(s, s);
    for (int l = 0; l < s; ++l)
      for (int k = 0; k < s; ++k) a(l, k) = beta(offset + l * s + k);
    return a;
  };
  const int base = s * nx;
  for (int m = 0; m <= dims.price_covariates; ++m) c.A[m] = get_block(base + m * bw);
  c.B = get_block(base + (dims.price_blocks() - 1) * bw);
  return c;
}

FullCoefficients complete_system(const EasiCoefficients& coeffs, const Dimensions& dims) {
  check_coefficients(coeffs, dims);
  FullCoefficients full;
  const int s = dims.modeled();
  full.b.reserve(coeffs.b.size());
  for (std::size_t r = 0; r < coeffs.b.size(); ++r) {
    Vec br(s + 1);
    br.head(s) = coeffs.b[r];
    br(s) = (r == 0 ? 1.0 : 0.0) - coeffs.b[r].sum();
    full.b.push_back(std::move(br));
  }
  for (const auto& a : coeffs.A) full.A.push_back(complete_square(a));
  full.B = complete_square(coeffs.B);
  full.C = complete_rows(coeffs.C);
  full.D = complete_rows(coeffs.D);
  return full;
}

Mat slutsky_matrix(const FullCoefficients& full, const Vec& shares, double y, const Vec& h_p) {
  Mat gamma = full.price_matrix(h_p) + full.B * y;
  Mat out = gamma + shares * shares.transpose();
  out.diagonal() -= shares;
  return out;
}

Regularity check_regularity(const FullCoefficients& full, const Observation& obs, double y,
                            double tolerance) {
  Regularity reg;
  const Vec& p = obs.log_prices;
  Vec dcost = Vec::Zero(p.size());
  double ypow = 1.0;  // y^{r-1}
  for (std::size_t r = 1; r < full.b.size(); ++r) {
    dcost += full.b[r] * (static_cast<double>(r) * ypow);
    ypow *= y;
  }
  if (obs.h_y.size() > 0) dcost += full.D * obs.h_y;
  dcost += 0.5 * full.B * p;
  reg.monotonicity_index = p.dot(dcost) + 1.0;
  reg.monotonic = reg.monotonicity_index > 0.0;

  // Concavity depends only on the symmetric part of the quadratic form.
  const Mat slutsky = linalg::symmetrize(slutsky_matrix(full, obs.shares, y, obs.h_p));
  Eigen::SelfAdjointEigenSolver<Mat> eig(slutsky, Eigen::EigenvaluesOnly);
  reg.max_slutsky_eigenvalue = eig.eigenvalues().maxCoeff();
  reg.concave = reg.max_slutsky_eigenvalue <= tolerance;
  return reg;
}

}  // namespace easimix
