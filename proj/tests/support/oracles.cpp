#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oracle {

using namespace easimix;

GramResult naive_gram(const Mat& rows, const Mat& targets, const Mat& weight, const KroneckerLayout& layout) {
  const int s = layout.equations;
  GramResult out{Mat::Zero(layout.packed_dim, layout.packed_dim), Vec::Zero(layout.packed_dim)};
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    Mat F = Mat::Zero(s, layout.packed_dim);
    for (int l = 0; l < s; ++l)
      for (int r = 0; r < layout.rows; ++r) F(l, layout.packed_index[l * layout.rows + r]) += rows(i, r);
    out.matrix += F.transpose() * weight * F;
    out.vector += F.transpose() * weight * targets.row(i).transpose();
  }
  return out;
}

Vec shares_at_utility(const FullCoefficients& full, const Vec& p, double y, const Vec& h, const Vec& h_p,
                      const Vec& h_y) {
  const Eigen::Index S = p.size();
  Vec w = Vec::Zero(S);
  for (Eigen::Index l = 0; l < S; ++l) {
    double v = 0.0;
    for (std::size_t r = 0; r < full.b.size(); ++r) v += full.b[r](l) * std::pow(y, static_cast<double>(r));
    for (Eigen::Index k = 0; k < h.size(); ++k) v += full.C(l, k) * h(k);
    for (Eigen::Index k = 0; k < h_y.size(); ++k) v += full.D(l, k) * h_y(k) * y;
    for (std::size_t m = 0; m < full.A.size(); ++m) {
      const double hm = m == 0 ? 1.0 : h_p(static_cast<Eigen::Index>(m) - 1);
      for (Eigen::Index k = 0; k < S; ++k) v += full.A[m](l, k) * p(k) * hm;
    }
    for (Eigen::Index k = 0; k < S; ++k) v += full.B(l, k) * p(k) * y;
    w(l) = v;
  }
  return w;
}

double implicit_utility_terms(const FullCoefficients& full, const Vec& w, const Vec& p, double e, const Vec& h_p) {
  const Eigen::Index S = p.size();
  double stone = 0.0, quad = 0.0, bq = 0.0;
  for (Eigen::Index l = 0; l < S; ++l) stone += p(l) * w(l);
  for (std::size_t m = 0; m < full.A.size(); ++m) {
    const double hm = m == 0 ? 1.0 : h_p(static_cast<Eigen::Index>(m) - 1);
    for (Eigen::Index l = 0; l < S; ++l)
      for (Eigen::Index k = 0; k < S; ++k) quad += p(l) * full.A[m](l, k) * p(k) * hm;
  }
  for (Eigen::Index l = 0; l < S; ++l)
    for (Eigen::Index k = 0; k < S; ++k) bq += p(l) * full.B(l, k) * p(k);
  return (e - stone + 0.5 * quad) / (1.0 - 0.5 * bq);
}

double cost(const FullCoefficients& full, const Vec& p, double y, const Vec& h, const Vec& h_p, const Vec& h_y) {
  // e = y (1 - p'Bp/2) + p'omega - p'A(h)p/2, the inverse of the implicit map.
  const Vec w = shares_at_utility(full, p, y, h, h_p, h_y);
  const Mat A = full.price_matrix(h_p);
  return y * (1.0 - 0.5 * p.dot(full.B * p)) + p.dot(w) - 0.5 * p.dot(A * p);
}

double solve_demand(const FullCoefficients& full, const Vec& p, double e, const Vec& h, const Vec& h_p, const Vec& h_y,
                    Vec* shares) {
  // cost() is increasing in y near the evaluation points used in tests; the
  // bracket grows from e so higher-order Engel terms cannot fold it.
  auto f = [&](double y) { return cost(full, p, y, h, h_p, h_y) - e; };
  double lo = e, hi = e, flo = 0.0;
  bool bracketed = false;
  for (double width = 0.125; width <= 32.0 && !bracketed; width *= 2.0) {
    lo = e - width;
    hi = e + width;
    flo = f(lo);
    bracketed = flo * f(hi) <= 0.0;
  }
  if (!bracketed) throw std::runtime_error("solve_demand: root not bracketed");
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  const double y = 0.5 * (lo + hi);
  if (shares) *shares = shares_at_utility(full, p, y, h, h_p, h_y);
  return y;
}

FiniteDifferenceElasticities fd_elasticities(const FullCoefficients& full, const Vec& p, double e, const Vec& h,
                                             const Vec& h_p, const Vec& h_y, double step) {
  const Eigen::Index S = p.size();
  // log q_l = log w_l + e - p_l
  auto log_q = [&](const Vec& pp, double ee) {
    Vec w;
    solve_demand(full, pp, ee, h, h_p, h_y, &w);
    Vec q(S);
    for (Eigen::Index l = 0; l < S; ++l) q(l) = std::log(w(l)) + ee - pp(l);
    return q;
  };
  FiniteDifferenceElasticities out;
  out.marshallian.resize(S, S);
  out.hicksian.resize(S, S);
  for (Eigen::Index j = 0; j < S; ++j) {
    Vec up = p, dn = p;
    up(j) += step;
    dn(j) -= step;
    out.marshallian.col(j) = (log_q(up, e) - log_q(dn, e)) / (2.0 * step);
  }
  out.income = (log_q(p, e + step) - log_q(p, e - step)) / (2.0 * step);
  Vec wp, wm;
  solve_demand(full, p, e + step, h, h_p, h_y, &wp);
  solve_demand(full, p, e - step, h, h_p, h_y, &wm);
  out.de = (wp - wm) / (2.0 * step);
  // Hicksian: utility held at its level, expenditure follows the cost function.
  const double y0 = solve_demand(full, p, e, h, h_p, h_y, nullptr);
  for (Eigen::Index j = 0; j < S; ++j) {
    Vec up = p, dn = p;
    up(j) += step;
    dn(j) -= step;
    out.hicksian.col(j) = (log_q(up, cost(full, up, y0, h, h_p, h_y)) - log_q(dn, cost(full, dn, y0, h, h_p, h_y))) /
                          (2.0 * step);
  }
  return out;
}

std::vector<Vec> rejection_orthant(const Vec& mean, const Mat& cov, int draws, StreamRng& rng) {
  const Mat L = cov.llt().matrixL();
  std::vector<Vec> out;
  while (static_cast<int>(out.size()) < draws) {
    Vec z(mean.size());
    for (Eigen::Index k = 0; k < z.size(); ++k) z(k) = rng.normal();
    const Vec x = mean + L * z;
    if ((x.array() <= 0.0).all()) out.push_back(x);
  }
  return out;
}

double kernel_average(const std::vector<std::pair<double, double>>& events, const std::vector<double>& values, double x,
                      double y, double h) {
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < events.size(); ++k) {
    const double dx = x - events[k].first, dy = y - events[k].second;
    const double w = std::exp(-(dx * dx + dy * dy) / (2.0 * h * h));
    num += w * values[k];
    den += w;
  }
  return num / den;
}

std::pair<double, double> all_windows_hpd(std::vector<double> x, double mass) {
  std::sort(x.begin(), x.end());
  const std::size_t n = x.size();
  const std::size_t k = static_cast<std::size_t>(std::ceil(mass * static_cast<double>(n)));
  std::pair<double, double> best{x.front(), x.back()};
  double width = best.second - best.first;
  for (std::size_t a = 0; a + k <= n; ++a) {
    const std::size_t b = a + k - 1;
    if (x[b] - x[a] < width) {
      width = x[b] - x[a];
      best = {x[a], x[b]};
    }
  }
  return best;
}

EasiCoefficients random_coefficients(const Dimensions& dims, StreamRng& rng, double scale) {
  EasiCoefficients c = EasiCoefficients::zero(dims);
  const int s = dims.modeled();
  auto fill = [&](Mat& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
  };
  for (std::size_t r = 0; r < c.b.size(); ++r)
    for (int l = 0; l < s; ++l) c.b[r](l) = r == 0 ? 0.8 / dims.goods + 0.02 * rng.normal() : scale * rng.normal();
  for (auto& a : c.A) {
    fill(a);
    if (dims.symmetric) a = 0.5 * (a + a.transpose()).eval();
  }
  fill(c.B);
  if (dims.symmetric) c.B = 0.5 * (c.B + c.B.transpose()).eval();
  fill(c.C);
  fill(c.D);
  return c;
}

Observation random_observation(const Dimensions& dims, StreamRng& rng) {
  const int S = dims.goods;
  Vec w(S);
  for (int l = 0; l < S; ++l) w(l) = 0.2 + rng.uniform();
  w /= w.sum();
  Vec p(S);
  for (int l = 0; l < S; ++l) p(l) = 0.3 * rng.normal();
  auto vec = [&](int n) {
    Vec v(n);
    for (int k = 0; k < n; ++k) v(k) = rng.normal();
    return v;
  };
  return make_observation(w, p, 0.5 * rng.normal(), vec(dims.demographics), vec(dims.price_covariates),
                          vec(dims.utility_covariates), vec(dims.instruments));
}

}  // namespace oracle
