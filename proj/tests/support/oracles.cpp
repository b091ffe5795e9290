#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>

namespace oracle {

std::vector<double> gauss_solve(Rows a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    if (a[pivot][col] == 0.0) throw std::runtime_error("singular system");
    std::swap(a[pivot], a[col]);
    std::swap(b[pivot], b[col]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= a[i][c] * x[c];
    x[i] = s / a[i][i];
  }
  return x;
}

LinearFit ridge_normal_equations(const Rows& x, const std::vector<double>& y, double alpha) {
  const std::size_t m = x.size();
  const std::size_t p = x.empty() ? 0 : x[0].size();
  Rows a(p + 1, std::vector<double>(p + 1, 0.0));
  std::vector<double> b(p + 1, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<double> z(p + 1);
    z[0] = 1.0;
    for (std::size_t j = 0; j < p; ++j) z[j + 1] = x[i][j];
    for (std::size_t r = 0; r <= p; ++r) {
      b[r] += z[r] * y[i];
      for (std::size_t c = 0; c <= p; ++c) a[r][c] += z[r] * z[c];
    }
  }
  for (std::size_t j = 1; j <= p; ++j) a[j][j] += alpha;
  const auto sol = gauss_solve(a, b);
  return {sol[0], std::vector<double>(sol.begin() + 1, sol.end())};
}

double tce_dense(const Rows& embeddings, std::size_t k_max) {
  const auto n = static_cast<Eigen::Index>(embeddings.size());
  if (n < 2) return 0.0;
  const auto d = static_cast<Eigen::Index>(embeddings[0].size());
  Eigen::MatrixXd f(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) f(i, j) = embeddings[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  const Eigen::RowVectorXd mean = f.colwise().mean();
  const Eigen::MatrixXd centered = f.rowwise() - mean;
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov, Eigen::EigenvaluesOnly);
  std::vector<double> ev(solver.eigenvalues().data(), solver.eigenvalues().data() + d);
  for (double& v : ev) v = std::max(v, 0.0);
  std::sort(ev.rbegin(), ev.rend());
  if (ev.empty() || ev[0] <= 0.0) return 0.0;
  const double cutoff = 1e-10 * ev[0];
  std::vector<double> kept;
  for (double v : ev) {
    if (v >= cutoff && kept.size() < k_max) kept.push_back(v);
  }
  const double total = std::accumulate(kept.begin(), kept.end(), 0.0);
  double h = 0.0;
  for (double v : kept) {
    const double p = v / total;
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

namespace {

std::vector<double> poly_eval_coeffs(const Rows& m) {
  // Faddeev-LeVerrier: p(x) = x^n + c[n-1] x^(n-1) + ... + c[0].
  const std::size_t n = m.size();
  Rows mk(n, std::vector<double>(n, 0.0));
  std::vector<double> c(n + 1, 0.0);
  c[n] = 1.0;
  Rows am(n, std::vector<double>(n, 0.0));
  for (std::size_t k = 1; k <= n; ++k) {
    // M_k = A M_{k-1} + c_{n-k+1} I, with M_0 = 0.
    Rows next(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t l = 0; l < n; ++l) s += m[i][l] * mk[l][j];
        next[i][j] = s + (i == j ? c[n - k + 1] : 0.0);
      }
    }
    mk = next;
    double tr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t l = 0; l < n; ++l) tr += m[i][l] * mk[l][i];
    }
    c[n - k] = -tr / static_cast<double>(k);
  }
  return c;
}

double horner(const std::vector<double>& c, double x, double* deriv) {
  double p = 0.0, dp = 0.0;
  for (std::size_t i = c.size(); i-- > 0;) {
    dp = dp * x + p;
    p = p * x + c[i];
  }
  if (deriv) *deriv = dp;
  return p;
}

}  // namespace

std::vector<double> charpoly_eigenvalues(const Rows& m) {
  auto c = poly_eval_coeffs(m);
  double bound = 0.0;  // Gershgorin-style bound on |lambda|
  for (const auto& row : m) {
    double s = 0.0;
    for (double v : row) s += std::abs(v);
    bound = std::max(bound, s);
  }
  std::vector<double> roots;
  while (c.size() > 1) {
    // Newton from above the largest root converges monotonically for a
    // polynomial with only real roots.
    double x = bound + 1.0;
    for (int it = 0; it < 500; ++it) {
      double dp = 0.0;
      const double p = horner(c, x, &dp);
      if (dp == 0.0) break;
      const double step = p / dp;
      x -= step;
      if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(x))) break;
    }
    roots.push_back(x);
    // Deflate by (x - root).
    std::vector<double> q(c.size() - 1);
    double carry = 0.0;
    for (std::size_t i = c.size() - 1; i-- > 0;) {
      carry = c[i + 1] + carry * x;
      q[i] = carry;
    }
    c = q;
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

double kendall_tau_b_pairs(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t m = x.size();
  std::int64_t concordant = 0, discordant = 0, tie_x = 0, tie_y = 0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const bool tx = x[i] == x[j];
      const bool ty = y[i] == y[j];
      if (tx) ++tie_x;
      if (ty) ++tie_y;
      if (tx || ty) continue;
      if ((x[i] < x[j]) == (y[i] < y[j])) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  const auto n0 = static_cast<std::int64_t>(m * (m - 1) / 2);
  return static_cast<double>(concordant - discordant) /
         std::sqrt(static_cast<double>(n0 - tie_x) * static_cast<double>(n0 - tie_y));
}

namespace {

std::vector<double> ranks_by_counting(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0.0, equal = 0.0;
    for (double w : v) {
      if (w < v[i]) less += 1.0;
      if (w == v[i]) equal += 1.0;
    }
    r[i] = less + (equal + 1.0) / 2.0;
  }
  return r;
}

}  // namespace

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

double spearman_midrank(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson(ranks_by_counting(x), ranks_by_counting(y));
}

double spearman_classical(const std::vector<double>& x, const std::vector<double>& y) {
  const auto rx = ranks_by_counting(x);
  const auto ry = ranks_by_counting(y);
  const double m = static_cast<double>(x.size());
  double d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
  return 1.0 - 6.0 * d2 / (m * (m * m - 1.0));
}

GroupStats aggregate(std::vector<double> overall) {
  GroupStats g;
  g.n = overall.size();
  if (overall.empty()) return g;
  std::sort(overall.begin(), overall.end());
  double sum = 0.0;
  std::size_t hi = 0, lo = 0;
  for (double v : overall) {
    sum += v;
    if (v >= 4.0) ++hi;
    if (v <= 2.0) ++lo;
  }
  const double n = static_cast<double>(g.n);
  g.mean = sum / n;
  g.median = g.n % 2 == 1 ? overall[g.n / 2] : 0.5 * (overall[g.n / 2 - 1] + overall[g.n / 2]);
  g.p_ge4 = static_cast<double>(hi) / n;
  g.p_le2 = static_cast<double>(lo) / n;
  return g;
}

}  // namespace oracle
