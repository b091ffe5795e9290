#include "mmeval/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mmeval/error.hpp"
#include "mmeval/random.hpp"

namespace mmeval {

PairedSeries::PairedSeries(std::vector<double> predictions, std::vector<double> references)
    : predictions_(std::move(predictions)), references_(std::move(references)) {
  if (predictions_.size() != references_.size()) {
    throw Error(ErrorCode::InvalidArgument, "paired series must have equal length");
  }
  for (std::size_t i = 0; i < predictions_.size(); ++i) {
    if (!std::isfinite(predictions_[i]) || !std::isfinite(references_[i])) {
      throw Error(ErrorCode::InvalidArgument, "paired series contains non-finite values");
    }
  }
}

namespace {

void require_pairs(const PairedSeries& s, std::size_t min) {
  if (s.size() < min) {
    throw Error(ErrorCode::InvalidArgument,
                "need at least " + std::to_string(min) + " pairs, got " + std::to_string(s.size()));
  }
}

// Number of tied pairs within runs of equal values of a sorted sequence.
template <class Eq>
std::int64_t tied_pairs(std::size_t n, Eq equal_to_prev) {
  std::int64_t total = 0;
  std::int64_t run = 1;
  for (std::size_t i = 1; i <= n; ++i) {
    if (i < n && equal_to_prev(i)) {
      ++run;
    } else {
      total += run * (run - 1) / 2;
      run = 1;
    }
  }
  return total;
}

// Stable merge sort counting pairs i < j with v[i] > v[j].
std::int64_t sort_counting_inversions(std::vector<double>& v, std::vector<double>& buf, std::size_t lo,
                                      std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t swaps = sort_counting_inversions(v, buf, lo, mid) + sort_counting_inversions(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      swaps += static_cast<std::int64_t>(mid - i);
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

}  // namespace

double kendall_tau_b(const PairedSeries& s) {
  require_pairs(s, 2);
  const std::size_t m = s.size();
  const auto x = s.predictions();
  const auto y = s.references();

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });

  const std::int64_t n0 = static_cast<std::int64_t>(m) * static_cast<std::int64_t>(m - 1) / 2;
  const std::int64_t ties_x = tied_pairs(m, [&](std::size_t i) { return x[order[i]] == x[order[i - 1]]; });
  const std::int64_t ties_xy = tied_pairs(m, [&](std::size_t i) {
    return x[order[i]] == x[order[i - 1]] && y[order[i]] == y[order[i - 1]];
  });

  std::vector<double> ys(m);
  for (std::size_t i = 0; i < m; ++i) ys[i] = y[order[i]];
  std::vector<double> buf(m);
  const std::int64_t swaps = sort_counting_inversions(ys, buf, 0, m);
  const std::int64_t ties_y = tied_pairs(m, [&](std::size_t i) { return ys[i] == ys[i - 1]; });

  if (n0 - ties_x == 0 || n0 - ties_y == 0) {
    throw Error(ErrorCode::DegenerateSeries, "Kendall tau-b undefined: one side is entirely tied");
  }
  const std::int64_t concordant_minus_discordant = n0 - ties_x - ties_y + ties_xy - 2 * swaps;
  return static_cast<double>(concordant_minus_discordant) /
         std::sqrt(static_cast<double>(n0 - ties_x) * static_cast<double>(n0 - ties_y));
}

std::vector<double> midranks(std::span<const double> values) {
  const std::size_t m = values.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(m);
  std::size_t i = 0;
  while (i < m) {
    std::size_t j = i + 1;
    while (j < m && values[order[j]] == values[order[i]]) ++j;
    // positions i..j-1 (0-based) share rank mean((i+1)..j)
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

double pearson_r(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw Error(ErrorCode::InvalidArgument, "pearson_r needs >= 2 pairs");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorCode::DegenerateSeries, "correlation undefined: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman_rho(const PairedSeries& s) {
  require_pairs(s, 2);
  const auto rx = midranks(s.predictions());
  const auto ry = midranks(s.references());
  return pearson_r(rx, ry);
}

FitStatistics fit_statistics(const PairedSeries& s) {
  require_pairs(s, 2);
  const auto p = s.predictions();
  const auto r = s.references();
  const double n = static_cast<double>(s.size());
  const double mean_r = std::accumulate(r.begin(), r.end(), 0.0) / n;
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    ss_res += (p[i] - r[i]) * (p[i] - r[i]);
    ss_tot += (r[i] - mean_r) * (r[i] - mean_r);
  }
  if (ss_tot == 0.0) throw Error(ErrorCode::DegenerateSeries, "R^2 undefined: references have zero variance");
  FitStatistics out;
  out.pearson_r = pearson_r(p, r);
  out.r_squared = 1.0 - ss_res / ss_tot;
  out.rmse = std::sqrt(ss_res / n);
  return out;
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw Error(ErrorCode::InvalidArgument, "quantile of empty data");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

ConfidenceInterval bootstrap_ci(const PairedSeries& s, RankStatistic statistic, std::size_t resamples,
                                std::uint64_t seed) {
  require_pairs(s, 10);
  if (resamples == 0) throw Error(ErrorCode::InvalidArgument, "bootstrap needs at least one resample");
  auto compute = [&](const PairedSeries& series) {
    return statistic == RankStatistic::Tau ? kendall_tau_b(series) : spearman_rho(series);
  };

  ConfidenceInterval ci;
  ci.point = compute(s);

  Rng rng(seed);
  const std::size_t m = s.size();
  const std::size_t max_attempts = 100 * resamples;
  std::vector<double> draws;
  draws.reserve(resamples);
  std::vector<double> p(m), r(m);
  std::size_t attempts = 0;
  while (draws.size() < resamples) {
    if (++attempts > max_attempts) {
      throw Error(ErrorCode::NumericalFailure, "too many degenerate bootstrap resamples");
    }
    for (std::size_t i = 0; i < m; ++i) {
      const auto idx = static_cast<std::size_t>(uniform_index(rng, m));
      p[i] = s.predictions()[idx];
      r[i] = s.references()[idx];
    }
    try {
      draws.push_back(compute(PairedSeries(p, r)));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateSeries) throw;
      ++ci.redraws;
    }
  }
  std::sort(draws.begin(), draws.end());
  ci.lower = quantile_sorted(draws, 0.025);
  ci.upper = quantile_sorted(draws, 0.975);
  return ci;
}

}  // namespace mmeval
