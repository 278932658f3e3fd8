#pragma once

// Brute-force reference implementations of the two-sample statistics. Every
// value is rebuilt from the raw samples by the textbook definition; nothing
// here shares code with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "stattests.hpp"

namespace oracle {

using Vec = std::vector<double>;

// Midrank of every pooled value by counting smaller and equal values.
inline Vec naive_midranks(const Vec& x) {
  Vec r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double less = 0, equal = 0;
    for (double y : x) {
      if (y < x[i]) ++less;
      if (y == x[i]) ++equal;
    }
    r[i] = less + (equal + 1.0) / 2.0;
  }
  return r;
}

// All C(n, k) index subsets as membership masks.
inline std::vector<std::vector<bool>> all_splits(std::size_t n, std::size_t k) {
  std::vector<std::vector<bool>> out;
  for (std::uint32_t bits = 0; bits < (1u << n); ++bits) {
    if (static_cast<std::size_t>(__builtin_popcount(bits)) != k) continue;
    std::vector<bool> m(n);
    for (std::size_t i = 0; i < n; ++i) m[i] = (bits >> i) & 1u;
    out.push_back(std::move(m));
  }
  return out;
}

inline double sum_where(const Vec& s, const std::vector<bool>& m) {
  double t = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (m[i]) t += s[i];
  return t;
}

// Mean, variance and covariance of subset sums, by enumerating every split.
struct Moments {
  double mean_s = 0, var_s = 0, mean_t = 0, var_t = 0, cov = 0;
};

inline Moments enumerated_moments(const Vec& s, const Vec& t, std::size_t n1) {
  const auto splits = all_splits(s.size(), n1);
  Moments m;
  for (const auto& sp : splits) {
    m.mean_s += sum_where(s, sp);
    m.mean_t += sum_where(t, sp);
  }
  const double c = static_cast<double>(splits.size());
  m.mean_s /= c;
  m.mean_t /= c;
  for (const auto& sp : splits) {
    const double ds = sum_where(s, sp) - m.mean_s, dt = sum_where(t, sp) - m.mean_t;
    m.var_s += ds * ds;
    m.var_t += dt * dt;
    m.cov += ds * dt;
  }
  m.var_s /= c;
  m.var_t /= c;
  m.cov /= c;
  return m;
}

inline double z(double v, double mean, double var) { return var > 0 ? (v - mean) / std::sqrt(var) : 0.0; }

// Extremeness of one split for each test, larger = further from the null.
// `x` is the pooled sample, `m` marks the first group.
using Extremeness = std::function<double(const std::vector<bool>& m)>;

inline Extremeness mann_whitney(const Vec& x, std::size_t n1) {
  const double n2 = static_cast<double>(x.size() - n1);
  return [x, n1, n2](const std::vector<bool>& m) {
    double u = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
      for (std::size_t j = 0; j < x.size(); ++j) {
        if (!m[i] || m[j]) continue;
        u += x[i] > x[j] ? 1.0 : (x[i] == x[j] ? 0.5 : 0.0);
      }
    return std::abs(u - static_cast<double>(n1) * n2 / 2.0);
  };
}

inline Vec ab_scores(const Vec& x) {
  const Vec r = naive_midranks(x);
  const double n = static_cast<double>(x.size());
  Vec s(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) s[i] = std::min(r[i], n + 1.0 - r[i]);
  return s;
}

inline Extremeness ansari_bradley(const Vec& x, std::size_t n1) {
  const Vec s = ab_scores(x);
  const Moments mo = enumerated_moments(s, s, n1);
  return [s, mo](const std::vector<bool>& m) { return std::abs(sum_where(s, m) - mo.mean_s); };
}

inline Extremeness kolmogorov_smirnov(const Vec& x, std::size_t n1) {
  const double n2 = static_cast<double>(x.size() - n1);
  return [x, n1, n2](const std::vector<bool>& m) {
    double d = 0;
    for (double t : x) {
      double fa = 0, fb = 0;
      for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] <= t) (m[i] ? fa : fb) += 1;
      d = std::max(d, std::abs(fa / static_cast<double>(n1) - fb / n2));
    }
    return d;
  };
}

// Rank form of the two-sample Cramer-von Mises T (midranks under ties).
inline double cvm_rank_form(const Vec& x, const std::vector<bool>& m) {
  const Vec r = naive_midranks(x);
  Vec ra, rb;
  for (std::size_t i = 0; i < x.size(); ++i) (m[i] ? ra : rb).push_back(r[i]);
  std::sort(ra.begin(), ra.end());
  std::sort(rb.begin(), rb.end());
  const double n1 = static_cast<double>(ra.size()), n2 = static_cast<double>(rb.size()), n = n1 + n2;
  double ua = 0, ub = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) ua += std::pow(ra[i] - static_cast<double>(i + 1), 2);
  for (std::size_t j = 0; j < rb.size(); ++j) ub += std::pow(rb[j] - static_cast<double>(j + 1), 2);
  const double u = n1 * ua + n2 * ub;
  return u / (n1 * n2 * n) - (4.0 * n1 * n2 - 1.0) / (6.0 * n);
}

// Integral form n1 n2 / n^2 * sum over pooled points of (F_a - F_b)^2.
inline double cvm_ecdf_form(const Vec& x, const std::vector<bool>& m) {
  double n1 = 0;
  for (bool b : m) n1 += b;
  const double n = static_cast<double>(x.size()), n2 = n - n1;
  double s = 0;
  for (double t : x) {
    double fa = 0, fb = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (x[i] <= t) (m[i] ? fa : fb) += 1;
    s += std::pow(fa / n1 - fb / n2, 2);
  }
  return n1 * n2 / (n * n) * s;
}

inline Extremeness cramer_von_mises(const Vec& x, std::size_t) {
  return [x](const std::vector<bool>& m) { return cvm_rank_form(x, m); };
}

inline double percentile(Vec v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

// Uncorrected Epps-Singleton W with an SVD pseudo-inverse.
inline Extremeness epps_singleton(const Vec& x, std::size_t n1) {
  double sigma = (percentile(x, 0.75) - percentile(x, 0.25)) / 2.0;
  if (!(sigma > 0)) {
    double mean = 0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double ss = 0;
    for (double v : x) ss += (v - mean) * (v - mean);
    sigma = std::sqrt(ss / static_cast<double>(x.size()));
  }
  const std::size_t n = x.size();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), 4);
  if (sigma > 0)
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      g(r, 0) = std::cos(0.4 * x[i] / sigma);
      g(r, 1) = std::cos(0.8 * x[i] / sigma);
      g(r, 2) = std::sin(0.4 * x[i] / sigma);
      g(r, 3) = std::sin(0.8 * x[i] / sigma);
    }
  return [g, n, n1](const std::vector<bool>& m) {
    const double na = static_cast<double>(n1), nb = static_cast<double>(n - n1), nn = na + nb;
    Eigen::RowVector4d ma = Eigen::RowVector4d::Zero(), mb = Eigen::RowVector4d::Zero();
    for (std::size_t i = 0; i < n; ++i) (m[i] ? ma : mb) += g.row(static_cast<Eigen::Index>(i));
    ma /= na;
    mb /= nb;
    Eigen::Matrix4d ca = Eigen::Matrix4d::Zero(), cb = Eigen::Matrix4d::Zero();
    for (std::size_t i = 0; i < n; ++i) {
      const Eigen::RowVector4d d = g.row(static_cast<Eigen::Index>(i)) - (m[i] ? ma : mb);
      (m[i] ? ca : cb) += d.transpose() * d;
    }
    const Eigen::Matrix4d cov = (nn / na) * (ca / na) + (nn / nb) * (cb / nb);
    Eigen::JacobiSVD<Eigen::Matrix4d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    Eigen::Vector4d inv = Eigen::Vector4d::Zero();
    for (int k = 0; k < 4; ++k)
      if (sv(k) > sv(0) * 1e-12) inv(k) = 1.0 / sv(k);
    const Eigen::Matrix4d pinv = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
    const Eigen::Vector4d diff = (ma - mb).transpose();
    return nn * diff.dot(pinv * diff);
  };
}

inline Extremeness lepage(const Vec& x, std::size_t n1) {
  const Vec r = naive_midranks(x);
  const Vec s = ab_scores(x);
  const Moments mo = enumerated_moments(r, s, n1);
  return [r, s, mo](const std::vector<bool>& m) {
    const double a = z(sum_where(r, m), mo.mean_s, mo.var_s);
    const double b = z(sum_where(s, m), mo.mean_t, mo.var_t);
    return a * a + b * b;
  };
}

inline Extremeness cucconi(const Vec& x, std::size_t n1) {
  const Vec r = naive_midranks(x);
  const double np1 = static_cast<double>(x.size()) + 1.0;
  Vec sq(x.size()), rsq(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    sq[i] = r[i] * r[i];
    rsq[i] = (np1 - r[i]) * (np1 - r[i]);
  }
  const Moments mo = enumerated_moments(sq, rsq, n1);
  double rho = (mo.var_s > 0 && mo.var_t > 0) ? mo.cov / std::sqrt(mo.var_s * mo.var_t) : 0.0;
  rho = std::clamp(rho, -1.0 + 1e-12, 1.0 - 1e-12);
  return [sq, rsq, mo, rho](const std::vector<bool>& m) {
    const double u = z(sum_where(sq, m), mo.mean_s, mo.var_s);
    const double v = z(sum_where(rsq, m), mo.mean_t, mo.var_t);
    return (u * u + v * v - 2.0 * rho * u * v) / (2.0 * (1.0 - rho * rho));
  };
}

// R^2 of the least-squares regression of group membership on [1, R, R^2].
inline Extremeness podgor_gastwirth(const Vec& x, std::size_t) {
  const Vec r = naive_midranks(x);
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd design(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double ri = r[static_cast<std::size_t>(i)];
    design(i, 0) = 1.0;
    design(i, 1) = ri;
    design(i, 2) = ri * ri;
  }
  const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> qr(design);
  return [design, qr, n](const std::vector<bool>& m) {
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = m[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
    const Eigen::VectorXd fit = design * qr.solve(y);
    const double mean = y.mean();
    const double sst = (y.array() - mean).square().sum();
    const double ssr = (fit.array() - mean).square().sum();
    return std::clamp(ssr / sst, 0.0, 1.0);
  };
}

inline Extremeness make(votetrace::TestKind kind, const Vec& x, std::size_t n1) {
  using votetrace::TestKind;
  switch (kind) {
    case TestKind::mann_whitney: return mann_whitney(x, n1);
    case TestKind::ansari_bradley: return ansari_bradley(x, n1);
    case TestKind::cramer_von_mises: return cramer_von_mises(x, n1);
    case TestKind::epps_singleton: return epps_singleton(x, n1);
    case TestKind::kolmogorov_smirnov: return kolmogorov_smirnov(x, n1);
    case TestKind::cucconi: return cucconi(x, n1);
    case TestKind::lepage: return lepage(x, n1);
    case TestKind::podgor_gastwirth: return podgor_gastwirth(x, n1);
  }
  return {};
}

// Exact permutation p-value: share of splits at least as extreme as the
// observed one (first n1 values of x), relative tolerance 1e-9.
inline double exact_p(votetrace::TestKind kind, const Vec& a, const Vec& b) {
  Vec x = a;
  x.insert(x.end(), b.begin(), b.end());
  const auto ext = make(kind, x, a.size());
  std::vector<bool> obs_mask(x.size(), false);
  std::fill(obs_mask.begin(), obs_mask.begin() + static_cast<std::ptrdiff_t>(a.size()), true);
  const double obs = ext(obs_mask);
  const double tol = 1e-9 * std::max(1.0, std::abs(obs));
  std::uint64_t hits = 0, total = 0;
  for (const auto& m : all_splits(x.size(), a.size())) {
    ++total;
    if (ext(m) >= obs - tol) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace oracle
