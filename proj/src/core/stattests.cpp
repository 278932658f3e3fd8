#include "stattests.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "error.hpp"

namespace votetrace {

namespace {

constexpr const char* kModule = "stattests";
constexpr double kPi = 3.14159265358979323846;

constexpr std::array<TestKind, 8> kAll = {
    TestKind::mann_whitney,       TestKind::ansari_bradley, TestKind::cramer_von_mises,
    TestKind::epps_singleton,     TestKind::kolmogorov_smirnov, TestKind::cucconi,
    TestKind::lepage,             TestKind::podgor_gastwirth,
};
constexpr std::array<TestKind, 7> kScreening = {
    TestKind::ansari_bradley, TestKind::cramer_von_mises, TestKind::epps_singleton,
    TestKind::kolmogorov_smirnov, TestKind::cucconi, TestKind::lepage, TestKind::podgor_gastwirth,
};

// Value of the test for one split of the pooled sample; larger extremeness is
// further from the null and must be symmetric in the two groups.
struct Eval {
  double statistic = 0.0;
  double extremeness = 0.0;
};

using Mask = std::vector<unsigned char>;  // 1 = member of the first sample

struct Pooled {
  std::vector<double> x;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  std::size_t n = 0;
  std::vector<double> rank;
  std::vector<std::size_t> order;       // pooled indices in ascending value order
  std::vector<std::size_t> group_end;   // order position one past each tie group
  bool all_identical = false;
};

Pooled make_pooled(std::span<const double> a, std::span<const double> b) {
  Pooled p;
  p.n1 = a.size();
  p.n2 = b.size();
  p.n = p.n1 + p.n2;
  p.x.reserve(p.n);
  p.x.insert(p.x.end(), a.begin(), a.end());
  p.x.insert(p.x.end(), b.begin(), b.end());
  for (double v : p.x)
    if (!std::isfinite(v)) throw Error(kModule, ErrorKind::data, "sample values must be finite");
  p.order.resize(p.n);
  std::iota(p.order.begin(), p.order.end(), std::size_t{0});
  std::stable_sort(p.order.begin(), p.order.end(), [&](std::size_t i, std::size_t j) { return p.x[i] < p.x[j]; });
  p.rank.assign(p.n, 0.0);
  std::size_t i = 0;
  while (i < p.n) {
    std::size_t j = i + 1;
    while (j < p.n && p.x[p.order[j]] == p.x[p.order[i]]) ++j;
    const double mid = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) p.rank[p.order[k]] = mid;
    p.group_end.push_back(j);
    i = j;
  }
  p.all_identical = p.group_end.size() == 1;
  return p;
}

Mask observed_mask(const Pooled& p) {
  Mask m(p.n, 0);
  std::fill(m.begin(), m.begin() + static_cast<std::ptrdiff_t>(p.n1), 1);
  return m;
}

// Mean and variance of the sum of score[i] over a random n1-subset.
struct PermMoments {
  double mean = 0.0;
  double var = 0.0;
};

PermMoments perm_moments(const std::vector<double>& score, std::size_t n1) {
  const double n = static_cast<double>(score.size());
  double m = 0.0;
  for (double s : score) m += s;
  m /= n;
  double ss = 0.0;
  for (double s : score) ss += (s - m) * (s - m);
  const double k = static_cast<double>(n1);
  return {k * m, k * (n - k) / (n * (n - 1.0)) * ss};
}

double perm_covariance(const std::vector<double>& s, const std::vector<double>& t, std::size_t n1) {
  const double n = static_cast<double>(s.size());
  double ms = 0.0, mt = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    ms += s[i];
    mt += t[i];
  }
  ms /= n;
  mt /= n;
  double c = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) c += (s[i] - ms) * (t[i] - mt);
  const double k = static_cast<double>(n1);
  return k * (n - k) / (n * (n - 1.0)) * c;
}

double masked_sum(const std::vector<double>& score, const Mask& m) {
  double s = 0.0;
  for (std::size_t i = 0; i < score.size(); ++i)
    if (m[i]) s += score[i];
  return s;
}

double normal_two_sided(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

double clamp_p(double p) {
  if (std::isnan(p)) return 1.0;
  return std::clamp(p, 0.0, 1.0);
}

// Symmetric eigendecomposition by cyclic Jacobi rotations (small matrices only).
void jacobi_eigen(std::vector<double> a, std::size_t n, std::vector<double>& values, std::vector<double>& vectors) {
  vectors.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) vectors[i * n + i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0, diag = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) (i == j ? diag : off) += a[i * n + j] * a[i * n + j];
    if (off <= 1e-30 * std::max(diag, 1e-300)) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (apq == 0.0) continue;
        const double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k * n + p], akq = a[k * n + q];
          a[k * n + p] = c * akp - s * akq;
          a[k * n + q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p * n + k], aqk = a[q * n + k];
          a[p * n + k] = c * apk - s * aqk;
          a[q * n + k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = vectors[k * n + p], vkq = vectors[k * n + q];
          vectors[k * n + p] = c * vkp - s * vkq;
          vectors[k * n + q] = s * vkp + c * vkq;
        }
      }
    }
  }
  values.resize(n);
  for (std::size_t i = 0; i < n; ++i) values[i] = a[i * n + i];
}

// Quadratic form g' A^+ g for symmetric PSD A; also returns the numerical rank.
double pinv_quadratic(const std::vector<double>& a, std::size_t n, const std::vector<double>& g, std::size_t& rank) {
  std::vector<double> values, vectors;
  jacobi_eigen(a, n, values, vectors);
  double top = 0.0;
  for (double v : values) top = std::max(top, std::abs(v));
  rank = 0;
  double q = 0.0;
  if (top <= 0.0) return 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (values[k] <= top * 1e-12) continue;
    ++rank;
    double proj = 0.0;
    for (std::size_t i = 0; i < n; ++i) proj += vectors[i * n + k] * g[i];
    q += proj * proj / values[k];
  }
  return q;
}

template <class EvalFn>
double exact_p(const Pooled& p, const EvalFn& eval, double observed) {
  const double tol = 1e-9 * std::max(1.0, std::abs(observed));
  std::vector<std::size_t> c(p.n1);
  std::iota(c.begin(), c.end(), std::size_t{0});
  Mask m(p.n, 0);
  std::uint64_t total = 0, hits = 0;
  while (true) {
    std::fill(m.begin(), m.end(), 0);
    for (auto i : c) m[i] = 1;
    ++total;
    if (eval(m).extremeness >= observed - tol) ++hits;
    std::size_t k = p.n1;
    while (k > 0 && c[k - 1] == p.n - p.n1 + (k - 1)) --k;
    if (k == 0) break;
    ++c[k - 1];
    for (std::size_t j = k; j < p.n1; ++j) c[j] = c[j - 1] + 1;
  }
  return static_cast<double>(hits) / static_cast<double>(total);
}

template <class EvalFn, class AsymFn>
TestReport run(TestKind kind, std::span<const double> a, std::span<const double> b, const TestOptions& options,
               const Pooled& p, const EvalFn& eval, const AsymFn& asymptotic) {
  TestReport r;
  r.test_name = test_name(kind);
  r.n1 = a.size();
  r.n2 = b.size();
  const Eval obs = eval(observed_mask(p));
  r.statistic = obs.statistic;
  if (binomial(p.n, p.n1) <= options.exact_limit) {
    r.method = TestMethod::exact_permutation;
    r.p_value = clamp_p(exact_p(p, eval, obs.extremeness));
  } else {
    if (r.n1 < 5 || r.n2 < 5)
      throw Error(kModule, ErrorKind::usage,
                  std::string(r.test_name) + ": asymptotic method needs at least 5 values per sample");
    r.method = TestMethod::asymptotic;
    r.p_value = p.all_identical ? 1.0 : clamp_p(asymptotic(obs));
  }
  return r;
}

void check_sizes(std::span<const double> a, std::span<const double> b, TestKind kind) {
  if (a.size() < 2 || b.size() < 2)
    throw Error(kModule, ErrorKind::usage, std::string(test_name(kind)) + ": each sample needs at least 2 values");
}

std::vector<double> ab_scores(const Pooled& p) {
  std::vector<double> s(p.n);
  const double n = static_cast<double>(p.n);
  for (std::size_t i = 0; i < p.n; ++i) s[i] = std::min(p.rank[i], n - p.rank[i] + 1.0);
  return s;
}

double standardized(double value, const PermMoments& m) {
  if (!(m.var > 0.0)) return 0.0;
  return (value - m.mean) / std::sqrt(m.var);
}

}  // namespace

const char* test_name(TestKind kind) {
  switch (kind) {
    case TestKind::mann_whitney: return "mann_whitney";
    case TestKind::ansari_bradley: return "ansari_bradley";
    case TestKind::cramer_von_mises: return "cramer_von_mises";
    case TestKind::epps_singleton: return "epps_singleton";
    case TestKind::kolmogorov_smirnov: return "kolmogorov_smirnov";
    case TestKind::cucconi: return "cucconi";
    case TestKind::lepage: return "lepage";
    case TestKind::podgor_gastwirth: return "podgor_gastwirth";
  }
  return "unknown";
}

const char* to_string(TestMethod method) {
  return method == TestMethod::exact_permutation ? "exact_permutation" : "asymptotic";
}

std::optional<TestKind> parse_test_kind(std::string_view name) {
  for (auto k : kAll)
    if (name == test_name(k)) return k;
  if (name == "mw") return TestKind::mann_whitney;
  if (name == "ab") return TestKind::ansari_bradley;
  if (name == "cvm") return TestKind::cramer_von_mises;
  if (name == "es") return TestKind::epps_singleton;
  if (name == "ks") return TestKind::kolmogorov_smirnov;
  if (name == "pg") return TestKind::podgor_gastwirth;
  return std::nullopt;
}

std::span<const TestKind> all_tests() { return kAll; }
std::span<const TestKind> screening_tests() { return kScreening; }

std::uint64_t binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 r = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;
    if (r > std::numeric_limits<std::uint64_t>::max()) return std::numeric_limits<std::uint64_t>::max();
  }
  return static_cast<std::uint64_t>(r);
}

namespace stats_detail {

std::vector<double> midranks(std::span<const double> pooled) {
  return make_pooled(pooled, {}).rank;
}

double kolmogorov_sf(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 1.18) {
    // Jacobi-theta form converges fast for small arguments.
    const double c = std::sqrt(2.0 * kPi) / lambda;
    double s = 0.0;
    for (int k = 1; k < 50; ++k) {
      const double t = std::exp(-(2.0 * k - 1) * (2.0 * k - 1) * kPi * kPi / (8.0 * lambda * lambda));
      s += t;
      if (t < 1e-17) break;
    }
    return clamp_p(1.0 - c * s);
  }
  double s = 0.0;
  for (int k = 1; k < 100; ++k) {
    const double t = std::exp(-2.0 * k * k * lambda * lambda);
    s += (k % 2 == 1 ? t : -t);
    if (t < 1e-17) break;
  }
  return clamp_p(2.0 * s);
}

double cvm_limit_cdf(double x) {
  if (x <= 0.0) return 0.0;
  double total = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const double u = std::exp(std::lgamma(k + 0.5) - std::lgamma(k + 1.0)) / (std::pow(kPi, 1.5) * std::sqrt(x));
    const double y = 4.0 * k + 1.0;
    const double q = y * y / (16.0 * x);
    double term = 0.0;
    if (q < 700.0) term = u * std::sqrt(y) * std::exp(-q) * boost::math::cyl_bessel_k(0.25, q);
    total += term;
    if (std::abs(term) < 1e-7) break;
  }
  return total;
}

double chi2_sf(double x, double dof) {
  if (!(x > 0.0)) return 1.0;
  return boost::math::gamma_q(dof / 2.0, x / 2.0);
}

}  // namespace stats_detail

TestReport mann_whitney(std::span<const double> a, std::span<const double> b, const TestOptions& options) {
  check_sizes(a, b, TestKind::mann_whitney);
  const Pooled p = make_pooled(a, b);
  const PermMoments mom = perm_moments(p.rank, p.n1);
  const double shift = static_cast<double>(p.n1) * static_cast<double>(p.n1 + 1) / 2.0;
  auto eval = [&](const Mask& m) {
    const double w = masked_sum(p.rank, m);
    return Eval{w - shift, std::abs(w - mom.mean)};
  };
  auto asym = [&](const Eval& e) {
    if (!(mom.var > 0.0)) return 1.0;
    const double z = std::max(0.0, (e.extremeness - 0.5) / std::sqrt(mom.var));
    return normal_two_sided(z);
  };
  return run(TestKind::mann_whitney, a, b, options, p, eval, asym);
}

TestReport ansari_bradley(std::span<const double> a, std::span<const double> b, const TestOptions& options) {
  check_sizes(a, b, TestKind::ansari_bradley);
  const Pooled p = make_pooled(a, b);
  const auto score = ab_scores(p);
  const PermMoments mom = perm_moments(score, p.n1);
  auto eval = [&](const Mask& m) {
    const double s = masked_sum(score, m);
    return Eval{s, std::abs(s - mom.mean)};
  };
  auto asym = [&](const Eval& e) {
    if (!(mom.var > 0.0)) return 1.0;
    return normal_two_sided(e.extremeness / std::sqrt(mom.var));
  };
  return run(TestKind::ansari_bradley, a, b, options, p, eval, asym);
}

TestReport kolmogorov_smirnov(std::span<const double> a, std::span<const double> b, const TestOptions& options) {
  check_sizes(a, b, TestKind::kolmogorov_smirnov);
  const Pooled p = make_pooled(a, b);
  const double n1 = static_cast<double>(p.n1), n2 = static_cast<double>(p.n2);
  auto eval = [&](const Mask& m) {
    // Compare the empirical CDFs only after a whole tie group is consumed.
    std::size_t ca = 0, cb = 0, pos = 0;
    double d = 0.0;
    for (std::size_t end : p.group_end) {
      for (; pos < end; ++pos) (m[p.order[pos]] ? ca : cb)++;
      d = std::max(d, std::abs(static_cast<double>(ca) / n1 - static_cast<double>(cb) / n2));
    }
    return Eval{d, d};
  };
  auto asym = [&](const Eval& e) {
    const double en = std::sqrt(n1 * n2 / (n1 + n2));
    return stats_detail::kolmogorov_sf((en + 0.12 + 0.11 / en) * e.statistic);
  };
  return run(TestKind::kolmogorov_smirnov, a, b, options, p, eval, asym);
}

TestReport cramer_von_mises(std::span<const double> a, std::span<const double> b, const TestOptions& options) {
  check_sizes(a, b, TestKind::cramer_von_mises);
  const Pooled p = make_pooled(a, b);
  const double n1 = static_cast<double>(p.n1), n2 = static_cast<double>(p.n2);
  const double k = n1 * n2, nn = n1 + n2;
  auto eval = [&](const Mask& m) {
    double ua = 0.0, ub = 0.0;
    std::size_t ia = 0, ib = 0;
    for (std::size_t pos = 0; pos < p.n; ++pos) {
      const std::size_t idx = p.order[pos];
      const double r = p.rank[idx];
      if (m[idx]) {
        ++ia;
        ua += (r - static_cast<double>(ia)) * (r - static_cast<double>(ia));
      } else {
        ++ib;
        ub += (r - static_cast<double>(ib)) * (r - static_cast<double>(ib));
      }
    }
    const double u = n1 * ua + n2 * ub;
    const double t = u / (k * nn) - (4.0 * k - 1.0) / (6.0 * nn);
    return Eval{t, t};
  };
  auto asym = [&](const Eval& e) {
    const double et = (1.0 + 1.0 / nn) / 6.0;
    double vt = (nn + 1.0) * (4.0 * k * nn - 3.0 * (n1 * n1 + n2 * n2) - 2.0 * k);
    vt = vt / (45.0 * nn * nn * 4.0 * k);
    const double tn = 1.0 / 6.0 + (e.statistic - et) / std::sqrt(45.0 * vt);
    if (tn < 0.003) return 1.0;
    return std::max(0.0, 1.0 - stats_detail::cvm_limit_cdf(tn));
  };
  return run(TestKind::cramer_von_mises, a, b, options, p, eval, asym);
}

namespace {

double linear_percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

TestReport epps_singleton(std::span<const double> a, std::span<const double> b, const TestOptions& options) {
  check_sizes(a, b, TestKind::epps_singleton);
  const Pooled p = make_pooled(a, b);
  double sigma = (linear_percentile(p.x, 0.75) - linear_percentile(p.x, 0.25)) / 2.0;
  if (!(sigma > 0.0)) {
    const double mean = std::accumulate(p.x.begin(), p.x.end(), 0.0) / static_cast<double>(p.n);
    double ss = 0.0;
    for (double v : p.x) ss += (v - mean) * (v - mean);
    sigma = std::sqrt(ss / static_cast<double>(p.n));
  }
  constexpr std::size_t kDim = 4;
  std::vector<std::array<double, kDim>> g(p.n, {0.0, 0.0, 0.0, 0.0});
  if (sigma > 0.0) {
    for (std::size_t i = 0; i < p.n; ++i) {
      const double t1 = 0.4 * p.x[i] / sigma, t2 = 0.8 * p.x[i] / sigma;
      g[i] = {std::cos(t1), std::cos(t2), std::sin(t1), std::sin(t2)};
    }
  }
  const double n1 = static_cast<double>(p.n1), n2 = static_cast<double>(p.n2), nn = n1 + n2;
  double corr = 1.0;
  if (std::max(p.n1, p.n2) < 25)
    corr = 1.0 / (1.0 + std::pow(nn, -0.45) + 10.1 * (std::pow(n1, -1.7) + std::pow(n2, -1.7)));
  std::size_t observed_rank = kDim;
  bool first = true;
  auto eval = [&](const Mask& m) {
    std::array<double, kDim> ma{}, mb{};
    for (std::size_t i = 0; i < p.n; ++i)
      for (std::size_t d = 0; d < kDim; ++d) (m[i] ? ma : mb)[d] += g[i][d];
    for (std::size_t d = 0; d < kDim; ++d) {
      ma[d] /= n1;
      mb[d] /= n2;
    }
    std::vector<double> cov(kDim * kDim, 0.0);
    for (std::size_t i = 0; i < p.n; ++i) {
      const auto& mu = m[i] ? ma : mb;
      const double w = m[i] ? nn / n1 / n1 : nn / n2 / n2;
      for (std::size_t r = 0; r < kDim; ++r)
        for (std::size_t c = 0; c < kDim; ++c) cov[r * kDim + c] += w * (g[i][r] - mu[r]) * (g[i][c] - mu[c]);
    }
    std::vector<double> diff(kDim);
    for (std::size_t d = 0; d < kDim; ++d) diff[d] = ma[d] - mb[d];
    std::size_t rank = 0;
    const double w = nn * pinv_quadratic(cov, kDim, diff, rank);
    if (first) {
      observed_rank = rank;
      first = false;
    }
    return Eval{corr * w, w};
  };
  auto asym = [&](const Eval& e) {
    if (observed_rank == 0) return 1.0;
    return stats_detail::chi2_sf(e.statistic, static_cast<double>(observed_rank));
  };
  return run(TestKind::epps_singleton, a, b, options, p, eval, asym);
}

TestReport lepage(std::span<const double> a, std::span<const double> b, const TestOptions& options) {
  check_sizes(a, b, TestKind::lepage);
  const Pooled p = make_pooled(a, b);
  const auto score = ab_scores(p);
  const PermMoments mw = perm_moments(p.rank, p.n1);
  const PermMoments mab = perm_moments(score, p.n1);
  auto eval = [&](const Mask& m) {
    const double zw = standardized(masked_sum(p.rank, m), mw);
    const double zab = standardized(masked_sum(score, m), mab);
    const double l = zw * zw + zab * zab;
    return Eval{l, l};
  };
  auto asym = [&](const Eval& e) { return stats_detail::chi2_sf(e.statistic, 2.0); };
  return run(TestKind::lepage, a, b, options, p, eval, asym);
}

TestReport cucconi(std::span<const double> a, std::span<const double> b, const TestOptions& options) {
  check_sizes(a, b, TestKind::cucconi);
  const Pooled p = make_pooled(a, b);
  const double np1 = static_cast<double>(p.n) + 1.0;
  std::vector<double> sq(p.n), rsq(p.n);
  for (std::size_t i = 0; i < p.n; ++i) {
    sq[i] = p.rank[i] * p.rank[i];
    rsq[i] = (np1 - p.rank[i]) * (np1 - p.rank[i]);
  }
  const PermMoments mu = perm_moments(sq, p.n1);
  const PermMoments mv = perm_moments(rsq, p.n1);
  double rho = 0.0;
  if (mu.var > 0.0 && mv.var > 0.0) rho = perm_covariance(sq, rsq, p.n1) / std::sqrt(mu.var * mv.var);
  rho = std::clamp(rho, -1.0 + 1e-12, 1.0 - 1e-12);
  auto eval = [&](const Mask& m) {
    const double u = standardized(masked_sum(sq, m), mu);
    const double v = standardized(masked_sum(rsq, m), mv);
    const double c = (u * u + v * v - 2.0 * rho * u * v) / (2.0 * (1.0 - rho * rho));
    return Eval{c, c};
  };
  auto asym = [&](const Eval& e) { return std::exp(-e.statistic); };
  return run(TestKind::cucconi, a, b, options, p, eval, asym);
}

TestReport podgor_gastwirth(std::span<const double> a, std::span<const double> b, const TestOptions& options) {
  check_sizes(a, b, TestKind::podgor_gastwirth);
  const Pooled p = make_pooled(a, b);
  const double nn = static_cast<double>(p.n);
  // Centered design columns R and R^2; their Gram matrix is split-invariant.
  std::vector<double> c1(p.n), c2(p.n);
  double m1 = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < p.n; ++i) {
    m1 += p.rank[i];
    m2 += p.rank[i] * p.rank[i];
  }
  m1 /= nn;
  m2 /= nn;
  std::vector<double> gram(4, 0.0);
  for (std::size_t i = 0; i < p.n; ++i) {
    c1[i] = p.rank[i] - m1;
    c2[i] = p.rank[i] * p.rank[i] - m2;
    gram[0] += c1[i] * c1[i];
    gram[1] += c1[i] * c2[i];
    gram[3] += c2[i] * c2[i];
  }
  gram[2] = gram[1];
  const double sst = static_cast<double>(p.n1) * static_cast<double>(p.n2) / nn;
  std::size_t rank = 0;
  {
    std::vector<double> dummy = {0.0, 0.0};
    pinv_quadratic(gram, 2, dummy, rank);
  }
  const double df1 = static_cast<double>(rank);
  const double df2 = nn - 1.0 - df1;
  auto eval = [&](const Mask& m) {
    std::vector<double> xz(2, 0.0);
    for (std::size_t i = 0; i < p.n; ++i)
      if (m[i]) {
        xz[0] += c1[i];
        xz[1] += c2[i];
      }
    std::size_t r = 0;
    const double ssr = pinv_quadratic(gram, 2, xz, r);
    const double r2 = std::clamp(ssr / sst, 0.0, 1.0);
    double f = 0.0;
    if (df1 > 0.0 && df2 > 0.0) f = r2 >= 1.0 ? std::numeric_limits<double>::infinity() : (r2 / df1) / ((1.0 - r2) / df2);
    return Eval{f, r2};
  };
  auto asym = [&](const Eval& e) {
    if (!(df1 > 0.0) || !(df2 > 0.0)) return 1.0;
    if (std::isinf(e.statistic)) return 0.0;
    boost::math::fisher_f_distribution<double> dist(df1, df2);
    return boost::math::cdf(boost::math::complement(dist, e.statistic));
  };
  return run(TestKind::podgor_gastwirth, a, b, options, p, eval, asym);
}

TestReport run_test(TestKind kind, std::span<const double> a, std::span<const double> b, const TestOptions& options) {
  switch (kind) {
    case TestKind::mann_whitney: return mann_whitney(a, b, options);
    case TestKind::ansari_bradley: return ansari_bradley(a, b, options);
    case TestKind::cramer_von_mises: return cramer_von_mises(a, b, options);
    case TestKind::epps_singleton: return epps_singleton(a, b, options);
    case TestKind::kolmogorov_smirnov: return kolmogorov_smirnov(a, b, options);
    case TestKind::cucconi: return cucconi(a, b, options);
    case TestKind::lepage: return lepage(a, b, options);
    case TestKind::podgor_gastwirth: return podgor_gastwirth(a, b, options);
  }
  throw Error(kModule, ErrorKind::internal, "unknown test");
}

}  // namespace votetrace
