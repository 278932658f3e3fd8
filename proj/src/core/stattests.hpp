#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace votetrace {

enum class TestKind {
  mann_whitney,
  ansari_bradley,
  cramer_von_mises,
  epps_singleton,
  kolmogorov_smirnov,
  cucconi,
  lepage,
  podgor_gastwirth,
};

enum class TestMethod { exact_permutation, asymptotic };

struct TestReport {
  std::string test_name;
  double statistic = 0.0;
  double p_value = 1.0;
  TestMethod method = TestMethod::asymptotic;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
};

struct TestOptions {
  // Exact permutation whenever C(n1 + n2, n1) is at most this many splits.
  std::uint64_t exact_limit = 200000;
};

const char* test_name(TestKind kind);
const char* to_string(TestMethod method);
std::optional<TestKind> parse_test_kind(std::string_view name);

// Every test, and the seven used for leakage screening (no Mann-Whitney).
std::span<const TestKind> all_tests();
std::span<const TestKind> screening_tests();

// C(n, k) saturating at UINT64_MAX.
std::uint64_t binomial(std::size_t n, std::size_t k);

// Two-sided p-values. Preconditions: n1, n2 >= 2, finite values; the
// asymptotic route also needs n1, n2 >= 5.
TestReport run_test(TestKind kind, std::span<const double> a, std::span<const double> b,
                    const TestOptions& options = {});

TestReport mann_whitney(std::span<const double> a, std::span<const double> b, const TestOptions& options = {});
TestReport ansari_bradley(std::span<const double> a, std::span<const double> b, const TestOptions& options = {});
TestReport cramer_von_mises(std::span<const double> a, std::span<const double> b, const TestOptions& options = {});
TestReport epps_singleton(std::span<const double> a, std::span<const double> b, const TestOptions& options = {});
TestReport kolmogorov_smirnov(std::span<const double> a, std::span<const double> b, const TestOptions& options = {});
TestReport cucconi(std::span<const double> a, std::span<const double> b, const TestOptions& options = {});
TestReport lepage(std::span<const double> a, std::span<const double> b, const TestOptions& options = {});
TestReport podgor_gastwirth(std::span<const double> a, std::span<const double> b, const TestOptions& options = {});

namespace stats_detail {

// Midranks (1-based) of the pooled sample a ++ b.
std::vector<double> midranks(std::span<const double> pooled);

// Limiting distributions, exposed for tests.
double kolmogorov_sf(double lambda);
double cvm_limit_cdf(double x);
double chi2_sf(double x, double dof);

}  // namespace stats_detail

}  // namespace votetrace
