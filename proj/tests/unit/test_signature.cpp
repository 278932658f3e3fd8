#include <doctest.h>

#include <random>

#include "error.hpp"
#include "helpers.hpp"
#include "signature.hpp"

using namespace votetrace;

namespace {

std::vector<ActivityBurst> action_bursts(const std::vector<double>& offsets_idx1, double start_shift = 0.0) {
  std::vector<ActivityBurst> out;
  for (std::size_t i = 0; i < offsets_idx1.size(); ++i)
    out.push_back(testing::burst("v" + std::to_string(i), 2, start_shift + 100.0 * static_cast<double>(i),
                                 {0.0, offsets_idx1[i]}, {100}));
  return out;
}

std::vector<const ActivityBurst*> pointers(const std::vector<ActivityBurst>& bs) {
  std::vector<const ActivityBurst*> p;
  for (const auto& b : bs) p.push_back(&b);
  return p;
}

std::vector<double> step_offsets(std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i % 2 ? 0.9 : 0.1;
  return v;
}

std::vector<double> uniform_offsets(std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<double>(i) / static_cast<double>(n - 1);
  return v;
}

}  // namespace

TEST_SUITE("signature") {

TEST_CASE("constant group normalizes to zeros") {
  const auto c = normalized_trend(std::vector<double>(30, 0.40), 1, 100);
  REQUIRE(c.size() == 100);
  for (double v : c) CHECK(v == 0.0);
}

TEST_CASE("half at 0.1 and half at 0.9 is a unit step at the midpoint") {
  const auto c = normalized_trend(step_offsets(100), 1, 100);
  // Direct construction of the sorted, normalized step.
  std::vector<double> expected(100, 0.0);
  for (std::size_t i = 50; i < 100; ++i) expected[i] = 1.0;
  for (std::size_t i = 0; i < 100; ++i) CHECK(c[i] == doctest::Approx(expected[i]).epsilon(1e-12));
  const auto [score, pos] = jump_in_window(c, 0.25, 0.75);
  CHECK(score == doctest::Approx(1.0));
  CHECK(pos == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("uniform spread is near linear") {
  const auto c = normalized_trend(uniform_offsets(100), 1, 100);
  for (std::size_t i = 0; i < 100; ++i) CHECK(c[i] == doctest::Approx(static_cast<double>(i) / 99.0));
  CHECK(jump_in_window(c, 0.25, 0.75).first == doctest::Approx(1.0 / 99.0));
}

TEST_CASE("step beats uniform for every L >= 4 with w = 1") {
  for (std::size_t L = 4; L <= 64; ++L) {
    const auto step = normalized_trend(step_offsets(L), 1, L);
    const auto uni = normalized_trend(uniform_offsets(L), 1, L);
    INFO("L=", L);
    CHECK(jump_in_window(step, 0.0, 1.0).first > jump_in_window(uni, 0.0, 1.0).first);
  }
}

TEST_CASE("curves are monotone and within [0, 1]") {
  std::mt19937_64 rng(21);
  std::lognormal_distribution<double> ln(-1.0, 0.8);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> v(3 + rng() % 200);
    for (auto& x : v) x = ln(rng);
    const std::size_t w = 1 + rng() % 9, L = 2 + rng() % 150;
    const auto c = normalized_trend(v, w, L);
    REQUIRE(c.size() == L);
    for (std::size_t i = 0; i < c.size(); ++i) {
      CHECK(c[i] >= 0.0);
      CHECK(c[i] <= 1.0);
      if (i) CHECK(c[i] >= c[i - 1] - 1e-15);
    }
  }
}

TEST_CASE("build_signature and shift invariance") {
  SignatureOptions o;
  o.window = 1;
  const auto bs = action_bursts(step_offsets(100));
  const auto sig = build_signature(pointers(bs), 3, o);
  CHECK(sig.voters == 100);
  CHECK(sig.support == 100);
  CHECK(sig.jump_score == doctest::Approx(1.0));

  const auto shifted = action_bursts(step_offsets(100), 5000.0);
  const auto moved = build_signature(pointers(shifted), 3, o).curve;
  REQUIRE(moved.size() == sig.curve.size());
  for (std::size_t i = 0; i < moved.size(); ++i) CHECK(moved[i] == doctest::Approx(sig.curve[i]).epsilon(1e-9));

  auto reordered = bs;
  std::reverse(reordered.begin(), reordered.end());
  CHECK(build_signature(pointers(reordered), 3, o).curve == sig.curve);
}

TEST_CASE("one contributing voter is an error") {
  const auto bs = action_bursts({0.3});
  CHECK_THROWS_AS(build_signature(pointers(bs), 3, SignatureOptions{}), Error);
}

TEST_CASE("detection picks the largest jump above threshold") {
  SignatureOptions o;
  o.window = 1;
  const auto step = action_bursts(step_offsets(100));
  const auto flat = action_bursts(uniform_offsets(100));
  const std::vector<ActionSignature> sigs = {build_signature(pointers(flat), 1, o),
                                             build_signature(pointers(step), 3, o)};
  const auto v = detect_submission(sigs, o);
  REQUIRE(v.detected_action_id.has_value());
  CHECK(*v.detected_action_id == 3);
  CHECK(v.scores.size() == 2);
  CHECK(v.jump_score == doctest::Approx(1.0));

  const std::vector<ActionSignature> only_flat = {sigs[0]};
  CHECK_FALSE(detect_submission(only_flat, o).detected_action_id.has_value());
}

}
