#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "evd/errors.hpp"
#include "evd/rng.hpp"
#include "evd/utility.hpp"
#include "test_util.hpp"

using namespace evd;

namespace {

double entropy(const std::vector<double>& g) {
  double h = 0.0;
  for (double v : g) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

}  // namespace

TEST_CASE("meowa weights reproduce the worked triple") {
  const auto w = meowa_weights(3, 0.8);
  CHECK(w.weights[0] == doctest::Approx(0.6819).epsilon(2e-4));
  CHECK(w.weights[1] == doctest::Approx(0.2362).epsilon(2e-3));
  CHECK(w.weights[2] == doctest::Approx(0.0819).epsilon(2e-3));
}

TEST_CASE("meowa closed cases") {
  SUBCASE("pair weights are (gamma, 1-gamma)") {
    const auto w = meowa_weights(2, 0.8);
    CHECK(w.weights[0] == doctest::Approx(0.8).epsilon(1e-10));
    CHECK(w.weights[1] == doctest::Approx(0.2).epsilon(1e-10));
  }
  SUBCASE("gamma 1 concentrates on the first weight") {
    const auto w = meowa_weights(5, 1.0);
    CHECK(w.weights[0] == 1.0);
    for (std::size_t k = 1; k < 5; ++k) CHECK(w.weights[k] == 0.0);
  }
  SUBCASE("gamma 0.5 is uniform") {
    const auto w = meowa_weights(4, 0.5);
    for (double v : w.weights) CHECK(v == doctest::Approx(0.25).epsilon(1e-9));
  }
  SUBCASE("cardinality 1") {
    const auto w = meowa_weights(1, 0.7);
    CHECK(w.weights == std::vector<double>{1.0});
  }
}

TEST_CASE("meowa satisfies its constraints across the grid") {
  for (std::size_t n = 1; n <= 12; ++n) {
    for (double gamma : {0.5, 0.6, 0.7, 0.8, 0.9, 1.0}) {
      const auto w = meowa_weights(n, gamma);
      double sum = 0.0;
      for (double v : w.weights) {
        CHECK(v >= 0.0);
        sum += v;
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
      if (n >= 2) CHECK(tdi(w.weights) == doctest::Approx(gamma).epsilon(1e-9));
      // Non-increasing for gamma >= 0.5.
      for (std::size_t k = 1; k < n; ++k) {
        CHECK(w.weights[k] <= w.weights[k - 1] + 1e-12);
      }
    }
  }
}

TEST_CASE("meowa beats random feasible weight vectors on entropy") {
  // Sample feasible vectors as convex mixes of the gamma-matching corner
  // family and compare entropies.
  const std::size_t n = 4;
  const double gamma = 0.75;
  const auto best = meowa_weights(n, gamma);
  const double best_entropy = entropy(best.weights);

  Rng rng(123);
  int tried = 0;
  while (tried < 1000) {
    // Random vector on the simplex, then shift toward the TDI target by
    // mixing with one of the two extreme feasible solutions.
    std::vector<double> g(n);
    double total = 0.0;
    for (double& v : g) {
      v = -std::log(1.0 - rng.uniform());
      total += v;
    }
    for (double& v : g) v /= total;
    const double t = tdi(g);
    std::vector<double> extreme(n, 0.0);
    if (t < gamma) {
      extreme[0] = 1.0;  // TDI = 1
    } else {
      extreme[n - 1] = 1.0;  // TDI = 0
    }
    const double te = tdi(extreme);
    const double lambda = (gamma - t) / (te - t);
    if (!(lambda >= 0.0 && lambda <= 1.0)) continue;
    for (std::size_t k = 0; k < n; ++k) {
      g[k] = (1.0 - lambda) * g[k] + lambda * extreme[k];
    }
    REQUIRE(tdi(g) == doctest::Approx(gamma).epsilon(1e-9));
    CHECK(entropy(g) <= best_entropy + 1e-9);
    ++tried;
  }
}

TEST_CASE("extended matrix for identity utilities at gamma 0.8") {
  auto frame = evdtest::frame3();
  const auto eum = extend_utility_matrix(identity_utilities(3),
                                         build_full_catalog(frame), 0.8);
  REQUIRE(eum.catalog()->size() == 7);

  // Singleton rows pass through.
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(eum.value(i, j) == doctest::Approx(i == j ? 1.0 : 0.0));
    }
  }
  // Pair rows carry 0.8 on their members.
  const auto pair01 = eum.catalog()->index_of(0b011);
  REQUIRE(pair01.has_value());
  CHECK(eum.value(*pair01, 0) == doctest::Approx(0.8).epsilon(1e-9));
  CHECK(eum.value(*pair01, 1) == doctest::Approx(0.8).epsilon(1e-9));
  CHECK(eum.value(*pair01, 2) == doctest::Approx(0.0));
  // Omega row is g1 everywhere.
  const auto omega = eum.catalog()->index_of(frame->omega());
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(eum.value(*omega, j) == doctest::Approx(0.6819).epsilon(2e-4));
  }
}

TEST_CASE("extended matrix limit cases") {
  auto frame = evdtest::frame3();
  SUBCASE("gamma 1 takes the member maximum") {
    const auto eum = extend_utility_matrix(identity_utilities(3),
                                           build_full_catalog(frame), 1.0);
    for (std::size_t a = 0; a < eum.catalog()->size(); ++a) {
      for (std::size_t j = 0; j < 3; ++j) {
        const double want = eum.catalog()->act(a).contains(j) ? 1.0 : 0.0;
        CHECK(eum.value(a, j) == doctest::Approx(want));
      }
    }
  }
  SUBCASE("gamma 0.5 takes the member mean") {
    const auto eum = extend_utility_matrix(identity_utilities(3),
                                           build_full_catalog(frame), 0.5);
    const auto pair = eum.catalog()->index_of(0b101);
    CHECK(eum.value(*pair, 0) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(eum.value(*pair, 2) == doctest::Approx(0.5).epsilon(1e-9));
    const auto omega = eum.catalog()->index_of(frame->omega());
    CHECK(eum.value(*omega, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
  }
}

TEST_CASE("member utility grows with gamma; non-members stay zero") {
  auto frame = evdtest::frame3();
  double previous = 0.0;
  for (double gamma : {0.5, 0.6, 0.7, 0.8, 0.9, 1.0}) {
    const auto eum = extend_utility_matrix(identity_utilities(3),
                                           build_full_catalog(frame), gamma);
    const auto pair = eum.catalog()->index_of(0b011);
    CHECK(eum.value(*pair, 0) >= previous - 1e-12);
    previous = eum.value(*pair, 0);
    for (std::size_t a = 0; a < eum.catalog()->size(); ++a) {
      for (std::size_t j = 0; j < 3; ++j) {
        if (!eum.catalog()->act(a).contains(j)) {
          CHECK(eum.value(a, j) == 0.0);
        }
      }
    }
  }
}

TEST_CASE("catalog construction") {
  SUBCASE("full catalog has 2^M - 1 acts in canonical order") {
    auto frame = evdtest::frame3();
    const auto catalog = build_full_catalog(frame);
    CHECK(catalog->size() == 7);
    // Cardinality then lexicographic.
    CHECK(catalog->act(0).members == 0b001);
    CHECK(catalog->act(1).members == 0b010);
    CHECK(catalog->act(2).members == 0b100);
    CHECK(catalog->act(3).members == 0b011);
    CHECK(catalog->act(4).members == 0b101);
    CHECK(catalog->act(5).members == 0b110);
    CHECK(catalog->act(6).members == 0b111);
  }
  SUBCASE("lexicographic beats numeric mask order") {
    auto frame = evdtest::frame_n(4);
    const auto catalog = build_full_catalog(frame);
    // {w1,w4} = 0b1001 sorts before {w2,w3} = 0b0110.
    const auto i14 = catalog->index_of(0b1001);
    const auto i23 = catalog->index_of(0b0110);
    CHECK(*i14 < *i23);
  }
  SUBCASE("selected catalog: singletons + omega + extras, deduplicated") {
    auto frame = evdtest::frame_n(4);
    const auto catalog =
        build_selected_catalog(frame, {0b0011, 0b1100, 0b0011});
    CHECK(catalog->size() == 7);  // 4 singletons + 2 pairs + omega
  }
  SUBCASE("full catalog guardrail") {
    std::vector<std::string> labels;
    for (int i = 0; i < 21; ++i) labels.push_back("c" + std::to_string(i));
    CHECK_THROWS_AS(build_full_catalog(make_frame(labels)), CatalogTooLarge);
  }
  SUBCASE("missing singleton is rejected") {
    auto frame = evdtest::frame3();
    CHECK_THROWS_AS(
        ActCatalog(frame, {Act{0b001}, Act{0b010}, Act{0b111}}),
        std::invalid_argument);
  }
}

TEST_CASE("utility csv round trip") {
  auto frame = make_frame({"cat", "dog", "frog"});
  std::vector<double> original = identity_utilities(3);
  original[0 * 3 + 1] = 0.25;  // off-diagonal entry survives the trip
  const auto eum =
      extend_utility_matrix(original, build_full_catalog(frame), 0.7);

  std::stringstream buffer;
  write_utilities_csv(eum, buffer);
  buffer.seekg(0);
  const auto parsed = read_original_utilities_csv(buffer, *frame);
  for (std::size_t i = 0; i < 9; ++i) {
    CHECK(parsed[i] == doctest::Approx(original[i]).epsilon(1e-15));
  }
}
