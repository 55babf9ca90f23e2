#include <catch_amalgamated.hpp>

#include <atomic>
#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

#include "simflow/parallel.hpp"
#include "simflow/rng.hpp"

using namespace simflow;

// Known-answer vectors from the Random123 distribution (kat_vectors, philox4x32 10 rounds).
TEST_CASE("philox4x32-10 known answers") {
  using B = std::array<std::uint32_t, 4>;
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == B{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        B{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        B{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("same seed reproduces the stream") {
  Rng a(7), b(7), c(8);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a();
    CHECK(x == b());
    differs = differs || x != c();
  }
  CHECK(differs);
}

TEST_CASE("derived seeds are distinct and path-consistent") {
  std::set<Seed> seen;
  for (std::uint64_t t = 0; t < 1000; ++t) seen.insert(derive_seed(42, t));
  CHECK(seen.size() == 1000);
  CHECK(derive_seed(42, {3, 5}) == derive_seed(derive_seed(42, 3), 5));
  CHECK(derive_seed(42, 3) != derive_seed(43, 3));
  CHECK(Rng(9).child(2).seed() == derive_seed(9, 2));
}

TEST_CASE("uniform and normal moments") {
  Rng rng(123);
  const int n = 200000;
  double su = 0, su2 = 0, sn = 0, sn2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    su += u;
    su2 += u * u;
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
  }
  CHECK(su / n == Catch::Approx(0.5).margin(0.005));
  CHECK(su2 / n - std::pow(su / n, 2) == Catch::Approx(1.0 / 12).margin(0.002));
  CHECK(sn / n == Catch::Approx(0.0).margin(0.01));
  CHECK(sn2 / n == Catch::Approx(1.0).margin(0.01));
}

TEST_CASE("below stays in range and covers it") {
  Rng rng(5);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const auto k = rng.below(7);
    REQUIRE(k < 7);
    ++counts[k];
  }
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);
}

TEST_CASE("parallel_for results do not depend on thread count") {
  auto run = [](std::size_t threads) {
    set_thread_count(threads);
    std::vector<double> out(257);
    parallel_for(out.size(), [&](std::size_t i) {
      Rng rng(derive_seed(11, i));
      out[i] = rng.normal() + rng.uniform();
    });
    return out;
  };
  const auto one = run(1);
  CHECK(run(2) == one);
  CHECK(run(8) == one);
  set_thread_count(0);
}

TEST_CASE("parallel_for rethrows the lowest failing index") {
  set_thread_count(4);
  std::atomic<int> ran{0};
  try {
    parallel_for(100, [&](std::size_t i) {
      ++ran;
      if (i == 17 || i == 60) throw std::runtime_error(std::to_string(i));
    });
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()) == "17");
  }
  set_thread_count(0);
}
