#include <doctest.h>

#include <random>

#include "fbl/error.hpp"
#include "fbl/prob.hpp"
#include "support.hpp"

using namespace fbl;
using fbl::testing::h2;
using fbl::testing::random_channel;
using fbl::testing::random_simplex;

TEST_CASE("pmf validation") {
  CHECK_THROWS_AS(Pmf({0.5, 0.6}), InvalidArgument);
  CHECK_THROWS_AS(Pmf({-0.1, 1.1}), InvalidArgument);
  CHECK_THROWS_AS(Pmf(std::vector<double>{}), InvalidArgument);
  CHECK_NOTHROW(Pmf({0.5, 0.5 + 5e-13}));
  const Pmf r({1.0, 3.0}, true);
  CHECK(r[0] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(Pmf::binary(0.3)[1] == doctest::Approx(0.7));
  CHECK(Pmf::point_mass(3, 2)[2] == 1.0);
}

TEST_CASE("channel validation and constructors") {
  CHECK_THROWS_AS(Channel(2, 2, {0.5, 0.5, 0.4, 0.4}), InvalidArgument);
  CHECK_THROWS_AS(Channel(2, 2, {1.0, 0.0, 1.0}), InvalidArgument);
  CHECK_THROWS_AS(Channel({{0.5, 0.5}, {1.0}}), InvalidArgument);
  const Channel b = Channel::bsc(0.1);
  CHECK(b(0, 1) == 0.1);
  CHECK(b(1, 1) == 0.9);
  const Channel c = Channel::constant(3, Pmf({0.2, 0.8}));
  CHECK(c.input_size() == 3);
  CHECK(c(2, 1) == 0.8);
  CHECK(Channel::identity(3)(1, 1) == 1.0);
}

TEST_CASE("joint indexing is row-major with axis 0 slowest") {
  const JointPmf j({2, 3}, {0.1, 0.1, 0.1, 0.2, 0.2, 0.3});
  const std::size_t idx[] = {1, 0};
  CHECK(j.flatten(idx) == 3);
  CHECK(j.at(idx) == 0.2);
  std::size_t back[2];
  j.unflatten(5, back);
  CHECK(back[0] == 1);
  CHECK(back[1] == 2);
  CHECK_THROWS_AS(JointPmf({2, 2}, {0.5, 0.5}), InvalidArgument);
}

TEST_CASE("compose rejects forward references and size mismatches") {
  const Factor root = Factor::root(Pmf::uniform(2));
  const Factor forward = Factor::conditional({1}, Channel::bsc(0.1));
  CHECK_THROWS_AS(compose(std::vector<Factor>{root, forward}), InvalidArgument);
  const Factor wrong = Factor::conditional({0}, Channel::identity(3));
  CHECK_THROWS_AS(compose(std::vector<Factor>{root, wrong}), InvalidArgument);
}

TEST_CASE("property: marginals of a composed joint reproduce its factors") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t na = 2 + rng() % 3, nb = 2 + rng() % 3, nc = 2 + rng() % 2;
    const Pmf pa(random_simplex(na, rng, 0.2));
    const Channel b_a(na, nb, random_channel(na, nb, rng, 0.2));
    const Channel c_ab(na * nb, nc, random_channel(na * nb, nc, rng, 0.2));
    const JointPmf j = compose(std::vector<Factor>{Factor::root(pa), Factor::conditional({0}, b_a),
                                                   Factor::conditional({0, 1}, c_ab)});
    const JointPmf ma = marginal(j, {0});
    for (std::size_t a = 0; a < na; ++a) CHECK(std::abs(ma[a] - pa[a]) <= 1e-12);
    const JointPmf mab = marginal(j, {0, 1});
    for (std::size_t a = 0; a < na; ++a) {
      for (std::size_t b = 0; b < nb; ++b) CHECK(std::abs(mab[a * nb + b] - pa[a] * b_a(a, b)) <= 1e-12);
    }
    // Conditionals recover the kernels wherever the conditioning event has mass.
    const std::size_t given[] = {0, 1};
    const std::size_t target[] = {2};
    const Channel back = conditional_channel(j, given, target);
    for (std::size_t ab = 0; ab < na * nb; ++ab) {
      if (mab[ab] <= 0.0) {
        for (std::size_t c = 0; c < nc; ++c) CHECK(back(ab, c) == doctest::Approx(1.0 / nc));
        continue;
      }
      for (std::size_t c = 0; c < nc; ++c) CHECK(std::abs(back(ab, c) - c_ab(ab, c)) <= 1e-12);
    }
  }
}

TEST_CASE("marginal rejects bad axis sets") {
  const JointPmf j({2, 2}, {0.25, 0.25, 0.25, 0.25});
  CHECK_THROWS_AS(marginal(j, {}), InvalidArgument);
  CHECK_THROWS_AS(marginal(j, {0, 0}), InvalidArgument);
  CHECK_THROWS_AS(marginal(j, {2}), InvalidArgument);
  const JointPmf swapped = marginal(j, {1, 0});
  CHECK(swapped.dims() == std::vector<std::size_t>{2, 2});
}

TEST_CASE("property: mutual information is nonnegative and equals H(A) - H(A|B)") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t na = 2 + rng() % 4, nb = 2 + rng() % 4;
    const JointPmf j({na, nb}, random_simplex(na * nb, rng, 0.2));
    const double mi = mutual_information(j);
    CHECK(mi >= -1e-12);
    const double ha = entropy(marginal(j, {0}).to_pmf());
    CHECK(std::abs(mi - (ha - conditional_entropy(j))) <= 1e-10);
    CHECK(std::abs(entropy(j) - (conditional_entropy(j) + entropy(marginal(j, {1}).to_pmf()))) <= 1e-10);
  }
}

TEST_CASE("binary convolution is symmetric and between its arguments' extremes") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const double a = u(rng), b = u(rng);
    const double ab = binary_convolution(b, a);
    CHECK(ab == doctest::Approx(binary_convolution(a, b)).epsilon(1e-15));
    CHECK(ab >= std::min({a, b, 1 - a, 1 - b}) - 1e-15);
    CHECK(ab <= std::max({a, b, 1 - a, 1 - b}) + 1e-15);
  }
}

TEST_CASE("entropies of closed-form binary laws") {
  CHECK(binary_entropy(0.5) == doctest::Approx(1.0));
  CHECK(binary_entropy(0.0) == 0.0);
  CHECK(binary_entropy(0.11) == doctest::Approx(h2(0.11)).epsilon(1e-14));
  const JointPmf xy({2, 2}, {0.5 * 0.89, 0.5 * 0.11, 0.5 * 0.11, 0.5 * 0.89});
  CHECK(std::abs(conditional_entropy(xy) - h2(0.11)) <= 1e-14);
  CHECK(std::abs(mutual_information(xy) - (1.0 - h2(0.11))) <= 1e-14);
}
