#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "grassketch/errors.hpp"
#include "grassketch/kernels_exact.hpp"
#include "grassketch/linalg.hpp"
#include "oracles.hpp"

using namespace grassketch;
using std::numbers::pi;

namespace {

std::pair<Subspace, Subspace> pair_at(std::vector<double> angles, int n, std::uint64_t seed) {
  return subspace_pair_with_angles(n, angles, seed);
}

}  // namespace

TEST_CASE("projection kernel examples") {
  const auto a = random_subspace(8, 3, 1);
  CHECK(projection_kernel(a, a) == doctest::Approx(3.0).epsilon(1e-12));
  const auto [p, q] = pair_at({pi / 2, pi / 2}, 6, 2);
  CHECK(std::abs(projection_kernel(p, q)) < 1e-12);
  const auto [l1, l2] = pair_at({pi / 3}, 5, 3);
  CHECK(projection_kernel(l1, l2) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("Binet-Cauchy kernel examples") {
  const auto a = random_subspace(8, 3, 1);
  CHECK(binet_cauchy_kernel(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  const auto [p, q] = pair_at({0.2, pi / 2}, 6, 2);
  CHECK(std::abs(binet_cauchy_kernel(p, q)) < 1e-12);
  const auto [r, s] = pair_at({pi / 6, pi / 3}, 6, 3);
  CHECK(binet_cauchy_kernel(r, s) == doctest::Approx(0.1875).epsilon(1e-12));
}

TEST_CASE("both kernels match their principal-angle formulas on 100 random pairs") {
  for (int t = 0; t < 100; ++t) {
    const auto a = random_subspace(20, 4, 100 + t);
    const auto b = perturb_subspace(a, 0.05 * (t % 20), 200 + t);
    const auto theta = oracle::principal_angles(a.basis(), b.basis());
    double sum = 0.0, prod = 1.0;
    for (double th : theta) {
      sum += std::cos(th) * std::cos(th);
      prod *= std::cos(th) * std::cos(th);
    }
    CHECK(std::abs(projection_kernel(a, b) - sum) < 1e-9);
    CHECK(std::abs(binet_cauchy_kernel(a, b) - prod) < 1e-9);
    CHECK(projection_kernel(a, b) >= 0.0);
    CHECK(projection_kernel(a, b) <= 4.0 + 1e-12);
    CHECK(binet_cauchy_kernel(a, b) >= 0.0);
    CHECK(binet_cauchy_kernel(a, b) <= 1.0 + 1e-12);
  }
}

TEST_CASE("kernels are invariant to the choice of basis") {
  for (int t = 0; t < 20; ++t) {
    const auto a = random_subspace(15, 3, 300 + t);
    const auto b = random_subspace(15, 3, 400 + t);
    const Eigen::MatrixXd q = oracle::orthogonal(3, 500 + t);
    const Subspace a2(a.basis() * q);
    CHECK(std::abs(projection_kernel(a, b) - projection_kernel(a2, b)) < 1e-9);
    CHECK(std::abs(binet_cauchy_kernel(a, b) - binet_cauchy_kernel(a2, b)) < 1e-9);
  }
}

TEST_CASE("kernels reject mismatched shapes") {
  CHECK_THROWS_AS(projection_kernel(random_subspace(5, 2, 1), random_subspace(6, 2, 1)), DimensionError);
  CHECK_THROWS_AS(binet_cauchy_kernel(random_subspace(5, 2, 1), random_subspace(5, 1, 1)), DimensionError);
}

TEST_CASE("gram_matrix examples") {
  SUBCASE("single element") {
    const std::vector<Subspace> one{random_subspace(6, 2, 1)};
    const auto g = gram_matrix(one, KernelName::projection);
    REQUIRE(g.size() == 1);
    CHECK(g.values(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
  }
  SUBCASE("two orthogonal lines") {
    const auto [l1, l2] = pair_at({pi / 2}, 4, 5);
    const std::vector<Subspace> lines{l1, l2};
    const auto g = gram_matrix(lines, KernelName::projection);
    CHECK((g.values - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("empty and heterogeneous input") {
    CHECK_THROWS_AS(gram_matrix(std::vector<Subspace>{}, KernelName::projection), DimensionError);
    const std::vector<Subspace> mixed{random_subspace(6, 2, 1), random_subspace(6, 3, 1)};
    CHECK_THROWS_AS(gram_matrix(mixed, KernelName::projection), DimensionError);
  }
  SUBCASE("approximate kernel names are not exact kernels") {
    const std::vector<Subspace> one{random_subspace(6, 2, 1)};
    CHECK_THROWS_AS(gram_matrix(one, KernelName::approx_k1), ConfigError);
  }
}

TEST_CASE("gram matrices of 50 random subspaces are symmetric PSD with the right diagonal") {
  std::vector<Subspace> data;
  for (int i = 0; i < 50; ++i) data.push_back(random_subspace(12, 3, 700 + i));
  for (auto name : {KernelName::projection, KernelName::binet_cauchy}) {
    const auto g = gram_matrix(data, name);
    CHECK((g.values - g.values.transpose()).cwiseAbs().maxCoeff() < 1e-9);
    const double diag = name == KernelName::projection ? 3.0 : 1.0;
    CHECK((g.values.diagonal().array() - diag).abs().maxCoeff() < 1e-9);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g.values);
    CHECK(es.eigenvalues().minCoeff() >= -1e-8);
    for (int i = 0; i < 50; i += 7)
      for (int j = 0; j < 50; j += 5) CHECK(g.values(i, j) == doctest::Approx(exact_kernel(name, data[i], data[j])));
  }
}

TEST_CASE("cross_kernel matches pointwise evaluation") {
  std::vector<Subspace> q, r;
  for (int i = 0; i < 4; ++i) q.push_back(random_subspace(9, 2, 10 + i));
  for (int i = 0; i < 6; ++i) r.push_back(random_subspace(9, 2, 20 + i));
  const auto c = cross_kernel(q, r, KernelName::binet_cauchy);
  REQUIRE(c.rows() == 4);
  REQUIRE(c.cols() == 6);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 6; ++j) CHECK(c(i, j) == doctest::Approx(binet_cauchy_kernel(q[i], r[j])).epsilon(1e-14));
}

TEST_CASE("kernel names round trip") {
  for (auto k : {KernelName::projection, KernelName::binet_cauchy, KernelName::approx_k1, KernelName::approx_k2,
                 KernelName::approx_k2sym, KernelName::approx_k3}) {
    CHECK(kernel_name_from_string(to_string(k)) == k);
  }
  CHECK_THROWS_AS(kernel_name_from_string("rbf"), ConfigError);
}

TEST_CASE("gram binary and CSV export") {
  std::vector<Subspace> data;
  for (int i = 0; i < 3; ++i) data.push_back(random_subspace(5, 2, i));
  auto g = gram_matrix(data, KernelName::projection);
  std::stringstream ss;
  write_gram(ss, g);
  CHECK(ss.str().size() == 4 + 4 + 9 * 8);
  CHECK(ss.str().substr(0, 4) == "GRAM");
  const auto back = read_gram(ss);
  CHECK(back.values == g.values);

  g.ids = {"a", "b", "c"};
  std::ostringstream csv;
  write_gram_csv(csv, g);
  std::istringstream is(csv.str());
  std::string header;
  std::getline(is, header);
  CHECK(header.find("a,b,c") != std::string::npos);
}
