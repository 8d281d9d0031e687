#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oadf/error.hpp"
#include "oadf/rng.hpp"
#include "oadf/spectral.hpp"

using namespace oadf;
using namespace oadf::spectral;

namespace {

Matrix random_contexts(Rng& rng, int m, int d) {
  Matrix z(m, d);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < d; ++j) z(i, j) = rng.normal();
  return z;
}

double sign_aligned_max_diff(const Vector& a, const Vector& b) {
  double flip = a.dot(b) < 0 ? -1.0 : 1.0;
  return (a - flip * b).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("mean_sigma over fixtures") {
  Matrix two(2, 1);
  two << 0, 2;
  CHECK(mean_sigma(two) == doctest::Approx(2.0).epsilon(1e-12));

  Matrix three(3, 1);
  three << 0, 1, 2;
  CHECK(mean_sigma(three) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));

  Matrix same(3, 2);
  same << 1, 2, 1, 2, 1, 2;
  CHECK(mean_sigma(same) == 0.0);  // degeneracy flag

  Matrix one(1, 1);
  one << 5;
  CHECK_THROWS_AS(mean_sigma(one), InputError);
}

TEST_CASE("pairwise affinity follows exp(-d/sigma)") {
  Matrix z(3, 1);
  z << 0, 1, 3;
  double sigma = 1.0;
  auto a = pairwise_affinity(z, sigma);
  CHECK(a(0, 0) == 1.0);
  CHECK(a(1, 1) == 1.0);
  CHECK(a(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(a(0, 2) == doctest::Approx(std::exp(-3.0)).epsilon(1e-12));
  CHECK(a(0, 1) == a(1, 0));
  // Monotone decay with distance.
  CHECK(a(0, 1) > a(0, 2));
  CHECK_THROWS_AS(pairwise_affinity(z, 0.0), InputError);
  CHECK_THROWS_AS(pairwise_affinity(z, -1.0), InputError);
}

TEST_CASE("affinity is scale invariant when sigma is recomputed") {
  Rng rng(4);
  auto z = random_contexts(rng, 12, 3);
  auto a1 = pairwise_affinity(z, mean_sigma(z));
  Matrix scaled = 37.5 * z;
  auto a2 = pairwise_affinity(scaled, mean_sigma(scaled));
  CHECK((a1 - a2).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("normalized laplacian of the 2x2 all-ones affinity") {
  Matrix a(2, 2);
  a << 1, 1, 1, 1;
  auto nl = normalized_laplacian(a);
  CHECK(nl.matrix(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(nl.matrix(0, 1) == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(nl.matrix(1, 0) == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(nl.matrix(1, 1) == doctest::Approx(0.5).epsilon(1e-14));
  auto eig = jacobi_eigen_decompose(nl.matrix);
  CHECK(eig.eigenvalues[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(eig.eigenvalues[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("identity affinity yields the zero laplacian") {
  Matrix a = Matrix::Identity(3, 3);
  auto nl = normalized_laplacian(a);
  CHECK(nl.matrix.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("laplacian invariants on random affinities") {
  Rng rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    int m = 3 + static_cast<int>(rng.below(20));
    int d = 1 + static_cast<int>(rng.below(6));
    auto z = random_contexts(rng, m, d);
    double sigma = mean_sigma(z);
    REQUIRE(sigma > 0);
    auto nl = normalized_laplacian(pairwise_affinity(z, sigma));
    CHECK((nl.matrix - nl.matrix.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    auto eig = jacobi_eigen_decompose(nl.matrix);
    CHECK(eig.eigenvalues[0] >= -1e-10);
    CHECK(std::abs(eig.eigenvalues[0]) <= 1e-10);
  }
}

TEST_CASE("fiedler separates two near-disconnected cliques by sign") {
  const double eps = 1e-4;
  Matrix a(4, 4);
  a << 1, 1, eps, eps,
       1, 1, eps, eps,
       eps, eps, 1, 1,
       eps, eps, 1, 1;
  auto nl = normalized_laplacian(a);
  auto emb = fiedler_embedding(nl);
  REQUIRE(emb.has_value());
  const auto& e = emb->values;
  CHECK(e[0] * e[1] > 0);
  CHECK(e[2] * e[3] > 0);
  CHECK(e[0] * e[2] < 0);

  // Brute-force oracle agreement on the same matrix.
  auto eig = jacobi_eigen_decompose(nl.matrix);
  CHECK(sign_aligned_max_diff(e, eig.eigenvectors.col(1)) < 1e-8);
  CHECK(emb->eigenvalue == doctest::Approx(eig.eigenvalues[1]).epsilon(1e-10));
}

TEST_CASE("fiedler groups the strongly connected pair in a 3-node path") {
  Matrix a(3, 3);
  a << 1.0, 0.9, 0.01,
       0.9, 1.0, 0.05,
       0.01, 0.05, 1.0;
  auto emb = fiedler_embedding(normalized_laplacian(a));
  REQUIRE(emb.has_value());
  const auto& e = emb->values;
  CHECK(e[0] * e[1] > 0);
  CHECK(e[0] * e[2] < 0);
}

TEST_CASE("fiedler matches the jacobi oracle on random context sets") {
  Rng rng(1234);
  for (int rep = 0; rep < 25; ++rep) {
    int m = 3 + static_cast<int>(rng.below(48));
    int d = 1 + static_cast<int>(rng.below(8));
    auto z = random_contexts(rng, m, d);
    auto nl = normalized_laplacian(pairwise_affinity(z, mean_sigma(z)));
    auto emb = fiedler_embedding(nl);
    REQUIRE(emb.has_value());
    auto eig = jacobi_eigen_decompose(nl.matrix);
    CHECK(sign_aligned_max_diff(emb->values, eig.eigenvectors.col(1)) < 1e-8);
    CHECK(std::abs(emb->values.norm() - 1.0) < 1e-10);
    // Orthogonal to the known kernel vector.
    CHECK(std::abs(emb->values.dot(nl.sqrt_degree.normalized())) < 1e-8);
    // Deterministic sign: the largest-magnitude entry is positive.
    Eigen::Index peak;
    emb->values.cwiseAbs().maxCoeff(&peak);
    CHECK(emb->values[peak] > 0);
  }
}

TEST_CASE("permuting samples permutes the embedding") {
  Rng rng(88);
  auto z = random_contexts(rng, 9, 2);
  auto e1 = fiedler_embedding(normalized_laplacian(pairwise_affinity(z, mean_sigma(z))));
  REQUIRE(e1.has_value());

  std::vector<int> perm{3, 1, 4, 0, 8, 6, 2, 7, 5};
  Matrix zp(9, 2);
  for (int i = 0; i < 9; ++i) zp.row(i) = z.row(perm[i]);
  auto e2 = fiedler_embedding(normalized_laplacian(pairwise_affinity(zp, mean_sigma(zp))));
  REQUIRE(e2.has_value());

  Vector expected(9);
  for (int i = 0; i < 9; ++i) expected[i] = e1->values[perm[i]];
  CHECK(sign_aligned_max_diff(e2->values, expected) < 1e-9);
}

TEST_CASE("degenerate spectrum is flagged") {
  // Zero laplacian: every eigenvalue 0, no usable gap.
  auto nl = normalized_laplacian(Matrix::Identity(4, 4));
  CHECK(!fiedler_embedding(nl).has_value());
}

TEST_CASE("fiedler requires at least 3 samples") {
  Matrix a(2, 2);
  a << 1, 0.5, 0.5, 1;
  CHECK_THROWS_AS(fiedler_embedding(normalized_laplacian(a)), InputError);
}

TEST_CASE("jacobi on the identity") {
  auto eig = jacobi_eigen_decompose(Matrix::Identity(4, 4));
  for (int i = 0; i < 4; ++i) CHECK(eig.eigenvalues[i] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("jacobi on a diagonal matrix") {
  Matrix m = Matrix::Zero(3, 3);
  m(0, 0) = 2;
  m(1, 1) = 3;
  m(2, 2) = 1;
  auto eig = jacobi_eigen_decompose(m);
  CHECK(eig.eigenvalues[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(eig.eigenvalues[1] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(eig.eigenvalues[2] == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(std::abs(eig.eigenvectors.col(0).cwiseAbs()[2] - 1.0) < 1e-12);
  CHECK(std::abs(eig.eigenvectors.col(1).cwiseAbs()[0] - 1.0) < 1e-12);
  CHECK(std::abs(eig.eigenvectors.col(2).cwiseAbs()[1] - 1.0) < 1e-12);
}

TEST_CASE("jacobi reconstructs random symmetric matrices") {
  Rng rng(55);
  for (int rep = 0; rep < 5; ++rep) {
    Matrix m(10, 10);
    for (int i = 0; i < 10; ++i)
      for (int j = i; j < 10; ++j) {
        double v = rng.normal();
        m(i, j) = v;
        m(j, i) = v;
      }
    auto eig = jacobi_eigen_decompose(m);
    Matrix rebuilt =
        eig.eigenvectors * eig.eigenvalues.asDiagonal() * eig.eigenvectors.transpose();
    CHECK((rebuilt - m).norm() < 1e-8);
    for (int i = 0; i < 10; ++i) {
      Vector residual = m * eig.eigenvectors.col(i) - eig.eigenvalues[i] * eig.eigenvectors.col(i);
      CHECK(residual.norm() <= 1e-9);
    }
    for (int i = 1; i < 10; ++i) CHECK(eig.eigenvalues[i] >= eig.eigenvalues[i - 1]);
  }
}

TEST_CASE("jacobi input validation") {
  CHECK_THROWS_AS(jacobi_eigen_decompose(Matrix::Identity(501, 501)), InputError);
  Matrix rect(2, 3);
  rect.setZero();
  CHECK_THROWS_AS(jacobi_eigen_decompose(rect), InputError);
}
