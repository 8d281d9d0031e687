#include "oadf/spectral.hpp"

#include <cmath>

#include "oadf/error.hpp"
#include "oadf/rng.hpp"

namespace oadf::spectral {

namespace {

constexpr double kEigengapTolerance = 1e-12;

// Deterministic, structure-free start vector for the iterative eigensolver.
Vector seed_vector(Eigen::Index m) {
  Rng rng(0xF1ED1E5ull);
  Vector v(m);
  for (Eigen::Index i = 0; i < m; ++i) v[i] = rng.uniform() - 0.5;
  return v;
}

void deflate(Vector& x, const std::vector<Vector>& basis) {
  for (const auto& b : basis) x -= b.dot(x) * b;
}

struct EigenPair {
  double value;
  Vector vector;
};

// Smallest eigenpair of L restricted to the complement of `deflated`
// (orthonormal). Power iteration on 2I - L seeds a Rayleigh-quotient
// iteration; eigenvalues of L lie in [0, 2], so 2I - L is PSD and its
// dominant direction in the complement is the sought eigenvector.
EigenPair smallest_deflated_eigenpair(const Matrix& laplacian, const std::vector<Vector>& deflated) {
  const Eigen::Index m = laplacian.rows();
  Vector x = seed_vector(m);
  deflate(x, deflated);
  if (x.norm() < 1e-300) {  // pathological overlap with the seed; reseed
    x = Vector::Unit(m, 0);
    deflate(x, deflated);
  }
  x.normalize();

  // Power stage.
  for (int it = 0; it < 80; ++it) {
    Vector y = 2.0 * x - laplacian * x;
    deflate(y, deflated);
    double n = y.norm();
    if (n < 1e-300) break;
    x = y / n;
  }
  double rho = x.dot(laplacian * x);

  // Rayleigh-quotient iteration; cubic convergence near a simple eigenvalue.
  const double tol = 1e-13 * std::max(1.0, laplacian.cwiseAbs().maxCoeff()) * m;
  Matrix shifted(m, m);
  for (int it = 0; it < 60; ++it) {
    Vector residual = laplacian * x - rho * x;
    if (residual.norm() <= tol) break;
    shifted = laplacian;
    shifted.diagonal().array() -= rho;
    Vector y = Eigen::PartialPivLU<Matrix>(shifted).solve(x);
    if (!y.allFinite() || y.norm() < 1e-300) {
      // Shift landed on the eigenvalue; nudge and retry once this round.
      shifted.diagonal().array() -= 1e-12;
      y = Eigen::PartialPivLU<Matrix>(shifted).solve(x);
      if (!y.allFinite() || y.norm() < 1e-300) break;
    }
    deflate(y, deflated);
    double n = y.norm();
    if (n < 1e-300) break;
    x = y / n;
    rho = x.dot(laplacian * x);
  }
  return {x.dot(laplacian * x), std::move(x)};
}

}  // namespace

Matrix pairwise_distances(const Matrix& contexts) {
  const Eigen::Index m = contexts.rows();
  Matrix d = Matrix::Zero(m, m);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index k = j + 1; k < m; ++k) {
      double dist = (contexts.row(j) - contexts.row(k)).norm();
      d(j, k) = dist;
      d(k, j) = dist;
    }
  return d;
}

double mean_sigma_from_distances(const Matrix& distances) {
  const Eigen::Index m = distances.rows();
  if (m < 2) throw InputError("mean_sigma needs at least 2 samples");
  double sum = 0.0;
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index k = j + 1; k < m; ++k) sum += distances(j, k);
  return sum / (static_cast<double>(m) * (m - 1) / 2.0);
}

double mean_sigma(const Matrix& contexts) {
  return mean_sigma_from_distances(pairwise_distances(contexts));
}

Matrix affinity_from_distances(const Matrix& distances, double sigma) {
  if (!(sigma > 0)) throw InputError("affinity requires sigma > 0");
  return (-distances / sigma).array().exp();
}

Matrix pairwise_affinity(const Matrix& contexts, double sigma) {
  return affinity_from_distances(pairwise_distances(contexts), sigma);
}

NormalizedLaplacian normalized_laplacian(const Matrix& affinity) {
  const Eigen::Index m = affinity.rows();
  if (affinity.cols() != m) throw InputError("affinity matrix must be square");
  Vector degree = affinity.rowwise().sum();
  if ((degree.array() <= 0).any()) throw InputError("affinity row sums must be positive");
  Vector inv_sqrt = degree.array().rsqrt();
  Matrix l = Matrix::Identity(m, m) - inv_sqrt.asDiagonal() * affinity * inv_sqrt.asDiagonal();
  l = 0.5 * (l + l.transpose()).eval();  // exact symmetry
  return {std::move(l), degree.array().sqrt()};
}

std::optional<FiedlerEmbedding> fiedler_embedding(const NormalizedLaplacian& laplacian) {
  const Eigen::Index m = laplacian.matrix.rows();
  if (m < 3) throw InputError("fiedler_embedding needs at least 3 samples");

  std::vector<Vector> deflated;
  deflated.push_back(laplacian.sqrt_degree.normalized());

  EigenPair a = smallest_deflated_eigenpair(laplacian.matrix, deflated);
  deflated.push_back(a.vector);
  EigenPair b = smallest_deflated_eigenpair(laplacian.matrix, deflated);
  if (b.value < a.value) std::swap(a, b);  // a holds lambda_2

  if (b.value - a.value < kEigengapTolerance) return std::nullopt;

  Vector e = std::move(a.vector);
  e.normalize();
  Eigen::Index peak = 0;
  e.cwiseAbs().maxCoeff(&peak);
  if (e[peak] < 0) e = -e;
  return FiedlerEmbedding{std::move(e), a.value};
}

EigenDecomposition jacobi_eigen_decompose(Matrix m) {
  const Eigen::Index n = m.rows();
  if (m.cols() != n) throw InputError("jacobi: matrix must be square");
  if (n > 500) throw InputError("jacobi: matrix too large (m <= 500)");
  if (n == 0) throw InputError("jacobi: empty matrix");

  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  Matrix v = Matrix::Identity(n, n);

  const int max_sweeps = 100;
  int sweep = 0;
  for (; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off = std::max(off, std::abs(m(p, q)));
    if (off <= 1e-14 * scale) break;

    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = m(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double theta = (m(q, q) - m(p, p)) / (2.0 * apq);
        // Stable tangent of the rotation angle.
        double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (Eigen::Index i = 0; i < n; ++i) {
          const double mip = m(i, p);
          const double miq = m(i, q);
          m(i, p) = c * mip - s * miq;
          m(i, q) = s * mip + c * miq;
        }
        for (Eigen::Index i = 0; i < n; ++i) {
          const double mpi = m(p, i);
          const double mqi = m(q, i);
          m(p, i) = c * mpi - s * mqi;
          m(q, i) = s * mpi + c * mqi;
        }
        for (Eigen::Index i = 0; i < n; ++i) {
          const double vip = v(i, p);
          const double viq = v(i, q);
          v(i, p) = c * vip - s * viq;
          v(i, q) = s * vip + c * viq;
        }
      }
    }
  }
  if (sweep == max_sweeps) throw InputError("jacobi: no convergence within sweep budget");

  std::vector<Eigen::Index> order(n);
  for (Eigen::Index i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return m(a, a) < m(b, b); });

  EigenDecomposition out;
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.eigenvalues[i] = m(order[i], order[i]);
    out.eigenvectors.col(i) = v.col(order[i]).normalized();
  }
  return out;
}

}  // namespace oadf::spectral
