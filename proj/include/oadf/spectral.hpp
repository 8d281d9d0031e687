#pragma once

#include <Eigen/Dense>
#include <optional>

namespace oadf::spectral {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Pairwise Euclidean distances between rows of a context matrix.
Matrix pairwise_distances(const Matrix& contexts);

// Mean of all pairwise distances, self-pairs excluded. Returns 0 when every
// pairwise distance is zero, which callers treat as a degeneracy signal.
// Throws InputError with fewer than 2 rows.
double mean_sigma(const Matrix& contexts);
double mean_sigma_from_distances(const Matrix& distances);

// A[j][k] = exp(-||z_j - z_k|| / sigma); symmetric, unit diagonal, entries in
// (0, 1]. Throws InputError when sigma <= 0.
Matrix pairwise_affinity(const Matrix& contexts, double sigma);
Matrix affinity_from_distances(const Matrix& distances, double sigma);

// L = I - D^{-1/2} A D^{-1/2} with D the diagonal of row sums. Symmetric PSD
// with smallest eigenvalue 0 and kernel direction D^{1/2} * 1.
struct NormalizedLaplacian {
  Matrix matrix;
  Vector sqrt_degree;  // known eigenvector of eigenvalue 0, unnormalized
};
NormalizedLaplacian normalized_laplacian(const Matrix& affinity);

struct FiedlerEmbedding {
  Vector values;      // unit norm, sign fixed: largest-|.| entry positive
  double eigenvalue;  // lambda_2
};

// Eigenvector of the second-smallest eigenvalue of L. Fast path: power
// iteration seeding plus Rayleigh-quotient (inverse) iteration, deflating the
// known kernel vector. Returns nullopt when the lambda_2/lambda_3 gap is
// below 1e-12 (degenerate embedding). Requires m >= 3.
std::optional<FiedlerEmbedding> fiedler_embedding(const NormalizedLaplacian& laplacian);

struct EigenDecomposition {
  Vector eigenvalues;   // ascending
  Matrix eigenvectors;  // columns, matching order
};

// Full-spectrum cyclic Jacobi rotation solver for symmetric matrices up to
// m = 500. Independent of the fiedler_embedding path; serves as its
// verification oracle. Throws on non-convergence.
EigenDecomposition jacobi_eigen_decompose(Matrix m);

}  // namespace oadf::spectral
