#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace maxreg {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

namespace linalg {

Mat hermitian_part(const Mat& a);
Mat skew_part(const Mat& a);

/// ∥A − A*∥_F / ∥A∥_F, zero for the zero matrix.
double relative_asymmetry(const Mat& a);

/// Largest singular value.
double spectral_norm(const Mat& a);

/// Square root and inverse square root of a Hermitian positive-definite matrix.
struct HermitianRoots {
    Mat sqrt;
    Mat inv_sqrt;
    Eigen::VectorXd eigenvalues;  ///< ascending
};

/// Throws ConfigurationError unless `g` is Hermitian (1e-12 relative) with positive spectrum.
HermitianRoots hermitian_roots(const Mat& g);

/// Eigenvalues (ascending) of the Hermitian matrix C^{-1/2} S C^{-1/2}, given C^{-1/2}.
Eigen::VectorXd generalized_hermitian_eigenvalues(const Mat& s, const Mat& c_inv_sqrt);

/// Matrix exponential e^{A} by scaling and squaring with the degree-13 Padé approximant.
Mat expm(const Mat& a);

/// Principal square root by the complex Schur method.
/// Throws DomainError when an eigenvalue lies on (−∞, 0].
Mat sqrtm(const Mat& a);

/// Solves B* X + X B = C by the Bartels–Stewart algorithm on the complex Schur form of B.
/// Throws DomainError when conj(λ_i) + λ_j vanishes for some eigenvalue pair.
Mat solve_lyapunov(const Mat& b, const Mat& c);

/// Gauss–Legendre nodes and weights on [−1, 1].
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
const GaussRule& gauss_legendre(int order);

/// (1 − e^{−x})/x, accurate near x = 0.
cplx phi1(cplx x);

}  // namespace linalg
}  // namespace maxreg
