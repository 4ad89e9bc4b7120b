#include "maxreg/linalg.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include <Eigen/Eigenvalues>

#include "maxreg/errors.hpp"

namespace maxreg::linalg {

Mat hermitian_part(const Mat& a) { return 0.5 * (a + a.adjoint()); }

Mat skew_part(const Mat& a) { return 0.5 * (a - a.adjoint()); }

double relative_asymmetry(const Mat& a) {
    const double scale = a.norm();
    if (scale == 0.0) return 0.0;
    return (a - a.adjoint()).norm() / scale;
}

double spectral_norm(const Mat& a) {
    if (a.size() == 0) return 0.0;
    if (a.rows() <= 16 && a.cols() <= 16) {
        Eigen::JacobiSVD<Mat> svd(a);
        return svd.singularValues()(0);
    }
    Eigen::BDCSVD<Mat> svd(a);
    return svd.singularValues()(0);
}

HermitianRoots hermitian_roots(const Mat& g) {
    if (g.rows() != g.cols() || g.rows() == 0)
        throw ConfigurationError("Gram matrix must be square and non-empty");
    if (relative_asymmetry(g) > 1e-12)
        throw ConfigurationError("Gram matrix is not Hermitian within 1e-12");
    Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_part(g));
    if (es.info() != Eigen::Success) throw LinearAlgebraError("Hermitian eigensolve failed");
    const Eigen::VectorXd& lam = es.eigenvalues();
    if (!(lam(0) > 0.0)) throw ConfigurationError("Gram matrix is not positive definite");
    HermitianRoots out;
    out.eigenvalues = lam;
    const Mat& u = es.eigenvectors();
    out.sqrt = u * lam.cwiseSqrt().cast<cplx>().asDiagonal() * u.adjoint();
    out.inv_sqrt = u * lam.cwiseSqrt().cwiseInverse().cast<cplx>().asDiagonal() * u.adjoint();
    return out;
}

Eigen::VectorXd generalized_hermitian_eigenvalues(const Mat& s, const Mat& c_inv_sqrt) {
    Mat m = c_inv_sqrt * hermitian_part(s) * c_inv_sqrt;
    Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_part(m), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw LinearAlgebraError("Hermitian eigensolve failed");
    return es.eigenvalues();
}

Mat expm(const Mat& a) {
    static constexpr double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                                   1187353796428800.0,  129060195264000.0,   10559470521600.0,
                                   670442572800.0,      33522128640.0,       1323241920.0,
                                   40840800.0,          960960.0,            16380.0,
                                   182.0,               1.0};
    static constexpr double theta13 = 5.371920351148152;
    const Eigen::Index n = a.rows();
    const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
    int squarings = 0;
    if (norm1 > theta13) squarings = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
    const Mat x = a / std::ldexp(1.0, squarings);
    const Mat id = Mat::Identity(n, n);
    const Mat x2 = x * x;
    const Mat x4 = x2 * x2;
    const Mat x6 = x4 * x2;
    const Mat u_inner = x6 * (b[13] * x6 + b[11] * x4 + b[9] * x2) + b[7] * x6 + b[5] * x4 +
                        b[3] * x2 + b[1] * id;
    const Mat u = x * u_inner;
    const Mat v = x6 * (b[12] * x6 + b[10] * x4 + b[8] * x2) + b[6] * x6 + b[4] * x4 + b[2] * x2 +
                  b[0] * id;
    Mat r = (v - u).partialPivLu().solve(v + u);
    for (int k = 0; k < squarings; ++k) r = r * r;
    return r;
}

Mat sqrtm(const Mat& a) {
    const Eigen::Index n = a.rows();
    Eigen::ComplexSchur<Mat> schur(a);
    if (schur.info() != Eigen::Success) throw LinearAlgebraError("complex Schur decomposition failed");
    const Mat& t = schur.matrixT();
    const Mat& q = schur.matrixU();
    const double scale = std::max(t.cwiseAbs().maxCoeff(), 1e-300);
    Mat r = Mat::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const cplx lam = t(i, i);
        const bool on_cut = lam.real() <= 0.0 && std::abs(lam.imag()) <= 1e-14 * scale;
        if (on_cut || std::abs(lam) <= 1e-14 * scale)
            throw DomainError("spectrum touches (-inf, 0]; principal square root undefined");
        r(i, i) = std::sqrt(lam);
    }
    for (Eigen::Index j = 1; j < n; ++j) {
        for (Eigen::Index i = j - 1; i >= 0; --i) {
            cplx s = t(i, j);
            for (Eigen::Index k = i + 1; k < j; ++k) s -= r(i, k) * r(k, j);
            r(i, j) = s / (r(i, i) + r(j, j));
        }
    }
    return q * r * q.adjoint();
}

Mat solve_lyapunov(const Mat& b, const Mat& c) {
    const Eigen::Index n = b.rows();
    Eigen::ComplexSchur<Mat> schur(b);
    if (schur.info() != Eigen::Success) throw LinearAlgebraError("complex Schur decomposition failed");
    const Mat& t = schur.matrixT();
    const Mat& q = schur.matrixU();
    const Mat ct = q.adjoint() * c * q;
    const double scale = std::max(t.cwiseAbs().maxCoeff(), 1e-300);
    Mat y = Mat::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            cplx s = ct(i, j);
            for (Eigen::Index k = 0; k < i; ++k) s -= std::conj(t(k, i)) * y(k, j);
            for (Eigen::Index k = 0; k < j; ++k) s -= y(i, k) * t(k, j);
            const cplx d = std::conj(t(i, i)) + t(j, j);
            if (std::abs(d) <= 1e-14 * scale)
                throw DomainError("Lyapunov operator is singular (eigenvalues symmetric about iR)");
            y(i, j) = s / d;
        }
    }
    return q * y * q.adjoint();
}

const GaussRule& gauss_legendre(int order) {
    static std::mutex mutex;
    static std::map<int, GaussRule> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(order);
    if (it != cache.end()) return it->second;
    if (order < 1) throw DomainError("Gauss rule order must be positive");
    // Golub–Welsch: eigen-decomposition of the Jacobi matrix.
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(order, order);
    for (int k = 1; k < order; ++k) {
        const double beta = k / std::sqrt(4.0 * k * k - 1.0);
        jac(k, k - 1) = beta;
        jac(k - 1, k) = beta;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
    GaussRule rule;
    rule.nodes.resize(order);
    rule.weights.resize(order);
    for (int k = 0; k < order; ++k) {
        rule.nodes[k] = es.eigenvalues()(k);
        const double v0 = es.eigenvectors()(0, k);
        rule.weights[k] = 2.0 * v0 * v0;
    }
    return cache.emplace(order, std::move(rule)).first->second;
}

cplx phi1(cplx x) {
    if (std::abs(x) < 0.5) {
        cplx term = 1.0;
        cplx sum = 1.0;
        for (int k = 1; k < 30; ++k) {
            term *= -x / static_cast<double>(k + 1);
            sum += term;
        }
        return sum;
    }
    return (1.0 - std::exp(-x)) / x;
}

}  // namespace maxreg::linalg
