#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

namespace slcn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Value and first derivative of a Legendre polynomial at a point.
struct LegendreValue {
    double value;
    double derivative;
};

/// Evaluates L_k(x) and L_k'(x) with the three-term recurrence.
///
/// The derivative uses L'_{k+1} = L'_{k-1} + (2k+1) L_k, which stays finite at
/// the endpoints (unlike the closed form with 1/(1-x^2)).
inline LegendreValue legendre_eval(int degree, double x)
{
    if (degree < 0) {
        throw std::invalid_argument("legendre_eval: negative degree");
    }
    if (std::abs(x) > 1.0 + 1e-12) {
        throw std::domain_error("legendre_eval: x outside [-1, 1]");
    }
    if (degree == 0) {
        return {1.0, 0.0};
    }

    double p_prev = 1.0;  // L_{k-1}
    double p = x;         // L_k
    double dp_prev = 0.0; // L'_{k-1}
    double dp = 1.0;      // L'_k
    for (int k = 1; k < degree; ++k) {
        const double p_next = ((2 * k + 1) * x * p - k * p_prev) / (k + 1);
        const double dp_next = dp_prev + (2 * k + 1) * p;
        p_prev = p;
        p = p_next;
        dp_prev = dp;
        dp = dp_next;
    }
    return {p, dp};
}

struct QuadratureRule {
    int n = 0;
    Vector nodes;
    Vector weights;
};

/// Gauss-Legendre rule with n nodes on [-1, 1], exact up to degree 2n-1.
///
/// Roots of L_n are found by Newton iteration from Chebyshev-type initial
/// guesses. Only the negative half is iterated; the positive half is mirrored
/// so the rule is symmetric to the last bit.
inline QuadratureRule gauss_rule(int n)
{
    if (n < 1) {
        throw std::invalid_argument("gauss_rule: need at least one node");
    }
    constexpr int max_iterations = 100;
    constexpr double tolerance = 1e-15;

    QuadratureRule rule;
    rule.n = n;
    rule.nodes.resize(n);
    rule.weights.resize(n);

    const int half = n / 2;
    for (int i = 0; i < half; ++i) {
        // Chebyshev-like guess for the i-th root counted from -1.
        double x = -std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        LegendreValue lv{};
        for (int it = 0; it < max_iterations; ++it) {
            lv = legendre_eval(n, x);
            const double dx = lv.value / lv.derivative;
            x -= dx;
            if (std::abs(dx) <= tolerance * std::max(1.0, std::abs(x))) {
                break;
            }
        }
        lv = legendre_eval(n, x);
        const double w = 2.0 / ((1.0 - x * x) * lv.derivative * lv.derivative);
        rule.nodes(i) = x;
        rule.weights(i) = w;
        rule.nodes(n - 1 - i) = -x;
        rule.weights(n - 1 - i) = w;
    }
    if (n % 2 == 1) {
        const LegendreValue lv = legendre_eval(n, 0.0);
        rule.nodes(half) = 0.0;
        rule.weights(half) = 2.0 / (lv.derivative * lv.derivative);
    }
    return rule;
}

struct GeneralizedEigen {
    Vector values;  // ascending
    Matrix vectors; // columns, mass-orthonormal
};

/// Solves stiff * Z = mass * Z * diag(values) with Z^T mass Z = I.
///
/// Eigenvalues within 1e-10 of zero (relative to the largest) are snapped
/// to exactly zero; they come from the constant null mode of the Neumann
/// stiffness matrix.
inline GeneralizedEigen generalized_eig(const Matrix& mass, const Matrix& stiff)
{
    if (mass.rows() != mass.cols() || stiff.rows() != stiff.cols() || mass.rows() != stiff.rows()) {
        throw std::invalid_argument("generalized_eig: dimension mismatch");
    }
    Eigen::LLT<Matrix> llt(mass);
    if (llt.info() != Eigen::Success) {
        throw std::runtime_error("generalized_eig: mass matrix is not positive definite");
    }
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> solver(stiff, mass, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("generalized_eig: eigensolver did not converge");
    }
    GeneralizedEigen out{solver.eigenvalues(), solver.eigenvectors()};
    const double scale = std::max(1.0, out.values.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < out.values.size(); ++i) {
        if (std::abs(out.values(i)) <= 1e-10 * scale) {
            out.values(i) = 0.0;
        }
    }
    return out;
}

/// One-dimensional Legendre-Galerkin basis
///
///     phi_0 = L_0,  phi_1 = L_1,  phi_k = L_{k-2} - L_k  (k = 2..M-1)
///
/// so that span{phi_k} is exactly the polynomials of degree <= M-1. The
/// bubbles phi_k, k >= 2, vanish at +-1; Neumann conditions are natural.
///
/// Everything is tabulated on the 2M-point Gauss grid used for dealiased
/// products, together with the mass and stiffness matrices and their
/// generalized eigenpairs. Immutable after construction.
class Basis1D {
public:
    explicit Basis1D(int dimension);

    int dimension() const { return m_; }
    int grid_size() const { return quad_.n; }
    std::uint64_t id() const { return id_; }

    const QuadratureRule& quad() const { return quad_; }
    /// phi_table()(i, k) = phi_k(x_i); shape 2M x M.
    const Matrix& phi_table() const { return phi_; }
    const Matrix& dphi_table() const { return dphi_; }
    const Matrix& mass() const { return mass_; }
    const Matrix& stiff() const { return stiff_; }
    const Vector& eig_vals() const { return eig_.values; }
    const Matrix& eig_vecs() const { return eig_.vectors; }

    /// Z^T * mass; maps coefficients to eigen-coordinates.
    const Matrix& to_eigen() const { return to_eigen_; }
    /// Cholesky factor of mass, for L2 projections.
    const Eigen::LLT<Matrix>& mass_llt() const { return mass_llt_; }
    /// (phi_k, 1) on [-1, 1]; nonzero only for k = 0 and k = 2.
    const Vector& integrals() const { return integrals_; }

    /// phi_k evaluated at an arbitrary point.
    double eval(int k, double x) const;
    double eval_derivative(int k, double x) const;

private:
    static std::uint64_t next_id()
    {
        static std::atomic<std::uint64_t> counter{1};
        return counter++;
    }

    int m_;
    std::uint64_t id_;
    QuadratureRule quad_;
    Matrix phi_;
    Matrix dphi_;
    Matrix mass_;
    Matrix stiff_;
    GeneralizedEigen eig_;
    Matrix to_eigen_;
    Eigen::LLT<Matrix> mass_llt_;
    Vector integrals_;
};

inline double Basis1D::eval(int k, double x) const
{
    if (k < 2) {
        return legendre_eval(k, x).value;
    }
    return legendre_eval(k - 2, x).value - legendre_eval(k, x).value;
}

inline double Basis1D::eval_derivative(int k, double x) const
{
    if (k < 2) {
        return legendre_eval(k, x).derivative;
    }
    return legendre_eval(k - 2, x).derivative - legendre_eval(k, x).derivative;
}

namespace detail {

// Zeroes entries outside the allowed pattern after checking they are
// roundoff. Anything larger means the basis or quadrature is wrong.
template <typename Allowed>
void enforce_pattern(Matrix& a, Allowed allowed, const char* what)
{
    const double scale = a.cwiseAbs().maxCoeff();
    for (Eigen::Index j = 0; j < a.rows(); ++j) {
        for (Eigen::Index k = 0; k < a.cols(); ++k) {
            if (allowed(j, k)) {
                continue;
            }
            if (std::abs(a(j, k)) > 1e-12 * scale) {
                throw std::runtime_error(std::string("build_basis: unexpected fill-in in ") + what);
            }
            a(j, k) = 0.0;
        }
    }
}

} // namespace detail

inline Basis1D::Basis1D(int dimension)
    : m_(dimension), id_(next_id())
{
    if (dimension < 3) {
        throw std::invalid_argument("build_basis: dimension must be at least 3");
    }
    quad_ = gauss_rule(2 * m_);
    const int n = quad_.n;

    phi_.resize(n, m_);
    dphi_.resize(n, m_);
    for (int i = 0; i < n; ++i) {
        const double x = quad_.nodes(i);
        Vector l(m_), dl(m_);
        for (int k = 0; k < m_; ++k) {
            const LegendreValue lv = legendre_eval(k, x);
            l(k) = lv.value;
            dl(k) = lv.derivative;
        }
        for (int k = 0; k < m_; ++k) {
            phi_(i, k) = k < 2 ? l(k) : l(k - 2) - l(k);
            dphi_(i, k) = k < 2 ? dl(k) : dl(k - 2) - dl(k);
        }
    }

    const auto w = quad_.weights.asDiagonal();
    mass_ = phi_.transpose() * w * phi_;
    stiff_ = dphi_.transpose() * w * dphi_;
    mass_ = 0.5 * (mass_ + mass_.transpose()).eval();
    stiff_ = 0.5 * (stiff_ + stiff_.transpose()).eval();

    // mass: diagonal plus the +-2 bands (parity is preserved by every phi_k).
    // stiff: phi_1' = L_0 and phi_k' = -(2k-1) L_{k-1} for k >= 2, so it is diagonal.
    detail::enforce_pattern(
        mass_, [](Eigen::Index j, Eigen::Index k) { return j == k || std::abs(j - k) == 2; }, "mass");
    detail::enforce_pattern(stiff_, [](Eigen::Index j, Eigen::Index k) { return j == k; }, "stiffness");

    integrals_ = phi_.transpose() * quad_.weights;
    for (int k = 0; k < m_; ++k) {
        if (k != 0 && k != 2) {
            integrals_(k) = 0.0;
        }
    }

    mass_llt_.compute(mass_);
    eig_ = generalized_eig(mass_, stiff_);

    int zero_count = 0;
    for (Eigen::Index i = 0; i < eig_.values.size(); ++i) {
        zero_count += eig_.values(i) == 0.0 ? 1 : 0;
    }
    if (zero_count != 1 || eig_.values(0) != 0.0) {
        throw std::runtime_error("build_basis: expected exactly one zero eigenvalue");
    }
    to_eigen_ = eig_.vectors.transpose() * mass_;
}

inline Basis1D build_basis(int dimension) { return Basis1D(dimension); }

} // namespace slcn
