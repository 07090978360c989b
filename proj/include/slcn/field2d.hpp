#pragma once

#include "slcn/legendre.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>

namespace slcn {

using BasisPtr = std::shared_ptr<const Basis1D>;

inline BasisPtr make_basis(int dimension) { return std::make_shared<const Basis1D>(dimension); }

/// Thrown when two fields, or a field and a grid, belong to different bases.
class BasisMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Thrown by the inverse Laplacian and the H^-1 norm for inputs with nonzero mean.
class NonZeroMean : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Thrown when nodal values are NaN or infinite.
class NonFiniteValues : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Absolute tolerance on the mean for operators defined on zero-mean fields.
inline constexpr double zero_mean_tolerance = 1e-10;

/// Values at the 2M x 2M tensor Gauss nodes; values(i, j) sits at (x_i, y_j).
struct NodalGrid2D {
    BasisPtr basis;
    Matrix values;

    bool all_finite() const { return values.allFinite(); }
};

/// Scalar field on [-1,1]^2 expanded as sum_{jk} c_jk phi_j(x) phi_k(y).
/// The row index of coeffs is the x-mode.
class Field2D {
public:
    Field2D() = default;

    explicit Field2D(BasisPtr basis)
        : basis_(std::move(basis))
    {
        if (!basis_) {
            throw std::invalid_argument("Field2D: null basis");
        }
        coeffs_ = Matrix::Zero(basis_->dimension(), basis_->dimension());
    }

    Field2D(BasisPtr basis, Matrix coeffs)
        : basis_(std::move(basis)), coeffs_(std::move(coeffs))
    {
        if (!basis_) {
            throw std::invalid_argument("Field2D: null basis");
        }
        if (coeffs_.rows() != basis_->dimension() || coeffs_.cols() != basis_->dimension()) {
            throw std::invalid_argument("Field2D: coefficient shape does not match basis");
        }
    }

    static Field2D constant(BasisPtr basis, double value)
    {
        Field2D f(std::move(basis));
        f.coeffs_(0, 0) = value;
        return f;
    }

    const BasisPtr& basis() const { return basis_; }
    const Basis1D& basis_ref() const { return *basis_; }
    int dimension() const { return static_cast<int>(coeffs_.rows()); }

    const Matrix& coeffs() const { return coeffs_; }
    Matrix& coeffs() { return coeffs_; }

    bool same_basis(const Field2D& other) const
    {
        return basis_ && other.basis_ && basis_->id() == other.basis_->id();
    }

    Field2D& operator+=(const Field2D& rhs)
    {
        require_same(rhs);
        coeffs_ += rhs.coeffs_;
        return *this;
    }
    Field2D& operator-=(const Field2D& rhs)
    {
        require_same(rhs);
        coeffs_ -= rhs.coeffs_;
        return *this;
    }
    Field2D& operator*=(double s)
    {
        coeffs_ *= s;
        return *this;
    }

    friend Field2D operator+(Field2D a, const Field2D& b) { return a += b; }
    friend Field2D operator-(Field2D a, const Field2D& b) { return a -= b; }
    friend Field2D operator*(double s, Field2D a) { return a *= s; }
    friend Field2D operator*(Field2D a, double s) { return a *= s; }

    void require_same(const Field2D& other) const
    {
        if (!same_basis(other)) {
            throw BasisMismatch("Field2D: fields live on different bases");
        }
    }

private:
    BasisPtr basis_;
    Matrix coeffs_;
};

/// Backward transform to the dealiasing grid: P C P^T.
inline NodalGrid2D synthesize(const Field2D& f)
{
    const Matrix& p = f.basis_ref().phi_table();
    return {f.basis(), p * f.coeffs() * p.transpose()};
}

/// Galerkin load b_jk = sum_{i,l} w_i w_l g(x_i, y_l) phi_j(x_i) phi_k(y_l).
///
/// With 2M nodes per direction this is exact for cubic nonlinearities of
/// V_M members, so no aliasing enters the projected nonlinear term.
inline Matrix galerkin_load(const NodalGrid2D& g)
{
    if (!g.basis) {
        throw std::invalid_argument("galerkin_load: grid has no basis");
    }
    const Basis1D& basis = *g.basis;
    if (g.values.rows() != basis.grid_size() || g.values.cols() != basis.grid_size()) {
        throw std::invalid_argument("galerkin_load: grid shape does not match basis");
    }
    if (!g.all_finite()) {
        throw NonFiniteValues("galerkin_load: non-finite nodal values");
    }
    const Matrix wp = basis.quad().weights.asDiagonal() * basis.phi_table();
    return wp.transpose() * g.values * wp;
}

/// L2 projection of a nodal grid onto V_M: solves (mass x mass) c = load.
inline Field2D analyze(const NodalGrid2D& g)
{
    const Matrix load = galerkin_load(g);
    const auto& llt = g.basis->mass_llt();
    // mass^-1 * B * mass^-1 with mass symmetric.
    Matrix tmp = llt.solve(load);
    Matrix c = llt.solve(tmp.transpose()).transpose();
    return Field2D(g.basis, std::move(c));
}

/// Spatial mean over [-1,1]^2: (f, 1) / 4. Only phi_0 and phi_2 have nonzero
/// integrals, so this touches four coefficients.
inline double mean(const Field2D& f)
{
    const Vector& s = f.basis_ref().integrals();
    return 0.25 * s.dot(f.coeffs() * s);
}

/// f minus its mean; the constant mode phi_0 phi_0 absorbs the shift.
inline Field2D remove_mean(Field2D f)
{
    f.coeffs()(0, 0) -= mean(f);
    return f;
}

/// (u, v) in L2, computed exactly from coefficients.
inline double inner(const Field2D& u, const Field2D& v)
{
    u.require_same(v);
    const Matrix& m = u.basis_ref().mass();
    return (m * u.coeffs() * m).cwiseProduct(v.coeffs()).sum();
}

/// (grad u, grad v) in L2.
inline double grad_inner(const Field2D& u, const Field2D& v)
{
    u.require_same(v);
    const Matrix& m = u.basis_ref().mass();
    const Matrix& k = u.basis_ref().stiff();
    const Matrix& c = u.coeffs();
    return (k * c * m + m * c * k).cwiseProduct(v.coeffs()).sum();
}

inline double l2_norm(const Field2D& f) { return std::sqrt(std::max(0.0, inner(f, f))); }

inline double h1_seminorm(const Field2D& f) { return std::sqrt(std::max(0.0, grad_inner(f, f))); }

namespace detail {

inline void require_zero_mean(const Field2D& v, const char* who)
{
    if (std::abs(mean(v)) > zero_mean_tolerance) {
        throw NonZeroMean(std::string(who) + ": input must have zero mean");
    }
}

} // namespace detail

/// Coefficients in the tensor eigenbasis: Z^T M C M Z.
inline Matrix to_eigen_coords(const Basis1D& basis, const Matrix& coeffs)
{
    const Matrix& t = basis.to_eigen();
    return t * coeffs * t.transpose();
}

/// Inverse of to_eigen_coords: Z C_hat Z^T.
inline Matrix from_eigen_coords(const Basis1D& basis, const Matrix& hat)
{
    const Matrix& z = basis.eig_vecs();
    return z * hat * z.transpose();
}

/// Weak Neumann inverse Laplacian on zero-mean fields:
/// (grad v1, grad w) = (v, w) for all w in V_M, with mean(v1) = 0.
inline Field2D neumann_inv_laplacian(const Field2D& v)
{
    detail::require_zero_mean(v, "neumann_inv_laplacian");
    const Basis1D& basis = v.basis_ref();
    const Vector& lam = basis.eig_vals();
    Matrix hat = to_eigen_coords(basis, v.coeffs());
    const Eigen::Index m = hat.rows();
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) {
            const double l = lam(i) + lam(j);
            hat(i, j) = l > 0.0 ? hat(i, j) / l : 0.0;
        }
    }
    // gauge: the result has zero mean
    return remove_mean(Field2D(v.basis(), from_eigen_coords(basis, hat)));
}

/// ||v||_{-1} = sqrt((v, (-Delta)^{-1} v)) for zero-mean v.
inline double h_minus1_norm(const Field2D& v)
{
    const Field2D v1 = neumann_inv_laplacian(v);
    return std::sqrt(std::max(0.0, inner(v, v1)));
}

} // namespace slcn
