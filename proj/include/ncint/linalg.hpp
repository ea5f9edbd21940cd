#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "ncint/errors.hpp"
#include "ncint/rng.hpp"

namespace ncint {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Index = Eigen::Index;

inline bool all_finite(const CMatrix& m) {
    return m.allFinite();
}

inline CMatrix hermitize(const CMatrix& m) {
    return 0.5 * (m + m.adjoint());
}

/// Largest singular value. Accurate to ~1e-12 relative on desk-scale dense
/// matrices; returns 0 for empty matrices.
inline double operator_norm(const CMatrix& m) {
    if (m.rows() == 0 || m.cols() == 0) return 0.0;
    if (std::min(m.rows(), m.cols()) <= 32) {
        Eigen::JacobiSVD<CMatrix> svd(m);
        return svd.singularValues()(0);
    }
    Eigen::BDCSVD<CMatrix> svd(m);
    return svd.singularValues()(0);
}

// Dense matrix with a block grid on top. Blocks are addressed by block row
// and block column; dimensions are fixed at construction.
class BlockMatrix {
public:
    BlockMatrix() = default;

    BlockMatrix(std::vector<Index> row_dims, std::vector<Index> col_dims)
        : row_dims_(std::move(row_dims)), col_dims_(std::move(col_dims)) {
        row_offsets_.resize(row_dims_.size() + 1, 0);
        for (std::size_t i = 0; i < row_dims_.size(); ++i)
            row_offsets_[i + 1] = row_offsets_[i] + row_dims_[i];
        col_offsets_.resize(col_dims_.size() + 1, 0);
        for (std::size_t j = 0; j < col_dims_.size(); ++j)
            col_offsets_[j + 1] = col_offsets_[j] + col_dims_[j];
        dense_ = CMatrix::Zero(row_offsets_.back(), col_offsets_.back());
    }

    Index block_rows() const { return static_cast<Index>(row_dims_.size()); }
    Index block_cols() const { return static_cast<Index>(col_dims_.size()); }
    Index row_dim(Index i) const { return row_dims_[static_cast<std::size_t>(i)]; }
    Index col_dim(Index j) const { return col_dims_[static_cast<std::size_t>(j)]; }
    Index row_offset(Index i) const { return row_offsets_[static_cast<std::size_t>(i)]; }
    Index col_offset(Index j) const { return col_offsets_[static_cast<std::size_t>(j)]; }

    void set_block(Index i, Index j, const CMatrix& b) {
        if (b.rows() != row_dim(i) || b.cols() != col_dim(j))
            throw shape_error("BlockMatrix::set_block: block shape mismatch");
        dense_.block(row_offset(i), col_offset(j), row_dim(i), col_dim(j)) = b;
    }

    CMatrix block(Index i, Index j) const {
        return dense_.block(row_offset(i), col_offset(j), row_dim(i), col_dim(j));
    }

    const CMatrix& dense() const { return dense_; }
    CMatrix& dense() { return dense_; }

private:
    std::vector<Index> row_dims_, col_dims_;
    std::vector<Index> row_offsets_, col_offsets_;
    CMatrix dense_;
};

struct PsdResult {
    bool psd = false;
    double min_eig = 0.0;
};

// Positive semidefiniteness with a relative eigenvalue floor. The input is
// symmetrized first; asymmetry beyond tol*(1+|M|) is an error rather than
// silently absorbed, since matrices assembled from truncated series carry
// only O(tail) asymmetry.
inline PsdResult is_psd(const CMatrix& m, double tol) {
    if (m.rows() != m.cols()) throw shape_error("is_psd: matrix is not square");
    if (m.rows() == 0) return {true, 0.0};
    const double scale = 1.0 + operator_norm(m);
    const double asym = operator_norm(m - m.adjoint());
    if (asym > tol * scale)
        throw not_hermitian_error("is_psd: asymmetry " + std::to_string(asym) +
                                  " exceeds tolerance " + std::to_string(tol * scale));
    Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitize(m), Eigen::EigenvaluesOnly);
    const double min_eig = es.eigenvalues().minCoeff();
    return {min_eig >= -tol * scale, min_eig};
}

/// Factor a PSD matrix as M ~ L L* via eigendecomposition with a relative
/// rank cutoff. Chosen over Cholesky because the matrices factored here are
/// frequently singular (interpolation attained exactly).
inline CMatrix psd_factor(const CMatrix& m, double rank_tol) {
    if (m.rows() != m.cols()) throw shape_error("psd_factor: matrix is not square");
    const Index n = m.rows();
    if (n == 0) return CMatrix(0, 0);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitize(m));
    const Eigen::VectorXd lam = es.eigenvalues(); // ascending
    const double lam_max = std::max(0.0, lam(n - 1));
    if (lam(0) < -rank_tol * (1.0 + lam_max))
        throw not_psd_error("psd_factor: negative eigenvalue " + std::to_string(lam(0)));
    const double cutoff = rank_tol * lam_max;
    std::vector<Index> keep;
    for (Index i = n - 1; i >= 0; --i)
        if (lam(i) > cutoff) keep.push_back(i); // descending eigenvalue order
    CMatrix L(n, static_cast<Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c)
        L.col(static_cast<Index>(c)) = es.eigenvectors().col(keep[c]) * std::sqrt(lam(keep[c]));
    return L;
}

// Extend an orthonormal set q_1..q_r in C^D to an orthonormal basis. The
// complement is built by column-pivoted Gram-Schmidt over the standard basis
// (largest residual first, lowest index on ties), so the result is a
// deterministic function of the input.
inline CMatrix complete_orthonormal(const CMatrix& q) {
    const Index dim = q.rows();
    const Index r = q.cols();
    if (r > dim) throw shape_error("complete_orthonormal: more columns than rows");
    CMatrix resid = CMatrix::Identity(dim, dim);
    if (r > 0) resid -= q * (q.adjoint() * resid);
    CMatrix comp(dim, dim - r);
    for (Index c = 0; c < dim - r; ++c) {
        Index best = 0;
        double best_norm = -1.0;
        for (Index j = 0; j < dim; ++j) {
            const double nj = resid.col(j).norm();
            if (nj > best_norm + 1e-15) {
                best_norm = nj;
                best = j;
            }
        }
        CVector v = resid.col(best);
        // one re-orthogonalization pass against everything accepted so far
        if (r > 0) v -= q * (q.adjoint() * v);
        if (c > 0) v -= comp.leftCols(c) * (comp.leftCols(c).adjoint() * v);
        const double nv = v.norm();
        if (nv < 1e-10)
            throw numerical_error("complete_orthonormal: candidate basis degenerated");
        v /= nv;
        comp.col(c) = v;
        for (Index j = 0; j < dim; ++j) resid.col(j) -= v * (v.dot(resid.col(j)));
    }
    return comp;
}

struct UnitaryCompletion {
    CMatrix theta; // square unitary
    Index r1 = 0;  // zero rows appended to the domain column map
    Index r2 = 0;  // zero rows appended to the codomain column map
};

// Given two column maps with (approximately) equal Gram matrices
// Bcol* Bcol = Acol* Acol, build a square unitary theta with
// theta [Bcol; 0] = [Acol; 0], padding the shorter side by zero rows.
// The range-to-range isometry is recovered from the shared Gram
// eigenbasis; both orthonormal families are then completed
// deterministically and theta is the change of basis between them.
inline UnitaryCompletion unitary_completion(const CMatrix& bcol, const CMatrix& acol, double tol) {
    if (bcol.cols() != acol.cols())
        throw shape_error("unitary_completion: domain dimensions differ");
    const Index g = bcol.cols();
    const Index mb = bcol.rows(), ma = acol.rows();
    const Index r1 = std::max<Index>(0, ma - mb);
    const Index r2 = std::max<Index>(0, mb - ma);
    const Index dim = std::max(ma, mb);

    const CMatrix gb = bcol.adjoint() * bcol;
    const CMatrix ga = acol.adjoint() * acol;
    const double scale = 1.0 + std::max(operator_norm(gb), operator_norm(ga));
    const double mismatch = operator_norm(gb - ga);
    if (mismatch > tol * scale)
        throw gram_mismatch_error("unitary_completion: Gram mismatch " + std::to_string(mismatch) +
                                  " exceeds " + std::to_string(tol * scale));

    Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitize(0.5 * (gb + ga)));
    const Eigen::VectorXd lam = es.eigenvalues();
    const double lam_max = g > 0 ? std::max(0.0, lam(g - 1)) : 0.0;
    const double cutoff = 1e-12 * lam_max;
    std::vector<Index> keep;
    for (Index i = g - 1; i >= 0; --i)
        if (lam(i) > cutoff) keep.push_back(i);
    const Index r = static_cast<Index>(keep.size());

    CMatrix u_part(dim, r), v_part(dim, r);
    u_part.setZero();
    v_part.setZero();
    for (Index c = 0; c < r; ++c) {
        const double s = 1.0 / std::sqrt(lam(keep[static_cast<std::size_t>(c)]));
        const CVector w = es.eigenvectors().col(keep[static_cast<std::size_t>(c)]);
        u_part.col(c).head(mb) = s * (bcol * w);
        v_part.col(c).head(ma) = s * (acol * w);
    }

    CMatrix qu(dim, r), qv(dim, r);
    if (r > 0) {
        // Orthonormalize the u-side; apply the same triangular correction to
        // the v-side so the pairing survives, then polar-correct the v-side.
        Eigen::HouseholderQR<CMatrix> qr(u_part);
        CMatrix thin_q = qr.householderQ() * CMatrix::Identity(dim, r);
        CMatrix rmat = thin_q.adjoint() * u_part;
        for (Index i = 0; i < r; ++i) {
            Complex ph = rmat(i, i);
            const double a = std::abs(ph);
            ph = (a > 0) ? ph / a : Complex(1, 0);
            thin_q.col(i) *= ph;
            rmat.row(i) *= std::conj(ph);
        }
        qu = thin_q;
        // v_part R^{-1}: the v-side gets the exact change of basis the QR
        // applied to the u-side, keeping the column pairing
        const CMatrix v_prime =
            rmat.triangularView<Eigen::Upper>().solve<Eigen::OnTheRight>(v_part).eval();
        Eigen::JacobiSVD<CMatrix> pol(v_prime, Eigen::ComputeThinU | Eigen::ComputeThinV);
        qv = pol.matrixU() * pol.matrixV().adjoint();
    }

    const CMatrix cu = complete_orthonormal(qu);
    const CMatrix cv = complete_orthonormal(qv);
    CMatrix u_full(dim, dim), v_full(dim, dim);
    u_full << qu, cu;
    v_full << qv, cv;

    UnitaryCompletion out;
    out.theta = v_full * u_full.adjoint();
    out.r1 = r1;
    out.r2 = r2;
    return out;
}

inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
    CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

// Solve X - sum_k F_k X F_k* = RHS exactly through the vectorized form
// (I - sum_k conj(F_k) (x) F_k) vec X = vec RHS. Desk scale only: the
// vectorized dimension is g^2.
inline CMatrix vec_solve(const std::vector<CMatrix>& f, const CMatrix& rhs) {
    const Index g = rhs.rows();
    if (rhs.cols() != g) throw shape_error("vec_solve: RHS is not square");
    for (const CMatrix& fk : f)
        if (fk.rows() != g || fk.cols() != g)
            throw shape_error("vec_solve: coefficient shape mismatch");
    CMatrix big = CMatrix::Identity(g * g, g * g);
    for (const CMatrix& fk : f) big -= kron(fk.conjugate(), fk);

    Eigen::PartialPivLU<CMatrix> lu(big);
    const double rc = lu.rcond();
    if (!(rc > 1e-12))
        throw singular_map_error("vec_solve: displacement map conditioning " +
                                 std::to_string(1.0 / std::max(rc, 1e-300)) + " exceeds 1e12");
    const CVector x = lu.solve(CVector(Eigen::Map<const CVector>(rhs.data(), g * g)));
    CMatrix sol = Eigen::Map<const CMatrix>(x.data(), g, g);

    CMatrix resid = sol - rhs;
    for (const CMatrix& fk : f) resid -= fk * sol * fk.adjoint();
    const double rnorm = operator_norm(resid);
    if (rnorm > 1e-10 * (1.0 + operator_norm(rhs)))
        throw numerical_error("vec_solve: residual " + std::to_string(rnorm) +
                              " above certification threshold");
    return sol;
}

inline CMatrix random_cmatrix(Rng& rng, Index rows, Index cols) {
    CMatrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i)
            m(i, j) = Complex(rng.gaussian(), rng.gaussian()) / std::sqrt(2.0);
    return m;
}

} // namespace ncint
