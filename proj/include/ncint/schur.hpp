#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "ncint/linalg.hpp"
#include "ncint/points.hpp"
#include "ncint/words.hpp"

namespace ncint {

// A truncated element of the Schur-type class: a noncommutative power series
// with d x d matrix coefficients c_sigma for |sigma| <= K. The element is the
// row-0 data of an upper block triangular operator whose deeper blocks
// replicate diagonally, T_{ij} = T_{i-1,j-1} repeated N times; row 0 is a
// complete invariant, so only it is stored. Words absent from a level mean a
// zero coefficient; the element is treated as the polynomial it literally is.
class SchurElement {
public:
    SchurElement(int n_components, Index dim_e, int degree)
        : n_(n_components), d_(dim_e), degree_(degree) {
        if (n_ < 1 || d_ < 1 || degree_ < 0) throw shape_error("SchurElement: bad dimensions");
        levels_.reserve(static_cast<std::size_t>(degree_) + 1);
        for (int k = 0; k <= degree_; ++k)
            levels_.push_back(CMatrix::Zero(d_, d_ * pow_i64(n_, k)));
    }

    int n() const { return n_; }
    Index dim() const { return d_; }
    int degree() const { return degree_; }

    // Coefficient row over level k in word order: [c_sigma]_{|sigma|=k},
    // a d x d*N^k block row.
    const CMatrix& level_row(int k) const {
        if (k < 0 || k > degree_) throw depth_error("SchurElement: level out of range");
        return levels_[static_cast<std::size_t>(k)];
    }
    CMatrix& level_row(int k) {
        if (k < 0 || k > degree_) throw depth_error("SchurElement: level out of range");
        return levels_[static_cast<std::size_t>(k)];
    }

    CMatrix coeff(const Word& w) const {
        const LevelIndex idx = word_index(w, n_);
        if (idx.level > degree_) return CMatrix::Zero(d_, d_);
        return levels_[static_cast<std::size_t>(idx.level)].middleCols(idx.offset * d_, d_);
    }

    void set_coeff(const Word& w, const CMatrix& c) {
        if (c.rows() != d_ || c.cols() != d_)
            throw shape_error("SchurElement::set_coeff: coefficient is not dim_e x dim_e");
        const LevelIndex idx = word_index(w, n_);
        if (idx.level > degree_)
            throw depth_error("SchurElement::set_coeff: word longer than truncation degree");
        levels_[static_cast<std::size_t>(idx.level)].middleCols(idx.offset * d_, d_) = c;
    }

    static SchurElement constant(int n_components, const CMatrix& c0) {
        SchurElement t(n_components, c0.rows(), 0);
        t.set_coeff(Word{}, c0);
        return t;
    }

    static SchurElement identity(int n_components, Index dim_e) {
        return constant(n_components, CMatrix::Identity(dim_e, dim_e));
    }

    friend SchurElement operator*(const SchurElement& t, double s) {
        SchurElement out = t;
        for (auto& row : out.levels_) row *= s;
        return out;
    }

private:
    int n_;
    Index d_;
    int degree_;
    std::vector<CMatrix> levels_; // levels_[k] is d x d*N^k
};

// Dimension of the truncation to levels 0..m.
inline Index truncation_dim(const SchurElement& t, int m) {
    return t.dim() * words_up_to(t.n(), m);
}

// Assemble T^(m) = [T_{ij}]_{i,j=0..m} densely. Block (i,j), i <= j, is the
// level-(j-i) coefficient row replicated N^i times along the diagonal; all
// blocks below the diagonal vanish.
inline BlockMatrix assemble_truncation(const SchurElement& t, int m) {
    if (m > t.degree())
        throw depth_error("assemble_truncation: level " + std::to_string(m) +
                          " exceeds truncation degree " + std::to_string(t.degree()));
    const Index d = t.dim();
    std::vector<Index> dims;
    for (int i = 0; i <= m; ++i) dims.push_back(d * pow_i64(t.n(), i));
    BlockMatrix out(dims, dims);
    for (int i = 0; i <= m; ++i) {
        for (int j = i; j <= m; ++j) {
            const CMatrix& row = t.level_row(j - i);
            const std::int64_t copies = pow_i64(t.n(), i);
            CMatrix blk = CMatrix::Zero(out.row_dim(i), out.col_dim(j));
            for (std::int64_t c = 0; c < copies; ++c)
                blk.block(c * d, c * row.cols(), d, row.cols()) = row;
            out.set_block(i, j, blk);
        }
    }
    return out;
}

// y = T^(m) x without assembling T^(m). Row level i collects
// sum_l C_l^{(+N^i)} x_{i+l}; the replication is a reshape, not a copy.
inline CVector apply_truncation(const SchurElement& t, int m, const CVector& x) {
    const Index d = t.dim();
    const int n = t.n();
    if (x.size() != truncation_dim(t, m)) throw shape_error("apply_truncation: bad vector size");
    std::vector<Index> off(static_cast<std::size_t>(m) + 2, 0);
    for (int i = 0; i <= m; ++i)
        off[static_cast<std::size_t>(i) + 1] = off[static_cast<std::size_t>(i)] + d * pow_i64(n, i);
    CVector y = CVector::Zero(x.size());
    for (int i = 0; i <= m; ++i) {
        const Index copies = pow_i64(n, i);
        Eigen::Map<CMatrix> yi(y.data() + off[static_cast<std::size_t>(i)], d, copies);
        for (int l = 0; l + i <= m && l <= t.degree(); ++l) {
            const CMatrix& row = t.level_row(l);
            Eigen::Map<const CMatrix> xj(x.data() + off[static_cast<std::size_t>(i + l)],
                                         row.cols(), copies);
            yi.noalias() += row * xj;
        }
    }
    return y;
}

inline CVector apply_truncation_adjoint(const SchurElement& t, int m, const CVector& y) {
    const Index d = t.dim();
    const int n = t.n();
    if (y.size() != truncation_dim(t, m))
        throw shape_error("apply_truncation_adjoint: bad vector size");
    std::vector<Index> off(static_cast<std::size_t>(m) + 2, 0);
    for (int i = 0; i <= m; ++i)
        off[static_cast<std::size_t>(i) + 1] = off[static_cast<std::size_t>(i)] + d * pow_i64(n, i);
    CVector x = CVector::Zero(y.size());
    for (int i = 0; i <= m; ++i) {
        const Index copies = pow_i64(n, i);
        Eigen::Map<const CMatrix> yi(y.data() + off[static_cast<std::size_t>(i)], d, copies);
        for (int l = 0; l + i <= m && l <= t.degree(); ++l) {
            const CMatrix& row = t.level_row(l);
            Eigen::Map<CMatrix> xj(x.data() + off[static_cast<std::size_t>(i + l)], row.cols(),
                                   copies);
            xj.noalias() += row.adjoint() * yi;
        }
    }
    return x;
}

namespace detail {

// Largest singular value of the implicit truncation by power iteration on
// T* T, with a deterministic start vector. Converges from below, which keeps
// the result an honest lower bound for the operator norm.
inline double truncation_norm_power(const SchurElement& t, int m) {
    const Index dim = truncation_dim(t, m);
    Rng rng(0x5eed);
    CVector v(dim);
    for (Index i = 0; i < dim; ++i) v(i) = Complex(rng.gaussian(), rng.gaussian());
    v.normalize();
    double sigma = 0.0;
    for (int it = 0; it < 400; ++it) {
        CVector w = apply_truncation(t, m, v);
        const double s = w.norm();
        if (s == 0.0) return 0.0;
        v = apply_truncation_adjoint(t, m, w);
        const double nv = v.norm();
        if (nv == 0.0) return s;
        v /= nv;
        if (std::abs(s - sigma) <= 1e-11 * std::max(1.0, s)) return s;
        sigma = s;
    }
    return sigma;
}

} // namespace detail

constexpr Index kDenseNormCap = 700;

// Operator norm of T^(m). This bounds the norm of the full element from
// below and is nondecreasing in m. Small truncations go through a dense SVD;
// large ones through the implicit power iteration.
inline double norm_lower_bound(const SchurElement& t, int m) {
    if (m > t.degree())
        throw depth_error("norm_lower_bound: level exceeds truncation degree");
    if (truncation_dim(t, m) <= kDenseNormCap)
        return operator_norm(assemble_truncation(t, m).dense());
    return detail::truncation_norm_power(t, m);
}

struct EvaluationResult {
    CMatrix value;
    int depth = 0;       // coefficient levels that entered the sum
    double tail_bound = 0.0; // kernel-tail bound on the levels beyond, per unit coefficient norm
};

// Point evaluation T(Z) = sum_{|sigma|<=K} c_sigma (Z*_sigma)*. The sum is a
// finite level contraction of coefficient rows against word-product rows.
// The reported tail bound covers the coefficient levels beyond K under a
// unit norm assumption on the full element: sum_{k>K} rho^(k/2); for the
// polynomial the element literally is, the value is exact.
inline EvaluationResult evaluate(const SchurElement& t, const OperatorTuple& z, double /*tol*/ = 0.0) {
    if (t.n() != z.n() || t.dim() != z.dim())
        throw shape_error("evaluate: element and point have different shape");
    require_in_ball(z, "evaluate");
    const double rho = ball_margin(z);
    const Index d = t.dim();
    CMatrix acc = CMatrix::Zero(d, d);
    CMatrix zrow = CMatrix::Identity(d, d);
    for (int k = 0; k <= t.degree(); ++k) {
        if (k > 0) {
            CMatrix next(d, zrow.cols() * z.n());
            for (int j = 1; j <= z.n(); ++j)
                next.middleCols((j - 1) * zrow.cols(), zrow.cols()) =
                    z.component(j).adjoint() * zrow;
            zrow = std::move(next);
        }
        acc += t.level_row(k) * zrow.adjoint();
    }
    const double sr = std::sqrt(rho);
    const double tail = (sr > 0.0 && sr < 1.0)
                            ? std::pow(sr, t.degree() + 1) / (1.0 - sr)
                            : 0.0;
    return {std::move(acc), t.degree(), tail};
}

// Free-monoid convolution: (T S)_sigma = sum over splits sigma = alpha tau
// of t_alpha s_tau, matching block multiplication of the assembled
// truncations on row 0. Exact for polynomials, so the result degree is the
// sum of the input degrees.
inline SchurElement multiply(const SchurElement& t, const SchurElement& s) {
    if (t.n() != s.n() || t.dim() != s.dim())
        throw shape_error("multiply: incompatible elements");
    const int n = t.n();
    const Index d = t.dim();
    SchurElement out(n, d, t.degree() + s.degree());
    for (int len = 0; len <= out.degree(); ++len) {
        CMatrix& row = out.level_row(len);
        for (int i = std::max(0, len - s.degree()); i <= std::min(len, t.degree()); ++i) {
            const CMatrix& trow = t.level_row(i);
            const CMatrix& srow = s.level_row(len - i);
            const std::int64_t suffix_count = pow_i64(n, len - i);
            for (std::int64_t o = 0; o < pow_i64(n, len); ++o) {
                const std::int64_t oa = o / suffix_count;
                const std::int64_t ot = o % suffix_count;
                row.middleCols(o * d, d) +=
                    trow.middleCols(oa * d, d) * srow.middleCols(ot * d, d);
            }
        }
    }
    return out;
}

// Seeded random element with norm at most margin. Level k of the draw is
// normalized to operator norm margin * gamma^k / sum_j gamma^j, so the level
// sums telescope to exactly margin; since the norm of a single-level part
// equals its row norm, the triangle inequality certifies |T| <= margin for
// the full (not just truncated) operator.
inline SchurElement random_schur(std::uint64_t seed, int n_components, Index dim_e, int degree,
                                 double margin) {
    if (!(margin > 0.0 && margin < 1.0))
        throw invalid_input("random_schur: margin must lie in (0,1)");
    const double gamma = 0.5;
    double denom = 0.0;
    for (int k = 0; k <= degree; ++k) denom += std::pow(gamma, k);
    Rng rng(seed);
    SchurElement out(n_components, dim_e, degree);
    for (int k = 0; k <= degree; ++k) {
        CMatrix row = random_cmatrix(rng, dim_e, dim_e * pow_i64(n_components, k));
        const double nrm = operator_norm(row);
        const double target = margin * std::pow(gamma, k) / denom;
        out.level_row(k) = (nrm > 1e-300) ? CMatrix(row * (target / nrm))
                                          : CMatrix::Zero(dim_e, dim_e * pow_i64(n_components, k));
    }
    return out;
}

// Defect of the point-evaluation identity T L(Z)* = diag[T(Z)] L(Z)* on the
// rows where the truncated product is complete, i.e. levels i <= m - K. For
// a polynomial element those rows agree exactly, up to roundoff.
inline double evaluation_identity_defect(const SchurElement& t, const OperatorTuple& z, int m) {
    if (m < t.degree()) throw depth_error("evaluation_identity_defect: m below degree");
    const Index d = t.dim();
    const CMatrix lcol = l_row(z, m).adjoint(); // stacked (Z*_sigma)* blocks, levels 0..m
    CMatrix prod(lcol.rows(), d);
    for (Index c = 0; c < d; ++c) prod.col(c) = apply_truncation(t, m, lcol.col(c));
    const CMatrix tz = evaluate(t, z).value;
    double defect = 0.0;
    Index off = 0;
    for (int i = 0; i + t.degree() <= m; ++i) {
        const Index rows = d * pow_i64(t.n(), i);
        CMatrix expect(rows, d);
        for (Index c = 0; c < rows / d; ++c)
            expect.middleRows(c * d, d) = tz * lcol.block(off + c * d, 0, d, d);
        defect = std::max(defect, operator_norm(prod.middleRows(off, rows) - expect));
        off += rows;
    }
    return defect;
}

} // namespace ncint
