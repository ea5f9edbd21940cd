#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ncint/displacement.hpp"
#include "ncint/interpolate.hpp"
#include "ncint/linalg.hpp"
#include "ncint/points.hpp"
#include "ncint/schur.hpp"
#include "ncint/settings.hpp"
#include "ncint/words.hpp"

namespace ncint {

// Canonical isometric injection of E into the k-th coordinate of E^(+N):
// a dN x d column of zeros with the identity in block row k-1.
inline CMatrix coordinate_injection(Index d, int n, int k) {
    CMatrix e = CMatrix::Zero(d * n, d);
    e.block((k - 1) * d, 0, d, d) = CMatrix::Identity(d, d);
    return e;
}

// Block layout of the graded space E_0 (+) ... (+) E_l with E_m = E^(+N^m):
// level m starts at d * (1 + N + ... + N^(m-1)).
inline Index graded_dim(Index d, int n, int order) { return d * words_up_to(n, order); }
inline Index graded_offset(Index d, int n, int level) {
    return level == 0 ? 0 : d * words_up_to(n, level - 1);
}

// The lowered tuple of order l: block lower bidiagonal operators on the
// graded space, with (Z_k*)^(+N^j) on the diagonal and the replicated
// injection E_k^(+N^j) on the first subdiagonal. Words in these operators
// accumulate the derivative data of the base point in their first block
// column.
struct LoweredTuple {
    int order = 0;
    int n = 0;
    Index d = 0;
    std::vector<CMatrix> f; // dense F_k^(l), k = 1..N

    Index g() const { return graded_dim(d, n, order); }
};

inline LoweredTuple build_lowered(const OperatorTuple& z, int order) {
    if (order < 0) throw invalid_input("build_lowered: negative order");
    require_in_ball(z, "build_lowered");
    LoweredTuple out;
    out.order = order;
    out.n = z.n();
    out.d = z.dim();
    const Index g = out.g();
    for (int k = 1; k <= z.n(); ++k) {
        CMatrix fk = CMatrix::Zero(g, g);
        const CMatrix zk = z.component(k).adjoint();
        const CMatrix ek = coordinate_injection(out.d, out.n, k);
        for (int j = 0; j <= order; ++j) {
            const std::int64_t copies = pow_i64(out.n, j);
            const Index ro = graded_offset(out.d, out.n, j);
            for (std::int64_t c = 0; c < copies; ++c)
                fk.block(ro + c * out.d, ro + c * out.d, out.d, out.d) = zk;
            if (j + 1 <= order) {
                const Index so = graded_offset(out.d, out.n, j + 1);
                for (std::int64_t c = 0; c < copies; ++c)
                    fk.block(so + c * out.d * out.n, ro + c * out.d, out.d * out.n, out.d) = ek;
            }
        }
        out.f.push_back(std::move(fk));
    }
    return out;
}

// The total-derivative tuple of order l: bidiagonal on E^(l+1) with Z_k* on
// the diagonal and the identity on the first subdiagonal.
struct TotalTuple {
    int order = 0;
    int n = 0;
    Index d = 0;
    std::vector<CMatrix> f; // dense TF_k^(l)

    Index g() const { return d * (order + 1); }
};

inline TotalTuple build_total(const OperatorTuple& z, int order) {
    if (order < 0) throw invalid_input("build_total: negative order");
    require_in_ball(z, "build_total");
    TotalTuple out;
    out.order = order;
    out.n = z.n();
    out.d = z.dim();
    const Index g = out.g();
    for (int k = 1; k <= z.n(); ++k) {
        CMatrix fk = CMatrix::Zero(g, g);
        const CMatrix zk = z.component(k).adjoint();
        for (int j = 0; j <= order; ++j) {
            fk.block(j * out.d, j * out.d, out.d, out.d) = zk;
            if (j + 1 <= order)
                fk.block((j + 1) * out.d, j * out.d, out.d, out.d) =
                    CMatrix::Identity(out.d, out.d);
        }
        out.f.push_back(std::move(fk));
    }
    return out;
}

// P_sigma of the order-1 remark: P_k = E_k and
// P_{k tau} = E_k Z*_tau + (Z_k*)^(+N) P_tau.
inline CMatrix p_sigma_recursion(const OperatorTuple& z, const Word& sigma) {
    if (sigma.empty()) throw invalid_word_error("p_sigma_recursion: empty word");
    const Index d = z.dim();
    const int n = z.n();
    auto [k, tail] = split_first(sigma);
    if (tail.empty()) return coordinate_injection(d, n, k);
    const CMatrix p_tail = p_sigma_recursion(z, tail);
    CMatrix repl = CMatrix::Zero(d * n, d * n);
    for (int c = 0; c < n; ++c)
        repl.block(c * d, c * d, d, d) = z.component(k).adjoint();
    return coordinate_injection(d, n, k) * word_product(z, tail) + repl * p_tail;
}

namespace detail {

// sum_tau c_tau (F_tau U)* over all coefficient words of T, where U injects
// E into the level-0 block. Depth-first over the word tree; prepending a
// letter multiplies the running column by one more F.
inline CMatrix derivative_row(const SchurElement& t, const std::vector<CMatrix>& f, Index g) {
    const Index d = t.dim();
    const int n = t.n();
    CMatrix acc = CMatrix::Zero(d, g);
    CMatrix u0 = CMatrix::Zero(g, d);
    u0.topRows(d) = CMatrix::Identity(d, d);

    std::function<void(const CMatrix&, int, std::int64_t)> visit =
        [&](const CMatrix& col, int level, std::int64_t offset) {
            acc.noalias() +=
                t.level_row(level).middleCols(offset * d, d) * col.adjoint();
            if (level == t.degree()) return;
            const std::int64_t stride = pow_i64(n, level);
            for (int k = 0; k < n; ++k)
                visit(f[static_cast<std::size_t>(k)] * col, level + 1,
                      static_cast<std::int64_t>(k) * stride + offset);
        };
    visit(u0, 0, 0);
    return acc;
}

} // namespace detail

// Partial derivative D_sigma T_Z: the sigma-indexed column block of the
// derivative row built from the lowered tuple. D_empty is T(Z) itself.
inline CMatrix partial_derivative(const SchurElement& t, const OperatorTuple& z, const Word& sigma,
                                  int order, double /*tol*/ = 0.0) {
    if (t.n() != z.n() || t.dim() != z.dim())
        throw shape_error("partial_derivative: element and point shapes differ");
    if (sigma.length() > order)
        throw invalid_input("partial_derivative: word length " + std::to_string(sigma.length()) +
                            " exceeds order " + std::to_string(order));
    if (!sigma.valid_for(z.n())) throw invalid_word_error("partial_derivative: bad word");
    const LoweredTuple lt = build_lowered(z, order);
    const CMatrix row = detail::derivative_row(t, lt.f, lt.g());
    const LevelIndex idx = word_index(sigma, z.n());
    return row.middleCols(graded_offset(z.dim(), z.n(), idx.level) + idx.offset * z.dim(),
                          z.dim());
}

// Total derivative by the defining sum over all words of length k.
inline CMatrix total_derivative_direct(const SchurElement& t, const OperatorTuple& z, int k,
                                       int order, double /*tol*/ = 0.0) {
    if (k > order) throw invalid_input("total_derivative_direct: k exceeds order");
    const LoweredTuple lt = build_lowered(z, order);
    const CMatrix row = detail::derivative_row(t, lt.f, lt.g());
    const Index d = z.dim();
    CMatrix acc = CMatrix::Zero(d, d);
    const Index base = graded_offset(d, z.n(), k);
    for (std::int64_t o = 0; o < pow_i64(z.n(), k); ++o)
        acc += row.middleCols(base + o * d, d);
    return acc;
}

// Total derivative through the bidiagonal tuple: the level-k column block of
// the derivative row built from TF^(l). Must agree with the direct sum of
// partials; the agreement is the computable form of the block-summation
// identity between the two tuples.
inline CMatrix total_derivative_mk(const SchurElement& t, const OperatorTuple& z, int k, int order,
                                   double /*tol*/ = 0.0) {
    if (k > order) throw invalid_input("total_derivative_mk: k exceeds order");
    if (t.n() != z.n() || t.dim() != z.dim())
        throw shape_error("total_derivative_mk: element and point shapes differ");
    const TotalTuple tt = build_total(z, order);
    const CMatrix row = detail::derivative_row(t, tt.f, tt.g());
    return row.middleCols(static_cast<Index>(k) * z.dim(), z.dim());
}

struct PqReport {
    std::vector<CMatrix> p_blocks; // P_j(sigma), j = 0..l, each d*N^j x d
    std::vector<CMatrix> q_blocks; // Q_j(sigma), j = 0..l, each d x d
    double defect = 0.0;           // max_j |sum_s P_j^s(sigma) - Q_j(sigma)|
};

// Reads P_j off the first block column of the product F_sigma^(l) and Q_j
// off the first block column of TF_sigma^(l), then checks that the P-block
// entries of each level sum to Q. Diagnostic only; the expected defect is
// roundoff.
inline PqReport pq_check(const OperatorTuple& z, const Word& sigma, int order) {
    if (sigma.empty()) throw invalid_word_error("pq_check: empty word");
    if (!sigma.valid_for(z.n())) throw invalid_word_error("pq_check: bad word");
    const LoweredTuple lt = build_lowered(z, order);
    const TotalTuple tt = build_total(z, order);
    const Index d = z.dim();

    CMatrix fprod = CMatrix::Identity(lt.g(), lt.g());
    CMatrix tprod = CMatrix::Identity(tt.g(), tt.g());
    for (int i = 0; i < sigma.length(); ++i) {
        fprod = fprod * lt.f[static_cast<std::size_t>(sigma.letter(i) - 1)];
        tprod = tprod * tt.f[static_cast<std::size_t>(sigma.letter(i) - 1)];
    }

    PqReport rep;
    for (int j = 0; j <= order; ++j) {
        const Index rows = d * pow_i64(z.n(), j);
        rep.p_blocks.push_back(fprod.block(graded_offset(d, z.n(), j), 0, rows, d));
        rep.q_blocks.push_back(tprod.block(static_cast<Index>(j) * d, 0, d, d));
        CMatrix psum = CMatrix::Zero(d, d);
        for (Index s = 0; s < rows / d; ++s)
            psum += rep.p_blocks.back().middleRows(s * d, d);
        rep.defect = std::max(rep.defect, operator_norm(psum - rep.q_blocks.back()));
    }
    return rep;
}

enum class CaraVariant { partial, total };

// Carathéodory data at a single point: prescribed derivative values up to
// order l. The partial variant prescribes the whole level rows
// [D_sigma T_Z]_{|sigma|=k}; the total variant prescribes the level sums.
struct CaraProblem {
    OperatorTuple z;
    int order = 0;
    CaraVariant variant = CaraVariant::total;
    std::vector<CMatrix> targets; // index k = 0..order

    void validate() const {
        require_in_ball(z, "CaraProblem");
        if (order < 0) throw invalid_input("CaraProblem: negative order");
        if (static_cast<int>(targets.size()) != order + 1)
            throw shape_error("CaraProblem: expected " + std::to_string(order + 1) + " targets");
        const Index d = z.dim();
        for (int k = 0; k <= order; ++k) {
            const CMatrix& b = targets[static_cast<std::size_t>(k)];
            const Index want_cols = variant == CaraVariant::partial ? d * pow_i64(z.n(), k) : d;
            if (b.rows() != d || b.cols() != want_cols)
                throw shape_error("CaraProblem: target " + std::to_string(k) +
                                  " has wrong shape");
            if (!all_finite(b)) throw invalid_input("CaraProblem: non-finite target entry");
        }
    }
};

// Displacement encoding: the tuple of the chosen variant, U injecting E into
// the first block, and V adjoining all targets (the order-0 value included;
// the graded dimension forces exactly order+1 blocks).
inline DisplacementSystem cara_system(const CaraProblem& prob) {
    prob.validate();
    const Index d = prob.z.dim();
    DisplacementSystem sys;
    Index g = 0;
    if (prob.variant == CaraVariant::partial) {
        LoweredTuple lt = build_lowered(prob.z, prob.order);
        g = lt.g();
        sys.f = std::move(lt.f);
    } else {
        TotalTuple tt = build_total(prob.z, prob.order);
        g = tt.g();
        sys.f = std::move(tt.f);
    }
    sys.u = CMatrix::Zero(g, d);
    sys.u.topRows(d) = CMatrix::Identity(d, d);
    sys.v = CMatrix::Zero(g, d);
    Index row = 0;
    for (int k = 0; k <= prob.order; ++k) {
        const CMatrix adj = prob.targets[static_cast<std::size_t>(k)].adjoint();
        sys.v.middleRows(row, adj.rows()) = adj;
        row += adj.rows();
    }
    return sys;
}

namespace detail {

// Solve the displacement system by the series, falling back to the exact
// vectorized solve when decay is not established; cross-check the two paths
// whenever the exact solve is within desk scale.
inline CMatrix solve_both_paths(const DisplacementSystem& sys, const Settings& cfg) {
    const bool exact_ok = sys.g() <= kVecSolveDimCap;
    CMatrix a;
    bool have_series = false;
    try {
        a = solve_series(sys, cfg.tol_series, cfg.depth_cap).a;
        have_series = true;
    } catch (const numerical_error&) {
        if (!exact_ok) throw;
        a = solve_exact(sys);
    }
    if (have_series && exact_ok) {
        const CMatrix b = solve_exact(sys);
        const double gap = operator_norm(a - b);
        if (gap > 1e-8 * (1.0 + operator_norm(b)))
            throw crosscheck_error("cara: series and exact solves disagree by " +
                                   std::to_string(gap));
        a = b;
    }
    return a;
}

} // namespace detail

inline FeasibilityReport cara_feasible(const CaraProblem& prob, const Settings& cfg = {}) {
    const DisplacementSystem sys = cara_system(prob);
    const CMatrix a = detail::solve_both_paths(sys, cfg);
    const PsdResult r = is_psd(a, cfg.tol_psd);
    return {r.psd, a, r.min_eig};
}

// Constructive solution of the Carathéodory problem: the same unitary
// completion pipeline run on the variant's displacement system. Residuals
// compare the synthesized element's recomputed derivatives against the
// prescribed targets, per order k.
inline InterpolantCertificate cara_synthesize(const CaraProblem& prob, int k_out = 8,
                                              const Settings& cfg = {}) {
    const FeasibilityReport feas = cara_feasible(prob, cfg);
    if (!feas.feasible)
        throw infeasible_error("cara_synthesize: displacement solution has min eigenvalue " +
                               std::to_string(feas.min_eig));
    const DisplacementSystem sys = cara_system(prob);
    detail::SynthesisCore core = detail::synthesize_from_system(
        sys, feas.matrix, k_out, std::max(1e-10, cfg.tol_psd), 1e-6);

    InterpolantCertificate cert{std::move(core.t)};
    cert.theta_defect = core.theta_defect;
    cert.intertwine_defect = core.intertwine_defect;
    cert.factor_rank = core.factor_rank;

    const Index d = prob.z.dim();
    if (prob.variant == CaraVariant::partial) {
        const LoweredTuple lt = build_lowered(prob.z, prob.order);
        const CMatrix row = detail::derivative_row(cert.t, lt.f, lt.g());
        for (int k = 0; k <= prob.order; ++k) {
            const Index base = graded_offset(d, prob.z.n(), k);
            const Index cols = d * pow_i64(prob.z.n(), k);
            cert.point_residuals.push_back(operator_norm(
                row.middleCols(base, cols) - prob.targets[static_cast<std::size_t>(k)]));
        }
    } else {
        for (int k = 0; k <= prob.order; ++k)
            cert.point_residuals.push_back(
                operator_norm(total_derivative_direct(cert.t, prob.z, k, prob.order) -
                              prob.targets[static_cast<std::size_t>(k)]));
    }
    cert.norm_level = detail::capped_norm_level(cert.t, k_out);
    cert.norm_bound = norm_lower_bound(cert.t, cert.norm_level);
    cert.wave_residual = detail::wave_residual(sys, cert.t);
    return cert;
}

} // namespace ncint
