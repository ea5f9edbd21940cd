#pragma once

#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ncint/linalg.hpp"
#include "ncint/words.hpp"

namespace ncint {

// A point Z = (Z_1, ..., Z_N) of the N-dimensional operator unit ball over a
// d-dimensional coefficient space: sum_k Z_k* Z_k strictly below the
// identity. Immutable after construction.
class OperatorTuple {
public:
    OperatorTuple(int n_components, Index dim_e, std::vector<CMatrix> components)
        : n_(n_components), d_(dim_e), z_(std::move(components)) {
        if (n_ < 1) throw shape_error("OperatorTuple: need at least one component");
        if (static_cast<int>(z_.size()) != n_)
            throw shape_error("OperatorTuple: component count mismatch");
        for (const CMatrix& zk : z_) {
            if (zk.rows() != d_ || zk.cols() != d_)
                throw shape_error("OperatorTuple: component is not dim_e x dim_e");
            if (!all_finite(zk)) throw invalid_input("OperatorTuple: non-finite entry");
        }
    }

    static OperatorTuple zero(int n_components, Index dim_e) {
        std::vector<CMatrix> z(static_cast<std::size_t>(n_components),
                               CMatrix::Zero(dim_e, dim_e));
        return OperatorTuple(n_components, dim_e, std::move(z));
    }

    int n() const { return n_; }
    Index dim() const { return d_; }
    const CMatrix& component(int k) const { // k in 1..N
        if (k < 1 || k > n_) throw invalid_word_error("OperatorTuple: component index out of range");
        return z_[static_cast<std::size_t>(k - 1)];
    }
    const std::vector<CMatrix>& components() const { return z_; }

private:
    int n_;
    Index d_;
    std::vector<CMatrix> z_;
};

/// |sum_k Z_k* Z_k|; strict ball membership means the value is below 1.
inline double ball_margin(const OperatorTuple& z) {
    CMatrix s = CMatrix::Zero(z.dim(), z.dim());
    for (int k = 1; k <= z.n(); ++k) s += z.component(k).adjoint() * z.component(k);
    return operator_norm(s);
}

inline void require_in_ball(const OperatorTuple& z, const char* who) {
    const double rho = ball_margin(z);
    if (!(rho < 1.0))
        throw not_in_ball_error(std::string(who) + ": point has ball margin " +
                                std::to_string(rho) + " >= 1");
}

// Z*_sigma = Z*_{i1} ... Z*_{ik}, the letter-ordered product of component
// adjoints. Note this is not the adjoint of Z_sigma.
inline CMatrix word_product(const OperatorTuple& z, const Word& sigma) {
    if (!sigma.valid_for(z.n()))
        throw invalid_word_error("word_product: word not valid for alphabet size " +
                                 std::to_string(z.n()));
    CMatrix acc = CMatrix::Identity(z.dim(), z.dim());
    for (int i = 0; i < sigma.length(); ++i) acc = acc * z.component(sigma.letter(i)).adjoint();
    return acc;
}

// Lazily filled map word -> Z*_sigma, capped by level since entries grow as
// N^k. The recursion entry(k sigma) = Z_k* entry(sigma) keeps each fill at
// one product. Owned per computation; not synchronized.
class WordProductCache {
public:
    WordProductCache(const OperatorTuple& z, int max_level)
        : z_(&z), max_level_(max_level) {
        cache_[Word{}] = CMatrix::Identity(z.dim(), z.dim());
    }

    const CMatrix& get(const Word& w) {
        if (w.length() > max_level_)
            throw depth_error("WordProductCache: level cap " + std::to_string(max_level_) +
                              " exceeded");
        auto it = cache_.find(w);
        if (it != cache_.end()) return it->second;
        auto [k, tail] = split_first(w);
        CMatrix v = z_->component(k).adjoint() * get(tail);
        return cache_.emplace(w, std::move(v)).first->second;
    }

private:
    const OperatorTuple* z_;
    int max_level_;
    std::map<Word, CMatrix> cache_;
};

// Row of word products over level k in word order:
// [Z*_sigma]_{|sigma|=k}, a d x d*N^k block row. Level k is produced from
// level k-1 by [Z_1* R_{k-1} | ... | Z_N* R_{k-1}].
inline CMatrix level_row(const OperatorTuple& z, int level) {
    const Index d = z.dim();
    CMatrix row = CMatrix::Identity(d, d);
    for (int k = 1; k <= level; ++k) {
        CMatrix next(d, row.cols() * z.n());
        for (int j = 1; j <= z.n(); ++j)
            next.middleCols((j - 1) * row.cols(), row.cols()) = z.component(j).adjoint() * row;
        row = std::move(next);
    }
    return row;
}

// Truncated row map L(Z) over levels 0..depth: [I | R_1 | ... | R_depth].
inline CMatrix l_row(const OperatorTuple& z, int depth) {
    const Index d = z.dim();
    const Index total = d * words_up_to(z.n(), depth);
    CMatrix out(d, total);
    Index off = 0;
    CMatrix row = CMatrix::Identity(d, d);
    for (int k = 0; k <= depth; ++k) {
        if (k > 0) {
            CMatrix next(d, row.cols() * z.n());
            for (int j = 1; j <= z.n(); ++j)
                next.middleCols((j - 1) * row.cols(), row.cols()) = z.component(j).adjoint() * row;
            row = std::move(next);
        }
        out.middleCols(off, row.cols()) = row;
        off += row.cols();
    }
    return out;
}

struct KernelResult {
    CMatrix value;
    int depth = 0;
    double tail_bound = 0.0;
};

constexpr int kKernelDepthCap = 64;

// Szego-type kernel K(Z, W) = sum_sigma Z*_sigma (W*_sigma)*, summed by
// levels with the recursion S_m = sum_k Z_k* S_{m-1} W_k. Level norms obey
// |S_m| <= r^m with r = sqrt(rho(Z) rho(W)), which certifies the truncation
// depth a priori: the discarded tail is at most r^(depth+1)/(1-r).
inline KernelResult szego_kernel(const OperatorTuple& z, const OperatorTuple& w, double tol,
                                 int depth_cap = kKernelDepthCap) {
    if (z.n() != w.n() || z.dim() != w.dim())
        throw shape_error("szego_kernel: incompatible points");
    require_in_ball(z, "szego_kernel");
    require_in_ball(w, "szego_kernel");
    const double r = std::sqrt(ball_margin(z) * ball_margin(w));

    int depth = 0;
    if (r > 0.0) {
        while (std::pow(r, depth + 1) / (1.0 - r) > tol) {
            ++depth;
            if (depth > depth_cap)
                throw depth_error("szego_kernel: tolerance unreachable within depth cap " +
                                  std::to_string(depth_cap));
        }
    }

    CMatrix s = CMatrix::Identity(z.dim(), z.dim());
    CMatrix acc = s;
    for (int m = 1; m <= depth; ++m) {
        CMatrix next = CMatrix::Zero(z.dim(), z.dim());
        for (int k = 1; k <= z.n(); ++k)
            next += z.component(k).adjoint() * s * w.component(k);
        s = std::move(next);
        acc += s;
    }
    const double tail = (r > 0.0) ? std::pow(r, depth + 1) / (1.0 - r) : 0.0;
    return {std::move(acc), depth, tail};
}

// The scalar closed form (I - (Z|W))^{-1} extended entrywise to operator
// points. For dim E = 1 this equals the kernel; for dim E > 1 the block
// matrix [(I - (Z_j|Z_k))^{-1}] need not be positive semidefinite, and this
// function exists exactly to expose that failure as a diagnostic.
inline CMatrix scalar_form_value(const OperatorTuple& z, const OperatorTuple& w) {
    if (z.n() != w.n() || z.dim() != w.dim())
        throw shape_error("scalar_form_value: incompatible points");
    CMatrix pairing = CMatrix::Zero(z.dim(), z.dim());
    for (int k = 1; k <= z.n(); ++k) pairing += z.component(k).adjoint() * w.component(k);
    return (CMatrix::Identity(z.dim(), z.dim()) - pairing).inverse();
}

inline CMatrix scalar_form_gram(const std::vector<OperatorTuple>& pts) {
    if (pts.empty()) return CMatrix(0, 0);
    const Index d = pts[0].dim();
    const Index n = static_cast<Index>(pts.size());
    CMatrix gram(n * d, n * d);
    for (Index j = 0; j < n; ++j)
        for (Index k = 0; k < n; ++k)
            gram.block(j * d, k * d, d, d) =
                scalar_form_value(pts[static_cast<std::size_t>(j)], pts[static_cast<std::size_t>(k)]);
    return gram;
}

struct ScalarFormCounterexample {
    bool found = false;
    std::uint64_t seed = 0;
    double min_eig = 0.0;
};

// Random search for point sets whose scalar-form Gram matrix fails to be
// PSD. Always empty-handed for dim E = 1; typically quick to succeed for
// dim E = 2.
inline ScalarFormCounterexample find_scalar_form_counterexample(std::uint64_t seed, int tries,
                                                                int n_points, int n_components,
                                                                Index dim_e, double margin) {
    for (int t = 0; t < tries; ++t) {
        Rng rng(seed + static_cast<std::uint64_t>(t));
        std::vector<OperatorTuple> pts;
        for (int p = 0; p < n_points; ++p) {
            std::vector<CMatrix> comps;
            for (int k = 0; k < n_components; ++k)
                comps.push_back(random_cmatrix(rng, dim_e, dim_e));
            OperatorTuple raw(n_components, dim_e, comps);
            const double rho = ball_margin(raw);
            const double scale = std::sqrt(margin / std::max(rho, 1e-300));
            for (CMatrix& c : comps) c *= scale;
            pts.emplace_back(n_components, dim_e, std::move(comps));
        }
        Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitize(scalar_form_gram(pts)),
                                                  Eigen::EigenvaluesOnly);
        const double min_eig = es.eigenvalues().minCoeff();
        if (min_eig < -1e-8)
            return {true, seed + static_cast<std::uint64_t>(t), min_eig};
    }
    return {false, 0, 0.0};
}

} // namespace ncint
