#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "ncint/derive.hpp"
#include "ncint/interpolate.hpp"
#include "ncint/points.hpp"
#include "ncint/rng.hpp"
#include "ncint/schur.hpp"

namespace ncint {

// Random point with ball margin exactly rho. rho = 0 gives the origin.
inline OperatorTuple random_point(Rng& rng, int n_components, Index dim_e, double rho) {
    if (!(rho >= 0.0 && rho < 1.0)) throw invalid_input("random_point: rho must lie in [0,1)");
    std::vector<CMatrix> comps;
    for (int k = 0; k < n_components; ++k) comps.push_back(random_cmatrix(rng, dim_e, dim_e));
    OperatorTuple raw(n_components, dim_e, comps);
    const double r0 = ball_margin(raw);
    const double scale = (rho > 0.0 && r0 > 1e-300) ? std::sqrt(rho / r0) : 0.0;
    for (CMatrix& c : comps) c *= scale;
    return OperatorTuple(n_components, dim_e, std::move(comps));
}

// Feasible-by-construction NP instance: targets are the values of a random
// contractive element at random interior points. The default point margin is
// small enough that a degree-8 synthesis clears its residual tolerance with
// room to spare.
struct NPGenConfig {
    int n_points = 2;
    int n_components = 2;
    Index dim_e = 1;
    double margin = 0.9;        // norm bound of the generating element
    double point_margin = 0.02; // ball margin of every point
    int degree = 6;             // coefficient degree of the generating element
};

inline NPProblem make_np_instance(std::uint64_t seed, const NPGenConfig& cfg = {}) {
    Rng rng(seed * 0x9e3779b97f4a7c15ULL + 1);
    NPProblem prob;
    for (int j = 0; j < cfg.n_points; ++j) {
        for (int tries = 0;; ++tries) {
            OperatorTuple cand = random_point(rng, cfg.n_components, cfg.dim_e, cfg.point_margin);
            bool distinct = true;
            for (const OperatorTuple& other : prob.points) {
                double diff = 0.0;
                for (int c = 1; c <= cfg.n_components; ++c)
                    diff = std::max(diff,
                                    (cand.component(c) - other.component(c)).cwiseAbs().maxCoeff());
                if (diff <= 1e-6 * std::sqrt(cfg.point_margin + 1e-30)) distinct = false;
            }
            if (distinct || tries > 64) {
                prob.points.push_back(std::move(cand));
                break;
            }
        }
    }
    const SchurElement t =
        random_schur(seed * 0x9e3779b97f4a7c15ULL + 2, cfg.n_components, cfg.dim_e, cfg.degree,
                     cfg.margin);
    for (const OperatorTuple& z : prob.points)
        prob.targets.push_back(evaluate(t, z).value);
    return prob;
}

// Feasible-by-construction Carathéodory instance: targets are the actual
// derivative values of a random contractive element at a random point. The
// generating element is redrawn (deterministically) until its value at the
// point has norm at least 0.3, so that scaling the targets by 10 provably
// breaks feasibility.
struct CaraGenConfig {
    CaraVariant variant = CaraVariant::total;
    int order = 2;
    int n_components = 2;
    Index dim_e = 1;
    double margin = 0.9;
    double point_margin = 5e-4;
    int degree = 6;
};

inline CaraProblem make_cara_instance(std::uint64_t seed, const CaraGenConfig& cfg = {}) {
    Rng rng(seed * 0x9e3779b97f4a7c15ULL + 3);
    CaraProblem prob{random_point(rng, cfg.n_components, cfg.dim_e, cfg.point_margin),
                     cfg.order, cfg.variant, {}};

    for (std::uint64_t redraw = 0; redraw < 64; ++redraw) {
        const SchurElement t = random_schur(seed * 0x9e3779b97f4a7c15ULL + 4 + redraw,
                                            cfg.n_components, cfg.dim_e, cfg.degree, cfg.margin);
        if (operator_norm(evaluate(t, prob.z).value) < 0.3 && redraw < 63) continue;

        prob.targets.clear();
        const Index d = prob.z.dim();
        if (cfg.variant == CaraVariant::partial) {
            const LoweredTuple lt = build_lowered(prob.z, cfg.order);
            const CMatrix row = detail::derivative_row(t, lt.f, lt.g());
            for (int k = 0; k <= cfg.order; ++k)
                prob.targets.push_back(row.middleCols(graded_offset(d, prob.z.n(), k),
                                                      d * pow_i64(prob.z.n(), k)));
        } else {
            for (int k = 0; k <= cfg.order; ++k)
                prob.targets.push_back(total_derivative_direct(t, prob.z, k, cfg.order));
        }
        break;
    }
    return prob;
}

} // namespace ncint
