#include <catch2/catch.hpp>

#include "ncint/displacement.hpp"
#include "ncint/generator.hpp"
#include "ncint/interpolate.hpp"
#include "ncint/points.hpp"

using namespace ncint;

namespace {

// random system scaled so the levels decay geometrically
DisplacementSystem random_system(std::uint64_t seed, Index g, int n, Index p, Index q,
                                 double row_norm = 0.8) {
    Rng rng(seed);
    DisplacementSystem sys;
    std::vector<CMatrix> f;
    CMatrix gram = CMatrix::Zero(g, g);
    for (int k = 0; k < n; ++k) {
        f.push_back(random_cmatrix(rng, g, g));
        gram += f.back() * f.back().adjoint();
    }
    const double scale = std::sqrt(row_norm / operator_norm(gram));
    for (CMatrix& fk : f) fk *= scale;
    sys.f = std::move(f);
    sys.u = 0.5 * random_cmatrix(rng, g, p);
    sys.v = 0.5 * random_cmatrix(rng, g, q);
    return sys;
}

} // namespace

TEST_CASE("solve_series elementary cases", "[displacement]") {
    SECTION("zero coefficients return the right-hand side") {
        DisplacementSystem sys = random_system(1, 4, 2, 2, 1);
        for (CMatrix& fk : sys.f) fk.setZero();
        const auto r = solve_series(sys);
        REQUIRE(operator_norm(r.a - sys.gjg()) < 1e-12);
        REQUIRE(r.depth == 0);
    }
    SECTION("scalar geometric series") {
        DisplacementSystem sys;
        sys.f = {CMatrix::Constant(1, 1, 0.5)};
        sys.u = CMatrix::Constant(1, 1, 1.0);
        sys.v = CMatrix(1, 0);
        const auto r = solve_series(sys, 1e-12);
        REQUIRE(std::abs(r.a(0, 0) - 4.0 / 3.0) < 1e-11);
    }
    SECTION("unitary coefficients are refused") {
        DisplacementSystem sys;
        CMatrix rot(2, 2);
        rot << 0.0, -1.0, 1.0, 0.0;
        sys.f = {rot};
        sys.u = CMatrix::Identity(2, 2);
        sys.v = CMatrix(2, 0);
        REQUIRE_THROWS_AS(solve_series(sys, 1e-9, 50), decay_error);
    }
}

TEST_CASE("series agrees with the kernel Gram matrix on NP data", "[displacement]") {
    Rng rng(77);
    NPProblem prob;
    prob.points = {random_point(rng, 2, 2, 0.4), random_point(rng, 2, 2, 0.3)};
    prob.targets = {CMatrix::Zero(2, 2), CMatrix::Zero(2, 2)};
    const DisplacementSystem sys = np_system(prob);
    const auto r = solve_series(sys, 1e-12);
    for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) {
            const CMatrix kk = szego_kernel(prob.points[static_cast<std::size_t>(j)],
                                            prob.points[static_cast<std::size_t>(k)], 1e-13)
                                   .value;
            REQUIRE(operator_norm(r.a.block(2 * j, 2 * k, 2, 2) - kk) < 1e-10);
        }
}

TEST_CASE("solve_exact matches solve_series", "[displacement]") {
    SECTION("zero coefficients") {
        DisplacementSystem sys = random_system(2, 3, 2, 1, 1);
        for (CMatrix& fk : sys.f) fk.setZero();
        REQUIRE(operator_norm(solve_exact(sys) - sys.gjg()) < 1e-12);
    }
    SECTION("one-point NP at the origin") {
        NPProblem prob;
        prob.points = {OperatorTuple::zero(2, 1)};
        CMatrix b(1, 1);
        b(0, 0) = 0.6;
        prob.targets = {b};
        const CMatrix a = solve_exact(np_system(prob));
        REQUIRE(std::abs(a(0, 0) - (1.0 - 0.36)) < 1e-12);
    }
    SECTION("random contractive systems, g <= 12") {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            Rng rng(4000 + seed);
            const Index g = 2 + static_cast<Index>(rng.bits() % 11);
            const int n = 1 + static_cast<int>(rng.bits() % 3);
            const DisplacementSystem sys = random_system(5000 + seed, g, n, 2, 1);
            const auto series = solve_series(sys, 1e-12);
            const CMatrix exact = solve_exact(sys);
            REQUIRE(operator_norm(series.a - exact) < 1e-8);
            REQUIRE(displacement_residual(sys, series.a) < 1e-9);
            REQUIRE(displacement_residual(sys, exact) < 1e-9);
            REQUIRE(operator_norm(series.a - series.a.adjoint()) <
                    1e-10 * (1.0 + operator_norm(series.a)));
        }
    }
    SECTION("positive solution when V is absent") {
        DisplacementSystem sys = random_system(6, 5, 2, 2, 0);
        const auto r = solve_series(sys, 1e-12);
        REQUIRE(is_psd(r.a, 1e-9).psd);
    }
}

TEST_CASE("wave_operators stack word rows", "[displacement]") {
    SECTION("depth zero") {
        const DisplacementSystem sys = random_system(7, 4, 2, 2, 1);
        const WaveOperators w = wave_operators(sys, 0);
        REQUIRE(operator_norm(w.u_inf - sys.u.adjoint()) == 0.0);
        REQUIRE(operator_norm(w.v_inf - sys.v.adjoint()) == 0.0);
    }
    SECTION("nilpotent coefficients truncate exactly") {
        DisplacementSystem sys;
        CMatrix nil = CMatrix::Zero(2, 2);
        nil(0, 1) = 1.0;
        sys.f = {nil};
        Rng rng(8);
        sys.u = random_cmatrix(rng, 2, 1);
        sys.v = random_cmatrix(rng, 2, 1);
        const WaveOperators w = wave_operators(sys, 5);
        for (Index row = 2; row < w.u_inf.rows(); ++row)
            REQUIRE(w.u_inf.row(row).norm() == 0.0);
        const CMatrix a = w.u_inf.adjoint() * w.u_inf - w.v_inf.adjoint() * w.v_inf;
        REQUIRE(operator_norm(a - solve_exact(sys)) < 1e-12);
    }
    SECTION("gram difference reconstructs the series solution") {
        const DisplacementSystem sys = random_system(9, 4, 1, 1, 1, 0.5);
        const WaveOperators w = wave_operators(sys, 40);
        const CMatrix a = w.u_inf.adjoint() * w.u_inf - w.v_inf.adjoint() * w.v_inf;
        REQUIRE(operator_norm(a - solve_series(sys, 1e-13).a) < 1e-10);
    }
    SECTION("NP data stacks the kernel rows per point") {
        Rng rng(10);
        NPProblem prob;
        prob.points = {random_point(rng, 2, 1, 0.3), random_point(rng, 2, 1, 0.4)};
        prob.targets = {CMatrix::Zero(1, 1), CMatrix::Zero(1, 1)};
        const WaveOperators w = wave_operators(np_system(prob), 3);
        for (int j = 0; j < 2; ++j) {
            const CMatrix expect = l_row(prob.points[static_cast<std::size_t>(j)], 3).adjoint();
            REQUIRE(operator_norm(w.u_inf.col(j) - expect) < 1e-13);
        }
    }
}

TEST_CASE("decay_check classifies level behavior", "[displacement]") {
    SECTION("strict-ball NP coefficients decay geometrically") {
        Rng rng(11);
        NPProblem prob;
        prob.points = {random_point(rng, 2, 2, 0.5), random_point(rng, 2, 2, 0.3)};
        prob.targets = {CMatrix::Zero(2, 2), CMatrix::Zero(2, 2)};
        const DisplacementSystem sys = np_system(prob);
        const DecayReport rep = decay_check(sys.f, 12);
        REQUIRE(rep.geometric);
        for (std::size_t m = 0; m < rep.level_norms.size(); ++m)
            REQUIRE(rep.level_norms[m] <= std::pow(0.5, static_cast<double>(m)) + 1e-12);
    }
    SECTION("unitary coefficients never decay") {
        CMatrix rot(2, 2);
        rot << 0.0, -1.0, 1.0, 0.0;
        const DecayReport rep = decay_check({rot}, 8);
        REQUIRE_FALSE(rep.geometric);
        for (double nm : rep.level_norms) REQUIRE(nm == Approx(1.0).margin(1e-12));
    }
    SECTION("zero coefficients vanish at level one") {
        const DecayReport rep = decay_check({CMatrix::Zero(3, 3)}, 4);
        REQUIRE(rep.level_norms[1] == 0.0);
        REQUIRE(rep.geometric);
    }
}
