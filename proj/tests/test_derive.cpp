#include <catch2/catch.hpp>

#include "ncint/derive.hpp"
#include "ncint/generator.hpp"

using namespace ncint;

namespace {

CMatrix m1(Complex v) {
    CMatrix m(1, 1);
    m(0, 0) = v;
    return m;
}

// brute-force derivative row: explicit dense word products, no sharing
CMatrix derivative_row_oracle(const SchurElement& t, const std::vector<CMatrix>& f, Index g) {
    const Index d = t.dim();
    CMatrix u0 = CMatrix::Zero(g, d);
    u0.topRows(d) = CMatrix::Identity(d, d);
    CMatrix acc = CMatrix::Zero(d, g);
    for (int len = 0; len <= t.degree(); ++len) {
        for (const Word& w : enumerate_words(t.n(), len)) {
            CMatrix prod = CMatrix::Identity(g, g);
            for (int i = 0; i < w.length(); ++i)
                prod = prod * f[static_cast<std::size_t>(w.letter(i) - 1)];
            acc += t.coeff(w) * (prod * u0).adjoint();
        }
    }
    return acc;
}

} // namespace

TEST_CASE("build_lowered block structure", "[derive]") {
    Rng rng(21);
    const OperatorTuple z = random_point(rng, 2, 2, 0.4);

    SECTION("order zero is the bare adjoint tuple") {
        const LoweredTuple lt = build_lowered(z, 0);
        for (int k = 1; k <= 2; ++k)
            REQUIRE(operator_norm(lt.f[static_cast<std::size_t>(k - 1)] -
                                  z.component(k).adjoint()) == 0.0);
    }
    SECTION("order one carries the coordinate injection") {
        const LoweredTuple lt = build_lowered(z, 1);
        for (int k = 1; k <= 2; ++k) {
            const CMatrix& fk = lt.f[static_cast<std::size_t>(k - 1)];
            REQUIRE(operator_norm(CMatrix(fk.block(0, 0, 2, 2)) - z.component(k).adjoint()) == 0.0);
            REQUIRE(operator_norm(CMatrix(fk.block(2, 0, 4, 2)) -
                                  coordinate_injection(2, 2, k)) == 0.0);
            REQUIRE(fk.block(0, 2, 2, 4).cwiseAbs().maxCoeff() == 0.0);
        }
    }
    SECTION("word products have the two-block lower form") {
        const LoweredTuple lt = build_lowered(z, 1);
        for (int len = 1; len <= 4; ++len) {
            for (const Word& w : enumerate_words(2, len)) {
                CMatrix prod = CMatrix::Identity(lt.g(), lt.g());
                for (int i = 0; i < w.length(); ++i)
                    prod = prod * lt.f[static_cast<std::size_t>(w.letter(i) - 1)];
                const CMatrix zs = word_product(z, w);
                REQUIRE(operator_norm(CMatrix(prod.block(0, 0, 2, 2)) - zs) < 1e-13);
                CMatrix repl = CMatrix::Zero(4, 4);
                repl.block(0, 0, 2, 2) = zs;
                repl.block(2, 2, 2, 2) = zs;
                REQUIRE(operator_norm(CMatrix(prod.block(2, 2, 4, 4)) - repl) < 1e-13);
                REQUIRE(operator_norm(CMatrix(prod.block(2, 0, 4, 2)) -
                                      p_sigma_recursion(z, w)) < 1e-12);
            }
        }
    }
}

TEST_CASE("partial derivatives specialize correctly", "[derive]") {
    SECTION("the empty word recovers point evaluation") {
        Rng rng(22);
        const OperatorTuple z = random_point(rng, 2, 2, 0.3);
        const SchurElement t = random_schur(77, 2, 2, 4, 0.9);
        REQUIRE(operator_norm(partial_derivative(t, z, Word{}, 2) - evaluate(t, z).value) <
                1e-12);
    }
    SECTION("word longer than the order is rejected") {
        const SchurElement t = random_schur(78, 2, 1, 2, 0.9);
        const OperatorTuple z = OperatorTuple::zero(2, 1);
        REQUIRE_THROWS_AS(partial_derivative(t, z, Word{1, 2}, 1), invalid_input);
    }
    SECTION("points outside the ball are rejected") {
        const SchurElement t = random_schur(79, 1, 1, 2, 0.9);
        const OperatorTuple z(1, 1, {CMatrix::Identity(1, 1)});
        REQUIRE_THROWS_AS(partial_derivative(t, z, Word{1}, 1), not_in_ball_error);
    }
    SECTION("classical scalar derivative at z = 0") {
        SchurElement t(1, 1, 3);
        t.set_coeff(Word{}, m1(0.3));
        t.set_coeff(Word{1}, m1(0.25));
        t.set_coeff(Word{1, 1}, m1(-0.125));
        t.set_coeff(Word{1, 1, 1}, m1(0.0625));
        const OperatorTuple zero = OperatorTuple::zero(1, 1);
        REQUIRE(std::abs(partial_derivative(t, zero, Word{1}, 1)(0, 0) - 0.25) < 1e-14);
    }
    SECTION("classical scalar derivative matches sum m c_m z^(m-1)") {
        SchurElement t(1, 1, 4);
        const double c[5] = {0.3, 0.25, -0.125, 0.0625, 0.02};
        Word w;
        for (int m = 0; m <= 4; ++m) {
            t.set_coeff(w, m1(c[m]));
            w = concat(1, w);
        }
        const Complex z0(0.35, -0.2);
        const OperatorTuple z(1, 1, {m1(z0)});
        Complex want = 0.0;
        for (int m = 1; m <= 4; ++m) want += static_cast<double>(m) * c[m] * std::pow(z0, m - 1);
        REQUIRE(std::abs(partial_derivative(t, z, Word{1}, 1)(0, 0) - want) < 1e-13);
    }
    SECTION("brute-force oracle at the origin and at interior points") {
        for (std::uint64_t seed = 0; seed < 6; ++seed) {
            Rng rng(2300 + seed);
            const int n = 1 + static_cast<int>(seed % 3);
            const Index d = 1 + static_cast<Index>(seed % 2);
            const int order = 1 + static_cast<int>(seed % 2);
            const OperatorTuple z =
                (seed % 2 == 0) ? OperatorTuple::zero(n, d) : random_point(rng, n, d, 0.3);
            const SchurElement t = random_schur(3100 + seed, n, d, 3, 0.9);
            const LoweredTuple lt = build_lowered(z, order);
            const CMatrix oracle = derivative_row_oracle(t, lt.f, lt.g());
            for (int len = 0; len <= order; ++len)
                for (const Word& w : enumerate_words(n, len)) {
                    const LevelIndex idx = word_index(w, n);
                    const CMatrix want = oracle.middleCols(
                        graded_offset(d, n, idx.level) + idx.offset * d, d);
                    REQUIRE(operator_norm(partial_derivative(t, z, w, order) - want) < 1e-12);
                }
        }
    }
}

TEST_CASE("total derivative paths agree", "[derive]") {
    SECTION("order zero is point evaluation") {
        Rng rng(24);
        const OperatorTuple z = random_point(rng, 2, 2, 0.4);
        const SchurElement t = random_schur(81, 2, 2, 4, 0.9);
        REQUIRE(operator_norm(total_derivative_direct(t, z, 0, 2) - evaluate(t, z).value) <
                1e-12);
        REQUIRE(operator_norm(total_derivative_mk(t, z, 0, 2) - evaluate(t, z).value) < 1e-12);
    }
    SECTION("N = 1 total equals the single partial") {
        Rng rng(25);
        const OperatorTuple z = random_point(rng, 1, 2, 0.4);
        const SchurElement t = random_schur(82, 1, 2, 4, 0.9);
        REQUIRE(operator_norm(total_derivative_direct(t, z, 2, 3) -
                              partial_derivative(t, z, Word{1, 1}, 3)) < 1e-12);
    }
    SECTION("direct sum of partials equals the bidiagonal path") {
        for (std::uint64_t seed = 0; seed < 8; ++seed) {
            Rng rng(2600 + seed);
            const int n = 1 + static_cast<int>(seed % 3);
            const Index d = 1 + static_cast<Index>(seed % 2);
            const int order = 1 + static_cast<int>(seed % 3);
            const OperatorTuple z = random_point(rng, n, d, 0.35);
            const SchurElement t = random_schur(2700 + seed, n, d, 4, 0.9);
            for (int k = 0; k <= order; ++k)
                REQUIRE(operator_norm(total_derivative_direct(t, z, k, order) -
                                      total_derivative_mk(t, z, k, order)) < 1e-9);
        }
    }
    SECTION("the zero element has zero derivatives") {
        const SchurElement t(2, 1, 3);
        const OperatorTuple z = OperatorTuple::zero(2, 1);
        REQUIRE(operator_norm(total_derivative_mk(t, z, 1, 2)) == 0.0);
    }
}

TEST_CASE("pq_check reads consistent blocks", "[derive]") {
    SECTION("single letters: P1 is the injection, Q1 the identity") {
        Rng rng(27);
        const OperatorTuple z = random_point(rng, 2, 2, 0.4);
        for (int k = 1; k <= 2; ++k) {
            const PqReport rep = pq_check(z, Word{k}, 2);
            REQUIRE(operator_norm(rep.p_blocks[1] - coordinate_injection(2, 2, k)) == 0.0);
            REQUIRE(operator_norm(rep.q_blocks[1] - CMatrix::Identity(2, 2)) == 0.0);
            REQUIRE(rep.defect < 1e-14);
        }
    }
    SECTION("all words up to length 4") {
        for (int n = 1; n <= 3; ++n) {
            Rng rng(2800 + static_cast<std::uint64_t>(n));
            const OperatorTuple z = random_point(rng, n, 2, 0.5);
            for (int l = 1; l <= 2; ++l)
                for (int len = 1; len <= 4; ++len)
                    for (const Word& w : enumerate_words(n, len))
                        REQUIRE(pq_check(z, w, l).defect <= 1e-12);
        }
    }
    SECTION("at the origin the defect vanishes exactly") {
        const OperatorTuple z = OperatorTuple::zero(2, 2);
        for (const Word& w : enumerate_words(2, 3)) REQUIRE(pq_check(z, w, 2).defect == 0.0);
    }
}

TEST_CASE("cara_feasible decides the trivial and generated cases", "[derive]") {
    SECTION("zero targets at the origin are feasible") {
        CaraProblem prob{OperatorTuple::zero(2, 1), 1, CaraVariant::total,
                         {CMatrix::Zero(1, 1), CMatrix::Zero(1, 1)}};
        const FeasibilityReport rep = cara_feasible(prob);
        REQUIRE(rep.feasible);
    }
    SECTION("generator round trip, both variants") {
        for (std::uint64_t seed = 1; seed <= 6; ++seed) {
            CaraGenConfig cfg;
            cfg.variant = (seed % 2 == 0) ? CaraVariant::partial : CaraVariant::total;
            cfg.order = 1 + static_cast<int>(seed % 2);
            cfg.n_components = 1 + static_cast<int>(seed % 2);
            cfg.dim_e = 1 + static_cast<Index>((seed / 2) % 2);
            const CaraProblem prob = make_cara_instance(seed, cfg);
            const FeasibilityReport rep = cara_feasible(prob);
            REQUIRE(rep.feasible);
            REQUIRE(rep.min_eig >= -1e-8);

            CaraProblem scaled = prob;
            for (CMatrix& b : scaled.targets) b *= 10.0;
            REQUIRE_FALSE(cara_feasible(scaled).feasible);
        }
    }
    SECTION("order 0 reduces to the one-point Pick matrix") {
        Rng rng(29);
        const OperatorTuple z = random_point(rng, 2, 2, 0.3);
        const SchurElement t = random_schur(91, 2, 2, 3, 0.9);
        const CMatrix b0 = evaluate(t, z).value;
        CaraProblem prob{z, 0, CaraVariant::partial, {b0}};
        NPProblem np;
        np.points = {z};
        np.targets = {b0};
        REQUIRE(operator_norm(cara_feasible(prob).matrix - pick_matrix(np)) < 1e-8);
    }
}

TEST_CASE("cara_synthesize interpolates prescribed derivatives", "[derive]") {
    SECTION("classical coefficient problem at the origin") {
        CaraProblem prob{OperatorTuple::zero(1, 1), 1, CaraVariant::total,
                         {m1(0.5), CMatrix::Zero(1, 1)}};
        const FeasibilityReport feas = cara_feasible(prob);
        REQUIRE(feas.feasible);
        REQUIRE(operator_norm(feas.matrix - 0.75 * CMatrix::Identity(2, 2)) < 1e-12);
        const InterpolantCertificate cert = cara_synthesize(prob, 6);
        REQUIRE(cert.point_residuals[0] <= 1e-8);
        REQUIRE(cert.point_residuals[1] <= 1e-8);
        REQUIRE(cert.norm_bound <= 1.0 + 1e-8);
    }
    SECTION("all-zero targets produce zero derivatives") {
        Rng rng(31);
        const OperatorTuple z = random_point(rng, 2, 1, 1e-3);
        CaraProblem prob{z, 1, CaraVariant::total,
                         {CMatrix::Zero(1, 1), CMatrix::Zero(1, 1)}};
        const InterpolantCertificate cert = cara_synthesize(prob, 6);
        for (double r : cert.point_residuals) REQUIRE(r <= 1e-8);
    }
    SECTION("generator round trip residuals") {
        for (std::uint64_t seed = 11; seed <= 14; ++seed) {
            CaraGenConfig cfg;
            cfg.variant = (seed % 2 == 0) ? CaraVariant::partial : CaraVariant::total;
            cfg.order = 1 + static_cast<int>(seed % 2);
            cfg.n_components = 1 + static_cast<int>(seed % 2);
            const CaraProblem prob = make_cara_instance(seed, cfg);
            const InterpolantCertificate cert = cara_synthesize(prob, 8);
            for (double r : cert.point_residuals) REQUIRE(r <= 1e-6);
            REQUIRE(cert.theta_defect <= 1e-10);
            REQUIRE(cert.norm_bound <= 1.0 + 1e-8);
        }
    }
    SECTION("infeasible targets throw") {
        CaraProblem prob{OperatorTuple::zero(1, 1), 1, CaraVariant::total,
                         {m1(2.0), CMatrix::Zero(1, 1)}};
        REQUIRE_THROWS_AS(cara_synthesize(prob, 4), infeasible_error);
    }
}
