#include <catch2/catch.hpp>

#include "ncint/generator.hpp"
#include "ncint/schur.hpp"

using namespace ncint;

namespace {

CMatrix m1(Complex v) {
    CMatrix m(1, 1);
    m(0, 0) = v;
    return m;
}

} // namespace

TEST_CASE("assemble_truncation follows the replication rule", "[schur]") {
    SECTION("N=2, m=1 layout") {
        SchurElement t(2, 1, 1);
        t.set_coeff(Word{}, m1(1.0));
        t.set_coeff(Word{1}, m1(2.0));
        t.set_coeff(Word{2}, m1(3.0));
        const BlockMatrix b = assemble_truncation(t, 1);
        CMatrix want(3, 3);
        want << 1.0, 2.0, 3.0, //
            0.0, 1.0, 0.0,     //
            0.0, 0.0, 1.0;
        REQUIRE(operator_norm(b.dense() - want) < 1e-15);
    }
    SECTION("m=0 is the constant block") {
        SchurElement t(3, 2, 2);
        Rng rng(1);
        const CMatrix c0 = random_cmatrix(rng, 2, 2);
        t.set_coeff(Word{}, c0);
        REQUIRE(operator_norm(assemble_truncation(t, 0).dense() - c0) == 0.0);
    }
    SECTION("zero element assembles to zero") {
        SchurElement t(2, 2, 3);
        REQUIRE(assemble_truncation(t, 3).dense().cwiseAbs().maxCoeff() == 0.0);
    }
    SECTION("exceeding the stored degree throws") {
        SchurElement t(2, 1, 1);
        REQUIRE_THROWS_AS(assemble_truncation(t, 2), depth_error);
    }
    SECTION("T_{ij} equals T_{i-1,j-1} replicated") {
        const SchurElement t = random_schur(17, 2, 2, 3, 0.9);
        const BlockMatrix b = assemble_truncation(t, 3);
        for (Index i = 1; i <= 3; ++i)
            for (Index j = i; j <= 3; ++j) {
                const CMatrix prev = b.block(i - 1, j - 1);
                const CMatrix cur = b.block(i, j);
                for (int c = 0; c < 2; ++c)
                    REQUIRE(operator_norm(cur.block(c * prev.rows(), c * prev.cols(),
                                                    prev.rows(), prev.cols()) -
                                          prev) == 0.0);
            }
    }
}

TEST_CASE("norm_lower_bound matches known norms and is monotone", "[schur]") {
    SECTION("constant element") {
        SchurElement t = SchurElement::constant(2, 0.5 * CMatrix::Identity(2, 2));
        REQUIRE(norm_lower_bound(t, 0) == Approx(0.5).margin(1e-12));
    }
    SECTION("single-letter shift has norm one") {
        SchurElement t(1, 1, 3);
        t.set_coeff(Word{1}, m1(1.0));
        for (int m = 1; m <= 3; ++m)
            REQUIRE(norm_lower_bound(t, m) == Approx(1.0).margin(1e-12));
    }
    SECTION("zero element") {
        SchurElement t(2, 1, 2);
        REQUIRE(norm_lower_bound(t, 2) == 0.0);
    }
    SECTION("monotone in the truncation level") {
        const SchurElement t = random_schur(23, 2, 2, 4, 0.9);
        double prev = 0.0;
        for (int m = 0; m <= 4; ++m) {
            const double cur = norm_lower_bound(t, m);
            REQUIRE(cur >= prev - 1e-12);
            prev = cur;
        }
    }
    SECTION("power iteration path agrees with the dense path") {
        const SchurElement t = random_schur(31, 2, 1, 5, 0.9);
        const double dense = operator_norm(assemble_truncation(t, 5).dense());
        const double power = detail::truncation_norm_power(t, 5);
        REQUIRE(power == Approx(dense).epsilon(1e-7));
        REQUIRE(power <= dense + 1e-12);
    }
    SECTION("implicit apply matches the dense product") {
        const SchurElement t = random_schur(37, 3, 2, 3, 0.9);
        const CMatrix dense = assemble_truncation(t, 3).dense();
        Rng rng(2);
        const CVector x = random_cmatrix(rng, dense.cols(), 1).col(0);
        REQUIRE((apply_truncation(t, 3, x) - dense * x).norm() < 1e-12);
        REQUIRE((apply_truncation_adjoint(t, 3, x) - dense.adjoint() * x).norm() < 1e-12);
    }
}

TEST_CASE("evaluate contracts coefficients against word products", "[schur]") {
    SECTION("constant element evaluates to its constant") {
        Rng rng(3);
        const CMatrix c = random_cmatrix(rng, 2, 2);
        const SchurElement t = SchurElement::constant(2, c);
        const OperatorTuple z = random_point(rng, 2, 2, 0.5);
        REQUIRE(operator_norm(evaluate(t, z).value - c) < 1e-14);
    }
    SECTION("single coefficient picks one word product") {
        SchurElement t(2, 1, 1);
        t.set_coeff(Word{2}, m1(1.0));
        std::vector<CMatrix> comps{m1(0.3), m1(0.4)};
        const OperatorTuple z(2, 1, comps);
        REQUIRE(std::abs(evaluate(t, z).value(0, 0) - 0.4) < 1e-15);
    }
    SECTION("evaluation at the origin keeps only the constant") {
        const SchurElement t = random_schur(41, 2, 2, 3, 0.9);
        const OperatorTuple z = OperatorTuple::zero(2, 2);
        REQUIRE(operator_norm(evaluate(t, z).value - t.coeff(Word{})) < 1e-15);
    }
    SECTION("out-of-ball points are rejected") {
        const SchurElement t = random_schur(43, 1, 1, 2, 0.9);
        std::vector<CMatrix> comps{m1(1.2)};
        REQUIRE_THROWS_AS(evaluate(t, OperatorTuple(1, 1, comps)), not_in_ball_error);
    }
}

TEST_CASE("multiply is the free-monoid convolution", "[schur]") {
    SECTION("identity element is neutral") {
        const SchurElement t = random_schur(47, 2, 2, 2, 0.9);
        const SchurElement e = SchurElement::identity(2, 2);
        const SchurElement p = multiply(t, e);
        for (int k = 0; k <= t.degree(); ++k)
            REQUIRE(operator_norm(p.level_row(k) - t.level_row(k)) < 1e-15);
    }
    SECTION("single letters concatenate") {
        SchurElement t(2, 1, 1);
        t.set_coeff(Word{1}, m1(1.0));
        const SchurElement p = multiply(t, t);
        REQUIRE(p.degree() == 2);
        REQUIRE(std::abs(p.coeff(Word{1, 1})(0, 0) - 1.0) < 1e-15);
        for (std::int64_t o = 0; o < 4; ++o)
            if (o != 0) REQUIRE(p.level_row(2).middleCols(o, 1).cwiseAbs().maxCoeff() == 0.0);
        REQUIRE(p.level_row(0).cwiseAbs().maxCoeff() == 0.0);
        REQUIRE(p.level_row(1).cwiseAbs().maxCoeff() == 0.0);
    }
    SECTION("row 0 of the assembled product matches") {
        const SchurElement t = random_schur(53, 2, 2, 4, 0.9);
        const SchurElement s = random_schur(59, 2, 2, 4, 0.9);
        const SchurElement p = multiply(t, s);
        const CMatrix prod =
            assemble_truncation(t, 4).dense() * assemble_truncation(s, 4).dense();
        Index col = 0;
        for (int k = 0; k <= 4; ++k) {
            const Index w = p.level_row(k).cols();
            REQUIRE(operator_norm(prod.block(0, col, 2, w) - p.level_row(k)) < 1e-12);
            col += w;
        }
    }
    SECTION("constant terms multiply") {
        const SchurElement t = random_schur(61, 2, 2, 2, 0.9);
        const SchurElement s = random_schur(67, 2, 2, 2, 0.9);
        const OperatorTuple zero = OperatorTuple::zero(2, 2);
        const CMatrix lhs = evaluate(multiply(t, s), zero).value;
        const CMatrix rhs = evaluate(t, zero).value * evaluate(s, zero).value;
        REQUIRE(operator_norm(lhs - rhs) < 1e-14);
    }
    SECTION("evaluation is linear") {
        Rng rng(5);
        const SchurElement t = random_schur(68, 2, 2, 3, 0.9);
        const OperatorTuple z = random_point(rng, 2, 2, 0.4);
        const CMatrix once = evaluate(t, z).value;
        const CMatrix scaled = evaluate(t * 2.5, z).value;
        REQUIRE(operator_norm(scaled - 2.5 * once) < 1e-13);
    }
}

TEST_CASE("random_schur is deterministic and respects its margin", "[schur]") {
    const SchurElement a = random_schur(71, 2, 2, 3, 0.9);
    const SchurElement b = random_schur(71, 2, 2, 3, 0.9);
    for (int k = 0; k <= 3; ++k)
        REQUIRE((a.level_row(k) - b.level_row(k)).cwiseAbs().maxCoeff() == 0.0);

    const SchurElement c = random_schur(72, 2, 2, 3, 0.9);
    REQUIRE((a.level_row(1) - c.level_row(1)).cwiseAbs().maxCoeff() > 1e-6);

    for (std::uint64_t seed = 100; seed < 110; ++seed) {
        const SchurElement t = random_schur(seed, 3, 2, 3, 0.9);
        REQUIRE(norm_lower_bound(t, 3) <= 0.9 + 1e-10);
    }
}

TEST_CASE("point-evaluation identity holds on completed rows", "[schur]") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(900 + seed);
        const int n = 1 + static_cast<int>(seed % 3);
        const Index d = 1 + static_cast<Index>(seed % 2);
        const SchurElement t = random_schur(1000 + seed, n, d, 3, 0.9);
        const OperatorTuple z = random_point(rng, n, d, 0.64);
        REQUIRE(evaluation_identity_defect(t, z, 5) < 1e-10);
    }
}
