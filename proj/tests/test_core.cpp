#include "support.hpp"
#include "symp/io.hpp"
#include "symp/iteration.hpp"
#include "symp/lagrangian.hpp"

#include <gtest/gtest.h>

using namespace symp;

namespace {

// Inertia of the Kashiwara form on L1 + L2 + L3, assembled directly.
int kashiwara_brute(const Mat& L1, const Mat& L2, const Mat& L3, const Mat& form) {
    int k = int(L1.cols());
    Mat X(L1.rows(), 3 * k);
    X << L1, L2, L3;
    // Q(x1,x2,x3) = w(x1,x2) + w(x2,x3) + w(x3,x1), polarized
    Mat W = X.transpose() * form * X;
    Mat Q = Mat::Zero(3 * k, 3 * k);
    for (int a = 0; a < 3; ++a) {
        int b = (a + 1) % 3;
        Q.block(a * k, b * k, k, k) += W.block(a * k, b * k, k, k);
    }
    Q = 0.5 * (Q + Q.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Mat> es(Q);
    int s = 0;
    for (int i = 0; i < es.eigenvalues().size(); ++i) {
        double e = es.eigenvalues()(i);
        if (e > 1e-10) ++s;
        else if (e < -1e-10) --s;
    }
    return s;
}

LagrangianPath line_path(double from, double to, int samples) {
    LagrangianPath p;
    for (int k = 0; k <= samples; ++k) {
        double t = double(k) / samples, a = from + (to - from) * t;
        Mat F(2, 1);
        F << std::cos(a), std::sin(a);
        p.times.push_back(t);
        p.frames.push_back(F);
    }
    return p;
}

}  // namespace

TEST(SpCore, SymplecticChecks) {
    EXPECT_TRUE(check_symplectic(J(1)));
    EXPECT_TRUE(check_symplectic(Mat::Identity(2, 2)));
    std::mt19937_64 rng(11);
    EXPECT_TRUE(check_symplectic(hamiltonian_exp(random_symmetric(rng, 4, 1.0))));
    Mat bad = Mat::Identity(2, 2);
    bad(0, 0) = 2;
    EXPECT_FALSE(check_symplectic(bad));
    EXPECT_THROW(half_dim(Mat::Identity(3, 3)), ValidationError);
}

TEST(SpCore, Diamond) {
    EXPECT_TRUE(diamond(Mat::Identity(2, 2), Mat::Identity(2, 2)).isApprox(Mat::Identity(4, 4)));
    EXPECT_TRUE(diamond(D(2), D(2)).isApprox(M_plus(2)));
    std::mt19937_64 rng(12);
    Mat A = random_symplectic(rng, 1), B = random_symplectic(rng, 2), C = random_symplectic(rng, 1);
    EXPECT_LT((diamond(diamond(A, B), C) - diamond(A, diamond(B, C))).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_TRUE(check_symplectic(diamond(A, B), 1e-9));
}

TEST(SpCore, PolarDecomposition) {
    auto r = polar_unitary(R(0.8));
    EXPECT_TRUE(r.A.isApprox(Mat::Identity(2, 2), 1e-12));
    EXPECT_NEAR(std::abs(r.u(0, 0) - unit(0.8)), 0, 1e-12);
    auto d = polar_unitary(D(2));
    EXPECT_TRUE(d.A.isApprox(D(2), 1e-12));
    EXPECT_TRUE(d.U.isApprox(Mat::Identity(2, 2), 1e-12));
    std::mt19937_64 rng(13);
    Mat M = random_symplectic(rng, 2);
    auto p = polar_unitary(M);
    EXPECT_LT((p.A * p.U - M).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_TRUE(check_symplectic(p.U, 1e-9));
}

TEST(SpCore, Nullity) {
    EXPECT_EQ(nullity(Mat::Identity(2, 2), 1.0), 2);
    EXPECT_EQ(nullity(R(kPi / 3), unit(kPi / 3)), 1);
    EXPECT_EQ(nullity(D(2), 1.0), 0);
    EXPECT_EQ(nullity(N1(1, 1), 1.0), 1);
}

TEST(SpCore, KreinTypes) {
    double th = 1.1;
    auto t = krein_types(R(th));
    ASSERT_EQ(t.size(), 2u);
    for (const auto& e : t) {
        if (std::abs(e.value - unit(th)) < 1e-9) EXPECT_EQ(std::make_pair(e.p, e.q), std::make_pair(0, 1));
        else EXPECT_EQ(std::make_pair(e.p, e.q), std::make_pair(1, 0));
    }
    auto n = krein_types(N1(1, 1));
    ASSERT_EQ(n.size(), 1u);
    EXPECT_EQ(n[0].p, 1);
    EXPECT_EQ(n[0].q, 1);
    EXPECT_EQ(n[0].algebraic_multiplicity, 2);
    EXPECT_EQ(n[0].geometric_multiplicity, 1);
    EXPECT_TRUE(krein_types(D(3)).empty());
}

TEST(SpCore, KreinTypesSurviveConjugationOfJordanBlocks) {
    std::mt19937_64 rng(14);
    Mat M = diamond(N2_from(1.2, -1.0, 0.3), R(2.5));
    for (int k = 0; k < 20; ++k) {
        Mat P = random_symplectic(rng, 3, 0.5);
        auto t = krein_types(P * M * sp_inverse(P));
        ASSERT_EQ(t.size(), 4u);
        for (const auto& e : t) EXPECT_EQ(e.p + e.q, e.algebraic_multiplicity);
    }
}

TEST(SpCore, ComponentSign) {
    for (cplx w : {cplx(1, 0), cplx(-1, 0), unit(0.7)}) EXPECT_EQ(component_sign(M_plus(2), w), Component::plus);
    EXPECT_EQ(component_sign(Mat::Identity(2, 2), 1.0), Component::singular);
    EXPECT_EQ(component_sign(D(2), 1.0), Component::plus);
    EXPECT_EQ(component_sign(M_minus(1), 1.0), Component::minus);
}

TEST(SpCore, Sp2Model) {
    auto c = sp2_model(Mat::Identity(2, 2));
    EXPECT_NEAR(c.r, 1, 1e-14);
    EXPECT_NEAR(c.theta, 0, 1e-14);
    EXPECT_NEAR(c.z, 0, 1e-14);
    auto r = sp2_model(R(0.9));
    EXPECT_NEAR(r.r, 1, 1e-14);
    EXPECT_NEAR(r.theta, 0.9, 1e-14);
    std::mt19937_64 rng(15);
    for (int k = 0; k < 20; ++k) {
        Mat M = random_symplectic(rng, 1);
        // the polar factor loses about cond(M)^2 digits
        EXPECT_LT((sp2_reconstruct(sp2_model(M)) - M).cwiseAbs().maxCoeff(), 1e-13 * std::pow(M.norm(), 3));
    }
    EXPECT_THROW(sp2_model(Mat::Identity(4, 4)), ValidationError);
}

TEST(Lagrangian, TripleSignatureMatchesBruteForce) {
    Mat form = J(1);
    Mat a(2, 1), b(2, 1), c(2, 1);
    a << 1, 0;
    b << 0, 1;
    c << 1, 1;
    EXPECT_EQ(triple_signature(a, a, a, form), 0);
    EXPECT_EQ(triple_signature(a, b, c, form), kashiwara_brute(a, b, c, form));
    std::mt19937_64 rng(21);
    for (int n : {1, 2, 3})
        for (int k = 0; k < 10; ++k) {
            Mat f = J(n);
            Mat x = random_lagrangian(f, rng), y = random_lagrangian(f, rng), z = random_lagrangian(f, rng);
            int s = triple_signature(x, y, z, f);
            EXPECT_EQ(s, kashiwara_brute(x, y, z, f));
            EXPECT_EQ(triple_signature(y, x, z, f), -s);  // antisymmetry
            EXPECT_EQ(triple_signature(y, z, x, f), s);   // cyclic
        }
}

TEST(Lagrangian, PairIntersectionNumber) {
    Mat form = J(1);
    std::vector<double> times{0, 0.5, 1};
    Mat h(2, 1), v(2, 1);
    h << 1, 0;
    v << 0, 1;
    EXPECT_EQ(pair_intersection_number(constant_lagrangian_path(h, times), constant_lagrangian_path(v, times), form),
              0.0);
    // a half-turn passes the fixed line exactly once, in the interior
    auto turn = line_path(-0.3, kPi - 0.3, 40);
    auto fixed = constant_lagrangian_path(h, turn.times);
    double once = pair_intersection_number(turn, fixed, form);
    EXPECT_EQ(std::abs(once), 1.0);
    EXPECT_EQ(pair_intersection_number(fixed, turn, form), -once);
    // concatenation: split at an interior sample
    auto half1 = line_path(-0.3, 1.2, 20), half2 = line_path(1.2, kPi - 0.3, 20);
    double parts = pair_intersection_number(half1, constant_lagrangian_path(h, half1.times), form) +
                   pair_intersection_number(half2, constant_lagrangian_path(h, half2.times), form);
    EXPECT_EQ(parts, once);
    // grid mismatch is a validation error
    EXPECT_THROW(pair_intersection_number(turn, constant_lagrangian_path(h, times), form), ValidationError);
}

TEST(Lagrangian, LerayIndex) {
    Mat form = J(1);
    Mat h(2, 1);
    h << 1, 0;
    EXPECT_EQ(leray_index(constant_lagrangian_path(h, {0, 1}), form), 0.0);
    double q = leray_index(line_path(0, kPi / 2, 20), form);
    EXPECT_EQ(std::abs(q), 0.5);
}

TEST(Lagrangian, GraphFrame) {
    auto d = graph_lagrangian(Mat::Identity(2, 2));
    EXPECT_EQ(intersection_dim(d.frame, diagonal_frame(1)), 2);
    std::mt19937_64 rng(22);
    Mat M = random_symplectic(rng, 2);
    Mat F = graph_frame(M);
    EXPECT_LT((F.transpose() * doubled_form(2) * F).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_EQ(intersection_dim(graph_frame(N1(1, 1)), diagonal_frame(1)), 1);
}

TEST(Lagrangian, CzFromLagrangian) {
    EXPECT_EQ(cz_from_lagrangian(diagonal_path(1.0, 1.0)), 0);
    EXPECT_EQ(cz_from_lagrangian(rotation_path(kPi, 1.0)), 1);
    std::mt19937_64 rng(23);
    for (int k = 0; k < 10; ++k) {
        auto p = support::random_path(rng, 1 + k % 2);
        EXPECT_EQ(cz_from_lagrangian(p), i1(p));
    }
}

TEST(Index, RotationNumber) {
    EXPECT_NEAR(rotation_number(rotation_path(1.0, kTwoPi)), kTwoPi, 1e-10);
    EXPECT_NEAR(rotation_number(diagonal_path(1.0, 1.0)), 0.0, 1e-12);
}

TEST(Index, SpecValues) {
    EXPECT_EQ(index_nondegenerate(diagonal_path(1.0, 1.0)).index, 0);
    EXPECT_EQ(index_nondegenerate(rotation_path(kPi, 1.0)).index, 1);
    auto c = index_degenerate(rotation_path(0.0, 1.0));
    EXPECT_EQ(c.index, -1);
    EXPECT_EQ(c.nullity, 2);
    auto full = index_degenerate(rotation_path(kTwoPi, 1.0));
    EXPECT_EQ(full.index, 1);
    EXPECT_EQ(full.nullity, 2);
    EXPECT_EQ(omega_index(diagonal_path(1.0, 1.0), -1.0).index, 0);
    EXPECT_EQ(omega_index(rotation_path(kPi, 1.0), -1.0).index, 0);
    EXPECT_EQ(omega_index(rotation_path(kPi, 1.0), -1.0).nullity, 2);
}

TEST(Index, RotationFamilyClosedForm) {
    // i1(R(a t), t in [0,1]) = 2 floor(a / 2 pi) + 1 off the resonances
    for (double a : {0.3, 2.0, 4.0, 7.0, 13.0, 20.0}) {
        int expect = 2 * int(std::floor(a / kTwoPi)) + 1;
        EXPECT_EQ(i1(rotation_path(a, 1.0)), expect) << a;
    }
}

TEST(Index, HomotopyInvarianceUnderReparametrization) {
    std::mt19937_64 rng(31);
    for (int k = 0; k < 6; ++k) {
        auto p = support::random_path(rng, 1 + k % 2);
        auto q = reparametrize(p, [tau = p.tau](double t) { return tau * std::pow(t / tau, 1.7); }, 64);
        EXPECT_EQ(i1(q), i1(p));
    }
}

TEST(Index, DegenerateSandwich) {
    // R(2 pi t) is degenerate with nu = 2; nearby rotations bracket the index
    auto g = rotation_path(kTwoPi, 1.0);
    auto r = index_degenerate(g);
    for (double d : {-1e-3, 1e-3}) {
        int v = i1(rotation_path(kTwoPi + d, 1.0));
        EXPECT_LE(r.index, v);
        EXPECT_LE(v, r.index + r.nullity);
    }
}

TEST(Index, CounterclockwiseJump) {
    for (double b : {1.0, -1.0}) {
        Mat end = N1(1, b);
        auto g = path_to(end);
        auto r = index_degenerate(g);
        auto tail = append_tail(g, [](double s) { return rotation(0.05 * s, 1); }, 1.0);
        EXPECT_EQ(i1(tail), r.index + 1) << b;
    }
}

TEST(Index, CurveIndex) {
    for (double b : {-1.0, 0.0, 1.0}) {
        auto f = [b](double t) { return Mat(N1(1, b) * rotation(t / 2, 1)); };
        EXPECT_EQ(curve_index(1, f, 0, 1), 2 - int(std::abs(b)));
        EXPECT_EQ(curve_index(1, f, -1, 0), 0);
        EXPECT_EQ(curve_index(1, f, -1, 1), curve_index(1, f, -1, 0) + curve_index(1, f, 0, 1));
    }
    EXPECT_THROW(curve_index(1, [](double) { return Mat(Mat::Identity(2, 2)); }, 1, 0), ValidationError);
}

TEST(Index, IterateAndBott) {
    auto g = rotation_path(1.3, 1.0);
    auto one = iterate_path(g, 1);
    EXPECT_LT((one.end() - g.end()).cwiseAbs().maxCoeff(), 1e-14);
    auto b = bott_check(g, 1, 1.0);
    EXPECT_EQ(b.lhs_index, b.rhs_index);
    std::mt19937_64 rng(32);
    auto p = support::random_path(rng, 2);
    for (int m = 1; m <= 4; ++m) {
        auto r = bott_check(p, m, unit(0.4));
        EXPECT_EQ(r.lhs_index, r.rhs_index);
        EXPECT_EQ(r.lhs_nullity, r.rhs_nullity);
    }
    EXPECT_THROW(iterate_path(g, 0), ValidationError);
}

TEST(Index, CrossingOracle) {
    EXPECT_EQ(sp2_crossing_oracle(diagonal_path(1.0, 1.0), 1.0), 0);
    std::mt19937_64 rng(33);
    for (int k = 0; k < 20; ++k) {
        auto p = support::random_path(rng, 1);
        EXPECT_EQ(sp2_crossing_oracle(p, 1.0), i1(p));
        cplx w = unit(2.0);
        EXPECT_EQ(sp2_crossing_oracle(p, w), omega_index(p, w).index);
    }
    EXPECT_THROW(sp2_crossing_oracle(support::random_path(rng, 2), 1.0), ValidationError);
}

TEST(Index, RejectsNonUnitOmega) { EXPECT_THROW(omega_index(rotation_path(1.0, 1.0), 2.0), ValidationError); }

TEST(LinHam, FundamentalSolution) {
    auto z = fundamental_solution(constant_coefficient(Mat::Zero(2, 2), 1.0));
    for (const Mat& M : z.mats) EXPECT_LT((M - Mat::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-14);
    auto h = fundamental_solution(constant_coefficient(Mat::Identity(2, 2), 3.0));
    for (std::size_t k = 0; k < h.size(); ++k)
        EXPECT_LT((h.mats[k] - R(h.times[k])).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(LinHam, SturmConversion) {
    Mat I = Mat::Identity(2, 2), Z = Mat::Zero(2, 2);
    auto b0 = sturm_to_hamiltonian(constant_sturm(I, Z, Z, 1.0)).B(0.3);
    Mat e0 = Mat::Zero(4, 4);
    e0.topLeftCorner(2, 2) = I;
    EXPECT_LT((b0 - e0).cwiseAbs().maxCoeff(), 1e-14);
    auto b1 = sturm_to_hamiltonian(constant_sturm(I, Z, -2.5 * I, 1.0)).B(0.3);
    e0.bottomRightCorner(2, 2) = 2.5 * I;
    EXPECT_LT((b1 - e0).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(LinHam, MorseFourier) {
    auto free = morse_index_fourier(support::scalar_sturm(0.0));
    EXPECT_EQ(free.m_minus, 0);
    EXPECT_EQ(free.m_zero, 1);
    EXPECT_EQ(morse_index_fourier(support::scalar_sturm(0.5)).m_minus, 1);
    for (double c : {1.0, 2.3, 4.0}) {
        auto r = morse_index_fourier(support::scalar_sturm(c));
        auto [neg, zero] = support::harmonic_morse_exact(c);
        EXPECT_EQ(r.m_minus, neg) << c;
        EXPECT_EQ(r.m_zero, zero) << c;
    }
}

TEST(LinHam, RejectsBadInput) {
    auto s = support::scalar_sturm(1.0);
    s.P = [](double) { return Mat::Constant(1, 1, -1.0); };
    EXPECT_THROW(check_sturm(s), ValidationError);
    Mat B(2, 2);
    B << 1, 2, 0, 1;
    EXPECT_THROW(fundamental_solution(constant_coefficient(B, 1.0)), ValidationError);
}

TEST(Io, MatrixRoundTrip) {
    std::mt19937_64 rng(41);
    Mat M = random_symplectic(rng, 2);
    Mat back = io::matrix_from_rows(io::parse_csv(io::matrix_csv(M), "m"), "m");
    EXPECT_EQ((back - M).cwiseAbs().maxCoeff(), 0.0);
    Mat j = io::matrix_from_json(io::matrix_json(M), "m");
    EXPECT_EQ((j - M).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Io, CsvErrorsCarryLocation) {
    try {
        io::parse_csv("1,2\n3,x\n", "file.csv");
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("file.csv"), std::string::npos);
    }
    EXPECT_THROW(io::matrix_from_rows(io::parse_csv("1,2\n3\n", "r"), "r"), ValidationError);
}

TEST(Io, ComplexParsing) {
    std::string warn;
    cplx w = io::parse_complex("0,2", true, &warn);
    EXPECT_NEAR(std::abs(w), 1.0, 1e-15);
    EXPECT_FALSE(warn.empty());
    warn.clear();
    io::parse_complex("1,0", true, &warn);
    EXPECT_TRUE(warn.empty());
    EXPECT_THROW(io::parse_complex("1", true), ValidationError);
}

TEST(Io, PolicyValidation) {
    auto p = io::policy_from_json(io::json{{"tol_rank", 1e-9}});
    EXPECT_EQ(p.tol_rank, 1e-9);
    EXPECT_THROW(io::policy_from_json(io::json{{"tol_rank", 0.5}}), ValidationError);
}

TEST(Io, PathDescriptors) {
    auto rot = io::path_from_json(io::json::parse(R"({"n":1,"tau":1,"generator":{"type":"rotation"}})"));
    EXPECT_EQ(i1(rot), 1);
    EXPECT_THROW(io::path_from_json(io::json::parse(R"({"n":1,"tau":1,"generator":{"type":"nope"}})")),
                 ValidationError);
}
