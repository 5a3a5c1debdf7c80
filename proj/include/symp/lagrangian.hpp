#pragma once

#include "index.hpp"

namespace symp {

// Skew form used throughout: omega(x, y) = x^T J y on R^{2n}; the doubled
// space carries diag(J, -J).
inline Mat doubled_form(int n) {
    Mat W = Mat::Zero(4 * n, 4 * n);
    W.topLeftCorner(2 * n, 2 * n) = J(n);
    W.bottomRightCorner(2 * n, 2 * n) = -J(n);
    return W;
}

inline Mat orthonormalize(const Mat& F) {
    Eigen::HouseholderQR<Mat> qr(F);
    return qr.householderQ() * Mat::Identity(F.rows(), F.cols());
}

struct LagrangianFrame {
    Mat frame;  // 2n x n (or 4n x 2n in the doubled space)

    int n() const { return static_cast<int>(frame.cols()); }
};

inline LagrangianFrame make_frame(const Mat& F, const Mat& form, double iso_tol = 1e-10) {
    if (F.rows() != 2 * F.cols()) throw ValidationError("frame", "frame must be 2n x n");
    Eigen::JacobiSVD<Mat> svd(F);
    const Vec& s = svd.singularValues();
    if (s(s.size() - 1) <= 1e-8 * s(0)) throw ValidationError("frame", "frame is rank deficient");
    Mat Q = orthonormalize(F);
    if ((Q.transpose() * form * Q).cwiseAbs().maxCoeff() > iso_tol)
        throw ValidationError("frame", "frame is not isotropic");
    return {Q};
}

inline Mat vertical_frame(int n) {
    Mat F = Mat::Zero(2 * n, n);
    F.bottomRows(n) = Mat::Identity(n, n);
    return F;
}
inline Mat horizontal_frame(int n) {
    Mat F = Mat::Zero(2 * n, n);
    F.topRows(n) = Mat::Identity(n, n);
    return F;
}

// Graph {(Mx, x)} in the doubled space.
inline Mat graph_frame(const Mat& M) {
    int d = static_cast<int>(M.rows());
    Mat F(2 * d, d);
    F.topRows(d) = M;
    F.bottomRows(d) = Mat::Identity(d, d);
    return F;
}
inline LagrangianFrame graph_lagrangian(const Mat& M) {
    require_symplectic(M);
    return make_frame(graph_frame(M), doubled_form(half_dim(M)));
}
inline Mat diagonal_frame(int n) { return graph_frame(Mat::Identity(2 * n, 2 * n)); }

inline Mat product_frame(const Mat& FL, const Mat& FM) {
    Mat F = Mat::Zero(FL.rows() + FM.rows(), FL.cols() + FM.cols());
    F.topLeftCorner(FL.rows(), FL.cols()) = FL;
    F.bottomRightCorner(FM.rows(), FM.cols()) = FM;
    return F;
}

inline int intersection_dim(const Mat& A, const Mat& B, double tol = 1e-8) {
    Mat QA = orthonormalize(A), QB = orthonormalize(B);
    Eigen::JacobiSVD<Mat> svd(QA.transpose() * QB);
    int k = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()(i) > 1.0 - tol) ++k;
    return k;
}

// Largest principal angle between two subspaces.
inline double principal_angle(const Mat& A, const Mat& B) {
    Mat QA = orthonormalize(A), QB = orthonormalize(B);
    Eigen::JacobiSVD<Mat> svd(QA.transpose() * QB);
    double c = std::min(1.0, svd.singularValues().minCoeff());
    return std::acos(c);
}

// Smallest singular value of [QA QB]: a transversality margin in [0, 1].
inline double transversality(const Mat& QA, const Mat& QB) {
    Mat C(QA.rows(), QA.cols() + QB.cols());
    C << QA, QB;
    return Eigen::JacobiSVD<Mat>(C).singularValues().minCoeff();
}

// Signature of Q(x1,x2,x3) = w(x1,x2) + w(x2,x3) + w(x3,x1) on L1+L2+L3.
inline int triple_signature(const Mat& L1, const Mat& L2, const Mat& L3, const Mat& form) {
    Mat F[3] = {orthonormalize(L1), orthonormalize(L2), orthonormalize(L3)};
    int k = static_cast<int>(F[0].cols());
    Mat S = Mat::Zero(3 * k, 3 * k);
    for (int a = 0; a < 3; ++a) {
        int b = (a + 1) % 3;
        Mat A = 0.5 * F[a].transpose() * form * F[b];
        S.block(a * k, b * k, k, k) += A;
        S.block(b * k, a * k, k, k) += A.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(S, Eigen::EigenvaluesOnly);
    const Vec& e = es.eigenvalues();
    double thr = 1e-8 * std::max(1e-300, e.cwiseAbs().maxCoeff());
    int sig = 0;
    for (int i = 0; i < e.size(); ++i) {
        if (e(i) > thr) ++sig;
        else if (e(i) < -thr) --sig;
    }
    return sig;
}

inline int triple_signature(const Mat& L1, const Mat& L2, const Mat& L3) {
    return triple_signature(L1, L2, L3, J(static_cast<int>(L1.cols())));
}

// Haar-distributed Lagrangian subspace for an orthogonal skew form W
// (W^T W = I, as for J and the doubled form): build an orthonormal Darboux
// basis [E, W E] and take the image of the graph of a random unitary.
inline Mat random_lagrangian(const Mat& form, std::mt19937_64& rng) {
    int dim = static_cast<int>(form.rows()), k = dim / 2;
    if ((form.transpose() * form - Mat::Identity(dim, dim)).cwiseAbs().maxCoeff() > 1e-12)
        throw ValidationError("form", "random_lagrangian needs an orthogonal skew form");
    std::normal_distribution<double> g(0.0, 1.0);
    Mat E(dim, k), WE(dim, k);
    for (int i = 0; i < k; ++i) {
        Vec x(dim);
        for (int r = 0; r < dim; ++r) x(r) = g(rng);
        for (int j = 0; j < i; ++j) {
            x -= E.col(j) * E.col(j).dot(x);
            x -= WE.col(j) * WE.col(j).dot(x);
        }
        x.normalize();
        E.col(i) = x;
        WE.col(i) = form * x;
    }
    CMat Z(k, k);
    for (int r = 0; r < k; ++r)
        for (int c = 0; c < k; ++c) Z(r, c) = cplx(g(rng), g(rng));
    Eigen::HouseholderQR<CMat> qr(Z);
    CMat U = qr.householderQ() * CMat::Identity(k, k);
    Mat C(dim, dim);
    C << E, WE;
    Mat F(dim, k);
    F.topRows(k) = U.real();
    F.bottomRows(k) = U.imag();
    return C * F;
}

struct LagrangianPath {
    std::vector<double> times;
    std::vector<Mat> frames;  // orthonormal
};

struct PairOptions {
    std::uint64_t seed = 20240611;
    double margin = 0.1;
    int retries = 64;
};

// Pair intersection number [L1:L2] as the half-sum of triple-signature
// differences against locally transversal auxiliary Lagrangians.
inline double pair_intersection_number(const LagrangianPath& A, const LagrangianPath& B, const Mat& form,
                                       const PairOptions& opt = {}) {
    if (A.times.size() != B.times.size() || A.times.empty())
        throw ValidationError("lagrangian-path", "paths must share a time grid");
    for (std::size_t k = 0; k < A.times.size(); ++k)
        if (std::abs(A.times[k] - B.times[k]) > 1e-12)
            throw ValidationError("lagrangian-path", "paths must share a time grid");
    std::mt19937_64 rng(opt.seed);
    const std::size_t N = A.times.size();
    auto ok = [&](const Mat& M, std::size_t k) {
        return transversality(A.frames[k], M) > opt.margin && transversality(B.frames[k], M) > opt.margin;
    };
    int twice = 0;
    std::size_t i = 0;
    if (N == 1) return 0.0;
    while (i + 1 < N) {
        Mat M;
        bool found = false;
        for (int r = 0; r < opt.retries && !found; ++r) {
            M = random_lagrangian(form, rng);
            found = ok(M, i) && ok(M, i + 1);
        }
        if (!found)
            throw ConditioningError("refinement", "no transversal auxiliary Lagrangian near t=" +
                                                      std::to_string(A.times[i]));
        std::size_t j = i + 1;
        while (j + 1 < N && ok(M, j + 1)) ++j;
        twice += triple_signature(A.frames[i], B.frames[i], M, form) -
                 triple_signature(A.frames[j], B.frames[j], M, form);
        i = j;
    }
    return 0.5 * twice;
}

inline LagrangianPath constant_lagrangian_path(const Mat& F, const std::vector<double>& times) {
    LagrangianPath p;
    p.times = times;
    p.frames.assign(times.size(), orthonormalize(F));
    return p;
}

// Leray index of a path: [L(t) : L(b)].
inline double leray_index(const LagrangianPath& L, const Mat& form, const PairOptions& opt = {}) {
    return pair_intersection_number(L, constant_lagrangian_path(L.frames.back(), L.times), form, opt);
}

// Frames f(gamma(t)) along a symplectic path, refined until consecutive
// frames are within max_angle.
inline LagrangianPath frames_along(const SymplecticPath& p, const std::function<Mat(const Mat&)>& f,
                                   double max_angle = 0.1) {
    LagrangianPath out;
    std::function<void(double, const Mat&, double, const Mat&, int)> go = [&](double t0, const Mat& m0,
                                                                             double t1, const Mat& m1,
                                                                             int depth) {
        Mat f0 = f(m0), f1 = f(m1);
        if (principal_angle(f0, f1) < max_angle || depth > 30) {
            if (depth > 30) throw ConditioningError("refinement", "frame refinement depth exceeded");
            out.times.push_back(t1);
            out.frames.push_back(orthonormalize(f1));
            return;
        }
        double tm = 0.5 * (t0 + t1);
        Mat mm = p.prop(t0, tm) * m0;
        go(t0, m0, tm, mm, depth + 1);
        go(tm, mm, t1, m1, depth + 1);
    };
    out.times.push_back(p.times[0]);
    out.frames.push_back(orthonormalize(f(p.mats[0])));
    for (std::size_t k = 0; k + 1 < p.size(); ++k) go(p.times[k], p.mats[k], p.times[k + 1], p.mats[k + 1], 0);
    return out;
}

struct LagrangianIndexOptions {
    double eps = 1e-5;  // clockwise push-off for degenerate endpoints
    PairOptions pair;
};

// [Delta : Gamma_{gamma(t)}] in the doubled space, on the clockwise
// pushed-off path when the endpoint is degenerate.
inline double diagonal_graph_number(const SymplecticPath& g, const LagrangianIndexOptions& opt = {}) {
    SymplecticPath p = nullity(g.end(), 1.0) > 0 ? rotation_tail(g, opt.eps, -1) : g;
    LagrangianPath G = frames_along(p, [](const Mat& M) { return graph_frame(M); });
    LagrangianPath D = constant_lagrangian_path(diagonal_frame(p.n), G.times);
    return pair_intersection_number(D, G, doubled_form(p.n), opt.pair);
}

// i_1 through the Lagrangian route:
//   [Lm : gamma(t) L] + s(Delta, L x Lm, Gamma_{gamma(tau)}) / 2.
inline int cz_from_lagrangian(const SymplecticPath& g, const Mat& L, const Mat& Lm,
                              const LagrangianIndexOptions& opt = {}) {
    SymplecticPath p = nullity(g.end(), 1.0) > 0 ? rotation_tail(g, opt.eps, -1) : g;
    int n = p.n;
    LagrangianPath moving = frames_along(p, [&L](const Mat& M) { return Mat(M * L); });
    LagrangianPath fixed = constant_lagrangian_path(Lm, moving.times);
    double a = pair_intersection_number(fixed, moving, J(n), opt.pair);
    int s = triple_signature(diagonal_frame(n), product_frame(L, Lm), graph_frame(p.end()), doubled_form(n));
    double v = a + 0.5 * s;
    double r = std::round(v);
    if (std::abs(v - r) > 1e-9) throw ConditioningError("lagrangian", "non-integral Lagrangian index");
    return static_cast<int>(r);
}

inline int cz_from_lagrangian(const SymplecticPath& g, const LagrangianIndexOptions& opt = {}) {
    return cz_from_lagrangian(g, vertical_frame(g.n), vertical_frame(g.n), opt);
}

}  // namespace symp
