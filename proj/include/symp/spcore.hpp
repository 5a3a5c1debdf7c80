#pragma once

#include "common.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

namespace symp {

inline Mat J(int n) {
    Mat j = Mat::Zero(2 * n, 2 * n);
    j.topRightCorner(n, n) = -Mat::Identity(n, n);
    j.bottomLeftCorner(n, n) = Mat::Identity(n, n);
    return j;
}

inline int half_dim(const Mat& M) {
    if (M.rows() != M.cols() || M.rows() % 2 != 0 || M.rows() == 0)
        throw ValidationError("dimension", "expected a square matrix of even size");
    return static_cast<int>(M.rows() / 2);
}

inline double symplectic_residual(const Mat& M) {
    int n = half_dim(M);
    Mat j = J(n);
    return (M.transpose() * j * M - j).cwiseAbs().rowwise().sum().maxCoeff();
}

inline bool check_symplectic(const Mat& M, double tol = default_policy().tol_sym) {
    if (!(tol > 0)) throw ValidationError("tolerance", "tol must be positive");
    return symplectic_residual(M) <= tol;
}

inline void require_symplectic(const Mat& M, double tol = 1e-8) {
    if (!check_symplectic(M, tol))
        throw ValidationError("not-symplectic",
                              "residual " + std::to_string(symplectic_residual(M)));
    if (std::abs(M.determinant() - 1.0) > 1e-8)
        throw ValidationError("not-symplectic", "determinant differs from 1");
}

// M^{-1} = -J M^T J for symplectic M.
inline Mat sp_inverse(const Mat& M) {
    Mat j = J(half_dim(M));
    return -j * M.transpose() * j;
}

// Block interleaving: each n x n quadrant of the result is the direct sum
// of the corresponding quadrants of the factors.
inline Mat diamond(const Mat& A, const Mat& B) {
    int i = half_dim(A), j = half_dim(B), k = i + j;
    Mat M = Mat::Zero(2 * k, 2 * k);
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) {
            M.block(r * k, c * k, i, i) = A.block(r * i, c * i, i, i);
            M.block(r * k + i, c * k + i, j, j) = B.block(r * j, c * j, j, j);
        }
    return M;
}

inline Mat diamond_power(const Mat& A, int n) {
    Mat M = A;
    for (int k = 1; k < n; ++k) M = diamond(M, A);
    return M;
}

// Basic normal forms.
inline Mat D(double lambda) {
    Mat m(2, 2);
    m << lambda, 0, 0, 1.0 / lambda;
    return m;
}
inline Mat N1(double lambda, double b) {
    Mat m(2, 2);
    m << lambda, b, 0, lambda;
    return m;
}
inline Mat R(double theta) {
    Mat m(2, 2);
    m << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
    return m;
}
// b is the 2x2 upper-right block; b(0,1) != b(1,0) for a genuine N2.
inline Mat N2(double theta, const Mat& b) {
    Mat m = Mat::Zero(4, 4);
    m.topLeftCorner(2, 2) = R(theta);
    m.bottomRightCorner(2, 2) = R(theta);
    m.topRightCorner(2, 2) = b;
    return m;
}
inline Mat M_plus(int n) { return diamond_power(D(2.0), n); }
inline Mat M_minus(int n) {
    return n == 1 ? D(-2.0) : diamond(D(-2.0), diamond_power(D(2.0), n - 1));
}
// R(theta)^{diamond n} = exp(theta J).
inline Mat rotation(double theta, int n) { return diamond_power(R(theta), n); }

inline Mat sym_part(const Mat& S) { return 0.5 * (S + S.transpose()); }

inline Mat hamiltonian_exp(const Mat& S) {
    int n = half_dim(S);
    Mat A = J(n) * sym_part(S);
    return A.exp();
}

inline Mat random_symmetric(std::mt19937_64& rng, int dim, double scale) {
    std::normal_distribution<double> g(0.0, scale);
    Mat S(dim, dim);
    for (int r = 0; r < dim; ++r)
        for (int c = 0; c < dim; ++c) S(r, c) = g(rng);
    return sym_part(S);
}

// Product of a few Hamiltonian exponentials: reaches all of Sp(2n).
inline Mat random_symplectic(std::mt19937_64& rng, int n, double scale = 1.0) {
    Mat M = Mat::Identity(2 * n, 2 * n);
    for (int k = 0; k < 3; ++k) M = hamiltonian_exp(random_symmetric(rng, 2 * n, scale)) * M;
    return M;
}

struct Polar {
    Mat A;   // symmetric positive definite, symplectic
    Mat U;   // orthogonal, symplectic
    CMat u;  // unitary n x n
};

inline Polar polar_unitary(const Mat& M) {
    int n = half_dim(M);
    require_symplectic(M);
    Eigen::SelfAdjointEigenSolver<Mat> es(M * M.transpose());
    Vec s = es.eigenvalues().cwiseSqrt();
    Polar p;
    p.A = es.eigenvectors() * s.asDiagonal() * es.eigenvectors().transpose();
    p.U = es.eigenvectors() * s.cwiseInverse().asDiagonal() * es.eigenvectors().transpose() * M;
    p.u = CMat(n, n);
    p.u.real() = p.U.topLeftCorner(n, n);
    p.u.imag() = p.U.bottomLeftCorner(n, n);
    return p;
}

inline CMat to_complex(const Mat& M) { return M.cast<cplx>(); }

inline int nullity(const Mat& M, cplx omega, double tol_rank = default_policy().tol_rank) {
    if (std::abs(std::abs(omega) - 1.0) > 1e-8)
        throw ValidationError("omega", "omega must have unit modulus");
    CMat A = to_complex(M) - omega * CMat::Identity(M.rows(), M.cols());
    Eigen::JacobiSVD<CMat> svd(A);
    double thr = tol_rank * (1.0 + M.norm());
    int k = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()(i) < thr) ++k;
    return k;
}

inline CMat krein_G(int n) { return cplx(0, 1) * to_complex(J(n)); }

// Eigenvalue cluster of a symplectic matrix. For clusters near the unit
// circle, p/q is the inertia of the Krein form iJ on the root space.
struct Cluster {
    cplx value;          // centroid (snapped to the circle / real axis when close)
    int size = 0;        // algebraic multiplicity
    bool on_circle = false;
    bool real = false;
    int p = 0, q = 0;
    double gram_min = 0;  // smallest |Gram eigenvalue| relative to the largest
    CMat basis;
};

namespace detail {

// Orthonormal basis of the generalized eigenspace for a cluster of size k.
inline CMat root_space(const Mat& M, cplx lambda, int k) {
    int d = static_cast<int>(M.rows());
    CMat A = to_complex(M) - lambda * CMat::Identity(d, d);
    CMat P = CMat::Identity(d, d);
    for (int i = 0; i < k; ++i) P = A * P;
    Eigen::JacobiSVD<CMat> svd(P, Eigen::ComputeFullV);
    return svd.matrixV().rightCols(k);
}

}  // namespace detail

inline std::vector<Cluster> spectral_clusters(const Mat& M,
                                              const NumericPolicy& pol = default_policy()) {
    int n = half_dim(M);
    int d = 2 * n;
    Eigen::EigenSolver<Mat> es(M, true);
    CVec ev = es.eigenvalues();
    CMat V = es.eigenvectors();
    const double tc = pol.tol_cluster;

    // single-linkage clustering
    std::vector<int> parent(d);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    // A rounded Jordan block splits by about sqrt(eps); its computed
    // eigenvectors stay almost parallel, unlike genuinely distinct eigenvalues.
    const double loose = std::sqrt(tc);
    auto parallel = [&](int a, int b) {
        cplx ip = V.col(a).normalized().dot(V.col(b).normalized());
        return std::sqrt(std::max(0.0, 1.0 - std::norm(ip))) <= loose;
    };
    for (int a = 0; a < d; ++a)
        for (int b = a + 1; b < d; ++b) {
            double gap = std::abs(ev(a) - ev(b));
            if (gap <= tc || (gap <= loose && parallel(a, b))) parent[find(a)] = find(b);
        }

    CMat G = krein_G(n);
    std::vector<Cluster> out;
    std::vector<int> seen(d, -1);
    for (int a = 0; a < d; ++a) {
        int r = find(a);
        if (seen[r] >= 0) {
            auto& c = out[seen[r]];
            c.value += ev(a);
            c.size += 1;
            continue;
        }
        seen[r] = static_cast<int>(out.size());
        Cluster c;
        c.value = ev(a);
        c.size = 1;
        out.push_back(c);
    }
    const double mnorm = M.cwiseAbs().rowwise().sum().maxCoeff();
    for (auto& c : out) {
        c.value /= double(c.size);
        if (std::abs(c.value.imag()) <= tc) {
            c.real = true;
            c.value = cplx(c.value.real(), 0.0);
            if (std::abs(std::abs(c.value.real()) - 1.0) <= tc) {
                c.on_circle = true;
                c.value = cplx(c.value.real() > 0 ? 1.0 : -1.0, 0.0);
            }
        }
        if (c.real && !c.on_circle) continue;
        if (c.size == 1) {
            int idx = 0;
            double best = 1e300;
            for (int a = 0; a < d; ++a)
                if (std::abs(ev(a) - c.value) < best) best = std::abs(ev(a) - c.value), idx = a;
            c.basis = V.col(idx).normalized();
        } else {
            c.basis = detail::root_space(M, c.value, c.size);
        }
        CMat gram = c.basis.adjoint() * G * c.basis;
        gram = (0.5 * (gram + gram.adjoint())).eval();
        Eigen::SelfAdjointEigenSolver<CMat> ges(gram);
        Vec e = ges.eigenvalues();
        double mx = e.cwiseAbs().maxCoeff();
        double mn = e.cwiseAbs().minCoeff();
        c.gram_min = mx > 0 ? mn / mx : 0.0;
        if (!c.real) {
            // The Krein form vanishes on eigenvectors off the circle; on the
            // circle its size is the inverse eigenvalue condition number, which
            // also bounds how far rounding can push |lambda| away from 1.
            if (mx < 1e-10) continue;
            double slack = std::max(0.25 * tc, 1e3 * 2.2e-16 * mnorm / mx);
            if (std::abs(std::abs(c.value) - 1.0) > slack) continue;
            c.on_circle = true;
            c.value /= std::abs(c.value);
        }
        for (int i = 0; i < e.size(); ++i) (e(i) > 0 ? c.p : c.q) += 1;
    }
    return out;
}

struct UnitCircleEigenvalue {
    cplx value;
    int algebraic_multiplicity = 0;
    int geometric_multiplicity = 0;
    int p = 0, q = 0;
};

inline std::vector<UnitCircleEigenvalue> krein_types(const Mat& M,
                                                     const NumericPolicy& pol = default_policy()) {
    require_symplectic(M);
    std::vector<UnitCircleEigenvalue> out;
    for (const auto& c : spectral_clusters(M, pol)) {
        if (!c.on_circle) continue;
        if (c.gram_min < 1e-6)
            throw ConditioningError("krein-degenerate",
                                    "Krein Gram matrix is degenerate near eigenvalue (" +
                                        std::to_string(c.value.real()) + "," +
                                        std::to_string(c.value.imag()) + ")");
        UnitCircleEigenvalue u;
        u.value = c.value;
        u.algebraic_multiplicity = c.size;
        u.geometric_multiplicity = nullity(M, c.value, pol.tol_rank);
        if (u.geometric_multiplicity == 0) u.geometric_multiplicity = 1;
        u.p = c.p;
        u.q = c.q;
        out.push_back(u);
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return arg_0_2pi(a.value) < arg_0_2pi(b.value);
    });
    return out;
}

enum class Component { plus, minus, singular };

inline const char* to_string(Component c) {
    switch (c) {
        case Component::plus: return "plus";
        case Component::minus: return "minus";
        default: return "singular";
    }
}

// Sign of (-1)^{n-1} w^{-n} det(M - wI); negative means the M_n^+ side.
inline double component_quantity(const Mat& M, cplx omega) {
    int n = half_dim(M);
    CMat A = to_complex(M) - omega * CMat::Identity(2 * n, 2 * n);
    cplx v = A.determinant() * std::pow(omega, -n);
    return ((n - 1) % 2 ? -1.0 : 1.0) * v.real();
}

inline Component component_sign(const Mat& M, cplx omega, double tol_det = default_policy().tol_det) {
    double v = component_quantity(M, omega);
    if (v < -tol_det) return Component::plus;
    if (v > tol_det) return Component::minus;
    return Component::singular;
}

// Sp(2) cylinder coordinates: M = [[r, z], [z, (1+z^2)/r]] R(theta).
struct Sp2Coords {
    double r = 1, theta = 0, z = 0;
};

inline Sp2Coords sp2_model(const Mat& M) {
    if (half_dim(M) != 1) throw ValidationError("dimension", "sp2_model needs a 2x2 matrix");
    Polar pol = polar_unitary(M);
    Sp2Coords c;
    c.r = pol.A(0, 0);
    c.z = 0.5 * (pol.A(0, 1) + pol.A(1, 0));
    c.theta = std::atan2(pol.U(1, 0), pol.U(0, 0));
    if (c.theta < 0) c.theta += kTwoPi;
    return c;
}

inline Mat sp2_reconstruct(const Sp2Coords& c) {
    Mat P(2, 2);
    P << c.r, c.z, c.z, (1 + c.z * c.z) / c.r;
    return P * R(c.theta);
}

// Component of Sp(2) relative to omega = exp(i phi): +1 on the M^+ side,
// -1 on the M^- side, 0 on the singular surface.
inline int sp2_component(const Sp2Coords& c, cplx omega, double tol = 1e-12) {
    double lhs = (c.r * c.r + c.z * c.z + 1) * std::cos(c.theta);
    double rhs = 2 * c.r * omega.real();
    if (lhs > rhs + tol) return 1;
    if (lhs < rhs - tol) return -1;
    return 0;
}

}  // namespace symp
