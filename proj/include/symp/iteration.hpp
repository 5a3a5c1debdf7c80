#pragma once

#include "index.hpp"

#include <cstdio>
#include <optional>

namespace symp {

// N2 with the upper-right block completed so the matrix is symplectic:
// R(theta)^T b must be symmetric, which fixes b1 + b4 given b2 - b3.
inline Mat N2_from(double theta, double b2, double b3, double b1 = 0.0) {
    double c = std::cos(theta), s = std::sin(theta);
    double sum = -c * (b2 - b3) / s;  // b1 + b4
    Mat b(2, 2);
    b << b1, b2, b3, sum - b1;
    return N2(theta, b);
}

struct SplittingNumbers {
    cplx omega;
    int s_plus = 0, s_minus = 0;
    double eps = 0;
};

// Angular distance from omega to the nearest unit-circle eigenvalue of M
// that is not omega itself.
inline double angular_gap(const Mat& M, cplx omega, const NumericPolicy& pol = default_policy()) {
    double gap = kPi;
    for (const auto& c : spectral_clusters(M, pol)) {
        if (!c.on_circle) continue;
        double d = std::abs(std::arg(c.value / omega));
        if (d <= pol.tol_cluster) continue;
        gap = std::min(gap, d);
    }
    return gap;
}

inline SplittingNumbers splitting_numbers(const Mat& M, cplx omega, const NumericPolicy& pol = default_policy(),
                                          const SymplecticPath* path = nullptr) {
    if (std::abs(std::abs(omega) - 1.0) > 1e-8) throw ValidationError("omega", "omega must have unit modulus");
    omega /= std::abs(omega);
    double gap = angular_gap(M, omega, pol);
    double eps = std::min(1e-3, 0.5 * gap);
    if (eps < 1e-7) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3g", eps);
        throw ConditioningError("gap", std::string("eigenvalues too clustered; angular gap allows eps ") + buf);
    }
    SymplecticPath p = path ? *path : path_to(M);
    int base = omega_index(p, omega, pol).index;
    SplittingNumbers s;
    s.omega = omega;
    s.eps = eps;
    s.s_plus = omega_index(p, omega * unit(eps), pol).index - base;
    s.s_minus = omega_index(p, omega * unit(-eps), pol).index - base;
    return s;
}

struct BasicNormalForm {
    enum Kind { D, N1, R, N2 } kind;
    std::vector<double> params;  // D: lambda; N1: lambda, b; R: theta; N2: theta, b1..b4
    bool trivial = false;
    Mat block;
};

inline const char* kind_name(BasicNormalForm::Kind k) {
    switch (k) {
        case BasicNormalForm::D: return "D";
        case BasicNormalForm::N1: return "N1";
        case BasicNormalForm::R: return "R";
        default: return "N2";
    }
}

struct NormalFormDecomposition {
    std::vector<BasicNormalForm> factors;  // excluding D(+-2) blocks
    std::vector<BasicNormalForm> m0;       // the D(+-2) blocks
};

namespace detail {

inline std::optional<BasicNormalForm> match_2x2(const Mat& B, double tol) {
    auto near = [tol](double a, double b) { return std::abs(a - b) <= tol; };
    // D(+-2)
    for (double l : {2.0, -2.0})
        if ((B - symp::D(l)).cwiseAbs().maxCoeff() <= tol)
            return BasicNormalForm{BasicNormalForm::D, {l}, true, B};
    // N1(lambda, b)
    if (near(B(1, 0), 0) && near(B(0, 0), B(1, 1)) && (near(std::abs(B(0, 0)), 1.0))) {
        double l = B(0, 0) > 0 ? 1.0 : -1.0;
        for (double b : {-1.0, 0.0, 1.0})
            if (near(B(0, 1), b)) return BasicNormalForm{BasicNormalForm::N1, {l, b}, (l > 0 ? b < 0 : b > 0), B};
    }
    // R(theta), theta in (0, pi) u (pi, 2 pi)
    if (near(B(0, 0), B(1, 1)) && near(B(0, 1), -B(1, 0)) && near(B(0, 0) * B(0, 0) + B(1, 0) * B(1, 0), 1.0)) {
        double th = std::atan2(B(1, 0), B(0, 0));
        if (th < 0) th += kTwoPi;
        if (std::abs(std::sin(th)) > tol) return BasicNormalForm{BasicNormalForm::R, {th}, false, B};
    }
    return std::nullopt;
}

inline std::optional<BasicNormalForm> match_4x4(const Mat& B, double tol) {
    Mat A = B.topLeftCorner(2, 2), Dd = B.bottomRightCorner(2, 2), C = B.bottomLeftCorner(2, 2);
    Mat b = B.topRightCorner(2, 2);
    if (C.cwiseAbs().maxCoeff() > tol || (A - Dd).cwiseAbs().maxCoeff() > tol) return std::nullopt;
    auto r = match_2x2(A, tol);
    if (!r || r->kind != BasicNormalForm::R) return std::nullopt;
    if (std::abs(b(0, 1) - b(1, 0)) <= tol) return std::nullopt;
    double th = r->params[0];
    bool trivial = (b(0, 1) - b(1, 0)) * std::sin(th) > 0;
    return BasicNormalForm{BasicNormalForm::N2, {th, b(0, 0), b(0, 1), b(1, 0), b(1, 1)}, trivial, B};
}

// Sub-block of a diamond product on coordinates [a, a+k).
inline Mat diamond_block(const Mat& M, int a, int k) {
    int n = half_dim(M);
    Mat B(2 * k, 2 * k);
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) B.block(r * k, c * k, k, k) = M.block(r * n + a, c * n + a, k, k);
    return B;
}

}  // namespace detail

// Recognize M as a diamond product of basic normal forms (entrywise to tol).
inline std::optional<NormalFormDecomposition> recognize_normal_form(const Mat& M, double tol = 1e-8) {
    int n = half_dim(M);
    if (!check_symplectic(M, 1e-8)) return std::nullopt;
    // coupling between coordinate pairs (k, n+k)
    auto coupled = [&](int k, int l) {
        for (int r : {k, n + k})
            for (int c : {l, n + l})
                if (std::abs(M(r, c)) > tol || std::abs(M(c, r)) > tol) return true;
        return false;
    };
    NormalFormDecomposition out;
    int a = 0;
    while (a < n) {
        int k = 1;
        if (a + 1 < n && coupled(a, a + 1)) k = 2;
        for (int l = a + k; l < n; ++l)
            for (int j = a; j < a + k; ++j)
                if (coupled(j, l)) return std::nullopt;
        Mat B = detail::diamond_block(M, a, k);
        auto f = k == 1 ? detail::match_2x2(B, tol) : detail::match_4x4(B, tol);
        if (!f) return std::nullopt;
        if (f->kind == BasicNormalForm::D) out.m0.push_back(*f);
        else out.factors.push_back(*f);
        a += k;
    }
    return out;
}

struct UltimateType {
    int p = 0, q = 0;
    std::string route;  // "normal-form" or "splitting"
};

inline UltimateType ultimate_type(const Mat& M, cplx omega, const NumericPolicy& pol = default_policy()) {
    omega /= std::abs(omega);
    if (auto dec = recognize_normal_form(M)) {
        UltimateType u;
        u.route = "normal-form";
        for (const auto& f : dec->factors) {
            if (f.trivial) continue;
            for (const auto& e : krein_types(f.block, pol))
                if (std::abs(e.value - omega) < 1e-6) {
                    u.p += e.p;
                    u.q += e.q;
                }
        }
        return u;
    }
    SplittingNumbers s = splitting_numbers(M, omega, pol);
    return {s.s_plus, s.s_minus, "splitting"};
}

struct UnitSpectrumEntry {
    cplx value;
    int nullity = 0;
};

// Omega-invariants of M: the unit-circle spectrum with nullities.
inline std::vector<UnitSpectrumEntry> homotopy_invariants(const Mat& M, const NumericPolicy& pol = default_policy()) {
    std::vector<UnitSpectrumEntry> out;
    for (const auto& c : spectral_clusters(M, pol))
        if (c.on_circle) out.push_back({c.value, nullity(M, c.value, pol.tol_rank)});
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return arg_0_2pi(a.value) < arg_0_2pi(b.value); });
    return out;
}

inline bool same_invariants(const std::vector<UnitSpectrumEntry>& a, const std::vector<UnitSpectrumEntry>& b,
                            double tol = 1e-6) {
    if (a.size() != b.size()) return false;
    for (std::size_t k = 0; k < a.size(); ++k)
        if (std::abs(a[k].value - b[k].value) > tol || a[k].nullity != b[k].nullity) return false;
    return true;
}

struct IterationTerms {
    int s_plus_1 = 0;
    int C = 0;
    std::vector<std::pair<double, int>> angles;  // (theta, S^-(e^{i theta}))
};

inline IterationTerms iteration_terms(const Mat& M, const NumericPolicy& pol = default_policy(),
                                      const SymplecticPath* path = nullptr) {
    IterationTerms t;
    SymplecticPath p = path ? *path : path_to(M);
    auto sp = [&](cplx w) { return splitting_numbers(M, w, pol, &p); };
    for (const auto& c : spectral_clusters(M, pol)) {
        if (!c.on_circle) continue;
        if (c.real && c.value.real() > 0) {
            t.s_plus_1 = sp(cplx(1, 0)).s_plus;
            continue;
        }
        double th = arg_0_2pi(c.value);
        int sm = sp(c.value).s_minus;
        t.angles.emplace_back(th, sm);
        t.C += sm;
    }
    return t;
}

inline int ceil_ratio(int m, double theta) {
    double x = m * theta / kTwoPi;
    double r = std::round(x);
    if (std::abs(x - r) < 1e-9) return static_cast<int>(r);
    return static_cast<int>(std::ceil(x));
}

inline int precise_iteration_index(int i1v, const Mat& M, int m, const NumericPolicy& pol = default_policy(),
                                   const SymplecticPath* path = nullptr) {
    if (m < 1) throw ValidationError("iterate", "m must be positive");
    IterationTerms t = iteration_terms(M, pol, path);
    int sum = 0;
    for (auto [th, sm] : t.angles) sum += ceil_ratio(m, th) * sm;
    return m * (i1v + t.s_plus_1 - t.C) + 2 * sum - (t.s_plus_1 + t.C);
}

}  // namespace symp
