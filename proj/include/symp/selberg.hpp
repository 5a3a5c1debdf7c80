#pragma once

#include "common.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <functional>
#include <limits>
#include <vector>

namespace symp {

inline double hyperbolic_distance(cplx z, cplx w) {
    if (!(z.imag() > 0) || !(w.imag() > 0)) throw ValidationError("domain", "points must lie in the upper half-plane");
    double c = 1.0 + std::norm(z - w) / (2.0 * z.imag() * w.imag());
    return std::acosh(std::max(1.0, c));
}

struct LengthEntry {
    double length = 0;
    int multiplicity = 1;
};

struct LengthSpectrum {
    std::vector<LengthEntry> entries;
    double area = 0;
};

inline void check_lengths(const LengthSpectrum& L) {
    if (!(L.area > 0)) throw ValidationError("lengths", "area must be positive");
    for (std::size_t k = 0; k < L.entries.size(); ++k) {
        if (!(L.entries[k].length > 0)) throw ValidationError("lengths", "lengths must be positive");
        if (L.entries[k].multiplicity < 1) throw ValidationError("lengths", "multiplicities must be >= 1");
        if (k && L.entries[k].length < L.entries[k - 1].length)
            throw ValidationError("lengths", "lengths must be ascending");
    }
}

struct HeatSide {
    double value = 0;
    double tail_bound = 0;
};

// e^{t/4} sum e^{-t lambda}; the bound covers further eigenvalues above the
// largest supplied one only through the reported factor e^{-t lambda_max}.
inline HeatSide selberg_lhs_heat(const std::vector<double>& eigenvalues, double t) {
    if (!(t > 0)) throw ValidationError("heat", "t must be positive");
    HeatSide h;
    for (double l : eigenvalues) h.value += std::exp(-t * l);
    h.value *= std::exp(t / 4);
    h.tail_bound = eigenvalues.empty() ? 0.0 : std::exp(t / 4 - t * eigenvalues.back());
    return h;
}

namespace detail {

// (tau/2)/sinh(tau/2), with the removable point at 0.
inline double half_over_sinh(double x) {
    double h = 0.5 * x;
    if (std::abs(h) < 1e-4) return 1.0 - h * h / 6.0 + 7.0 * h * h * h * h / 360.0;
    if (std::abs(h) > 700) return 0.0;
    return h / std::sinh(h);
}

// integral over R of (tau/2)/sinh(tau/2) e^{-tau^2/4t}
inline double heat_identity_integral(double t) {
    double cut = std::sqrt(4 * t * 40.0) + 1.0;  // e^{-40} relative
    auto f = [t](double x) { return half_over_sinh(x) * std::exp(-x * x / (4 * t)); };
    double err = 0;
    double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, cut, 20, 1e-14, &err);
    return 2 * v;
}

}  // namespace detail

struct HeatRhs {
    double value = 0;
    double identity = 0;
    double orbits = 0;
    double tail_bound = 0;
};

inline HeatRhs selberg_rhs_heat(const LengthSpectrum& L, double t, int kmax) {
    if (!(t > 0)) throw ValidationError("heat", "t must be positive");
    if (kmax < 1) throw ValidationError("heat", "k_max must be >= 1");
    check_lengths(L);
    HeatRhs r;
    r.identity = L.area / std::pow(4 * kPi * t, 1.5) * detail::heat_identity_integral(t);
    double c = 1.0 / std::sqrt(4 * kPi * t);
    for (const auto& e : L.entries) {
        double s = 0;
        for (int k = 1; k <= kmax; ++k) {
            double x = k * e.length;
            s += e.length / (2 * std::sinh(0.5 * x)) * std::exp(-x * x / (4 * t));
        }
        r.orbits += c * e.multiplicity * s;
        // k > kmax: e^{-x^2/4t}/(2 sinh(x/2)) decreases, bound by a geometric series in k
        double x = (kmax + 1) * e.length;
        double first = e.length / (2 * std::sinh(0.5 * x)) * std::exp(-x * x / (4 * t));
        double ratio = std::exp(-(2 * x + e.length) * e.length / (4 * t) - 0.5 * e.length);
        r.tail_bound += c * e.multiplicity * first / (1 - std::min(ratio, 0.5));
    }
    r.value = r.identity + r.orbits;
    return r;
}

// Even test function h with Fourier transform g. h is evaluated at complex r
// so that eigenvalues below 1/4 (imaginary r) are handled; decay certificate
// |h(r)| <= A (1 + |r|)^{-2-delta} on the real line.
struct TestFunction {
    std::string name;
    std::function<cplx(cplx)> h;
    std::function<double(double)> g;
    double A = 1, delta = 1;
    // optional sharper bound on the integral of |h(r)| r over [R, inf)
    std::function<double(double)> tail;
};

inline TestFunction gaussian_test(double t) {
    if (!(t > 0)) throw ValidationError("test-function", "t must be positive");
    TestFunction f;
    f.name = "gaussian";
    f.h = [t](cplx r) { return std::exp(-t * r * r); };
    f.g = [t](double x) { return std::exp(-x * x / (4 * t)) / (2 * std::sqrt(kPi * t)); };
    // smallest A for delta = 1, from a grid scan
    double A = 1;
    for (int k = 0; k <= 4000; ++k) {
        double r = k * (10.0 / std::sqrt(t)) / 4000;
        A = std::max(A, std::pow(1 + r, 3) * std::exp(-t * r * r));
    }
    f.A = A * 1.01;
    f.delta = 1;
    f.tail = [t](double R) { return std::exp(-t * R * R) / (2 * t); };
    return f;
}

// h(r) = (a^2 + r^2)^{-2}, g(x) = (1 + a|x|) e^{-a|x|} / (4 a^3); valid for lambda > 1/4 - a^2.
inline TestFunction cauchy_test(double a) {
    if (!(a > 0)) throw ValidationError("test-function", "a must be positive");
    TestFunction f;
    f.name = "cauchy";
    f.h = [a](cplx r) { return 1.0 / ((a * a + r * r) * (a * a + r * r)); };
    f.g = [a](double x) { return (1 + a * std::abs(x)) * std::exp(-a * std::abs(x)) / (4 * a * a * a); };
    double A = 0;
    for (int k = 0; k <= 20000; ++k) {
        double r = k * 0.01;
        A = std::max(A, std::pow(1 + r, 4) / std::pow(a * a + r * r, 2));
    }
    f.A = std::max(A, std::pow(1.0 / std::min(a, 1.0), 4)) * 1.01;
    f.delta = 2;
    return f;
}

inline void check_test_function(const TestFunction& f) {
    if (!f.h || !f.g) throw ValidationError("test-function", "h and g are required");
    if (!(f.A > 0) || !(f.delta > 0)) throw ValidationError("test-function", "decay constants must be positive");
    for (int k = 0; k <= 2000; ++k) {
        double r = k < 1000 ? 0.01 * k : 10.0 * std::pow(1.01, k - 1000);
        cplx hp = f.h(r), hm = f.h(-r);
        if (std::abs(hp - hm) > 1e-12 * std::max(1.0, std::abs(hp)))
            throw ValidationError("test-function", "h is not even");
        if (std::abs(hp) > f.A * std::pow(1 + r, -2 - f.delta) * (1 + 1e-12))
            throw ValidationError("test-function", "h violates the declared decay bound");
    }
}

struct GeneralResult {
    double lhs = 0, rhs = 0;
    double identity = 0, orbits = 0;
    double cutoff = 0;
};

// r = sqrt(lambda - 1/4) with Re r >= 0; lambda < 1/4 gives r = i|r|.
inline cplx spectral_parameter(double lambda) { return std::sqrt(cplx(lambda - 0.25, 0.0)); }

inline GeneralResult selberg_general(const TestFunction& f, const std::vector<double>& eigen, const LengthSpectrum& L,
                                     int kmax) {
    check_test_function(f);
    check_lengths(L);
    if (kmax < 1) throw ValidationError("selberg", "k_max must be >= 1");
    GeneralResult res;
    for (double l : eigen) {
        if (l < 0) throw ValidationError("selberg", "eigenvalues must be nonnegative");
        cplx v = f.h(spectral_parameter(l));
        res.lhs += v.real();
    }
    // cutoff where the certified tail of the identity integral is negligible
    auto tail = [&](double R) {
        if (f.tail) return f.tail(R);
        return f.A * std::pow(1 + R, -f.delta) / f.delta;
    };
    double R = 1;
    while (tail(R) > 1e-17 && R < 1e12) R *= 1.5;
    res.cutoff = R;
    auto integrand = [&](double r) { return f.h(r).real() * std::tanh(kPi * r) * r; };
    // split at unit intervals near the origin for accuracy, then geometric pieces
    double acc = 0, a = 0;
    while (a < R) {
        double b = std::min(R, a < 8 ? a + 1 : 2 * a);
        acc += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, a, b, 20, 1e-14);
        a = b;
    }
    res.identity = L.area / (4 * kPi) * 2 * acc;
    for (const auto& e : L.entries) {
        double s = 0;
        for (int k = 1; k <= kmax; ++k) {
            double x = k * e.length;
            s += e.length * f.g(x) / (2 * std::sinh(0.5 * x));
        }
        res.orbits += e.multiplicity * s;
    }
    res.rhs = res.identity + res.orbits;
    return res;
}

struct TorusCheck {
    double lhs = 0, rhs = 0, gap = 0;
    double lhs_tail = 0, rhs_tail = 0;
    double lhs_radius = 0, rhs_radius = 0;
};

namespace detail {

// sum over lattice points l = B n of exp(-|l|^2 / c), over |l| <= radius
inline double lattice_gaussian_sum(const Mat& B, double c, double radius) {
    Eigen::JacobiSVD<Mat> svd(B);
    double smin = svd.singularValues()(1);
    int N = int(std::ceil(radius / smin)) + 1;
    // sum by shells in increasing |n|_inf for a stable ordering
    std::vector<double> terms;
    for (int i = -N; i <= N; ++i)
        for (int j = -N; j <= N; ++j) {
            Vec n(2);
            n << i, j;
            double r2 = (B * n).squaredNorm();
            if (r2 <= radius * radius) terms.push_back(std::exp(-r2 / c));
        }
    std::sort(terms.begin(), terms.end());
    double s = 0;
    for (double v : terms) s += v;
    return s;
}

// bound on sum over |l| > radius of exp(-|l|^2 / c): points with |l| < s number
// at most pi (s + diam)^2 / area.
inline double lattice_tail(const Mat& B, double c, double radius) {
    double area = std::abs(B.determinant());
    double diam = (B.col(0).cwiseAbs() + B.col(1).cwiseAbs()).norm();
    double s = 0;
    for (int j = 0; j < 100000; ++j) {
        double r = radius + j;
        double term = kPi * std::pow(r + 1 + diam, 2) / area * std::exp(-r * r / c);
        s += term;
        if (term < 1e-30 * std::max(s, 1e-300) || term == 0.0) break;
    }
    return s;
}

}  // namespace detail

inline TorusCheck torus_trace_check(const Mat& basis, double t, double target = 1e-14) {
    if (!(t > 0)) throw ValidationError("torus", "t must be positive");
    if (basis.rows() != 2 || basis.cols() != 2) throw ValidationError("torus", "basis must be 2x2 (columns)");
    double area = std::abs(basis.determinant());
    Eigen::JacobiSVD<Mat> svd(basis);
    if (!(area > 0) || svd.singularValues()(1) < 1e-8 * svd.singularValues()(0))
        throw ValidationError("torus", "degenerate basis");
    Mat dual = basis.inverse().transpose();
    TorusCheck out;
    double c_lhs = 1.0 / (4 * kPi * kPi * t), c_rhs = 4 * t;
    auto grow = [&](const Mat& B, double c, double& radius, double& tail) {
        radius = std::sqrt(c);
        while ((tail = detail::lattice_tail(B, c, radius)) > target) radius *= 1.25;
        return detail::lattice_gaussian_sum(B, c, radius);
    };
    out.lhs = grow(dual, c_lhs, out.lhs_radius, out.lhs_tail);
    double pref = area / (4 * kPi * t);
    out.rhs = pref * grow(basis, c_rhs, out.rhs_radius, out.rhs_tail);
    out.rhs_tail *= pref;
    out.gap = std::abs(out.lhs - out.rhs);
    return out;
}

// Laplace eigenvalues 4 pi^2 |k*|^2 of the flat torus up to lambda_max.
inline std::vector<double> torus_eigenvalues(const Mat& basis, double lambda_max) {
    Mat dual = basis.inverse().transpose();
    Eigen::JacobiSVD<Mat> svd(dual);
    double kmax = std::sqrt(lambda_max) / kTwoPi;
    int N = int(std::ceil(kmax / svd.singularValues()(1))) + 1;
    std::vector<double> ev;
    for (int i = -N; i <= N; ++i)
        for (int j = -N; j <= N; ++j) {
            Vec n(2);
            n << i, j;
            double l = 4 * kPi * kPi * (dual * n).squaredNorm();
            if (l <= lambda_max) ev.push_back(l);
        }
    std::sort(ev.begin(), ev.end());
    return ev;
}

}  // namespace symp
