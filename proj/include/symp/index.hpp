#pragma once

#include "path.hpp"

#include <array>
#include <sstream>

namespace symp {

struct IndexResult {
    cplx omega{1.0, 0.0};
    int index = 0;
    int nullity = 0;
    // diagnostics
    double rho_total = 0;       // continuous lift of arg rho along the evaluated path
    double endpoint_term = 0;   // unit-circle correction at the (perturbed) endpoint
    double rotation = 0;        // arg det u lift along the input path
    double residue = 0;         // distance of the pre-rounding value from an integer
    int family_min = 0, family_max = 0;
    bool perturbed = false;
};

// Normalized rotation: (-1)^{m/2} times the product of the unit-circle
// eigenvalues of Krein type (0,1), m the count of negative real
// eigenvalues. Continuous on Sp(2n); equals exp(i theta) on R(theta).
inline cplx rho(const Mat& M, const NumericPolicy& pol = default_policy()) {
    cplx r(1.0, 0.0);
    int neg_real = 0;
    for (const auto& c : spectral_clusters(M, pol)) {
        if (c.real) {
            if (c.value.real() < 0) neg_real += c.size;
            continue;
        }
        if (!c.on_circle) continue;
        for (int k = 0; k < c.q; ++k) r *= c.value;
    }
    if ((neg_real / 2) % 2) r = -r;
    return r;
}

namespace detail {

inline double principal_step(cplx from, cplx to) { return std::arg(to / from); }

// Continuous lift of arg f(gamma(t)) over the samples, bisecting segments
// whose increment is too large to be trusted.
template <class F>
double lift(const SymplecticPath& p, F&& f, double max_step = 1.0, int max_depth = 24) {
    double total = 0;
    std::function<double(double, const Mat&, cplx, double, const Mat&, cplx, int)> seg =
        [&](double t0, const Mat& m0, cplx v0, double t1, const Mat& m1, cplx v1, int depth) -> double {
        double d = principal_step(v0, v1);
        if (std::abs(d) <= max_step) return d;
        if (!p.prop || depth >= max_depth) {
#ifdef SYMP_DEBUG_LIFT
            std::cerr << "lift jump " << d << " t0=" << t0 << "\n" << m0 << "\n---\n" << m1 << "\n";
            std::cerr << "ev0 " << Eigen::EigenSolver<Mat>(m0).eigenvalues().transpose() << "\nev1 " << Eigen::EigenSolver<Mat>(m1).eigenvalues().transpose() << "\n";
#endif
            throw ConditioningError("refinement",
                                    "phase increment too large to track near t=" + std::to_string(t0));
        }
        double tm = 0.5 * (t0 + t1);
        Mat mm = p.prop(t0, tm) * m0;
        cplx vm = f(mm);
        return seg(t0, m0, v0, tm, mm, vm, depth + 1) + seg(tm, mm, vm, t1, m1, v1, depth + 1);
    };
    cplx prev = f(p.mats[0]);
    for (std::size_t k = 0; k + 1 < p.size(); ++k) {
        cplx next = f(p.mats[k + 1]);
        total += seg(p.times[k], p.mats[k], prev, p.times[k + 1], p.mats[k + 1], next, 0);
        prev = next;
    }
    return total;
}

inline double rho_lift(const SymplecticPath& p, const NumericPolicy& pol) {
    return lift(p, [&](const Mat& M) { return rho(M, pol); });
}

}  // namespace detail

// Total continuous argument of det u(t), u the unitary polar factor.
inline double rotation_number(const SymplecticPath& p) {
    return detail::lift(p, [](const Mat& M) {
        cplx d = polar_unitary(M).u.determinant();
        return d / std::abs(d);
    });
}

// Endpoint correction: half the sum over non-real unit-circle eigenvalues of
// (arg(lambda/omega) - pi), weighted +1 for Krein type (0,1) and -1 for (1,0).
inline double endpoint_term(const Mat& M, cplx omega, const NumericPolicy& pol = default_policy()) {
    double g = 0;
    for (const auto& c : spectral_clusters(M, pol)) {
        if (!c.on_circle || c.real) continue;
        double a = arg_0_2pi(c.value / omega) - kPi;
        g += 0.5 * (c.q - c.p) * a;
    }
    return g;
}

namespace detail {

inline int round_index(double value, double& residue) {
    double r = std::round(value);
    residue = std::abs(value - r);
    if (residue > 1e-6) {
        std::ostringstream os;
        os << "index value " << value << " is not within 1e-6 of an integer";
        throw ConditioningError("rounding", os.str());
    }
    return static_cast<int>(r);
}

// Index of a path whose endpoint is omega-nondegenerate, given the lift.
inline int nondegenerate_value(double lift_total, const Mat& end, cplx omega, const NumericPolicy& pol,
                               double& residue, double& g) {
    g = endpoint_term(end, omega, pol);
    return round_index((lift_total - g) / kPi, residue);
}

// Lift along a short tail s -> end * tail(s), s in [0,1].
inline double tail_lift(const Mat& end, const std::function<Mat(double)>& tail, const NumericPolicy& pol,
                        int samples = 8) {
    SymplecticPath q;
    q.n = half_dim(end);
    q.tau = 1.0;
    auto e = end;
    auto tf = tail;
    q.prop = [e, tf](double a, double b) { return Mat(e * tf(b) * sp_inverse(tf(a)) * sp_inverse(e)); };
    for (int k = 0; k <= samples; ++k) {
        double s = double(k) / samples;
        q.times.push_back(s);
        q.mats.push_back(end * tail(s));
    }
    return lift(q, [&](const Mat& M) { return rho(M, pol); });
}

}  // namespace detail

struct IndexOptions {
    double eps = 1e-5;                           // clockwise perturbation angle
    std::array<double, 2> tail_angles{1e-3, 1e-4};
    int random_perturbations = 8;
    double random_scale = 1e-4;
    bool run_family = true;
};

// omega-index with nullity. Nondegenerate endpoints use the lift formula
// directly; degenerate ones are pushed off by a small clockwise rotation,
// and the perturbation family checks the spread max - min = nullity.
inline IndexResult omega_index(const SymplecticPath& p, cplx omega,
                               const NumericPolicy& pol = default_policy(),
                               const IndexOptions& opt = IndexOptions{}) {
    if (std::abs(std::abs(omega) - 1.0) > 1e-8)
        throw ValidationError("omega", "omega must have unit modulus");
    omega /= std::abs(omega);
    IndexResult res;
    res.omega = omega;
    const Mat& E = p.end();
    const int n = p.n;
    res.nullity = nullity(E, omega, pol.tol_rank);
    double base = detail::rho_lift(p, pol);
    res.rotation = 0;

    if (res.nullity == 0) {
        res.rho_total = base;
        res.index = detail::nondegenerate_value(base, E, omega, pol, res.residue, res.endpoint_term);
        res.family_min = res.family_max = res.index;
        return res;
    }

    res.perturbed = true;
    auto eval_tail = [&](const std::function<Mat(double)>& tail, double& lift_out, double& g,
                         double& residue) {
        Mat Mp = E * tail(1.0);
        if (nullity(Mp, omega, pol.tol_rank) != 0)
            throw ConditioningError("perturbation-coverage", "perturbed endpoint is still degenerate");
        lift_out = base + detail::tail_lift(E, tail, pol);
        return detail::nondegenerate_value(lift_out, Mp, omega, pol, residue, g);
    };

    double eps = opt.eps;
    auto cw = [eps, n](double s) { return rotation(-eps * s, n); };
    res.index = eval_tail(cw, res.rho_total, res.endpoint_term, res.residue);
    res.family_min = res.family_max = res.index;
    if (!opt.run_family) return res;

    std::vector<int> values{res.index};
    int cw_min = res.index, ccw_max = res.index;
    for (double th : opt.tail_angles)
        for (int sgn : {-1, 1}) {
            double l, g, r;
            int v = eval_tail([th, sgn, n](double s) { return rotation(sgn * th * s, n); }, l, g, r);
            values.push_back(v);
            if (sgn < 0) cw_min = std::min(cw_min, v);
            else ccw_max = std::max(ccw_max, v);
        }
    std::mt19937_64 rng(pol.seed);
    for (int k = 0; k < opt.random_perturbations; ++k) {
        Mat S = random_symmetric(rng, 2 * n, opt.random_scale);
        Mat JS = J(n) * S;
        double l, g, r;
        values.push_back(eval_tail([JS](double s) { return Mat((s * JS).exp()); }, l, g, r));
    }
    res.family_min = *std::min_element(values.begin(), values.end());
    res.family_max = *std::max_element(values.begin(), values.end());
    if (res.family_max - res.family_min != res.nullity || res.family_min != cw_min ||
        ccw_max != res.family_max || cw_min != res.index) {
        std::ostringstream os;
        os << "perturbation family spread " << res.family_max - res.family_min << " vs nullity "
           << res.nullity;
        throw ConditioningError("perturbation-coverage", os.str());
    }
    res.index = res.family_min;
    return res;
}

inline IndexResult index_degenerate(const SymplecticPath& p, const NumericPolicy& pol = default_policy(),
                                    const IndexOptions& opt = IndexOptions{}) {
    IndexResult r = omega_index(p, cplx(1, 0), pol, opt);
    r.rotation = rotation_number(p);
    return r;
}

inline IndexResult index_nondegenerate(const SymplecticPath& p, const NumericPolicy& pol = default_policy()) {
    if (nullity(p.end(), cplx(1, 0), pol.tol_rank) != 0)
        throw ValidationError("degenerate", "endpoint has eigenvalue 1; use index_degenerate");
    return index_degenerate(p, pol);
}

inline int i1(const SymplecticPath& p, const NumericPolicy& pol = default_policy()) {
    return omega_index(p, cplx(1, 0), pol).index;
}

struct BottResult {
    int lhs_index = 0, rhs_index = 0;
    int lhs_nullity = 0, rhs_nullity = 0;
};

inline BottResult bott_check(const SymplecticPath& p, int m, cplx z,
                             const NumericPolicy& pol = default_policy(),
                             const IndexOptions& opt = IndexOptions{}) {
    if (m < 1) throw ValidationError("bott", "m must be positive");
    BottResult b;
    IndexResult l = omega_index(iterate_path(p, m), z, pol, opt);
    b.lhs_index = l.index;
    b.lhs_nullity = l.nullity;
    double a0 = std::arg(z);
    for (int k = 0; k < m; ++k) {
        cplx w = unit((a0 + kTwoPi * k) / m);
        IndexResult r = omega_index(p, w, pol, opt);
        b.rhs_index += r.index;
        b.rhs_nullity += r.nullity;
    }
    return b;
}

// Index of a curve f: [a, b] -> Sp(2n) with free endpoints. A reference path
// xi runs from I to f(a); the curve is appended and the reference removed.
inline int curve_index(int n, std::function<Mat(double)> f, double a, double b,
                       const NumericPolicy& pol = default_policy()) {
    if (!(b > a)) throw ValidationError("path", "curve interval must have b > a");
    Mat start = f(a);
    if (start.rows() != 2 * n || !check_symplectic(start, pol.tol_sym))
        throw ValidationError("symplectic", "curve start is not symplectic");
    SymplecticPath xi = path_to(start);
    Mat inv = sp_inverse(start);
    SymplecticPath eta = append_tail(xi, [f, inv, a](double s) { return Mat(inv * f(a + s)); }, b - a, 16);
    return i1(eta, pol) - i1(xi, pol);
}

// Brute-force Sp(2) oracle: signed crossings of the clockwise-shifted path
// exp(-eps J) gamma(t) through the omega-degenerate surface
// (r^2+z^2+1) cos(theta) = 2 r Re(omega), i.e. trace = 2 Re(omega).
struct CrossingOptions {
    double eps = 1e-3;  // upper bound; shrunk near a degenerate endpoint
    double resolution = 1e-4;  // relative time step
    double tangent_tol = 1e-6;
};

inline int sp2_crossing_oracle(const SymplecticPath& p, cplx omega, const CrossingOptions& opt = {}) {
    if (p.n != 1) throw ValidationError("dimension", "crossing oracle needs a path in Sp(2)");
    omega /= std::abs(omega);
    // The shift must not carry a nondegenerate endpoint across the surface.
    double eps = opt.eps;
    const Mat end = p.end();
    double f_end = end.trace() - 2 * omega.real();
    if (std::abs(f_end) > 1e-12)
        while (eps > 1e-9) {
            double f_shift = (R(-eps) * end).trace() - 2 * omega.real();
            if ((f_shift < 0) == (f_end < 0) && std::abs(f_shift) >= 0.5 * std::abs(f_end)) break;
            eps *= 0.5;
        }
    Mat shift = R(-eps);
    auto f = [&](double t) { return (shift * p.at(t)).trace() - 2 * omega.real(); };
    const double tol_t = 1e-14 * p.tau;

    int count = 0;
    auto crossing = [&](double a, double b, double fa) {
        for (int it = 0; it < 200 && b - a > tol_t; ++it) {
            double m = 0.5 * (a + b), fm = f(m);
            if ((fa < 0) == (fm < 0)) a = m, fa = fm;
            else b = m;
        }
        double tc = 0.5 * (a + b);
        double h = 1e-7 * p.tau;
        double lo = std::max(0.0, tc - h), hi = std::min(p.tau, tc + h);
        double df = (f(hi) - f(lo)) / (hi - lo);
        if (std::abs(df) * p.tau < opt.tangent_tol)
            throw ConditioningError("oracle-inconclusive", "tangential crossing near t=" + std::to_string(tc));
        Sp2Coords c = sp2_model(shift * p.at(tc));
        count -= (df > 0 ? 1 : -1) * (std::sin(c.theta) > 0 ? 1 : -1);
    };

    // Uniform grid, plus a geometric one near t = 0 where the shifted path
    // leaves the cone point on the time scale of eps.
    int uniform = static_cast<int>(std::ceil(1.0 / opt.resolution));
    std::vector<double> T{0.0};
    for (double t = 0.01 * eps * p.tau; t < p.tau / uniform; t *= 1.2) T.push_back(t);
    for (int k = 1; k <= uniform; ++k) T.push_back(p.tau * k / uniform);
    int steps = static_cast<int>(T.size()) - 1;
    std::vector<double> F(T.size());
    for (std::size_t k = 0; k < T.size(); ++k) F[k] = f(T[k]);
    for (int k = 0; k < steps; ++k) {
        if ((F[k] < 0) != (F[k + 1] < 0)) crossing(T[k], T[k + 1], F[k]);
        // A pair of crossings can hide inside one cell around a local
        // extremum of f; golden-section search for the extremum.
        if (k + 2 <= steps && (F[k] < 0) == (F[k + 1] < 0) && (F[k + 1] < 0) == (F[k + 2] < 0)) {
            double s = F[k + 1] < 0 ? 1.0 : -1.0;  // maximize s*f
            if (s * F[k + 1] > s * F[k] && s * F[k + 1] >= s * F[k + 2]) {
                double a = T[k], b = T[k + 2];
                const double g = 0.5 * (std::sqrt(5.0) - 1.0);
                double x1 = b - g * (b - a), x2 = a + g * (b - a);
                double f1 = s * f(x1), f2 = s * f(x2);
                for (int it = 0; it < 100 && b - a > tol_t; ++it) {
                    if (f1 < f2) a = x1, x1 = x2, f1 = f2, x2 = a + g * (b - a), f2 = s * f(x2);
                    else b = x2, x2 = x1, f2 = f1, x1 = b - g * (b - a), f1 = s * f(x1);
                }
                double tm = 0.5 * (a + b), fm = f(tm);
                if (s * fm >= 0) {
                    if (std::abs(fm) < 1e-13)
                        throw ConditioningError("oracle-inconclusive",
                                                "tangential contact near t=" + std::to_string(tm));
                    crossing(T[k], tm, F[k]);
                    crossing(tm, T[k + 2], fm);
                }
            }
        }
    }
    if (std::abs(omega - cplx(1, 0)) < 1e-12) count -= 1;
    return count;
}

}  // namespace symp
