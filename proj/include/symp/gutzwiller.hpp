#pragma once

#include "index.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <functional>
#include <random>
#include <vector>

namespace symp {

// Natural Hamiltonian |p|^2 / 2m + V(q) on R^n.
struct NaturalSystem {
    std::string name;
    int n = 1;
    double mass = 1.0;
    std::function<double(const Vec&)> V;
    Vec center;                // a point with {V < E} star-shaped around it
    bool star_shaped = true;   // enables the quadrature route
};

inline NaturalSystem harmonic_system(const Vec& omega, double mass = 1.0) {
    NaturalSystem s;
    s.name = "harmonic";
    s.n = int(omega.size());
    s.mass = mass;
    s.V = [omega, mass](const Vec& q) { return 0.5 * mass * (omega.array().square() * q.array().square()).sum(); };
    s.center = Vec::Zero(s.n);
    return s;
}

// Free particle in [0, L]; V is infinite outside.
inline NaturalSystem box_system(double L, double mass = 1.0) {
    NaturalSystem s;
    s.name = "box";
    s.n = 1;
    s.mass = mass;
    s.V = [L](const Vec& q) { return (q(0) > 0 && q(0) < L) ? 0.0 : std::numeric_limits<double>::infinity(); };
    s.center = Vec::Constant(1, 0.5 * L);
    return s;
}

enum class WeylRoute { Auto, Quadrature, MonteCarlo };

struct WeylResult {
    double value = 0;
    double std_error = 0;  // zero for the quadrature route
    std::string route;
};

namespace detail {

// Distance from the center to the boundary of {V < E} along dir.
inline double boundary_radius(const NaturalSystem& s, const Vec& dir, double E) {
    auto inside = [&](double r) { return s.V(s.center + r * dir) < E; };
    double hi = 1.0;
    while (inside(hi)) {
        hi *= 2;
        if (hi > 1e8) throw ValidationError("domain", "region {V < E} is unbounded");
    }
    double lo = 0;
    for (int k = 0; k < 200 && hi - lo > 1e-15 * hi; ++k) {
        double mid = 0.5 * (lo + hi);
        (inside(mid) ? lo : hi) = mid;
    }
    return lo;
}

inline double weyl_prefactor(int n, double mass, double hbar) {
    return mass / (std::pow(hbar, n) * std::pow(2.0, n - 1) * std::pow(kPi, 0.5 * n) * std::tgamma(0.5 * n));
}

inline double weyl_integrand(const NaturalSystem& s, const Vec& q, double E) {
    double k = E - s.V(q);
    if (!(k > 0)) return 0.0;
    return std::pow(2 * s.mass * k, 0.5 * (s.n - 2));
}

// Integral over {V < E} of the integrand along one ray, with the r^{n-1} Jacobian.
inline double radial_integral(const NaturalSystem& s, const Vec& dir, double E) {
    double rho = boundary_radius(s, dir, E);
    if (rho <= 0) return 0.0;
    boost::math::quadrature::tanh_sinh<double> ts;
    auto f = [&](double r) { return weyl_integrand(s, s.center + r * dir, E) * std::pow(r, s.n - 1); };
    return ts.integrate(f, 0.0, rho, 1e-12);
}

inline double configuration_integral(const NaturalSystem& s, double E) {
    if (s.n == 1) {
        Vec e(1);
        e(0) = 1;
        return radial_integral(s, e, E) + radial_integral(s, -e, E);
    }
    auto circle = [&](auto&& ray, double scale) {
        double prev = 0;
        for (int N = 16; N <= 8192; N *= 2) {
            double sum = 0;
            for (int k = 0; k < N; ++k) sum += ray(kTwoPi * k / N);
            double cur = sum * kTwoPi / N * scale;
            if (N > 16 && std::abs(cur - prev) <= 1e-11 * std::abs(cur)) return cur;
            prev = cur;
        }
        throw ConditioningError("quadrature", "angular quadrature did not converge");
    };
    if (s.n == 2) {
        return circle([&](double phi) {
            Vec d(2);
            d << std::cos(phi), std::sin(phi);
            return radial_integral(s, d, E);
        }, 1.0);
    }
    if (s.n == 3) {
        auto in_u = [&](double u) {
            double w = std::sqrt(std::max(0.0, 1 - u * u));
            return circle([&](double phi) {
                Vec d(3);
                d << w * std::cos(phi), w * std::sin(phi), u;
                return radial_integral(s, d, E);
            }, 1.0);
        };
        return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(in_u, -1.0, 1.0, 12, 1e-11);
    }
    throw ValidationError("weyl", "quadrature route supports n <= 3");
}

inline WeylResult weyl_monte_carlo(const NaturalSystem& s, double E, double hbar, std::uint64_t seed,
                                   int samples) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    // bounding box from boundary probes, then checked on its faces
    Vec half = Vec::Zero(s.n);
    for (int k = 0; k < 64 * s.n; ++k) {
        Vec d(s.n);
        for (int i = 0; i < s.n; ++i) d(i) = nd(rng);
        d.normalize();
        double r = boundary_radius(s, d, E);
        half = half.cwiseMax((r * d).cwiseAbs());
    }
    half *= 1.25;
    std::uniform_real_distribution<double> u(-1, 1);
    for (int grow = 0;; ++grow) {
        bool escaped = false;
        for (int k = 0; k < 2000 && !escaped; ++k) {
            Vec q(s.n);
            for (int i = 0; i < s.n; ++i) q(i) = u(rng);
            int face = k % s.n;
            q(face) = q(face) < 0 ? -1 : 1;
            escaped = s.V(s.center + half.cwiseProduct(q)) < E;
        }
        if (!escaped) break;
        if (grow > 20) throw ValidationError("domain", "region {V < E} is unbounded");
        half *= 2;
    }
    double vol = (2 * half).prod();
    double sum = 0, sum2 = 0;
    for (int k = 0; k < samples; ++k) {
        Vec q(s.n);
        for (int i = 0; i < s.n; ++i) q(i) = u(rng);
        double f = weyl_integrand(s, s.center + half.cwiseProduct(q), E);
        sum += f;
        sum2 += f * f;
    }
    double mean = sum / samples;
    double var = std::max(0.0, sum2 / samples - mean * mean);
    double c = weyl_prefactor(s.n, s.mass, hbar) * vol;
    return {c * mean, c * std::sqrt(var / samples), "monte-carlo"};
}

}  // namespace detail

inline WeylResult weyl_term(const NaturalSystem& s, double E, double hbar = 1.0, WeylRoute route = WeylRoute::Auto,
                            std::uint64_t seed = default_policy().seed, int samples = 400000) {
    if (!(hbar > 0)) throw ValidationError("weyl", "hbar must be positive");
    if (s.center.size() != s.n) throw ValidationError("weyl", "center has wrong dimension");
    if (!(s.V(s.center) < E)) throw ValidationError("weyl", "E must lie above the potential minimum");
    bool quad = route == WeylRoute::Quadrature || (route == WeylRoute::Auto && s.star_shaped && s.n <= 3);
    if (quad)
        return {detail::weyl_prefactor(s.n, s.mass, hbar) * detail::configuration_integral(s, E), 0.0, "quadrature"};
    return detail::weyl_monte_carlo(s, E, hbar, seed, samples);
}

struct PeriodicOrbit {
    std::string label;
    double period = 0;       // full period of this repetition
    double prim_period = 0;  // period of the primitive orbit
    double action = 0;       // action at reference energy
    double energy = 0;       // reference energy; A(E') = action + period (E' - energy)
    Mat transverse_monodromy;
    int index = 0;
    int transverse_index = 0;
    int repetition = 1;

    double action_at(double E) const { return action + period * (E - energy); }
};

struct SpectralDensity {
    std::vector<double> energies;
    std::vector<double> values;
    double sigma = 0;
};

struct DensityDiagnostics {
    std::vector<std::string> rejected;
};

inline std::vector<double> energy_grid(double emin, double emax, int steps) {
    if (steps < 2 || !(emax > emin)) throw ValidationError("grid", "need emax > emin and at least 2 points");
    std::vector<double> g(steps);
    for (int k = 0; k < steps; ++k) g[k] = emin + (emax - emin) * k / (steps - 1);
    return g;
}

inline void check_grid(const std::vector<double>& grid) {
    for (std::size_t k = 1; k < grid.size(); ++k)
        if (!(grid[k] > grid[k - 1])) throw ValidationError("grid", "energy grid must be strictly ascending");
}

inline double orbit_determinant(const PeriodicOrbit& o) {
    int d = int(o.transverse_monodromy.rows());
    return (Mat::Identity(d, d) - o.transverse_monodromy).determinant();
}

inline SpectralDensity gutzwiller_density(const std::vector<PeriodicOrbit>& orbits, const std::vector<double>& grid,
                                          double hbar, double sigma, const NaturalSystem* system = nullptr,
                                          DensityDiagnostics* diag = nullptr,
                                          const NumericPolicy& pol = default_policy()) {
    if (!(hbar > 0) || !(sigma > 0)) throw ValidationError("density", "hbar and sigma must be positive");
    check_grid(grid);
    SpectralDensity out;
    out.energies = grid;
    out.sigma = sigma;
    out.values.assign(grid.size(), 0.0);
    if (system)
        for (std::size_t k = 0; k < grid.size(); ++k) out.values[k] = weyl_term(*system, grid[k], hbar).value;
    for (const auto& o : orbits) {
        double det = orbit_determinant(o);
        if (!(std::abs(det) > pol.tol_det)) {
            if (diag) diag->rejected.push_back(o.label);
            continue;
        }
        double damp = std::exp(-0.5 * std::pow(o.period * sigma / hbar, 2));
        double amp = o.prim_period / std::sqrt(std::abs(det)) * damp / (kPi * hbar);
        if (amp == 0.0) continue;
        for (std::size_t k = 0; k < grid.size(); ++k)
            out.values[k] += amp * std::cos(o.action_at(grid[k]) / hbar - 0.5 * kPi * o.index);
    }
    return out;
}

inline SpectralDensity exact_spectrum_density(const std::vector<double>& levels, const std::vector<double>& grid,
                                              double sigma) {
    if (!(sigma > 0)) throw ValidationError("density", "sigma must be positive");
    check_grid(grid);
    SpectralDensity out;
    out.energies = grid;
    out.sigma = sigma;
    out.values.assign(grid.size(), 0.0);
    double c = 1.0 / (sigma * std::sqrt(kTwoPi));
    for (double e : levels)
        for (std::size_t k = 0; k < grid.size(); ++k)
            out.values[k] += c * std::exp(-0.5 * std::pow((grid[k] - e) / sigma, 2));
    return out;
}

inline std::vector<double> anisotropic_ho_levels(double w1, double w2, double hbar, double emax) {
    std::vector<double> lv;
    for (int a = 0; hbar * w1 * (a + 0.5) + 0.5 * hbar * w2 <= emax; ++a)
        for (int b = 0; hbar * (w1 * (a + 0.5) + w2 * (b + 0.5)) <= emax; ++b)
            lv.push_back(hbar * (w1 * (a + 0.5) + w2 * (b + 0.5)));
    std::sort(lv.begin(), lv.end());
    return lv;
}

inline void check_nonresonant(double w1, double w2, int max_rep) {
    for (double ratio : {w1 / w2, w2 / w1})
        for (int q = 1; q <= max_rep; ++q) {
            double p = std::round(ratio * q);
            if (std::abs(ratio - p / q) <= 1e-6)
                throw ValidationError("resonance", "frequency ratio too close to a rational with small denominator");
        }
}

// Orbits along each axis of V = (w1^2 q1^2 + w2^2 q2^2)/2, repetitions 1..max_rep.
// The phase index adds to the transverse index the contribution of the
// flow direction, i1 + nu/2 of the axis rotation over the same period.
inline std::vector<PeriodicOrbit> anisotropic_ho_catalog(double w1, double w2, double E, int max_rep,
                                                         const NumericPolicy& pol = default_policy()) {
    if (!(w1 > 0) || !(w2 > 0)) throw ValidationError("catalog", "frequencies must be positive");
    if (max_rep < 1) throw ValidationError("catalog", "max_repetition must be positive");
    check_nonresonant(w1, w2, max_rep);
    std::vector<PeriodicOrbit> out;
    const double w[2] = {w1, w2};
    for (int j = 0; j < 2; ++j) {
        double wj = w[j], wk = w[1 - j];
        for (int r = 1; r <= max_rep; ++r) {
            PeriodicOrbit o;
            o.label = "axis" + std::to_string(j + 1) + "^" + std::to_string(r);
            o.repetition = r;
            o.prim_period = kTwoPi / wj;
            o.period = r * o.prim_period;
            o.energy = E;
            o.action = o.period * E;
            o.transverse_monodromy = R(o.period * wk);
            double det = orbit_determinant(o);
            double expect = 4 * std::pow(std::sin(kPi * r * wk / wj), 2);
            if (std::abs(det - expect) > 1e-9 * std::max(1.0, expect) || std::abs(det) <= pol.tol_det)
                throw ConditioningError("orbit", "degenerate orbit " + o.label);
            o.transverse_index = i1(rotation_path(wk, o.period), pol);
            IndexResult along = omega_index(rotation_path(wj, o.period), cplx(1, 0), pol);
            o.index = o.transverse_index + along.index + along.nullity / 2;
            out.push_back(std::move(o));
        }
    }
    return out;
}

// det(I - M) from the action's second-derivative blocks, two ways.
// a = d2A/dq dq, b = d2A/dq dq', c = d2A/dq' dq, d = d2A/dq' dq'.
inline std::pair<double, double> monodromy_det_identity(const Mat& a, const Mat& b, const Mat& c, const Mat& d) {
    int k = int(a.rows());
    for (const Mat* m : {&a, &b, &c, &d})
        if (m->rows() != k || m->cols() != k) throw ValidationError("blocks", "blocks must be square of equal size");
    Eigen::FullPivLU<Mat> lu(c);
    Eigen::JacobiSVD<Mat> svd(c);
    if (svd.singularValues()(k - 1) <= 1e-12 * std::max(1.0, svd.singularValues()(0)))
        throw ConditioningError("singular", "mixed block is singular");
    Mat ci = lu.inverse();
    Mat M(2 * k, 2 * k);
    M << -ci * d, -ci, b - a * ci * d, -a * ci;
    double lhs = (Mat::Identity(2 * k, 2 * k) - M).determinant();
    double rhs = (a + b + c + d).determinant() / c.determinant();
    return {lhs, rhs};
}

}  // namespace symp
