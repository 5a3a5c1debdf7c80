#pragma once

#include "spcore.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>

namespace symp {

// Propagator between two times: gamma(t1) = P(t0, t1) * gamma(t0).
using Propagator = std::function<Mat(double t0, double t1)>;

struct SymplecticPath {
    int n = 1;
    double tau = 1.0;
    std::vector<double> times;
    std::vector<Mat> mats;
    Propagator prop;        // sample-only paths interpolate between their samples
    std::string generator;  // "rotation", "diagonal", "coefficient", "samples", ...

    const Mat& end() const { return mats.back(); }
    std::size_t size() const { return times.size(); }
    bool refinable() const { return static_cast<bool>(prop); }

    // Evaluate anywhere on [0, tau]. Between samples of a sample-only path
    // the one-step map is interpolated through its logarithm, which keeps
    // the result symplectic.
    Mat at(double t) const {
        if (t <= times.front()) return mats.front();
        if (t >= times.back()) {
            if (t == times.back() || !prop) return mats.back();
            return prop(times.back(), t) * mats.back();
        }
        auto it = std::upper_bound(times.begin(), times.end(), t);
        std::size_t k = static_cast<std::size_t>(it - times.begin()) - 1;
        if (t == times[k]) return mats[k];
        if (prop) return prop(times[k], t) * mats[k];
        Mat step = mats[k + 1] * sp_inverse(mats[k]);
        double s = (t - times[k]) / (times[k + 1] - times[k]);
        Mat L = step.log().real();
        return (s * L).exp() * mats[k];
    }
};

inline double step_size(const Mat& a, const Mat& b) {
    return (b * sp_inverse(a) - Mat::Identity(a.rows(), a.cols())).cwiseAbs().rowwise().sum().maxCoeff();
}

// Trust-region contract between consecutive samples.
inline constexpr double kTrustRadius = 0.5;

// Insert midpoints until every one-step map lies in the trust region.
inline void enforce_trust_region(SymplecticPath& p, double radius = kTrustRadius, int max_depth = 30) {
    std::vector<double> T{p.times.front()};
    std::vector<Mat> Ms{p.mats.front()};
    std::function<void(double, const Mat&, double, const Mat&, int)> go =
        [&](double t0, const Mat& m0, double t1, const Mat& m1, int depth) {
            if (step_size(m0, m1) < radius) {
                T.push_back(t1);
                Ms.push_back(m1);
                return;
            }
            if (!p.prop)
                throw ConditioningError("refinement",
                                        "trust region violated on a path without a generator near t=" +
                                            std::to_string(t0));
            if (depth >= max_depth)
                throw ConditioningError("refinement", "trust-region refinement depth exceeded");
            double tm = 0.5 * (t0 + t1);
            Mat mm = p.prop(t0, tm) * m0;
            go(t0, m0, tm, mm, depth + 1);
            go(tm, mm, t1, m1, depth + 1);
        };
    for (std::size_t k = 0; k + 1 < p.times.size(); ++k)
        go(p.times[k], p.mats[k], p.times[k + 1], p.mats[k + 1], 0);
    p.times = std::move(T);
    p.mats = std::move(Ms);
}

inline void validate_path(const SymplecticPath& p) {
    if (p.times.empty() || p.times.size() != p.mats.size())
        throw ValidationError("path", "empty path or mismatched samples");
    if (p.times.front() != 0.0) throw ValidationError("path", "first sample time must be 0");
    if ((p.mats.front() - Mat::Identity(2 * p.n, 2 * p.n)).cwiseAbs().maxCoeff() > 1e-12)
        throw ValidationError("path", "first sample must be the identity");
    for (std::size_t k = 0; k < p.size(); ++k) {
        if (p.mats[k].rows() != 2 * p.n) throw ValidationError("path", "sample of wrong size");
        if (k > 0 && !(p.times[k] > p.times[k - 1]))
            throw ValidationError("path", "sample times must increase");
        if (!check_symplectic(p.mats[k], 1e-8))
            throw ValidationError("path", "sample " + std::to_string(k) + " is not symplectic");
    }
}

// Path from a closed-form evaluator gamma(t), sampled uniformly then refined.
inline SymplecticPath path_from_function(int n, double tau, std::function<Mat(double)> f,
                                         int samples = 32, std::string gen = "function") {
    SymplecticPath p;
    p.n = n;
    p.tau = tau;
    p.generator = std::move(gen);
    auto fn = std::make_shared<std::function<Mat(double)>>(std::move(f));
    p.prop = [fn](double t0, double t1) -> Mat { return (*fn)(t1) * sp_inverse((*fn)(t0)); };
    for (int k = 0; k <= samples; ++k) {
        double t = tau * k / samples;
        p.times.push_back(t);
        p.mats.push_back(k == 0 ? Mat::Identity(2 * n, 2 * n) : (*fn)(t));
    }
    enforce_trust_region(p);
    return p;
}

inline SymplecticPath path_from_samples(int n, std::vector<double> times, std::vector<Mat> mats) {
    SymplecticPath p;
    p.n = n;
    p.times = std::move(times);
    p.mats = std::move(mats);
    p.tau = p.times.empty() ? 0.0 : p.times.back();
    p.generator = "samples";
    validate_path(p);
    enforce_trust_region(p);  // throws: no generator to refine with
    // Later operations (tails, iterates, products) may still need values
    // between samples; those use the logarithmic interpolation of at().
    auto copy = std::make_shared<SymplecticPath>(p);
    p.prop = [copy](double a, double b) -> Mat { return copy->at(b) * sp_inverse(copy->at(a)); };
    return p;
}

// gamma(t) = R(theta(t))^{diamond n} with theta linear: rate * t.
inline SymplecticPath rotation_path(double rate, double tau, int n = 1) {
    return path_from_function(n, tau, [rate, n](double t) { return rotation(rate * t, n); },
                              std::max(8, int(std::abs(rate) * tau / 0.3) + 1), "rotation");
}

// gamma(t) = D(lambda(t))^{diamond n}, lambda(t) = 1 + rate*t.
inline SymplecticPath diagonal_path(double rate, double tau, int n = 1) {
    return path_from_function(n, tau,
                              [rate, n](double t) { return diamond_power(D(1.0 + rate * t), n); }, 16,
                              "diagonal");
}

// Concatenation: gamma on [0, tau], then gamma(tau) followed by the
// closed-form tail tail(s), s in [0, len], with tail(0) = I.
inline SymplecticPath append_tail(const SymplecticPath& g, std::function<Mat(double)> tail, double len,
                                  int samples = 8) {
    SymplecticPath p = g;
    Mat E = g.end();
    double t0 = g.tau;
    auto tl = std::make_shared<std::function<Mat(double)>>(std::move(tail));
    Propagator base = g.prop;
    p.prop = [base, tl, t0, E](double a, double b) -> Mat {
        auto eval = [&](double t) -> Mat { return t <= t0 ? Mat() : Mat(E * (*tl)(t - t0)); };
        if (b <= t0) return base(a, b);
        if (a >= t0) return eval(b) * sp_inverse(eval(a));
        return eval(b) * sp_inverse(E) * base(a, t0);
    };
    for (int k = 1; k <= samples; ++k) {
        double s = len * k / samples;
        p.times.push_back(t0 + s);
        p.mats.push_back(E * (*tl)(s));
    }
    p.tau = t0 + len;
    p.generator = g.generator + "+tail";
    enforce_trust_region(p);
    return p;
}

// Clockwise (sign=-1) or counterclockwise (sign=+1) rotation tail R(sign*theta*s)^{diamond n}.
inline SymplecticPath rotation_tail(const SymplecticPath& g, double theta, int sign = -1) {
    int n = g.n;
    return append_tail(g, [theta, sign, n](double s) { return rotation(sign * theta * s, n); }, 1.0, 4);
}

// gamma^m(t) = gamma(t - j tau) gamma(tau)^j.
inline SymplecticPath iterate_path(const SymplecticPath& g, int m) {
    if (m < 1) throw ValidationError("iterate", "m must be positive");
    if (m == 1) return g;
    SymplecticPath p;
    p.n = g.n;
    p.tau = g.tau * m;
    p.generator = g.generator;
    Mat E = g.end();
    Mat Ej = Mat::Identity(2 * g.n, 2 * g.n);
    for (int j = 0; j < m; ++j) {
        for (std::size_t k = (j == 0 ? 0 : 1); k < g.size(); ++k) {
            p.times.push_back(g.times[k] + j * g.tau);
            p.mats.push_back(g.mats[k] * Ej);
        }
        Ej = E * Ej;
    }
    {
        Propagator base = g.prop;
        double tau = g.tau;
        p.prop = [base, tau](double a, double b) -> Mat {
            // split at period boundaries; the propagator is invariant under the period shift
            Mat P = Mat();
            double t = a;
            while (t < b) {
                double j = std::floor(t / tau + 1e-12);
                double stop = std::min(b, (j + 1) * tau);
                Mat step = base(t - j * tau, stop - j * tau);
                P = P.size() ? Mat(step * P) : step;
                t = stop;
            }
            return P;
        };
    }
    enforce_trust_region(p);
    return p;
}

// Diamond product of two paths on the same duration, sampled on the union grid.
inline SymplecticPath diamond_path(const SymplecticPath& a, const SymplecticPath& b) {
    if (std::abs(a.tau - b.tau) > 1e-12) throw ValidationError("diamond", "durations differ");
    SymplecticPath p;
    p.n = a.n + b.n;
    p.tau = a.tau;
    p.generator = "diamond";
    std::vector<double> T = a.times;
    T.insert(T.end(), b.times.begin(), b.times.end());
    std::sort(T.begin(), T.end());
    T.erase(std::unique(T.begin(), T.end(), [](double x, double y) { return std::abs(x - y) < 1e-14; }),
            T.end());
    for (double t : T) {
        p.times.push_back(t);
        p.mats.push_back(diamond(a.at(t), b.at(t)));
    }
    Propagator pa = a.prop, pb = b.prop;
    p.prop = [pa, pb](double s, double t) { return diamond(pa(s, t), pb(s, t)); };
    enforce_trust_region(p);
    return p;
}

// Monotone reparametrization t -> phi(t) with phi(0)=0, phi(tau)=tau.
inline SymplecticPath reparametrize(const SymplecticPath& g, std::function<double(double)> phi,
                                    int samples) {
    auto gp = std::make_shared<SymplecticPath>(g);
    return path_from_function(g.n, g.tau, [gp, phi](double t) { return gp->at(phi(t)); }, samples,
                              g.generator + "+reparam");
}

// A path from I to M: t -> exp(t log M) when a real logarithm exists,
// otherwise exp(t log A) U(t) from the polar factors.
inline SymplecticPath path_to(const Mat& M) {
    require_symplectic(M);
    int n = half_dim(M);
    Mat L = M.log();
    bool ok = L.allFinite() && (L.exp() - M).cwiseAbs().maxCoeff() < 1e-9 &&
              (J(n) * L + L.transpose() * J(n)).cwiseAbs().maxCoeff() < 1e-9;
    if (ok) {
        return path_from_function(n, 1.0, [L](double t) { return Mat((t * L).exp()); },
                                  std::max(16, int(L.norm() / 0.2) + 1), "geodesic");
    }
    Polar pol = polar_unitary(M);
    Eigen::SelfAdjointEigenSolver<Mat> es(pol.A);
    Mat logA = es.eigenvectors() * es.eigenvalues().array().log().matrix().asDiagonal() *
               es.eigenvectors().transpose();
    Eigen::ComplexEigenSolver<CMat> ces(pol.u);
    CVec ph(n);
    for (int k = 0; k < n; ++k) ph(k) = cplx(0, std::arg(ces.eigenvalues()(k)));
    CMat V = ces.eigenvectors();
    CMat H = V * ph.asDiagonal() * V.inverse();  // log u (skew-Hermitian)
    return path_from_function(
        n, 1.0,
        [logA, H, n](double t) -> Mat {
            CMat ut = (t * H).exp();
            Mat U(2 * n, 2 * n);
            U << ut.real(), -ut.imag(), ut.imag(), ut.real();
            return Mat((t * logA).exp()) * U;
        },
        std::max(16, int((logA.norm() + H.norm()) / 0.2) + 1), "polar");
}

}  // namespace symp
