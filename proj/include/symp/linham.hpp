#pragma once

#include "index.hpp"

namespace symp {

// Symmetric coefficient matrix B(t) on [0, tau] of the linear system
// y' = J B(t) y.
struct CoefficientMatrix {
    int n = 1;
    double tau = 1.0;
    std::function<Mat(double)> B;
    std::string tag = "function";
};

inline CoefficientMatrix constant_coefficient(const Mat& B, double tau) {
    CoefficientMatrix c;
    c.n = half_dim(B);
    c.tau = tau;
    c.B = [B](double) { return B; };
    c.tag = "constant";
    return c;
}

// B(t) = C0 + sum_k (A_k cos(2 pi k t / tau) + S_k sin(2 pi k t / tau)).
inline CoefficientMatrix fourier_coefficient(const Mat& C0, std::vector<Mat> A, std::vector<Mat> S,
                                             double tau) {
    if (A.size() != S.size()) throw ValidationError("coefficient", "cos/sin lists differ in length");
    CoefficientMatrix c;
    c.n = half_dim(C0);
    c.tau = tau;
    c.tag = "fourier";
    c.B = [C0, A = std::move(A), S = std::move(S), tau](double t) -> Mat {
        Mat b = C0;
        for (std::size_t k = 0; k < A.size(); ++k) {
            double w = kTwoPi * double(k + 1) * t / tau;
            b += A[k] * std::cos(w) + S[k] * std::sin(w);
        }
        return b;
    };
    return c;
}

// Piecewise-linear interpolation of sampled matrices.
inline CoefficientMatrix sampled_coefficient(std::vector<double> times, std::vector<Mat> values) {
    if (times.size() < 2 || times.size() != values.size())
        throw ValidationError("coefficient", "need at least two samples");
    CoefficientMatrix c;
    c.n = half_dim(values[0]);
    c.tau = times.back() - times.front();
    c.tag = "samples";
    double t0 = times.front();
    c.B = [times = std::move(times), values = std::move(values), t0](double t) -> Mat {
        double s = t + t0;
        if (s <= times.front()) return values.front();
        if (s >= times.back()) return values.back();
        auto it = std::upper_bound(times.begin(), times.end(), s);
        std::size_t k = static_cast<std::size_t>(it - times.begin()) - 1;
        double a = (s - times[k]) / (times[k + 1] - times[k]);
        return (1 - a) * values[k] + a * values[k + 1];
    };
    return c;
}

inline void check_coefficient(const CoefficientMatrix& c, int probes = 17) {
    for (int k = 0; k < probes; ++k) {
        double t = c.tau * k / (probes - 1);
        Mat b = c.B(t);
        if (b.rows() != 2 * c.n || b.cols() != 2 * c.n)
            throw ValidationError("coefficient", "B(t) has the wrong size");
        if ((b - b.transpose()).cwiseAbs().maxCoeff() > 1e-12)
            throw ValidationError("non-symmetric", "B(t) is not symmetric at t=" + std::to_string(t));
    }
}

namespace detail {

// Midpoint exponential steps of size about h from t0 to t1.
inline Mat midpoint_flow(const CoefficientMatrix& c, double t0, double t1, double h) {
    const Mat j = J(c.n);
    int steps = std::max(1, static_cast<int>(std::ceil((t1 - t0) / h - 1e-9)));
    double dt = (t1 - t0) / steps;
    Mat P = Mat::Identity(2 * c.n, 2 * c.n);
    for (int k = 0; k < steps; ++k) {
        double tm = t0 + (k + 0.5) * dt;
        Mat A = (dt * j) * c.B(tm);
        P = A.exp() * P;
    }
    return P;
}

inline std::vector<Mat> midpoint_run(const CoefficientMatrix& c, int steps) {
    const Mat j = J(c.n);
    double h = c.tau / steps;
    std::vector<Mat> out;
    out.reserve(steps + 1);
    out.push_back(Mat::Identity(2 * c.n, 2 * c.n));
    for (int k = 0; k < steps; ++k) {
        Mat A = (h * j) * c.B((k + 0.5) * h);
        out.push_back(A.exp() * out.back());
    }
    return out;
}

}  // namespace detail

struct IntegratorReport {
    int steps = 0;
    double drift = 0;
};

// Fundamental solution gamma(t) of y' = J B(t) y, gamma(0) = I. Steps are
// doubled until the endpoint moves by less than tol.
inline SymplecticPath fundamental_solution(const CoefficientMatrix& c, int steps = 64, double tol = 1e-10,
                                           IntegratorReport* report = nullptr, int max_steps = 1 << 21) {
    if (steps < 16) throw ValidationError("steps", "need at least 16 steps");
    check_coefficient(c);
    std::vector<Mat> run = detail::midpoint_run(c, steps);
    double drift = 0;
    while (true) {
        std::vector<Mat> fine = detail::midpoint_run(c, 2 * steps);
        drift = (fine.back() - run.back()).cwiseAbs().maxCoeff();
        run = std::move(fine);
        steps *= 2;
        if (drift < tol) break;
        if (steps >= max_steps)
            throw ConditioningError("integrator", "step doubling did not reach the tolerance (drift " +
                                                      std::to_string(drift) + ")");
    }
    if (report) *report = {steps, drift};

    double h = c.tau / steps;
    SymplecticPath p;
    p.n = c.n;
    p.tau = c.tau;
    p.generator = "coefficient";
    auto cc = std::make_shared<CoefficientMatrix>(c);
    p.prop = [cc, h](double a, double b) -> Mat { return detail::midpoint_flow(*cc, a, b, h); };
    int stride = std::max(1, steps / 256);
    for (int k = 0; k <= steps; k += stride) {
        p.times.push_back(k * h);
        p.mats.push_back(run[k]);
    }
    p.times.back() = c.tau;
    p.mats.back() = run.back();
    enforce_trust_region(p);
    return p;
}

// Scalar or matrix Sturm data: action density P y'.y' + 2 y'^T Q y + R y.y.
struct SturmData {
    int n = 1;
    double tau = kTwoPi;
    std::function<Mat(double)> P, Q, R;
};

inline SturmData constant_sturm(const Mat& P, const Mat& Q, const Mat& Rm, double tau) {
    SturmData s;
    s.n = static_cast<int>(P.rows());
    s.tau = tau;
    s.P = [P](double) { return P; };
    s.Q = [Q](double) { return Q; };
    s.R = [Rm](double) { return Rm; };
    return s;
}

inline void check_sturm(const SturmData& s, int probes = 33) {
    for (int k = 0; k < probes; ++k) {
        double t = s.tau * k / (probes - 1);
        Mat P = s.P(t);
        if ((P - P.transpose()).cwiseAbs().maxCoeff() > 1e-12)
            throw ValidationError("sturm", "P is not symmetric");
        if (Eigen::SelfAdjointEigenSolver<Mat>(P).eigenvalues().minCoeff() <= 1e-8)
            throw ValidationError("sturm", "P is not positive definite at t=" + std::to_string(t));
        Mat Rm = s.R(t);
        if ((Rm - Rm.transpose()).cwiseAbs().maxCoeff() > 1e-12)
            throw ValidationError("sturm", "R is not symmetric");
    }
}

// Hamiltonian form in the variables (momentum, position).
inline CoefficientMatrix sturm_to_hamiltonian(const SturmData& s) {
    check_sturm(s);
    CoefficientMatrix c;
    c.n = s.n;
    c.tau = s.tau;
    c.tag = "sturm";
    auto sp = std::make_shared<SturmData>(s);
    c.B = [sp](double t) -> Mat {
        int n = sp->n;
        Mat P = sp->P(t), Q = sp->Q(t), Rm = sp->R(t);
        Eigen::LLT<Mat> llt(P);
        if (llt.info() != Eigen::Success) throw ConditioningError("sturm", "P is not invertible");
        Mat Pi = llt.solve(Mat::Identity(n, n));
        Mat B(2 * n, 2 * n);
        B.topLeftCorner(n, n) = Pi;
        B.topRightCorner(n, n) = -Pi * Q;
        B.bottomLeftCorner(n, n) = -Q.transpose() * Pi;
        B.bottomRightCorner(n, n) = Q.transpose() * Pi * Q - Rm;
        return sym_part(B);
    };
    return c;
}

struct MorseResult {
    int m_minus = 0;
    int m_zero = 0;
    int d = 0;  // half-dimension of the truncated space (phase-space variant)
    int K = 0;
    std::vector<std::pair<int, int>> trace;  // (K, m_minus) history
};

namespace detail {

// Orthonormal real Fourier basis on [0, tau] and its derivative at t.
inline void fourier_basis(double t, double tau, int K, Vec& phi, Vec& dphi) {
    phi.resize(2 * K + 1);
    dphi.resize(2 * K + 1);
    double a0 = 1.0 / std::sqrt(tau), a = std::sqrt(2.0 / tau);
    phi(0) = a0;
    dphi(0) = 0;
    for (int k = 1; k <= K; ++k) {
        double w = kTwoPi * k / tau;
        phi(2 * k - 1) = a * std::cos(w * t);
        phi(2 * k) = a * std::sin(w * t);
        dphi(2 * k - 1) = -a * w * std::sin(w * t);
        dphi(2 * k) = a * w * std::cos(w * t);
    }
}

inline std::pair<int, int> inertia(const Mat& H, double rel_zero) {
    Eigen::SelfAdjointEigenSolver<Mat> es(H, Eigen::EigenvaluesOnly);
    const Vec& e = es.eigenvalues();
    double thr = rel_zero * std::max(1.0, e.cwiseAbs().maxCoeff());
    int neg = 0, zero = 0;
    for (int i = 0; i < e.size(); ++i) {
        if (std::abs(e(i)) < thr) ++zero;
        else if (e(i) < 0) ++neg;
    }
    return {neg, zero};
}

inline Mat kron(const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

inline Mat config_form(const SturmData& s, int K) {
    int m = 2 * K + 1, n = s.n, N = n * m;
    int nq = 4 * m + 64;
    Mat H = Mat::Zero(N, N);
    Vec phi, dphi;
    double w = s.tau / nq;
    for (int q = 0; q < nq; ++q) {
        double t = s.tau * q / nq;
        fourier_basis(t, s.tau, K, phi, dphi);
        Mat P = s.P(t), Q = s.Q(t), Rm = s.R(t);
        H += w * (kron(dphi * dphi.transpose(), P) + kron(dphi * phi.transpose(), Q) +
                  kron(phi * dphi.transpose(), Q.transpose()) + kron(phi * phi.transpose(), Rm));
    }
    return 0.5 * (H + H.transpose());
}

// Quadratic form of the action integral of (-J z'.z - B z.z) on Fourier modes.
inline Mat phase_form(const CoefficientMatrix& c, int K) {
    int m = 2 * K + 1, n2 = 2 * c.n, N = n2 * m;
    int nq = 4 * m + 64;
    Mat H = Mat::Zero(N, N);
    Mat mJ = -J(c.n);
    Vec phi, dphi;
    double w = c.tau / nq;
    for (int q = 0; q < nq; ++q) {
        double t = c.tau * q / nq;
        fourier_basis(t, c.tau, K, phi, dphi);
        Mat B = c.B(t);
        H += w * (kron(phi * dphi.transpose(), mJ) - kron(phi * phi.transpose(), B));
    }
    return 0.5 * (H + H.transpose());
}

}  // namespace detail

// Morse index and nullity of the Hessian form on the Fourier truncation
// |k| <= K, doubling K until m_minus is unchanged over two doublings.
inline MorseResult morse_index_fourier(const SturmData& s, int K = 8, int K_max = 256,
                                       double rel_zero = 1e-6) {
    if (K < 8) throw ValidationError("truncation", "K must be at least 8");
    check_sturm(s);
    MorseResult r;
    int stable = 0, prev = -1;
    for (int k = K; k <= K_max; k *= 2) {
        auto [neg, zero] = detail::inertia(detail::config_form(s, k), rel_zero);
        r.trace.emplace_back(k, neg);
        stable = (neg == prev) ? stable + 1 : 0;
        prev = neg;
        r.m_minus = neg;
        r.m_zero = zero;
        r.K = k;
        r.d = s.n * (2 * k + 1);
        if (stable >= 2) return r;
    }
    std::ostringstream os;
    os << "Morse index did not stabilize; trace:";
    for (auto [k, m] : r.trace) os << " K=" << k << ":" << m;
    throw ConditioningError("truncation", os.str());
}

// Phase-space truncation: m_minus - d is the quantity compared to i_1.
inline MorseResult morse_index_phase_space(const CoefficientMatrix& c, int K = 8, int K_max = 128,
                                           double rel_zero = 1e-6) {
    check_coefficient(c);
    MorseResult r;
    int stable = 0, prev = std::numeric_limits<int>::min();
    for (int k = K; k <= K_max; k *= 2) {
        auto [neg, zero] = detail::inertia(detail::phase_form(c, k), rel_zero);
        int d = c.n * (2 * k + 1);
        r.trace.emplace_back(k, neg - d);
        stable = (neg - d == prev) ? stable + 1 : 0;
        prev = neg - d;
        r.m_minus = neg;
        r.m_zero = zero;
        r.d = d;
        r.K = k;
        if (stable >= 2) return r;
    }
    std::ostringstream os;
    os << "shifted Morse index did not stabilize; trace:";
    for (auto [k, m] : r.trace) os << " K=" << k << ":" << m;
    throw ConditioningError("truncation", os.str());
}

}  // namespace symp
