#pragma once

#include "gutzwiller.hpp"
#include "linham.hpp"
#include "selberg.hpp"

#include <json.hpp>

#include <charconv>
#include <fstream>
#include <sstream>

namespace symp::io {

using json = nlohmann::json;

struct ParseError : ValidationError {
    ParseError(const std::string& where, const std::string& what) : ValidationError("parse", where + ": " + what) {}
};

// Shortest decimal that reads back to the same double.
inline std::string fmt(double x) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

inline double parse_double(std::string_view s, const std::string& where) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size() || s.empty())
        throw ParseError(where, "not a number: '" + std::string(s) + "'");
    return v;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string f;
    while (std::getline(ss, f, sep)) out.push_back(f);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

inline std::vector<double> parse_list(const std::string& s, const std::string& what) {
    std::vector<double> v;
    auto parts = split(s, ',');
    for (std::size_t k = 0; k < parts.size(); ++k)
        v.push_back(parse_double(parts[k], what + " field " + std::to_string(k + 1)));
    return v;
}

// "re,im"; values off the unit circle are rescaled when unit is requested.
inline cplx parse_complex(const std::string& s, bool unit, std::string* warning = nullptr) {
    auto v = parse_list(s, "complex");
    if (v.size() != 2) throw ParseError("complex", "expected re,im");
    cplx z(v[0], v[1]);
    if (unit) {
        double m = std::abs(z);
        if (!(m > 0)) throw ValidationError("omega", "omega must be nonzero");
        if (std::abs(m - 1) > 1e-8 && warning)
            *warning = "omega has modulus " + fmt(m) + "; renormalized to the unit circle";
        z /= m;
    }
    return z;
}

inline std::string read_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ValidationError("io", "cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// Numeric CSV rows; blank lines, '#' comments and a non-numeric header row are skipped.
inline std::vector<std::vector<double>> parse_csv(const std::string& text, const std::string& name) {
    std::vector<std::vector<double>> rows;
    std::stringstream ss(text);
    std::string line;
    int ln = 0;
    while (std::getline(ss, line)) {
        ++ln;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos || line[line.find_first_not_of(" \t")] == '#')
            continue;
        auto parts = split(line, ',');
        std::vector<double> row;
        bool header = rows.empty();
        try {
            for (std::size_t k = 0; k < parts.size(); ++k)
                row.push_back(parse_double(parts[k], name + " line " + std::to_string(ln) + " field " +
                                                         std::to_string(k + 1)));
        } catch (const ParseError&) {
            bool alpha = false;
            for (char c : line) alpha |= std::isalpha(static_cast<unsigned char>(c)) && c != 'e' && c != 'E';
            if (header && alpha && ln == 1) continue;
            throw;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Mat matrix_from_rows(const std::vector<std::vector<double>>& rows, const std::string& name) {
    if (rows.empty()) throw ParseError(name, "empty matrix");
    Mat M(rows.size(), rows[0].size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != rows[0].size())
            throw ParseError(name + " row " + std::to_string(r + 1), "ragged row");
        for (std::size_t c = 0; c < rows[r].size(); ++c) M(r, c) = rows[r][c];
    }
    return M;
}

inline Mat read_matrix_csv(const std::string& path) { return matrix_from_rows(parse_csv(read_file(path), path), path); }

inline std::string matrix_csv(const Mat& M) {
    std::string s;
    for (int r = 0; r < M.rows(); ++r) {
        for (int c = 0; c < M.cols(); ++c) s += (c ? "," : "") + fmt(M(r, c));
        s += '\n';
    }
    return s;
}

inline json matrix_json(const Mat& M) {
    json a = json::array();
    for (int r = 0; r < M.rows(); ++r) {
        json row = json::array();
        for (int c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
        a.push_back(row);
    }
    return a;
}

inline Mat matrix_from_json(const json& j, const std::string& name) {
    if (!j.is_array() || j.empty()) throw ParseError(name, "expected a nonempty array of arrays");
    std::vector<std::vector<double>> rows;
    for (std::size_t r = 0; r < j.size(); ++r) {
        if (!j[r].is_array()) throw ParseError(name + " row " + std::to_string(r + 1), "expected an array");
        std::vector<double> row;
        for (std::size_t c = 0; c < j[r].size(); ++c) {
            if (!j[r][c].is_number())
                throw ParseError(name + " row " + std::to_string(r + 1) + " field " + std::to_string(c + 1),
                                 "expected a number");
            row.push_back(j[r][c].get<double>());
        }
        rows.push_back(std::move(row));
    }
    return matrix_from_rows(rows, name);
}

// Matrix from a .json (array of arrays) or CSV file.
inline Mat read_matrix(const std::string& path) {
    std::string text = read_file(path);
    auto p = text.find_first_not_of(" \t\r\n");
    if (p != std::string::npos && text[p] == '[') {
        json j;
        try {
            j = json::parse(text);
        } catch (const json::parse_error& e) {
            throw ParseError(path, e.what());
        }
        return matrix_from_json(j, path);
    }
    return matrix_from_rows(parse_csv(text, path), path);
}

inline json parse_json_text(const std::string& text, const std::string& name) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(name, e.what());
    }
}

template <class T>
T field(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw ParseError(where, std::string("missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ParseError(where + "." + key, e.what());
    }
}

template <class T>
T field_or(const json& j, const char* key, T fallback, const std::string& where) {
    return j.contains(key) ? field<T>(j, key, where) : fallback;
}

inline NumericPolicy policy_from_json(const json& j, NumericPolicy p = default_policy()) {
    p.tol_sym = field_or(j, "tol_sym", p.tol_sym, "policy");
    p.tol_rank = field_or(j, "tol_rank", p.tol_rank, "policy");
    p.tol_det = field_or(j, "tol_det", p.tol_det, "policy");
    p.tol_cluster = field_or(j, "tol_cluster", p.tol_cluster, "policy");
    p.seed = field_or<std::uint64_t>(j, "seed", p.seed, "policy");
    p.validate();
    return p;
}

inline json policy_json(const NumericPolicy& p) {
    return {{"tol_sym", p.tol_sym}, {"tol_rank", p.tol_rank}, {"tol_det", p.tol_det},
            {"tol_cluster", p.tol_cluster}, {"seed", p.seed}};
}

inline std::vector<Mat> matrix_list(const json& j, const char* key, const std::string& where) {
    std::vector<Mat> out;
    if (!j.contains(key)) return out;
    const json& a = j.at(key);
    if (!a.is_array()) throw ParseError(where + "." + key, "expected a list of matrices");
    for (std::size_t k = 0; k < a.size(); ++k)
        out.push_back(matrix_from_json(a[k], where + "." + key + "[" + std::to_string(k) + "]"));
    return out;
}

// {"tag": "constant", "tau", "B"} or {"tag": "fourier", "tau", "C0", "A": [...], "S": [...]}
inline CoefficientMatrix coefficient_from_json(const json& j, const std::string& where = "coefficient") {
    auto tag = field<std::string>(j, "tag", where);
    double tau = field_or(j, "tau", 1.0, where);
    if (!(tau > 0)) throw ValidationError("coefficient", "tau must be positive");
    CoefficientMatrix c;
    if (tag == "constant") {
        c = constant_coefficient(matrix_from_json(j.at("B"), where + ".B"), tau);
    } else if (tag == "fourier") {
        if (!j.contains("C0")) throw ParseError(where, "missing field 'C0'");
        c = fourier_coefficient(matrix_from_json(j.at("C0"), where + ".C0"), matrix_list(j, "A", where),
                                matrix_list(j, "S", where), tau);
    } else {
        throw ParseError(where + ".tag", "unknown tag '" + tag + "'");
    }
    check_coefficient(c);
    return c;
}

inline json coefficient_json(const Mat& C0, const std::vector<Mat>& A, const std::vector<Mat>& S, double tau) {
    json j{{"tag", A.empty() && S.empty() ? "constant" : "fourier"}, {"tau", tau}};
    if (A.empty() && S.empty()) {
        j["B"] = matrix_json(C0);
        return j;
    }
    j["C0"] = matrix_json(C0);
    j["A"] = json::array();
    j["S"] = json::array();
    for (const auto& a : A) j["A"].push_back(matrix_json(a));
    for (const auto& s : S) j["S"].push_back(matrix_json(s));
    return j;
}

// Sampled coefficient CSV: t, then the (2n)^2 entries row-major.
inline CoefficientMatrix coefficient_from_csv(const std::string& text, const std::string& name) {
    auto rows = parse_csv(text, name);
    if (rows.size() < 2) throw ParseError(name, "need at least two samples");
    std::size_t w = rows[0].size() - 1;
    int d = int(std::lround(std::sqrt(double(w))));
    if (d * d != int(w) || d % 2) throw ParseError(name + " line 1", "expected t followed by (2n)^2 entries");
    std::vector<double> times;
    std::vector<Mat> vals;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != w + 1) throw ParseError(name + " row " + std::to_string(r + 1), "wrong field count");
        times.push_back(rows[r][0]);
        Mat B(d, d);
        for (int k = 0; k < d * d; ++k) B(k / d, k % d) = rows[r][1 + k];
        vals.push_back(B);
        if (r && !(times[r] > times[r - 1]))
            throw ParseError(name + " row " + std::to_string(r + 1), "times must be strictly ascending");
    }
    auto c = sampled_coefficient(times, vals);
    check_coefficient(c);
    return c;
}

struct PathOptions {
    int steps = 64;
    double tol = 1e-10;
};

// {"n", "tau", "generator": {"type": ...}}
//   rotation:    {"rate"}                 t -> R(rate t) diamond n
//   diagonal:    {"rate"}                 t -> D(1 + rate t) diamond n
//   coefficient: {"coefficient": {...}}   fundamental solution
//   samples:     {"times": [...], "matrices": [...]}
inline SymplecticPath path_from_json(const json& j, PathOptions opt = {}) {
    const std::string w = "path";
    int n = field<int>(j, "n", w);
    double tau = field_or(j, "tau", 1.0, w);
    if (n < 1) throw ValidationError("path", "n must be positive");
    if (!(tau > 0)) throw ValidationError("path", "tau must be positive");
    if (!j.contains("generator")) throw ParseError(w, "missing field 'generator'");
    const json& g = j.at("generator");
    auto type = field<std::string>(g, "type", w + ".generator");
    if (type == "rotation") return rotation_path(field_or(g, "rate", kPi, w + ".generator"), tau, n);
    if (type == "diagonal") return diagonal_path(field_or(g, "rate", 1.0, w + ".generator"), tau, n);
    if (type == "coefficient") {
        if (!g.contains("coefficient")) throw ParseError(w + ".generator", "missing field 'coefficient'");
        auto c = coefficient_from_json(g.at("coefficient"), w + ".generator.coefficient");
        if (c.n != n) throw ValidationError("path", "coefficient dimension does not match n");
        if (std::abs(c.tau - tau) > 1e-12 * tau) throw ValidationError("path", "coefficient tau does not match tau");
        opt.steps = field_or(g, "steps", opt.steps, w + ".generator");
        opt.tol = field_or(g, "tol", opt.tol, w + ".generator");
        return fundamental_solution(c, opt.steps, opt.tol);
    }
    if (type == "samples") {
        auto times = field<std::vector<double>>(g, "times", w + ".generator");
        auto mats = matrix_list(g, "matrices", w + ".generator");
        if (times.size() != mats.size()) throw ParseError(w + ".generator", "times and matrices differ in length");
        for (const auto& m : mats)
            if (m.rows() != 2 * n || m.cols() != 2 * n) throw ValidationError("path", "sample has wrong size");
        return path_from_samples(n, times, mats);
    }
    throw ParseError(w + ".generator.type", "unknown generator '" + type + "'");
}

inline json sturm_json(const Mat& P, const Mat& Q, const Mat& Rm, double tau) {
    return {{"tau", tau}, {"P", matrix_json(P)}, {"Q", matrix_json(Q)}, {"R", matrix_json(Rm)}};
}

// Constant Sturm data {"tau", "P", "Q", "R"}; a scalar entry stands for a 1x1 matrix.
inline SturmData sturm_from_json(const json& j) {
    auto get = [&](const char* key) -> Mat {
        if (!j.contains(key)) throw ParseError("sturm", std::string("missing field '") + key + "'");
        if (j.at(key).is_number()) return Mat::Constant(1, 1, j.at(key).get<double>());
        return matrix_from_json(j.at(key), std::string("sturm.") + key);
    };
    double tau = field_or(j, "tau", kTwoPi, "sturm");
    Mat P = get("P"), Q = get("Q"), Rm = get("R");
    if (P.rows() != P.cols() || Q.rows() != P.rows() || Q.cols() != P.rows() || Rm.rows() != P.rows() ||
        Rm.cols() != P.rows())
        throw ValidationError("sturm", "P, Q, R must be square of the same size");
    auto s = constant_sturm(P, Q, Rm, tau);
    check_sturm(s);
    return s;
}

// Eigenvalue CSV: value[,multiplicity]; expanded by multiplicity.
inline std::vector<double> eigenvalues_from_csv(const std::string& text, const std::string& name) {
    std::vector<double> ev;
    auto rows = parse_csv(text, name);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].empty() || rows[r].size() > 2) throw ParseError(name + " row " + std::to_string(r + 1), "expected value[,multiplicity]");
        int m = 1;
        if (rows[r].size() == 2) {
            if (rows[r][1] < 1 || rows[r][1] != std::floor(rows[r][1]))
                throw ParseError(name + " row " + std::to_string(r + 1) + " field 2", "multiplicity must be a positive integer");
            m = int(rows[r][1]);
        }
        for (int k = 0; k < m; ++k) ev.push_back(rows[r][0]);
    }
    for (std::size_t k = 1; k < ev.size(); ++k)
        if (ev[k] < ev[k - 1]) throw ValidationError("eigenvalues", "eigenvalues must be ascending");
    return ev;
}

inline LengthSpectrum lengths_from_csv(const std::string& text, const std::string& name, double area) {
    LengthSpectrum L;
    L.area = area;
    auto rows = parse_csv(text, name);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].empty() || rows[r].size() > 2) throw ParseError(name + " row " + std::to_string(r + 1), "expected value[,multiplicity]");
        LengthEntry e{rows[r][0], 1};
        if (rows[r].size() == 2) {
            if (rows[r][1] < 1 || rows[r][1] != std::floor(rows[r][1]))
                throw ParseError(name + " row " + std::to_string(r + 1) + " field 2", "multiplicity must be a positive integer");
            e.multiplicity = int(rows[r][1]);
        }
        L.entries.push_back(e);
    }
    check_lengths(L);
    return L;
}

inline std::string values_csv(const std::vector<double>& v) {
    std::string s;
    for (double x : v) s += fmt(x) + "\n";
    return s;
}

inline std::string density_csv(const SpectralDensity& d) {
    std::string s = "E,value\n";
    for (std::size_t k = 0; k < d.energies.size(); ++k) s += fmt(d.energies[k]) + "," + fmt(d.values[k]) + "\n";
    return s;
}

inline SpectralDensity density_from_csv(const std::string& text, const std::string& name, double sigma = 0) {
    SpectralDensity d;
    d.sigma = sigma;
    auto rows = parse_csv(text, name);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != 2) throw ParseError(name + " row " + std::to_string(r + 1), "expected E,value");
        d.energies.push_back(rows[r][0]);
        d.values.push_back(rows[r][1]);
    }
    check_grid(d.energies);
    return d;
}

inline json orbit_json(const PeriodicOrbit& o) {
    return {{"label", o.label},
            {"period", o.period},
            {"prim_period", o.prim_period},
            {"action", o.action},
            {"energy", o.energy},
            {"transverse_monodromy", matrix_json(o.transverse_monodromy)},
            {"index", o.index},
            {"transverse_index", o.transverse_index},
            {"repetition", o.repetition}};
}

inline std::vector<PeriodicOrbit> orbits_from_json(const json& j) {
    if (!j.is_array()) throw ParseError("catalog", "expected a list of orbits");
    std::vector<PeriodicOrbit> out;
    for (std::size_t k = 0; k < j.size(); ++k) {
        std::string w = "catalog[" + std::to_string(k) + "]";
        PeriodicOrbit o;
        o.label = field_or<std::string>(j[k], "label", "orbit" + std::to_string(k), w);
        o.period = field<double>(j[k], "period", w);
        o.prim_period = field_or(j[k], "prim_period", o.period, w);
        o.action = field<double>(j[k], "action", w);
        o.energy = field_or(j[k], "energy", 0.0, w);
        if (!j[k].contains("transverse_monodromy")) throw ParseError(w, "missing field 'transverse_monodromy'");
        o.transverse_monodromy = matrix_from_json(j[k].at("transverse_monodromy"), w + ".transverse_monodromy");
        o.index = field<int>(j[k], "index", w);
        o.transverse_index = field_or(j[k], "transverse_index", o.index, w);
        o.repetition = field_or(j[k], "repetition", 1, w);
        if (!(o.period > 0) || !(o.prim_period > 0)) throw ValidationError("orbit", w + ": periods must be positive");
        if (o.repetition < 1) throw ValidationError("orbit", w + ": repetition must be positive");
        require_symplectic(o.transverse_monodromy);
        out.push_back(std::move(o));
    }
    return out;
}

// System descriptors:
//   {"type": "harmonic", "omega": [...], "mass"}
//   {"type": "box", "L", "mass"}
//   {"type": "polynomial", "n", "mass", "terms": [{"c", "powers": [...]}], "center": [...], "star_shaped"}
inline NaturalSystem system_from_json(const json& j) {
    auto type = field<std::string>(j, "type", "system");
    double mass = field_or(j, "mass", 1.0, "system");
    if (!(mass > 0)) throw ValidationError("system", "mass must be positive");
    if (type == "harmonic") {
        auto w = field<std::vector<double>>(j, "omega", "system");
        if (w.empty()) throw ValidationError("system", "omega must be nonempty");
        return harmonic_system(Eigen::Map<Vec>(w.data(), Eigen::Index(w.size())), mass);
    }
    if (type == "box") {
        double L = field<double>(j, "L", "system");
        if (!(L > 0)) throw ValidationError("system", "L must be positive");
        return box_system(L, mass);
    }
    if (type == "polynomial") {
        NaturalSystem s;
        s.name = "polynomial";
        s.n = field<int>(j, "n", "system");
        s.mass = mass;
        std::vector<std::pair<double, std::vector<int>>> terms;
        if (!j.contains("terms") || !j.at("terms").is_array()) throw ParseError("system", "missing list 'terms'");
        for (std::size_t k = 0; k < j.at("terms").size(); ++k) {
            std::string w = "system.terms[" + std::to_string(k) + "]";
            auto pw = field<std::vector<int>>(j.at("terms")[k], "powers", w);
            if (int(pw.size()) != s.n) throw ValidationError("system", w + ": powers must have length n");
            terms.emplace_back(field<double>(j.at("terms")[k], "c", w), pw);
        }
        s.V = [terms](const Vec& q) {
            double v = 0;
            for (const auto& [c, pw] : terms) {
                double m = c;
                for (std::size_t i = 0; i < pw.size(); ++i) m *= std::pow(q(Eigen::Index(i)), pw[i]);
                v += m;
            }
            return v;
        };
        auto ctr = field_or(j, "center", std::vector<double>(s.n, 0.0), "system");
        if (int(ctr.size()) != s.n) throw ValidationError("system", "center must have length n");
        s.center = Eigen::Map<Vec>(ctr.data(), s.n);
        s.star_shaped = field_or(j, "star_shaped", true, "system");
        return s;
    }
    throw ParseError("system.type", "unknown system '" + type + "'");
}

}  // namespace symp::io
