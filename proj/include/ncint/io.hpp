#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ncint/derive.hpp"
#include "ncint/displacement.hpp"
#include "ncint/interpolate.hpp"
#include "ncint/points.hpp"
#include "ncint/schur.hpp"
#include "ncint/settings.hpp"
#include "ncint/words.hpp"

namespace ncint {

using json = nlohmann::json;

inline const char* kFormatVersion = "ncint/1";

// Complex scalars serialize as [re, im]; matrices as row-major nested
// arrays; words as arrays of letters.

inline json to_json(const Complex& c) { return json::array({c.real(), c.imag()}); }

inline Complex complex_from_json(const json& j) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw parse_error("expected complex scalar as [re, im]");
    return {j[0].get<double>(), j[1].get<double>()};
}

inline json to_json(const CMatrix& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(to_json(m(i, j)));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline CMatrix cmatrix_from_json(const json& j) {
    if (!j.is_array()) throw parse_error("expected matrix as nested arrays");
    const Index rows = static_cast<Index>(j.size());
    if (rows == 0) return CMatrix(0, 0);
    if (!j[0].is_array()) throw parse_error("expected matrix row as array");
    const Index cols = static_cast<Index>(j[0].size());
    CMatrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        if (!j[static_cast<std::size_t>(i)].is_array() ||
            static_cast<Index>(j[static_cast<std::size_t>(i)].size()) != cols)
            throw parse_error("ragged matrix rows");
        for (Index c = 0; c < cols; ++c)
            m(i, c) = complex_from_json(j[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)]);
    }
    if (!all_finite(m)) throw parse_error("matrix contains non-finite entries");
    return m;
}

inline json to_json(const Word& w) {
    json a = json::array();
    for (int l : w.letters()) a.push_back(l);
    return a;
}

inline Word word_from_json(const json& j) {
    if (!j.is_array()) throw parse_error("expected word as array of letters");
    std::vector<int> letters;
    for (const json& e : j) {
        if (!e.is_number_integer()) throw parse_error("word letters must be integers");
        letters.push_back(e.get<int>());
    }
    return Word(std::move(letters));
}

inline json to_json(const OperatorTuple& z) {
    json comps = json::array();
    for (const CMatrix& c : z.components()) comps.push_back(to_json(c));
    return json{{"N", z.n()}, {"dimE", z.dim()}, {"Z", std::move(comps)}};
}

inline OperatorTuple point_from_json(const json& j) {
    if (!j.is_object() || !j.contains("N") || !j.contains("dimE") || !j.contains("Z"))
        throw parse_error("point needs fields N, dimE, Z");
    const int n = j["N"].get<int>();
    const Index d = j["dimE"].get<Index>();
    if (!j["Z"].is_array() || static_cast<int>(j["Z"].size()) != n)
        throw parse_error("point needs exactly N component matrices");
    std::vector<CMatrix> comps;
    for (const json& c : j["Z"]) comps.push_back(cmatrix_from_json(c));
    return OperatorTuple(n, d, std::move(comps));
}

// Zero coefficients are omitted on write; absent words read back as zero.
inline json to_json(const SchurElement& t) {
    json coeffs = json::array();
    for (int k = 0; k <= t.degree(); ++k) {
        for (std::int64_t o = 0; o < pow_i64(t.n(), k); ++o) {
            const Word w = index_word({k, o}, t.n());
            const CMatrix c = t.coeff(w);
            if (c.cwiseAbs().maxCoeff() == 0.0) continue;
            coeffs.push_back(json{{"word", to_json(w)}, {"matrix", to_json(c)}});
        }
    }
    return json{{"N", t.n()}, {"dimE", t.dim()}, {"K", t.degree()}, {"coeffs", std::move(coeffs)}};
}

inline SchurElement schur_from_json(const json& j) {
    if (!j.is_object() || !j.contains("N") || !j.contains("dimE") || !j.contains("K"))
        throw parse_error("schur element needs fields N, dimE, K");
    SchurElement t(j["N"].get<int>(), j["dimE"].get<Index>(), j["K"].get<int>());
    if (j.contains("coeffs")) {
        for (const json& e : j["coeffs"]) {
            if (!e.contains("word") || !e.contains("matrix"))
                throw parse_error("schur coefficient needs word and matrix");
            t.set_coeff(word_from_json(e["word"]), cmatrix_from_json(e["matrix"]));
        }
    }
    return t;
}

inline json to_json(const NPProblem& p) {
    json points = json::array(), targets = json::array();
    for (const OperatorTuple& z : p.points) points.push_back(to_json(z));
    for (const CMatrix& b : p.targets) targets.push_back(to_json(b));
    return json{{"points", std::move(points)}, {"targets", std::move(targets)}};
}

inline NPProblem np_from_json(const json& j) {
    if (!j.is_object() || !j.contains("points") || !j.contains("targets"))
        throw parse_error("nevpick problem needs points and targets");
    NPProblem p;
    for (const json& e : j["points"]) p.points.push_back(point_from_json(e));
    for (const json& e : j["targets"]) p.targets.push_back(cmatrix_from_json(e));
    p.validate();
    return p;
}

inline json to_json(const CaraProblem& p) {
    json targets = json::array();
    for (int k = 0; k <= p.order; ++k)
        targets.push_back(json{{"k", k}, {"matrix", to_json(p.targets[static_cast<std::size_t>(k)])}});
    return json{{"Z", to_json(p.z)},
                {"l", p.order},
                {"variant", p.variant == CaraVariant::partial ? "partial" : "total"},
                {"targets", std::move(targets)}};
}

inline CaraProblem cara_from_json(const json& j) {
    if (!j.is_object() || !j.contains("Z") || !j.contains("l") || !j.contains("variant") ||
        !j.contains("targets"))
        throw parse_error("cara problem needs Z, l, variant, targets");
    const std::string var = j["variant"].get<std::string>();
    if (var != "partial" && var != "total")
        throw parse_error("cara variant must be \"partial\" or \"total\"");
    CaraProblem p{point_from_json(j["Z"]), j["l"].get<int>(),
                  var == "partial" ? CaraVariant::partial : CaraVariant::total, {}};
    if (p.order < 0) throw parse_error("cara order must be nonnegative");
    p.targets.resize(static_cast<std::size_t>(p.order) + 1);
    std::vector<bool> seen(static_cast<std::size_t>(p.order) + 1, false);
    for (const json& e : j["targets"]) {
        if (!e.contains("k") || !e.contains("matrix"))
            throw parse_error("cara target needs k and matrix");
        const int k = e["k"].get<int>();
        if (k < 0 || k > p.order) throw parse_error("cara target index out of range");
        p.targets[static_cast<std::size_t>(k)] = cmatrix_from_json(e["matrix"]);
        seen[static_cast<std::size_t>(k)] = true;
    }
    for (int k = 0; k <= p.order; ++k)
        if (!seen[static_cast<std::size_t>(k)])
            throw parse_error("cara target for k = " + std::to_string(k) + " missing");
    p.validate();
    return p;
}

inline json to_json(const DisplacementSystem& s) {
    json fs = json::array();
    for (const CMatrix& fk : s.f) fs.push_back(to_json(fk));
    json out{{"F", std::move(fs)}, {"U", to_json(s.u)}};
    if (s.v.cols() > 0) out["V"] = to_json(s.v);
    return out;
}

inline DisplacementSystem displacement_from_json(const json& j) {
    if (!j.is_object() || !j.contains("F") || !j.contains("U"))
        throw parse_error("displacement system needs F and U");
    DisplacementSystem s;
    for (const json& e : j["F"]) s.f.push_back(cmatrix_from_json(e));
    s.u = cmatrix_from_json(j["U"]);
    s.v = j.contains("V") ? cmatrix_from_json(j["V"]) : CMatrix(s.u.rows(), 0);
    s.validate();
    return s;
}

inline json to_json(const Settings& s) {
    return json{{"K_out", s.k_out},
                {"depth_cap", s.depth_cap},
                {"tol", json{{"psd", s.tol_psd}, {"interp", s.tol_interp}, {"series", s.tol_series}}}};
}

inline Settings settings_from_json(const json& j) {
    Settings s;
    if (!j.is_object()) return s;
    if (j.contains("K_out")) s.k_out = j["K_out"].get<int>();
    if (j.contains("depth_cap")) s.depth_cap = j["depth_cap"].get<int>();
    if (j.contains("tol")) {
        const json& t = j["tol"];
        if (t.contains("psd")) s.tol_psd = t["psd"].get<double>();
        if (t.contains("interp")) s.tol_interp = t["interp"].get<double>();
        if (t.contains("series")) s.tol_series = t["series"].get<double>();
    }
    return s;
}

// Instance files pair a problem kind with its payload and solver settings.
struct InstanceFile {
    std::string kind; // "nevpick" | "cara" | "kernel" | "displacement"
    json problem;
    Settings settings;
};

inline json to_json(const InstanceFile& f) {
    return json{{"version", kFormatVersion},
                {"kind", f.kind},
                {"problem", f.problem},
                {"settings", to_json(f.settings)}};
}

inline InstanceFile instance_from_json(const json& j) {
    if (!j.is_object()) throw parse_error("instance file must be a JSON object");
    if (!j.contains("version") || j["version"].get<std::string>() != kFormatVersion)
        throw parse_error("unrecognized instance version (expected \"" +
                          std::string(kFormatVersion) + "\")");
    if (!j.contains("kind") || !j.contains("problem"))
        throw parse_error("instance file needs kind and problem");
    InstanceFile f;
    f.kind = j["kind"].get<std::string>();
    if (f.kind != "nevpick" && f.kind != "cara" && f.kind != "kernel" && f.kind != "displacement")
        throw parse_error("unknown problem kind \"" + f.kind + "\"");
    f.problem = j["problem"];
    if (j.contains("settings")) f.settings = settings_from_json(j["settings"]);
    return f;
}

} // namespace ncint
