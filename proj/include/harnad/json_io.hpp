#pragma once

#include "harnad/family.hpp"
#include "harnad/flow.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <string>

namespace harnad::io {

using Json = nlohmann::ordered_json;

namespace detail {

[[noreturn]] inline void fail(const std::string& where, const std::string& what) {
    throw ParseError((where.empty() ? std::string("document") : where) + ": " + what);
}

inline const Json& field(const Json& j, const char* key, const std::string& where) {
    if (!j.is_object()) fail(where, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) fail(where, std::string("missing field '") + key + "'");
    return *it;
}

inline std::size_t count(const Json& j, const std::string& where) {
    if (!j.is_number_integer() || j.get<long long>() < 0) fail(where, "expected a nonnegative integer");
    return j.get<std::size_t>();
}

inline const Json& array(const Json& j, const std::string& where) {
    if (!j.is_array()) fail(where, "expected an array");
    return j;
}

inline std::string string(const Json& j, const std::string& where) {
    if (!j.is_string()) fail(where, "expected a string");
    return j.get<std::string>();
}

inline void only_keys(const Json& j, std::initializer_list<const char*> keys, const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : keys) known = known || it.key() == k;
        if (!known) fail(where, "unknown field '" + it.key() + "'");
    }
}

inline std::string at(const std::string& where, const std::string& key) { return where + "." + key; }
inline std::string at(const std::string& where, std::size_t i) { return where + "[" + std::to_string(i) + "]"; }

}  // namespace detail

// Parses JSON text; syntax errors report line and column.
inline Json parse_text(const std::string& text) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        std::size_t line = 1, col = 1, end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        for (std::size_t i = 0; i < end; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::string msg = e.what();
        auto pos = msg.find("syntax error");
        throw ParseError("line " + std::to_string(line) + ", column " + std::to_string(col) + ": " +
                         (pos == std::string::npos ? msg : msg.substr(pos)));
    }
}

inline Json read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_text(ss.str());
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + std::string(e.what()).substr(std::string("ParseError: ").size()));
    }
}

// Scalar: {"re":"p/q","im":"r/s"}.
inline Json to_json(const Scalar& s) {
    return Json{{"re", Scalar::rational_to_string(s.re())}, {"im", Scalar::rational_to_string(s.im())}};
}

inline Scalar scalar_from_json(const Json& j, const std::string& where = "scalar") {
    detail::only_keys(j, {"re", "im"}, where);
    auto part = [&](const char* key) {
        std::string w = detail::at(where, key);
        std::string text = detail::string(detail::field(j, key, where), w);
        try {
            return Scalar::parse_rational(text);
        } catch (const ParseError& e) {
            detail::fail(w, "bad rational '" + text + "'");
        }
    };
    return Scalar(part("re"), part("im"));
}

inline Json to_json(const Mat& m) {
    Json data = Json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(to_json(m(i, c)));
        data.push_back(std::move(row));
    }
    return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

inline Mat matrix_from_json(const Json& j, const std::string& where = "matrix") {
    detail::only_keys(j, {"rows", "cols", "data"}, where);
    std::size_t r = detail::count(detail::field(j, "rows", where), detail::at(where, "rows"));
    std::size_t c = detail::count(detail::field(j, "cols", where), detail::at(where, "cols"));
    std::string dw = detail::at(where, "data");
    const Json& data = detail::array(detail::field(j, "data", where), dw);
    if (data.size() != r) detail::fail(dw, "expected " + std::to_string(r) + " rows");
    Mat m(r, c);
    for (std::size_t i = 0; i < r; ++i) {
        std::string rw = detail::at(dw, i);
        const Json& row = detail::array(data[i], rw);
        if (row.size() != c) detail::fail(rw, "expected " + std::to_string(c) + " entries");
        for (std::size_t k = 0; k < c; ++k) m(i, k) = scalar_from_json(row[k], detail::at(rw, k));
    }
    return m;
}

inline Json to_json(const ConnectionS& a) {
    Json poles = Json::array();
    for (const auto& p : a.poles()) {
        Json coeffs = Json::array();
        for (const auto& c : p.coeffs) coeffs.push_back(to_json(c));
        poles.push_back(Json{{"position", to_json(p.position)}, {"coeffs", std::move(coeffs)}});
    }
    return Json{{"dim", a.dim()}, {"constant_term", to_json(a.constant_term())}, {"poles", std::move(poles)}};
}

inline ConnectionS connection_from_json(const Json& j, const std::string& where = "connection") {
    detail::only_keys(j, {"dim", "constant_term", "poles"}, where);
    std::size_t n = detail::count(detail::field(j, "dim", where), detail::at(where, "dim"));
    Mat a0 = matrix_from_json(detail::field(j, "constant_term", where), detail::at(where, "constant_term"));
    std::vector<Pole> poles;
    std::string pw = detail::at(where, "poles");
    const Json& arr = detail::array(detail::field(j, "poles", where), pw);
    for (std::size_t i = 0; i < arr.size(); ++i) {
        std::string w = detail::at(pw, i);
        detail::only_keys(arr[i], {"position", "coeffs"}, w);
        Pole p{scalar_from_json(detail::field(arr[i], "position", w), detail::at(w, "position")), {}};
        std::string cw = detail::at(w, "coeffs");
        const Json& cs = detail::array(detail::field(arr[i], "coeffs", w), cw);
        for (std::size_t k = 0; k < cs.size(); ++k) p.coeffs.push_back(matrix_from_json(cs[k], detail::at(cw, k)));
        poles.push_back(std::move(p));
    }
    return ConnectionS(n, std::move(a0), std::move(poles));
}

inline Json to_json(const NormalForm& nf) {
    Json groups = Json::array();
    for (const auto& g : nf.groups) {
        Json lam = Json::array();
        for (const auto& c : g.lambda_coeffs) lam.push_back(to_json(c));
        groups.push_back(Json{{"multiplicity", g.multiplicity}, {"lambda_coeffs", std::move(lam)}});
    }
    Json blocks = Json::array();
    for (const auto& l : nf.L_blocks) blocks.push_back(to_json(l));
    Json pos = nf.position ? to_json(*nf.position) : Json("infinity");
    return Json{{"position", std::move(pos)}, {"groups", std::move(groups)}, {"L_blocks", std::move(blocks)}};
}

inline NormalForm normal_form_from_json(const Json& j, const std::string& where = "normal_form") {
    detail::only_keys(j, {"position", "groups", "L_blocks"}, where);
    NormalForm nf;
    const Json& pos = detail::field(j, "position", where);
    if (pos.is_string()) {
        if (pos.get<std::string>() != "infinity") detail::fail(detail::at(where, "position"), "expected a scalar or \"infinity\"");
    } else {
        nf.position = scalar_from_json(pos, detail::at(where, "position"));
    }
    std::string gw = detail::at(where, "groups");
    const Json& groups = detail::array(detail::field(j, "groups", where), gw);
    for (std::size_t a = 0; a < groups.size(); ++a) {
        std::string w = detail::at(gw, a);
        detail::only_keys(groups[a], {"multiplicity", "lambda_coeffs"}, w);
        NormalFormGroup g;
        g.multiplicity = detail::count(detail::field(groups[a], "multiplicity", w), detail::at(w, "multiplicity"));
        std::string lw = detail::at(w, "lambda_coeffs");
        const Json& lam = detail::array(detail::field(groups[a], "lambda_coeffs", w), lw);
        for (std::size_t k = 0; k < lam.size(); ++k) g.lambda_coeffs.push_back(scalar_from_json(lam[k], detail::at(lw, k)));
        nf.groups.push_back(std::move(g));
    }
    std::string bw = detail::at(where, "L_blocks");
    const Json& blocks = detail::array(detail::field(j, "L_blocks", where), bw);
    for (std::size_t a = 0; a < blocks.size(); ++a) nf.L_blocks.push_back(matrix_from_json(blocks[a], detail::at(bw, a)));
    nf.validate();
    return nf;
}

inline Json to_json(const HObject& h) {
    Json blocks = Json::array();
    for (const auto& b : h.blocks())
        blocks.push_back(Json{{"t", to_json(b.t)}, {"N", to_json(b.N)}, {"Q", to_json(b.Q)}, {"P", to_json(b.P)}});
    return Json{{"dimV", h.dim_v()}, {"S", to_json(h.S())}, {"blocks", std::move(blocks)}};
}

inline HObject hobject_from_json(const Json& j, const std::string& where = "hobject") {
    detail::only_keys(j, {"dimV", "S", "blocks"}, where);
    std::size_t n = detail::count(detail::field(j, "dimV", where), detail::at(where, "dimV"));
    Mat s = matrix_from_json(detail::field(j, "S", where), detail::at(where, "S"));
    std::string bw = detail::at(where, "blocks");
    const Json& arr = detail::array(detail::field(j, "blocks", where), bw);
    std::vector<HBlock> blocks;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        std::string w = detail::at(bw, i);
        detail::only_keys(arr[i], {"t", "N", "Q", "P"}, w);
        HBlock b;
        b.t = scalar_from_json(detail::field(arr[i], "t", w), detail::at(w, "t"));
        b.N = matrix_from_json(detail::field(arr[i], "N", w), detail::at(w, "N"));
        b.Q = matrix_from_json(detail::field(arr[i], "Q", w), detail::at(w, "Q"));
        b.P = matrix_from_json(detail::field(arr[i], "P", w), detail::at(w, "P"));
        blocks.push_back(std::move(b));
    }
    return HObject(n, std::move(s), std::move(blocks));
}

inline Json to_json(const FamilySpec& f) {
    Json params = Json::array();
    for (const auto& p : f.parameters) params.push_back(Json{{"name", p.name}, {"base", to_json(p.base)}});
    Json poles = Json::array();
    for (const auto& p : f.poles) {
        Json groups = Json::array();
        for (const auto& g : p.groups) groups.push_back(Json{{"mult", g.mult}, {"coeff_params", g.coeff_params}});
        poles.push_back(Json{{"t_param", p.t_param}, {"groups", std::move(groups)}, {"L", to_json(p.L)}});
    }
    Json out{{"parameters", std::move(params)}, {"poles", std::move(poles)}};
    if (f.L_infinity) out["L_infinity"] = to_json(*f.L_infinity);
    if (!f.infinity_coeff_params.empty()) out["infinity_coeff_params"] = f.infinity_coeff_params;
    return out;
}

inline FamilySpec family_spec_from_json(const Json& j, const std::string& where = "family") {
    detail::only_keys(j, {"parameters", "poles", "L_infinity", "infinity_coeff_params"}, where);
    FamilySpec f;
    std::string pw = detail::at(where, "parameters");
    const Json& params = detail::array(detail::field(j, "parameters", where), pw);
    for (std::size_t i = 0; i < params.size(); ++i) {
        std::string w = detail::at(pw, i);
        detail::only_keys(params[i], {"name", "base"}, w);
        f.parameters.push_back({detail::string(detail::field(params[i], "name", w), detail::at(w, "name")),
                                scalar_from_json(detail::field(params[i], "base", w), detail::at(w, "base"))});
    }
    auto names = [&](const Json& arr, const std::string& w) {
        std::vector<std::string> out;
        detail::array(arr, w);
        for (std::size_t k = 0; k < arr.size(); ++k) out.push_back(detail::string(arr[k], detail::at(w, k)));
        return out;
    };
    std::string lw = detail::at(where, "poles");
    const Json& poles = detail::array(detail::field(j, "poles", where), lw);
    for (std::size_t i = 0; i < poles.size(); ++i) {
        std::string w = detail::at(lw, i);
        detail::only_keys(poles[i], {"t_param", "groups", "L"}, w);
        FamilyPole p;
        p.t_param = detail::string(detail::field(poles[i], "t_param", w), detail::at(w, "t_param"));
        std::string gw = detail::at(w, "groups");
        const Json& groups = detail::array(detail::field(poles[i], "groups", w), gw);
        for (std::size_t a = 0; a < groups.size(); ++a) {
            std::string w2 = detail::at(gw, a);
            detail::only_keys(groups[a], {"mult", "coeff_params"}, w2);
            FamilyGroup g;
            g.mult = detail::count(detail::field(groups[a], "mult", w2), detail::at(w2, "mult"));
            if (groups[a].contains("coeff_params"))
                g.coeff_params = names(groups[a]["coeff_params"], detail::at(w2, "coeff_params"));
            p.groups.push_back(std::move(g));
        }
        p.L = matrix_from_json(detail::field(poles[i], "L", w), detail::at(w, "L"));
        f.poles.push_back(std::move(p));
    }
    if (j.contains("L_infinity")) f.L_infinity = matrix_from_json(j["L_infinity"], detail::at(where, "L_infinity"));
    if (j.contains("infinity_coeff_params"))
        f.infinity_coeff_params = names(j["infinity_coeff_params"], detail::at(where, "infinity_coeff_params"));
    return f;
}

// A point of parameter space: {"name": Scalar, ...}; names left out take the values in fallback.
inline std::vector<Scalar> point_from_json(const SingularityFamily& fam, const Json& j, std::vector<Scalar> fallback,
                                           const std::string& where = "point") {
    if (!j.is_object()) detail::fail(where, "expected an object mapping parameter names to scalars");
    auto names = fam.param_names();
    for (auto it = j.begin(); it != j.end(); ++it) {
        auto pos = std::find(names.begin(), names.end(), it.key());
        if (pos == names.end()) detail::fail(where, "unknown parameter '" + it.key() + "'");
        fallback[static_cast<std::size_t>(pos - names.begin())] = scalar_from_json(it.value(), detail::at(where, it.key()));
    }
    return fallback;
}

inline Json point_to_json(const SingularityFamily& fam, const std::vector<Scalar>& point) {
    Json out = Json::object();
    auto names = fam.param_names();
    for (std::size_t p = 0; p < names.size(); ++p) out[names[p]] = to_json(point[p]);
    return out;
}

// {"waypoints": [point, ...]}; each waypoint inherits unspecified values from the previous one.
inline FlowPath path_from_json(const SingularityFamily& fam, const Json& j, const std::string& where = "path") {
    detail::only_keys(j, {"waypoints"}, where);
    std::string ww = detail::at(where, "waypoints");
    const Json& arr = detail::array(detail::field(j, "waypoints", where), ww);
    FlowPath path;
    std::vector<Scalar> current = fam.base_point();
    for (std::size_t i = 0; i < arr.size(); ++i) {
        current = point_from_json(fam, arr[i], current, detail::at(ww, i));
        path.waypoints.push_back(current);
    }
    return path;
}

inline Json path_to_json(const SingularityFamily& fam, const FlowPath& path) {
    Json arr = Json::array();
    for (const auto& w : path.waypoints) arr.push_back(point_to_json(fam, w));
    return Json{{"waypoints", std::move(arr)}};
}

inline Json to_json(const DeltaForm<Scalar>& f) {
    Json values = Json::object();
    for (std::size_t p = 0; p < f.names.size(); ++p) values[f.names[p]] = to_json(f.values[p]);
    return values;
}

inline DeltaForm<Scalar> delta_form_from_json(const Json& j, const std::string& where = "delta_form") {
    if (!j.is_object()) detail::fail(where, "expected an object mapping parameter names to matrices");
    DeltaForm<Scalar> f;
    for (auto it = j.begin(); it != j.end(); ++it) {
        f.names.push_back(it.key());
        f.values.push_back(matrix_from_json(it.value(), detail::at(where, it.key())));
    }
    for (std::size_t p = 1; p < f.values.size(); ++p)
        if (f.values[p].rows() != f.values[0].rows() || f.values[p].cols() != f.values[0].cols())
            detail::fail(where, "all matrices must share one shape");
    return f;
}

inline Json to_json(const GTildeElement& g) {
    Json jets = Json::array();
    for (const auto& jet : g.jets) {
        Json coeffs = Json::array();
        for (const auto& c : jet.coeffs) coeffs.push_back(to_json(c));
        jets.push_back(std::move(coeffs));
    }
    return Json{{"jets", std::move(jets)}};
}

inline GTildeElement gtilde_from_json(const Json& j, const std::string& where = "gtilde") {
    detail::only_keys(j, {"jets"}, where);
    std::string jw = detail::at(where, "jets");
    const Json& arr = detail::array(detail::field(j, "jets", where), jw);
    GTildeElement g;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        std::string w = detail::at(jw, i);
        const Json& cs = detail::array(arr[i], w);
        GaugeJet jet;
        for (std::size_t k = 0; k < cs.size(); ++k) jet.coeffs.push_back(matrix_from_json(cs[k], detail::at(w, k)));
        g.jets.push_back(std::move(jet));
    }
    return g;
}

}  // namespace harnad::io
