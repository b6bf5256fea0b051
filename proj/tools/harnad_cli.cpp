#include "harnad/acceptance.hpp"
#include "harnad/json_io.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

using namespace harnad;
using io::Json;

namespace {

// Exit codes: 0 success, 1 domain error, 2 I/O or parse error.
class IoError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string input;
    std::string output;
    std::string format = "json";
};

void add_common(CLI::App* sub, Common& c, bool input_required = true) {
    auto* in = sub->add_option("-i,--input", c.input, "Input document");
    if (input_required) in->required();
    sub->add_option("-o,--output", c.output, "Output path (default: stdout)");
    sub->add_option("--format", c.format, "Document format")->check(CLI::IsMember({"json"}));
}

void emit_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << text;
    if (!out) throw IoError("write to '" + path + "' failed");
}

void emit(const Common& c, const Json& j) { emit_text(c.output, j.dump(2) + "\n"); }

Scalar parse_scalar_flag(const std::string& re, const std::string& im) {
    try {
        return Scalar(Scalar::parse_rational(re), Scalar::parse_rational(im.empty() ? "0" : im));
    } catch (const ParseError&) {
        throw ParseError("scalar flags take exact rationals such as 1/2 or -3");
    }
}

bool is_hobject(const Json& j) { return j.is_object() && j.contains("dimV"); }

std::string str(const Scalar& s) {
    std::ostringstream os;
    os << s;
    return os.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exact meromorphic-connection toolkit: AHHP data, Harnad duality, middle convolution, isomonodromy"};
    app.require_subcommand(1);

    Common c;
    std::string alpha_re, alpha_im;
    std::string path_file, point_file, datum_file;
    std::size_t steps = 2000, probe_every = 20;
    double tol = 1e-3, fd_step = 1e-5, collision_tol = 1e-6;
    std::optional<std::uint64_t> seed;
    std::uint64_t suite_seed = 20240601;
    std::vector<int> only;

    auto* kappa_cmd = app.add_subcommand("kappa", "Canonical AHHP datum of a connection");
    auto* phi_cmd = app.add_subcommand("phi", "Connection of an AHHP datum");
    auto* hd_cmd = app.add_subcommand("hd", "Harnad dual of a connection");
    auto* ihd_cmd = app.add_subcommand("ihd", "Inverse Harnad dual of a connection");
    auto* add_cmd = app.add_subcommand("add", "Add alpha dy/y at y = 0");
    auto* mc_cmd = app.add_subcommand("mc", "Additive middle convolution mc_alpha");
    auto* stable_cmd = app.add_subcommand("check-stable", "Stability of an AHHP datum");
    auto* irr_cmd = app.add_subcommand("check-irreducible", "Irreducibility of a connection or AHHP datum");
    auto* nonres_cmd = app.add_subcommand("check-nonresonant", "Non-resonance of a normal form");
    auto* minimal_cmd = app.add_subcommand("check-minimal", "Minimal-extension criterion of an AHHP datum");
    auto* family_cmd = app.add_subcommand("family-check", "Validate an admissible family");
    auto* theta_cmd = app.add_subcommand("theta", "Theta one-form of a family at a point");
    auto* xi_cmd = app.add_subcommand("xi", "Xi one-form of a family datum");
    auto* flow_cmd = app.add_subcommand("flow", "Integrate the isomonodromy flow and report residuals as CSV");
    auto* suite_cmd = app.add_subcommand("suite", "Run the acceptance property suites");

    for (auto* s : {kappa_cmd, phi_cmd, hd_cmd, ihd_cmd, add_cmd, mc_cmd, stable_cmd, irr_cmd, nonres_cmd, minimal_cmd,
                    family_cmd, theta_cmd, xi_cmd, flow_cmd})
        add_common(s, c);
    for (auto* s : {add_cmd, mc_cmd}) {
        s->add_option("--alpha", alpha_re, "Real part of alpha, an exact rational")->required();
        s->add_option("--alpha-im", alpha_im, "Imaginary part of alpha");
    }
    for (auto* s : {theta_cmd, xi_cmd}) s->add_option("--point", point_file, "Point document (default: base point)");
    xi_cmd->add_option("--datum", datum_file, "AHHP datum at the point (default: closed form, or random jets with --seed)");
    xi_cmd->add_option("--seed", seed, "Seed for random jets applied to the closed form");
    flow_cmd->add_option("--path", path_file, "Path document with waypoints")->required();
    flow_cmd->add_option("--initial", datum_file, "Initial AHHP datum at the base point");
    flow_cmd->add_option("--steps", steps, "RK4 steps over the whole path")->check(CLI::PositiveNumber);
    flow_cmd->add_option("--tol", tol, "Residual abort threshold");
    flow_cmd->add_option("--fd-step", fd_step, "Finite-difference step for derivative residuals");
    flow_cmd->add_option("--collision-tol", collision_tol, "Minimal pole separation");
    flow_cmd->add_option("--probe-every", probe_every, "Residual probe interval in steps (0: start and end only)");
    flow_cmd->add_option("--seed", seed, "Seed for random initial jets");
    suite_cmd->add_option("--seed", suite_seed, "Seed for every random suite");
    suite_cmd->add_option("--only", only, "Run only these criteria")->check(CLI::Range(1, 10));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (suite_cmd->parsed()) {
            auto results = acceptance::run(suite_seed, only);
            acceptance::print(std::cout, results);
            for (const auto& r : results)
                if (!r.pass) return 1;
            return 0;
        }

        Json doc = io::read_file(c.input);

        if (kappa_cmd->parsed()) {
            HObject h = kappa(io::connection_from_json(doc, "input"));
            std::cerr << "kappa: dimV " << h.dim_v() << ", dimW " << h.dim_w() << ", " << h.blocks().size() << " blocks\n";
            emit(c, io::to_json(h));
        } else if (phi_cmd->parsed()) {
            ConnectionS a = phi(io::hobject_from_json(doc, "input"));
            std::cerr << "phi: dim " << a.dim() << ", " << a.poles().size() << " poles\n";
            emit(c, io::to_json(a));
        } else if (hd_cmd->parsed() || ihd_cmd->parsed()) {
            ConnectionS a = io::connection_from_json(doc, "input");
            ConnectionS b = hd_cmd->parsed() ? hd(a) : ihd(a);
            std::cerr << (hd_cmd->parsed() ? "hd" : "ihd") << ": dim " << a.dim() << " -> " << b.dim() << ", "
                      << b.poles().size() << " poles\n";
            emit(c, io::to_json(b));
        } else if (add_cmd->parsed()) {
            ConnectionS b = add_alpha(io::connection_from_json(doc, "input"), parse_scalar_flag(alpha_re, alpha_im));
            emit(c, io::to_json(b));
        } else if (mc_cmd->parsed()) {
            Scalar alpha = parse_scalar_flag(alpha_re, alpha_im);
            ConnectionS a = io::connection_from_json(doc, "input");
            McResult r = mc_alpha(a, alpha);
            std::cerr << "mc_" << str(alpha) << ": dim " << a.dim() << " -> " << r.connection.dim()
                      << (r.admissible ? ", admissible" : ", admissibility condition not met") << '\n';
            emit(c, io::to_json(r.connection));
        } else if (stable_cmd->parsed()) {
            bool v = is_stable(io::hobject_from_json(doc, "input"));
            std::cerr << "stable: " << (v ? "true" : "false") << '\n';
            emit(c, Json{{"stable", v}});
        } else if (irr_cmd->parsed()) {
            bool v = is_hobject(doc) ? is_irreducible_H(io::hobject_from_json(doc, "input"))
                                     : is_irreducible_S(io::connection_from_json(doc, "input"));
            std::cerr << "irreducible: " << (v ? "true" : "false") << '\n';
            emit(c, Json{{"irreducible", v}});
        } else if (nonres_cmd->parsed()) {
            bool v = nonresonance_check(io::normal_form_from_json(doc, "input"));
            std::cerr << "nonresonant: " << (v ? "true" : "false") << '\n';
            emit(c, Json{{"nonresonant", v}});
        } else if (minimal_cmd->parsed()) {
            HObject h = is_hobject(doc) ? io::hobject_from_json(doc, "input") : kappa(io::connection_from_json(doc, "input"));
            bool v = minimal_criterion(h);
            std::cerr << "minimal criterion: " << (v ? "true" : "false") << '\n';
            emit(c, Json{{"minimal", v}});
        } else {
            SingularityFamily fam = family_make(io::family_spec_from_json(doc, "input"));
            auto point = fam.base_point();
            if (!point_file.empty()) point = io::point_from_json(fam, io::read_file(point_file), point);
            auto datum = [&](const std::vector<Scalar>& at) {
                if (!datum_file.empty()) return io::hobject_from_json(io::read_file(datum_file), "datum");
                HObject cf = fam.closed_form(at);
                if (!seed) return cf;
                rnd::Rng rng(*seed);
                return family_datum(fam, at, rnd::gtilde(rng, cf));
            };
            if (family_cmd->parsed()) {
                Json poles = Json::array();
                for (std::size_t i = 0; i < fam.poles().size(); ++i)
                    poles.push_back(Json{{"t_param", fam.spec().poles[i].t_param},
                                         {"order", fam.normal_form(i, point).pole_order()},
                                         {"w_dim", fam.poles()[i].w_dim}});
                std::cerr << "family: " << fam.param_count() << " parameters, dimV " << fam.dim_v() << ", dimW "
                          << fam.dim_w() << (fam.fuchsian() ? ", Fuchsian" : ", irregular") << '\n';
                emit(c, Json{{"dimV", fam.dim_v()}, {"dimW", fam.dim_w()}, {"fuchsian", fam.fuchsian()}, {"poles", poles}});
            } else if (theta_cmd->parsed()) {
                emit(c, io::to_json(theta_build<Scalar>(fam, point)));
            } else if (xi_cmd->parsed()) {
                HObject h = datum(point);
                auto theta = theta_build<Scalar>(fam, point);
                auto xi = xi_build_exact(fam, point, h, theta);
                emit(c, Json{{"datum", io::to_json(h)}, {"theta", io::to_json(theta)}, {"xi", io::to_json(xi)}});
            } else if (flow_cmd->parsed()) {
                FlowPath path = io::path_from_json(fam, io::read_file(path_file));
                FlowOptions opt;
                opt.steps = steps;
                opt.residual_tol = tol;
                opt.fd_step = fd_step;
                opt.collision_tol = collision_tol;
                opt.probe_every = probe_every;
                FlowReport rep = datum_file.empty() ? flow_integrate(fam, recover_jets(fam, datum(fam.base_point())), path, opt)
                                                    : flow_integrate(fam, datum(fam.base_point()), path, opt);
                std::ostringstream csv;
                write_flow_csv(csv, rep);
                emit_text(c.output, csv.str());
                std::cerr << "flow: " << rep.rows.size() - 1 << " steps in " << rep.seconds << " s\n";
                for (std::size_t i = 0; i < rep.max_residuals.names.size(); ++i)
                    std::cerr << "  max " << rep.max_residuals.names[i] << " " << rep.max_residuals.values[i] << '\n';
                for (std::size_t i = 0; i < rep.max_drift.names.size(); ++i)
                    std::cerr << "  max " << rep.max_drift.names[i] << " " << rep.max_drift.values[i] << '\n';
                std::cerr << "  step-halving ratio " << rep.min_halving_ratio() << " over " << rep.halving_measured()
                          << " residuals\n";
            }
        }
        return 0;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
