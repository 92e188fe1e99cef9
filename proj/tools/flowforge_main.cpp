#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "flowforge/factor.hpp"
#include "flowforge/lab.hpp"
#include "flowforge/leaky.hpp"
#include "flowforge/program.hpp"
#include "flowforge/serialize.hpp"
#include "flowforge/splitting.hpp"
#include "flowforge/two_piece.hpp"
#include "flowforge/verify.hpp"

namespace ff = flowforge;

namespace {

int exit_code_for(ff::Err code) {
    switch (code) {
    case ff::Err::NegativeDeterminant:
    case ff::Err::SingularMatrix: return 2;
    case ff::Err::ParseError: return 3;
    case ff::Err::BudgetExceeded: return 4;
    case ff::Err::ConditionViolated: return 5;
    case ff::Err::UnknownDemo: return 6;
    default: return 1;
    }
}

std::vector<double> parse_csv_doubles(const std::string& text, const std::string& what) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t next = text.find(',', pos);
        if (next == std::string::npos) next = text.size();
        const std::string tok = text.substr(pos, next - pos);
        try {
            std::size_t used = 0;
            const double v = std::stod(tok, &used);
            while (used < tok.size() && std::isspace(static_cast<unsigned char>(tok[used]))) ++used;
            if (used != tok.size()) throw std::invalid_argument(tok);
            out.push_back(v);
        } catch (const std::exception&) {
            ff::fail(ff::Err::ParseError, what + ": bad number '" + tok + "'");
        }
        pos = next + 1;
    }
    return out;
}

ff::BoxDomain parse_box(const std::string& text) {
    ff::BoxDomain box;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t next = text.find(';', pos);
        if (next == std::string::npos) next = text.size();
        const std::vector<double> pair =
            parse_csv_doubles(text.substr(pos, next - pos), "box axis");
        if (pair.size() != 2) ff::fail(ff::Err::ParseError, "box axis needs 'lo,hi'");
        box.lo.push_back(pair[0]);
        box.hi.push_back(pair[1]);
        pos = next + 1;
    }
    box.check();
    return box;
}

ff::Matrix parse_json_matrix(const nlohmann::json& j, const std::string& field) {
    if (!j.is_array() || j.empty() || !j[0].is_array())
        ff::fail(ff::Err::ParseError, "field '" + field + "' must be an array of rows");
    const std::size_t rows = j.size(), cols = j[0].size();
    ff::Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        if (!j[r].is_array() || j[r].size() != cols)
            ff::fail(ff::Err::ParseError, "field '" + field + "' has ragged rows");
        for (std::size_t c = 0; c < cols; ++c) {
            if (!j[r][c].is_number())
                ff::fail(ff::Err::ParseError, "field '" + field + "' has a non-number entry");
            m(r, c) = j[r][c].get<double>();
        }
    }
    return m;
}

nlohmann::json parse_json_file(const std::string& path) {
    try {
        return nlohmann::json::parse(ff::read_file(path));
    } catch (const ff::FlowError&) {
        throw;
    } catch (const std::exception& e) {
        ff::fail(ff::Err::ParseError, path + ": " + e.what());
    }
}

// Oracle files either hold a flow program ("steps") or a tagged exact map.
std::pair<ff::MapFn, std::size_t> load_oracle(const std::string& path) {
    const std::string text = ff::read_file(path);
    const nlohmann::json root = parse_json_file(path);
    if (!root.is_object()) ff::fail(ff::Err::ParseError, path + ": top level must be an object");
    if (root.contains("steps")) {
        auto ev = std::make_shared<ff::Evaluator>(ff::deserialize(text));
        const std::size_t d = ev->dim();
        return {[ev](const ff::Vec& x) { return (*ev)(x); }, d};
    }
    if (!root.contains("kind") || !root["kind"].is_string())
        ff::fail(ff::Err::ParseError, path + ": oracle needs a 'kind' tag");
    const std::string kind = root["kind"].get<std::string>();
    if (kind == "affine") {
        const ff::Matrix w = parse_json_matrix(root.at("W"), "W");
        ff::Vec b(w.rows, 0.0);
        if (root.contains("b")) {
            if (!root["b"].is_array() || root["b"].size() != w.rows)
                ff::fail(ff::Err::ParseError, path + ": 'b' must match W rows");
            for (std::size_t r = 0; r < w.rows; ++r) b[r] = root["b"][r].get<double>();
        }
        return {[w, b](const ff::Vec& x) {
                    ff::Vec y = matvec(w, x);
                    for (std::size_t r = 0; r < y.size(); ++r) y[r] += b[r];
                    return y;
                },
                w.rows};
    }
    if (kind == "leaky") {
        if (!root.contains("alpha") || !root["alpha"].is_array())
            ff::fail(ff::Err::ParseError, path + ": 'alpha' must be an array");
        ff::Vec alpha(root["alpha"].size());
        for (std::size_t r = 0; r < alpha.size(); ++r) alpha[r] = root["alpha"][r].get<double>();
        return {[alpha](const ff::Vec& x) { return ff::eval_leaky(alpha, x); }, alpha.size()};
    }
    if (kind == "two-piece") {
        ff::TwoPieceMapSpec spec;
        spec.j = root.at("j").get<std::size_t>();
        spec.a = root.at("a").get<double>();
        spec.beta = root.value("beta", 0.0);
        spec.alpha = root.at("alpha").get<double>();
        const nlohmann::json& jw = root.at("w");
        spec.w.resize(jw.size());
        for (std::size_t r = 0; r < spec.w.size(); ++r) spec.w[r] = jw[r].get<double>();
        spec.dim = spec.w.size();
        ff::validate_two_piece(spec);
        return {[spec](const ff::Vec& x) { return ff::eval_two_piece(spec, x); }, spec.dim};
    }
    if (kind == "neural-ode") {
        const ff::NeuralODESpec spec = ff::parse_neural_ode(text);
        const std::vector<double> cuts = ff::piece_breakpoints(spec);
        return {[spec, cuts](const ff::Vec& x) {
                    return ff::integrate_rk4(
                        [&spec](const ff::Vec& y, double t) {
                            return ff::neural_ode_field(spec, y, t);
                        },
                        x, 0.0, spec.tau, 4096, cuts);
                },
                spec.dim};
    }
    ff::fail(ff::Err::ParseError, path + ": unknown oracle kind '" + kind + "'");
}

void print_report(const ff::SplitReport& rep) {
    std::printf("n %zu  dt %s\n", rep.n, ff::fmt_double(rep.dt).c_str());
    std::printf("coupling %s  lipschitz %s  field-sup %s\n", ff::fmt_double(rep.coupling).c_str(),
                ff::fmt_double(rep.lipschitz).c_str(), ff::fmt_double(rep.field_sup).c_str());
    std::printf("steps %zu\n", rep.step_count);
    std::printf("err-chain %s\n", ff::fmt_double(rep.err_chain).c_str());
    std::printf("err-rk4 %s\n", ff::fmt_double(rep.err_rk4).c_str());
}

int cmd_factor(const std::string& input, const std::string& output) {
    const nlohmann::json root = parse_json_file(input);
    if (!root.is_object() || !root.contains("W"))
        ff::fail(ff::Err::ParseError, input + ": expected an object with field 'W'");
    const ff::Matrix w = parse_json_matrix(root["W"], "W");
    ff::Vec b(w.rows, 0.0);
    if (root.contains("b")) {
        if (!root["b"].is_array() || root["b"].size() != w.rows)
            ff::fail(ff::Err::ParseError, input + ": 'b' must match W rows");
        for (std::size_t r = 0; r < w.rows; ++r) b[r] = root["b"][r].get<double>();
    }
    const ff::EliminationCertificate cert = ff::eliminate(w);
    std::printf("dim %zu  det %s\n", cert.dim, ff::fmt_double(cert.det_w).c_str());
    std::printf("shears %zu\n", cert.factors.size());
    std::string diag_line = "diag:", sign_line = "signs:";
    for (std::size_t r = 0; r < cert.dim; ++r) {
        diag_line += " " + ff::fmt_double(cert.diag[r]);
        sign_line += cert.signs[r] > 0.0 ? " +" : " -";
    }
    std::printf("%s\n%s\n", diag_line.c_str(), sign_line.c_str());
    if (!output.empty()) {
        const ff::FlowProgram prog = ff::compile_affine(w, b);
        ff::write_file(output, ff::serialize(prog));
        std::printf("wrote %zu steps to %s\n", prog.steps.size(), output.c_str());
    }
    return 0;
}

int cmd_compile(const std::string& input, const std::string& box_text, double eps, long n_fixed,
                long max_n, const std::string& output) {
    const ff::NeuralODESpec spec = ff::parse_neural_ode(ff::read_file(input));
    const ff::BoxDomain box = parse_box(box_text);
    ff::SplitResult res;
    if (n_fixed > 0)
        res = ff::compile_neural_ode(spec, box, static_cast<std::size_t>(n_fixed));
    else
        res = ff::auto_compile_neural_ode(spec, box, eps, static_cast<std::size_t>(max_n));
    print_report(res.report);
    if (!output.empty()) {
        ff::write_file(output, ff::serialize(res.program));
        std::printf("wrote %zu steps to %s\n", res.program.steps.size(), output.c_str());
    }
    return 0;
}

int cmd_eval(const std::string& input, const std::string& x_text) {
    const ff::FlowProgram prog = ff::deserialize(ff::read_file(input));
    const ff::Vec x = parse_csv_doubles(x_text, "--x");
    if (x.size() != prog.dim) ff::fail(ff::Err::DimensionMismatch, "--x length vs program dim");
    const ff::Vec y = ff::Evaluator(prog)(x);
    std::string line;
    for (std::size_t r = 0; r < y.size(); ++r) {
        if (r) line += ",";
        line += ff::fmt_double(y[r]);
    }
    std::printf("%s\n", line.c_str());
    return 0;
}

int cmd_verify(const std::string& input, const std::string& oracle_path,
               const std::string& box_text, long grid, const std::string& metric, double p,
               long points, long seed, const std::string& report_path, bool check_convexity) {
    const ff::FlowProgram prog = ff::deserialize(ff::read_file(input));
    const ff::Evaluator ev(prog);
    const ff::MapFn compiled = [&ev](const ff::Vec& x) { return ev(x); };
    const auto [oracle, oracle_dim] = load_oracle(oracle_path);
    if (oracle_dim != prog.dim)
        ff::fail(ff::Err::DimensionMismatch, "oracle dim vs program dim");
    const ff::BoxDomain box = parse_box(box_text);
    if (box.dim() != prog.dim) ff::fail(ff::Err::DimensionMismatch, "box dim vs program dim");

    ff::ErrorReport rep;
    if (metric == "sup") {
        std::size_t per_axis = grid > 0 ? static_cast<std::size_t>(grid)
                                        : ff::default_points_per_axis(prog.dim);
        if (per_axis > 0) {
            rep = ff::sup_error(compiled, oracle, box, per_axis);
        } else {
            rep = ff::sup_error_points(
                compiled, oracle,
                ff::sample_points(box, static_cast<std::size_t>(points),
                                  static_cast<std::uint64_t>(seed)));
            rep.seed = static_cast<std::uint64_t>(seed);
        }
    } else if (metric == "lp") {
        rep = ff::lp_error(compiled, oracle, box, p, static_cast<std::size_t>(points),
                           static_cast<std::uint64_t>(seed));
    } else {
        ff::fail(ff::Err::ParseError, "--metric must be 'sup' or 'lp'");
    }
    std::printf("%s %s  points %llu\n", rep.metric.c_str(), ff::fmt_double(rep.value).c_str(),
                static_cast<unsigned long long>(rep.points));
    if (!report_path.empty()) {
        std::string csv = std::string(ff::ErrorReport::csv_header()) + "\n" + rep.csv_row() + "\n";
        ff::write_file(report_path, csv);
    }
    if (check_convexity) {
        if (prog.dim != 1)
            ff::fail(ff::Err::DimensionMismatch, "--check-convexity needs a 1-d program");
        const bool ok = ff::convexity_check_1d(compiled, box.lo[0], box.hi[0], 101);
        std::printf("convexity %s\n", ok ? "ok" : "violated");
        if (!ok) return 1;
    }
    return 0;
}

void write_csv(const std::string& path, const std::string& body) {
    if (path.empty()) return;
    ff::write_file(path, body);
    std::printf("wrote %s\n", path.c_str());
}

int demo_product_formula(const std::string& output) {
    ff::Matrix a1(2, 2), a2(2, 2);
    a1(0, 1) = 1.0;
    a1(1, 0) = -1.0;
    a2(0, 0) = 0.5;
    a2(1, 1) = -0.3;
    const ff::Vec b1{0.1, 0.0}, b2{0.0, -0.1};
    const double tau = 1.0;
    const ff::AffineKernel exact =
        ff::affine_flow_matrices(a1 + a2, ff::Vec{b1[0] + b2[0], b1[1] + b2[1]}, tau);
    const ff::MapFn oracle = [&exact](const ff::Vec& x) {
        ff::Vec y = matvec(exact.W, x);
        for (std::size_t r = 0; r < y.size(); ++r) y[r] += exact.c[r];
        return y;
    };
    const std::vector<ff::WeightedField> terms = {{1.0, ff::PrimitiveField::affine(a1, b1)},
                                                  {1.0, ff::PrimitiveField::affine(a2, b2)}};
    const ff::BoxDomain box = ff::BoxDomain::cube(2, -1.0, 1.0);
    std::string csv = "n,error\n";
    double prev = 0.0;
    bool monotone = true;
    for (std::size_t n : {8, 16, 32, 64}) {
        const ff::FlowProgram prog = ff::product_formula_program(2, terms, tau, n);
        const ff::Evaluator ev(prog);
        const ff::ErrorReport rep =
            ff::sup_error([&ev](const ff::Vec& x) { return ev(x); }, oracle, box, 15);
        std::printf("n %zu  error %s\n", n, ff::fmt_double(rep.value).c_str());
        csv += std::to_string(n) + "," + ff::fmt_double(rep.value) + "\n";
        if (n > 8 && rep.value >= prev) monotone = false;
        prev = rep.value;
    }
    std::printf("monotone %s\n", monotone ? "yes" : "no");
    write_csv(output, csv);
    return monotone ? 0 : 1;
}

int demo_commutator(const std::string& output) {
    ff::Matrix a(2, 2), b(2, 2);
    a(0, 1) = 1.0;
    b(1, 0) = 1.0;
    const ff::PrimitiveField f = ff::PrimitiveField::affine(a, ff::Vec(2, 0.0));
    const ff::PrimitiveField g = ff::PrimitiveField::affine(b, ff::Vec(2, 0.0));
    const ff::BoxDomain box = ff::BoxDomain::cube(2, -1.0, 1.0);
    std::string csv = "tau,error\n";
    bool contracting = true;
    for (double tau : {1e-2, 1e-3}) {
        double errs[2];
        int slot = 0;
        for (double t : {tau, tau / 4.0}) {
            // [f, g] integrates to the flow of diag(-1, 1) * t.
            const ff::MapFn oracle = [t](const ff::Vec& x) {
                return ff::Vec{x[0] * std::exp(-t), x[1] * std::exp(t)};
            };
            const ff::FlowProgram prog = ff::commutator_program(2, f, g, t);
            const ff::Evaluator ev(prog);
            const ff::ErrorReport rep =
                ff::sup_error([&ev](const ff::Vec& x) { return ev(x); }, oracle, box, 15);
            errs[slot++] = rep.value;
            std::printf("tau %s  error %s\n", ff::fmt_double(t).c_str(),
                        ff::fmt_double(rep.value).c_str());
            csv += ff::fmt_double(t) + "," + ff::fmt_double(rep.value) + "\n";
        }
        if (!(errs[1] <= 0.6 * errs[0])) contracting = false;
    }
    std::printf("contracting %s\n", contracting ? "yes" : "no");
    write_csv(output, csv);
    return contracting ? 0 : 1;
}

int demo_convexity_obstruction(const std::string& output) {
    // Distance of the concave target x - exp(-x) from every convex function
    // on [-2, 2], bounded below via chord violations on a grid.
    const std::size_t n = 101;
    ff::Vec xs(n), ys(n);
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = -2.0 + 4.0 * static_cast<double>(i) / static_cast<double>(n - 1);
        ys[i] = xs[i] - std::exp(-xs[i]);
    }
    const double floor = ff::convex_gap_floor(xs, ys);
    std::printf("floor %s\n", ff::fmt_double(floor).c_str());
    std::string csv = "x,phi\n";
    for (std::size_t i = 0; i < n; ++i)
        csv += ff::fmt_double(xs[i]) + "," + ff::fmt_double(ys[i]) + "\n";
    write_csv(output, csv);
    const bool significant = floor > 0.01;
    std::printf("obstruction %s\n", significant ? "yes" : "no");
    return significant ? 0 : 1;
}

int cmd_demo(const std::string& name, const std::string& output) {
    if (name == "product-formula") return demo_product_formula(output);
    if (name == "commutator") return demo_commutator(output);
    if (name == "convexity-obstruction") return demo_convexity_obstruction(output);
    ff::fail(ff::Err::UnknownDemo, "unknown demo '" + name + "'");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"flowforge: compile piecewise-linear maps and neural ODE flows into flow programs"};
    app.require_subcommand(1);

    std::string input, output, box_text, oracle_path, metric = "sup", report_path, x_text,
                demo_name;
    double eps = 0.05, p = 2.0;
    long n_fixed = 0, max_n = 1L << 20, grid = 0, points = 1000, seed = 2026;
    bool check_convexity = false;

    CLI::App* factor = app.add_subcommand("factor", "factor an invertible matrix into shear flows");
    factor->add_option("--input", input, "JSON file with fields W and optional b")->required();
    factor->add_option("--output", output, "write the compiled flow program here");

    CLI::App* compile = app.add_subcommand("compile", "compile a neural ODE spec by splitting");
    compile->add_option("--input", input, "neural ODE spec JSON")->required();
    compile->add_option("--box", box_text, "domain 'lo,hi;lo,hi;...'")->required();
    compile->add_option("--eps", eps, "target reference error for auto resolution");
    compile->add_option("--n", n_fixed, "fixed sub-step count (overrides --eps)");
    compile->add_option("--max-n", max_n, "resolution budget for auto mode");
    compile->add_option("--output", output, "write the compiled flow program here");

    CLI::App* eval = app.add_subcommand("eval", "evaluate a flow program at a point");
    eval->add_option("--input", input, "flow program JSON")->required();
    eval->add_option("--x", x_text, "point 'x1,x2,...'")->required();

    CLI::App* verify = app.add_subcommand("verify", "measure a program against an oracle");
    verify->add_option("--input", input, "flow program JSON")->required();
    verify->add_option("--oracle", oracle_path, "oracle JSON (program or tagged exact map)")
        ->required();
    verify->add_option("--box", box_text, "domain 'lo,hi;lo,hi;...'")->required();
    verify->add_option("--grid", grid, "grid points per axis for the sup metric");
    verify->add_option("--metric", metric, "sup | lp");
    verify->add_option("--p", p, "exponent for the lp metric");
    verify->add_option("--points", points, "Monte Carlo sample count");
    verify->add_option("--seed", seed, "Monte Carlo seed");
    verify->add_option("--report", report_path, "write a CSV error report here");
    verify->add_flag("--check-convexity", check_convexity, "also require convexity (1-d)");

    CLI::App* demo = app.add_subcommand("demo", "run a bundled demonstration");
    demo->add_option("name", demo_name, "product-formula | commutator | convexity-obstruction")
        ->required();
    demo->add_option("--output", output, "write the demo CSV here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (factor->parsed()) return cmd_factor(input, output);
        if (compile->parsed()) return cmd_compile(input, box_text, eps, n_fixed, max_n, output);
        if (eval->parsed()) return cmd_eval(input, x_text);
        if (verify->parsed())
            return cmd_verify(input, oracle_path, box_text, grid, metric, p, points, seed,
                              report_path, check_convexity);
        if (demo->parsed()) return cmd_demo(demo_name, output);
    } catch (const ff::FlowError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
