#include "flowforge/splitting.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "flowforge/serialize.hpp"
#include "flowforge/two_piece.hpp"
#include "json.hpp"

namespace flowforge {

namespace {

const NeuralODEPiece& piece_at(const NeuralODESpec& spec, double t) {
    std::size_t idx = 0;
    for (std::size_t p = 1; p < spec.pieces.size(); ++p)
        if (spec.pieces[p].t_start <= t) idx = p;
    return spec.pieces[idx];
}

double leaky(double alpha, double u) { return u >= 0.0 ? u : alpha * u; }

} // namespace

void validate_neural_ode(const NeuralODESpec& spec) {
    if (spec.dim == 0 || spec.width == 0)
        fail(Err::DimensionMismatch, "neural ODE needs positive dim and width");
    if (!(spec.alpha > 0.0))
        fail(Err::AlphaOutOfRange, "slope must be positive, got " + fmt_double(spec.alpha));
    if (!std::isfinite(spec.tau) || spec.tau < 0.0)
        fail(Err::NonFiniteInput, "horizon tau must be finite and nonnegative");
    if (spec.pieces.empty()) fail(Err::DimensionMismatch, "neural ODE needs at least one piece");
    double prev = -1.0;
    for (std::size_t p = 0; p < spec.pieces.size(); ++p) {
        const NeuralODEPiece& pc = spec.pieces[p];
        const std::string where = "piece " + std::to_string(p);
        if (p == 0 && pc.t_start != 0.0)
            fail(Err::TimeOutOfRange, "first piece must start at t = 0");
        if (pc.t_start <= prev) fail(Err::TimeOutOfRange, where + " start times must increase");
        if (spec.tau > 0.0 && pc.t_start >= spec.tau)
            fail(Err::TimeOutOfRange, where + " starts at or after tau");
        prev = pc.t_start;
        if (pc.s.rows != spec.dim || pc.s.cols != spec.width)
            fail(Err::DimensionMismatch, where + ": S must be dim x width");
        if (pc.w.rows != spec.width || pc.w.cols != spec.dim)
            fail(Err::DimensionMismatch, where + ": W must be width x dim");
        if (pc.b.size() != spec.width) fail(Err::DimensionMismatch, where + ": b must have width entries");
        if (!all_finite(pc.s) || !all_finite(pc.w) || !all_finite(pc.b) || !std::isfinite(pc.t_start))
            fail(Err::NonFiniteInput, where + " has non-finite entries");
    }
}

Vec neural_ode_field(const NeuralODESpec& spec, const Vec& x, double t) {
    if (x.size() != spec.dim) fail(Err::DimensionMismatch, "neural_ode_field input length");
    if (!(t >= 0.0) || !(t <= spec.tau))
        fail(Err::TimeOutOfRange, "t = " + fmt_double(t) + " outside [0, " + fmt_double(spec.tau) + "]");
    const NeuralODEPiece& pc = piece_at(spec, t);
    Vec out(spec.dim, 0.0);
    for (std::size_t i = 0; i < spec.width; ++i) {
        double u = pc.b[i];
        for (std::size_t m = 0; m < spec.dim; ++m) u += pc.w(i, m) * x[m];
        const double act = leaky(spec.alpha, u);
        for (std::size_t j = 0; j < spec.dim; ++j) out[j] += pc.s(j, i) * act;
    }
    return out;
}

std::vector<double> piece_breakpoints(const NeuralODESpec& spec) {
    std::vector<double> cuts;
    for (const NeuralODEPiece& pc : spec.pieces)
        if (pc.t_start > 0.0 && pc.t_start < spec.tau) cuts.push_back(pc.t_start);
    return cuts;
}

double coupling_bound(const NeuralODESpec& spec) {
    double m = 0.0;
    for (const NeuralODEPiece& pc : spec.pieces)
        for (std::size_t i = 0; i < spec.width; ++i)
            for (std::size_t j = 0; j < spec.dim; ++j)
                m = std::max(m, std::fabs(pc.s(j, i) * pc.w(i, j)));
    return m;
}

double lipschitz_bound(const NeuralODESpec& spec) {
    double best = 0.0;
    for (const NeuralODEPiece& pc : spec.pieces) {
        for (std::size_t i = 0; i < spec.width; ++i) {
            double s2 = 0.0, w2 = 0.0;
            for (std::size_t j = 0; j < spec.dim; ++j) {
                s2 += pc.s(j, i) * pc.s(j, i);
                w2 += pc.w(i, j) * pc.w(i, j);
            }
            best = std::max(best, std::sqrt(s2) * std::sqrt(w2));
        }
    }
    return static_cast<double>(spec.width) * std::max(1.0, spec.alpha) * best;
}

double field_sup_bound(const NeuralODESpec& spec, const BoxDomain& k) {
    const std::size_t per_axis = default_points_per_axis(spec.dim);
    const std::vector<Vec> pts =
        per_axis > 0 ? grid_points(k, per_axis) : sample_points(k, 1000, 2026);
    double v = 0.0;
    for (const Vec& x : pts)
        for (const NeuralODEPiece& pc : spec.pieces)
            v = std::max(v, norm2(neural_ode_field(spec, x, pc.t_start)));
    return v;
}

namespace {

TwoPieceMapSpec sub_map(const NeuralODESpec& spec, const NeuralODEPiece& pc, double dt,
                        std::size_t i, std::size_t j) {
    TwoPieceMapSpec sub;
    sub.dim = spec.dim;
    sub.j = j;
    sub.a = dt * pc.s(j, i);
    sub.w.assign(spec.dim, 0.0);
    for (std::size_t m = 0; m < spec.dim; ++m) sub.w[m] = pc.w(i, m);
    sub.beta = pc.b[i];
    sub.alpha = spec.alpha;
    return sub;
}

} // namespace

Vec eval_split_chain(const NeuralODESpec& spec, const Vec& x, std::size_t n) {
    const double dt = spec.tau / static_cast<double>(n);
    Vec y = x;
    for (std::size_t k = 0; k < n; ++k) {
        const NeuralODEPiece& pc = piece_at(spec, static_cast<double>(k) * dt);
        for (std::size_t i = 0; i < spec.width; ++i)
            for (std::size_t j = 0; j < spec.dim; ++j) {
                const TwoPieceMapSpec sub = sub_map(spec, pc, dt, i, j);
                if (sub.a != 0.0) y = eval_two_piece(sub, y);
            }
    }
    return y;
}

SplitResult compile_neural_ode(const NeuralODESpec& spec, const BoxDomain& k, std::size_t n) {
    validate_neural_ode(spec);
    k.check();
    if (k.dim() != spec.dim) fail(Err::DimensionMismatch, "compile_neural_ode box dim");

    const double m = coupling_bound(spec);
    const double m_eff = std::max(1.0, spec.alpha) * m;
    if (n == 0 || static_cast<double>(n) <= spec.tau * m_eff)
        fail(Err::ConditionViolated, "need n > tau * M = " + fmt_double(spec.tau * m_eff) +
                                         ", got n = " + std::to_string(n));

    SplitResult res;
    res.report.n = n;
    res.report.dt = spec.tau / static_cast<double>(n);
    res.report.coupling = m;
    res.report.lipschitz = lipschitz_bound(spec);
    res.report.field_sup = field_sup_bound(spec, k);
    res.report.work_box = inflate_domain(k, spec.tau, res.report.lipschitz, res.report.field_sup);

    FlowProgram& prog = res.program;
    prog.dim = spec.dim;
    prog.family = Family::F1;
    BoxDomain box = res.report.work_box;
    const double dt = res.report.dt;
    for (std::size_t step_k = 0; step_k < n; ++step_k) {
        const NeuralODEPiece& pc = piece_at(spec, static_cast<double>(step_k) * dt);
        for (std::size_t i = 0; i < spec.width; ++i)
            for (std::size_t j = 0; j < spec.dim; ++j) {
                const TwoPieceMapSpec sub = sub_map(spec, pc, dt, i, j);
                if (sub.a == 0.0) continue;
                FlowProgram factor = compile_two_piece(sub, box);
                for (FlowStep& st : factor.steps) prog.steps.push_back(std::move(st));
                box = two_piece_image(sub, box);
            }
    }
    res.report.step_count = prog.steps.size();

    const Evaluator ev(prog);
    const std::size_t per_axis = default_points_per_axis(spec.dim);
    const std::vector<Vec> pts =
        per_axis > 0 ? grid_points(k, per_axis) : sample_points(k, 1000, 2026);
    const std::vector<double> cuts = piece_breakpoints(spec);
    std::vector<double> gap_chain(pts.size()), gap_rk4(pts.size());
    parallel_for(pts.size(), [&](std::size_t idx) {
        const Vec& x = pts[idx];
        const Vec compiled = ev(x);
        const Vec chain = eval_split_chain(spec, x, n);
        const Vec ref = integrate_rk4(
            [&spec](const Vec& y, double t) { return neural_ode_field(spec, y, t); }, x, 0.0,
            spec.tau, 2048, cuts);
        double gc = 0.0, gr = 0.0;
        for (std::size_t j = 0; j < spec.dim; ++j) {
            gc = std::max(gc, std::fabs(compiled[j] - chain[j]));
            gr = std::max(gr, std::fabs(compiled[j] - ref[j]));
        }
        gap_chain[idx] = gc;
        gap_rk4[idx] = gr;
    });
    for (std::size_t idx = 0; idx < pts.size(); ++idx) {
        res.report.err_chain = std::max(res.report.err_chain, gap_chain[idx]);
        res.report.err_rk4 = std::max(res.report.err_rk4, gap_rk4[idx]);
    }
    return res;
}

SplitResult auto_compile_neural_ode(const NeuralODESpec& spec, const BoxDomain& k, double eps,
                                    std::size_t max_n) {
    validate_neural_ode(spec);
    const double m_eff = std::max(1.0, spec.alpha) * coupling_bound(spec);
    std::size_t n = std::max<std::size_t>(static_cast<std::size_t>(std::ceil(spec.tau * m_eff)) + 1, 4);
    for (;;) {
        if (n > max_n)
            fail(Err::BudgetExceeded, "splitting resolution n = " + std::to_string(n) +
                                          " exceeds budget " + std::to_string(max_n));
        SplitResult res = compile_neural_ode(spec, k, n);
        if (res.report.err_rk4 <= eps) return res;
        n *= 2;
    }
}

namespace {

std::string emit_vec(const Vec& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += fmt_double(v[i]);
    }
    out += "]";
    return out;
}

std::string emit_matrix(const Matrix& m) {
    std::string out = "[";
    for (std::size_t r = 0; r < m.rows; ++r) {
        if (r) out += ", ";
        out += "[";
        for (std::size_t c = 0; c < m.cols; ++c) {
            if (c) out += ", ";
            out += fmt_double(m(r, c));
        }
        out += "]";
    }
    out += "]";
    return out;
}

double want_number(const nlohmann::json& j, const std::string& field) {
    if (!j.is_number()) fail(Err::ParseError, "field '" + field + "' must be a number");
    return j.get<double>();
}

std::size_t want_count(const nlohmann::json& j, const std::string& field) {
    if (!j.is_number_unsigned()) fail(Err::ParseError, "field '" + field + "' must be a nonnegative integer");
    return j.get<std::size_t>();
}

Vec want_vec(const nlohmann::json& j, std::size_t len, const std::string& field) {
    if (!j.is_array() || j.size() != len)
        fail(Err::ParseError, "field '" + field + "' must be an array of " + std::to_string(len));
    Vec v(len);
    for (std::size_t i = 0; i < len; ++i) v[i] = want_number(j[i], field);
    return v;
}

Matrix want_matrix(const nlohmann::json& j, std::size_t rows, std::size_t cols,
                   const std::string& field) {
    if (!j.is_array() || j.size() != rows)
        fail(Err::ParseError, "field '" + field + "' must have " + std::to_string(rows) + " rows");
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        const Vec row = want_vec(j[r], cols, field + " row " + std::to_string(r));
        for (std::size_t c = 0; c < cols; ++c) m(r, c) = row[c];
    }
    return m;
}

} // namespace

NeuralODESpec parse_neural_ode(const std::string& text) {
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
        fail(Err::ParseError, std::string("invalid JSON: ") + e.what());
    }
    if (!root.is_object()) fail(Err::ParseError, "top level must be an object");
    for (const char* key : {"dim", "width", "alpha", "tau", "pieces"})
        if (!root.contains(key)) fail(Err::ParseError, std::string("missing field '") + key + "'");

    NeuralODESpec spec;
    spec.dim = want_count(root["dim"], "dim");
    spec.width = want_count(root["width"], "width");
    spec.alpha = want_number(root["alpha"], "alpha");
    spec.tau = want_number(root["tau"], "tau");
    if (!root["pieces"].is_array() || root["pieces"].empty())
        fail(Err::ParseError, "field 'pieces' must be a nonempty array");
    for (std::size_t p = 0; p < root["pieces"].size(); ++p) {
        const nlohmann::json& jp = root["pieces"][p];
        const std::string where = "pieces[" + std::to_string(p) + "]";
        if (!jp.is_object()) fail(Err::ParseError, where + " must be an object");
        for (const char* key : {"t", "S", "W", "b"})
            if (!jp.contains(key)) fail(Err::ParseError, where + " missing field '" + key + "'");
        NeuralODEPiece pc;
        pc.t_start = want_number(jp["t"], where + ".t");
        pc.s = want_matrix(jp["S"], spec.dim, spec.width, where + ".S");
        pc.w = want_matrix(jp["W"], spec.width, spec.dim, where + ".W");
        pc.b = want_vec(jp["b"], spec.width, where + ".b");
        spec.pieces.push_back(std::move(pc));
    }
    validate_neural_ode(spec);
    return spec;
}

std::string serialize_neural_ode(const NeuralODESpec& spec) {
    std::string out = "{\"dim\": " + std::to_string(spec.dim) + ",\n";
    out += "\"width\": " + std::to_string(spec.width) + ",\n";
    out += "\"alpha\": " + fmt_double(spec.alpha) + ",\n";
    out += "\"tau\": " + fmt_double(spec.tau) + ",\n";
    out += "\"pieces\": [\n";
    for (std::size_t p = 0; p < spec.pieces.size(); ++p) {
        const NeuralODEPiece& pc = spec.pieces[p];
        out += "{\"t\": " + fmt_double(pc.t_start) + ", \"S\": " + emit_matrix(pc.s) +
               ", \"W\": " + emit_matrix(pc.w) + ", \"b\": " + emit_vec(pc.b) + "}";
        out += p + 1 < spec.pieces.size() ? ",\n" : "\n";
    }
    out += "]\n}\n";
    return out;
}

} // namespace flowforge
