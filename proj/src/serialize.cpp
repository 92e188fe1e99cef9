#include "flowforge/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace flowforge {

std::string fmt_double(double v) {
    if (v == 0.0) v = 0.0; // canonicalize -0, so formatting round-trips
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

void emit_vec(std::string& out, const Vec& v) {
    out += '[';
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += fmt_double(v[i]);
    }
    out += ']';
}

void emit_matrix(std::string& out, const Matrix& m) {
    out += '[';
    for (std::size_t i = 0; i < m.rows; ++i) {
        if (i) out += ',';
        out += '[';
        for (std::size_t j = 0; j < m.cols; ++j) {
            if (j) out += ',';
            out += fmt_double(m(i, j));
        }
        out += ']';
    }
    out += ']';
}

} // namespace

std::string serialize(const FlowProgram& prog) {
    validate_program(prog);
    std::string out;
    out += "{\n\"dim\": " + std::to_string(prog.dim) + ",\n";
    out += std::string("\"family\": \"") + family_name(prog.family) + "\",\n";
    out += "\"steps\": [";
    for (std::size_t s = 0; s < prog.steps.size(); ++s) {
        const FlowStep& step = prog.steps[s];
        out += s ? ",\n" : "\n";
        switch (step.field.kind) {
            case FieldKind::Affine:
                out += "{\"type\":\"affine\",\"A\":";
                emit_matrix(out, step.field.A);
                out += ",\"b\":";
                emit_vec(out, step.field.b);
                out += ",\"t\":" + fmt_double(step.duration) + "}";
                break;
            case FieldKind::ReLU:
                out += "{\"type\":\"relu\",\"t\":" + fmt_double(step.duration) + "}";
                break;
            case FieldKind::NegReLU:
                out += "{\"type\":\"negrelu\",\"t\":" + fmt_double(step.duration) + "}";
                break;
        }
    }
    out += prog.steps.empty() ? "]\n}\n" : "\n]\n}\n";
    return out;
}

namespace {

using nlohmann::json;

double want_number(const json& j, const std::string& at) {
    if (!j.is_number()) fail(Err::ParseError, at + ": expected a number");
    return j.get<double>();
}

Vec want_vec(const json& j, const std::string& at) {
    if (!j.is_array()) fail(Err::ParseError, at + ": expected an array");
    Vec v;
    v.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i)
        v.push_back(want_number(j[i], at + "[" + std::to_string(i) + "]"));
    return v;
}

Matrix want_matrix(const json& j, const std::string& at) {
    if (!j.is_array() || j.empty()) fail(Err::ParseError, at + ": expected an array of rows");
    const std::size_t rows = j.size();
    Vec first = want_vec(j[0], at + "[0]");
    Matrix m(rows, first.size());
    for (std::size_t c = 0; c < first.size(); ++c) m(0, c) = first[c];
    for (std::size_t r = 1; r < rows; ++r) {
        Vec row = want_vec(j[r], at + "[" + std::to_string(r) + "]");
        if (row.size() != m.cols) fail(Err::ParseError, at + ": ragged rows");
        for (std::size_t c = 0; c < row.size(); ++c) m(r, c) = row[c];
    }
    return m;
}

const json& want_field(const json& j, const char* key, const std::string& at) {
    auto it = j.find(key);
    if (it == j.end()) fail(Err::ParseError, at + ": missing field '" + key + "'");
    return *it;
}

} // namespace

FlowProgram deserialize(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        fail(Err::ParseError, e.what());
    }
    if (!doc.is_object()) fail(Err::ParseError, "top level: expected an object");

    FlowProgram prog;
    const json& jd = want_field(doc, "dim", "top level");
    if (!jd.is_number_unsigned() || jd.get<std::size_t>() == 0)
        fail(Err::ParseError, "dim: expected a positive integer");
    prog.dim = jd.get<std::size_t>();

    const json& jf = want_field(doc, "family", "top level");
    const std::string fam = jf.is_string() ? jf.get<std::string>() : "";
    if (fam == "F0")
        prog.family = Family::F0;
    else if (fam == "F1")
        prog.family = Family::F1;
    else if (fam == "F2")
        prog.family = Family::F2;
    else
        fail(Err::ParseError, "family: expected \"F0\", \"F1\" or \"F2\"");

    const json& js = want_field(doc, "steps", "top level");
    if (!js.is_array()) fail(Err::ParseError, "steps: expected an array");
    for (std::size_t s = 0; s < js.size(); ++s) {
        const std::string at = "steps[" + std::to_string(s) + "]";
        const json& jstep = js[s];
        if (!jstep.is_object()) fail(Err::ParseError, at + ": expected an object");
        const json& jt = want_field(jstep, "type", at);
        const std::string type = jt.is_string() ? jt.get<std::string>() : "";
        FlowStep step;
        step.duration = want_number(want_field(jstep, "t", at), at + ".t");
        if (type == "affine") {
            step.field = PrimitiveField::affine(want_matrix(want_field(jstep, "A", at), at + ".A"),
                                                want_vec(want_field(jstep, "b", at), at + ".b"));
        } else if (type == "relu") {
            step.field = PrimitiveField::relu();
        } else if (type == "negrelu") {
            step.field = PrimitiveField::negrelu();
        } else {
            fail(Err::ParseError, at + ".type: unknown step type '" + type + "'");
        }
        prog.steps.push_back(std::move(step));
    }
    validate_program(prog);
    return prog;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Err::ParseError, "cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(Err::ParseError, "cannot write file: " + path);
    out << content;
}

} // namespace flowforge
