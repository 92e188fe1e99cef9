#include "doctest.h"

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

#include "flowforge/program.hpp"
#include "flowforge/serialize.hpp"

using namespace flowforge;

namespace {

struct RunResult {
    int code = -1;
    std::string out; // stdout and stderr combined
};

RunResult run_cli(const std::string& args, const std::string& env = "") {
    std::string cmd = env;
    if (!cmd.empty()) cmd += " ";
    cmd += std::string(FLOWFORGE_CLI_PATH) + " " + args + " 2>&1";
    RunResult res;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[512];
    while (std::fgets(buf, sizeof(buf), pipe) != nullptr) res.out += buf;
    const int status = pclose(pipe);
    REQUIRE(WIFEXITED(status));
    res.code = WEXITSTATUS(status);
    return res;
}

const std::string& tmp_dir() {
    static std::string dir = [] {
        char tmpl[] = "/tmp/flowforge_cli_XXXXXX";
        char* made = mkdtemp(tmpl);
        REQUIRE(made != nullptr);
        return std::string(made);
    }();
    return dir;
}

std::string write_text(const std::string& name, const std::string& content) {
    const std::string path = tmp_dir() + "/" + name;
    std::ofstream out(path);
    REQUIRE(out.good());
    out << content;
    out.close();
    return path;
}

bool contains(const std::string& hay, const std::string& needle) {
    return hay.find(needle) != std::string::npos;
}

// First line of the form "a,b,..." parsed as doubles.
std::vector<double> parse_csv_line(const std::string& text) {
    std::vector<double> vals;
    std::size_t pos = 0;
    const std::size_t end = text.find('\n');
    const std::string line = text.substr(0, end);
    while (pos <= line.size()) {
        std::size_t next = line.find(',', pos);
        if (next == std::string::npos) next = line.size();
        vals.push_back(std::stod(line.substr(pos, next - pos)));
        pos = next + 1;
    }
    return vals;
}

const char* kDemoSpec = FLOWFORGE_DATA_DIR "/demo_node_d2.json";
const char* kBox2 = "--box='-1,1;-1,1'"; // quoted: ';' is a shell separator

} // namespace

TEST_CASE("cli factor and eval round trip") {
    const std::string input =
        write_text("rot.json", R"({"W": [[0, -1], [1, 0]], "b": [0.5, -0.25]})");
    const std::string prog = tmp_dir() + "/rot_prog.json";

    RunResult fac = run_cli("factor --input " + input + " --output " + prog);
    CHECK(fac.code == 0);
    CHECK(contains(fac.out, "dim 2  det 1\n"));
    CHECK(contains(fac.out, "shears 3\n"));
    CHECK(contains(fac.out, "diag: 1 1\n"));
    CHECK(contains(fac.out, "signs: + +\n"));
    CHECK(contains(fac.out, "wrote"));

    RunResult ev = run_cli("eval --input " + prog + " --x 1,0");
    CHECK(ev.code == 0);
    const std::vector<double> y = parse_csv_line(ev.out);
    REQUIRE(y.size() == 2);
    CHECK(std::fabs(y[0] - 0.5) <= 1e-12);
    CHECK(std::fabs(y[1] - 0.75) <= 1e-12);

    // wrong arity and malformed numbers
    CHECK(run_cli("eval --input " + prog + " --x 1,0,3").code == 1);
    RunResult bad = run_cli("eval --input " + prog + " --x 1,zebra");
    CHECK(bad.code == 3);
    CHECK(contains(bad.out, "error:"));
}

TEST_CASE("cli factor rejections") {
    const std::string singular = write_text("singular.json", R"({"W": [[1, 2], [2, 4]]})");
    RunResult s = run_cli("factor --input " + singular);
    CHECK(s.code == 2);
    CHECK(contains(s.out, "determinant"));

    const std::string mirrored = write_text("mirror.json", R"({"W": [[-1, 0], [0, 1]]})");
    RunResult m = run_cli("factor --input " + mirrored);
    CHECK(m.code == 2);
    CHECK(contains(m.out, "orientation"));

    const std::string broken = write_text("broken.json", "{not json");
    CHECK(run_cli("factor --input " + broken).code == 3);
}

TEST_CASE("cli compile") {
    const std::string spec(kDemoSpec);
    const std::string box(kBox2);

    SUBCASE("fixed resolution") {
        RunResult r = run_cli("compile --input " + spec + " " + box + " --n 4");
        CHECK(r.code == 0);
        CHECK(contains(r.out, "n 4  dt 0.25\n"));
        CHECK(contains(r.out, "err-chain"));
        CHECK(contains(r.out, "err-rk4"));
    }
    SUBCASE("auto resolution with program output") {
        const std::string prog = tmp_dir() + "/node_prog.json";
        RunResult r =
            run_cli("compile --input " + spec + " " + box + " --eps 0.05 --output " + prog);
        CHECK(r.code == 0);
        CHECK(contains(r.out, "n 4"));
        CHECK(contains(r.out, "wrote"));
        CHECK(!read_file(prog).empty());
    }
    SUBCASE("resolution budget") {
        RunResult r = run_cli("compile --input " + spec + " " + box + " --eps 1e-15 --max-n 8");
        CHECK(r.code == 4);
        CHECK(contains(r.out, "error:"));
    }
    SUBCASE("coupling gate") {
        const std::string hot = write_text("hot.json", R"({
            "dim": 2, "width": 1, "alpha": 0.5, "tau": 1,
            "pieces": [{"t": 0, "S": [[30], [0]], "W": [[1, 0]], "b": [0]}]})");
        RunResult r = run_cli("compile --input " + hot + " " + box + " --n 8");
        CHECK(r.code == 5);
        CHECK(contains(r.out, "error:"));
    }
    SUBCASE("bad box") {
        CHECK(run_cli("compile --input " + spec + " --box='-1,1;oops' --n 4").code == 3);
    }
}

TEST_CASE("cli verify") {
    const std::string input =
        write_text("ver_w.json", R"({"W": [[0, -1], [1, 0]], "b": [0.5, -0.25]})");
    const std::string prog = tmp_dir() + "/ver_prog.json";
    REQUIRE(run_cli("factor --input " + input + " --output " + prog).code == 0);
    const std::string oracle = write_text(
        "ver_oracle.json", R"({"kind": "affine", "W": [[0, -1], [1, 0]], "b": [0.5, -0.25]})");
    const std::string box(kBox2);

    SUBCASE("sup metric against an exact map") {
        RunResult r =
            run_cli("verify --input " + prog + " --oracle " + oracle + " " + box + " --grid 5");
        CHECK(r.code == 0);
        REQUIRE(r.out.rfind("sup ", 0) == 0);
        CHECK(contains(r.out, "points 25"));
        const double value = std::stod(r.out.substr(4));
        CHECK(value <= 1e-12);
    }
    SUBCASE("reports are byte-identical across runs and thread counts") {
        const std::string csv1 = tmp_dir() + "/rep1.csv";
        const std::string csv2 = tmp_dir() + "/rep2.csv";
        const std::string base = "verify --input " + prog + " --oracle " + oracle + " " + box +
                                 " --metric lp --p 2 --points 64 --seed 11";
        RunResult a = run_cli(base + " --report " + csv1, "FLOWFORGE_THREADS=1");
        RunResult b = run_cli(base + " --report " + csv2, "FLOWFORGE_THREADS=8");
        CHECK(a.code == 0);
        CHECK(b.code == 0);
        CHECK(a.out == b.out);
        const std::string body1 = read_file(csv1);
        CHECK(body1 == read_file(csv2));
        CHECK(contains(body1, "metric,p,value,points,seed"));
        CHECK(contains(body1, "lp,2,"));
        CHECK(contains(body1, ",64,11"));
    }
    SUBCASE("oracle dimension mismatch") {
        const std::string bad =
            write_text("ver_bad_oracle.json", R"({"kind": "leaky", "alpha": [0.5]})");
        CHECK(run_cli("verify --input " + prog + " --oracle " + bad + " " + box).code == 1);
    }
}

TEST_CASE("cli convexity checks") {
    SUBCASE("affine one-dimensional programs pass") {
        const std::string input = write_text("scale.json", R"({"W": [[2]], "b": [0.3]})");
        const std::string prog = tmp_dir() + "/scale_prog.json";
        REQUIRE(run_cli("factor --input " + input + " --output " + prog).code == 0);
        const std::string oracle =
            write_text("scale_oracle.json", R"({"kind": "affine", "W": [[2]], "b": [0.3]})");
        RunResult r = run_cli("verify --input " + prog + " --oracle " + oracle +
                              " --box='-1,1' --grid 11 --check-convexity");
        CHECK(r.code == 0);
        CHECK(contains(r.out, "convexity ok"));
    }
    SUBCASE("a concave kink is flagged") {
        // A single negated-relu step contracts the positive half-line only:
        // slope drops from 1 to e^{-t} across the kink, which is concave.
        FlowProgram prog;
        prog.dim = 1;
        prog.family = Family::F2;
        prog.steps = {FlowStep{PrimitiveField::negrelu(), 0.7}};
        validate_program(prog);
        const std::string prog_path = write_text("concave_prog.json", serialize(prog));
        // the program is its own oracle, so only the convexity check can fail
        RunResult r = run_cli("verify --input " + prog_path + " --oracle " + prog_path +
                              " --box='-1.5,1.5' --grid 9 --check-convexity");
        CHECK(r.code == 1);
        CHECK(contains(r.out, "convexity violated"));
    }
}

TEST_CASE("cli demos") {
    SUBCASE("unknown demo name") {
        RunResult r = run_cli("demo nosuch");
        CHECK(r.code == 6);
        CHECK(contains(r.out, "error:"));
    }
    SUBCASE("convexity obstruction") {
        const std::string csv = tmp_dir() + "/obstruction.csv";
        RunResult r = run_cli("demo convexity-obstruction --output " + csv);
        CHECK(r.code == 0);
        CHECK(contains(r.out, "floor 1.5140675065236142\n"));
        CHECK(contains(r.out, "obstruction yes"));
        CHECK(contains(read_file(csv), "x,phi"));
    }
    SUBCASE("product formula error decay") {
        RunResult r = run_cli("demo product-formula");
        CHECK(r.code == 0);
        CHECK(contains(r.out, "n 8  error"));
        CHECK(contains(r.out, "n 64  error"));
        CHECK(contains(r.out, "monotone yes"));
    }
    SUBCASE("commutator contraction") {
        RunResult r = run_cli("demo commutator");
        CHECK(r.code == 0);
        CHECK(contains(r.out, "contracting yes"));
    }
}
