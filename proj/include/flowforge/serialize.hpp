#pragma once

#include <string>

#include "flowforge/program.hpp"

namespace flowforge {

// Formats a double with 17 significant digits, enough for an exact
// binary round-trip through text.
std::string fmt_double(double v);

// Program JSON: {"dim": d, "family": "F0"|"F1"|"F2", "steps": [...]} where a
// step is {"type":"affine","A":[[...]],"b":[...],"t":t} or
// {"type":"relu","t":t} or {"type":"negrelu","t":t}.
std::string serialize(const FlowProgram& prog);
FlowProgram deserialize(const std::string& text);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

} // namespace flowforge
