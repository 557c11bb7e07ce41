#pragma once

#include <string>

#include "aichain/project.hpp"

namespace aichain {

// Renders a self-contained Python 3 script that runs the project's chain in
// run mode: the project is embedded as data next to a small interpreter.
//
//   python3 chain.py [--mock fixture.json] [--input VALUE]... [--max-loop N]
//
// Output-window text goes to stdout (one payload per line), console output and
// input prompts to stderr. Exit status is 0 on success and 2 on a chain error.
// Credentials are read from the environment at run time, so projects export
// even when keys are unavailable.
std::string export_code(const ProjectRecord& record);

}  // namespace aichain
