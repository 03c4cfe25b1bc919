#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rml::cli {

// Parses and runs one invocation.  Returns 0 on success, 1 on usage errors
// and 2 on runtime errors.  Normal output goes to out, diagnostics to err.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Gnuplot script for the rows.csv of an experiment directory.
std::string gnuplot_script(const std::string& experiment, const std::vector<std::string>& series);

}  // namespace rml::cli
