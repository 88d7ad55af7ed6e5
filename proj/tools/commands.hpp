#pragma once

#include <string>
#include <vector>

namespace depiabs::cli {

// Parses argv, runs one command and returns the process exit status.
// Diagnostics go to stderr; artifacts go under <out>/<command>-seed<seed>/.
int main(int argc, char** argv);
int main(const std::vector<std::string>& args);

}  // namespace depiabs::cli
