#pragma once

// Command-line front end. Exit codes: 0 success, 1 invalid input (a JSON
// error object goes to `err`), 2 usage error.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace perflat::cli {

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// The values reproduced by `paper-demo`; `fixtures` holds the pinned witness.
nlohmann::json paper_demo(const std::filesystem::path& fixtures);

/// Numbers equal within rel_tol, everything else exactly. Mismatches are
/// appended as "path: expected vs actual".
bool json_close(const nlohmann::json& expected, const nlohmann::json& actual, double rel_tol,
                std::vector<std::string>& diffs, const std::string& path = "");

}  // namespace perflat::cli
