#pragma once

#include <string>
#include <vector>

namespace nvcvar::cli {

/// Exit codes: 0 success, 1 usage error, 2 data error, 3 verification failure.
int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

/// FNV-1a hash of the canonical option string, rendered as hex; embedded in
/// every emitted artifact for provenance.
std::string config_hash(const std::string& canonical);

} // namespace nvcvar::cli
