#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace soilfuse {

/// Record of one CLI invocation, written as JSON beside its outputs.
struct RunManifest {
    std::string command;
    std::vector<std::string> inputs;
    std::map<std::string, std::string> flags;
    std::string config_digest;
    std::vector<std::string> outputs;
    std::string report;
    double elapsed_ms = 0.0;
};

/// FNV-1a 64 over the command, sorted flags and the bytes of every input
/// (directories walked in sorted order). Hex encoded.
std::string config_digest(const std::string& command, const std::map<std::string, std::string>& flags,
                          const std::vector<std::string>& inputs);

std::string write_manifest(const RunManifest& m);

/// Entry point behind the `soilfuse` binary; args excludes the program name.
/// Returns 0 on success, 1 on validation errors, 2 on usage errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace soilfuse
