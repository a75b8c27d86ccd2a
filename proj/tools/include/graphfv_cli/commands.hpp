#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

namespace graphfv::cli {

enum ExitCode : int { exit_ok = 0, exit_error = 1, exit_positivity = 2, exit_certificate = 3 };

/// Command-line overrides of config values.
struct Overrides {
    std::optional<std::filesystem::path> output;
    bool strict_positivity = false;
    std::optional<std::size_t> threads;
    std::optional<std::uint64_t> seed;
};

/// Writes summary.json, metadata.json and, when enabled, snapshots/ and matrix.txt.
int cmd_run(const std::filesystem::path& config, const Overrides& ov, std::ostream& out, std::ostream& err);

/// Writes convergence.csv and orders.json.
int cmd_convergence(const std::filesystem::path& config, const Overrides& ov, std::ostream& out, std::ostream& err);

/// Prints the certificate report of a triplet file; exit 3 when it fails.
int cmd_verify(const std::filesystem::path& matrix, std::size_t dense_cap, std::ostream& out, std::ostream& err);

/// Generates the synthetic tree of [generator] with its fields to out_path.
int cmd_generate(const std::filesystem::path& config, const std::filesystem::path& out_path, const Overrides& ov,
                 std::ostream& out, std::ostream& err);

/// Parses argv and dispatches to a subcommand.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace graphfv::cli
