#pragma once

#include <graphfv/assembly.hpp>
#include <graphfv/cases.hpp>
#include <graphfv/io.hpp>
#include <graphfv/timestepping.hpp>
#include <graphfv/verification.hpp>

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace graphfv::cli {

enum class Dimension { time, length, diffusivity, mobility, field, concentration };

/// Multiplier taking a value in `unit` to seconds, metres and kilovolts.
double unit_factor(std::string_view unit, Dimension dim);

/// "<decimal> <unit>" converted to internal units. Concentrations may omit the unit.
double parse_quantity(std::string_view text, Dimension dim);

/// `[section]` headers and `key = value` lines; `#` and `;` start comments.
class IniFile {
public:
    struct Entry {
        std::string value;
        std::size_t line = 0;
    };
    using Section = std::map<std::string, Entry>;

    static IniFile parse(std::istream& is);
    static IniFile read(const std::filesystem::path& path);

    const Entry* find(const std::string& section, const std::string& key) const;
    const std::map<std::string, Section>& sections() const noexcept { return data_; }

private:
    std::map<std::string, Section> data_;
};

enum class BoundaryProfile { constant, ramp, pulse };

struct RunConfig {
    // [problem]
    std::string case_label;  ///< builtin label; empty when a graph file is given
    std::filesystem::path graph_path;
    std::optional<ProblemKind> kind;
    std::optional<ErrorNorm> norm;
    // [mesh]
    std::optional<double> h;
    // [time]
    double dt = 0.0;
    std::optional<double> t_end;
    // [boundary]
    bool has_boundary = false;
    BoundaryProfile profile = BoundaryProfile::constant;
    double boundary_value = 1.0;
    double profile_duration = 1.0;
    double initial_value = 0.0;
    double source = 0.0;
    // [output]
    std::filesystem::path output_dir = "output";
    std::size_t snapshot_every = 0;
    bool write_snapshots = true;
    bool export_matrix = false;
    PositivityMode positivity = PositivityMode::warn;
    // [generator]
    TreeingConfig generator;
    // [convergence]
    std::vector<double> study_h;
    std::vector<double> study_dt;

    /// Unit conversions applied at load, as (key, factor).
    std::vector<std::pair<std::string, double>> conversions;
};

/// Validates keys and units. Relative paths are resolved against base_dir.
RunConfig parse_config(const IniFile& ini, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// Builtin case, synthetic tree, or graph file with the configured data.
TestCase make_problem(const RunConfig& cfg);

}  // namespace graphfv::cli
