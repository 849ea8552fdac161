#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "gp/pipeline.hpp"
#include "gp/telemetry.hpp"

namespace gp {

/// Everything the CLI can configure. Text form: `version=1`, then one
/// `key=value` per line; `#` starts a comment line.
struct AppConfig {
    PipelineConfig pipeline;
    IndicatorParams indicator;
    SupervisorConfig supervisor;  // its indicator field is ignored; `indicator` is used
    double export_bin_width_s = 10;
    ExportFormat export_format = ExportFormat::csv;

    /// Throws gp::Error naming the offending field.
    void validate() const;
};

/// Rejects unknown keys and bad values with the line number. `origin` prefixes messages.
AppConfig parse_config(std::string_view text, std::string_view origin = "config");
AppConfig load_config(const std::filesystem::path& path);

/// Applies one `key=value` override on top of cfg. Throws gp::Error on unknown keys.
void apply_setting(AppConfig& cfg, std::string_view assignment);

/// Every key, in a fixed order; parse_config(dump_config(c)) reproduces c.
std::string dump_config(const AppConfig& cfg);

/// Documented key names, for --help.
std::vector<std::string> config_keys();

}  // namespace gp
