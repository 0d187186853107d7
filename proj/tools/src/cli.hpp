#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "spectral/train.hpp"

namespace spectral::cli {

using Json = nlohmann::json;

enum Exit : int {
    kOk = 0,
    kConfigError = 2,
    kDataError = 3,
    kDiverged = 4,
    kGradCheckFailed = 5,
};

/// Entry point shared by the executable and the tests.
int run(int argc, char** argv);

/// Default values (and therefore the accepted keys and their types) per subcommand.
Json pca_defaults();
Json gmm_defaults();
Json construct_defaults();
Json train_defaults();
Json gradcheck_defaults();

/// Subcommands operate on a fully resolved configuration.
int cmd_pca(const Json& cfg);
int cmd_gmm(const Json& cfg);
int cmd_construct(const Json& cfg);
int cmd_train(const Json& cfg);
int cmd_gradcheck(const Json& cfg);

/// Shared by train and gradcheck; validates the result.
TaskKind parse_task(const std::string& s);
TrainConfig train_config_from_json(const Json& cfg);

/// defaults <- file <- overrides. Unknown keys and type mismatches throw ConfigError.
Json resolve_config(const Json& defaults, const Json& file, const Json& overrides);

/// `value` unless empty, else $SPECTRAL_OUT_DIR (or ".") joined with `fallback_name`.
std::string output_path(const std::string& value, const std::string& fallback_name);

/// Writes `cfg` as pretty JSON to <primary without extension>.config.json; returns the path.
std::string write_resolved_config(const std::string& primary_output, const Json& cfg);

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}
    void add(std::vector<std::string> row);
    std::string str() const;
    void write(const std::string& path) const;
    std::size_t rows() const noexcept { return rows_.size(); }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

std::string fmt(double v);

/// Calls fn(i) for i in [0, n) on up to `threads` workers; fn must only touch slot i.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

struct PlotOptions {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    bool log_y = false;
    int width = 640;
    int height = 420;
};

/// Self-contained SVG line chart; throws EmptySeries on empty or non-finite input.
std::string render_svg_plot(const std::vector<Series>& series, const PlotOptions& opts = {});
void emit_svg_plot(const std::vector<Series>& series, const std::string& path, const PlotOptions& opts = {});

}  // namespace spectral::cli
