// aaeq: run one scenario or a parameter sweep.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "aaeq/config.hpp"
#include "aaeq/errors.hpp"
#include "aaeq/runner.hpp"

namespace {

using aaeq::ConfigError;
namespace rn = aaeq::runner;

struct Common {
    std::string scenario;
    std::string preset;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> symbols;
    std::optional<int> sps;
    std::string out = "out";
    std::string exports = "all";
    std::vector<std::string> sets;
};

void add_common(CLI::App* app, Common& c) {
    auto* sc = app->add_option("--scenario", c.scenario, "Scenario JSON file")->check(CLI::ExistingFile);
    app->add_option("--preset", c.preset, "Named preset (b2b_40g, smf5km_40g, smf10km_40g, smf5km_100g)")
        ->excludes(sc);
    app->add_option("--seed", c.seed, "Run seed");
    app->add_option("--symbols", c.symbols, "Number of symbols");
    app->add_option("--sps", c.sps, "Samples per symbol");
    app->add_option("--out", c.out, "Output directory")->capture_default_str();
    app->add_option("--export", c.exports, "Artifacts to write")
        ->check(CLI::IsMember({"csv", "json", "all"}))
        ->capture_default_str();
    app->add_option("--set", c.sets, "Override a config key: key=value (value is JSON or a bare word)");
}

// Bare words become JSON strings so --set eq.profile=paper works.
std::string as_json_literal(const std::string& v) {
    if (nlohmann::json::accept(v)) {
        return v;
    }
    return nlohmann::json(v).dump();
}

std::pair<std::string, std::string> split_assignment(const std::string& s) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError("expected key=value, got '" + s + "'", "--set");
    }
    return {s.substr(0, eq), s.substr(eq + 1)};
}

rn::ScenarioConfig build_config(const Common& c) {
    rn::ScenarioConfig cfg;
    if (!c.scenario.empty()) {
        cfg = rn::load_config(c.scenario);
    } else if (!c.preset.empty()) {
        cfg = rn::preset(c.preset);
    } else {
        throw ConfigError("give --scenario or --preset", "scenario");
    }
    if (c.seed) cfg.seed = *c.seed;
    if (c.symbols) cfg.n_symbols = *c.symbols;
    if (c.sps) cfg.sps = *c.sps;
    for (const auto& s : c.sets) {
        const auto [k, v] = split_assignment(s);
        rn::apply_override(cfg, k, as_json_literal(v));
    }
    cfg.validate();
    return cfg;
}

rn::ExportMode export_mode(const std::string& s) {
    if (s == "csv") return rn::ExportMode::Csv;
    if (s == "json") return rn::ExportMode::Json;
    return rn::ExportMode::All;
}

void print_summary(const std::string& label, const rn::RunReport& r) {
    const auto* cp = r.stage("post_cprc");
    const auto* eq = r.stage("post_eq");
    std::printf("%s status=%s", label.c_str(),
                r.status == rn::RunStatus::Ok ? "ok" : r.status == rn::RunStatus::Divergence ? "divergence" : "no_lock");
    if (eq) {
        std::printf(" converged=%s post_eq_evm=%.2f%%", r.eq_trace.converged ? "yes" : "no", eq->evm_percent);
    }
    if (cp) {
        std::printf(" post_cprc_evm=%.2f%% ber_est=%.3g", cp->evm_percent, cp->ber_estimate);
        if (cp->ber_counted) {
            std::printf(" ber_counted=%.3g (%zu/%zu)", *cp->ber_counted, cp->bit_errors, cp->bits);
        }
    }
    if (!r.message.empty()) {
        std::printf(" (%s)", r.message.c_str());
    }
    std::printf("\n");
}

std::vector<rn::SweepAxis> parse_grid(const std::vector<std::string>& items, const std::string& grid_file) {
    std::vector<rn::SweepAxis> grid;
    if (!grid_file.empty()) {
        std::ifstream in(grid_file);
        if (!in) {
            throw ConfigError("cannot open grid file '" + grid_file + "'", "--grid-file");
        }
        nlohmann::ordered_json j;
        try {
            j = nlohmann::ordered_json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("malformed JSON: ") + e.what(), "--grid-file");
        }
        if (!j.is_object()) {
            throw ConfigError("expected an object of key -> array", "--grid-file");
        }
        for (const auto& [k, v] : j.items()) {
            if (!v.is_array()) {
                throw ConfigError("expected an array of values", k);
            }
            rn::SweepAxis a{k, {}};
            for (const auto& x : v) {
                a.values.push_back(x.dump());
            }
            grid.push_back(std::move(a));
        }
    }
    for (const auto& item : items) {
        const auto [k, list] = split_assignment(item);
        rn::SweepAxis a{k, {}};
        std::size_t pos = 0;
        while (pos <= list.size()) {
            const auto comma = list.find(',', pos);
            const auto v = list.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
            a.values.push_back(as_json_literal(v));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        grid.push_back(std::move(a));
    }
    return grid;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"All-analog CMA equalizer link simulator"};
    app.require_subcommand(1);

    Common run_opts;
    auto* run = app.add_subcommand("run", "Run one scenario");
    add_common(run, run_opts);

    Common sweep_opts;
    std::vector<std::string> grid_items;
    std::string grid_file;
    bool fixed_seed = false;
    auto* sw = app.add_subcommand("sweep", "Run the cartesian product of parameter values");
    add_common(sw, sweep_opts);
    sw->add_option("--grid", grid_items, "Axis key=v1,v2,...");
    sw->add_option("--grid-file", grid_file, "JSON object mapping keys to value arrays")->check(CLI::ExistingFile);
    sw->add_flag("--fixed-seed", fixed_seed, "Use the base seed for every run instead of deriving one");

    auto* presets = app.add_subcommand("presets", "List presets, or print one as JSON");
    std::string show;
    presets->add_option("name", show, "Preset to print");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*presets) {
            if (show.empty()) {
                for (const auto& n : rn::preset_names()) std::cout << n << '\n';
            } else {
                std::cout << rn::to_json_text(rn::preset(show)) << '\n';
            }
            return 0;
        }
        if (*run) {
            const auto cfg = build_config(run_opts);
            const auto report = rn::run_scenario(cfg);
            rn::write_artifacts(report, run_opts.out, export_mode(run_opts.exports));
            print_summary(cfg.name, report);
            return rn::exit_code(report.status);
        }
        const auto cfg = build_config(sweep_opts);
        const auto grid = parse_grid(grid_items, grid_file);
        const std::filesystem::path out = sweep_opts.out;
        rn::SweepOptions opts;
        opts.derive_seeds = !fixed_seed;
        const auto mode = export_mode(sweep_opts.exports);
        opts.on_run = [&](std::size_t i, const rn::SweepRun& r) {
            rn::write_artifacts(r.report, out / ("run_" + std::to_string(i)), mode);
            std::string label = "run " + std::to_string(i);
            for (const auto& [k, v] : r.assignment) label += " " + k + "=" + v;
            print_summary(label, r.report);
        };
        const auto runs = rn::sweep(cfg, grid, opts);
        std::filesystem::create_directories(out);
        std::ofstream summary(out / "summary.csv");
        rn::write_sweep_summary(summary, grid, runs);
        int code = 0;
        for (const auto& r : runs) {
            if (code == 0) code = rn::exit_code(r.report.status);
        }
        return code;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    }
}
