// Command-line front end: one subcommand per experiment kind.
//
//   sheetlab probe --config configs/probe_grushin.ini --workers 4 --out runs/probe

#include "sheetlab/app.hpp"
#include "sheetlab/config.hpp"
#include "sheetlab/presets.hpp"
#include "sheetlab/version.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace {

std::optional<std::string> read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo lab for SDEs driven by a Brownian sheet"};
    app.set_version_flag("--version", std::string("sheetlab ") + sheetlab::kVersion);
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;
    std::optional<std::string> out_dir;

    for (const char* kind : sheetlab::kExperimentKinds) {
        auto* sub = app.add_subcommand(kind, std::string("run the ") + kind + " experiment");
        sub->add_option("--config", config_path, "configuration file")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "override the configured seed");
        sub->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--out", out_dir, "output directory");
    }
    auto* list = app.add_subcommand("presets", "list the built-in coefficient presets");

    CLI11_PARSE(app, argc, argv);

    if (list->parsed()) {
        for (const auto& name : sheetlab::presets::names()) std::cout << name << "\n";
        return 0;
    }
    const std::string kind = app.get_subcommands().front()->get_name();
    const auto text = read_text(config_path);
    if (!text) {
        std::cerr << "sheetlab: cannot read " << config_path << "\n";
        return 2;
    }
    sheetlab::ParseResult parsed = sheetlab::parse_config(*text);
    for (const auto& w : parsed.warnings) std::cerr << config_path << ": warning: " << w.str() << "\n";
    if (!parsed.ok()) {
        for (const auto& e : parsed.errors) std::cerr << config_path << ": error: " << e.str() << "\n";
        return 2;
    }
    sheetlab::RunConfig cfg = std::move(*parsed.config);
    if (cfg.settings.contains("experiment.kind") && cfg.kind != kind)
        std::cerr << "sheetlab: subcommand '" << kind << "' overrides kind '" << cfg.kind << "' from the config\n";
    cfg.kind = kind;
    if (seed) cfg.seed = *seed;
    if (workers) cfg.workers = *workers;
    if (out_dir) cfg.out_dir = *out_dir;
    return sheetlab::run(cfg, std::cerr);
}
