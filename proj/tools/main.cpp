// qrelax: command-line front end. Each subcommand reads a JSON config (optional; defaults
// apply to every key) and writes <out>/<prefix>.csv plus <out>/<prefix>_summary.json.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>

#include <CLI11.hpp>

#include "commands.hpp"
#include "qrelax/cosmology.hpp"
#include "qrelax/integrator.hpp"

namespace cli = qrelax::cli;

namespace {

struct Common {
    std::string config;
    cli::Output out;
};

CLI::App* add_command(CLI::App& app, const std::string& name, const std::string& help, Common& common) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("-c,--config", common.config, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("-o,--out", common.out.dir, "output directory (created if missing)");
    sub->add_option("-p,--prefix", common.out.prefix, "output file prefix (default: the subcommand name)");
    return sub;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantum relaxation in a box: trajectories, H-functions, signaling and cosmology"};
    app.require_subcommand(1);

    Common common;
    using Runner = void (*)(const cli::json&, const cli::Output&);
    const std::pair<const char*, std::pair<const char*, Runner>> commands[] = {
        {"simulate", {"evolve a sampled ensemble of trajectories", cli::run_simulate}},
        {"hseries", {"coarse-grained H(t) for one trial", cli::run_hseries}},
        {"scaling-m", {"t5% against the number of modes", cli::run_scaling_modes}},
        {"scaling-dx", {"t5% against the coarse-graining cell width", cli::run_scaling_cells}},
        {"recurrence", {"H-bar near the recurrence period", cli::run_recurrence}},
        {"typicality", {"rejection-sampling histogram against |psi|^2 and |psi|^4", cli::run_typicality}},
        {"signal", {"marginal density change at A after a quench at B", cli::run_signal}},
        {"cosmo", {"relaxation suppression in the early universe", cli::run_cosmo}},
    };
    std::map<CLI::App*, std::pair<std::string, Runner>> runners;
    CLI::App* cosmo = nullptr;
    for (const auto& [name, info] : commands) {
        auto* sub = add_command(app, name, info.first, common);
        runners[sub] = {name, info.second};
        if (std::string(name) == "cosmo") cosmo = sub;
    }

    // cosmo flags override the config
    std::vector<double> kt, dx_cm, dx_planck;
    std::optional<double> delta0, factor, kt_min, kt_max;
    std::optional<std::size_t> points;
    cosmo->add_option("--kt", kt, "temperatures (GeV) for the per-temperature summary");
    cosmo->add_option("--dx", dx_cm, "coarse-graining lengths in cm");
    cosmo->add_option("--dx-planck", dx_planck, "coarse-graining lengths in Planck lengths");
    cosmo->add_option("--delta0", delta0, "initial lengthscale to stretch, in cm");
    cosmo->add_option("--factor", factor, "expansion factor applied to --delta0");
    cosmo->add_option("--kt-min", kt_min, "lowest temperature of the table (GeV)");
    cosmo->add_option("--kt-max", kt_max, "highest temperature of the table (GeV)");
    cosmo->add_option("--points", points, "table rows, log spaced");

    CLI11_PARSE(app, argc, argv);

    try {
        CLI::App* chosen = app.get_subcommands().front();
        const auto& [name, run] = runners.at(chosen);
        cli::json config = common.config.empty() ? cli::json::object() : cli::load_config(common.config);
        if (chosen == cosmo) {
            if (!config.is_object()) throw cli::ConfigError("cosmo: expected a JSON object");
            if (!kt.empty()) config["kt"] = kt;
            const double lp = qrelax::cosmo::Constants::planck_length_cm().value;
            if (!dx_cm.empty() || !dx_planck.empty()) {
                std::vector<double> all = dx_cm;
                for (double n : dx_planck) all.push_back(n * lp);
                config["dx_cm"] = all;
            }
            if (delta0.has_value() != factor.has_value())
                throw cli::ConfigError("cosmo: --delta0 and --factor go together");
            if (delta0) config["stretch"] = cli::json::array({{{"delta0_cm", *delta0}, {"factor", *factor}}});
            if (kt_min) config["kt_min"] = *kt_min;
            if (kt_max) config["kt_max"] = *kt_max;
            if (points) config["points"] = *points;
        }
        if (common.out.prefix.empty()) common.out.prefix = name;
        std::filesystem::create_directories(common.out.dir);
        run(config, common.out);
        std::printf("wrote %s and %s\n", common.out.path(".csv").c_str(), common.out.path("_summary.json").c_str());
    } catch (const cli::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const qrelax::EnsembleFailure& e) {
        std::fprintf(stderr, "error: %s (%zu of %zu stalled)\n", e.what(), e.stalled(), e.total());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
