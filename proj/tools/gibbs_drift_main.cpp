// Command-line front end: drift-field | optimize | verify | sample-terminal.
// Each subcommand reads a JSON configuration, runs the corresponding library
// entry point, and persists a self-describing run directory.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "gibbsdrift/errors.hpp"
#include "gibbsdrift/harness.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string output_dir;
    std::int64_t seed = -1;
    int threads = -1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "JSON configuration file")->required();
    cmd->add_option("--output-dir", args.output_dir, "overrides output_dir from the config");
    cmd->add_option("--seed", args.seed, "overrides master_seed from the config");
    cmd->add_option("--threads", args.threads,
                    "worker threads (0 = auto; default: GIBBS_DRIFT_THREADS or auto)");
}

int run(const std::string& mode, const CommonArgs& args) {
    using namespace gibbsdrift;
    harness::configure_threads(args.threads);

    std::ifstream in(args.config_path, std::ios::binary);
    if (!in) throw validation_error("cannot open config file " + args.config_path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    std::string config_text = buffer.str();

    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(config_text);
    } catch (const nlohmann::json::exception& e) {
        throw validation_error(std::string("config parse error: ") + e.what());
    }
    if (!args.output_dir.empty()) doc["output_dir"] = args.output_dir;
    if (args.seed >= 0) doc["master_seed"] = static_cast<std::uint64_t>(args.seed);
    if (!args.output_dir.empty() || args.seed >= 0) config_text = doc.dump(2) + "\n";

    harness::RunConfig config = harness::parse_run_config(doc);
    if (config.mode != mode)
        throw validation_error("config mode '" + config.mode + "' does not match subcommand '" +
                               mode + "'");
    return harness::run_command(config, config_text);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Finite-horizon stochastic-control global optimizer"};
    app.require_subcommand(1);

    std::map<std::string, CommonArgs> args;
    for (const char* mode : {"drift-field", "optimize", "verify", "sample-terminal"}) {
        CLI::App* cmd = app.add_subcommand(mode);
        add_common(cmd, args[mode]);
    }

    CLI11_PARSE(app, argc, argv);

    const std::string mode = app.get_subcommands().at(0)->get_name();
    try {
        return run(mode, args[mode]);
    } catch (const gibbsdrift::validation_error& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return gibbsdrift::harness::exit_validation;
    } catch (const std::exception& e) {
        std::cerr << "computation error: " << e.what() << "\n";
        return gibbsdrift::harness::exit_computation;
    }
}
