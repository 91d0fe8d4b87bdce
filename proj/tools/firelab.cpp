#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "firelab/expcli.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"firefighter containment lab"};
    app.require_subcommand(1);
    app.set_version_flag("--version", firelab::kToolVersion);

    firelab::CliOptions options;
    std::string config;
    std::string out;
    std::uint64_t max_vertices = 0;
    unsigned precision_bits = 0;

    const std::map<std::string, std::string> about = {
        {"simulate", "play the firefighter game with a strategy and budget"},
        {"growth", "ball and sphere sizes with second differences"},
        {"phi", "exact vertex-isoperimetric profile by subset search"},
        {"spherical", "search spheres for subsets breaking the spherical inequality"},
        {"recurrence", "iterate k + Phi(k) - g(n)"},
        {"constants", "find and replay inductive constants"},
        {"threshold", "non-containment threshold for a growth class"},
    };
    for (const auto& action : firelab::kActions) {
        auto* sub = app.add_subcommand(action, about.at(action));
        sub->add_option("--config", config, "JSON config file (an array with --batch)")->check(CLI::ExistingFile);
        sub->add_option("--out", out, "output directory");
        sub->add_option("--max-vertices", max_vertices, "vertex cap for ball enumeration")->check(CLI::PositiveNumber);
        sub->add_option("--precision-bits", precision_bits, "mantissa bits for near-tie rechecks")
            ->check(CLI::Range(64u, 65536u));
        sub->add_flag("--batch", options.batch, "run every config of an array in parallel");
        sub->callback([&options, action] { options.action = action; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : firelab::exit_code(firelab::ErrorKind::Config);
    }

    auto* sub = app.get_subcommands().front();
    if (sub->count("--config"))
        options.config_path = config;
    if (sub->count("--out"))
        options.out = out;
    if (sub->count("--max-vertices"))
        options.max_vertices = max_vertices;
    if (sub->count("--precision-bits"))
        options.precision_bits = precision_bits;
    return firelab::run_cli(options);
}
