#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "hypcrit/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Critical exponents and boundary audits for group actions on trees and the hyperbolic plane"};
    app.require_subcommand(1);
    std::string scenario;
    hypcrit::CommandOptions opt;
    std::uint64_t seed = 0;
    for (const char* name : {"entropy", "boundary", "converge", "verify"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--scenario", scenario, "scenario file (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", opt.out_dir, "report directory")->required();
        sub->add_option("--seed", seed, "override the scenario seed");
        sub->add_option("--threads", opt.threads, "worker threads")->check(CLI::Range(1u, 256u));
        sub->add_flag("--emit-witnesses", opt.emit_witnesses, "write witnesses.json (converge)");
        sub->add_flag("--dirac-control", opt.dirac_control, "replace the measure by a Dirac atom (boundary)");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : hypcrit::exit_rejected;
    }
    auto* sub = app.get_subcommands().front();
    if (sub->count("--seed")) opt.seed = seed;
    return hypcrit::run_command(sub->get_name(), scenario, opt, std::cerr);
}
