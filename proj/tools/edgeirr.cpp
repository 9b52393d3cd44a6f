// edgeirr: validate scenarios, run simulations, compare strategies, serve the
// edge node API. Every flag can also come from an EDGEIRR_* environment
// variable (EDGEIRR_SCENARIO, EDGEIRR_SEED, ...).

#include "edgeirr/cli.hpp"

#include <CLI11.hpp>

int main(int argc, char** argv)
{
    using namespace edgeirr;

    CLI::App app{"edge-resident smart irrigation simulator and edge node"};
    app.require_subcommand(1);

    cli::Options o;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--scenario", o.scenario, "scenario file (JSON)")
            ->envname("EDGEIRR_SCENARIO")
            ->required();
        sub->add_option("--seed", o.seed, "override the scenario seed")->envname("EDGEIRR_SEED");
        sub->add_option("--out", o.out, "output directory")->envname("EDGEIRR_OUT");
        sub->add_option("--warm-up", o.warm_up_seconds, "seconds excluded from statistics")
            ->envname("EDGEIRR_WARM_UP");
    };

    auto* validate = app.add_subcommand("validate", "check a scenario file");
    common(validate);
    auto* run = app.add_subcommand("run", "simulate a scenario and write CSV artifacts");
    common(run);
    auto* compare = app.add_subcommand("compare", "A/B comparison of two strategies");
    common(compare);
    auto* serve = app.add_subcommand("serve", "run the edge node API against a live simulation");
    common(serve);
    serve->add_option("--listen", o.listen, "HTTP listen address host:port")
        ->envname("EDGEIRR_LISTEN");
    serve->add_option("--time-scale", o.time_scale, "simulated seconds per wall second")
        ->envname("EDGEIRR_TIME_SCALE");
    serve->add_option("--gateway-port", o.gateway_port, "TCP port for gateway frames")
        ->envname("EDGEIRR_GATEWAY_PORT");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : cli::kInvalid;
    }

    if (validate->parsed())
        return cli::cmd_validate(o, std::cout, std::cerr);
    if (run->parsed())
        return cli::cmd_run(o, std::cout, std::cerr);
    if (compare->parsed())
        return cli::cmd_compare(o, std::cout, std::cerr);
    return cli::cmd_serve(o, std::cout, std::cerr);
}
