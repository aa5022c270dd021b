#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <parreg/runner.hpp>

int main(int argc, char** argv) {
    CLI::App app{"parreg: weighted maximal-regularity solver and verification harness"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    long long seed = 0;
    double tol = 1e-5;
    int jobs = 1;
    std::string axis;
    std::vector<std::string> values;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("config", config_path, "flat key = value config file")->required();
        sub->add_option("--seed", seed, "override the base seed");
        sub->add_option("--out", out_dir, "output directory for reports");
        sub->add_option("--jobs", jobs, "worker count hint (execution is sequential)");
        sub->add_option("--tol", tol, "override the comparison tolerance");
    };

    CLI::App* run = app.add_subcommand("run", "execute every job listed in the config");
    add_common(run);
    CLI::App* sweep =
        app.add_subcommand("sweep", "rerun the config across one axis of values");
    add_common(sweep);
    sweep->add_option("--axis", axis, "axis name: eps, n, T, grading or samples")->required();
    sweep->add_option("--values", values, "comma separated axis values")
        ->delimiter(',')
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        const parreg::Config cfg = parreg::Config::from_file(config_path);
        CLI::App* sub = app.get_subcommands().front();
        parreg::RunOptions opt;
        opt.out_dir = out_dir;
        opt.jobs = jobs;
        if (sub->count("--seed")) opt.seed = static_cast<std::uint64_t>(seed);
        if (sub->count("--tol")) opt.tol = tol;

        const parreg::RunSummary sum = sub == run
                                           ? parreg::run_config(cfg, opt)
                                           : parreg::sweep_config(cfg, axis, values, opt);
        std::size_t passed = 0;
        for (const auto& jr : sum.jobs) {
            std::printf("[%s] %s\n", jr.pass ? "PASS" : "FAIL", jr.name.c_str());
            passed += jr.pass ? 1 : 0;
        }
        std::printf("%zu/%zu jobs passed, reports in %s\n", passed, sum.jobs.size(),
                    out_dir.c_str());
        return sum.exit_code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
