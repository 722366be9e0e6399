#include <CLI11.hpp>
#include <iostream>

#include "cocycle_lab/scenario.hpp"

using namespace cocycle_lab;

int main(int argc, char** argv) {
    CLI::App app{"cocycle-lab: holonomies, simplicity certificates and Lyapunov spectra for "
                 "matrix cocycles over shift dynamics"};
    app.require_subcommand(1);

    std::string scenario_path, out_dir = ".", format = "text";
    std::uint64_t seed = 1;
    double tol = 1e-9;
    auto* run = app.add_subcommand("run", "execute a scenario file and write reports");
    run->add_option("scenario", scenario_path, "scenario file")->required();
    run->add_option("--seed", seed, "master seed for all stochastic tasks");
    run->add_option("--tol", tol, "holonomy truncation tolerance");
    run->add_option("--out-dir", out_dir, "directory for report and trace files");
    run->add_option("--format", format, "report format")
        ->check(CLI::IsMember({"text", "machine"}));

    std::string certificate_path, cocycle_path;
    auto* verify = app.add_subcommand(
        "verify-certificate", "recompute a simplicity certificate from its witnesses");
    verify->add_option("certificate", certificate_path, "certificate file")->required();
    verify->add_option("cocycle", cocycle_path, "cocycle table file")->required();

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) {
        ScenarioOptions options;
        options.seed = seed;
        options.tol = tol;
        options.out_dir = out_dir;
        options.format = format == "machine" ? ScenarioOptions::Format::machine
                                             : ScenarioOptions::Format::text;
        try {
            ScenarioResult result = run_scenario(scenario_path, options);
            for (std::size_t i = 0; i < result.tasks.size(); ++i) {
                const auto& t = result.tasks[i];
                std::cout << (t.pass ? "PASS" : "FAIL") << " task " << i + 1 << " (" << t.name
                          << ")";
                if (!t.detail.empty()) std::cout << ": " << t.detail;
                std::cout << '\n';
            }
            std::cout << "report: " << result.report_path << '\n';
            return result.exit_code;
        } catch (const ParseError& e) {
            std::cerr << "parse error: " << e.what() << '\n';
            return 2;
        } catch (const Error& e) {
            std::cerr << "error: " << e.what() << '\n';
            return 1;
        }
    }

    return verify_certificate(certificate_path, cocycle_path, std::cout);
}
