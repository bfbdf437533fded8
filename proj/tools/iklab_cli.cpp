#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include <iklab/cli_reporter.hpp>

int main(int argc, char** argv)
{
    using namespace iklab;
    CLI::App app{"Izergin-Korepin open chain toolkit"};
    app.require_subcommand(1, 1);

    int n = 1;
    std::string profile_path, suite_list;
    RunProfile rp;
    const std::pair<const char*, const char*> commands[] = {
        {"verify", "identity, transfer-matrix and Hamiltonian checks"},
        {"spectrum", "eigencurves, Laurent fits and functional relations"},
        {"tq", "fit inhomogeneous T-Q roots to every eigencurve"},
        {"reduce", "constraint branches, conventional and diagonal T-Q"},
        {"all", "every suite"}};
    for (const auto& [name, help] : commands) {
        auto* sc = app.add_subcommand(name, help);
        sc->add_option("--n", n, "chain length N (default 1)");
        sc->add_option("--l1", rp.l1, "inhomogeneous T-Q integer l1");
        sc->add_option("--l2", rp.l2, "inhomogeneous T-Q integer l2");
        sc->add_option("--profile", profile_path, "JSON profile; complex values as [re, im]");
        sc->add_option("--seed", rp.seed, "sampling seed");
        sc->add_option("--out", rp.output_dir, "output directory");
        sc->add_option("--suite", suite_list, "comma-separated suites overriding the command's set");
        sc->add_option("--tol-scale", rp.tol_scale, "multiplier applied to every tolerance");
        sc->add_option("--starts", rp.starts, "Newton starts per T-Q fit (0: automatic)");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    const std::string cmd = app.get_subcommands().front()->get_name();
    const bool n_given = app.get_subcommands().front()->count("--n") > 0;
    const bool seed_given = app.get_subcommands().front()->count("--seed") > 0;

    try {
        const auto seed = rp.seed;
        if (!profile_path.empty()) {
            std::ifstream in(profile_path);
            if (!in) throw InvalidInput("cannot read profile '" + profile_path + "'");
            json j;
            try {
                j = json::parse(in);
            } catch (const json::exception& e) {
                throw InvalidInput(std::string("profile is not valid JSON: ") + e.what());
            }
            apply_profile_json(rp, j, n_given ? std::optional<int>(n) : std::nullopt);
            if (seed_given) rp.seed = seed;
        } else {
            rp.params = ModelParams::default_profile(n);
        }
        rp.suites = suites_for_command(cmd);
        if (!suite_list.empty()) {
            rp.suites.clear();
            std::stringstream ss(suite_list);
            for (std::string s; std::getline(ss, s, ',');)
                if (!s.empty()) rp.suites.push_back(s);
        }
        const auto out = run(rp);
        for (const auto& s : out.suites) {
            std::cout << (s.passed ? "PASS " : "FAIL ") << s.name;
            if (!s.error.empty()) std::cout << "  error: " << s.error;
            std::cout << "\n";
            for (const auto& c : s.checks)
                if (!c.passed) std::cout << "    failed: " << c.name << " residual=" << c.residual << " tol=" << c.tolerance << "\n";
        }
        std::cout << "report: " << (std::filesystem::path(rp.output_dir) / "report.json").string() << "\n";
        return out.exit_code;
    } catch (const InvalidInput& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return 2;
    }
}
