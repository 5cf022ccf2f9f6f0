#include "dkinv/cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

namespace {

std::vector<double> parse_reals(const std::string& text) {
    std::vector<double> out;
    if (text.empty()) return out;
    std::size_t pos = 0;
    while (true) {
        const auto next = text.find(',', pos);
        out.push_back(std::stod(text.substr(pos, next == std::string::npos ? std::string::npos : next - pos)));
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Inversion of D-difference operators and Hamiltonian recovery"};
    app.require_subcommand(1);

    std::string config, out, report, lambdas, density, level = "quick";
    int grid = 100, samples = 50;

    auto* invert = app.add_subcommand("invert", "Tabulate the inverse kernel T_ij(x, t)");
    invert->add_option("--config", config, "Problem description (JSON)")->required();
    invert->add_option("--grid", grid, "Midpoint grid size per component")->required();
    invert->add_option("--out", out, "Output CSV")->required();

    auto* recover = app.add_subcommand("recover", "Recover gamma(x) and H(x)");
    recover->add_option("--config", config, "Problem description (JSON)")->required();
    recover->add_option("--samples", samples, "Number of sample points on [0, l]")->required();
    recover->add_option("--out", out, "Output CSV")->required();

    auto* verify = app.add_subcommand("verify", "Run the invariant checks");
    verify->add_option("--config", config, "Problem description (JSON)")->required();
    verify->add_option("--level", level, "quick or full")->check(CLI::IsMember({"quick", "full"}));
    verify->add_option("--report", report, "Output JSON report")->required();

    auto* weyl = app.add_subcommand("weyl", "Evaluate the Weyl function");
    weyl->add_option("--config", config, "Problem description (JSON)")->required();
    weyl->add_option("--lambda", lambdas, "RE,IM[,RE,IM...]")->required();
    weyl->add_option("--density", density, "Real points T1[,T2...] for density samples");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : dkinv::kExitInput;
    }

    try {
        const auto cfg = dkinv::load_config(config);
        if (invert->parsed()) return dkinv::cmd_invert(cfg, grid, out, std::cerr);
        if (recover->parsed()) return dkinv::cmd_recover(cfg, samples, out, std::cerr);
        if (verify->parsed())
            return dkinv::cmd_verify(cfg, level == "full" ? dkinv::VerifyLevel::full : dkinv::VerifyLevel::quick,
                                     report, std::cerr);
        std::vector<double> ts;
        try {
            ts = parse_reals(density);
        } catch (const std::exception&) {
            std::cerr << "error: malformed --density list\n";
            return dkinv::kExitInput;
        }
        return dkinv::cmd_weyl(cfg, dkinv::parse_lambda_list(lambdas), ts, std::cout, std::cerr);
    } catch (const dkinv::ConfigError& e) {
        std::cerr << config << ": " << e.what() << "\n";
        return dkinv::kExitInput;
    } catch (const dkinv::SingularOperatorError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return dkinv::kExitSingular;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return dkinv::kExitInput;
    }
}
