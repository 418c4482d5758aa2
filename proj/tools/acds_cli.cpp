// Experiment runner: `acds_cli run --config configs/table2.ini [overrides]`
// and `acds_cli verify --out DIR`.

#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"

#include "acds/study.hpp"

namespace {

std::vector<double> parse_sigma2_list(const std::string& s)
{
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        const std::size_t comma = s.find(',', pos);
        const std::string tok = s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        if (!tok.empty()) {
            out.push_back(std::stod(tok));
        }
        if (comma == std::string::npos) {
            break;
        }
        pos = comma + 1;
    }
    return out;
}

} // namespace

int main(int argc, char** argv)
{
    using namespace acds;
    CLI::App app{"Active learning of differential equations: study runner"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run a replicated study and write runs.csv, summary.csv and JSON records");
    std::string config_path;
    std::string study;
    std::string sigma2;
    std::vector<std::string> criteria;
    int reps = 0;
    std::uint64_t seed = 0;
    std::string out;
    long long fixed_n = -1;
    double tol = 0.0;
    int parallel = 0;
    bool quiet = false;
    bool no_json = false;
    run->add_option("--config", config_path, "INI file with [study] and [run] sections");
    run->add_option("--study", study, "ODE_LINEAR, ODE_RANDOM, BASS, BURGERS or DIFFUSION_2D");
    run->add_option("--sigma2", sigma2, "Comma-separated noise variances");
    run->add_option("--criterion", criteria, "ACDS, D_OPTIMAL_ONLY, MAXIMIN_ONLY (repeatable)");
    run->add_option("--reps", reps, "Replications per cell");
    run->add_option("--seed", seed, "Master seed");
    run->add_option("--out", out, "Output directory (overrides ACDS_OUTPUT_DIR)");
    run->add_option("--fixed-n", fixed_n, "Collect exactly this many points");
    run->add_option("--tol", tol, "Relative coefficient-change tolerance");
    run->add_option("--parallel", parallel, "Concurrent replications");
    run->add_flag("--quiet", quiet, "No per-run log lines");
    run->add_flag("--no-json", no_json, "Skip per-run JSON records");

    auto* verify = app.add_subcommand("verify", "Check summary.csv against runs.csv");
    std::string verify_dir;
    verify->add_option("--out", verify_dir, "Directory holding runs.csv and summary.csv")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    if (*verify) {
        const std::string msg = cli::verify_outputs(verify_dir);
        if (!msg.empty()) {
            std::cerr << "verify: " << msg << "\n";
            return 1;
        }
        std::cout << "verify: summary.csv matches runs.csv\n";
        return 0;
    }

    cli::StudyConfig cfg;
    try {
        if (!config_path.empty()) {
            cfg = cli::load_config(config_path);
            if (!study.empty() && sim::parse_study(study) != cfg.study) {
                const auto keep = cfg;
                cfg = cli::default_config(sim::parse_study(study));
                cfg.replications = keep.replications;
                cfg.master_seed = keep.master_seed;
                cfg.output_dir = keep.output_dir;
                cfg.parallel = keep.parallel;
            }
        } else if (!study.empty()) {
            cfg = cli::default_config(sim::parse_study(study));
        } else {
            std::cerr << "run: need --config or --study\n";
            return 1;
        }
        if (const char* env = std::getenv("ACDS_OUTPUT_DIR"); env != nullptr && *env != '\0') {
            cfg.output_dir = env;
        }
        if (!sigma2.empty()) {
            cfg.sigma2 = parse_sigma2_list(sigma2);
        }
        if (!criteria.empty()) {
            cfg.criteria.clear();
            for (const auto& c : criteria) {
                cfg.criteria.push_back(activelearn::parse_criterion(c));
            }
        }
        if (reps > 0) {
            cfg.replications = reps;
        }
        if (run->count("--seed") > 0) {
            cfg.master_seed = seed;
        }
        if (!out.empty()) {
            cfg.output_dir = out;
        }
        if (fixed_n > 0) {
            cfg.run.fixed_n = static_cast<Index>(fixed_n);
        }
        if (tol > 0.0) {
            cfg.run.tol = tol;
        }
        if (parallel > 0) {
            cfg.parallel = parallel;
        }
        if (no_json) {
            cfg.write_json = false;
        }
        cfg.validate();
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    }

    try {
        const cli::StudyResult res = cli::run_study(cfg, quiet ? nullptr : &std::cerr);
        for (const auto& s : cli::summarize(res.rows)) {
            std::cout << "sigma2=" << cli::format_double(s.sigma2) << " " << s.criterion << " runs=" << s.runs
                      << " gamma=" << s.gamma_mean << " (" << s.gamma_std << ")"
                      << " l2=" << s.l2_mean << " (" << s.l2_std << ")"
                      << " N=" << s.n_mean << " (" << s.n_std << ")\n";
        }
        if (res.aborted > 0) {
            std::cerr << res.aborted << " of " << res.rows.size() << " runs aborted\n";
        }
        return res.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
