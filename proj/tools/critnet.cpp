#include <exception>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>

#include "CLI11.hpp"
#include "critnet/cli.hpp"

namespace {

int run(int argc, char** argv) {
    CLI::App app{"Evolving trade-network criticality toolkit"};
    app.require_subcommand(1);

    critnet::SimulateOptions sim;
    std::string sim_d_th = "auto";
    std::string sim_out;
    std::string sim_config;
    std::uint64_t sim_agents = sim.config.n_agents;
    std::int64_t sim_k_out = sim.config.k0;
    double sim_gamma = sim.config.gamma_target;
    std::uint64_t sim_steps = sim.config.n_steps;
    std::uint64_t sim_stride = sim.config.sample_stride;
    std::uint64_t sim_seed = sim.config.seed;
    std::string sim_aggregator = critnet::to_string(sim.config.aggregator);
    std::uint64_t sim_snapshots = 0;
    std::uint64_t sim_replicas = 1;

    CLI::App* simulate = app.add_subcommand("simulate", "Run the trade-network model");
    auto* f_agents = simulate->add_option("--agents", sim_agents, "Number of agents");
    auto* f_k_out = simulate->add_option("--k-out", sim_k_out, "Starting edges per agent");
    auto* f_gamma = simulate->add_option("--gamma", sim_gamma,
                                         "Degree exponent targeted by --d-th auto");
    auto* f_d_th = simulate->add_option("--d-th", sim_d_th,
                                        "Collapse threshold in [0,1), or 'auto'");
    auto* f_steps = simulate->add_option("--steps", sim_steps, "Trading steps");
    auto* f_stride = simulate->add_option("--stride", sim_stride, "Sampling stride");
    auto* f_seed = simulate->add_option("--seed", sim_seed, "Random seed");
    auto* f_aggregator = simulate->add_option("--aggregator", sim_aggregator,
                                              "Index aggregator: assets, absolute, net");
    auto* f_snapshots = simulate->add_option("--snapshots", sim_snapshots,
                                             "Evenly spaced in-degree snapshots");
    auto* f_replicas = simulate->add_option("--replicas", sim_replicas,
                                            "Independent seed-shifted runs");
    simulate->add_option("--out", sim_out, "Output directory");
    simulate->add_option("--config", sim_config,
                         "key=value config file (a run manifest works); flags override");

    critnet::AnalyzeOptions ana;
    std::string ana_input, ana_out;
    std::string ana_xmin = "auto";
    std::string ana_method = "ccdf";

    CLI::App* analyze = app.add_subcommand("analyze", "Fit drawdowns of an index series");
    analyze->add_option("--input", ana_input, "CSV file with a header row")->required();
    analyze->add_option("--date-col", ana.date_column, "Date column name");
    analyze->add_option("--close-col", ana.close_column, "Close column name");
    analyze->add_option("--xmin", ana_xmin, "Fit cutoff, or 'auto'");
    analyze->add_option("--method", ana_method, "Fit method: ccdf or mle");
    analyze->add_option("--out", ana_out, "Output directory")->required();

    critnet::PredictOptions pre;
    double pre_gamma = pre.gamma;
    std::optional<double> pre_d_th;

    CLI::App* predict = app.add_subcommand("predict", "Critical threshold analytics");
    predict->add_option("--gamma", pre_gamma, "Degree exponent")->required();
    predict->add_option("--k0", pre.k0, "Initial out-degree");
    predict->add_option("--d-th", pre_d_th, "Threshold to classify");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (simulate->parsed()) {
        if (!sim_config.empty()) {
            critnet::apply_manifest(sim, critnet::read_manifest(sim_config));
        }
        if (f_agents->count()) sim.config.n_agents = sim_agents;
        if (f_k_out->count()) sim.config.k0 = sim_k_out;
        if (f_gamma->count()) sim.config.gamma_target = sim_gamma;
        if (sim_config.empty() || f_d_th->count()) {
            sim.config.d_threshold =
                sim_d_th == "auto" ? -1.0 : critnet::detail::config_double(sim_d_th, "--d-th");
        }
        if (f_steps->count()) sim.config.n_steps = sim_steps;
        if (f_stride->count()) sim.config.sample_stride = sim_stride;
        if (f_seed->count()) sim.config.seed = sim_seed;
        if (f_aggregator->count()) {
            sim.config.aggregator = critnet::aggregator_from_string(sim_aggregator);
        }
        if (f_snapshots->count()) {
            sim.config.snapshot_count = static_cast<std::size_t>(sim_snapshots);
        }
        if (f_replicas->count()) sim.replicas = static_cast<std::size_t>(sim_replicas);
        if (!sim_out.empty()) sim.out_dir = sim_out;
        const critnet::SimulateOutcome outcome = critnet::run_simulate(sim);
        critnet::print_simulate_summary(outcome, std::cout);
        return 0;
    }

    if (analyze->parsed()) {
        ana.input = ana_input;
        ana.out_dir = ana_out;
        if (ana_xmin != "auto") {
            ana.xmin = critnet::detail::config_double(ana_xmin, "--xmin");
        }
        ana.method = critnet::fit_method_from_string(ana_method);
        const critnet::AnalyzeOutcome outcome = critnet::run_analyze(ana);
        critnet::print_analyze_summary(outcome, std::cout);
        return 0;
    }

    pre.gamma = pre_gamma;
    pre.d_threshold = pre_d_th;
    const critnet::PredictOutcome outcome = critnet::run_predict(pre);
    critnet::print_predict_report(outcome, std::cout);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const critnet::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const critnet::InsufficientDataError& e) {
        std::cerr << "insufficient data: " << e.what() << "\n";
        return 4;
    } catch (const critnet::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
