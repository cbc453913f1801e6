// Command-line front end: simulate panels, run do-operators, discover graphs,
// train/sample the flow model, probe sensitivity, and benchmark.
//
// Exit codes: 0 success, 2 invalid input or spec, 3 numerical non-convergence.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "svarfm/bench.hpp"
#include "svarfm/dag_project.hpp"
#include "svarfm/discovery.hpp"
#include "svarfm/flow_match.hpp"
#include "svarfm/intervention.hpp"
#include "svarfm/sensitivity.hpp"
#include "svarfm/simulators.hpp"
#include "svarfm/var_engine.hpp"

namespace {

using namespace svarfm;

constexpr int kExitValidation = 2;
constexpr int kExitNonConvergence = 3;

struct SpecArgs {
    std::string spec_file;
    std::string variant;
    std::string ode_system = "lorenz";
    int chain_d = 0;
    double chain_coeff = 1.0;
    double noise_scale = -1.0;  // <0 = keep spec default
    std::vector<std::string> phi_overrides;
    std::string bias_target;
    double bias_delta = 0.0;
};

void add_spec_options(CLI::App* cmd, SpecArgs& args) {
    cmd->add_option("--spec", args.spec_file, "Simulator spec file (key = value)");
    cmd->add_option("--variant", args.variant,
                    "Built-in variant: dsge, arrhenius_battery, heitler_matthews, "
                    "ode_system, linear_chain, feedback_toy");
    cmd->add_option("--ode-system", args.ode_system, "ODE system (lorenz, rossler)");
    cmd->add_option("--chain-d", args.chain_d, "linear_chain: number of variables");
    cmd->add_option("--chain-coeff", args.chain_coeff, "linear_chain: edge coefficient");
    cmd->add_option("--noise-scale", args.noise_scale, "Global noise multiplier");
    cmd->add_option("--phi", args.phi_overrides, "Parameter override key=value (repeatable)");
    cmd->add_option("--bias-target", args.bias_target, "Inject bias into this outcome column");
    cmd->add_option("--bias-delta", args.bias_delta, "Injected bias magnitude");
}

SimulatorSpec build_spec(const SpecArgs& args) {
    SimulatorSpec spec;
    if (!args.spec_file.empty()) {
        spec = read_spec_file(args.spec_file);
    } else if (args.variant == "dsge") {
        spec = dsge_spec();
    } else if (args.variant == "arrhenius_battery") {
        spec = battery_spec();
    } else if (args.variant == "heitler_matthews") {
        spec = heitler_matthews_spec();
    } else if (args.variant == "ode_system") {
        spec = ode_spec(args.ode_system);
    } else if (args.variant == "linear_chain") {
        if (args.chain_d < 2) throw Error(Errc::InvalidSpec, "--chain-d must be >= 2");
        spec = linear_chain_spec(args.chain_d, args.chain_coeff);
    } else if (args.variant == "feedback_toy") {
        spec = feedback_toy_spec();
    } else if (args.variant.empty()) {
        throw Error(Errc::InvalidSpec, "provide --spec or --variant");
    } else {
        spec.variant = variant_from_name(args.variant);  // throws with the name
    }
    if (args.noise_scale >= 0.0) spec.noise_scale = args.noise_scale;
    for (const std::string& kv : args.phi_overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            throw Error(Errc::ParseError, "--phi expects key=value, got " + kv);
        }
        spec.phi[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
    }
    if (!args.bias_target.empty()) {
        spec.bias_inject = BiasInject{args.bias_target, args.bias_delta};
    }
    validate_spec(spec);
    return spec;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw Error(Errc::ParseError, "cannot write " + path);
    out << text;
}

DoMode mode_from_name(const std::string& name) {
    if (name == "point") return DoMode::PointInTime;
    if (name == "all") return DoMode::AllSteps;
    if (name == "soft") return DoMode::Soft;
    throw Error(Errc::ParseError, "mode must be point, all, or soft");
}

Eigen::VectorXd parse_vector(const std::string& csv) {
    std::vector<double> vals;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) vals.push_back(std::stod(tok));
    }
    if (vals.empty()) throw Error(Errc::ParseError, "empty vector literal");
    Eigen::VectorXd v(static_cast<Eigen::Index>(vals.size()));
    for (std::size_t k = 0; k < vals.size(); ++k) v(static_cast<Eigen::Index>(k)) = vals[k];
    return v;
}

int run(int argc, char** argv) {
    CLI::App app{"SVAR-FM causal discovery toolkit"};
    app.fallthrough();
    app.require_subcommand(1);
    app.set_config("--config", "", "Key-value config file with long-option defaults");

    std::uint64_t seed = 0;
    app.add_option("--seed", seed, "Base RNG seed")->capture_default_str();

    // ---- simulate ----
    auto* sim = app.add_subcommand("simulate", "Run a simulator observationally");
    SpecArgs sim_spec;
    add_spec_options(sim, sim_spec);
    long sim_T = 500;
    std::string sim_out;
    sim->add_option("--T", sim_T, "Recorded steps")->capture_default_str();
    sim->add_option("--out", sim_out, "Output panel CSV")->required();

    // ---- intervene ----
    auto* interv = app.add_subcommand("intervene", "Apply a do-operator and record outcomes");
    SpecArgs int_spec;
    add_spec_options(interv, int_spec);
    std::string int_target, int_mode = "all", int_out, int_manifest, int_values;
    double int_value = 0.0;
    long int_m = 200;
    int int_horizon = 0;
    double int_lambda = 10.0;
    interv->add_option("--target", int_target, "Variable to clamp")->required();
    interv->add_option("--value", int_value, "Clamp level");
    interv->add_option("--values", int_values, "Comma-separated grid of clamp levels");
    interv->add_option("--mode", int_mode, "point, all, or soft")->capture_default_str();
    interv->add_option("--horizon", int_horizon, "Steps after (point) or span (all)");
    interv->add_option("--m", int_m, "Draws per value")->capture_default_str();
    interv->add_option("--soft-lambda", int_lambda, "Soft-mode forcing strength");
    interv->add_option("--out", int_out, "Outcome CSV")->required();
    interv->add_option("--manifest", int_manifest,
                       "Manifest JSON (default: <out stem>.manifest.json)");

    // ---- discover ----
    auto* disc = app.add_subcommand("discover", "Route and identify the causal graph");
    SpecArgs disc_spec;
    add_spec_options(disc, disc_spec);
    std::string disc_panel, disc_prior = "unknown", disc_corr = "bonferroni";
    std::string disc_out, disc_dot;
    long disc_T = 500, disc_b = 1000, disc_m = 200, disc_pmax = 10;
    double disc_alpha = 0.05, disc_level = 1.0;
    // Zero reads the clamped row itself, where same-row structural links show
    // up; probe lagged links with --horizon 1+.
    int disc_horizon = 0;
    bool disc_no_flow = false;
    disc->add_option("--panel", disc_panel, "Observational panel CSV (else simulated)");
    disc->add_option("--T", disc_T, "Simulated panel length when --panel absent");
    disc->add_option("--prior", disc_prior, "dag, cycles, or unknown")->capture_default_str();
    disc->add_option("--alpha", disc_alpha, "Test level")->capture_default_str();
    disc->add_option("--correction", disc_corr, "bonferroni, bh, or none")
        ->capture_default_str();
    disc->add_option("--b", disc_b, "Bootstrap replicates")->capture_default_str();
    disc->add_option("--m", disc_m, "Interventional draws per source")->capture_default_str();
    disc->add_option("--level-sigma", disc_level, "Intervention level in source sds");
    disc->add_option("--horizon", disc_horizon, "Tested effect horizon")->capture_default_str();
    disc->add_option("--p-max", disc_pmax, "Max VAR order for routing fits")
        ->capture_default_str();
    disc->add_flag("--no-flow", disc_no_flow, "Skip the generative component on dyn2");
    disc->add_option("--out", disc_out, "Discovery report JSON")->required();
    disc->add_option("--dot", disc_dot, "Also write the graph as DOT");

    // ---- flow ----
    auto* flow = app.add_subcommand("flow", "Train, sample, or query the flow model");
    flow->require_subcommand(1);
    auto* ftrain = flow->add_subcommand("train", "Fit the conditional velocity field");
    std::string ft_data, ft_xcols, ft_ccols, ft_out;
    long ft_steps = 5000;
    int ft_hidden = 64, ft_depth = 3, ft_batch = 128;
    double ft_lr = 1e-3;
    bool ft_ot = false;
    ftrain->add_option("--data", ft_data, "Training CSV")->required();
    ftrain->add_option("--x-cols", ft_xcols, "Comma-separated generated columns")->required();
    ftrain->add_option("--cond-cols", ft_ccols, "Comma-separated conditioning columns")
        ->required();
    ftrain->add_option("--steps", ft_steps, "Training steps")->capture_default_str();
    ftrain->add_option("--hidden", ft_hidden, "Hidden width")->capture_default_str();
    ftrain->add_option("--depth", ft_depth, "Hidden layers")->capture_default_str();
    ftrain->add_option("--batch", ft_batch, "Batch size")->capture_default_str();
    ftrain->add_option("--lr", ft_lr, "Adam learning rate")->capture_default_str();
    ftrain->add_flag("--ot", ft_ot, "Greedy minibatch noise-data coupling");
    ftrain->add_option("--out", ft_out, "Model JSON")->required();

    auto* fsample = flow->add_subcommand("sample", "Draw from the trained model");
    std::string fs_model, fs_cond, fs_out;
    long fs_n = 1000;
    int fs_steps = 100;
    fsample->add_option("--model", fs_model, "Model JSON")->required();
    fsample->add_option("--cond", fs_cond, "Conditioning vector, comma-separated")->required();
    fsample->add_option("--n", fs_n, "Samples")->capture_default_str();
    fsample->add_option("--euler-steps", fs_steps, "Integration steps")->capture_default_str();
    fsample->add_option("--out", fs_out, "Sample CSV")->required();

    auto* face = flow->add_subcommand("ace", "Average causal effect between conditions");
    std::string fa_model, fa_hi, fa_lo;
    int fa_dim = 0, fa_steps = 100;
    long fa_n = 2000, fa_b = 1000;
    face->add_option("--model", fa_model, "Model JSON")->required();
    face->add_option("--cond-hi", fa_hi, "High conditioning vector")->required();
    face->add_option("--cond-lo", fa_lo, "Low conditioning vector")->required();
    face->add_option("--dim", fa_dim, "Target output coordinate")->capture_default_str();
    face->add_option("--n", fa_n, "Samples per condition")->capture_default_str();
    face->add_option("--euler-steps", fa_steps, "Integration steps")->capture_default_str();
    face->add_option("--b", fa_b, "Bootstrap replicates")->capture_default_str();

    // ---- sensitivity ----
    auto* sens = app.add_subcommand("sensitivity", "Parameter sensitivities of one effect");
    SpecArgs sens_spec;
    add_spec_options(sens, sens_spec);
    std::string sens_source, sens_target, sens_out;
    double sens_delta = 0.10;
    bool sens_signflip = false;
    long sens_m = 500;
    int sens_seeds = 20;
    sens->add_option("--source", sens_source, "Cause variable")->required();
    sens->add_option("--target", sens_target, "Effect variable")->required();
    sens->add_option("--delta-rel", sens_delta, "Relative perturbation")->capture_default_str();
    sens->add_flag("--signflip", sens_signflip, "Run the adversarial bias probe instead");
    sens->add_option("--m", sens_m, "Interventional draws (signflip)");
    sens->add_option("--probe-seeds", sens_seeds, "Seeds per bias level (signflip)");
    sens->add_option("--out", sens_out, "Report JSON/CSV")->required();

    // ---- bench ----
    auto* bench = app.add_subcommand("bench", "Interventional vs naive baselines");
    std::string bench_domain = "macro", bench_out, bench_csv;
    int bench_seeds = 50;
    long bench_T = 0, bench_m = 0;
    bench->add_option("--domain", bench_domain, "macro, battery, cosmic, feedback, or all")
        ->capture_default_str();
    bench->add_option("--seeds", bench_seeds, "Evaluation seeds")->capture_default_str();
    bench->add_option("--T", bench_T, "Observational length override");
    bench->add_option("--m", bench_m, "Interventional draw override");
    bench->add_option("--out", bench_out, "Report JSON")->required();
    bench->add_option("--csv", bench_csv, "Also write per-seed CSV");

    // ---- report ----
    auto* rep = app.add_subcommand("report", "Summarize a benchmark report");
    std::string rep_in;
    rep->add_option("--in", rep_in, "Benchmark JSON")->required();

    // ---- project ----
    auto* proj = app.add_subcommand("project", "Project a graph onto the nearest DAG");
    std::string proj_in, proj_out;
    double proj_threshold = 0.05;
    proj->add_option("--in", proj_in, "Graph JSON")->required();
    proj->add_option("--out", proj_out, "Projected graph JSON")->required();
    proj->add_option("--threshold", proj_threshold, "Edge pruning level")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);  // 0
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    }

    if (sim->parsed()) {
        const SimulatorSpec spec = build_spec(sim_spec);
        const TimeSeriesPanel panel = simulate_observational(spec, sim_T, seed);
        write_panel_csv(panel, sim_out);
        std::cout << "wrote " << panel.rows() << " x " << panel.cols() << " panel to " << sim_out
                  << "\n";
        return 0;
    }

    if (interv->parsed()) {
        const SimulatorSpec spec = build_spec(int_spec);
        InterventionDataset ds;
        const DoMode mode = mode_from_name(int_mode);
        if (!int_values.empty()) {
            const Eigen::VectorXd grid = parse_vector(int_values);
            std::vector<double> values(grid.data(), grid.data() + grid.size());
            ds = simulate_do_grid(spec, int_target, values, mode, int_horizon, int_m, seed);
        } else if (mode == DoMode::Soft) {
            ds = ode_soft_do(spec, int_target, int_value, int_lambda,
                             int_horizon > 0 ? int_horizon : 500, seed);
        } else {
            DoRequest req;
            req.target = int_target;
            req.value = int_value;
            req.mode = mode;
            req.horizon = int_horizon;
            req.soft_lambda = int_lambda;
            ds = simulate_do(spec, req, int_m, seed);
        }
        if (int_manifest.empty()) {
            const std::size_t dot = int_out.rfind('.');
            int_manifest = int_out.substr(0, dot == std::string::npos ? int_out.size() : dot) +
                           ".manifest.json";
        }
        write_intervention_dataset(ds, int_out, int_manifest);
        std::cout << "wrote " << ds.values.size() << " value(s) x " << ds.outcomes[0].rows()
                  << " draws to " << int_out << "\n";
        return 0;
    }

    if (disc->parsed()) {
        const SimulatorSpec spec = build_spec(disc_spec);
        TimeSeriesPanel panel;
        if (!disc_panel.empty()) {
            panel = read_panel_csv(disc_panel);
        } else {
            panel = simulate_observational(spec, disc_T, derive_seed(seed, 1));
        }
        DiscoveryOptions opts;
        if (disc_prior == "dag") {
            opts.prior = GraphPrior::ExpectDag;
        } else if (disc_prior == "cycles") {
            opts.prior = GraphPrior::ExpectCycles;
        } else if (disc_prior == "unknown") {
            opts.prior = GraphPrior::Unknown;
        } else {
            throw Error(Errc::ParseError, "prior must be dag, cycles, or unknown");
        }
        opts.phase3.alpha = disc_alpha;
        opts.phase3.bootstrap_b = disc_b;
        opts.phase3.m_per_edge = disc_m;
        opts.phase3.level_sigma = disc_level;
        opts.phase3.horizon = disc_horizon;
        opts.p_max = disc_pmax;
        opts.include_flow = !disc_no_flow;
        if (disc_corr == "bonferroni") {
            opts.phase3.correction = Multiplicity::Bonferroni;
        } else if (disc_corr == "bh") {
            opts.phase3.correction = Multiplicity::BenjaminiHochberg;
        } else if (disc_corr == "none") {
            opts.phase3.correction = Multiplicity::None;
        } else {
            throw Error(Errc::ParseError, "correction must be bonferroni, bh, or none");
        }
        const DiscoveryReport report = run_discovery(spec, panel, opts, derive_seed(seed, 2));
        write_text(disc_out, discovery_report_json(report));
        if (!disc_dot.empty()) {
            write_text(disc_dot, graph_to_dot(report.graph, report.names));
        }
        std::cout << "pipeline " << pipeline_name(report.pipeline) << ", "
                  << report.graph.edges.size() << " edge(s); report in " << disc_out << "\n";
        return 0;
    }

    if (ftrain->parsed()) {
        const TimeSeriesPanel data = read_panel_csv(ft_data);
        auto pick_cols = [&](const std::string& list) {
            std::vector<Eigen::Index> idx;
            std::stringstream ss(list);
            std::string tok;
            while (std::getline(ss, tok, ',')) {
                const Eigen::Index c = data.col_index(tok);
                if (c < 0) throw Error(Errc::InvalidTarget, "no such column: " + tok);
                idx.push_back(c);
            }
            if (idx.empty()) throw Error(Errc::ParseError, "empty column list");
            return idx;
        };
        const std::vector<Eigen::Index> xc = pick_cols(ft_xcols);
        const std::vector<Eigen::Index> cc = pick_cols(ft_ccols);
        Eigen::MatrixXd x1(data.rows(), static_cast<Eigen::Index>(xc.size()));
        Eigen::MatrixXd cond(data.rows(), static_cast<Eigen::Index>(cc.size()));
        for (std::size_t k = 0; k < xc.size(); ++k) x1.col(k) = data.values.col(xc[k]);
        for (std::size_t k = 0; k < cc.size(); ++k) cond.col(k) = data.values.col(cc[k]);

        CfmConfig cfg;
        cfg.x_dim = static_cast<int>(xc.size());
        cfg.cond_dim = static_cast<int>(cc.size());
        cfg.hidden = ft_hidden;
        cfg.depth = ft_depth;
        cfg.batch = ft_batch;
        cfg.lr = ft_lr;
        cfg.steps = ft_steps;
        cfg.ot_pairing = ft_ot;
        CfmModel model = CfmModel::init(cfg, seed);
        const TrainStats stats = train_cfm(model, x1, cond, derive_seed(seed, 3));
        save_model(model, ft_out);
        std::cout << "final loss " << stats.final_loss << "; model in " << ft_out << "\n";
        return 0;
    }

    if (fsample->parsed()) {
        const CfmModel model = load_model(fs_model);
        const Eigen::MatrixXd samples =
            sample_flow(model, parse_vector(fs_cond), fs_n, fs_steps, seed);
        TimeSeriesPanel panel;
        panel.values = samples;
        for (int k = 0; k < model.cfg.x_dim; ++k) panel.names.push_back("x" + std::to_string(k));
        write_panel_csv(panel, fs_out);
        std::cout << "wrote " << samples.rows() << " samples to " << fs_out << "\n";
        return 0;
    }

    if (face->parsed()) {
        const CfmModel model = load_model(fa_model);
        const EffectEstimate est = flow_ace(model, parse_vector(fa_hi), parse_vector(fa_lo),
                                            fa_dim, fa_n, fa_steps, fa_b, seed);
        std::cout << "ace " << est.point << " se " << est.se << " z " << est.z << " ci ["
                  << est.ci_low << ", " << est.ci_high << "]\n";
        return 0;
    }

    if (sens->parsed()) {
        const SimulatorSpec spec = build_spec(sens_spec);
        if (sens_signflip) {
            SignFlipOptions opts;
            opts.m = sens_m;
            opts.n_seeds = sens_seeds;
            const SignFlipResult res = sign_flip_probe(spec, sens_source, sens_target, opts, seed);
            write_text(sens_out, sign_flip_csv(res));
            std::cout << "flip threshold " << res.threshold << "; curve in " << sens_out << "\n";
        } else {
            SensitivityOptions opts;
            opts.delta_rel = sens_delta;
            const SensitivityReport report =
                sensitivities(spec, sens_source, sens_target, opts, seed);
            write_text(sens_out, sensitivity_report_json(report));
            std::cout << report.entries.size() << " parameters probed; report in " << sens_out
                      << "\n";
        }
        return 0;
    }

    if (bench->parsed()) {
        BenchOptions opts;
        opts.n_seeds = bench_seeds;
        opts.T = bench_T;
        opts.m = bench_m;
        std::vector<BenchDomain> domains;
        if (bench_domain == "all") {
            domains = {BenchDomain::Macro, BenchDomain::Battery, BenchDomain::Cosmic,
                       BenchDomain::Feedback};
        } else {
            domains = {bench_domain_from_name(bench_domain)};
        }
        std::string json_out;
        for (const BenchDomain d : domains) {
            const BenchReport report = run_causalsim(d, opts, seed);
            if (domains.size() == 1) {
                json_out = bench_report_json(report);
            } else {
                json_out += (json_out.empty() ? "[" : ",") + bench_report_json(report);
            }
            if (!bench_csv.empty()) {
                const std::string path = domains.size() == 1
                                             ? bench_csv
                                             : bench_csv + "." + report.domain;
                write_text(path, bench_report_csv(report));
            }
            std::cout << report.domain << ": estimate " << report.estimate_mean << " (truth "
                      << report.truth << "), sign accuracy " << 100.0 * report.sign_accuracy
                      << "%, baseline wrong sign " << 100.0 * report.baseline_wrong_sign
                      << "%\n";
        }
        if (domains.size() > 1) json_out += "]";
        write_text(bench_out, json_out);
        return 0;
    }

    if (rep->parsed()) {
        std::ifstream in(rep_in);
        if (!in) throw Error(Errc::ParseError, "cannot open " + rep_in);
        nlohmann::json j;
        in >> j;
        const auto print_one = [](const nlohmann::json& r) {
            std::cout << r.value("domain", "?") << ": estimate " << r.value("estimate_mean", 0.0)
                      << ", truth " << r.value("truth", 0.0) << ", |bias| "
                      << r.value("bias_abs", 0.0) << ", rmse " << r.value("rmse", 0.0)
                      << ", sign accuracy " << 100.0 * r.value("sign_accuracy", 0.0)
                      << "%, bias reduction " << 100.0 * r.value("bias_reduction", 0.0)
                      << "%, runtime " << r.value("runtime_sec", 0.0) << "s\n";
        };
        if (j.is_array()) {
            for (const auto& r : j) print_one(r);
        } else {
            print_one(j);
        }
        return 0;
    }

    if (proj->parsed()) {
        std::ifstream in(proj_in);
        if (!in) throw Error(Errc::ParseError, "cannot open " + proj_in);
        std::stringstream ss;
        ss << in.rdbuf();
        std::vector<std::string> names;
        const CausalGraph g = graph_from_json(ss.str(), &names);
        DagProjectOptions opts;
        opts.threshold = proj_threshold;
        const CausalGraph projected = project_graph(g, opts);
        write_text(proj_out, graph_to_json(projected, names));
        std::cout << "kept " << projected.edges.size() << " of " << g.edges.size()
                  << " edge(s); graph in " << proj_out << "\n";
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const svarfm::Error& e) {
        std::cerr << "error [" << svarfm::errc_name(e.code()) << "]: " << e.what() << "\n";
        switch (e.code()) {
            case svarfm::Errc::NonConvergence:
            case svarfm::Errc::Divergence:
            case svarfm::Errc::IntegrationFailure:
                return kExitNonConvergence;
            default:
                return kExitValidation;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
}
