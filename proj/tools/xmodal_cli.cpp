// xmodal command line: thin CLI11 wrapper over xmodal::pipeline.
// Failures print a single `error[E_CODE]: message` line to stderr.

#include <xmodal/pipeline.hpp>

#include <CLI11.hpp>

#include <iostream>

namespace pl = xmodal::pipeline;

namespace {

struct Common {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::vector<double> eps;
};

void add_common(CLI::App* cmd, Common& c, bool needs_config = true) {
    auto* opt = cmd->add_option("-c,--config", c.config, "run config JSON");
    if (needs_config) opt->required();
    cmd->add_option("-o,--out", c.out, std::string("output directory (default $") + pl::kOutEnv + " or ./xmodal_out)");
    cmd->add_option("--seed", c.seed, "override the config seed");
}

pl::RunConfig load(const Common& c) {
    pl::RunConfig cfg = pl::load_config(c.config);
    if (!c.out.empty()) cfg.output_dir = c.out;
    else if (!cfg.output_dir.empty()) cfg.output_dir = cfg.resolve(cfg.output_dir.string());
    else cfg.output_dir = pl::default_output_dir();
    if (c.seed) cfg.seed = *c.seed;
    if (!c.eps.empty()) cfg.epsilons = c.eps;
    return cfg;
}

void print(const pl::json& j) { std::cout << pl::dump(j); }

void demo_summary(const pl::DemoResult& r) {
    for (const auto& c : r.checks) std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
    std::cout << "report: " << (r.dir / "report.json").string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"xmodal: cross-modal compatibility via cellular sheaves"};
    app.require_subcommand(1);
    app.set_version_flag("--version", pl::kVersion);

    Common c;
    auto* site = app.add_subcommand("site", "build the base graph and report lambda2");
    add_common(site, c);
    auto* whiten = app.add_subcommand("whiten", "whiten every modality on a seeded training split");
    add_common(whiten, c);
    auto* hardness = app.add_subcommand("hardness", "global hardness H per pair and epsilon");
    add_common(hardness, c);
    hardness->add_option("--eps", c.eps, "override epsilons");
    bool certified = false;
    hardness->add_flag("--certified-relu", certified, "use the exact 1-D ReLU certificate");
    auto* obstruction = app.add_subcommand("obstruction", "lambda path and C(eps) per pair, with SVG plots");
    add_common(obstruction, c);
    obstruction->add_option("--eps", c.eps, "override epsilons");
    auto* bridge = app.add_subcommand("bridge", "compare a->c->b against a->b");
    add_common(bridge, c);
    bridge->add_option("--eps", c.eps, "override epsilons");
    auto* report = app.add_subcommand("report", "assemble report.json from previous steps");
    add_common(report, c);
    std::optional<double> alpha0, tau0;
    report->add_option("--alpha0", alpha0, "hardness threshold for the relation");
    report->add_option("--tau0", tau0, "obstruction threshold for the relation");

    auto* demo = app.add_subcommand("demo", "run a built-in scenario with its checks");
    demo->require_subcommand(1);
    std::string demo_out;
    pl::SignflipParams sp;
    auto* signflip = demo->add_subcommand("signflip", "two clusters with b = -a on one side");
    signflip->add_option("--cut", sp.cut, "number of cut edges")->check(CLI::PositiveNumber);
    signflip->add_option("--n-plus", sp.n_plus, "vertices in V+")->check(CLI::PositiveNumber);
    signflip->add_option("--n-minus", sp.n_minus, "vertices in V-")->check(CLI::PositiveNumber);
    signflip->add_option("--eps", sp.eps, "error budget");
    signflip->add_option("--seed", sp.seed, "scenario seed");
    signflip->add_option("-o,--out", demo_out, "output directory");
    pl::ReluParams rp;
    auto* relu = demo->add_subcommand("relu", "sawtooth / zigzag ReLU bridge");
    relu->add_option("--w", rp.w, "bridge width (>= 2)");
    relu->add_option("--n", rp.n, "samples");
    relu->add_option("--eps", rp.eps, "error budget");
    relu->add_option("--seed", rp.seed, "scenario seed");
    relu->add_option("--alpha0", rp.alpha0, "relation threshold (default w+1)");
    relu->add_option("-o,--out", demo_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << "error[E_USAGE]: " << e.what() << "\n";
        return 2;
    }

    try {
        if (*site) {
            auto s = pl::run_site(load(c));
            s.erase("component_labels");  // still written to spectral.json
            print(s);
        } else if (*whiten) {
            print(pl::run_whiten(load(c)));
        } else if (*hardness) {
            auto cfg = load(c);
            if (certified) cfg.certified_relu = true;
            pl::run_hardness(cfg);
            std::cout << "wrote " << pl::Layout{cfg.output_dir}.hardness().string() << "\n";
        } else if (*obstruction) {
            const auto cfg = load(c);
            pl::run_obstruction(cfg);
            std::cout << "wrote " << pl::Layout{cfg.output_dir}.obstruction().string() << "\n";
        } else if (*bridge) {
            std::cout << pl::bridge_table(pl::run_bridge(load(c)));
        } else if (*report) {
            auto cfg = load(c);
            if (alpha0) cfg.alpha0 = alpha0;
            if (tau0) cfg.tau0 = tau0;
            pl::run_report(cfg);
            std::cout << "wrote " << pl::Layout{cfg.output_dir}.report().string() << "\n";
        } else if (*signflip) {
            const auto r = pl::demo_signflip(sp, pl::default_output_dir(demo_out));
            demo_summary(r);
            if (!r.ok()) throw xmodal::Error(xmodal::codes::check_failed, "signflip demo: one or more checks failed");
        } else if (*relu) {
            const auto r = pl::demo_relu(rp, pl::default_output_dir(demo_out));
            demo_summary(r);
            if (!r.ok()) throw xmodal::Error(xmodal::codes::check_failed, "relu demo: one or more checks failed");
        }
    } catch (const xmodal::Error& e) {
        std::cerr << "error[" << e.code() << "]: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error[E_INTERNAL]: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
