// nnsc: generate bars data, fit NNSC/NMF factorizations, score and render features.
//
// Exit codes: 0 success, 1 runtime or solver failure, 2 usage or validation error.

#include <CLI11.hpp>

#include <charconv>
#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>

#include "nnsc/bars.hpp"
#include "nnsc/densemat.hpp"
#include "nnsc/model.hpp"
#include "nnsc/solver.hpp"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

// Shortest round-trip form, for console echo only; CSV output keeps 17 digits.
std::string show(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

nnsc::Matrix load_matrix(const std::string& path) {
    try {
        return nnsc::read_csv(path);
    } catch (const nnsc::FormatError& e) {
        throw UsageError(e.what());
    }
}

struct GenerateArgs {
    std::size_t samples = 500;
    std::uint64_t seed = 0;
    double active_prob = 0.2;
    double amp_scale = 1.0;
    std::size_t side = 3;
    std::string out;
    std::string features_out;
    std::string components_out;
};

int run_generate(const GenerateArgs& args) {
    nnsc::bars::BarsSpec spec;
    spec.image_side = args.side;
    spec.n_samples = args.samples;
    spec.active_prob = args.active_prob;
    spec.amp_scale = args.amp_scale;
    spec.seed = args.seed;
    try {
        spec.check();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    std::cout << "generate: side=" << spec.image_side << " samples=" << spec.n_samples
              << " active_prob=" << show(spec.active_prob)
              << " amp_scale=" << show(spec.amp_scale) << " seed=" << spec.seed << '\n';

    const auto data = nnsc::bars::generate(spec);
    nnsc::write_csv(args.out, data.x);
    if (!args.features_out.empty()) nnsc::write_csv(args.features_out, data.a_orig);
    if (!args.components_out.empty()) nnsc::write_csv(args.components_out, data.s_orig);
    std::cout << "wrote X " << data.x.shape() << " to " << args.out << '\n';
    return 0;
}

struct FactorizeArgs {
    std::string input;
    std::size_t components = 0;
    std::string algo = "nnsc";
    double lambda = 0.1;
    double mu = 1e-2;
    std::size_t max_iters = 5000;
    double tol = 1e-9;
    double eps_div = 1e-12;
    std::uint64_t seed = 0;
    bool no_backtracking = false;
    std::string out_a;
    std::string out_s;
    std::string trace;
};

int run_factorize(const FactorizeArgs& args) {
    nnsc::SolverConfig cfg;
    if (args.algo == "nnsc") {
        cfg.mode = nnsc::Mode::nnsc;
    } else if (args.algo == "nmf") {
        cfg.mode = nnsc::Mode::nmf;
    } else {
        throw UsageError("unknown --algo '" + args.algo + "' (expected nnsc or nmf)");
    }
    if (!(args.lambda >= 0.0)) throw UsageError("--lambda must be >= 0");
    if (args.components == 0) throw UsageError("--components must be >= 1");
    cfg.mu = args.mu;
    cfg.max_iters = args.max_iters;
    cfg.tol = args.tol;
    cfg.eps_div = args.eps_div;
    cfg.seed = args.seed;
    cfg.backtracking = !args.no_backtracking;
    try {
        cfg.check();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }

    nnsc::Matrix x = load_matrix(args.input);
    double lambda = args.lambda;
    if (cfg.mode == nnsc::Mode::nmf && lambda != 0.0) {
        std::cerr << "warning: lambda is ignored in nmf mode\n";
        lambda = 0.0;
    }
    std::optional<nnsc::Problem> problem;
    try {
        problem.emplace(std::move(x), lambda);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }

    std::cout << "factorize: input=" << args.input << " components=" << args.components << " algo=" << args.algo
              << " lambda=" << show(lambda) << " mu=" << show(cfg.mu)
              << " max_iters=" << cfg.max_iters << " tol=" << show(cfg.tol)
              << " eps_div=" << show(cfg.eps_div) << " seed=" << cfg.seed
              << " backtracking=" << (cfg.backtracking ? "on" : "off") << '\n';

    const auto result = nnsc::fit(*problem, args.components, cfg);
    if (!args.out_a.empty()) nnsc::write_csv(args.out_a, result.factorization.a);
    if (!args.out_s.empty()) nnsc::write_csv(args.out_s, result.factorization.s);
    if (!args.trace.empty()) result.trace.write_csv(args.trace);

    std::cout << "objective=" << show(result.final_objective())
              << " iterations=" << result.iterations() << " converged=" << (result.trace.converged ? "yes" : "no")
              << '\n';
    return 0;
}

struct EvaluateArgs {
    std::string learned;
    std::string reference;
    double threshold = nnsc::bars::default_match_threshold;
};

int run_evaluate(const EvaluateArgs& args) {
    const nnsc::Matrix learned = load_matrix(args.learned);
    const nnsc::Matrix reference = load_matrix(args.reference);
    if (learned.rows() != reference.rows()) {
        throw UsageError("row mismatch: learned " + learned.shape() + " vs reference " + reference.shape());
    }
    const auto report = nnsc::bars::match_features(learned, reference, args.threshold);
    std::cout << report.to_text();
    std::cout << "recovered=" << report.recovered_count << " total=" << reference.cols()
              << " threshold=" << show(args.threshold) << '\n';
    return 0;
}

struct RenderArgs {
    std::string input;
    std::size_t side = 3;
    std::string out;
};

int run_render(const RenderArgs& args) {
    const nnsc::Matrix features = load_matrix(args.input);
    if (args.side == 0 || features.rows() != args.side * args.side) {
        throw UsageError("column length " + std::to_string(features.rows()) + " does not equal side^2 for side " +
                         std::to_string(args.side));
    }
    nnsc::bars::write_pgm(args.out, features, args.side);
    std::cout << "wrote " << features.cols() << " tiles to " << args.out << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Non-negative sparse coding: bars data, NNSC/NMF fitting, feature evaluation"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* generate = app.add_subcommand("generate", "Generate a bars dataset X = A_orig S_orig");
    generate->add_option("--samples", gen.samples, "Number of samples (columns of X)")->capture_default_str();
    generate->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
    generate->add_option("--active-prob", gen.active_prob, "Per-feature activation probability")
        ->capture_default_str();
    generate->add_option("--amp-scale", gen.amp_scale, "Mean of exponential activation amplitudes")
        ->capture_default_str();
    generate->add_option("--side", gen.side, "Image side length")->capture_default_str();
    generate->add_option("--out", gen.out, "Output CSV for X")->required();
    generate->add_option("--features-out", gen.features_out, "Output CSV for A_orig");
    generate->add_option("--components-out", gen.components_out, "Output CSV for S_orig");

    FactorizeArgs fac;
    auto* factorize = app.add_subcommand("factorize", "Fit X ~ A S with NNSC or NMF");
    factorize->add_option("--input", fac.input, "Input CSV (columns are samples)")->required();
    factorize->add_option("--components", fac.components, "Number of basis vectors")->required();
    factorize->add_option("--algo", fac.algo, "nnsc or nmf")->capture_default_str();
    factorize->add_option("--lambda", fac.lambda, "Sparseness weight (nnsc only)")->capture_default_str();
    factorize->add_option("--mu", fac.mu, "Initial basis step size")->capture_default_str();
    factorize->add_option("--max-iters", fac.max_iters, "Outer iteration cap")->capture_default_str();
    factorize->add_option("--tol", fac.tol, "Relative objective change treated as converged")->capture_default_str();
    factorize->add_option("--eps-div", fac.eps_div, "Denominator floor for multiplicative updates")
        ->capture_default_str();
    factorize->add_option("--seed", fac.seed, "Initialization seed")->capture_default_str();
    factorize->add_flag("--no-backtracking", fac.no_backtracking, "Use a fixed basis step size");
    factorize->add_option("--out-a", fac.out_a, "Output CSV for the basis A");
    factorize->add_option("--out-s", fac.out_s, "Output CSV for the components S");
    factorize->add_option("--trace", fac.trace, "Output CSV for the per-iteration trace");

    EvaluateArgs ev;
    auto* evaluate = app.add_subcommand("evaluate", "Match learned features against reference features");
    evaluate->add_option("--learned", ev.learned, "Learned basis CSV")->required();
    evaluate->add_option("--reference", ev.reference, "Reference basis CSV")->required();
    evaluate->add_option("--threshold", ev.threshold, "Cosine similarity counted as recovered")
        ->capture_default_str();

    RenderArgs ren;
    auto* render = app.add_subcommand("render", "Render basis columns as a P2 graymap tile strip");
    render->add_option("--input", ren.input, "Basis CSV, one flattened image per column")->required();
    render->add_option("--side", ren.side, "Image side length")->capture_default_str();
    render->add_option("--out", ren.out, "Output .pgm path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (generate->parsed()) return run_generate(gen);
        if (factorize->parsed()) return run_factorize(fac);
        if (evaluate->parsed()) return run_evaluate(ev);
        if (render->parsed()) return run_render(ren);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}
