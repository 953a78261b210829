#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "freeop/distance.hpp"
#include "freeop/enumerate.hpp"
#include "freeop/hypergraph.hpp"
#include "freeop/inference.hpp"
#include "freeop/io.hpp"
#include "freeop/prior.hpp"
#include "freeop/signature.hpp"
#include "freeop/tasks.hpp"
#include "freeop/term_io.hpp"
#include "freeop/wiring.hpp"

namespace {

struct GraphOpts {
    std::string signature;
    std::string out;
    std::string distances;
    size_t max_product_len = 4;
    bool report = false;
};

void run_graph(const GraphOpts& o) {
    freeop::Signature sig = freeop::load_signature(o.signature);
    freeop::OperadGraph g = freeop::build_hypergraph(sig, o.max_product_len);
    freeop::write_file(o.out, g.to_dot());
    if (!o.distances.empty()) {
        freeop::DistanceMatrix d = freeop::transition_distance(g);
        freeop::write_file(o.distances, freeop::distance_csv(g, d));
    }
    if (o.report) std::fputs(g.report().c_str(), stdout);
}

struct SampleOpts {
    std::string signature;
    std::string dom;
    std::string cod;
    std::string out;
    size_t n = 10;
    uint64_t seed = 0;
    double beta = 0.0;  // 0 means draw from the prior
    bool uniform_weights = false;
    size_t step_cap = 256;
    size_t max_product_len = 4;
};

void run_sample(const SampleOpts& o) {
    freeop::Signature sig = freeop::load_signature(o.signature);
    freeop::OperadGraph g = freeop::build_hypergraph(sig, o.max_product_len);
    freeop::DistanceMatrix d = freeop::transition_distance(g);
    freeop::Ty dom = freeop::parse_ty(o.dom);
    freeop::Ty cod = freeop::parse_ty(o.cod);
    if (o.n == 0) throw freeop::ValidationError("need at least one sample");

    freeop::Rng root = freeop::Rng::root(o.seed);
    freeop::Rng hyper = root.child(0);
    double beta = o.beta;
    if (beta == 0.0) beta = freeop::sample_beta(hyper);
    if (!(beta > 0.0)) throw freeop::ValidationError("beta must be positive");
    std::vector<double> w = o.uniform_weights
                                ? freeop::uniform_weights(freeop::weight_count(g))
                                : freeop::sample_weights(freeop::weight_count(g), hyper);

    std::string lines;
    for (size_t i = 0; i < o.n; ++i) {
        freeop::Rng draw = root.child(1 + i);
        freeop::PathTrace trace =
            freeop::sample_path(g, d, dom, cod, beta, w, draw, o.step_cap);
        lines += freeop::trace_record(trace, beta, w).dump() + "\n";
    }
    freeop::write_file(o.out, lines);
}

struct EnumerateOpts {
    std::string signature;
    std::string dom;
    std::string cod;
    std::string out;
    size_t max_steps = 8;
    size_t max_depth = 3;
    double beta = 1.0;
    size_t max_product_len = 4;
};

void run_enumerate(const EnumerateOpts& o) {
    freeop::Signature sig = freeop::load_signature(o.signature);
    freeop::OperadGraph g = freeop::build_hypergraph(sig, o.max_product_len);
    freeop::DistanceMatrix d = freeop::transition_distance(g);
    if (!(o.beta > 0.0)) throw freeop::ValidationError("beta must be positive");
    std::vector<double> w = freeop::uniform_weights(freeop::weight_count(g));
    freeop::Enumeration en =
        freeop::enumerate_paths(g, d, freeop::parse_ty(o.dom), freeop::parse_ty(o.cod), o.beta,
                                w, o.max_steps, o.max_depth);

    std::map<std::string, double> mass;
    for (const auto& t : en.entries)
        mass[freeop::print_term(freeop::canonicalize(t.term))] += std::exp(t.log_prior);
    std::vector<std::pair<std::string, double>> rows(mass.begin(), mass.end());
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    std::string text;
    for (const auto& [term, p] : rows) text += freeop::format_double(p) + " " + term + "\n";
    text += "truncated_mass " + freeop::format_double(en.truncated_mass) + "\n";
    if (o.out.empty())
        std::fputs(text.c_str(), stdout);
    else
        freeop::write_file(o.out, text);
}

struct EvidenceOpts {
    std::string task;
    std::string diagram;
    std::string out;
    size_t particles = 1000;
    uint64_t seed = 0;
    size_t threads = 1;
    size_t step_cap = 256;
    size_t max_product_len = 4;
};

void run_evidence(const EvidenceOpts& o) {
    freeop::Task task = freeop::load_task(o.task);
    freeop::WiringDiagram diagram = freeop::load_wiring(o.diagram);
    freeop::validate_wiring(task.sig, diagram);
    if (diagram.outer_dom.size() != task.data.in_arity ||
        diagram.outer_cod.size() != task.data.out_arity)
        throw freeop::ValidationError("diagram boundary does not match the dataset arities");
    freeop::OperadGraph g = freeop::build_hypergraph(task.sig, o.max_product_len);
    freeop::DistanceMatrix d = freeop::transition_distance(g);
    freeop::Rng rng = freeop::Rng::root(o.seed);
    freeop::EvidenceReport report = freeop::snis_evidence(g, d, diagram, task, o.particles, rng,
                                                          o.threads, o.step_cap);
    freeop::write_file(o.out, freeop::evidence_json(report).dump(2) + "\n");
}

struct InferOpts {
    std::string task;
    std::string diagram;
    std::string out_dir;
    size_t steps = 120;
    size_t samples = 64;
    double lr = 0.05;
    size_t particles = 10000;
    uint64_t seed = 0;
    size_t threads = 1;
    size_t step_cap = 256;
    size_t max_product_len = 4;
};

void run_infer(const InferOpts& o) {
    freeop::Task task = freeop::load_task(o.task);
    freeop::WiringDiagram diagram = freeop::load_wiring(o.diagram);
    freeop::validate_wiring(task.sig, diagram);
    if (diagram.outer_dom.size() != task.data.in_arity ||
        diagram.outer_cod.size() != task.data.out_arity)
        throw freeop::ValidationError("diagram boundary does not match the dataset arities");
    freeop::OperadGraph g = freeop::build_hypergraph(task.sig, o.max_product_len);
    freeop::DistanceMatrix d = freeop::transition_distance(g);

    freeop::FitConfig cfg;
    cfg.steps = o.steps;
    cfg.samples = o.samples;
    cfg.learning_rate = o.lr;
    cfg.step_cap = o.step_cap;
    cfg.threads = o.threads;

    freeop::Rng root = freeop::Rng::root(o.seed);
    freeop::Rng fit_rng = root.child(0);
    freeop::FitResult fit = freeop::fit_variational(g, d, diagram, task, cfg, fit_rng);

    freeop::Rng post_rng = root.child(1);
    std::vector<freeop::PosteriorEntry> posterior = freeop::posterior_samples(
        g, d, diagram, task, fit.params, o.particles, post_rng, o.threads, o.step_cap);

    std::filesystem::create_directories(o.out_dir);

    nlohmann::ordered_json vj;
    vj["gamma"] = {{"shape", fit.params.shape}, {"rate", fit.params.rate}};
    vj["dirichlet"] = {{"alpha", fit.params.alpha}};
    vj["steps"] = o.steps;
    vj["final_elbo"] = fit.history.empty() ? 0.0 : fit.history.back().value;
    freeop::write_file(o.out_dir + "/variational.json", vj.dump(2) + "\n");

    std::string csv = "step,elbo,stderr\n";
    for (size_t i = 0; i < fit.history.size(); ++i)
        csv += std::to_string(i) + "," + freeop::format_double(fit.history[i].value) + "," +
               freeop::format_double(fit.history[i].std_error) + "\n";
    freeop::write_file(o.out_dir + "/elbo.csv", csv);

    std::string jsonl;
    for (const auto& e : posterior) {
        nlohmann::ordered_json row;
        row["term"] = e.term;
        row["prob"] = e.prob;
        jsonl += row.dump() + "\n";
    }
    freeop::write_file(o.out_dir + "/posterior.jsonl", jsonl);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"free operad path sampling and program induction"};
    app.require_subcommand(1);

    GraphOpts go;
    CLI::App* graph = app.add_subcommand("graph", "build the type graph for a signature");
    graph->add_option("--signature", go.signature, "signature JSON file")->required();
    graph->add_option("--out", go.out, "DOT output path")->required();
    graph->add_option("--dump-distances", go.distances, "also write the distance matrix CSV");
    graph->add_option("--max-product-len", go.max_product_len, "product length cap");
    graph->add_flag("--report", go.report, "print a text summary to stdout");
    graph->callback([&go] { run_graph(go); });

    SampleOpts so;
    CLI::App* sample = app.add_subcommand("sample", "draw morphisms between two types");
    sample->add_option("--signature", so.signature, "signature JSON file")->required();
    sample->add_option("--dom", so.dom, "domain type, e.g. [R]")->required();
    sample->add_option("--cod", so.cod, "codomain type, e.g. [R*R]")->required();
    sample->add_option("--out", so.out, "JSONL output path")->required();
    sample->add_option("--n", so.n, "number of draws");
    sample->add_option("--seed", so.seed, "random seed");
    sample->add_option("--beta", so.beta, "fix beta instead of drawing it");
    sample->add_flag("--uniform-weights", so.uniform_weights,
                     "use uniform weights instead of drawing them");
    sample->add_option("--step-cap", so.step_cap, "per-path step limit");
    sample->add_option("--max-product-len", so.max_product_len, "product length cap");
    sample->callback([&so] { run_sample(so); });

    EnumerateOpts eo;
    CLI::App* enumerate = app.add_subcommand("enumerate", "expand the path distribution");
    enumerate->add_option("--signature", eo.signature, "signature JSON file")->required();
    enumerate->add_option("--dom", eo.dom, "domain type")->required();
    enumerate->add_option("--cod", eo.cod, "codomain type")->required();
    enumerate->add_option("--out", eo.out, "output path (stdout if omitted)");
    enumerate->add_option("--max-steps", eo.max_steps, "per-path step budget");
    enumerate->add_option("--max-depth", eo.max_depth, "recursion depth budget");
    enumerate->add_option("--beta", eo.beta, "beta for the policy");
    enumerate->add_option("--max-product-len", eo.max_product_len, "product length cap");
    enumerate->callback([&eo] { run_enumerate(eo); });

    EvidenceOpts vo;
    CLI::App* evidence = app.add_subcommand("evidence", "estimate task evidence by sampling");
    evidence->add_option("--task", vo.task, "task JSON file")->required();
    evidence->add_option("--diagram", vo.diagram, "wiring diagram JSON file")->required();
    evidence->add_option("--out", vo.out, "report JSON path")->required();
    evidence->add_option("--particles", vo.particles, "number of particles");
    evidence->add_option("--seed", vo.seed, "random seed");
    evidence->add_option("--threads", vo.threads, "worker threads");
    evidence->add_option("--step-cap", vo.step_cap, "per-path step limit");
    evidence->add_option("--max-product-len", vo.max_product_len, "product length cap");
    evidence->callback([&vo] { run_evidence(vo); });

    InferOpts io;
    CLI::App* infer = app.add_subcommand("infer", "fit the variational posterior for a task");
    infer->add_option("--task", io.task, "task JSON file")->required();
    infer->add_option("--diagram", io.diagram, "wiring diagram JSON file")->required();
    infer->add_option("--out", io.out_dir, "output directory")->required();
    infer->add_option("--steps", io.steps, "ascent steps");
    infer->add_option("--samples", io.samples, "draws per step");
    infer->add_option("--lr", io.lr, "learning rate");
    infer->add_option("--particles", io.particles, "posterior draws");
    infer->add_option("--seed", io.seed, "random seed");
    infer->add_option("--threads", io.threads, "worker threads");
    infer->add_option("--step-cap", io.step_cap, "per-path step limit");
    infer->add_option("--max-product-len", io.max_product_len, "product length cap");
    infer->callback([&io] { run_infer(io); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const freeop::InputError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 3;
    }
    return 0;
}
