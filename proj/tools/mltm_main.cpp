#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mltm/analytic.hpp"
#include "mltm/bn.hpp"
#include "mltm/errors.hpp"
#include "mltm/experiments.hpp"
#include "mltm/lem.hpp"
#include "mltm/ltm.hpp"
#include "mltm/network.hpp"
#include "mltm/protocol.hpp"
#include "mltm/rng.hpp"

namespace {

using nlohmann::json;

// Exit codes: 0 success, 2 usage, 3 invalid input, 4 over a capacity gate,
// 5 internal failure.
constexpr int kExitUsage = 2;
constexpr int kExitValidation = 3;
constexpr int kExitCapacity = 4;
constexpr int kExitInternal = 5;

// Where the active subcommand wants machine output; error documents follow
// the same destination so scripted callers always find one.
std::string g_out_path;

void write_json(const json& doc, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw mltm::ValidationError("cannot write " + path);
    f << doc.dump(2) << "\n";
}

// Successful runs only write a document when --out was given; failures always
// yield one so scripted callers can inspect it (--out if set, stdout if not).
void emit_machine_output(const json& doc) {
    if (!g_out_path.empty()) write_json(doc, g_out_path);
}

void emit_error_document(const json& doc) {
    if (g_out_path.empty())
        std::cout << doc.dump(2) << "\n";
    else
        write_json(doc, g_out_path);
}

uint64_t fresh_seed() {
    std::random_device rd;
    return (static_cast<uint64_t>(rd()) << 32) ^ rd();
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(12) << v;
    return os.str();
}

void print_per_agent(const std::vector<double>& values) {
    for (size_t i = 0; i < values.size(); ++i)
        std::cout << "  agent " << (i + 1) << ": " << fmt(values[i]) << "\n";
}

std::vector<double> make_grid(double lo, double hi, double step) {
    if (step <= 0.0) throw mltm::ValidationError("grid step must be positive");
    if (hi < lo) throw mltm::ValidationError("grid upper bound below lower bound");
    std::vector<double> grid;
    int count = static_cast<int>(std::floor((hi - lo) / step + 1e-9)) + 1;
    for (int i = 0; i < count; ++i) grid.push_back(lo + i * step);
    return grid;
}

struct NetworkArgs {
    std::string network, protocols, seeds;

    void add_to(CLI::App* cmd, bool need_protocols = true, bool need_seeds = true) {
        cmd->add_option("--network", network, "network document (JSON)")->required();
        auto* p = cmd->add_option("--protocols", protocols, "protocol document (JSON)");
        auto* s = cmd->add_option("--seeds", seeds, "seed document (JSON)");
        if (need_protocols) p->required();
        if (need_seeds) s->required();
    }

    mltm::MultiplexNetwork load_net() const { return mltm::load_network_file(network); }
};

int dispatch(CLI::App& app, int argc, char** argv);

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"influence spread and cascade centrality in multiplex threshold networks"};
    app.require_subcommand(1);
    try {
        return dispatch(app, argc, argv);
    } catch (const mltm::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        emit_error_document({{"error", {{"type", "validation"}, {"message", e.what()}}}});
        return kExitValidation;
    } catch (const mltm::CapacityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        emit_error_document({{"error", {{"type", "capacity"}, {"message", e.what()}}}});
        return kExitCapacity;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        emit_error_document({{"error", {{"type", "internal"}, {"message", e.what()}}}});
        return kExitInternal;
    }
}

namespace {

int dispatch(CLI::App& app, int argc, char** argv) {
    // ---- simulate ----------------------------------------------------------
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo activation estimate");
    NetworkArgs sim_args;
    sim_args.add_to(simulate);
    long long sim_trials = 100000;
    uint64_t sim_seed = 0;
    int sim_threads = 0;
    simulate->add_option("--trials", sim_trials, "number of trials");
    auto* sim_seed_opt = simulate->add_option("--seed", sim_seed, "master seed (default: random)");
    simulate->add_option("--threads", sim_threads, "worker threads (0 = all cores)");
    simulate->add_option("--out", g_out_path, "write the result document here");

    simulate->callback([&] {
        auto net = sim_args.load_net();
        auto protocols = mltm::ProtocolSequence::from_file(sim_args.protocols, net.n);
        auto seeds = mltm::parse_seeds_file(sim_args.seeds, net.n);
        if (!sim_seed_opt->count()) sim_seed = fresh_seed();
        auto est = mltm::estimate_spread(net, protocols, seeds, sim_trials, sim_seed, sim_threads);
        json doc;
        doc["config"] = {{"command", "simulate"},   {"network", sim_args.network},
                         {"protocols", protocols.to_json()}, {"seeds", mltm::serialize_seeds(seeds)},
                         {"trials", sim_trials},    {"seed", sim_seed},
                         {"threads", sim_threads}};
        doc["activation"] = est.activation;
        doc["spread"] = est.spread;
        emit_machine_output(doc);
        std::cout << "spread " << fmt(est.spread) << " over " << sim_trials
                  << " trials (seed " << sim_seed << ")\n";
        print_per_agent(est.activation);
    });

    // ---- exact -------------------------------------------------------------
    auto* exact = app.add_subcommand("exact", "exact activation probabilities by live-edge enumeration");
    NetworkArgs ex_args;
    ex_args.add_to(exact);
    mltm::LemOptions ex_opts = mltm::default_lem_options();
    exact->add_option("--cap", ex_opts.selection_cap, "selection enumeration cap");
    exact->add_option("--threads", ex_opts.threads, "worker threads (0 = all cores)");
    exact->add_option("--out", g_out_path, "write the result document here");

    exact->callback([&] {
        auto net = ex_args.load_net();
        auto protocols = mltm::ProtocolSequence::from_file(ex_args.protocols, net.n);
        auto seeds = mltm::parse_seeds_file(ex_args.seeds, net.n);
        auto res = mltm::exact_probabilities(net, protocols, seeds, ex_opts);
        json doc;
        doc["config"] = {{"command", "exact"},
                         {"network", ex_args.network},
                         {"protocols", protocols.to_json()},
                         {"seeds", mltm::serialize_seeds(seeds)},
                         {"cap", ex_opts.selection_cap},
                         {"threads", ex_opts.threads}};
        doc["activation"] = res.activation;
        doc["spread"] = res.spread;
        doc["selections"] = res.selections;
        emit_machine_output(doc);
        std::cout << "spread " << fmt(res.spread) << " over " << res.selections
                  << " selections\n";
        print_per_agent(res.activation);
    });

    // ---- bn ----------------------------------------------------------------
    auto* bn = app.add_subcommand("bn", "activation marginals through the Bayes-net mapping");
    NetworkArgs bn_args;
    bn_args.add_to(bn);
    std::string bn_method = "auto";
    mltm::LbpOptions bn_lbp;
    int bn_cap = 0;
    bn->add_option("--method", bn_method, "auto, exact, or lbp")
        ->check(CLI::IsMember({"auto", "exact", "lbp"}));
    bn->add_option("--damping", bn_lbp.damping, "message damping (lbp)");
    bn->add_option("--tol", bn_lbp.tol, "convergence threshold (lbp)");
    bn->add_option("--max-iters", bn_lbp.max_iters, "iteration limit (lbp)");
    bn->add_option("--bn-cap", bn_cap, "exact-inference unobserved-node cap");
    bn->add_option("--out", g_out_path, "write the result document here");

    bn->callback([&] {
        auto net = bn_args.load_net();
        auto protocols = mltm::ProtocolSequence::from_file(bn_args.protocols, net.n);
        auto seeds = mltm::parse_seeds_file(bn_args.seeds, net.n);
        mltm::BnMethod method = bn_method == "exact" ? mltm::BnMethod::Exact
                                : bn_method == "lbp" ? mltm::BnMethod::Lbp
                                                     : mltm::BnMethod::Auto;
        auto res = mltm::influence_spread_bn(net, protocols, seeds, method, bn_lbp, bn_cap);
        json doc;
        doc["config"] = {{"command", "bn"},       {"network", bn_args.network},
                         {"protocols", protocols.to_json()}, {"seeds", mltm::serialize_seeds(seeds)},
                         {"method", bn_method},   {"damping", bn_lbp.damping},
                         {"tol", bn_lbp.tol},     {"max_iters", bn_lbp.max_iters}};
        doc["marginal"] = res.marginal;
        doc["spread"] = res.spread;
        doc["method"] = res.method;
        doc["converged"] = res.converged;
        doc["iterations"] = res.iterations;
        doc["residual"] = res.residual;
        emit_machine_output(doc);
        std::cout << "spread " << fmt(res.spread) << " via " << res.method;
        if (res.method == "lbp")
            std::cout << (res.converged ? " (converged in " : " (NOT converged after ")
                      << res.iterations << " iterations)";
        std::cout << "\n";
        print_per_agent(res.marginal);
    });

    // ---- analytic ----------------------------------------------------------
    auto* analytic = app.add_subcommand("analytic", "closed-form family values");
    std::string an_family, an_variant;
    int an_N = 0, an_j = 0, an_i = 0;
    analytic->add_option("--family", an_family, "repeated-path or permutation")
        ->required()
        ->check(CLI::IsMember({"repeated-path", "permutation"}));
    analytic->add_option("--N", an_N, "number of agents")->required();
    analytic->add_option("--j", an_j, "seed position (1-based)")->required();
    analytic->add_option("--i", an_i, "target position (permutation family)");
    analytic->add_option("--variant", an_variant, "or, and, single (repeated-path) / cycle (permutation)")
        ->required();
    analytic->add_option("--out", g_out_path, "write the result document here");

    analytic->callback([&] {
        double value = 0.0;
        if (an_family == "repeated-path") {
            mltm::RepeatedPathVariant v;
            if (an_variant == "or")
                v = mltm::RepeatedPathVariant::AnyLayer;
            else if (an_variant == "and")
                v = mltm::RepeatedPathVariant::AllLayers;
            else if (an_variant == "single")
                v = mltm::RepeatedPathVariant::SingleLayer;
            else
                throw mltm::ValidationError("repeated-path variants: or, and, single");
            value = mltm::repeated_path_centrality(an_N, an_j, v);
        } else {
            mltm::PermutationVariant v;
            if (an_variant == "or")
                v = mltm::PermutationVariant::AnyLayer;
            else if (an_variant == "and")
                v = mltm::PermutationVariant::AllLayers;
            else if (an_variant == "cycle")
                v = mltm::PermutationVariant::Cycle;
            else
                throw mltm::ValidationError("permutation variants: or, and, cycle");
            if (an_i == 0) throw mltm::ValidationError("the permutation family needs --i");
            value = mltm::permutation_probability(an_N, an_i, an_j, v);
        }
        json doc;
        doc["config"] = {{"command", "analytic"}, {"family", an_family},   {"N", an_N},
                         {"j", an_j},             {"variant", an_variant}};
        if (an_family == "permutation") doc["config"]["i"] = an_i;
        doc["value"] = value;
        emit_machine_output(doc);
        std::cout << "value = " << fmt(value) << "\n";
    });

    // ---- generate ----------------------------------------------------------
    auto* generate = app.add_subcommand("generate", "write a generated network document");
    std::string gen_family;
    int gen_N = 0;
    double gen_pe = 0.0;
    uint64_t gen_seed = 0;
    generate->add_option("--family", gen_family, "path, repeated-path, cycle, permutation, random-duplex-dag")
        ->required()
        ->check(CLI::IsMember({"path", "repeated-path", "cycle", "permutation", "random-duplex-dag"}));
    generate->add_option("--N,--n", gen_N, "number of agents")->required();
    generate->add_option("--pe", gen_pe, "edge probability (random-duplex-dag)");
    auto* gen_seed_opt = generate->add_option("--seed", gen_seed, "generator seed (default: random)");
    generate->add_option("--out", g_out_path, "output network document")->required();

    generate->callback([&] {
        mltm::MultiplexNetwork net;
        if (gen_family == "path")
            net = mltm::path_network(gen_N);
        else if (gen_family == "repeated-path")
            net = mltm::repeated_path_network(gen_N);
        else if (gen_family == "cycle")
            net = mltm::cycle_network(gen_N);
        else if (gen_family == "permutation")
            net = mltm::permutation_network(gen_N);
        else {
            if (!gen_seed_opt->count()) gen_seed = fresh_seed();
            net = mltm::random_duplex_dag(gen_N, gen_pe, gen_seed);
        }
        write_json(mltm::serialize_network(net), g_out_path);
        std::cout << "wrote " << gen_family << " network (n=" << net.n << ", m=" << net.m
                  << ") to " << g_out_path;
        if (gen_family == "random-duplex-dag") std::cout << " (seed " << gen_seed << ")";
        std::cout << "\n";
        g_out_path.clear();  // the network document is the output; no error doc slot
    });

    // ---- sweep-c -----------------------------------------------------------
    auto* sweepc = app.add_subcommand("sweep-c", "optimal protocol assignments across signal costs");
    NetworkArgs swc_args;
    swc_args.add_to(sweepc, /*need_protocols=*/false, /*need_seeds=*/false);
    double swc_min = 0.0, swc_max = 3.0, swc_step = 0.05;
    std::string swc_policy = "replace", swc_json;
    mltm::LemOptions swc_opts = mltm::default_lem_options();
    sweepc->add_option("--c-min", swc_min, "cost grid start");
    sweepc->add_option("--c-max", swc_max, "cost grid end");
    sweepc->add_option("--c-step", swc_step, "cost grid step");
    sweepc->add_option("--policy", swc_policy, "signal edge policy: replace or renormalize")
        ->check(CLI::IsMember({"replace", "renormalize"}));
    sweepc->add_option("--cap", swc_opts.selection_cap, "selection enumeration cap");
    sweepc->add_option("--threads", swc_opts.threads, "worker threads (0 = all cores)");
    sweepc->add_option("--out", g_out_path, "output CSV")->required();
    sweepc->add_option("--json", swc_json, "also write the full JSON document here");

    sweepc->callback([&] {
        auto net = swc_args.load_net();
        auto policy = swc_policy == "replace" ? mltm::SignalEdgePolicy::Replace
                                              : mltm::SignalEdgePolicy::Renormalize;
        auto grid = make_grid(swc_min, swc_max, swc_step);
        auto rows = mltm::optimal_protocol_sweep(net, grid, policy, swc_opts);

        auto set_string = [](const std::vector<uint64_t>& masks, int n) {
            std::string s;
            for (size_t a = 0; a < masks.size(); ++a) {
                if (a) s += "|";
                s += "{";
                bool first = true;
                for (int i = 0; i < n; ++i)
                    if ((masks[a] >> i) & 1) {
                        if (!first) s += ",";
                        s += std::to_string(i + 1);
                        first = false;
                    }
                s += "}";
            }
            return s;
        };

        std::ofstream csv(g_out_path);
        if (!csv) throw mltm::ValidationError("cannot write " + g_out_path);
        csv << "c,fraction_and,q_opt,optimal_sets\n";
        for (const auto& row : rows)
            csv << row.c << "," << row.fraction_all_layers << "," << fmt(row.q_opt) << ",\""
                << set_string(row.optimal_masks, net.n) << "\"\n";

        json config = {{"command", "sweep-c"}, {"network", swc_args.network},
                       {"c_min", swc_min},     {"c_max", swc_max},
                       {"c_step", swc_step},   {"policy", swc_policy},
                       {"cap", swc_opts.selection_cap}};
        if (!swc_json.empty()) {
            json doc;
            doc["config"] = config;
            doc["rows"] = json::array();
            for (const auto& row : rows)
                doc["rows"].push_back({{"c", row.c},
                                       {"fraction_and", row.fraction_all_layers},
                                       {"q_opt", row.q_opt},
                                       {"optimal_sets", set_string(row.optimal_masks, net.n)}});
            write_json(doc, swc_json);
        }
        std::cout << "config " << config.dump() << "\n";
        for (const auto& row : rows)
            std::cout << "  c=" << row.c << "  q*=" << fmt(row.q_opt) << "  and-fraction="
                      << row.fraction_all_layers << "  " << set_string(row.optimal_masks, net.n)
                      << "\n";
        std::cout << "wrote " << rows.size() << " rows to " << g_out_path << "\n";
    });

    // ---- sweep-pe ----------------------------------------------------------
    auto* sweeppe = app.add_subcommand("sweep-pe", "root centrality across edge densities");
    int swp_n = 20, swp_reps = 100;
    double swp_min = 0.0, swp_max = 1.0, swp_step = 0.05;
    uint64_t swp_seed = 0;
    std::string swp_backend = "auto", swp_json;
    sweeppe->add_option("--n", swp_n, "agents per replicate network");
    sweeppe->add_option("--pe-min", swp_min, "density grid start");
    sweeppe->add_option("--pe-max", swp_max, "density grid end");
    sweeppe->add_option("--pe-step", swp_step, "density grid step");
    sweeppe->add_option("--replicates", swp_reps, "replicate networks per density");
    auto* swp_seed_opt = sweeppe->add_option("--seed", swp_seed, "master seed (default: random)");
    sweeppe->add_option("--backend", swp_backend, "auto, exact, or lbp")
        ->check(CLI::IsMember({"auto", "exact", "lbp"}));
    sweeppe->add_option("--out", g_out_path, "output CSV")->required();
    sweeppe->add_option("--json", swp_json, "also write the full JSON document here");

    sweeppe->callback([&] {
        if (!swp_seed_opt->count()) swp_seed = fresh_seed();
        auto backend = swp_backend == "exact" ? mltm::SweepBackend::Exact
                       : swp_backend == "lbp" ? mltm::SweepBackend::Lbp
                                              : mltm::SweepBackend::Auto;
        auto grid = make_grid(swp_min, swp_max, swp_step);
        auto rows = mltm::pe_sweep(swp_n, grid, swp_reps, swp_seed, backend);

        std::ofstream csv(g_out_path);
        if (!csv) throw mltm::ValidationError("cannot write " + g_out_path);
        csv << "p_e,mode,mean_centrality,stderr\n";
        for (const auto& row : rows)
            csv << row.p_e << "," << row.mode << "," << fmt(row.mean_centrality) << ","
                << fmt(row.std_error) << "\n";

        json config = {{"command", "sweep-pe"}, {"n", swp_n},
                       {"pe_min", swp_min},     {"pe_max", swp_max},
                       {"pe_step", swp_step},   {"replicates", swp_reps},
                       {"seed", swp_seed},      {"backend", swp_backend}};
        if (!swp_json.empty()) {
            json doc;
            doc["config"] = config;
            doc["rows"] = json::array();
            for (const auto& row : rows)
                doc["rows"].push_back({{"p_e", row.p_e},
                                       {"mode", row.mode},
                                       {"mean_centrality", row.mean_centrality},
                                       {"stderr", row.std_error},
                                       {"non_converged", row.non_converged}});
            write_json(doc, swp_json);
        }
        std::cout << "config " << config.dump() << "\n";
        std::cout << "wrote " << rows.size() << " rows to " << g_out_path << "\n";
    });

    // ---- validate ----------------------------------------------------------
    auto* validate = app.add_subcommand("validate", "check documents and report diagnostics");
    NetworkArgs val_args;
    val_args.add_to(validate, /*need_protocols=*/false, /*need_seeds=*/false);

    validate->callback([&] {
        auto net = val_args.load_net();
        int edges = 0;
        for (int k = 0; k < net.m; ++k)
            for (int i = 0; i < net.n; ++i) edges += net.out_degree(k, i);
        auto proj = mltm::project(net);
        std::cout << "network ok: n=" << net.n << ", m=" << net.m << ", " << edges
                  << " edges\n";
        std::cout << "projection: " << (mltm::is_dag(proj) ? "DAG" : "cyclic")
                  << (mltm::is_polytree(proj) ? " (polytree)" : "") << "\n";
        if (!val_args.protocols.empty()) {
            auto protocols = mltm::ProtocolSequence::from_file(val_args.protocols, net.n);
            std::cout << "protocols ok ("
                      << (protocols.is_or_and(net.m) ? "pure any/all-layers"
                                                     : "contains fractional thresholds")
                      << ")\n";
        }
        if (!val_args.seeds.empty()) {
            auto seeds = mltm::parse_seeds_file(val_args.seeds, net.n);
            std::cout << "seeds ok (" << seeds.size() << ")\n";
        }
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        emit_error_document({{"error", {{"type", "usage"}, {"message", e.what()}}}});
        return kExitUsage;
    }
    return 0;
}

}  // namespace
