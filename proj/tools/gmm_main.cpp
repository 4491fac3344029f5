#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gmm/gmm.hpp"

namespace {

namespace fs = std::filesystem;

constexpr int exit_ok = 0;
constexpr int exit_usage = 2;
constexpr int exit_data = 3;
constexpr int exit_solver = 4;
constexpr int exit_format = 5;

/// Flag combinations that cannot describe a model; reported like CLI parse
/// failures (exit 2), unlike data or solver problems.
struct usage_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::uint64_t default_seed() {
    const char* env = std::getenv("GMM_SEED");
    if (!env || !*env) return 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0') throw usage_error("GMM_SEED must be a nonnegative integer, got '" + std::string(env) + "'");
    return static_cast<std::uint64_t>(v);
}

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

// ---------------------------------------------------------------- model spec

struct spec_flags {
    std::string family;
    std::string kernel;
    double kernel_sigma = 0.0;
    bool has_kernel_sigma = false;
    std::string influence;
    double influence_param = 0.0;
    bool has_influence_param = false;
    std::string C;
    double lambda = 0.0;
    bool has_lambda = false;
    double tau = 0.0;
    bool has_tau = false;
    double memor_sigma = 0.0;
    bool has_memor_sigma = false;
};

void add_spec_flags(CLI::App* cmd, spec_flags& f, bool family_required) {
    auto* fam = cmd->add_option("--family", f.family, "model family: svm, svmm, hgmm, sgmm");
    if (family_required) fam->required();
    cmd->add_option("--kernel", f.kernel, "kernel kind: linear, rbf")->required();
    cmd->add_option("--kernel-sigma", f.kernel_sigma, "rbf kernel width")->each([&](const std::string&) {
        f.has_kernel_sigma = true;
    });
    cmd->add_option("--influence", f.influence, "memory influence kind: rbf, ball, triangular, knn, identity");
    cmd->add_option("--influence-param", f.influence_param, "influence parameter (sigma, epsilon, rho, or k)")
        ->each([&](const std::string&) { f.has_influence_param = true; });
    cmd->add_option("--C", f.C, "box bound, a positive number or 'unbounded' (hgmm only)");
    cmd->add_option("--lambda", f.lambda, "memorization tradeoff (hgmm, sgmm)")->each([&](const std::string&) {
        f.has_lambda = true;
    });
    cmd->add_option("--tau", f.tau, "memory-kernel weight (svmm)")->each([&](const std::string&) {
        f.has_tau = true;
    });
    cmd->add_option("--memor-sigma", f.memor_sigma, "memory-kernel rbf width (svmm)")->each([&](const std::string&) {
        f.has_memor_sigma = true;
    });
}

gmm::kernel_spec kernel_from_flags(const spec_flags& f) {
    gmm::kernel_spec k;
    try {
        k.kind = gmm::kernel_kind_from_string(f.kernel);
    } catch (const gmm::error& e) {
        throw usage_error(e.what());
    }
    if (k.kind == gmm::kernel_kind::rbf) {
        if (!f.has_kernel_sigma) throw usage_error("--kernel rbf requires --kernel-sigma");
        k = gmm::kernel_spec::rbf(f.kernel_sigma);
    }
    return k;
}

gmm::influence_spec influence_from_flags(const std::string& kind_name, bool has_param, double param) {
    gmm::influence_kind kind;
    try {
        kind = gmm::influence_kind_from_string(kind_name);
    } catch (const gmm::error& e) {
        throw usage_error(e.what());
    }
    switch (kind) {
        case gmm::influence_kind::rbf:
            if (!has_param) throw usage_error("--influence rbf requires --influence-param (sigma > 0)");
            return gmm::influence_spec::rbf(param);
        case gmm::influence_kind::ball:
            if (!has_param) throw usage_error("--influence ball requires --influence-param (epsilon >= 0)");
            return gmm::influence_spec::ball(param);
        case gmm::influence_kind::triangular:
            if (!has_param) throw usage_error("--influence triangular requires --influence-param (rho > 0)");
            return gmm::influence_spec::triangular(param);
        case gmm::influence_kind::knn: {
            if (!has_param) throw usage_error("--influence knn requires --influence-param (integer k >= 1)");
            const double r = std::round(param);
            if (!(param >= 1.0) || std::abs(param - r) > 1e-9)
                throw usage_error("--influence knn needs an integer k >= 1, got " + std::to_string(param));
            return gmm::influence_spec::knn(static_cast<std::size_t>(r));
        }
        case gmm::influence_kind::identity: return gmm::influence_spec::identity();
    }
    throw usage_error("unknown influence kind: " + kind_name);
}

gmm::model_spec spec_from_flags(const spec_flags& f) {
    gmm::model_family family;
    try {
        family = gmm::model_family_from_string(f.family);
    } catch (const gmm::error& e) {
        throw usage_error(e.what());
    }

    gmm::model_spec spec;
    spec.family = family;
    spec.kernel = kernel_from_flags(f);

    const bool has_C = !f.C.empty();
    const bool unbounded_C = f.C == "unbounded";
    double c_value = 0.0;
    if (has_C && !unbounded_C) {
        char* end = nullptr;
        c_value = std::strtod(f.C.c_str(), &end);
        if (end == f.C.c_str() || *end != '\0' || !(c_value > 0.0) || !std::isfinite(c_value))
            throw usage_error("--C must be a positive number or 'unbounded', got '" + f.C + "'");
    }

    switch (family) {
        case gmm::model_family::svm:
            if (!has_C || unbounded_C) throw usage_error("svm requires --C with a finite positive value");
            spec.C = c_value;
            break;
        case gmm::model_family::svm_m:
            if (!has_C || unbounded_C) throw usage_error("svmm requires --C with a finite positive value");
            if (!f.has_tau) throw usage_error("svmm requires --tau");
            if (!f.has_memor_sigma) throw usage_error("svmm requires --memor-sigma");
            spec.C = c_value;
            spec.tau = f.tau;
            spec.memory_kernel = gmm::kernel_spec::rbf(f.memor_sigma);
            break;
        case gmm::model_family::hgmm:
            if (has_C && !unbounded_C)
                throw usage_error("hgmm solves the hard program: --C must be omitted or 'unbounded'");
            if (!f.has_lambda) throw usage_error("hgmm requires --lambda");
            if (f.influence.empty()) throw usage_error("hgmm requires --influence");
            spec.C = gmm::unbounded;
            spec.lambda = f.lambda;
            spec.influence = influence_from_flags(f.influence, f.has_influence_param, f.influence_param);
            break;
        case gmm::model_family::sgmm:
            if (!has_C) throw usage_error("sgmm requires --C with a finite positive value");
            if (unbounded_C) throw usage_error("only hgmm may use --C unbounded; sgmm needs a finite box");
            if (!f.has_lambda) throw usage_error("sgmm requires --lambda");
            if (f.influence.empty()) throw usage_error("sgmm requires --influence");
            spec.C = c_value;
            spec.lambda = f.lambda;
            spec.influence = influence_from_flags(f.influence, f.has_influence_param, f.influence_param);
            break;
    }
    try {
        spec.validate();
    } catch (const gmm::error& e) {
        throw usage_error(e.what());
    }
    return spec;
}

// --------------------------------------------------------------------- grids

gmm::grid_spec load_grid(const std::string& arg) {
    gmm::grid_spec grid;
    if (arg.empty() || arg == "default") return grid;
    std::ifstream in(arg);
    if (!in) throw gmm::data_error("cannot open grid file '" + arg + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw gmm::format_error("grid file is not valid JSON: " + std::string(e.what()));
    }
    if (!j.is_object()) throw gmm::format_error("grid file must hold an object of lists");
    const auto reals = [&](const char* key, std::vector<double>& target) {
        if (!j.contains(key)) return;
        if (!j[key].is_array()) throw gmm::format_error("grid list must be an array", std::string("$.") + key);
        target.clear();
        for (const auto& v : j[key]) {
            if (!v.is_number()) throw gmm::format_error("grid entries must be numbers", std::string("$.") + key);
            target.push_back(v.get<double>());
        }
    };
    reals("C", grid.C);
    reals("lambda", grid.lambda);
    reals("tau", grid.tau);
    reals("sigma", grid.sigma);
    reals("epsilon", grid.epsilon);
    reals("rho", grid.rho);
    if (j.contains("k")) {
        if (!j["k"].is_array()) throw gmm::format_error("grid list must be an array", "$.k");
        grid.k.clear();
        for (const auto& v : j["k"]) {
            if (!v.is_number_unsigned()) throw gmm::format_error("k entries must be nonnegative integers", "$.k");
            grid.k.push_back(v.get<std::size_t>());
        }
    }
    for (const auto& [key, value] : j.items()) {
        static const std::vector<std::string> known = {"C", "lambda", "tau", "sigma", "epsilon", "rho", "k"};
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw gmm::format_error("unknown grid list '" + key + "'");
        (void)value;
    }
    grid.validate();
    return grid;
}

std::optional<gmm::influence_kind> influence_kind_for(gmm::model_family family, const std::string& name) {
    if (!gmm::uses_memory(family)) return std::nullopt;
    try {
        return gmm::influence_kind_from_string(name);
    } catch (const gmm::error& e) {
        throw usage_error(e.what());
    }
}

// ----------------------------------------------------------------- commands

struct train_cli {
    spec_flags spec;
    std::string data;
    std::string out;
    bool scale = false;
    std::string model_format = "decimal";
    double tol = 1e-3;
};

int run_train(const train_cli& args) {
    const gmm::model_spec spec = spec_from_flags(args.spec);
    const gmm::model_format fmt = [&] {
        try {
            return gmm::model_format_from_string(args.model_format);
        } catch (const gmm::error& e) {
            throw usage_error(e.what());
        }
    }();
    if (!(args.tol > 0.0)) throw usage_error("--tol must be positive");

    const gmm::dataset ds = gmm::load_csv(args.data);
    gmm::train_options opt;
    opt.tol = args.tol;
    opt.scale = args.scale;
    const gmm::trained_model model = gmm::train(spec, ds, opt);
    gmm::save_model(model, args.out, fmt);

    std::fprintf(stderr, "trained %s on %s: m=%lld objective=%.10g kkt_violation=%.3g iterations=%zu status=%s\n",
                 gmm::to_string(spec.family).c_str(), ds.name.c_str(), static_cast<long long>(ds.size()),
                 model.diagnostics.objective, model.diagnostics.kkt_violation, model.diagnostics.iterations,
                 gmm::to_string(model.diagnostics.status).c_str());
    if (model.diagnostics.degenerate_bias)
        std::fprintf(stderr, "warning: no multiplier constrained the offset; b defaulted to 0\n");
    std::fprintf(stderr, "training accuracy: %.2f%%\n", gmm::accuracy_percent(model, ds));
    std::fprintf(stderr, "model written to %s\n", args.out.c_str());
    return exit_ok;
}

struct predict_cli {
    std::string model;
    std::string data;
    bool scores = false;
};

int run_predict(const predict_cli& args) {
    const gmm::trained_model model = gmm::load_model(args.model);

    {
        std::ifstream probe(args.data);
        if (!probe) throw gmm::data_error("cannot open '" + args.data + "'");
        std::string text((std::istreambuf_iterator<char>(probe)), std::istreambuf_iterator<char>());
        if (text.find_first_not_of(" \t\r\n") == std::string::npos) return exit_ok;  // no samples, no lines
    }

    const gmm::dataset ds = gmm::load_csv(args.data);
    Eigen::VectorXd g;
    try {
        g = gmm::decision_values(model, ds.X);
    } catch (const gmm::domain_error& e) {
        throw gmm::data_error(e.what());  // shape mismatch between file and model is a data problem
    }
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        const int label = g(i) >= 0.0 ? 1 : -1;
        if (args.scores)
            std::printf("%d %.12g\n", label, g(i));
        else
            std::printf("%d\n", label);
    }
    return exit_ok;
}

struct experiment_cli {
    std::string data;
    std::string families = "svm,svmm,hgmm,sgmm";
    std::string family;  // `grid` works on a single family
    spec_flags spec;     // kernel/influence kind flags reused by experiments
    std::string grid = "default";
    std::string out;
    std::string out_dir = ".";
    std::string sizes;
    std::string fractions = "0,0.05,0.10,0.15";
    std::size_t train_size = 500;
    std::size_t reps = 20;
    std::uint64_t seed = 0;
    bool seed_given = false;
    unsigned jobs = 0;
    bool scale = false;
    double tol = 1e-3;
    // toy knobs
    std::size_t per_cluster = 30;
    std::size_t steps = 41;
    double toy_lambda = 1.0;
    double toy_sgmm_lambda = 4.0;
    double toy_sgmm_C = 0.5;
    double toy_influence_sigma = 1.0;
};

gmm::eval_options eval_options_from(const experiment_cli& args) {
    gmm::eval_options opt;
    opt.tol = args.tol;
    opt.scale = args.scale;
    opt.jobs = args.jobs;
    if (!(opt.tol > 0.0)) throw usage_error("--tol must be positive");
    return opt;
}

std::uint64_t seed_from(const experiment_cli& args) { return args.seed_given ? args.seed : default_seed(); }

std::vector<gmm::model_family> families_from(const std::string& csv) {
    std::vector<gmm::model_family> out;
    for (const std::string& name : split_list(csv)) {
        try {
            out.push_back(gmm::model_family_from_string(name));
        } catch (const gmm::error& e) {
            throw usage_error(e.what());
        }
    }
    if (out.empty()) throw usage_error("--families must name at least one family");
    return out;
}

std::vector<gmm::model_spec> candidates_for(gmm::model_family family, const experiment_cli& args,
                                            const gmm::grid_spec& grid) {
    gmm::kernel_kind kernel;  // widths come from the grid, so only the kind is read here
    try {
        kernel = gmm::kernel_kind_from_string(args.spec.kernel);
    } catch (const gmm::error& e) {
        throw usage_error(e.what());
    }
    std::optional<gmm::influence_kind> inf;
    if (gmm::uses_memory(family)) {
        const std::string kind = args.spec.influence.empty() ? "rbf" : args.spec.influence;
        inf = influence_kind_for(family, kind);
    }
    return gmm::enumerate_grid(family, kernel, inf, grid);
}

void emit_rows(const std::vector<gmm::result_row>& rows, const std::string& out) {
    std::fputs(gmm::format_table_text(rows).c_str(), stdout);
    if (!out.empty()) {
        gmm::write_table_csv(out, rows);
        std::fprintf(stderr, "results written to %s\n", out.c_str());
    }
}

int run_loo(const experiment_cli& args) {
    const gmm::dataset ds = gmm::load_csv(args.data);
    const gmm::grid_spec grid = load_grid(args.grid);
    const gmm::eval_options opt = eval_options_from(args);
    std::vector<gmm::result_row> rows;
    for (const gmm::model_family family : families_from(args.families)) {
        const auto candidates = candidates_for(family, args, grid);
        std::fprintf(stderr, "leave-one-out over %zu %s candidates on %s (m=%lld)\n", candidates.size(),
                     gmm::to_string(family).c_str(), ds.name.c_str(), static_cast<long long>(ds.size()));
        rows.push_back(gmm::grid_search(candidates, ds, gmm::grid_protocol::loo(), opt).best_row);
    }
    emit_rows(rows, args.out);
    return exit_ok;
}

int run_grid(const experiment_cli& args) {
    if (args.family.empty()) throw usage_error("experiment grid requires --family");
    const gmm::dataset ds = gmm::load_csv(args.data);
    const gmm::grid_spec grid = load_grid(args.grid);
    const gmm::eval_options opt = eval_options_from(args);
    gmm::model_family family;
    try {
        family = gmm::model_family_from_string(args.family);
    } catch (const gmm::error& e) {
        throw usage_error(e.what());
    }
    const auto candidates = candidates_for(family, args, grid);
    std::fprintf(stderr, "grid of %zu %s candidates on %s (m=%lld), leave-one-out\n", candidates.size(),
                 gmm::to_string(family).c_str(), ds.name.c_str(), static_cast<long long>(ds.size()));
    const gmm::grid_result res = gmm::grid_search(candidates, ds, gmm::grid_protocol::loo(), opt);
    emit_rows(res.table, args.out);
    std::fprintf(stderr, "best: %s %s\n", gmm::to_string(res.best.family).c_str(),
                 gmm::param_string(res.best).c_str());
    return exit_ok;
}

int run_subsample(const experiment_cli& args) {
    if (args.sizes.empty()) throw usage_error("experiment subsample requires --sizes (e.g. --sizes 10,20,50)");
    std::vector<std::size_t> sizes;
    for (const std::string& tok : split_list(args.sizes)) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(tok.c_str(), &end, 10);
        if (end == tok.c_str() || *end != '\0') throw usage_error("--sizes entries must be integers, got '" + tok + "'");
        sizes.push_back(static_cast<std::size_t>(v));
    }
    const gmm::dataset ds = gmm::load_csv(args.data);
    const gmm::grid_spec grid = load_grid(args.grid);
    const gmm::eval_options opt = eval_options_from(args);
    const std::uint64_t seed = seed_from(args);

    std::vector<std::vector<gmm::result_row>> per_family;
    const auto families = families_from(args.families);
    for (const gmm::model_family family : families) {
        std::fprintf(stderr, "subsample protocol for %s: sizes=%s reps=%zu seed=%llu\n",
                     gmm::to_string(family).c_str(), args.sizes.c_str(), args.reps,
                     static_cast<unsigned long long>(seed));
        per_family.push_back(
            gmm::subsample_experiment(candidates_for(family, args, grid), ds, sizes, args.reps, seed, opt));
    }
    std::vector<gmm::result_row> rows;
    for (std::size_t s = 0; s < sizes.size(); ++s)
        for (std::size_t f = 0; f < families.size(); ++f) rows.push_back(per_family[f][s]);
    emit_rows(rows, args.out);
    return exit_ok;
}

int run_noise(const experiment_cli& args) {
    std::vector<double> fractions;
    for (const std::string& tok : split_list(args.fractions)) {
        char* end = nullptr;
        const double v = std::strtod(tok.c_str(), &end);
        if (end == tok.c_str() || *end != '\0') throw usage_error("--fractions entries must be numbers, got '" + tok + "'");
        fractions.push_back(v);
    }
    if (fractions.empty()) throw usage_error("--fractions must name at least one fraction");
    const gmm::dataset ds = gmm::load_csv(args.data);
    const gmm::grid_spec grid = load_grid(args.grid);
    const gmm::eval_options opt = eval_options_from(args);
    const std::uint64_t seed = seed_from(args);

    std::vector<std::vector<gmm::result_row>> per_family;
    const auto families = families_from(args.families);
    for (const gmm::model_family family : families) {
        std::fprintf(stderr, "noise protocol for %s: fractions=%s train_size=%zu reps=%zu seed=%llu\n",
                     gmm::to_string(family).c_str(), args.fractions.c_str(), args.train_size, args.reps,
                     static_cast<unsigned long long>(seed));
        per_family.push_back(gmm::noise_experiment(candidates_for(family, args, grid), ds, fractions,
                                                   args.train_size, args.reps, seed, opt));
    }
    std::vector<gmm::result_row> rows;
    for (std::size_t fi = 0; fi < fractions.size(); ++fi)
        for (std::size_t f = 0; f < families.size(); ++f) rows.push_back(per_family[f][fi]);
    emit_rows(rows, args.out);
    return exit_ok;
}

int run_toy(const experiment_cli& args) {
    const std::uint64_t seed = seed_from(args);
    const gmm::dataset toy = gmm::make_toy_dataset(seed, args.per_cluster);
    const Eigen::Index embedded = gmm::toy_embedded_index(toy);

    gmm::model_spec hard;
    hard.family = gmm::model_family::hgmm;
    hard.kernel = gmm::kernel_spec::linear();
    hard.influence = gmm::influence_spec::rbf(args.toy_influence_sigma);
    hard.lambda = args.toy_lambda;

    gmm::model_spec soft;
    soft.family = gmm::model_family::sgmm;
    soft.kernel = gmm::kernel_spec::linear();
    soft.influence = gmm::influence_spec::rbf(args.toy_influence_sigma);
    soft.lambda = args.toy_sgmm_lambda;
    soft.C = args.toy_sgmm_C;

    gmm::train_options opt;
    opt.tol = args.tol;
    const gmm::trained_model hard_model = gmm::train(hard, toy, opt);
    const gmm::trained_model soft_model = gmm::train(soft, toy, opt);

    const fs::path dir(args.out_dir);
    fs::create_directories(dir);
    const fs::path hard_csv = dir / "toy_hgmm_grid.csv";
    const fs::path soft_csv = dir / "toy_sgmm_grid.csv";
    gmm::write_decision_grid_csv(hard_csv, hard_model, -4.0, 4.0, -3.0, 3.0, args.steps);
    gmm::write_decision_grid_csv(soft_csv, soft_model, -4.0, 4.0, -3.0, 3.0, args.steps);

    const int hard_label = gmm::predict(hard_model, toy.X.row(embedded))(0);
    const int soft_label = gmm::predict(soft_model, toy.X.row(embedded))(0);
    std::printf("toy dataset: m=%lld, seed=%llu, embedded positive at (%.1f, %.1f)\n",
                static_cast<long long>(toy.size()), static_cast<unsigned long long>(seed), toy.X(embedded, 0),
                toy.X(embedded, 1));
    std::printf("hgmm train accuracy: %.2f%%, embedded point predicted %+d\n",
                gmm::accuracy_percent(hard_model, toy), hard_label);
    std::printf("sgmm train accuracy: %.2f%%, embedded point predicted %+d\n",
                gmm::accuracy_percent(soft_model, toy), soft_label);
    std::fprintf(stderr, "decision grids written to %s and %s\n", hard_csv.string().c_str(),
                 soft_csv.string().c_str());
    return exit_ok;
}

int dispatch(const std::function<int()>& body) {
    try {
        return body();
    } catch (const usage_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_usage;
    } catch (const gmm::format_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_format;
    } catch (const gmm::curvature_error& e) {
        std::fprintf(stderr, "solver error: %s\n", e.what());
        return exit_solver;
    } catch (const gmm::infeasible_error& e) {
        std::fprintf(stderr, "solver error: %s\n", e.what());
        return exit_solver;
    } catch (const gmm::oracle_error& e) {
        std::fprintf(stderr, "solver error: %s\n", e.what());
        return exit_solver;
    } catch (const gmm::parse_error& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return exit_data;
    } catch (const gmm::label_error& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return exit_data;
    } catch (const gmm::capacity_error& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return exit_data;
    } catch (const gmm::data_error& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return exit_data;
    } catch (const gmm::domain_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_usage;
    } catch (const gmm::spec_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_usage;
    } catch (const gmm::error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "unexpected error: %s\n", e.what());
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"kernel classifiers with memory: training, prediction, and benchmark protocols"};
    app.require_subcommand(1);

    train_cli train_args;
    auto* train_cmd = app.add_subcommand("train", "fit a model and write it to disk");
    add_spec_flags(train_cmd, train_args.spec, true);
    train_cmd->add_option("--data", train_args.data, "training CSV (label first)")->required();
    train_cmd->add_option("--out", train_args.out, "output model file")->required();
    train_cmd->add_flag("--scale", train_args.scale, "min-max scale features to [0,1]");
    train_cmd->add_option("--model-format", train_args.model_format, "number encoding: decimal or exact");
    train_cmd->add_option("--tol", train_args.tol, "solver tolerance");

    predict_cli predict_args;
    auto* predict_cmd = app.add_subcommand("predict", "label samples with a trained model");
    predict_cmd->add_option("--model", predict_args.model, "model file")->required();
    predict_cmd->add_option("--data", predict_args.data, "samples CSV (same layout as training data)")->required();
    predict_cmd->add_flag("--scores", predict_args.scores, "also print g(x) to 12 significant digits");

    experiment_cli exp_args;
    auto* exp_cmd = app.add_subcommand("experiment", "benchmark protocols");
    exp_cmd->require_subcommand(1);

    const auto add_common = [&](CLI::App* cmd, bool needs_data) {
        if (needs_data) cmd->add_option("--data", exp_args.data, "dataset CSV")->required();
        cmd->add_option("--grid", exp_args.grid, "'default' or a JSON file overriding grid lists");
        cmd->add_option("--out", exp_args.out, "write the result table as CSV here");
        cmd->add_option("--jobs", exp_args.jobs, "parallel workers (0 = logical cores)");
        cmd->add_option("--seed", exp_args.seed, "base seed (default: GMM_SEED or 0)")->each([&](const std::string&) {
            exp_args.seed_given = true;
        });
        cmd->add_flag("--scale", exp_args.scale, "min-max scale features per training set");
        cmd->add_option("--tol", exp_args.tol, "solver tolerance");
    };

    auto* loo_cmd = exp_cmd->add_subcommand("loo", "leave-one-out grid search, best row per family");
    add_common(loo_cmd, true);
    loo_cmd->add_option("--families,--family", exp_args.families, "comma list of families");
    loo_cmd->add_option("--kernel", exp_args.spec.kernel, "kernel kind: linear, rbf")->required();
    loo_cmd->add_option("--influence", exp_args.spec.influence, "influence kind for memory families (default rbf)");

    auto* grid_cmd = exp_cmd->add_subcommand("grid", "full leave-one-out table for one family");
    add_common(grid_cmd, true);
    grid_cmd->add_option("--family", exp_args.family, "model family")->required();
    grid_cmd->add_option("--kernel", exp_args.spec.kernel, "kernel kind: linear, rbf")->required();
    grid_cmd->add_option("--influence", exp_args.spec.influence, "influence kind for memory families (default rbf)");

    auto* sub_cmd = exp_cmd->add_subcommand("subsample", "stratified subsampling protocol");
    add_common(sub_cmd, true);
    sub_cmd->add_option("--families,--family", exp_args.families, "comma list of families");
    sub_cmd->add_option("--kernel", exp_args.spec.kernel, "kernel kind: linear, rbf")->required();
    sub_cmd->add_option("--influence", exp_args.spec.influence, "influence kind for memory families (default rbf)");
    sub_cmd->add_option("--sizes", exp_args.sizes, "comma list of training sizes (per split)")->required();
    sub_cmd->add_option("--reps", exp_args.reps, "repetitions per size");

    auto* noise_cmd = exp_cmd->add_subcommand("noise", "label-noise protocol on stratified subsamples");
    add_common(noise_cmd, true);
    noise_cmd->add_option("--families,--family", exp_args.families, "comma list of families");
    noise_cmd->add_option("--kernel", exp_args.spec.kernel, "kernel kind: linear, rbf")->required();
    noise_cmd->add_option("--influence", exp_args.spec.influence, "influence kind for memory families (default rbf)");
    noise_cmd->add_option("--fractions", exp_args.fractions, "comma list of label-noise fractions");
    noise_cmd->add_option("--train-size", exp_args.train_size, "training samples per split");
    noise_cmd->add_option("--reps", exp_args.reps, "repetitions per fraction");

    auto* toy_cmd = exp_cmd->add_subcommand("toy", "embedded-point demonstration with decision grids");
    add_common(toy_cmd, false);
    toy_cmd->add_option("--out-dir", exp_args.out_dir, "directory for the decision-grid CSVs");
    toy_cmd->add_option("--per-cluster", exp_args.per_cluster, "samples per cluster");
    toy_cmd->add_option("--steps", exp_args.steps, "lattice steps per axis");
    toy_cmd->add_option("--lambda", exp_args.toy_lambda, "hgmm memorization tradeoff");
    toy_cmd->add_option("--sgmm-lambda", exp_args.toy_sgmm_lambda, "sgmm memorization tradeoff");
    toy_cmd->add_option("--sgmm-C", exp_args.toy_sgmm_C, "sgmm box bound");
    toy_cmd->add_option("--influence-sigma", exp_args.toy_influence_sigma, "rbf influence width");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_usage;
    }

    if (train_cmd->parsed()) return dispatch([&] { return run_train(train_args); });
    if (predict_cmd->parsed()) return dispatch([&] { return run_predict(predict_args); });
    if (loo_cmd->parsed()) return dispatch([&] { return run_loo(exp_args); });
    if (grid_cmd->parsed()) return dispatch([&] { return run_grid(exp_args); });
    if (sub_cmd->parsed()) return dispatch([&] { return run_subsample(exp_args); });
    if (noise_cmd->parsed()) return dispatch([&] { return run_noise(exp_args); });
    if (toy_cmd->parsed()) return dispatch([&] { return run_toy(exp_args); });
    return exit_usage;
}
