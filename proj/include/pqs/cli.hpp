#pragma once

// Command-line front end: `fit`, `select` and `bench`.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pqs/criterion.hpp"
#include "pqs/error.hpp"
#include "pqs/fitter.hpp"
#include "pqs/io.hpp"
#include "pqs/simbench.hpp"

namespace pqs::cli {

inline constexpr const char* kVersion = "0.1.0";

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// configuration files

/// Reads fields of one JSON object, rejecting wrong types and unknown keys.
class ObjectReader {
public:
    ObjectReader(const json& object, std::string path) : object_(object), path_(std::move(path)) {
        if (!object_.is_object()) fail(path_, "expected an object");
    }

    [[noreturn]] static void fail(const std::string& where, const std::string& what) {
        throw Error(ErrorKind::invalid_argument, "config error at " + where + ": " + what);
    }

    std::string at(const std::string& key) const { return path_ + "." + key; }

    const json* find(const std::string& key) {
        seen_.push_back(key);
        const auto it = object_.find(key);
        return it == object_.end() ? nullptr : &*it;
    }

    void read(const std::string& key, double& out) {
        if (const json* v = find(key)) {
            if (!v->is_number()) fail(at(key), "expected a number");
            out = v->get<double>();
        }
    }
    void read(const std::string& key, std::optional<double>& out) {
        double v = 0.0;
        if (object_.contains(key)) {
            read(key, v);
            out = v;
        } else {
            seen_.push_back(key);
        }
    }
    template <std::integral T>
    void read(const std::string& key, T& out) {
        if (const json* v = find(key)) {
            if constexpr (std::is_same_v<T, bool>) {
                if (!v->is_boolean()) fail(at(key), "expected true or false");
                out = v->get<bool>();
            } else if constexpr (std::is_unsigned_v<T>) {
                if (!v->is_number_unsigned()) fail(at(key), "expected a nonnegative integer");
                out = v->get<T>();
            } else {
                if (!v->is_number_integer()) fail(at(key), "expected an integer");
                out = static_cast<T>(v->get<std::int64_t>());
            }
        }
    }
    void read(const std::string& key, std::string& out) {
        if (const json* v = find(key)) {
            if (!v->is_string()) fail(at(key), "expected a string");
            out = v->get<std::string>();
        }
    }

    /// Call after all reads: any key not asked for is an error.
    void finish() const {
        for (const auto& [key, value] : object_.items())
            if (std::find(seen_.begin(), seen_.end(), key) == seen_.end()) fail(at(key), "unknown field");
    }

private:
    const json& object_;
    std::string path_;
    std::vector<std::string> seen_;
};

template <class Fn>
auto rethrow_at(const std::string& where, Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        if (std::string(e.what()).rfind("config error", 0) == 0) throw;
        ObjectReader::fail(where, e.what());
    }
}

inline json penalty_to_json(const PenaltyShape& shape) {
    json j{{"kind", std::string(to_string(shape.kind))}};
    if (shape.kind == PenaltyKind::bridge)
        j["q"] = shape.q;
    else
        j["r"] = shape.r;
    return j;
}

inline double default_r(PenaltyKind kind) { return kind == PenaltyKind::scad ? 2.7 : 3.0; }

inline PenaltyShape make_shape(const std::string& name, std::optional<double> q, std::optional<double> r) {
    PenaltyShape shape;
    shape.kind = penalty_kind_from_name(name);
    shape.q = shape.kind == PenaltyKind::bridge ? q.value_or(1.0) : 1.0;
    shape.r = r.value_or(default_r(shape.kind));
    shape.validate();
    return shape;
}

inline PenaltyShape penalty_from_json(const json& j, const std::string& path) {
    if (j.is_string()) return rethrow_at(path, [&] { return make_shape(j.get<std::string>(), {}, {}); });
    ObjectReader reader(j, path);
    std::string kind;
    std::optional<double> q, r;
    reader.read("kind", kind);
    reader.read("q", q);
    reader.read("r", r);
    reader.finish();
    if (kind.empty()) ObjectReader::fail(path + ".kind", "missing");
    return rethrow_at(path, [&] { return make_shape(kind, q, r); });
}

inline json fit_config_to_json(const FitConfig& c) {
    return {{"max_outer_iters", c.max_outer_iters},
            {"max_inner_iters", c.max_inner_iters},
            {"tol", c.tol},
            {"zero_threshold", c.zero_threshold},
            {"max_halvings", c.max_halvings}};
}

inline void read_fit_config(const json& j, const std::string& path, FitConfig& c) {
    ObjectReader reader(j, path);
    reader.read("max_outer_iters", c.max_outer_iters);
    reader.read("max_inner_iters", c.max_inner_iters);
    reader.read("tol", c.tol);
    reader.read("zero_threshold", c.zero_threshold);
    reader.read("max_halvings", c.max_halvings);
    reader.finish();
    rethrow_at(path, [&] {
        c.validate();
        return 0;
    });
}

/// Regression coefficients of the two standard cases for each model.
inline std::pair<double, double> case_betas(FamilyKind model, int case_id) {
    if (model == FamilyKind::gaussian_linear) return case_id == 1 ? std::pair{0.1, 0.5} : std::pair{0.2, 1.0};
    return case_id == 1 ? std::pair{0.5, 1.5} : std::pair{1.0, 2.0};
}

/// Layered settings for `bench`; betas stay unset until resolved from the case.
struct BenchSettings {
    SimulationConfig config;
    std::optional<double> beta1, beta2;

    SimulationConfig resolve() const {
        SimulationConfig c = config;
        if (c.case_id == 1 || c.case_id == 2) {
            const auto [b1, b2] = case_betas(c.model.kind(), c.case_id);
            c.beta1 = beta1.value_or(b1);
            c.beta2 = beta2.value_or(b2);
            if (c.beta1 != b1 || c.beta2 != b2) c.case_id = 0;
        } else if (c.case_id == 0) {
            if (!beta1 || !beta2) throw Error(ErrorKind::invalid_argument, "case 0 needs both beta1 and beta2");
            c.beta1 = *beta1;
            c.beta2 = *beta2;
        } else {
            throw Error(ErrorKind::invalid_argument, "case must be 0, 1 or 2");
        }
        c.validate();
        return c;
    }
};

inline json simulation_to_json(const SimulationConfig& c) {
    json selectors = json::array();
    for (Selector s : c.selectors) selectors.push_back(std::string(to_string(s)));
    return {{"model", c.model.name()},
            {"penalty", penalty_to_json(c.penalty)},
            {"case", c.case_id},
            {"beta1", c.beta1},
            {"beta2", c.beta2},
            {"design", {{"p", c.design.p}, {"k", c.design.k}, {"n", c.design.n}}},
            {"reps", c.reps},
            {"kl_copies", c.kl_copies},
            {"selectors", selectors},
            {"seed", c.seed},
            {"mc_samples", c.mc_samples},
            {"folds", c.folds},
            {"grid_size", c.grid_size},
            {"grid_ratio", c.grid_ratio},
            {"fixed_x_kl", c.fixed_x_kl},
            {"threads", c.threads},
            {"fit", fit_config_to_json(c.fit)}};
}

/// Applies a simulation config object (or a run manifest wrapping one) on
/// top of `settings`.
inline void apply_simulation_json(const json& root, BenchSettings& settings) {
    const bool manifest = root.is_object() && root.contains("config") && root.contains("rng");
    const json& j = manifest ? root.at("config") : root;
    const std::string base = manifest ? "config" : "$";
    ObjectReader reader(j, base);
    auto& c = settings.config;

    std::string model;
    reader.read("model", model);
    if (!model.empty()) c.model = rethrow_at(reader.at("model"), [&] { return family_from_name(model); });
    if (const json* pen = reader.find("penalty")) c.penalty = penalty_from_json(*pen, reader.at("penalty"));
    reader.read("case", c.case_id);
    reader.read("beta1", settings.beta1);
    reader.read("beta2", settings.beta2);
    if (const json* design = reader.find("design")) {
        ObjectReader d(*design, reader.at("design"));
        d.read("p", c.design.p);
        d.read("k", c.design.k);
        d.read("n", c.design.n);
        d.finish();
    }
    reader.read("reps", c.reps);
    reader.read("kl_copies", c.kl_copies);
    if (const json* sel = reader.find("selectors")) {
        if (!sel->is_array()) ObjectReader::fail(reader.at("selectors"), "expected an array of strings");
        c.selectors.clear();
        for (std::size_t i = 0; i < sel->size(); ++i) {
            const std::string where = reader.at("selectors") + "[" + std::to_string(i) + "]";
            if (!(*sel)[i].is_string()) ObjectReader::fail(where, "expected a string");
            c.selectors.push_back(rethrow_at(where, [&] { return selector_from_name((*sel)[i].get<std::string>()); }));
        }
    }
    reader.read("seed", c.seed);
    reader.read("mc_samples", c.mc_samples);
    reader.read("folds", c.folds);
    reader.read("grid_size", c.grid_size);
    reader.read("grid_ratio", c.grid_ratio);
    reader.read("fixed_x_kl", c.fixed_x_kl);
    reader.read("threads", c.threads);
    if (const json* fit = reader.find("fit")) read_fit_config(*fit, reader.at("fit"), c.fit);
    reader.finish();
}

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open config file '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::invalid_argument, "config file '" + path + "' is not valid JSON: " + e.what());
    }
}

// ---------------------------------------------------------------------------
// presets

struct NamedDesign {
    const char* label;
    Design design;
};

inline const std::vector<NamedDesign>& standard_designs() {
    static const std::vector<NamedDesign> designs{
        {"n50", {8, 2, 50}},         {"n100", {8, 2, 100}},       {"n150", {8, 2, 150}},
        {"p8k1n100", {8, 1, 100}},   {"p8k3n100", {8, 3, 100}},   {"p12k3n100", {12, 3, 100}},
        {"p16k4n100", {16, 4, 100}},
    };
    return designs;
}

/// Penalty of each results table: bridge q = 0.2, SCAD, MCP.
inline PenaltyShape table_penalty(int table) {
    switch (table) {
    case 1: return {PenaltyKind::bridge, 0.2, 3.0};
    case 2: return {PenaltyKind::scad, 1.0, default_r(PenaltyKind::scad)};
    default: return {PenaltyKind::mcp, 1.0, default_r(PenaltyKind::mcp)};
    }
}

inline std::vector<std::string> preset_names() {
    std::vector<std::string> names;
    for (int table = 1; table <= 3; ++table)
        for (const char* model : {"linear", "logistic"})
            for (int case_id = 1; case_id <= 2; ++case_id)
                for (const auto& d : standard_designs())
                    names.push_back("table" + std::to_string(table) + "-" + model + "-case" + std::to_string(case_id) +
                                    "-" + d.label);
    return names;
}

inline std::optional<BenchSettings> find_preset(const std::string& name) {
    for (int table = 1; table <= 3; ++table)
        for (const char* model : {"linear", "logistic"})
            for (int case_id = 1; case_id <= 2; ++case_id)
                for (const auto& d : standard_designs()) {
                    const std::string candidate = "table" + std::to_string(table) + "-" + model + "-case" +
                                                  std::to_string(case_id) + "-" + d.label;
                    if (candidate != name) continue;
                    BenchSettings s;
                    s.config.model = family_from_name(model);
                    s.config.penalty = table_penalty(table);
                    s.config.case_id = case_id;
                    s.config.design = d.design;
                    return s;
                }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// output

inline std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline json make_manifest(const std::string& command, const json& config, const json& seed,
                          const std::vector<std::string>& outputs) {
    return {{"tool", "pqs"},   {"version", kVersion},   {"command", command},
            {"config", config}, {"seed", seed},        {"rng", kRngAlgorithm},
            {"timestamp", utc_timestamp()}, {"outputs", outputs}};
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::io, "cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw Error(ErrorKind::io, "failed writing '" + path.string() + "'");
}

inline void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

inline void ensure_directory(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::io, "cannot create directory '" + dir.string() + "': " + ec.message());
}

inline json fit_to_json(const FitResult& fit, const std::vector<std::string>& columns) {
    json coefficients = json::array();
    for (Eigen::Index j = 0; j < fit.beta_hat.size(); ++j) coefficients.push_back(fit.beta_hat[j]);
    json active = json::array();
    for (auto j : fit.active.active) active.push_back(j);
    return {{"lambda", fit.lambda},         {"columns", columns},       {"coefficients", coefficients},
            {"active", active},             {"objective", fit.objective}, {"loglik", fit.loglik},
            {"iterations", fit.iterations}, {"converged", fit.converged}};
}

// ---------------------------------------------------------------------------
// seeds

inline std::uint64_t parse_seed(const std::string& text, const std::string& source) {
    std::uint64_t value = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || res.ec != std::errc{} || res.ptr != text.data() + text.size())
        throw Error(ErrorKind::invalid_argument, source + " must be a nonnegative integer, got '" + text + "'");
    return value;
}

/// --seed, else PQS_SEED, else `fallback`.
inline std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, std::uint64_t fallback) {
    if (flag) return *flag;
    if (const char* env = std::getenv("PQS_SEED")) return parse_seed(env, "PQS_SEED");
    return fallback;
}

// ---------------------------------------------------------------------------
// subcommands

struct ModelArgs {
    std::string model = "linear";
    std::string penalty = "scad";
    std::optional<double> q, r;

    void add_to(CLI::App& app) {
        app.add_option("--model", model, "linear or logistic")->capture_default_str();
        app.add_option("--penalty", penalty, "bridge, scad or mcp")->capture_default_str();
        app.add_option("--q", q, "bridge exponent in (0,1] (default 1)");
        app.add_option("--r", r, "SCAD/MCP shape, > 1 (default 2.7 for scad, 3 for mcp)");
    }
};

struct FitArgs {
    ModelArgs model;
    std::optional<double> lambda;
    std::string data;
    std::string out;
};

struct SelectArgs {
    ModelArgs model;
    std::vector<double> lambda_grid;
    int grid_size = 50;
    std::string selector = "aic";
    int folds = 5;
    int mc_samples = 1000;
    std::optional<std::uint64_t> seed;
    std::string data;
    std::string out;
};

struct BenchArgs {
    std::optional<std::string> preset;
    std::optional<std::string> config;
    std::optional<std::string> model, penalty;
    std::optional<double> q, r, beta1, beta2;
    std::optional<int> case_id, reps, kl_copies, mc_samples, folds, threads, grid_size;
    std::optional<Eigen::Index> p, k, n;
    std::vector<std::string> selectors;
    std::optional<std::uint64_t> seed;
    bool fixed_x = false;
    bool list_presets = false;
    std::string out;
};

struct Resolved {
    Family family = Family::gaussian();
    PenaltyShape shape;
};

inline Resolved resolve_model(const ModelArgs& args) {
    Resolved r;
    r.family = family_from_name(args.model);
    r.shape = make_shape(args.penalty, args.q, args.r);
    return r;
}

inline Dataset load_dataset(const std::string& path, Family family, std::vector<std::string>& columns) {
    auto table = io::read_csv_file(path);
    columns = table.columns;
    try {
        return Dataset(std::move(table.X), std::move(table.y), family);
    } catch (const Error& e) {
        throw Error(ErrorKind::io, path + ": " + e.what());
    }
}

inline int cmd_fit(const FitArgs& args, std::ostream& out) {
    const Resolved m = resolve_model(args.model);
    if (!args.lambda) throw Error(ErrorKind::invalid_argument, "--lambda is required");
    const PenaltySpec penalty(m.shape, *args.lambda);
    std::vector<std::string> columns;
    const Dataset data = load_dataset(args.data, m.family, columns);

    const FitResult res = fit(m.family, data, penalty);
    json doc = fit_to_json(res, columns);
    doc["model"] = m.family.name();
    doc["penalty"] = penalty_to_json(m.shape);
    doc["n"] = data.n();
    doc["p"] = data.p();

    if (args.out.empty()) {
        out << doc.dump(2) << "\n";
        return 0;
    }
    const std::filesystem::path path(args.out);
    if (path.has_parent_path()) ensure_directory(path.parent_path());
    write_json(path, doc);
    const json config{{"model", m.family.name()}, {"penalty", penalty_to_json(m.shape)},
                      {"lambda", *args.lambda},   {"data", args.data},
                      {"fit", fit_config_to_json(FitConfig{})}};
    std::filesystem::path manifest = path;
    manifest.replace_extension(".manifest.json");
    write_json(manifest, make_manifest("fit", config, nullptr, {path.filename().string()}));
    return 0;
}

inline int cmd_select(const SelectArgs& args, std::ostream& out) {
    const Resolved m = resolve_model(args.model);
    const Selector selector = selector_from_name(args.selector);
    const std::uint64_t seed = resolve_seed(args.seed, 1);
    if (args.mc_samples < 2) throw Error(ErrorKind::invalid_argument, "mc-samples must be at least 2");
    if (args.grid_size < 1) throw Error(ErrorKind::invalid_argument, "grid-size must be at least 1");
    if (args.out.empty()) throw Error(ErrorKind::invalid_argument, "--out directory is required");
    std::vector<std::string> columns;
    const Dataset data = load_dataset(args.data, m.family, columns);

    std::vector<double> grid = args.lambda_grid;
    if (grid.empty()) {
        grid = default_lambda_grid(m.family, data, args.grid_size);
    } else {
        for (double l : grid)
            if (!(l >= 0.0)) throw Error(ErrorKind::invalid_argument, "lambda must be nonnegative");
        std::sort(grid.begin(), grid.end(), std::greater<>());
        grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    }

    const auto path = fit_path(m.family, data, m.shape, grid);
    const RngStream root(seed);

    std::ostringstream table;
    io::CsvWriter csv(table);
    for (const char* h : {"lambda", "loglik", "active_count", "k_hat", "k_hat_stderr", "score"}) csv.field(h);
    if (selector == Selector::cv) csv.field("cv_deviance");
    csv.end_row();

    std::vector<std::pair<double, double>> scored;
    if (selector == Selector::aic) {
        for (const auto& r : aic_path(path, m.family, data, m.shape, args.mc_samples, root.split(2))) {
            csv.field(r.lambda).field(r.loglik).field(r.active_count).field(r.k_hat).field(r.k_hat_stderr).field(r.aic);
            csv.end_row();
            scored.emplace_back(r.lambda, r.aic);
        }
    } else {
        RngStream fold_rng = root.split(3);
        const auto folds = make_folds(data.n(), args.folds, fold_rng);
        const auto cv = cross_validate_path(m.family, data, m.shape, grid, folds);
        for (std::size_t k = 0; k < cv.size(); ++k) {
            csv.field(cv[k].lambda).field(path[k].loglik).field(path[k].active_count());
            csv.field(0.0).field(0.0).field(cv[k].deviance).field(cv[k].deviance);
            csv.end_row();
            scored.emplace_back(cv[k].lambda, cv[k].deviance);
        }
    }

    const double lambda_hat = select_lambda(scored);
    const auto chosen = std::find_if(path.begin(), path.end(), [&](const FitResult& f) { return f.lambda == lambda_hat; });
    const auto score = std::find_if(scored.begin(), scored.end(), [&](const auto& s) { return s.first == lambda_hat; });

    const std::filesystem::path dir(args.out);
    ensure_directory(dir);
    write_text(dir / "lambda_table.csv", table.str());
    json selection{{"selector", std::string(to_string(selector))},
                   {"lambda_hat", lambda_hat},
                   {"score", score->second},
                   {"model", m.family.name()},
                   {"penalty", penalty_to_json(m.shape)},
                   {"fit", fit_to_json(*chosen, columns)}};
    write_json(dir / "selection.json", selection);

    json config{{"model", m.family.name()},
                {"penalty", penalty_to_json(m.shape)},
                {"selector", std::string(to_string(selector))},
                {"lambda_grid", grid},
                {"folds", args.folds},
                {"mc_samples", args.mc_samples},
                {"data", args.data},
                {"fit", fit_config_to_json(FitConfig{})}};
    write_json(dir / "manifest.json", make_manifest("select", config, seed, {"lambda_table.csv", "selection.json"}));
    out << "selected lambda " << io::format_double(lambda_hat) << " (" << to_string(selector) << " score "
        << io::format_double(score->second) << ", " << chosen->active_count() << " active)\n";
    return 0;
}

inline SimulationConfig resolve_bench(const BenchArgs& args) {
    BenchSettings s;
    s.config.penalty = make_shape("scad", {}, {});  // same default as fit and select
    if (args.preset) {
        auto preset = find_preset(*args.preset);
        if (!preset) {
            std::string msg = "unknown preset '" + *args.preset + "'; available presets:";
            for (const auto& name : preset_names()) msg += "\n  " + name;
            throw Error(ErrorKind::invalid_argument, msg);
        }
        s = *preset;
    }
    if (args.config) apply_simulation_json(load_json_file(*args.config), s);

    auto& c = s.config;
    if (args.model) c.model = family_from_name(*args.model);
    if (args.penalty || args.q || args.r) {
        const std::string kind = args.penalty ? *args.penalty : std::string(to_string(c.penalty.kind));
        const bool same = penalty_kind_from_name(kind) == c.penalty.kind;
        c.penalty = make_shape(kind, args.q ? args.q : (same ? std::optional(c.penalty.q) : std::nullopt),
                               args.r ? args.r : (same ? std::optional(c.penalty.r) : std::nullopt));
    }
    if (args.case_id) c.case_id = *args.case_id;
    if (args.beta1) s.beta1 = args.beta1;
    if (args.beta2) s.beta2 = args.beta2;
    if (args.p) c.design.p = *args.p;
    if (args.k) c.design.k = *args.k;
    if (args.n) c.design.n = *args.n;
    if (args.reps) c.reps = *args.reps;
    if (args.kl_copies) c.kl_copies = *args.kl_copies;
    if (args.mc_samples) c.mc_samples = *args.mc_samples;
    if (args.folds) c.folds = *args.folds;
    if (args.threads) c.threads = *args.threads;
    if (args.grid_size) c.grid_size = *args.grid_size;
    if (args.fixed_x) c.fixed_x_kl = true;
    if (!args.selectors.empty()) {
        c.selectors.clear();
        for (const auto& name : args.selectors) c.selectors.push_back(selector_from_name(name));
    }
    c.seed = resolve_seed(args.seed, c.seed);
    return s.resolve();
}

inline int cmd_bench(const BenchArgs& args, std::ostream& out) {
    if (args.list_presets) {
        for (const auto& name : preset_names()) out << name << "\n";
        return 0;
    }
    if (args.out.empty()) throw Error(ErrorKind::invalid_argument, "--out directory is required");
    const SimulationConfig config = resolve_bench(args);
    const ExperimentResult result = run_experiment(config);

    const std::string model(config.model.name());
    const std::string penalty(to_string(config.penalty.kind));
    auto prefix = [&](io::CsvWriter& csv) {
        csv.field(model).field(penalty).field(config.case_id);
        csv.field(config.design.p).field(config.design.k).field(config.design.n);
    };

    std::ostringstream per_rep;
    io::CsvWriter rep_csv(per_rep);
    for (const char* h : {"model", "penalty", "case", "p", "k", "n", "selector", "rep", "lambda_hat", "kl", "fp", "fn"})
        rep_csv.field(h);
    rep_csv.end_row();
    for (const auto& r : result.records) {
        prefix(rep_csv);
        rep_csv.field(to_string(r.selector)).field(r.rep).field(r.lambda_hat).field(r.kl).field(r.fp).field(r.fn);
        rep_csv.end_row();
    }

    std::ostringstream summary;
    io::CsvWriter sum_csv(summary);
    for (const char* h : {"model", "penalty", "case", "p", "k", "n", "selector", "reps", "kl_mean", "kl_sd",
                          "fp_mean", "fn_mean", "failed_reps"})
        sum_csv.field(h);
    sum_csv.end_row();
    for (const auto& m : result.summary) {
        prefix(sum_csv);
        sum_csv.field(to_string(m.selector)).field(m.reps).field(m.kl_mean).field(m.kl_sd);
        sum_csv.field(m.fp_mean).field(m.fn_mean).field(result.failed_reps.size());
        sum_csv.end_row();
    }

    const std::filesystem::path dir(args.out);
    ensure_directory(dir);
    write_text(dir / "per_rep.csv", per_rep.str());
    write_text(dir / "summary.csv", summary.str());
    write_json(dir / "manifest.json",
               make_manifest("bench", simulation_to_json(config), config.seed, {"per_rep.csv", "summary.csv"}));

    for (const auto& m : result.summary)
        out << to_string(m.selector) << ": KL " << io::format_double(m.kl_mean) << " (sd "
            << io::format_double(m.kl_sd) << "), FP " << io::format_double(m.fp_mean) << ", FN "
            << io::format_double(m.fn_mean) << " over " << m.reps << " reps\n";
    for (std::size_t i = 0; i < result.failed_reps.size(); ++i)
        out << "rep " << result.failed_reps[i] << " failed: " << result.failure_messages[i] << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// entry point

/// Exit status for an error: 2 for invalid input, 1 for runtime failures.
inline int exit_code(const Error& e) {
    switch (e.kind()) {
    case ErrorKind::invalid_argument:
    case ErrorKind::io: return 2;
    default: return 1;
    }
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Penalized GLM fitting and AIC-based tuning-parameter selection", "pqs"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    FitArgs fit_args;
    auto* fit_cmd = app.add_subcommand("fit", "fit at one lambda and write the coefficients as JSON");
    fit_args.model.add_to(*fit_cmd);
    fit_cmd->add_option("--lambda", fit_args.lambda, "tuning parameter, >= 0")->required();
    fit_cmd->add_option("--data", fit_args.data, "CSV with a header row and a 'y' column")->required();
    fit_cmd->add_option("--out", fit_args.out, "output JSON file (stdout when omitted)");

    SelectArgs sel;
    auto* select_cmd = app.add_subcommand("select", "choose lambda over a grid by AIC or cross-validation");
    sel.model.add_to(*select_cmd);
    select_cmd->add_option("--lambda-grid", sel.lambda_grid, "comma-separated lambdas (default: log grid)")
        ->delimiter(',');
    select_cmd->add_option("--grid-size", sel.grid_size, "points in the default grid")->capture_default_str();
    select_cmd->add_option("--selector", sel.selector, "aic or cv")->capture_default_str();
    select_cmd->add_option("--folds", sel.folds, "cross-validation folds")->capture_default_str();
    select_cmd->add_option("--mc-samples", sel.mc_samples, "Monte-Carlo draws for K")->capture_default_str();
    select_cmd->add_option("--seed", sel.seed, "master seed (falls back to PQS_SEED, then 1)");
    select_cmd->add_option("--data", sel.data, "CSV with a header row and a 'y' column")->required();
    select_cmd->add_option("--out", sel.out, "output directory")->required();

    BenchArgs bench;
    auto* bench_cmd = app.add_subcommand("bench", "simulation study comparing AIC and cross-validation");
    bench_cmd->add_option("--preset", bench.preset, "named design, e.g. table1-linear-case2-n100");
    bench_cmd->add_option("--config", bench.config, "JSON simulation config or a previous manifest.json");
    bench_cmd->add_option("--model", bench.model, "linear or logistic");
    bench_cmd->add_option("--penalty", bench.penalty, "bridge, scad or mcp");
    bench_cmd->add_option("--q", bench.q, "bridge exponent in (0,1]");
    bench_cmd->add_option("--r", bench.r, "SCAD/MCP shape, > 1");
    bench_cmd->add_option("--case", bench.case_id, "1 or 2 for the standard coefficients, 0 for custom");
    bench_cmd->add_option("--beta1", bench.beta1, "first block coefficient");
    bench_cmd->add_option("--beta2", bench.beta2, "second block coefficient");
    bench_cmd->add_option("--p", bench.p, "number of regressors");
    bench_cmd->add_option("--k", bench.k, "size of each nonzero block");
    bench_cmd->add_option("--n", bench.n, "sample size");
    bench_cmd->add_option("--reps", bench.reps, "replications");
    bench_cmd->add_option("--kl-copies", bench.kl_copies, "fresh datasets for the KL estimate");
    bench_cmd->add_option("--selector", bench.selectors, "comma-separated subset of aic,cv")->delimiter(',');
    bench_cmd->add_option("--mc-samples", bench.mc_samples, "Monte-Carlo draws for K");
    bench_cmd->add_option("--folds", bench.folds, "cross-validation folds");
    bench_cmd->add_option("--grid-size", bench.grid_size, "points in the lambda grid");
    bench_cmd->add_option("--seed", bench.seed, "master seed (falls back to PQS_SEED)");
    bench_cmd->add_option("--threads", bench.threads, "worker threads; output does not depend on it");
    bench_cmd->add_flag("--fixed-x", bench.fixed_x, "evaluate KL with the fitted design held fixed");
    bench_cmd->add_flag("--list-presets", bench.list_presets, "print preset names and exit");
    bench_cmd->add_option("--out", bench.out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? 0 : 2;
    }

    try {
        if (*fit_cmd) return cmd_fit(fit_args, out);
        if (*select_cmd) return cmd_select(sel, out);
        return cmd_bench(bench, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code(e);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace pqs::cli
