#include "dimerlab/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>
#include <variant>
#include <vector>

#include "dimerlab/criticality.hpp"
#include "dimerlab/errors.hpp"
#include "dimerlab/finite_system.hpp"
#include "dimerlab/graph.hpp"
#include "dimerlab/mcmc.hpp"
#include "dimerlab/phase_boundary.hpp"
#include "dimerlab/special_functions.hpp"
#include "dimerlab/variational.hpp"

namespace dimerlab::cli {

namespace {

using Json = nlohmann::ordered_json;

struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

double round15(double x) {
    if (!std::isfinite(x)) return x;
    const std::string s = format_number(x);
    double out = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), out);
    return out;
}

Json number(double x) { return std::isfinite(x) ? Json(round15(x)) : Json(nullptr); }

// ---------------------------------------------------------------- tables

using Cell = std::variant<std::monostate, double, long long, std::string>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
};

std::string cell_text(const Cell& c) {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) return "";
            else if constexpr (std::is_same_v<T, double>) return format_number(v);
            else if constexpr (std::is_same_v<T, long long>) return std::to_string(v);
            else return v;
        },
        c);
}

Json cell_json(const Cell& c) {
    return std::visit(
        [](const auto& v) -> Json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) return nullptr;
            else if constexpr (std::is_same_v<T, double>) return number(v);
            else return v;
        },
        c);
}

void write_csv(std::ostream& os, const Table& t) {
    for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
    os << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << cell_text(row[i]);
        os << '\n';
    }
}

Json table_json(const Table& t) {
    Json arr = Json::array();
    for (const auto& row : t.rows) {
        Json obj = Json::object();
        for (std::size_t i = 0; i < row.size(); ++i) obj[t.columns[i]] = cell_json(row[i]);
        arr.push_back(std::move(obj));
    }
    return arr;
}

/** What a command produced; json defaults to the table as an array of rows. */
struct Output {
    Table table;
    std::optional<Json> json;
    int exit_code = kExitOk;
};

// ---------------------------------------------------------------- grids

std::vector<double> parse_grid(const std::string& spec) {
    std::string s = spec;
    const bool geometric = !s.empty() && s.front() == 'g';
    if (geometric) s.erase(0, 1);
    std::vector<std::string> parts;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
    if (parts.size() != 3) throw UsageError("grid '" + spec + "' is not of the form min:max:steps");
    auto to_double = [&](const std::string& p) {
        double v = 0.0;
        const auto r = std::from_chars(p.data(), p.data() + p.size(), v);
        if (r.ec != std::errc{} || r.ptr != p.data() + p.size() || !std::isfinite(v))
            throw UsageError("grid '" + spec + "': bad number '" + p + "'");
        return v;
    };
    const double lo = to_double(parts[0]), hi = to_double(parts[1]);
    int steps = 0;
    const auto r = std::from_chars(parts[2].data(), parts[2].data() + parts[2].size(), steps);
    if (r.ec != std::errc{} || r.ptr != parts[2].data() + parts[2].size() || steps < 1)
        throw UsageError("grid '" + spec + "': steps must be a positive integer");
    if (steps > 1 && !(hi > lo)) throw UsageError("grid '" + spec + "': max must exceed min");
    if (geometric && !(lo > 0.0)) throw UsageError("grid '" + spec + "': geometric grids need min > 0");
    std::vector<double> out;
    for (int i = 0; i < steps; ++i) {
        if (i == steps - 1 && steps > 1) out.push_back(hi);
        else if (geometric) out.push_back(lo * std::exp(std::log(hi / lo) * i / std::max(1, steps - 1)));
        else out.push_back(lo + (hi - lo) * i / std::max(1, steps - 1));
    }
    return out;
}

std::vector<long> parse_sizes(const std::string& spec) {
    std::vector<long> out;
    std::stringstream ss(spec);
    for (std::string item; std::getline(ss, item, ',');) {
        long v = 0;
        const auto r = std::from_chars(item.data(), item.data() + item.size(), v);
        if (r.ec != std::errc{} || r.ptr != item.data() + item.size() || v < 1)
            throw UsageError("size list '" + spec + "': bad entry '" + item + "'");
        out.push_back(v);
    }
    if (out.empty()) throw UsageError("size list is empty");
    return out;
}

// Results are written by index, so the output does not depend on the thread count.
template <class F>
auto parallel_map(std::size_t count, int threads, F f) -> std::vector<decltype(f(std::size_t{}))> {
    std::vector<decltype(f(std::size_t{}))> out(count);
    const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(threads), 1, std::max<std::size_t>(count, 1));
    std::exception_ptr failure;
    std::size_t failed_at = count;
    std::mutex mu;
    auto work = [&](std::size_t w) {
        for (std::size_t i = w; i < count; i += workers) {
            try {
                out[i] = f(i);
            } catch (...) {
                // Keep the error of the lowest index so the message is deterministic too.
                std::lock_guard lock(mu);
                if (i < failed_at) {
                    failed_at = i;
                    failure = std::current_exception();
                }
                return;
            }
        }
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

// ---------------------------------------------------------------- options

struct Common {
    std::string format;
    std::string output = "-";
    int threads = 0;
    std::string config;

    [[nodiscard]] int thread_count() const {
        if (threads > 0) return threads;
        return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    }
};

void add_common(CLI::App* sub, Common& c, const std::string& default_format) {
    c.format = default_format;
    sub->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    sub->add_option("--output", c.output, "Output file, '-' for stdout")->capture_default_str();
    sub->add_option("--threads", c.threads, "Worker threads, 0 for all cores")->check(CLI::NonNegativeNumber);
    sub->add_option("--config", c.config, "TOML-style file of option defaults");
}

struct PressureArgs {
    Common common;
    double h = 0.0;
    double J = 0.0;
    long n = 0;
    CLI::Option* J_opt = nullptr;
    CLI::Option* n_opt = nullptr;
};

struct ClassifyArgs {
    Common common;
    double h = 0.0;
    double J = 0.0;
};

struct PhaseDiagramArgs {
    Common common;
    std::string h_grid = "-1.5:0.5:41";
    std::string J_grid = "0.5:4:36";
};

struct WallArgs {
    Common common;
    double jmin = 1.46;
    double jmax = 10.0;
    int steps = 40;
};

struct CriticalArgs {
    Common common;
    std::string curve = "tangent";
    double alpha = 0.0;
    std::string branch;
    int k_max = 13;
};

struct FiniteSizeArgs {
    Common common;
    std::string ns = "10,100,1000,10000";
    double h = 0.0;
    double J = 0.0;
};

struct McmcArgs {
    Common common;
    ChainConfig chain;
    std::string start = "all-monomers";
    int chains = 1;
};

struct SelftestArgs {
    Common common;
};

struct AllArgs {
    PressureArgs pressure;
    ClassifyArgs classify;
    PhaseDiagramArgs phase;
    WallArgs wall;
    CriticalArgs critical;
    FiniteSizeArgs finite;
    McmcArgs mcmc;
    SelftestArgs selftest;
};

void build(CLI::App& app, AllArgs& a) {
    app.set_help_flag("--help", "Print help and exit");
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    auto sub = [&](const char* name, const char* desc) {
        CLI::App* s = app.add_subcommand(name, desc);
        s->set_help_flag("--help", "Print help and exit");
        return s;
    };

    CLI::App* s = sub("pressure", "Limit pressure p^MD(h) or p^IMD(h,J); finite-N with --n");
    add_common(s, a.pressure.common, "csv");
    s->add_option("--h", a.pressure.h, "Monomer field")->required();
    a.pressure.J_opt = s->add_option("--J", a.pressure.J, "Imitation coupling (>= 0)");
    a.pressure.n_opt = s->add_option("--n", a.pressure.n, "Finite complete graph size")->check(CLI::PositiveNumber);

    s = sub("classify", "Stationary points of the variational pressure");
    add_common(s, a.classify.common, "json");
    s->add_option("--h", a.classify.h, "Monomer field")->required();
    s->add_option("--J", a.classify.J, "Imitation coupling (> 0)")->required();

    s = sub("phase-diagram", "m*, pressure and region over an (h, J) grid");
    add_common(s, a.phase.common, "csv");
    s->add_option("--h-grid", a.phase.h_grid, "h grid min:max:steps (g prefix: geometric)")->capture_default_str();
    s->add_option("--J-grid", a.phase.J_grid, "J grid min:max:steps (g prefix: geometric)")->capture_default_str();

    s = sub("wall", "Coexistence line gamma(J) on a geometric J grid");
    add_common(s, a.wall.common, "csv");
    s->add_option("--jmin", a.wall.jmin, "Smallest J (> J_c)")->capture_default_str();
    s->add_option("--jmax", a.wall.jmax, "Largest J")->capture_default_str();
    s->add_option("--steps", a.wall.steps, "Number of rows (>= 2)")->capture_default_str();

    s = sub("critical", "Power-law fit of m - m_c approaching the critical point");
    add_common(s, a.critical.common, "csv");
    s->add_option("--curve", a.critical.curve, "tangent, slope or flat")
        ->check(CLI::IsMember({"tangent", "slope", "flat"}))
        ->capture_default_str();
    s->add_option("--alpha", a.critical.alpha, "Slope of h - h_c = alpha (J - J_c) for --curve slope");
    s->add_option("--branch", a.critical.branch, "m1, m2 or unique (default m2 on the tangent, else unique)")
        ->check(CLI::IsMember({"m1", "m2", "unique"}));
    s->add_option("--k-max", a.critical.k_max, "Distances 1e-2 * 2^-k for k = 0..k_max")
        ->check(CLI::Range(2, 20))
        ->capture_default_str();

    s = sub("finite-size", "Finite-N pressure and density against the limit");
    add_common(s, a.finite.common, "csv");
    s->add_option("--n", a.finite.ns, "Comma-separated sizes")->capture_default_str();
    s->add_option("--h", a.finite.h, "Monomer field")->capture_default_str();
    s->add_option("--J", a.finite.J, "Imitation coupling (>= 0)")->capture_default_str();

    s = sub("mcmc", "Metropolis-Hastings estimate of the monomer density on K_n");
    add_common(s, a.mcmc.common, "json");
    ChainConfig& c = a.mcmc.chain;
    s->add_option("--n", c.n, "Number of vertices")->capture_default_str();
    s->add_option("--h", c.h, "Monomer field")->capture_default_str();
    s->add_option("--J", c.J, "Imitation coupling (>= 0)")->capture_default_str();
    s->add_option("--seed", c.seed, "RNG seed")->capture_default_str();
    s->add_option("--sweeps", c.sweeps, "Sweeps of n proposals, burn-in included")->capture_default_str();
    s->add_option("--burn-in", c.burn_in, "Discarded sweeps")->capture_default_str();
    s->add_option("--thin", c.thin, "Record every thin-th sweep")->capture_default_str();
    s->add_option("--batches", c.batches, "Batch-means batches (>= 20)")->capture_default_str();
    s->add_option("--start", a.mcmc.start, "all-monomers or max-dimers")
        ->check(CLI::IsMember({"all-monomers", "max-dimers"}))
        ->capture_default_str();
    s->add_option("--chains", a.mcmc.chains, "Independent chains on streams 0..chains-1")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    s = sub("selftest", "Quick invariant checks per module");
    add_common(s, a.selftest.common, "csv");
}

// ---------------------------------------------------------------- layering

std::string env_name(const std::string& option) {
    std::string out = "DIMERLAB_";
    for (char ch : option) out += ch == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    return out;
}

std::vector<CLI::Option*> layerable(CLI::App* sub) {
    std::vector<CLI::Option*> out;
    for (CLI::Option* o : sub->get_options()) {
        if (o == sub->get_help_ptr() || o->get_lnames().empty() || o->get_lnames().front() == "config") continue;
        out.push_back(o);
    }
    return out;
}

CLI::Option* find_key(CLI::App* sub, std::string key) {
    std::replace(key.begin(), key.end(), '_', '-');
    for (CLI::Option* o : layerable(sub))
        if (o->get_lnames().front() == key) return o;
    return nullptr;
}

std::optional<std::string> config_path(std::span<const std::string> args, const EnvLookup& env) {
    std::optional<std::string> path;
    for (std::size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    }
    if (!path) path = env("DIMERLAB_CONFIG");
    return path;
}

// Config entries for the running command. Top-level keys may belong to any
// command and apply where they exist; keys under [command] must exist there.
std::vector<std::string> config_args(CLI::App& app, CLI::App* sub, const std::string& path) {
    std::vector<CLI::ConfigItem> items;
    try {
        items = CLI::ConfigTOML().from_file(path);
    } catch (const CLI::Error& e) {
        throw UsageError("config file '" + path + "': " + e.what());
    }
    auto unknown = [&](const std::string& what) { return UsageError("config file '" + path + "': unknown " + what); };
    std::vector<std::string> out;
    for (const auto& item : items) {
        if (item.name == "++" || item.name == "--") continue;
        if (item.parents.size() > 1) throw unknown("key '" + item.fullname() + "'");
        CLI::Option* opt = nullptr;
        if (item.parents.size() == 1) {
            CLI::App* target = app.get_subcommand_no_throw(item.parents.front());
            if (target == nullptr) throw unknown("section '" + item.parents.front() + "'");
            if (find_key(target, item.name) == nullptr) throw unknown("key '" + item.fullname() + "'");
            if (target != sub) continue;
            opt = find_key(sub, item.name);
        } else {
            bool known = false;
            for (CLI::App* s : app.get_subcommands([](CLI::App*) { return true; })) known |= find_key(s, item.name) != nullptr;
            if (!known) throw unknown("key '" + item.name + "'");
            opt = find_key(sub, item.name);
            if (opt == nullptr) continue;
        }
        std::string value;
        for (std::size_t i = 0; i < item.inputs.size(); ++i) value += (i ? "," : "") + item.inputs[i];
        out.push_back("--" + opt->get_lnames().front() + "=" + value);
    }
    return out;
}

std::vector<std::string> env_args(CLI::App* sub, const EnvLookup& env) {
    std::vector<std::string> out;
    for (CLI::Option* o : layerable(sub)) {
        const std::string& name = o->get_lnames().front();
        if (auto v = env(env_name(name))) out.push_back("--" + name + "=" + *v);
    }
    return out;
}

// ---------------------------------------------------------------- commands

Output cmd_pressure(const PressureArgs& a) {
    const bool has_J = a.J_opt->count() > 0;
    const bool has_n = a.n_opt->count() > 0;
    const double J = has_J ? a.J : 0.0;
    if (J < 0.0) throw DomainError("pressure: J must be non-negative");
    Table t{{"h", "J", "n", "pressure", "monomer_density"}, {}};
    if (has_n) {
        const FiniteSystemResult r = imitative_partition(a.n, a.h, J);
        t.rows.push_back({a.h, J, static_cast<long long>(a.n), r.log_partition_per_site, r.monomer_density});
    } else if (J == 0.0) {
        t.rows.push_back({a.h, J, Cell{}, pressure_md(a.h), g(a.h)});
    } else {
        const GlobalMaximizer gm = global_maximizer({a.h, J});
        t.rows.push_back({a.h, J, Cell{}, gm.pressure, gm.m});
    }
    Output out{std::move(t), std::nullopt};
    out.json = table_json(out.table).front();
    return out;
}

Output cmd_classify(const ClassifyArgs& a) {
    const ModelPoint p{a.h, a.J};
    const StationaryReport rep = classify(p);
    const GlobalMaximizer gm = global_maximizer(p);
    auto is_global = [&](const StationaryPoint& s) {
        if (gm.on_wall) return s.branch == Branch::m1 || s.branch == Branch::m2;
        return s.branch == gm.branch && s.kind != PointKind::local_min && s.kind != PointKind::inflection_degenerate;
    };
    Table t{{"h", "J", "region", "branch", "kind", "m", "residual", "global"}, {}};
    Json points = Json::array();
    for (const auto& s : rep.points) {
        t.rows.push_back({a.h, a.J, std::string(to_string(rep.region)), std::string(to_string(s.branch)),
                          std::string(to_string(s.kind)), s.m, s.residual, static_cast<long long>(is_global(s))});
        Json pt = Json::object();
        pt["m"] = number(s.m);
        pt["kind"] = to_string(s.kind);
        pt["branch"] = to_string(s.branch);
        pt["residual"] = number(s.residual);
        points.push_back(std::move(pt));
    }
    Json j = Json::object();
    j["h"] = number(a.h);
    j["J"] = number(a.J);
    j["region"] = to_string(rep.region);
    j["phi"] = rep.phi ? Json::array({number(rep.phi->phi1), number(rep.phi->phi2)}) : Json(nullptr);
    j["psi"] = rep.psi ? Json::array({number(rep.psi->psi1), number(rep.psi->psi2)}) : Json(nullptr);
    j["points"] = std::move(points);
    Json best = Json::object();
    best["m"] = number(gm.m);
    best["branch"] = gm.on_wall ? Json(nullptr) : Json(to_string(gm.branch));
    best["pressure"] = number(gm.pressure);
    best["on_wall"] = gm.on_wall;
    j["global"] = std::move(best);
    return {std::move(t), std::move(j)};
}

Output cmd_phase_diagram(const PhaseDiagramArgs& a) {
    const auto hs = parse_grid(a.h_grid);
    const auto Js = parse_grid(a.J_grid);
    for (double J : Js)
        if (!(J > 0.0)) throw DomainError("phase-diagram: J grid must be positive");
    const std::size_t nh = hs.size();
    auto rows = parallel_map(hs.size() * Js.size(), a.common.thread_count(), [&](std::size_t i) {
        const ModelPoint p{hs[i % nh], Js[i / nh]};
        const StationaryReport rep = classify(p);
        const GlobalMaximizer gm = global_maximizer(p);
        return std::vector<Cell>{p.h, p.J, std::string(to_string(rep.region)), gm.m, gm.pressure,
                                 gm.on_wall ? std::string("wall") : std::string(to_string(gm.branch)),
                                 static_cast<long long>(gm.on_wall)};
    });
    return {Table{{"h", "J", "region", "m_star", "pressure", "branch", "on_wall"}, std::move(rows)}, std::nullopt};
}

Output cmd_wall(const WallArgs& a) {
    const auto Js = wall_grid(a.jmin, a.jmax, a.steps);
    auto rows = parallel_map(Js.size(), a.common.thread_count(), [&](std::size_t i) {
        const WallSample w = wall(Js[i]);
        return std::vector<Cell>{w.J, w.gamma, w.gamma_prime, w.m1, w.m2, w.jump(), w.delta_residual,
                                 static_cast<long long>(w.degenerate_strip)};
    });
    return {Table{{"J", "gamma", "gamma_prime", "m1", "m2", "jump", "delta_residual", "degenerate_strip"},
                  std::move(rows)},
            std::nullopt};
}

Output cmd_critical(const CriticalArgs& a) {
    CurveSpec curve = CurveSpec::tangent();
    if (a.curve == "slope") curve = CurveSpec::slope(a.alpha);
    else if (a.curve == "flat") curve = CurveSpec::flat();
    std::string branch_name = a.branch.empty() ? (curve.kind == CurveSpec::Kind::tangent ? "m2" : "unique") : a.branch;
    const Branch branch = branch_name == "m1" ? Branch::m1 : branch_name == "m2" ? Branch::m2 : Branch::unique;
    if (curve.kind == CurveSpec::Kind::slope && std::abs(curve.alpha - kTangentSlope) < 1e-12)
        throw UsageError("critical: alpha = 1 - 2 m_c is the tangent curve; use --curve tangent");
    std::vector<double> distances;
    for (int k = 0; k <= a.k_max; ++k) distances.push_back(1e-2 * std::ldexp(1.0, -k));
    const ExponentFit fit = exponent_fit(curve, distances, branch);

    Table t{{"distance", "m_minus_mc", "log_distance", "log_dev", "branch", "curve_kind"}, {}};
    Json samples = Json::array();
    for (const auto& s : fit.samples) {
        t.rows.push_back({s.distance, s.deviation, std::log(s.distance), std::log(std::abs(s.deviation)), branch_name,
                          curve.name()});
        samples.push_back(Json::object({{"distance", number(s.distance)}, {"m_minus_mc", number(s.deviation)}}));
    }
    const AmplitudeConstants amp = amplitude_constants();
    double expected = amp.C_inf;
    if (curve.kind == CurveSpec::Kind::tangent) expected = branch == Branch::m1 ? -amp.C_m : amp.C_m;
    else if (curve.kind == CurveSpec::Kind::slope) expected = amp.C_alpha(curve.alpha);
    Json j = Json::object();
    j["curve"] = curve.name();
    j["alpha"] = number(curve.alpha);
    j["branch"] = branch_name;
    j["nominal_exponent"] = number(fit.nominal_exponent);
    j["slope"] = number(fit.slope);
    j["intercept"] = number(fit.intercept);
    j["r2"] = number(fit.r2);
    j["dropped"] = fit.dropped;
    j["amplitude"] = number(fit.amplitude);
    j["leading_amplitude"] = number(fit.leading_amplitude);
    j["expected_amplitude"] = number(expected);
    j["samples"] = std::move(samples);
    return {std::move(t), std::move(j)};
}

Output cmd_finite_size(const FiniteSizeArgs& a) {
    if (a.J < 0.0) throw DomainError("finite-size: J must be non-negative");
    const auto ns = parse_sizes(a.ns);
    Table t{{"n", "log_partition_per_site", "monomer_density", "limit_pressure", "limit_density", "pressure_error",
             "density_error", "error_bound"},
            {}};
    for (const auto& r : finite_density_scan(ns, a.h, a.J)) {
        const double n = static_cast<double>(r.finite.n);
        t.rows.push_back({static_cast<long long>(r.finite.n), r.finite.log_partition_per_site, r.finite.monomer_density,
                          r.limit_pressure, r.limit_density, r.pressure_error, r.density_error,
                          std::log(n + 1.0) / n});
    }
    return {std::move(t), std::nullopt};
}

Output cmd_mcmc(const McmcArgs& a) {
    ChainConfig base = a.chain;
    base.start = a.start == "max-dimers" ? Start::max_dimers : Start::all_monomers;
    std::vector<ChainConfig> configs;
    for (int k = 0; k < a.chains; ++k) {
        configs.push_back(base);
        configs.back().stream = static_cast<std::uint64_t>(k);
    }
    const auto results = run_chains(configs, a.common.thread_count());
    DensityEstimate e = a.chains == 1 ? results.front() : combine(results);
    Table t{{"n", "h", "J", "seed", "proposals", "acceptance_rate", "mean", "std_error", "batches"}, {}};
    t.rows.push_back({static_cast<long long>(base.n), base.h, base.J, std::to_string(base.seed),
                      static_cast<long long>(e.proposals), e.acceptance_rate, e.mean, e.std_error,
                      static_cast<long long>(e.n_batches)});
    ChainConfig shown = base;
    shown.h = round15(shown.h);
    shown.J = round15(shown.J);
    e.acceptance_rate = round15(e.acceptance_rate);
    e.mean = round15(e.mean);
    e.std_error = round15(e.std_error);
    return {std::move(t), Json::parse(to_json(shown, e))};
}

// ---------------------------------------------------------------- selftest

struct Check {
    int total = 0;
    int failed = 0;
    void operator()(bool ok) {
        ++total;
        failed += ok ? 0 : 1;
    }
};

Check selftest_special_functions() {
    Check c;
    for (double h = -15.0; h <= 15.0; h += 0.5) {
        const double m = g(h), q = one_minus_g(h);
        c(m > 0.0 && m < 1.0 && q > 0.0);
        // The inverse needs 1 - m, which g alone resolves only for moderate h.
        if (std::abs(h) <= 5.0) c(std::abs(g_inverse(m) - h) <= 1e-9);
        c(std::abs(m * m - q * std::exp(2.0 * h)) <= 1e-12 * m * m);
        const double step = 1e-5;
        const double fd = (pressure_md(h + step) - pressure_md(h - step)) / (2 * step);
        c(std::abs(fd - m) <= 1e-6);
    }
    c(std::abs(g(kCritical.xi_c) - kCritical.m_c) <= 1e-15);
    return c;
}

Check selftest_finite_system() {
    Check c;
    for (long n : {2L, 5L, 10L, 16L}) {
        const GraphSpec k = GraphSpec::complete(static_cast<int>(n), std::exp(0.3), 1.0 / static_cast<double>(n));
        const double enum_log = enumerate_partition(k).log();
        const double hl_log = hl_recursion_partition(k).log();
        const double closed = complete_graph_partition(n, 0.3).log_partition_per_site * static_cast<double>(n);
        const double hermite = hermite_partition(n, 0.3).log_partition_per_site * static_cast<double>(n);
        c(std::abs(enum_log - hl_log) <= 1e-12 * std::max(1.0, std::abs(enum_log)));
        c(std::abs(enum_log - closed) <= 1e-10);
        c(std::abs(enum_log - hermite) <= 1e-10);
    }
    for (long n : {100L, 1000L}) {
        const auto r = complete_graph_partition(n, 0.5);
        c(r.log_partition_per_site >= 0.5 && r.log_partition_per_site <= 0.5 + 0.5 * std::exp(-1.0) + 1e-12);
    }
    return c;
}

Check selftest_variational() {
    Check c;
    const ModelPoint pts[] = {{0.0, 1.0}, {-0.4, 2.0}, {0.0, 2.0}, {-2.0, 2.0}, {-0.5, 3.0}, {1.0, 0.3}};
    for (const auto& p : pts) {
        const auto rep = classify(p);
        for (const auto& s : rep.points) c(s.residual <= 1e-12);
        if (rep.region == Region::three_solutions) c(rep.points.size() == 3);
        const auto gm = global_maximizer(p);
        double scan = -1e300;
        for (int k = 0; k <= 1000; ++k) scan = std::max(scan, tilde_p(k / 1000.0, p));
        c(gm.pressure >= scan - 1e-12);
    }
    c(classify({-0.4, 2.0}).region == Region::three_solutions);
    c(classify({0.0, 1.0}).region == Region::subcritical);
    return c;
}

Check selftest_phase_boundary() {
    Check c;
    for (double J : {1.5, 2.0, 3.0, 8.0}) {
        const WallSample w = wall(J);
        const PsiCurves ps = psi_curves(J);
        c(ps.psi2 < w.gamma && w.gamma < ps.psi1);
        c(std::abs(w.gamma_prime - (1.0 - w.m1 - w.m2)) <= 1e-8);
        c(std::abs(w.delta_residual) <= 1e-10);
        c(delta({ps.psi2, J}) < 0.0 && delta({ps.psi1, J}) > 0.0);
        c(global_maximizer({w.gamma - 1e-6, J}).branch == Branch::m1);
        c(global_maximizer({w.gamma + 1e-6, J}).branch == Branch::m2);
    }
    return c;
}

Check selftest_criticality() {
    Check c;
    const auto d = tilde_p_derivatives(kCritical.m_c, {kCritical.h_c, kCritical.J_c});
    c(std::abs(d.first) <= 1e-9 && std::abs(d.second) <= 1e-9);
    c(critical_cubic_residual(kCritical.xi_c, {kCritical.h_c, kCritical.J_c}) == 0.0);
    const double ds[] = {1e-4, 5e-5, 2.5e-5, 1.25e-5};
    const FlexScaling f = flex_point_scaling(ds);
    c(std::abs(f.ratio_upper_smallest - 1.0) <= 0.01 && std::abs(f.ratio_lower_smallest - 1.0) <= 0.01);
    const ExponentFit fit = exponent_fit(CurveSpec::tangent(), default_distances(), Branch::m2);
    c(std::abs(fit.slope - 0.5) <= 0.02);
    return c;
}

Check selftest_mcmc() {
    Check c;
    for (int n : {4, 9, 50}) {
        const ChainModel m{n, 0.2, 1.3};
        for (int d = 0; 2 * d + 2 <= n; ++d)
            c(std::abs(log_insert_ratio(n - 2 * d, d, m) + log_delete_ratio(n - 2 * d - 2, d + 1, m)) <= 1e-12);
    }
    ChainConfig cfg;
    cfg.n = 30;
    cfg.sweeps = 200;
    cfg.burn_in = 20;
    cfg.J = 1.0;
    const DensityEstimate a = run_chain(cfg), b = run_chain(cfg);
    c(a.mean == b.mean && a.std_error == b.std_error);
    c(a.mean >= 0.0 && a.mean <= 1.0);
    MarkovState s(11, Start::max_dimers);
    s.check_invariants();
    c(s.monomers() + 2 * s.dimers() == 11);
    return c;
}

Output cmd_selftest() {
    struct Suite {
        const char* name;
        Check (*run)();
    };
    const Suite suites[] = {{"special_functions", selftest_special_functions}, {"finite_system", selftest_finite_system},
                            {"variational", selftest_variational},             {"phase_boundary", selftest_phase_boundary},
                            {"criticality", selftest_criticality},             {"mcmc", selftest_mcmc}};
    Output out{Table{{"module", "checks", "failed", "status"}, {}}, std::nullopt};
    for (const auto& s : suites) {
        Check c;
        std::string status = "PASS";
        try {
            c = s.run();
            if (c.failed > 0) status = "FAIL";
        } catch (const std::exception&) {
            status = "ERROR";
            ++c.failed;
        }
        if (status != "PASS") out.exit_code = kExitSelftestFailed;
        out.table.rows.push_back({std::string(s.name), static_cast<long long>(c.total), static_cast<long long>(c.failed), status});
    }
    return out;
}

void emit(const Output& o, const Common& c, std::ostream& out) {
    std::ofstream file;
    std::ostream* os = &out;
    if (c.output != "-") {
        file.open(c.output, std::ios::binary);
        if (!file) throw UsageError("cannot open output file '" + c.output + "'");
        os = &file;
    }
    if (c.format == "json") *os << (o.json ? *o.json : table_json(o.table)).dump(2) << '\n';
    else write_csv(*os, o.table);
    os->flush();
    if (!*os) throw UsageError("failed writing output to '" + c.output + "'");
}

void report(std::ostream& err, const char* kind, const std::string& message) {
    Json j = Json::object();
    j["error"] = kind;
    j["message"] = message;
    err << j.dump() << '\n';
}

}  // namespace

EnvLookup process_environment() {
    return [](const std::string& name) -> std::optional<std::string> {
        if (const char* v = std::getenv(name.c_str())) return std::string(v);
        return std::nullopt;
    };
}

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    if (x == 0.0) return "0";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 15);
    return {buf, r.ptr};
}

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err, const EnvLookup& env) {
    CLI::App app("dimerlab: monomer-dimer models on complete graphs", "dimerlab");
    AllArgs a;
    build(app, a);
    try {
        std::vector<std::string> merged(args.begin(), args.end());
        CLI::App* sub = nullptr;
        if (args.empty()) {
            err << app.help();
            return kExitUsage;
        }
        if (!args[0].starts_with("-")) {
            sub = app.get_subcommand_no_throw(args[0]);
            if (sub == nullptr) throw UsageError("unknown command '" + args[0] + "'");
        }
        if (sub != nullptr) {
            merged.assign({args[0]});
            if (auto path = config_path(args, env)) {
                const auto file = config_args(app, sub, *path);
                merged.insert(merged.end(), file.begin(), file.end());
            }
            const auto from_env = env_args(sub, env);
            merged.insert(merged.end(), from_env.begin(), from_env.end());
            merged.insert(merged.end(), args.begin() + 1, args.end());
        }
        std::reverse(merged.begin(), merged.end());
        app.parse(merged);

        const std::string name = app.get_subcommands().front()->get_name();
        Output o;
        const Common* common = nullptr;
        if (name == "pressure") o = cmd_pressure(a.pressure), common = &a.pressure.common;
        else if (name == "classify") o = cmd_classify(a.classify), common = &a.classify.common;
        else if (name == "phase-diagram") o = cmd_phase_diagram(a.phase), common = &a.phase.common;
        else if (name == "wall") o = cmd_wall(a.wall), common = &a.wall.common;
        else if (name == "critical") o = cmd_critical(a.critical), common = &a.critical.common;
        else if (name == "finite-size") o = cmd_finite_size(a.finite), common = &a.finite.common;
        else if (name == "mcmc") o = cmd_mcmc(a.mcmc), common = &a.mcmc.common;
        else o = cmd_selftest(), common = &a.selftest.common;
        emit(o, *common, out);
        return o.exit_code;
    } catch (const CLI::CallForHelp&) {
        const CLI::App* target = &app;
        for (const CLI::App* s : app.get_subcommands()) target = s;
        out << target->help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        report(err, "usage", e.what());
        return kExitUsage;
    } catch (const SizeLimitError& e) {
        report(err, "usage", e.what());
        return kExitUsage;
    } catch (const DomainError& e) {
        report(err, "domain", e.what());
        return kExitDomain;
    } catch (const FitQualityError& e) {
        report(err, "domain", e.what());
        return kExitDomain;
    } catch (const std::invalid_argument& e) {
        report(err, "usage", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        report(err, "numerical", e.what());
        return kExitDomain;
    }
}

}  // namespace dimerlab::cli
