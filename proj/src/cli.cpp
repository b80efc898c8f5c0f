#include "pdfabench/cli.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "pdfabench/enumeration.hpp"
#include "pdfabench/machine_io.hpp"
#include "pdfabench/rate_accuracy.hpp"

namespace pdfabench::cli {

namespace {

std::string trim(std::string_view s) {
    auto const b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    auto const e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(std::string const& key, std::string const& value) {
    T result{};
    auto const* first = value.data();
    auto const* last = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(first, last, result);
    if (ec != std::errc{} || ptr != last) {
        throw UsageError("invalid value '" + value + "' for '" + key + "'");
    }
    return result;
}

bool parse_bool(std::string const& key, std::string const& value) {
    if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
    if (value == "false" || value == "0" || value == "no" || value == "off") return false;
    throw UsageError("invalid boolean '" + value + "' for '" + key + "'");
}

std::vector<std::string> split(std::string const& value, char sep) {
    std::vector<std::string> parts;
    std::string item;
    std::istringstream in(value);
    while (std::getline(in, item, sep)) {
        item = trim(item);
        if (!item.empty()) parts.push_back(item);
    }
    return parts;
}

/// "1,2,5" or "start:stop:step" (inclusive stop).
std::vector<int> parse_int_list(std::string const& key, std::string const& value) {
    std::vector<int> result;
    for (auto const& part : split(value, ',')) {
        auto const pieces = split(part, ':');
        if (pieces.size() == 1) {
            result.push_back(parse_number<int>(key, pieces[0]));
        } else if (pieces.size() == 2 || pieces.size() == 3) {
            int const start = parse_number<int>(key, pieces[0]);
            int const stop = parse_number<int>(key, pieces[1]);
            int const step = pieces.size() == 3 ? parse_number<int>(key, pieces[2]) : 1;
            if (step < 1) throw UsageError("range step must be positive in '" + key + "'");
            for (int v = start; v <= stop; v += step) result.push_back(v);
        } else {
            throw UsageError("invalid list item '" + part + "' for '" + key + "'");
        }
    }
    if (result.empty()) throw UsageError("empty list for '" + key + "'");
    for (int v : result) {
        if (v < 1) throw UsageError("sizes in '" + key + "' must be at least 1");
    }
    return result;
}

using Setter = std::function<void(CliConfig&, std::string const& key, std::string const& value)>;

std::map<std::string, Setter> const& setters() {
    static std::map<std::string, Setter> const table = [] {
        std::map<std::string, Setter> t;
        auto num = [](auto member) {
            return [member](CliConfig& c, std::string const& k, std::string const& v) {
                using T = std::remove_reference_t<decltype(member(c))>;
                member(c) = parse_number<T>(k, v);
            };
        };
        auto path = [](auto member) {
            return [member](CliConfig& c, std::string const&, std::string const& v) { member(c) = v; };
        };
        // top level
        t["length"] = num([](CliConfig& c) -> std::size_t& { return c.protocol.sequence_length; });
        t["train_fraction"] = num([](CliConfig& c) -> double& { return c.protocol.train_fraction; });
        t["seeds"] = num([](CliConfig& c) -> int& { return c.protocol.seeds_per_machine; });
        t["seed"] = num([](CliConfig& c) -> std::uint64_t& { return c.protocol.global_seed; });
        t["jobs"] = num([](CliConfig& c) -> int& { return c.jobs; });
        t["n_states"] = num([](CliConfig& c) -> int& { return c.n_states; });
        t["draws"] = num([](CliConfig& c) -> int& { return c.draws; });
        t["verbosity"] = num([](CliConfig& c) -> int& { return c.verbosity; });
        t["library"] = path([](CliConfig& c) -> std::filesystem::path& { return c.library; });
        t["store"] = path([](CliConfig& c) -> std::filesystem::path& { return c.store; });
        t["out"] = path([](CliConfig& c) -> std::filesystem::path& { return c.out; });
        t["machine"] = [](CliConfig& c, std::string const&, std::string const& v) { c.machine = v; };
        t["family"] = [](CliConfig& c, std::string const& k, std::string const& v) {
            try {
                c.family = parse_family(v);
            } catch (std::invalid_argument const&) {
                throw UsageError("unknown family '" + v + "' for '" + k + "'");
            }
        };
        t["size"] = [](CliConfig& c, std::string const& k, std::string const& v) {
            c.size = parse_number<int>(k, v);
        };
        t["families"] = [](CliConfig& c, std::string const& k, std::string const& v) {
            std::vector<Family> families;
            for (auto const& name : split(v, ',')) {
                try {
                    families.push_back(parse_family(name));
                } catch (std::invalid_argument const&) {
                    throw UsageError("unknown family '" + name + "' in '" + k + "'");
                }
            }
            if (families.empty()) throw UsageError("empty family list");
            c.protocol.families = families;
        };
        t["exclude_zero_rate"] = [](CliConfig& c, std::string const& k, std::string const& v) {
            c.protocol.exclude_zero_rate = parse_bool(k, v);
        };
        // [logistic]
        t["logistic.l2"] = num([](CliConfig& c) -> double& { return c.protocol.logistic.l2_strength; });
        t["logistic.max_iter"] = num([](CliConfig& c) -> std::size_t& { return c.protocol.logistic.max_iterations; });
        // [glm]
        t["glm.orders"] = [](CliConfig& c, std::string const& k, std::string const& v) {
            c.protocol.grids[Family::glm] = parse_int_list(k, v);
        };
        // [reservoir]
        t["reservoir.sizes"] = [](CliConfig& c, std::string const& k, std::string const& v) {
            c.protocol.grids[Family::reservoir] = parse_int_list(k, v);
        };
        t["reservoir.spectral_radius"] =
            num([](CliConfig& c) -> double& { return c.protocol.reservoir.spectral_radius; });
        t["reservoir.encoding"] = [](CliConfig& c, std::string const& k, std::string const& v) {
            try {
                c.protocol.reservoir.encoding = parse_input_encoding(v);
            } catch (std::invalid_argument const&) {
                throw UsageError("unknown encoding '" + v + "' for '" + k + "'");
            }
        };
        // [lstm]
        t["lstm.sizes"] = [](CliConfig& c, std::string const& k, std::string const& v) {
            c.protocol.grids[Family::lstm] = parse_int_list(k, v);
        };
        t["lstm.learning_rate"] = num([](CliConfig& c) -> double& { return c.protocol.lstm.learning_rate; });
        t["lstm.epochs"] = num([](CliConfig& c) -> int& { return c.protocol.lstm.epochs; });
        t["lstm.window"] = num([](CliConfig& c) -> std::size_t& { return c.protocol.lstm.window; });
        t["lstm.init_stddev"] = num([](CliConfig& c) -> double& { return c.protocol.lstm.init_stddev; });
        t["lstm.clip_norm"] = num([](CliConfig& c) -> double& { return c.protocol.lstm.clip_norm; });
        t["lstm.cell_output"] = [](CliConfig& c, std::string const& k, std::string const& v) {
            try {
                c.protocol.lstm.cell_output = parse_cell_output(v);
            } catch (std::invalid_argument const&) {
                throw UsageError("unknown cell output '" + v + "' for '" + k + "'");
            }
        };
        t["lstm.beta1"] = num([](CliConfig& c) -> double& { return c.protocol.lstm.beta1; });
        t["lstm.beta2"] = num([](CliConfig& c) -> double& { return c.protocol.lstm.beta2; });
        t["lstm.optimizer"] = [](CliConfig& c, std::string const& k, std::string const& v) {
            try {
                c.protocol.lstm.optimizer = parse_optimizer(v);
            } catch (std::invalid_argument const&) {
                throw UsageError("unknown optimizer '" + v + "' for '" + k + "'");
            }
        };
        // [curve]
        auto regrid = [](CliConfig& c, auto update) {
            auto const& b = c.protocol.betas;
            double lo = b.size() > 1 ? b[1] : 1e-2;
            double hi = b.size() > 1 ? b.back() : 1e3;
            std::size_t count = b.size();
            update(count, lo, hi);
            c.protocol.betas = default_beta_grid(count, lo, hi);
        };
        t["curve.beta_count"] = [regrid](CliConfig& c, std::string const& k, std::string const& v) {
            auto const n = parse_number<std::size_t>(k, v);
            if (n < 1) throw UsageError("beta_count must be positive");
            regrid(c, [n](std::size_t& count, double&, double&) { count = n; });
        };
        t["curve.beta_min"] = [regrid](CliConfig& c, std::string const& k, std::string const& v) {
            double const x = parse_number<double>(k, v);
            regrid(c, [x](std::size_t&, double& lo, double&) { lo = x; });
        };
        t["curve.beta_max"] = [regrid](CliConfig& c, std::string const& k, std::string const& v) {
            double const x = parse_number<double>(k, v);
            regrid(c, [x](std::size_t&, double&, double& hi) { hi = x; });
        };
        // [report]
        t["report.hist_bins"] = num([](CliConfig& c) -> std::size_t& { return c.histogram.bins; });
        t["report.hist_min"] = num([](CliConfig& c) -> double& { return c.histogram.lo; });
        t["report.hist_max"] = num([](CliConfig& c) -> double& { return c.histogram.hi; });
        return t;
    }();
    return table;
}

void apply(CliConfig& config, std::string const& key, std::string const& value, std::string const& where) {
    auto const& table = setters();
    auto it = table.find(key);
    if (it == table.end()) throw UsageError(where + "unknown key '" + key + "'");
    it->second(config, key, value);
}

void check_semantics(CliConfig const& c) {
    try {
        c.protocol.check();
    } catch (std::invalid_argument const& e) {
        throw UsageError(e.what());
    }
    if (c.jobs < 1) throw UsageError("jobs must be at least 1");
    if (c.draws < 1) throw UsageError("draws must be at least 1");
    if (c.histogram.bins < 1 || !(c.histogram.hi > c.histogram.lo)) {
        throw UsageError("histogram needs at least one bin and hist_max > hist_min");
    }
    if (c.size && *c.size < 1) throw UsageError("size must be at least 1");
}

}  // namespace

Command parse_command(std::string const& name) {
    for (Command c : {Command::enumerate, Command::stats, Command::curve, Command::run, Command::suite,
                      Command::report}) {
        if (to_string(c) == name) return c;
    }
    throw UsageError("unknown command '" + name + "'");
}

std::string_view to_string(Command command) noexcept {
    switch (command) {
        case Command::enumerate: return "enumerate";
        case Command::stats: return "stats";
        case Command::curve: return "curve";
        case Command::run: return "run";
        case Command::suite: return "suite";
        case Command::report: return "report";
    }
    return "?";
}

CliConfig parse_config(std::string const& file_text, Overrides const& overrides, std::string const& source) {
    CliConfig config;
    std::istringstream in(file_text);
    std::string raw;
    std::string section;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string text = raw.substr(0, raw.find('#'));
        text = trim(text);
        if (text.empty()) continue;
        std::string const where = source + ":" + std::to_string(line) + ": ";
        if (text.front() == '[') {
            if (text.back() != ']') throw UsageError(where + "malformed section header");
            section = trim(text.substr(1, text.size() - 2));
            static std::set<std::string> const known{"glm", "reservoir", "lstm", "logistic", "curve", "report"};
            if (!known.contains(section)) throw UsageError(where + "unknown section '" + section + "'");
            continue;
        }
        auto const eq = text.find('=');
        if (eq == std::string::npos) throw UsageError(where + "expected 'key = value'");
        std::string const key = trim(text.substr(0, eq));
        std::string const value = trim(text.substr(eq + 1));
        apply(config, section.empty() ? key : section + "." + key, value, where);
    }
    for (auto const& [key, value] : overrides) apply(config, key, value, "override: ");
    check_semantics(config);
    return config;
}

CliConfig parse_config_file(std::optional<std::filesystem::path> const& path, Overrides const& overrides) {
    if (!path) return parse_config("", overrides);
    std::ifstream in(*path);
    if (!in) throw UsageError("config file '" + path->string() + "' not found");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), overrides, path->string());
}

void check_paths(CliConfig const& config) {
    auto require = [](std::filesystem::path const& p, char const* what) {
        if (!std::filesystem::exists(p)) throw UsageError(std::string(what) + " '" + p.string() + "' does not exist");
    };
    switch (config.command) {
        case Command::enumerate:
            break;
        case Command::stats:
        case Command::curve:
        case Command::run:
        case Command::suite:
            require(config.library, "machine library");
            break;
        case Command::report:
            require(config.store, "record store");
            break;
    }
}

namespace {

std::string file_safe(std::string const& id) {
    std::string s;
    for (char ch : id) {
        bool const ok = std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' || ch == '.';
        s += ok ? ch : '_';
    }
    return s;
}

std::vector<Pdfa> select_machines(CliConfig const& config) {
    auto machines = read_library(config.library);
    if (config.machine.empty()) return machines;
    for (auto& m : machines) {
        if (m.machine_id() == config.machine) return {std::move(m)};
    }
    throw UsageError("machine '" + config.machine + "' not found in '" + config.library.string() + "'");
}

int do_enumerate(CliConfig const& c, std::ostream& out, std::ostream& err) {
    if (c.n_states < 1 || c.n_states > kMaxEnumeratedStates) {
        throw UsageError("n_states must be in 1.." + std::to_string(kMaxEnumeratedStates));
    }
    std::filesystem::create_directories(c.out);
    std::ofstream topo(c.out / "topologies.txt", std::ios::binary | std::ios::trunc);
    for (int n = 1; n <= c.n_states; ++n) {
        auto const topologies = enumerate_topologies(n);
        write_topologies(topo, topologies);
        out << "n=" << n << ": " << topologies.size() << " topologies\n";
    }
    std::vector<std::string> skipped;
    auto const machines = build_library(c.n_states, c.draws, c.protocol.global_seed, &skipped);
    if (c.library.has_parent_path()) std::filesystem::create_directories(c.library.parent_path());
    write_library(c.library, machines);
    for (auto const& id : skipped) err << "degenerate topology skipped: " << id << '\n';
    out << "wrote " << machines.size() << " machines to " << c.library.string() << '\n';
    return 0;
}

int do_stats(CliConfig const& c, std::ostream& out) {
    auto const machines = select_machines(c);
    std::filesystem::create_directories(c.out);
    std::ostringstream csv;
    csv << "machine_id,n_states,h_mu_nats,C_mu_nats,A_opt,R_opt_nats\n";
    for (auto const& m : machines) {
        auto const s = summarize(m);
        csv << m.machine_id() << ',' << m.n_states() << ',' << format_double(s.entropy_rate_nats) << ','
            << format_double(s.statistical_complexity_nats) << ',' << format_double(s.optimal_accuracy)
            << ',' << format_double(s.optimal_rate_nats) << '\n';
    }
    std::ofstream file(c.out / "stats.csv", std::ios::binary | std::ios::trunc);
    file << csv.str();
    if (!file) throw Error("cannot write stats.csv");
    out << csv.str();
    return 0;
}

int do_curve(CliConfig const& c, std::ostream& out) {
    auto const machines = select_machines(c);
    auto const dir = c.out / "curves";
    std::filesystem::create_directories(dir);
    for (auto const& m : machines) {
        auto const pi = stationary_distribution(m);
        auto const curve = trace_curve(m, pi, c.protocol.betas);
        auto const path = dir / (file_safe(m.machine_id()) + ".csv");
        std::ofstream file(path, std::ios::binary | std::ios::trunc);
        write_curve_csv(file, curve);
        if (!file) throw Error("cannot write " + path.string());
        out << m.machine_id() << ": " << curve.points.size() << " points";
        if (!curve.unconverged_betas.empty()) out << " (" << curve.unconverged_betas.size() << " betas unconverged)";
        out << " -> " << path.string() << '\n';
    }
    return 0;
}

int do_run(CliConfig const& c, std::ostream& out) {
    auto machines = select_machines(c);
    if (machines.empty()) throw Error("machine library is empty");
    auto const context = prepare_machine(machines.front(), c.protocol);
    std::vector<int> grid = c.size ? std::vector<int>{*c.size} : c.protocol.grids.at(c.family);
    for (int seed = 0; seed < c.protocol.seeds_per_machine; ++seed) {
        auto const sweep = sweep_family(context, c.family, grid, c.protocol, seed);
        for (auto const& r : sweep.records) out << record_to_json_line(r) << '\n';
        if (sweep.family_failed()) {
            out << "# every grid point failed\n";
            return 1;
        }
        auto const& best = sweep.records[*sweep.best];
        out << "# best " << to_string(best.family) << " size " << best.size << ": distortion "
            << best.normalized_distortion_pct << "%\n";
    }
    return 0;
}

int do_suite(CliConfig const& c, std::ostream& out, std::ostream& err) {
    auto const machines = read_library(c.library);
    if (c.store.has_parent_path()) std::filesystem::create_directories(c.store.parent_path());
    RecordStore store(c.store);
    SuiteOptions options;
    options.jobs = c.jobs;
    if (c.verbosity > 0) {
        options.progress = [&err](std::size_t done, std::size_t total, std::string const& id) {
            err << "[" << done << "/" << total << "] " << id << '\n';
        };
    }
    auto const report = run_suite(machines, c.protocol, store, options);
    out << "computed " << report.computed << " records, reused " << report.reused << ", skipped "
        << report.skipped_machines.size() << " zero-rate machines\n";
    return 0;
}

int do_report(CliConfig const& c, std::ostream& out, std::ostream& err) {
    auto const records = read_records(c.store);
    if (records.empty()) {
        err << "no records\n";
        return 1;
    }
    auto const summary = aggregate(records, c.histogram);
    write_summary_csvs(c.out, summary, records);
    char line[160];
    out << "family       records  mean_dist%  opt_mean%  opt_max%  mean_distance\n";
    for (auto const& s : summary.families) {
        std::snprintf(line, sizeof line, "%-10s %9zu %11.3f %10.3f %9.3f %14.4f\n",
                      std::string(to_string(s.family)).c_str(), s.records, s.mean_distortion,
                      s.optimized_mean_distortion, s.optimized_max_distortion, s.mean_distance);
        out << line;
    }
    for (auto const& r : summary.regressions) {
        std::snprintf(line, sizeof line, "regression %-10s %-15s R^2 = %.4f\n",
                      std::string(to_string(r.family)).c_str(), r.target.c_str(), r.r_squared);
        out << line;
    }
    for (auto const& note : summary.regression_notes) err << "regression skipped: " << note << '\n';
    return 0;
}

}  // namespace

int execute(CliConfig const& config, std::ostream& out, std::ostream& err) {
    check_paths(config);
    switch (config.command) {
        case Command::enumerate: return do_enumerate(config, out, err);
        case Command::stats: return do_stats(config, out);
        case Command::curve: return do_curve(config, out);
        case Command::run: return do_run(config, out);
        case Command::suite: return do_suite(config, out, err);
        case Command::report: return do_report(config, out, err);
    }
    return 1;
}

int main(int argc, char** argv) {
    ::CLI::App app{"Benchmark time-series predictors against causal-state optimal prediction"};
    std::string command;
    std::optional<std::string> config_path;
    Overrides overrides;
    std::vector<std::string> sets;

    app.add_option("command", command, "enumerate | stats | curve | run | suite | report")->required();
    app.add_option("--config", config_path, "config file (key = value, [sections])");
    auto flag = [&](char const* name, char const* key, char const* help) {
        app.add_option_function<std::string>(
            name, [&overrides, key](std::string const& v) { overrides.emplace_back(key, v); }, help);
    };
    flag("--jobs", "jobs", "worker threads");
    flag("--seed", "seed", "global seed");
    flag("--out", "out", "output directory");
    flag("--library", "library", "machine library (JSON lines)");
    flag("--store", "store", "record store (JSON lines)");
    flag("--n-states", "n_states", "largest machine size to enumerate (1-4)");
    flag("--length", "length", "sequence length");
    flag("--families", "families", "comma-separated families");
    flag("--machine", "machine", "machine id for run/curve/stats");
    flag("--family", "family", "family for run");
    flag("--size", "size", "single grid size for run");
    app.add_option("--set", sets, "override any key, e.g. --set lstm.epochs=20");

    try {
        app.parse(argc, argv);
    } catch (::CLI::ParseError const& e) {
        int const code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        for (auto const& s : sets) {
            auto const eq = s.find('=');
            if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + s + "'");
            overrides.emplace_back(trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
        }
        std::optional<std::filesystem::path> path;
        if (config_path) path = *config_path;
        CliConfig config = parse_config_file(path, overrides);
        config.command = parse_command(command);
        return execute(config, std::cout, std::cerr);
    } catch (UsageError const& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (std::exception const& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace pdfabench::cli
