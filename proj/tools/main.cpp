// Command-line front end: run registered scenarios, design gains for the
// catalogued plants, re-check stored runs, list the catalogue.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>

#include "idesmc/config.hpp"
#include "idesmc/scenario.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace idesmc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;

std::string default_out_root() {
    if (const char* env = std::getenv("IDESMC_OUT")) return env;
    return "runs";
}

Params parse_overrides(const std::vector<std::string>& kvs) {
    Params p;
    for (const auto& kv : kvs) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("override must be key=value: " + kv);
        p[trim(kv.substr(0, eq))] = std::stod(kv.substr(eq + 1));
    }
    return p;
}

void print_report(const std::string& name, const ScenarioOutput& out, std::ostream& os) {
    os << "scenario: " << name << "\n";
    for (const auto& [k, v] : out.scalars) os << "  " << k << " = " << v << "\n";
    for (const auto& c : out.checks)
        os << "  [" << (c.pass ? "PASS" : "FAIL") << "] " << c.name << " (value "
           << c.value << ", threshold " << c.threshold << ") " << c.detail << "\n";
}

json checks_to_json(const ScenarioOutput& out) {
    json j;
    j["scalars"] = out.scalars;
    j["checks"] = json::array();
    for (const auto& c : out.checks)
        j["checks"].push_back({{"name", c.name},
                               {"pass", c.pass},
                               {"value", c.value},
                               {"threshold", c.threshold},
                               {"detail", c.detail}});
    j["all_pass"] = out.all_pass();
    return j;
}

int run_one(const std::string& name, const Params& overrides, const fs::path& outroot,
            bool emit) {
    const ScenarioOutput out = run_scenario(name, overrides);
    print_report(name, out, std::cout);
    if (emit) {
        const fs::path dir = outroot / name;
        fs::create_directories(dir);
        for (const auto& [tname, traj] : out.trajectories)
            write_csv_file(traj, (dir / (tname + ".csv")).string());
        json manifest;
        manifest["scenario"] = name;
        manifest["overrides"] = overrides;
        manifest["results"] = checks_to_json(out);
        std::ofstream(dir / "manifest.json") << manifest.dump(2) << "\n";
        std::ofstream rep(dir / "report.txt");
        print_report(name, out, rep);
        std::cout << "  outputs in " << dir.string() << "\n";
    }
    return out.all_pass() ? kExitOk : kExitCheckFailed;
}

int cmd_run(const std::string& scenario, bool all, bool parallel,
            const std::vector<std::string>& override_kvs, std::string outdir,
            const std::string& config_path, bool no_emit) {
    Params overrides;
    std::string name = scenario;
    if (!config_path.empty()) {
        const Config cfg = parse_config_file(config_path);
        if (cfg.has("run", "scenario") && name.empty()) name = cfg.str("run", "scenario");
        if (cfg.has("run", "out") && outdir.empty()) outdir = cfg.str("run", "out");
        if (cfg.sections.count("overrides"))
            for (const auto& [k, v] : cfg.sections.at("overrides"))
                overrides[k] = std::stod(v);
    }
    for (const auto& [k, v] : parse_overrides(override_kvs)) overrides[k] = v;
    const fs::path outroot = outdir.empty() ? default_out_root() : outdir;

    if (all) {
        std::vector<std::string> names;
        for (const auto& s : scenario_registry()) names.push_back(s.name);
        int rc = kExitOk;
        if (parallel) {
            std::vector<std::future<int>> futs;
            for (const auto& n : names)
                futs.push_back(std::async(std::launch::async, [&, n] {
                    return run_one(n, overrides.empty() ? Params{} : overrides, outroot,
                                   !no_emit);
                }));
            for (auto& f : futs) rc = std::max(rc, f.get());
        } else {
            for (const auto& n : names)
                rc = std::max(rc, run_one(n, Params{}, outroot, !no_emit));
        }
        return rc;
    }
    if (name.empty()) {
        std::cerr << "run: scenario name required (or --all)\n";
        return kExitUsage;
    }
    return run_one(name, overrides, outroot, !no_emit);
}

LinearIdePlant heat_reduced_plant(double& y0_out, double& p_bar_out) {
    Params p = find_scenario("heat-paper").defaults;
    HeatConfig cfg = scen::heat_paper_config(p);
    const auto io = heat_io_kernel(cfg);
    LinearIdePlant plant;
    plant.A = MatrixXd::Constant(1, 1, io.drift);
    plant.B = MatrixXd::Constant(1, 1, io.CB);
    plant.Btilde = MatrixXd::Constant(1, 1, 1.0);
    plant.C = MatrixXd::Identity(1, 1);
    plant.kernel = io.kernel;
    plant.p = io.p;
    plant.gamma_bar = std::abs(p.at("gamma"));
    plant.p_bar = io.p_sup;
    y0_out = io.y0;
    p_bar_out = io.p_sup;
    return plant;
}

int cmd_design(const std::string& plant_name, double delta, double rho_override, double h,
               double horizon, const std::string& outfile) {
    LinearIdePlant plant;
    VectorXd x0;
    if (plant_name == "delay-4.1" || plant_name == "delay-4.1-m05") {
        plant = scen::delay_plant(plant_name == "delay-4.1" ? 1.0 : 0.5);
        x0.resize(3);
        x0 << 1.0, 1.0, -1.2;
    } else if (plant_name == "heat-paper") {
        double y0 = 0.0, pbar = 0.0;
        plant = heat_reduced_plant(y0, pbar);
        x0 = VectorXd::Constant(1, y0);
        if (horizon <= 0.0) horizon = 60.0;  // cover the slow-mode support
    } else {
        std::cerr << "design: unknown plant " << plant_name
                  << " (expected delay-4.1 | delay-4.1-m05 | heat-paper)\n";
        return kExitUsage;
    }
    if (horizon <= 0.0) horizon = 3.0;
    std::optional<double> ovr;
    if (rho_override > 0.0) ovr = rho_override;
    const DesignResult r = run_design(plant, x0, delta, 0.0, horizon, h, ovr);
    json j;
    j["plant"] = plant_name;
    j["feasible"] = r.feasible;
    j["M"] = r.M;
    j["rho"] = r.rho;
    j["rho_overridden"] = r.rho_overridden;
    j["delta"] = r.delta;
    j["T_max"] = r.T_max;
    j["P"] = std::vector<double>(r.P.data(), r.P.data() + r.P.size());
    j["Lambda"] = std::vector<double>(r.Lambda.data(), r.Lambda.data() + r.Lambda.size());
    j["diagnostics"] = r.diagnostics;
    std::cout << j.dump(2) << "\n";
    if (!outfile.empty()) std::ofstream(outfile) << j.dump(2) << "\n";
    return kExitOk;
}

int cmd_check(const std::string& dir) {
    const fs::path d = dir;
    std::ifstream mf(d / "manifest.json");
    if (!mf) {
        std::cerr << "check: no manifest.json under " << dir << "\n";
        return kExitUsage;
    }
    json manifest;
    mf >> manifest;
    const std::string name = manifest.at("scenario");
    Params overrides;
    if (manifest.contains("overrides"))
        for (const auto& [k, v] : manifest.at("overrides").items())
            overrides[k] = v.get<double>();
    std::map<std::string, Trajectory> trajs;
    for (const auto& e : fs::directory_iterator(d)) {
        if (e.path().extension() == ".csv")
            trajs[e.path().stem().string()] = read_csv_file(e.path().string());
    }
    std::map<std::string, double> scalars;
    if (manifest.contains("results") && manifest["results"].contains("scalars"))
        for (const auto& [k, v] : manifest["results"]["scalars"].items())
            scalars[k] = v.get<double>();
    const ScenarioOutput out = check_scenario(name, std::move(trajs), overrides, scalars);
    print_report(name, out, std::cout);
    return out.all_pass() ? kExitOk : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"discontinuous integro-differential plant simulation and SMC design"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "run a registered scenario");
    std::string scenario, outdir, config_path;
    std::vector<std::string> override_kvs;
    bool all = false, parallel = false, no_emit = false;
    run->add_option("scenario", scenario, "scenario name (see `list`)");
    run->add_flag("--all", all, "run every registered scenario with its defaults");
    run->add_flag("--parallel", parallel, "run --all scenarios concurrently");
    run->add_option("--out", outdir, "output directory root (default $IDESMC_OUT or ./runs)");
    run->add_option("--override", override_kvs, "parameter override key=value")
        ->take_all();
    run->add_option("--config", config_path, "config file with [run]/[overrides] sections");
    run->add_flag("--no-emit", no_emit, "skip CSV/report emission");

    auto* design = app.add_subcommand("design", "run the SMC design pipeline on a plant");
    std::string plant_name, design_out;
    double delta = 0.1, rho_override = 0.0, h = 1e-3, horizon = 0.0;
    design->add_option("--plant", plant_name, "delay-4.1 | delay-4.1-m05 | heat-paper")
        ->required();
    design->add_option("--delta", delta, "reaching margin (default 0.1)");
    design->add_option("--rho-override", rho_override, "explicit gain when M >= 1");
    design->add_option("--h", h, "grid step for the memory bound");
    design->add_option("--horizon", horizon, "memory-bound horizon");
    design->add_option("--out", design_out, "write the design summary JSON here");

    auto* check = app.add_subcommand("check", "re-evaluate assertions on a stored run");
    std::string check_dir;
    check->add_option("dir", check_dir, "run directory with manifest.json")->required();

    auto* list = app.add_subcommand("list", "list registered scenarios");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (run->parsed())
            return cmd_run(scenario, all, parallel, override_kvs, outdir, config_path,
                           no_emit);
        if (design->parsed())
            return cmd_design(plant_name, delta, rho_override, h, horizon, design_out);
        if (check->parsed()) return cmd_check(check_dir);
        if (list->parsed()) {
            for (const auto& s : scenario_registry())
                std::cout << s.name << "  -  " << s.description << "\n";
            return kExitOk;
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCheckFailed;
    }
    return kExitUsage;
}
