// bellnoise command line driver: built-in inequality tables, single
// evaluations, threshold searches, parameter sweeps, reference tables and
// the fast invariant suite. Every run logs its fully resolved configuration
// (seed included) to stderr so outputs are reproducible from their logs.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "bellnoise/detection.hpp"
#include "bellnoise/inequality.hpp"
#include "bellnoise/optimize.hpp"
#include "bellnoise/qstate.hpp"
#include "bellnoise/scan.hpp"
#include "bellnoise/selfcheck.hpp"

namespace {

using namespace bellnoise;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

int default_jobs() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void log_config(const std::string& subcommand,
                const std::vector<std::pair<std::string, std::string>>& entries) {
    std::cerr << "# resolved configuration (" << subcommand << ")\n";
    for (const auto& [k, v] : entries) std::cerr << "# " << k << " = " << v << "\n";
}

NoiseKind parse_noise_kind(const std::string& name) {
    if (name == "colored-pp") return NoiseKind::ColoredPhotonPhoton;
    if (name == "colored-ap") return NoiseKind::ColoredAtomPhoton;
    if (name == "white") return NoiseKind::White;
    if (name == "mixed") return NoiseKind::Mixed;
    throw CLI::ValidationError("--noise", "unknown noise kind '" + name + "'");
}

DetectorModel parse_detector(const std::string& name) {
    if (name == "symmetric") return DetectorModel::Symmetric;
    if (name == "one-sided-perfect" || name == "one-sided") return DetectorModel::OneSidedPerfect;
    throw CLI::ValidationError("--detector", "unknown detector model '" + name + "'");
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw parse_error("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Inequality flag: a built-in name or a path to an inequality file.
BellFunctional load_inequality(const std::string& ref) {
    std::string lower = ref;
    for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (lower == "chsh" || lower == "i3322" || lower == "a5")
        return BellFunctional::builtin(lower);
    std::string name = ref;
    const auto slash = name.find_last_of('/');
    if (slash != std::string::npos) name = name.substr(slash + 1);
    return BellFunctional::parse(read_file(ref), name);
}

// Grid syntax: "lo:hi:step" or a comma-separated list.
std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> grid;
    if (text.find(':') != std::string::npos) {
        double lo = 0, hi = 0, step = 0;
        char c1 = 0, c2 = 0;
        std::istringstream ss(text);
        if (!(ss >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':' || step <= 0)
            throw parse_error("bad grid '" + text + "' (want lo:hi:step or v1,v2,...)");
        for (double v = lo; v <= hi + 1e-12; v += step) grid.push_back(std::min(v, hi));
    } else {
        std::istringstream ss(text);
        std::string tok;
        while (std::getline(ss, tok, ','))
            if (!tok.empty()) grid.push_back(std::stod(tok));
    }
    if (grid.empty()) throw parse_error("empty grid '" + text + "'");
    return grid;
}

// Settings file: `A <index> <phi> <nu>` / `B <index> <phi> <nu>` lines,
// radians, '#' comments; every index of each party exactly once.
SettingsAssignment load_settings_file(const std::string& path, int n_a, int n_b) {
    const std::string text = read_file(path);
    std::istringstream in(text);
    std::vector<bool> have_a(n_a, false), have_b(n_b, false);
    SettingsAssignment s;
    s.alice.resize(n_a);
    s.bob.resize(n_b);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        std::istringstream ls(hash == std::string::npos ? raw : raw.substr(0, hash));
        std::string side;
        if (!(ls >> side)) continue;
        int index = 0;
        double phi = 0, nu = 0;
        if ((side != "A" && side != "B") || !(ls >> index >> phi >> nu))
            throw parse_error("expected 'A|B <index> <phi> <nu>'", line_no);
        const int limit = side == "A" ? n_a : n_b;
        if (index < 0 || index >= limit)
            throw parse_error("setting index out of range for side " + side, line_no);
        auto& have = side == "A" ? have_a : have_b;
        if (have[index]) throw parse_error("duplicate setting " + side + " " + std::to_string(index), line_no);
        have[index] = true;
        (side == "A" ? s.alice : s.bob)[index] = MeasurementSetting(phi, nu);
    }
    for (int x = 0; x < n_a; ++x)
        if (!have_a[x]) throw parse_error("missing setting A " + std::to_string(x));
    for (int y = 0; y < n_b; ++y)
        if (!have_b[y]) throw parse_error("missing setting B " + std::to_string(y));
    return s;
}

// State file: `theta <radians>` (required), `noise <kind>`, `p <x>`, `w <x>`.
struct StateSpec {
    double theta = 0.0;
    NoiseKind kind = NoiseKind::ColoredPhotonPhoton;
    double p = 0.0;
    double w = 0.0;

    NoiseSpec noise() const { return {kind, p, w}; }
};

StateSpec load_state_file(const std::string& path) {
    const std::string text = read_file(path);
    std::istringstream in(text);
    StateSpec st;
    bool have_theta = false;
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        std::istringstream ls(hash == std::string::npos ? raw : raw.substr(0, hash));
        std::string key;
        if (!(ls >> key)) continue;
        if (key == "theta") {
            if (!(ls >> st.theta)) throw parse_error("bad theta line", line_no);
            have_theta = true;
        } else if (key == "noise") {
            std::string kind;
            if (!(ls >> kind)) throw parse_error("bad noise line", line_no);
            st.kind = parse_noise_kind(kind);
        } else if (key == "p") {
            if (!(ls >> st.p)) throw parse_error("bad p line", line_no);
        } else if (key == "w") {
            if (!(ls >> st.w)) throw parse_error("bad w line", line_no);
        } else {
            throw parse_error("unknown key '" + key + "'", line_no);
        }
    }
    if (!have_theta) throw parse_error("state file lacks a theta line");
    return st;
}

struct SearchFlags {
    int starts = 1000;
    std::uint64_t seed = 0;
    double gradient_step = 1e-6;
    double gradient_tol = 1e-8;
    int max_iterations = 2000;
    double violation_floor = 0.0;
    double penalty_weight = 1000.0;
    int jobs = default_jobs();

    void attach(CLI::App* cmd, bool with_floor = true) {
        cmd->add_option("--starts", starts, "Number of multistart samples")
            ->capture_default_str();
        cmd->add_option("--seed", seed, "Seed for the start generator")->capture_default_str();
        cmd->add_option("--gradient-step", gradient_step, "Central-difference half step")
            ->capture_default_str();
        cmd->add_option("--gradient-tol", gradient_tol, "Convergence gradient norm")
            ->capture_default_str();
        cmd->add_option("--max-iterations", max_iterations, "Iteration cap per start")
            ->capture_default_str();
        if (with_floor) {
            cmd->add_option("--violation-floor", violation_floor,
                            "Require an observable violation of at least this value")
                ->capture_default_str();
            cmd->add_option("--penalty-weight", penalty_weight,
                            "Linear penalty weight for the violation floor")
                ->capture_default_str();
        }
        cmd->add_option("--jobs", jobs, "Worker threads (results are order-independent)")
            ->envname("BELLNOISE_JOBS")
            ->capture_default_str();
    }

    SearchConfig config() const {
        SearchConfig cfg;
        cfg.n_starts = starts;
        cfg.seed = seed;
        cfg.gradient_step = gradient_step;
        cfg.gradient_tol = gradient_tol;
        cfg.max_iterations = max_iterations;
        cfg.violation_floor = violation_floor;
        cfg.penalty_weight = penalty_weight;
        cfg.jobs = jobs;
        return cfg;
    }

    std::vector<std::pair<std::string, std::string>> log_entries() const {
        return {{"starts", std::to_string(starts)},
                {"seed", std::to_string(seed)},
                {"gradient-step", fmt(gradient_step)},
                {"gradient-tol", fmt(gradient_tol)},
                {"max-iterations", std::to_string(max_iterations)},
                {"violation-floor", fmt(violation_floor)},
                {"penalty-weight", fmt(penalty_weight)},
                {"jobs", std::to_string(jobs)}};
    }
};

void print_state_table(const TwoQubitState& rho) {
    static const char* labels[4] = {"HH", "HV", "VH", "VV"};
    std::printf("# basis order: |HH>, |HV>, |VH>, |VV>\n");
    for (int i = 0; i < 4; ++i) {
        std::printf("%s", labels[i]);
        for (int j = 0; j < 4; ++j) {
            const auto z = rho.matrix()(i, j);
            std::printf("  %.12g%+.12gi", z.real(), z.imag());
        }
        std::printf("\n");
    }
}

double scan_ratio(double theta) { return detail::entanglement_ratio_of(theta); }

void print_outcome(const BellFunctional& f, const OptimizationOutcome& out) {
    if (out.eta.violation())
        std::printf("eta_crit = %s\n", fmt(out.eta.value()).c_str());
    else
        std::printf("eta_crit = no-violation\n");
    std::printf("ideal_value = %s\n", fmt(out.ideal_value).c_str());
    std::printf("theta = %s\n", fmt(out.theta).c_str());
    std::printf("cs = %s\n", fmt(scan_ratio(out.theta)).c_str());
    std::printf("best_objective = %s\n", fmt(out.best_objective).c_str());
    std::printf("converged_fraction = %s\n", fmt(out.converged_fraction).c_str());
    std::printf("distinct_minima = %d\n", out.distinct_minima);
    const auto s = decode_settings(out.best, f.settings_a(), f.settings_b());
    for (int x = 0; x < f.settings_a(); ++x)
        std::printf("A %d %s %s\n", x, fmt(s.alice[x].phi).c_str(), fmt(s.alice[x].nu).c_str());
    for (int y = 0; y < f.settings_b(); ++y)
        std::printf("B %d %s %s\n", y, fmt(s.bob[y].phi).c_str(), fmt(s.bob[y].nu).c_str());
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Critical detection efficiency for two-qubit Bell tests under colored, "
                 "white and mixed noise"};
    app.require_subcommand(1);
    // `bellnoise --config file <cmd>`: the file holds `key = value` lines
    // under a [cmd] section ('#' comments); explicit flags win over the file.
    app.set_config("--config", "",
                   "Read options from a 'key = value' file with [subcommand] sections");

    // ---- list ----------------------------------------------------------
    auto* cmd_list = app.add_subcommand("list", "Print the built-in inequalities");
    cmd_list->callback([&] {
        log_config("list", {});
        for (const char* name : {"chsh", "i3322", "a5"}) {
            const auto f = BellFunctional::builtin(name);
            std::printf("%s: %d Alice settings, %d Bob settings, local bound %s\n",
                        f.name().c_str(), f.settings_a(), f.settings_b(), f.bound().str().c_str());
            std::printf("%s\n", f.serialize().c_str());
        }
    });

    // ---- state ---------------------------------------------------------
    auto* cmd_state = app.add_subcommand("state", "Print a constructed state as a 4x4 table");
    double st_theta = 0.0, st_p = 0.0, st_w = 0.0;
    std::string st_noise = "colored-pp";
    cmd_state->add_option("--theta", st_theta, "State angle in radians")->required();
    cmd_state->add_option("--noise", st_noise, "colored-pp|colored-ap|white|mixed")
        ->capture_default_str();
    cmd_state->add_option("--p", st_p, "Colored noise level")->capture_default_str();
    cmd_state->add_option("--w", st_w, "White noise level")->capture_default_str();
    cmd_state->callback([&] {
        log_config("state", {{"theta", fmt(st_theta)},
                             {"noise", st_noise},
                             {"p", fmt(st_p)},
                             {"w", fmt(st_w)}});
        print_state_table(make_noisy(st_theta, {parse_noise_kind(st_noise), st_p, st_w}));
    });

    // ---- eval ----------------------------------------------------------
    auto* cmd_eval = app.add_subcommand(
        "eval", "Evaluate an inequality on a state and a settings file");
    std::string ev_ineq = "chsh", ev_state_file, ev_settings_file, ev_detector = "symmetric";
    std::string ev_noise = "colored-pp";
    double ev_theta = pi / 4, ev_p = 0.0, ev_w = 0.0;
    cmd_eval->add_option("--ineq", ev_ineq, "Built-in name or inequality file")
        ->capture_default_str();
    cmd_eval->add_option("--state-file", ev_state_file,
                         "State description file (theta/noise/p/w lines)");
    cmd_eval->add_option("--settings-file", ev_settings_file, "Measurement settings file")
        ->required();
    cmd_eval->add_option("--detector", ev_detector, "symmetric|one-sided-perfect")
        ->capture_default_str();
    cmd_eval->add_option("--theta", ev_theta, "State angle (ignored with --state-file)")
        ->capture_default_str();
    cmd_eval->add_option("--noise", ev_noise, "Noise kind (ignored with --state-file)")
        ->capture_default_str();
    cmd_eval->add_option("--p", ev_p, "Colored level (ignored with --state-file)")
        ->capture_default_str();
    cmd_eval->add_option("--w", ev_w, "White level (ignored with --state-file)")
        ->capture_default_str();
    cmd_eval->callback([&] {
        StateSpec st;
        if (!ev_state_file.empty()) {
            st = load_state_file(ev_state_file);
        } else {
            st.theta = ev_theta;
            st.kind = parse_noise_kind(ev_noise);
            st.p = ev_p;
            st.w = ev_w;
        }
        log_config("eval", {{"ineq", ev_ineq},
                            {"state-file", ev_state_file.empty() ? "(flags)" : ev_state_file},
                            {"settings-file", ev_settings_file},
                            {"detector", ev_detector},
                            {"theta", fmt(st.theta)},
                            {"noise", to_string(st.kind)},
                            {"p", fmt(st.p)},
                            {"w", fmt(st.w)}});
        const auto f = load_inequality(ev_ineq);
        const auto s = load_settings_file(ev_settings_file, f.settings_a(), f.settings_b());
        const auto d = evaluate(f, make_noisy(st.theta, st.noise()), s);
        const auto ec = eta_crit(d, parse_detector(ev_detector));
        std::printf("J = %s\n", fmt(d.j).c_str());
        std::printf("K_A = %s\n", fmt(d.k_a).c_str());
        std::printf("K_B = %s\n", fmt(d.k_b).c_str());
        std::printf("ideal_value = %s\n", fmt(d.ideal_value()).c_str());
        if (ec.violation())
            std::printf("eta_crit = %s\n", fmt(ec.value()).c_str());
        else
            std::printf("eta_crit = no-violation\n");
    });

    // ---- etacrit -------------------------------------------------------
    auto* cmd_eta = app.add_subcommand("etacrit", "Multistart search for the threshold");
    std::string et_ineq = "chsh", et_detector = "symmetric", et_noise = "colored-pp";
    std::string et_theta = "free";
    double et_p = 0.0, et_w = 0.0;
    SearchFlags et_search;
    cmd_eta->add_option("--ineq", et_ineq, "Built-in name or inequality file")
        ->capture_default_str();
    cmd_eta->add_option("--detector", et_detector, "symmetric|one-sided-perfect")
        ->capture_default_str();
    cmd_eta->add_option("--noise", et_noise, "colored-pp|colored-ap|white|mixed")
        ->capture_default_str();
    cmd_eta->add_option("--p", et_p, "Colored noise level")->capture_default_str();
    cmd_eta->add_option("--w", et_w, "White noise level")->capture_default_str();
    cmd_eta->add_option("--theta", et_theta, "'free' or a fixed angle in radians")
        ->capture_default_str();
    et_search.attach(cmd_eta);
    cmd_eta->callback([&] {
        auto entries = et_search.log_entries();
        entries.insert(entries.begin(), {{"ineq", et_ineq},
                                         {"detector", et_detector},
                                         {"noise", et_noise},
                                         {"p", fmt(et_p)},
                                         {"w", fmt(et_w)},
                                         {"theta", et_theta}});
        log_config("etacrit", entries);
        const auto f = load_inequality(et_ineq);
        const ThetaMode tm =
            et_theta == "free" ? ThetaMode::free() : ThetaMode::fixed(std::stod(et_theta));
        const auto out = multistart(f, parse_detector(et_detector),
                                    {parse_noise_kind(et_noise), et_p, et_w}, tm,
                                    et_search.config());
        print_outcome(f, out);
    });

    // ---- scan ----------------------------------------------------------
    auto* cmd_scan = app.add_subcommand("scan", "Run a parameter sweep and write CSV");
    std::string sc_mode = "p-sweep", sc_ineq = "chsh", sc_detector = "symmetric";
    std::string sc_noise = "colored-pp", sc_out;
    std::string sc_pgrid = "0:0.3:0.01", sc_csgrid = "0.05:1.0:0.05", sc_wgrid = "0:0.1:0.02";
    SearchFlags sc_search;
    cmd_scan->add_option("--mode", sc_mode, "p-sweep|cs-sweep|surface|mixed-sweep")
        ->capture_default_str();
    cmd_scan->add_option("--ineq", sc_ineq, "Comma list of built-ins/files, or 'all'")
        ->capture_default_str();
    cmd_scan->add_option("--detector", sc_detector, "symmetric|one-sided-perfect")
        ->capture_default_str();
    cmd_scan->add_option("--noise", sc_noise, "Comma list of noise kinds")
        ->capture_default_str();
    cmd_scan->add_option("--p-grid", sc_pgrid, "Noise levels (lo:hi:step or list)")
        ->capture_default_str();
    cmd_scan->add_option("--cs-grid", sc_csgrid, "Entanglement ratios (cs-sweep/surface)")
        ->capture_default_str();
    cmd_scan->add_option("--w-grid", sc_wgrid, "White levels (mixed-sweep)")
        ->capture_default_str();
    cmd_scan->add_option("--out", sc_out, "Output CSV path (default: stdout)");
    sc_search.attach(cmd_scan);
    cmd_scan->callback([&] {
        auto entries = sc_search.log_entries();
        entries.insert(entries.begin(), {{"mode", sc_mode},
                                         {"ineq", sc_ineq},
                                         {"detector", sc_detector},
                                         {"noise", sc_noise},
                                         {"p-grid", sc_pgrid},
                                         {"cs-grid", sc_csgrid},
                                         {"w-grid", sc_wgrid},
                                         {"out", sc_out.empty() ? "(stdout)" : sc_out}});
        log_config("scan", entries);

        SweepSpec spec;
        if (sc_mode == "p-sweep") spec.mode = SweepMode::PSweep;
        else if (sc_mode == "cs-sweep") spec.mode = SweepMode::CsSweep;
        else if (sc_mode == "surface") spec.mode = SweepMode::Surface;
        else if (sc_mode == "mixed-sweep") spec.mode = SweepMode::MixedSweep;
        else throw CLI::ValidationError("--mode", "unknown sweep mode '" + sc_mode + "'");

        if (sc_ineq == "all") {
            spec.inequalities = {BellFunctional::chsh(), BellFunctional::i3322(),
                                 BellFunctional::a5()};
        } else {
            std::istringstream ss(sc_ineq);
            std::string tok;
            while (std::getline(ss, tok, ','))
                if (!tok.empty()) spec.inequalities.push_back(load_inequality(tok));
        }
        spec.detector = parse_detector(sc_detector);
        {
            std::istringstream ss(sc_noise);
            std::string tok;
            while (std::getline(ss, tok, ','))
                if (!tok.empty()) spec.noise_kinds.push_back(parse_noise_kind(tok));
        }
        spec.p_grid = parse_grid(sc_pgrid);
        spec.cs_grid = parse_grid(sc_csgrid);
        spec.w_grid = parse_grid(sc_wgrid);
        spec.search = sc_search.config();
        spec.output_path = sc_out;

        std::vector<SweepRow> rows;
        switch (spec.mode) {
            case SweepMode::PSweep: rows = sweep_p(spec); break;
            case SweepMode::CsSweep: rows = sweep_cs(spec); break;
            case SweepMode::Surface: rows = violation_surface(spec); break;
            case SweepMode::MixedSweep: rows = mixed_sweep(spec); break;
            case SweepMode::Table: break;
        }

        for (const auto& row : rows) {
            const auto it = std::find_if(
                spec.inequalities.begin(), spec.inequalities.end(),
                [&](const BellFunctional& f) { return f.name() == row.inequality; });
            if (it == spec.inequalities.end() || !verify_row(row, *it))
                throw numeric_error("row re-verification failed for inequality " +
                                    row.inequality);
        }

        if (sc_out.empty()) {
            write_csv(rows, std::cout);
        } else {
            std::ofstream out(sc_out, std::ios::binary);
            if (!out) throw parse_error("cannot open output file: " + sc_out);
            write_csv(rows, out);
            std::cerr << "# wrote " << rows.size() << " rows to " << sc_out << "\n";
        }
    });

    // ---- table ---------------------------------------------------------
    auto* cmd_table = app.add_subcommand(
        "table", "Reproduce a bundled reference configuration (I or II)");
    std::string tb_which = "I", tb_out;
    SearchFlags tb_search;
    cmd_table->add_option("--which", tb_which, "I (CHSH photon-photon) or II (I3322 atom-photon)")
        ->capture_default_str();
    cmd_table->add_option("--out", tb_out, "Also write the rows as CSV");
    tb_search.attach(cmd_table, /*with_floor=*/false);
    cmd_table->callback([&] {
        auto entries = tb_search.log_entries();
        entries.insert(entries.begin(), {{"which", tb_which}});
        log_config("table", entries);
        ReferenceTable which;
        if (tb_which == "I" || tb_which == "1") which = ReferenceTable::I;
        else if (tb_which == "II" || tb_which == "2") which = ReferenceTable::II;
        else throw CLI::ValidationError("--which", "expected I or II");
        const auto rows = reproduce_table(which, tb_search.config());
        std::printf("p,cs,ideal_value,eta_crit\n");
        for (const auto& row : rows)
            std::printf("%s,%s,%s,%s\n", fmt(row.p).c_str(), fmt(row.cs).c_str(),
                        fmt(row.ideal_value).c_str(),
                        row.eta.violation() ? fmt(row.eta.value()).c_str() : "no-violation");
        if (!tb_out.empty()) {
            std::ofstream out(tb_out, std::ios::binary);
            if (!out) throw parse_error("cannot open output file: " + tb_out);
            write_csv(rows, out);
        }
    });

    // ---- check ---------------------------------------------------------
    auto* cmd_check = app.add_subcommand("check", "Run the fast invariant suite");
    std::uint64_t ck_seed = 1;
    cmd_check->add_option("--seed", ck_seed, "Seed for the randomized checks")
        ->capture_default_str();
    cmd_check->callback([&] {
        log_config("check", {{"seed", std::to_string(ck_seed)}});
        const auto results = run_self_checks(ck_seed);
        bool all = true;
        for (const auto& r : results) {
            std::printf("[%s] %s%s%s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(),
                        r.detail.empty() ? "" : ": ", r.detail.c_str());
            all = all && r.pass;
        }
        if (!all) throw numeric_error("invariant suite failed");
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const numeric_error& e) {
        std::cerr << "numeric-integrity error: " << e.what() << "\n";
        return 2;
    } catch (const parse_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
