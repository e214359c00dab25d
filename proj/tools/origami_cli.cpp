#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "ori/analysis.hpp"
#include "ori/fold.hpp"
#include "ori/io.hpp"
#include "ori/stitch.hpp"
#include "ori/unit.hpp"

namespace {

using nlohmann::json;

// Relative output paths land in $ORIGAMI_OUT_DIR when it is set.
std::string out_path(const std::string& p) {
    if (p.empty() || std::filesystem::path(p).is_absolute()) return p;
    const char* dir = std::getenv("ORIGAMI_OUT_DIR");
    if (!dir || !*dir) return p;
    return (std::filesystem::path(dir) / p).string();
}

void ensure_parent_dir(const std::string& path) {
    auto parent = std::filesystem::path(path).parent_path();
    if (parent.empty()) return;
    std::error_code ec;
    std::filesystem::create_directories(parent, ec);
    if (ec) throw ori::IoError("cannot create directory " + parent.string());
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// Config file values fill in options the command line left unset.
class ConfigFile {
   public:
    explicit ConfigFile(const std::string& path) {
        if (path.empty()) return;
        try {
            data_ = json::parse(ori::read_text_file(path));
        } catch (const json::exception& e) {
            throw ori::IoError("config " + path + ": " + e.what());
        }
        if (!data_.is_object()) throw ori::UsageError("config must be a JSON object");
    }

    template <typename T>
    void apply(const CLI::Option* opt, const std::string& key, T& value) {
        known_.push_back(key);
        if (!data_.contains(key) || (opt && opt->count() > 0)) return;
        try {
            value = data_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ori::UsageError("config key '" + key + "' has the wrong type");
        }
    }

    void apply_inputs(const CLI::Option*, std::map<std::string, double>& inputs) {
        known_.push_back("inputs");
        if (!data_.contains("inputs")) return;
        const json& in = data_.at("inputs");
        if (!in.is_object())
            throw ori::UsageError("config key 'inputs' must map names to degrees");
        for (auto it = in.begin(); it != in.end(); ++it) {
            if (inputs.count(it.key())) continue;  // flags override
            try {
                inputs[it.key()] = it.value().get<double>();
            } catch (const json::exception&) {
                throw ori::UsageError("config input '" + it.key() + "' is not a number");
            }
        }
    }

    void finish() const {
        for (auto it = data_.begin(); it != data_.end(); ++it)
            if (std::find(known_.begin(), known_.end(), it.key()) == known_.end())
                throw ori::UsageError("config key '" + it.key() + "' is not recognized");
    }

   private:
    json data_ = json::object();
    std::vector<std::string> known_;
};

double parse_degrees(const std::string& what, const std::string& text) {
    try {
        size_t used = 0;
        double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument("trailing text");
        return v;
    } catch (const std::exception&) {
        throw ori::UsageError(what + ": '" + text + "' is not a number");
    }
}

std::pair<int, int> parse_units(const std::string& text) {
    auto x = text.find('x');
    if (x == std::string::npos || x == 0 || x + 1 >= text.size())
        throw ori::UsageError("--units expects MxN, e.g. 2x3");
    int m = 0, n = 0;
    try {
        m = std::stoi(text.substr(0, x));
        n = std::stoi(text.substr(x + 1));
    } catch (const std::exception&) {
        throw ori::UsageError("--units expects MxN, e.g. 2x3");
    }
    if (m < 1 || n < 1) throw ori::UsageError("--units needs positive counts");
    return {m, n};
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    size_t pos = 0;
    while (pos <= s.size()) {
        size_t next = s.find(sep, pos);
        if (next == std::string::npos) next = s.size();
        out.push_back(s.substr(pos, next - pos));
        pos = next + 1;
    }
    return out;
}

ori::LengthProfile make_profile(const std::string& name, double base, double q) {
    if (name == "uniform") return ori::LengthProfile::uniform(base);
    if (name == "quadratic") {
        if (q <= -4.0) throw ori::UsageError("--length-q must be greater than -4");
        return ori::LengthProfile::quadratic(base, q);
    }
    throw ori::UsageError("profile must be 'uniform' or 'quadratic', got '" + name + "'");
}

// ---------------------------------------------------------------- unit solve

struct UnitSolveArgs {
    int family = 0;
    std::vector<std::string> inputs;
    uint64_t seed = 0;
    std::string out;
    double tol = 0.0;  // 0 = per-family default
    bool validate_only = false;
    std::string config;
};

int cmd_unit_solve(UnitSolveArgs& a, CLI::App* sub) {
    std::map<std::string, double> deg;
    for (const std::string& kv : a.inputs) {
        auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0)
            throw ori::UsageError("--input expects name=degrees, e.g. b11=110");
        deg[kv.substr(0, eq)] = parse_degrees("--input " + kv.substr(0, eq), kv.substr(eq + 1));
    }

    ConfigFile cfg(a.config);
    cfg.apply(sub->get_option("--family"), "family", a.family);
    cfg.apply(sub->get_option("--seed"), "seed", a.seed);
    cfg.apply(sub->get_option("--out"), "out", a.out);
    cfg.apply(sub->get_option("--tol"), "tol", a.tol);
    cfg.apply_inputs(sub->get_option("--input"), deg);
    cfg.finish();

    if (a.family < 1 || a.family > 6)
        throw ori::UsageError("--family must be one of 1, 2, 3, 4, 5, 6");
    ori::FamilyInfo info = ori::family_info(a.family);
    for (const std::string& name : info.default_inputs)
        if (!deg.count(name)) {
            std::string need;
            for (const std::string& n : info.default_inputs) need += " " + n;
            throw ori::UsageError("family " + std::to_string(a.family) +
                                  " requires --input <name>=<degrees> for:" + need);
        }

    ori::UnitSpec spec;
    spec.family = a.family;
    spec.seed = a.seed;
    for (const auto& [name, d] : deg) {
        if (!(d > 0.0 && d < 180.0))
            throw ori::UsageError("input " + name + " must lie in (0, 180) degrees");
        spec.free_inputs[name] = ori::deg2rad(d);
    }
    if (a.out.empty() && !a.validate_only)
        throw ori::UsageError("--out is required (or pass --validate-only)");

    double tol = a.tol > 0.0 ? a.tol : (a.family == 6 ? 1e-11 : 1e-12);
    ori::UnitSolution sol = ori::solve_unit(spec, tol);
    double implied = ori::implied_residuals(a.family, sol.angles).max_abs();

    std::printf("family %d solved: residual %s, implied seam residual %s, rank %d\n",
                a.family, fmt("%.3e", sol.residual_norm).c_str(),
                fmt("%.3e", implied).c_str(), sol.jacobian_rank);
    if (!a.validate_only) {
        std::string path = out_path(a.out);
        ensure_parent_dir(path);
        ori::write_text_file(path, ori::unit_solution_to_json(sol));
        std::printf("wrote %s\n", path.c_str());
    }
    return 0;
}

// ----------------------------------------------------------------------- fold

struct FoldArgs {
    std::string fixture, units = "1x1", drive_range, out, profile = "uniform";
    double drive = std::numeric_limits<double>::quiet_NaN();
    int frames = 1;
    double base_length = 1.0, length_q = 1.0;
    bool validate_only = false;
    std::string config;
};

int cmd_fold(FoldArgs& a, CLI::App* sub) {
    ConfigFile cfg(a.config);
    cfg.apply(sub->get_option("--fixture"), "fixture", a.fixture);
    cfg.apply(sub->get_option("--units"), "units", a.units);
    cfg.apply(sub->get_option("--drive"), "drive", a.drive);
    cfg.apply(sub->get_option("--drive-range"), "drive-range", a.drive_range);
    cfg.apply(sub->get_option("--frames"), "frames", a.frames);
    cfg.apply(sub->get_option("--out"), "out", a.out);
    cfg.apply(sub->get_option("--profile"), "profile", a.profile);
    cfg.apply(sub->get_option("--base-length"), "base-length", a.base_length);
    cfg.apply(sub->get_option("--length-q"), "length-q", a.length_q);
    cfg.finish();

    if (a.fixture.empty()) throw ori::UsageError("--fixture is required");
    if (a.frames < 1) throw ori::UsageError("--frames must be at least 1");
    if (a.out.empty() && !a.validate_only)
        throw ori::UsageError("--out is required (or pass --validate-only)");
    auto [m, n] = parse_units(a.units);

    double rho_start = 0.0, rho_end = 0.0;
    if (!a.drive_range.empty()) {
        auto colon = a.drive_range.find(':', 1);
        if (colon == std::string::npos)
            throw ori::UsageError("--drive-range expects A:B in degrees, e.g. -80:-10");
        rho_start = ori::deg2rad(
            parse_degrees("--drive-range", a.drive_range.substr(0, colon)));
        rho_end = ori::deg2rad(
            parse_degrees("--drive-range", a.drive_range.substr(colon + 1)));
    } else if (std::isfinite(a.drive)) {
        // ramp from flat-ish toward the requested drive
        rho_end = ori::deg2rad(a.drive);
        rho_start = rho_end / a.frames;
    } else {
        throw ori::UsageError("pass --drive or --drive-range (degrees)");
    }
    if (!(std::abs(rho_start) < ori::kPi && std::abs(rho_end) < ori::kPi))
        throw ori::UsageError("drive angles must lie in (-180, 180) degrees");

    ori::UnitSolution sol = ori::unit_solution_from_json(ori::read_text_file(a.fixture));
    ori::AngleField angles = ori::tile({sol, m, n});
    ori::LengthProfile prof = make_profile(a.profile, a.base_length, a.length_q);
    double col_scale = ori::balanced_col_scale(angles, prof, prof);
    ori::LengthField lengths =
        ori::propagate_lengths(angles, prof, ori::scaled_profile(prof, col_scale));
    ori::DriveSpec drive;

    std::vector<ori::SweepFrame> frames;
    try {
        frames = ori::sweep(angles, lengths, drive, rho_start, rho_end, a.frames);
    } catch (const ori::KinematicInfeasible& e) {
        std::string msg = e.what();
        try {
            auto iv = ori::feasible_drive_interval(angles, drive);
            msg += "\nfeasible drive interval is approximately [" +
                   fmt("%.2f", ori::rad2deg(iv.first)) + ", " +
                   fmt("%.2f", ori::rad2deg(iv.second)) + "] degrees";
        } catch (const ori::NumericError&) {
        }
        throw ori::KinematicInfeasible(msg);
    }

    double worst_planarity = 0.0, worst_length = 0.0;
    for (const auto& fr : frames) {
        worst_planarity = std::max(worst_planarity, fr.planarity);
        worst_length = std::max(worst_length, fr.length_err);
    }
    std::printf("fold: %dx%d units, %d frames, max planarity %s, max length error %s\n",
                m, n, a.frames, fmt("%.3e", worst_planarity).c_str(),
                fmt("%.3e", worst_length).c_str());
    if (worst_planarity > 1e-9 || worst_length > 1e-9)
        throw ori::NumericError("fold gates failed: planarity " +
                                fmt("%.3e", worst_planarity) + ", length error " +
                                fmt("%.3e", worst_length));

    if (a.validate_only) return 0;

    std::string dir = out_path(a.out);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ori::IoError("cannot create directory " + dir);

    json manifest;
    manifest["command"] = "fold";
    manifest["fixture"] = a.fixture;
    manifest["family"] = sol.family;
    manifest["units"] = {m, n};
    manifest["profile"] = a.profile;
    manifest["base_length"] = a.base_length;
    if (a.profile == "quadratic") manifest["length_q"] = a.length_q;
    manifest["col_seed_scale"] = col_scale;
    manifest["angle_units"] = "degrees";
    json frame_list = json::array();
    for (size_t k = 0; k < frames.size(); ++k) {
        char name[32];
        std::snprintf(name, sizeof name, "frame_%03zu.obj", k);
        ori::write_obj(frames[k].state.mesh, (std::filesystem::path(dir) / name).string());
        json fj;
        fj["file"] = name;
        fj["drive_deg"] = ori::rad2deg(frames[k].rho);
        fj["planarity"] = frames[k].planarity;
        fj["max_length_error"] = frames[k].length_err;
        frame_list.push_back(fj);
    }
    manifest["frames"] = frame_list;
    ori::write_text_file((std::filesystem::path(dir) / "manifest.json").string(),
                         manifest.dump(2) + "\n");
    std::printf("wrote %zu frames to %s\n", frames.size(), dir.c_str());
    return 0;
}

// ----------------------------------------------------------------- analyze-r2

struct AnalyzeArgs {
    std::string fixture, counts = "1,4,9,25,49", profiles = "uniform,quadratic";
    double drive = std::numeric_limits<double>::quiet_NaN();
    std::string out;
    int stride = 1, jobs = 1;
    double base_length = 1.0, length_q = 1.0;
    bool validate_only = false;
    std::string config;
};

int cmd_analyze_r2(AnalyzeArgs& a, CLI::App* sub) {
    ConfigFile cfg(a.config);
    cfg.apply(sub->get_option("--fixture"), "fixture", a.fixture);
    cfg.apply(sub->get_option("--counts"), "counts", a.counts);
    cfg.apply(sub->get_option("--profiles"), "profiles", a.profiles);
    cfg.apply(sub->get_option("--drive"), "drive", a.drive);
    cfg.apply(sub->get_option("--out"), "out", a.out);
    cfg.apply(sub->get_option("--stride"), "stride", a.stride);
    cfg.apply(sub->get_option("--jobs"), "jobs", a.jobs);
    cfg.apply(sub->get_option("--base-length"), "base-length", a.base_length);
    cfg.apply(sub->get_option("--length-q"), "length-q", a.length_q);
    cfg.finish();

    if (a.fixture.empty()) throw ori::UsageError("--fixture is required");
    if (!std::isfinite(a.drive)) throw ori::UsageError("--drive is required (degrees)");
    if (a.out.empty() && !a.validate_only)
        throw ori::UsageError("--out is required (or pass --validate-only)");
    if (a.stride < 1) throw ori::UsageError("--stride must be at least 1");
    if (a.jobs < 1) throw ori::UsageError("--jobs must be at least 1");

    std::vector<int> sides;
    for (const std::string& tok : split(a.counts, ',')) {
        if (tok.empty()) throw ori::UsageError("--counts has an empty entry");
        int c = 0;
        try {
            c = std::stoi(tok);
        } catch (const std::exception&) {
            throw ori::UsageError("--counts entry '" + tok + "' is not an integer");
        }
        int s = static_cast<int>(std::lround(std::sqrt(static_cast<double>(c))));
        if (c < 1 || s * s != c)
            throw ori::UsageError("unit counts are square patch sizes (1, 4, 9, 25, 49); got " + tok);
        sides.push_back(s);
    }
    if (sides.empty()) throw ori::UsageError("--counts needs at least one entry");

    std::vector<std::string> profs = split(a.profiles, ',');
    if (profs.empty() || (profs.size() == 1 && profs[0].empty()))
        throw ori::UsageError("--profiles needs at least one entry");
    bool q_given = sub->get_option("--length-q")->count() > 0;
    for (const std::string& p : profs) {
        make_profile(p, a.base_length, a.length_q);  // validate names early
        if (p == "quadratic" && !q_given)
            std::printf("quadratic profile: using default q = %s\n",
                        fmt("%.2f", a.length_q).c_str());
    }

    ori::UnitSolution sol = ori::unit_solution_from_json(ori::read_text_file(a.fixture));
    const double rho = ori::deg2rad(a.drive);

    struct Task {
        std::string profile;
        int side = 1, count = 1;
        double r2 = 0.0;
    };
    std::vector<Task> tasks;
    for (const std::string& p : profs)
        for (int s : sides) tasks.push_back({p, s, s * s, 0.0});

    std::atomic<size_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    auto worker = [&]() {
        for (;;) {
            size_t k = next.fetch_add(1);
            if (k >= tasks.size()) return;
            try {
                Task& t = tasks[k];
                ori::AngleField angles = ori::tile({sol, t.side, t.side});
                ori::LengthProfile prof = make_profile(t.profile, a.base_length, a.length_q);
                double cs = ori::balanced_col_scale(angles, prof, prof);
                ori::LengthField lengths = ori::propagate_lengths(
                    angles, prof, ori::scaled_profile(prof, cs));
                ori::FoldState st = ori::reconstruct(angles, lengths, {1, 1, rho});
                double row = ori::ruling_r2(st.mesh, ori::RulingDirection::row, a.stride).min_r2;
                double col = ori::ruling_r2(st.mesh, ori::RulingDirection::col, a.stride).min_r2;
                t.r2 = std::max(row, col);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    size_t nthreads = std::min<size_t>(static_cast<size_t>(a.jobs), tasks.size());
    if (nthreads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    std::string csv = "profile";
    for (int s : sides) csv += "," + std::to_string(s * s);
    csv += "\n";
    for (const std::string& p : profs) {
        csv += p;
        for (int s : sides)
            for (const Task& t : tasks)
                if (t.profile == p && t.side == s) csv += "," + fmt("%.5f", t.r2);
        csv += "\n";
    }
    std::fputs(csv.c_str(), stdout);
    if (!a.validate_only) {
        std::string path = out_path(a.out);
        ensure_parent_dir(path);
        ori::write_text_file(path, csv);
        std::printf("wrote %s\n", path.c_str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "origami: solve sector-angle units, tile and fold quad-mesh patterns,\n"
        "and fit the folded states against ruled limit surfaces.\n"
        "Angles on the command line are degrees; files store radians.\n"
        "Relative --out paths land in $ORIGAMI_OUT_DIR when it is set."};
    app.require_subcommand(1);

    CLI::App* unit = app.add_subcommand("unit", "sector-angle unit operations");
    unit->require_subcommand(1);
    CLI::App* usolve = unit->add_subcommand("solve", "solve one family's angle unit");
    UnitSolveArgs ua;
    usolve->add_option("--family", ua.family, "family number, 1..6")->required();
    usolve->add_option("--input", ua.inputs, "free input, name=degrees (repeatable)");
    usolve->add_option("--seed", ua.seed, "restart seed");
    usolve->add_option("--out", ua.out, "output JSON path");
    usolve->add_option("--tol", ua.tol, "residual tolerance (default 1e-12, family 6 1e-11)");
    usolve->add_flag("--validate-only", ua.validate_only, "solve and report, write nothing");
    usolve->add_option("--config", ua.config, "JSON config mirroring the flags");

    CLI::App* fold = app.add_subcommand("fold", "tile a unit and fold it");
    FoldArgs fa;
    fold->add_option("--fixture", fa.fixture, "unit-solution JSON");
    fold->add_option("--units", fa.units, "tiling MxN (default 1x1)");
    fold->add_option("--drive", fa.drive, "target drive fold angle, degrees");
    fold->add_option("--drive-range", fa.drive_range, "sweep range A:B, degrees");
    fold->add_option("--frames", fa.frames, "number of frames (default 1)");
    fold->add_option("--out", fa.out, "output directory for OBJ frames + manifest");
    fold->add_option("--profile", fa.profile, "crease-length profile: uniform|quadratic");
    fold->add_option("--base-length", fa.base_length, "base crease length (default 1)");
    fold->add_option("--length-q", fa.length_q, "quadratic profile coefficient, > -4");
    fold->add_flag("--validate-only", fa.validate_only, "run all gates, write nothing");
    fold->add_option("--config", fa.config, "JSON config mirroring the flags");

    CLI::App* an = app.add_subcommand("analyze-r2", "ruling straightness table");
    AnalyzeArgs aa;
    an->add_option("--fixture", aa.fixture, "unit-solution JSON");
    an->add_option("--counts", aa.counts, "unit counts, e.g. 1,4,9,25,49");
    an->add_option("--profiles", aa.profiles, "length profiles, e.g. uniform,quadratic");
    an->add_option("--drive", aa.drive, "drive fold angle, degrees");
    an->add_option("--out", aa.out, "output CSV path");
    an->add_option("--stride", aa.stride, "vertex subsampling stride (default 1)");
    an->add_option("--jobs", aa.jobs, "max parallel workers (default 1)");
    an->add_option("--base-length", aa.base_length, "base crease length (default 1)");
    an->add_option("--length-q", aa.length_q, "quadratic profile coefficient, > -4");
    an->add_flag("--validate-only", aa.validate_only, "compute and print, write nothing");
    an->add_option("--config", aa.config, "JSON config mirroring the flags");

    try {
        app.parse(argc, argv);
        if (usolve->parsed()) return cmd_unit_solve(ua, usolve);
        if (fold->parsed()) return cmd_fold(fa, fold);
        if (an->parsed()) return cmd_analyze_r2(aa, an);
        throw ori::UsageError("no command given");
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    } catch (const ori::UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const ori::IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const ori::NumericError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 2;
    }
}
