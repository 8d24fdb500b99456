// oktest — command-line front end for the one-vs-group testing toolkit.
//
// Subcommands:
//   simulate  replicated synthetic benchmarks -> raw TSV + summary JSON
//   test      case-vs-controls region testing -> region report JSON + Newick
//   spectrum  epoch recordings -> band-power matrix CSV
//   cluster   one region's similarity dendrogram -> Newick + merge JSON
//
// Every output file embeds a run-metadata block (command, version, seed,
// effective configuration): JSON files under a "run_metadata" key, CSV/TSV
// files in leading '#' comment lines, Newick files in a bracketed comment.
// Exit codes: 0 success, 2 usage error, 1 runtime failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ok/ad.hpp"
#include "ok/correction.hpp"
#include "ok/errors.hpp"
#include "ok/flr.hpp"
#include "ok/hetero.hpp"
#include "ok/regions.hpp"
#include "ok/simlab.hpp"
#include "ok/spectrum.hpp"
#include "ok/version.hpp"

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr std::uint64_t kDefaultSeed = 0x0defa117ULL;

// Usage problems detected after flag parsing (unknown names, empty inputs,
// out-of-range indices) exit with code 2, like flag errors.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

json meta_json(const std::string& command, std::uint64_t seed, json config) {
    json m;
    m["command"] = command;
    m["version"] = ok::kVersion;
    m["seed"] = seed;
    m["config"] = std::move(config);
    return m;
}

std::string meta_comment(const json& meta) {
    return "# run_metadata " + meta.dump() + "\n";
}

std::string meta_newick(const json& meta) {
    return "[run_metadata " + meta.dump() + "]\n";
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ok::IoError("cannot open for writing: " + path);
    out << content;
    if (!out) throw ok::IoError("write failed: " + path);
}

std::vector<ok::simlab::Method> parse_methods(const std::string& csv) {
    std::vector<ok::simlab::Method> methods;
    std::string token;
    std::istringstream in(csv);
    while (std::getline(in, token, ',')) {
        if (token.empty()) continue;
        try {
            methods.push_back(ok::simlab::method_from_name(token));
        } catch (const ok::InvalidRange&) {
            throw UsageError("unknown method '" + token +
                             "' (expected FLR, CFLR, PAD, CPAD, PMAD or ADM)");
        }
    }
    if (methods.empty()) throw UsageError("no methods given");
    return methods;
}

std::vector<std::string> split_csv_list(const std::string& csv) {
    std::vector<std::string> out;
    std::string token;
    std::istringstream in(csv);
    while (std::getline(in, token, ',')) {
        if (!token.empty()) out.push_back(token);
    }
    return out;
}

std::uint64_t method_tag(ok::simlab::Method m) {
    return static_cast<std::uint64_t>(m) + 1;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateOpts {
    std::string settings_csv;
    std::string methods_csv = "FLR,CFLR,PAD,CPAD,PMAD,ADM";
    int reps = 20;
    std::size_t n = 0;  // 0: setting default
    std::size_t k = 0;  // 0: setting default
    std::uint64_t seed = kDefaultSeed;
    std::string out_dir = ".";
    double alpha = 0.05;
    int p_max = 4;
    int grid_size = 50;
    double c_min = 0.5;
    double c_max = 0.999;
    int n_perm = 199;
    int n_bootstrap = 1;
};

int run_simulate(const SimulateOpts& opt) {
    const auto builtins = ok::simlab::builtin_settings();
    const auto ids = split_csv_list(opt.settings_csv);
    if (ids.empty()) throw UsageError("no settings given");
    for (const auto& id : ids) {
        if (!builtins.count(id)) {
            std::string known;
            for (const auto& [sid, _] : builtins) known += (known.empty() ? "" : ", ") + sid;
            throw UsageError("unknown setting '" + id + "' (known: " + known + ")");
        }
    }
    const auto methods = parse_methods(opt.methods_csv);
    if (opt.reps < 0) throw UsageError("--reps must be nonnegative");

    ok::simlab::RunnerConfig cfg;
    cfg.alpha = opt.alpha;
    cfg.p_max = opt.p_max;
    cfg.grid_size = opt.grid_size;
    cfg.c_min = opt.c_min;
    cfg.c_max = opt.c_max;
    cfg.n_perm = opt.n_perm;
    cfg.n_bootstrap = opt.n_bootstrap;

    const auto result = ok::simlab::run_experiment(ids, methods, opt.reps, opt.n, opt.k,
                                                   opt.seed, cfg);

    json config;
    config["settings"] = ids;
    {
        std::vector<std::string> names;
        for (auto m : methods) names.push_back(ok::simlab::method_name(m));
        config["methods"] = names;
    }
    config["replicates"] = opt.reps;
    config["n"] = opt.n;
    config["k"] = opt.k;
    config["alpha"] = cfg.alpha;
    config["p_max"] = cfg.p_max;
    config["grid_size"] = cfg.grid_size;
    config["c_min"] = cfg.c_min;
    config["c_max"] = cfg.c_max;
    config["n_perm"] = cfg.n_perm;
    config["n_bootstrap"] = cfg.n_bootstrap;
    config["em"] = {{"tol", cfg.em.tol}, {"max_iter", cfg.em.max_iter},
                    {"restarts", cfg.em.restarts}};
    const json meta = meta_json("simulate", opt.seed, config);

    fs::create_directories(opt.out_dir);
    const std::string raw_path = (fs::path(opt.out_dir) / "raw.tsv").string();
    const std::string summary_path = (fs::path(opt.out_dir) / "summary.json").string();
    const std::string screened_path =
        (fs::path(opt.out_dir) / "summary_screened.json").string();

    write_text_file(raw_path, meta_comment(meta) + ok::simlab::raw_tsv(result.raw));
    write_text_file(summary_path, ok::simlab::summary_json(result.summary, meta.dump()));
    write_text_file(screened_path,
                    ok::simlab::summary_json(result.screened_summary, meta.dump()));

    std::cout << "wrote " << raw_path << "\n"
              << "wrote " << summary_path << "\n"
              << "wrote " << screened_path << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// Shared matrix loading for test/cluster
// ---------------------------------------------------------------------------

struct LoadedStudy {
    ok::NamedBandPower kase;
    std::vector<ok::NamedBandPower> controls;
};

LoadedStudy load_study(const std::string& case_path,
                       const std::vector<std::string>& control_paths,
                       const std::string& expected_band) {
    if (control_paths.empty()) throw UsageError("at least one control file is required");
    LoadedStudy study;
    study.kase = ok::read_band_power_csv(case_path);
    if (!expected_band.empty() && study.kase.band_name != expected_band) {
        throw UsageError("case file carries band '" + study.kase.band_name +
                         "', expected '" + expected_band + "'");
    }
    for (const auto& path : control_paths) {
        auto nb = ok::read_band_power_csv(path);
        if (nb.matrix.n_regions != study.kase.matrix.n_regions) {
            throw ok::ShapeMismatch(path + ": region count " +
                                    std::to_string(nb.matrix.n_regions) +
                                    " differs from the case's " +
                                    std::to_string(study.kase.matrix.n_regions));
        }
        if (nb.band_name != study.kase.band_name) {
            throw ok::IoError(path + ": band '" + nb.band_name +
                              "' differs from the case's '" + study.kase.band_name + "'");
        }
        study.controls.push_back(std::move(nb));
    }
    return study;
}

std::string region_label(int index, int n_regions) {
    if (n_regions == ok::regions::kRegionCount) return ok::regions::region_name(index);
    return "region-" + std::to_string(index);
}

std::vector<double> row_vector(const ok::BandPowerMatrix& m, int region_index) {
    const auto row = m.region_row(region_index - 1);
    return {row.begin(), row.end()};
}

// ---------------------------------------------------------------------------
// test
// ---------------------------------------------------------------------------

struct TestOpts {
    std::string case_path;
    std::vector<std::string> control_paths;
    std::string methods_csv = "FLR";
    std::string band;  // optional expected band name
    double alpha = 0.01;
    std::uint64_t seed = kDefaultSeed;
    std::string out_dir = ".";
    int p_max = 4;
    int grid_size = 50;
    double c_min = 0.5;
    double c_max = 0.999;
    int n_perm = 199;
    int n_bootstrap = 1;
};

int run_test(const TestOpts& opt) {
    const auto methods = parse_methods(opt.methods_csv);
    const LoadedStudy study = load_study(opt.case_path, opt.control_paths, opt.band);
    const int a = study.kase.matrix.n_regions;

    std::vector<ok::BandPowerMatrix> control_matrices;
    for (const auto& nb : study.controls) control_matrices.push_back(nb.matrix);

    const auto em = ok::simlab::runner_em_profile();

    // Per-method raw p-values per region.  The two likelihood-ratio variants
    // come from one threshold-selection study.
    std::optional<std::vector<ok::flr::FlrResult>> flr_study_results;
    auto ensure_flr = [&]() {
        if (flr_study_results) return;
        ok::flr::FlrStudyConfig cfg;
        cfg.c_min = opt.c_min;
        cfg.c_max = opt.c_max;
        cfg.grid_size = opt.grid_size;
        cfg.p_max = opt.p_max;
        cfg.em = em;
        cfg.seed = ok::rng::derive(opt.seed, 0x0c11ULL, method_tag(ok::simlab::Method::Flr));
        cfg.n_bootstrap = opt.n_bootstrap;
        flr_study_results = ok::flr::flr_study(study.kase.matrix, control_matrices, cfg);
    };

    std::map<std::string, std::vector<double>> raw_by_method;
    for (const auto m : methods) {
        std::vector<double> ps(static_cast<std::size_t>(a), 1.0);
        const std::uint64_t mseed = ok::rng::derive(opt.seed, 0x0c11ULL, method_tag(m));
        switch (m) {
            case ok::simlab::Method::Flr:
                ensure_flr();
                for (int r = 0; r < a; ++r)
                    ps[static_cast<std::size_t>(r)] =
                        (*flr_study_results)[static_cast<std::size_t>(r)].p_raw;
                break;
            case ok::simlab::Method::Cflr:
                ensure_flr();
                for (int r = 0; r < a; ++r)
                    ps[static_cast<std::size_t>(r)] =
                        (*flr_study_results)[static_cast<std::size_t>(r)].p_cv;
                break;
            default:
                for (int r = 1; r <= a; ++r) {
                    const auto case_row = row_vector(study.kase.matrix, r);
                    std::vector<std::vector<double>> control_rows;
                    for (const auto& nb : study.controls)
                        control_rows.push_back(row_vector(nb.matrix, r));
                    double p = 1.0;
                    switch (m) {
                        case ok::simlab::Method::Pad:
                            p = ok::pad(case_row, control_rows, opt.n_perm, mseed).p_value;
                            break;
                        case ok::simlab::Method::Cpad:
                            p = ok::cpad(case_row, control_rows, opt.n_perm, mseed).p_value;
                            break;
                        case ok::simlab::Method::Pmad:
                            p = ok::pmad(case_row, control_rows, 0, mseed, opt.n_perm).p_value;
                            break;
                        case ok::simlab::Method::Adm:
                            p = ok::adm(case_row, control_rows, opt.n_perm, mseed).p_value;
                            break;
                        default:
                            break;
                    }
                    ps[static_cast<std::size_t>(r - 1)] = p;
                }
                break;
        }
        raw_by_method[ok::simlab::method_name(m)] = std::move(ps);
    }

    json config;
    config["case"] = opt.case_path;
    config["controls"] = opt.control_paths;
    config["band"] = study.kase.band_name;
    config["methods"] = split_csv_list(opt.methods_csv);
    config["alpha"] = opt.alpha;
    config["p_max"] = opt.p_max;
    config["grid_size"] = opt.grid_size;
    config["c_min"] = opt.c_min;
    config["c_max"] = opt.c_max;
    config["n_perm"] = opt.n_perm;
    config["n_bootstrap"] = opt.n_bootstrap;
    const json meta = meta_json("test", opt.seed, config);

    fs::create_directories(opt.out_dir);

    // BH adjustment per method across regions, then the heterogeneity check
    // for the significant ones, with a dendrogram sidecar each.
    struct MethodRegion {
        double p_raw = 1.0;
        double p_adjusted = 1.0;
        std::optional<bool> hc_approved;
        std::string dendrogram;  // sidecar filename when significant
    };
    std::map<std::string, std::vector<MethodRegion>> rows_by_method;

    for (const auto m : methods) {
        const std::string name = ok::simlab::method_name(m);
        const auto& raw = raw_by_method.at(name);
        const auto adjusted = ok::bh_adjust(raw);
        std::vector<MethodRegion> rows(static_cast<std::size_t>(a));
        const bool likelihood_backend =
            m == ok::simlab::Method::Flr || m == ok::simlab::Method::Cflr;
        const ok::PairTest pair_test =
            likelihood_backend ? ok::PairTest(ok::flr::flr_pair_test(opt.p_max, em))
                               : ok::ad_pair_test(opt.n_perm);
        const std::uint64_t hc_seed = ok::rng::derive(opt.seed, 0x6c17ULL, method_tag(m));
        for (int r = 1; r <= a; ++r) {
            auto& row = rows[static_cast<std::size_t>(r - 1)];
            row.p_raw = raw[static_cast<std::size_t>(r - 1)];
            row.p_adjusted = adjusted[static_cast<std::size_t>(r - 1)];
            if (row.p_adjusted > opt.alpha) continue;

            std::vector<std::vector<double>> subjects;
            subjects.push_back(row_vector(study.kase.matrix, r));
            for (const auto& nb : study.controls) subjects.push_back(row_vector(nb.matrix, r));
            const auto sim = ok::similarity_matrix(subjects, pair_test, hc_seed);
            const auto dendro = ok::average_linkage(sim);
            row.hc_approved = ok::hc_approved(dendro, 1);

            const std::string nwk_name = "region_" + std::to_string(r) + "_" + name + ".nwk";
            write_text_file((fs::path(opt.out_dir) / nwk_name).string(),
                            meta_newick(meta) + ok::export_newick(dendro) + "\n");
            row.dendrogram = nwk_name;
        }
        rows_by_method[name] = std::move(rows);
    }

    json report;
    report["run_metadata"] = meta;
    report["band"] = study.kase.band_name;
    report["alpha"] = opt.alpha;
    report["n_regions"] = a;
    {
        std::vector<std::string> names;
        for (auto m : methods) names.push_back(ok::simlab::method_name(m));
        report["methods"] = names;
    }
    report["regions"] = json::array();
    for (int r = 1; r <= a; ++r) {
        json region;
        region["region"] = r;
        region["name"] = region_label(r, a);
        region["results"] = json::object();
        for (const auto m : methods) {
            const std::string name = ok::simlab::method_name(m);
            const auto& row = rows_by_method.at(name)[static_cast<std::size_t>(r - 1)];
            json cell;
            cell["p_raw"] = row.p_raw;
            cell["p_adjusted"] = row.p_adjusted;
            if (row.hc_approved) {
                cell["hc_approved"] = *row.hc_approved;
                cell["dendrogram"] = row.dendrogram;
            }
            region["results"][name] = std::move(cell);
        }
        report["regions"].push_back(std::move(region));
    }

    const std::string report_path = (fs::path(opt.out_dir) / "report.json").string();
    write_text_file(report_path, report.dump(2) + "\n");

    long significant = 0;
    for (const auto& [name, rows] : rows_by_method)
        for (const auto& row : rows)
            if (row.hc_approved) ++significant;
    std::cout << "wrote " << report_path << "\n"
              << "significant region results: " << significant << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// spectrum
// ---------------------------------------------------------------------------

struct SpectrumOpts {
    std::string epoch_dir;
    std::string band = "delta";
    std::string region_map_path;
    std::string out_path;
    double sample_rate = 256.0;
    bool squared = false;
    int a = 0;  // 0: max region id in the map
    std::uint64_t seed = kDefaultSeed;
};

int run_spectrum(const SpectrumOpts& opt) {
    ok::Band band;
    try {
        band = ok::standard_band(opt.band);
    } catch (const ok::InvalidRange&) {
        std::string known;
        for (const auto& b : ok::standard_bands()) known += (known.empty() ? "" : ", ") + b.name;
        throw UsageError("unknown band '" + opt.band + "' (known: " + known + ")");
    }

    if (!fs::is_directory(opt.epoch_dir)) {
        throw UsageError("epoch directory not found: " + opt.epoch_dir);
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(opt.epoch_dir)) {
        if (!entry.is_regular_file()) continue;
        const auto ext = entry.path().extension().string();
        if (ext == ".csv" || ext == ".bin") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        throw UsageError("no epoch files (*.csv, *.bin) in " + opt.epoch_dir);
    }

    std::vector<ok::EpochTimeSeries> epochs;
    for (const auto& path : files) {
        epochs.push_back(path.extension() == ".bin"
                             ? ok::read_epoch_bin(path.string())
                             : ok::read_epoch_csv(path.string(), opt.sample_rate));
    }

    std::vector<int> region_map;
    {
        std::ifstream in(opt.region_map_path);
        if (!in) throw ok::IoError("cannot open region map: " + opt.region_map_path);
        int id = 0;
        while (in >> id) region_map.push_back(id);
        if (!in.eof()) {
            throw ok::IoError(opt.region_map_path + ": non-integer entry in region map");
        }
    }
    if (static_cast<int>(region_map.size()) != epochs.front().n_series) {
        throw ok::ShapeMismatch("region map has " + std::to_string(region_map.size()) +
                                " entries for " + std::to_string(epochs.front().n_series) +
                                " series");
    }
    int a = opt.a;
    if (a == 0)
        for (int id : region_map) a = std::max(a, id);
    if (a < 1) throw UsageError("no positive region ids in the map");

    ok::SpectrumConfig cfg;
    cfg.squared_magnitude = opt.squared;
    const auto matrix = ok::build_band_power_matrix(epochs, band, region_map, a, cfg);

    json config;
    config["epochs"] = opt.epoch_dir;
    {
        std::vector<std::string> names;
        for (const auto& f : files) names.push_back(f.filename().string());
        config["files"] = names;
    }
    config["band"] = opt.band;
    config["region_map"] = opt.region_map_path;
    config["sample_rate"] = opt.sample_rate;
    config["squared"] = opt.squared;
    config["regions"] = a;
    const json meta = meta_json("spectrum", opt.seed, config);

    ok::write_band_power_csv(opt.out_path, matrix, opt.band, meta_comment(meta));
    std::cout << "wrote " << opt.out_path << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// cluster
// ---------------------------------------------------------------------------

struct ClusterOpts {
    std::string case_path;
    std::vector<std::string> control_paths;
    int region = 0;
    std::string method = "PAD";
    std::string band;
    std::uint64_t seed = kDefaultSeed;
    std::string out_dir = ".";
    int p_max = 4;
    int n_perm = 199;
};

int run_cluster(const ClusterOpts& opt) {
    ok::simlab::Method method;
    try {
        method = ok::simlab::method_from_name(opt.method);
    } catch (const ok::InvalidRange&) {
        throw UsageError("unknown method '" + opt.method + "'");
    }
    const LoadedStudy study = load_study(opt.case_path, opt.control_paths, opt.band);
    const int a = study.kase.matrix.n_regions;
    if (opt.region < 1 || opt.region > a) {
        throw UsageError("region " + std::to_string(opt.region) + " outside 1.." +
                         std::to_string(a));
    }

    std::vector<std::vector<double>> subjects;
    subjects.push_back(row_vector(study.kase.matrix, opt.region));
    for (const auto& nb : study.controls)
        subjects.push_back(row_vector(nb.matrix, opt.region));

    const bool likelihood_backend =
        method == ok::simlab::Method::Flr || method == ok::simlab::Method::Cflr;
    const ok::PairTest pair_test =
        likelihood_backend
            ? ok::PairTest(ok::flr::flr_pair_test(opt.p_max, ok::simlab::runner_em_profile()))
            : ok::ad_pair_test(opt.n_perm);
    const std::uint64_t hc_seed = ok::rng::derive(opt.seed, 0x6c17ULL, method_tag(method));

    const auto sim = ok::similarity_matrix(subjects, pair_test, hc_seed);
    const auto dendro = ok::average_linkage(sim);
    const bool approved = ok::hc_approved(dendro, 1);

    json config;
    config["case"] = opt.case_path;
    config["controls"] = opt.control_paths;
    config["region"] = opt.region;
    config["method"] = ok::simlab::method_name(method);
    config["band"] = study.kase.band_name;
    config["p_max"] = opt.p_max;
    config["n_perm"] = opt.n_perm;
    const json meta = meta_json("cluster", opt.seed, config);

    fs::create_directories(opt.out_dir);
    const std::string nwk_path = (fs::path(opt.out_dir) / "dendrogram.nwk").string();
    write_text_file(nwk_path, meta_newick(meta) + ok::export_newick(dendro) + "\n");

    json merges_doc;
    merges_doc["run_metadata"] = meta;
    merges_doc["region"] = opt.region;
    merges_doc["name"] = region_label(opt.region, a);
    merges_doc["method"] = ok::simlab::method_name(method);
    merges_doc["hc_approved"] = approved;
    merges_doc["dendrogram"] = nlohmann::json::parse(ok::export_merges_json(dendro));
    const std::string merges_path = (fs::path(opt.out_dir) / "merges.json").string();
    write_text_file(merges_path, merges_doc.dump(2) + "\n");

    std::cout << "wrote " << nwk_path << "\n"
              << "wrote " << merges_path << "\n"
              << "hc_approved: " << (approved ? "true" : "false") << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"oktest: one-vs-group distribution testing toolkit"};
    app.require_subcommand(1);

    SimulateOpts sim_opt;
    auto* sim = app.add_subcommand("simulate", "Run replicated synthetic benchmarks");
    sim->add_option("--settings", sim_opt.settings_csv,
                    "Comma-separated setting ids (e.g. 1.1,1.2)")
        ->required();
    sim->add_option("--methods", sim_opt.methods_csv, "Comma-separated method names");
    sim->add_option("--reps", sim_opt.reps, "Replicates per setting");
    sim->add_option("--n", sim_opt.n, "Epochs per subject (0: setting default)");
    sim->add_option("--k", sim_opt.k, "Control count (0: setting default)");
    sim->add_option("--seed", sim_opt.seed, "Root seed")->envname("OKTEST_SEED");
    sim->add_option("--out", sim_opt.out_dir, "Output directory");
    sim->add_option("--alpha", sim_opt.alpha, "Rejection threshold");
    sim->add_option("--p-max", sim_opt.p_max, "Mixture order cap");
    sim->add_option("--grid-size", sim_opt.grid_size, "Threshold grid size");
    sim->add_option("--c-min", sim_opt.c_min, "Threshold grid lower end");
    sim->add_option("--c-max", sim_opt.c_max, "Threshold grid upper end");
    sim->add_option("--n-perm", sim_opt.n_perm, "Permutations for the AD family");
    sim->add_option("--bootstrap", sim_opt.n_bootstrap, "Bootstrap rounds per control");

    TestOpts test_opt;
    auto* test = app.add_subcommand("test", "Test a case against controls per region");
    test->add_option("--case", test_opt.case_path, "Case band-power CSV")->required();
    test->add_option("--controls", test_opt.control_paths, "Control band-power CSVs")
        ->required()
        ->delimiter(',');
    test->add_option("--methods", test_opt.methods_csv, "Comma-separated method names");
    test->add_option("--band", test_opt.band, "Expected band name (validated if given)");
    test->add_option("--alpha", test_opt.alpha, "BH-adjusted significance level");
    test->add_option("--seed", test_opt.seed, "Root seed")->envname("OKTEST_SEED");
    test->add_option("--out", test_opt.out_dir, "Output directory");
    test->add_option("--p-max", test_opt.p_max, "Mixture order cap");
    test->add_option("--grid-size", test_opt.grid_size, "Threshold grid size");
    test->add_option("--c-min", test_opt.c_min, "Threshold grid lower end");
    test->add_option("--c-max", test_opt.c_max, "Threshold grid upper end");
    test->add_option("--n-perm", test_opt.n_perm, "Permutations for the AD family");
    test->add_option("--bootstrap", test_opt.n_bootstrap, "Bootstrap rounds per control");

    SpectrumOpts spec_opt;
    auto* spectrum = app.add_subcommand("spectrum", "Build a band-power matrix from epochs");
    spectrum->add_option("--epochs", spec_opt.epoch_dir, "Directory of epoch files")
        ->required();
    spectrum->add_option("--band", spec_opt.band, "Band name (delta, theta, alpha, beta, gamma)");
    spectrum->add_option("--regions", spec_opt.region_map_path,
                         "Region map file (one region id per series)")
        ->required();
    spectrum->add_option("--out", spec_opt.out_path, "Output CSV path")->required();
    spectrum->add_option("--sample-rate", spec_opt.sample_rate,
                         "Sample rate for CSV epochs (Hz)");
    spectrum->add_flag("--squared", spec_opt.squared, "Average squared magnitudes");
    spectrum->add_option("--a", spec_opt.a, "Region count (0: max id in the map)");
    spectrum->add_option("--seed", spec_opt.seed, "Recorded in metadata")
        ->envname("OKTEST_SEED");

    ClusterOpts cluster_opt;
    auto* cluster = app.add_subcommand("cluster", "Cluster one region's subjects");
    cluster->add_option("--case", cluster_opt.case_path, "Case band-power CSV")->required();
    cluster->add_option("--controls", cluster_opt.control_paths, "Control band-power CSVs")
        ->required()
        ->delimiter(',');
    cluster->add_option("--region", cluster_opt.region, "Region index (1-based)")->required();
    cluster->add_option("--method", cluster_opt.method, "Similarity backend method name");
    cluster->add_option("--band", cluster_opt.band, "Expected band name (validated if given)");
    cluster->add_option("--seed", cluster_opt.seed, "Root seed")->envname("OKTEST_SEED");
    cluster->add_option("--out", cluster_opt.out_dir, "Output directory");
    cluster->add_option("--p-max", cluster_opt.p_max, "Mixture order cap");
    cluster->add_option("--n-perm", cluster_opt.n_perm, "Permutations for the AD family");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (sim->parsed()) return run_simulate(sim_opt);
        if (test->parsed()) return run_test(test_opt);
        if (spectrum->parsed()) return run_spectrum(spec_opt);
        if (cluster->parsed()) return run_cluster(cluster_opt);
        std::cerr << "no subcommand given\n";
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
