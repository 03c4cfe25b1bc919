#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "rml/anticoncentration.hpp"
#include "rml/arithmetic.hpp"
#include "rml/experiments.hpp"
#include "rml/matrix_io.hpp"
#include "rml/parallel.hpp"
#include "rml/selftest.hpp"
#include "rml/spectral.hpp"

namespace rml::cli {

namespace {

constexpr const char* kConfigSchema = R"(experiment config (JSON object):
  experiment_id   string, one of: gap_simplicity gap_rect two_point_real two_point_complex
                  real_eig_count box_lcd lo_1d lo_2d lo_4d overlap_beta delocalization
                  tensorization linear_relation_repulsion                      (required)
  n_list          array of int >= 2                                            (default [50])
  epsilon_grid    strictly increasing positive numbers            (default per experiment)
  shifts          array of {"z1": x | [re, im], "z2": x | [re, im]}        (default per experiment)
  shift_units     "sqrt_n" | "absolute"                                    (default "sqrt_n")
  trials          int >= 1000                                                (default 1000)
  laws            array of law names or {"kind": ...} objects     (default rademacher, gaussian)
  master_seed     unsigned int                                  (overridden by --seed)
  workers         int >= 0, 0 = RML_WORKERS or all cores
  params          object of experiment-specific numbers
)";

constexpr const char* kSpecSchema = R"(ensemble spec (JSON object):
  family   iid_square | iid_rect | iid_complex | block_LA | block_curlyLA | zeroed_M |
           linearized_P | truncated_M_underline | complex_P_G | complex_M_G
  n        int >= 1; n_rows for iid_rect; anchor_size for zeroed_M
  lambda1, lambda2, lambda_hat, z1, z2, z_hat   shifts where the family uses them
  law      a name (rademacher, gaussian, uniform_pm_K) or
           {"kind": "rademacher" | "gaussian" | "uniform_pm_k" | "custom_discrete", ...}
)";

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

nlohmann::json read_json(const std::string& path)
{
    std::ifstream f(path);
    if (!f) throw UsageError("cannot open " + path);
    try {
        return nlohmann::json::parse(f);
    } catch (const nlohmann::json::parse_error& e) {
        throw UsageError(path + ": " + e.what());
    }
}

RVec read_vector(const std::string& path)
{
    std::ifstream f(path);
    if (!f) throw UsageError("cannot open " + path);
    const RMat m = read_matrix_csv(f);
    if (m.rows() != 1 && m.cols() != 1) throw UsageError(path + ": expected a single row");
    return m.rows() == 1 ? RVec(m.row(0).transpose()) : RVec(m.col(0));
}

std::uint64_t fresh_seed()
{
    std::random_device rd;
    return (std::uint64_t(rd()) << 32) ^ rd();
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text)
{
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + tmp);
        f << text;
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace

std::string gnuplot_script(const std::string& experiment, const std::vector<std::string>& series)
{
    std::string s;
    s += "# gnuplot -p plot.gp\n";
    s += "set datafile separator ','\n";
    s += "set logscale xy\n";
    s += "set key left top\n";
    s += "set xlabel 'epsilon'\nset ylabel 'p_hat'\n";
    s += fmt::format("set title '{}'\n", experiment);
    s += "plot \\\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        // Columns: 2 law, 3 n, 4 series, 5 epsilon, 8 p_hat, 9 ci_low, 10 ci_high.
        s += fmt::format("  'rows.csv' using ((stringcolumn(2).' '.stringcolumn(4) eq '{}') ? $5 : 1/0):8:9:10 "
                         "with yerrorbars title '{}'{}\n",
                         series[i], series[i], i + 1 < series.size() ? ", \\" : "");
    }
    if (series.empty()) s += "  1/0 notitle\n";
    return s;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Random matrix simplicity and anti-concentration experiments", "rml"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));

    // sample
    auto* sample_cmd = app.add_subcommand("sample", "Draw one matrix from an ensemble spec");
    std::string spec_path, sample_out, sample_format = "csv";
    std::optional<std::uint64_t> seed;
    std::uint64_t trial = 0;
    sample_cmd->add_option("--config", spec_path, "Ensemble spec JSON")->required();
    sample_cmd->add_option("--seed", seed, "Master seed");
    sample_cmd->add_option("--trial", trial, "Trial index");
    sample_cmd->add_option("--out", sample_out, "Output file (stdout when omitted)");
    sample_cmd->add_option("--format", sample_format, "csv or bin")->check(CLI::IsMember({"csv", "bin"}));

    // spectrum
    auto* spectrum_cmd = app.add_subcommand("spectrum", "Singular spectrum summary of a matrix file");
    std::string matrix_path;
    bool no_eigen = false;
    spectrum_cmd->add_option("--matrix", matrix_path, "Matrix file (.bin container or CSV)")->required();
    spectrum_cmd->add_flag("--no-eigen-count", no_eigen, "Skip the real eigenvalue count");

    // lcd
    auto* lcd_cmd = app.add_subcommand("lcd", "Essential LCD of a vector");
    std::string vector_path, lcd_mode = "certify";
    double alpha = 0.01, gamma = 0.5, K = 100.0;
    int ambient = -1;
    lcd_cmd->add_option("--vector", vector_path, "CSV file holding one row")->required();
    lcd_cmd->add_option("--alpha", alpha)->check(CLI::PositiveNumber);
    lcd_cmd->add_option("--gamma", gamma)->check(CLI::Range(0.0, 1.0));
    lcd_cmd->add_option("--K", K, "Search bound on theta")->check(CLI::PositiveNumber);
    lcd_cmd->add_option("--ambient-count", ambient, "N in sqrt(alpha N); default is the vector length");
    lcd_cmd->add_option("--mode", lcd_mode)->check(CLI::IsMember({"infimum", "certify"}));

    // smallball
    auto* sb_cmd = app.add_subcommand("smallball", "Small-ball threshold of M v");
    std::string sb_spec, sb_vector;
    double L = 1.0;
    int exponent = 1;
    std::size_t sb_trials = 10000;
    bool sb_exact = false;
    std::optional<int> workers;
    sb_cmd->add_option("--config", sb_spec, "Ensemble spec JSON")->required();
    sb_cmd->add_option("--vector", sb_vector, "CSV file holding v")->required();
    sb_cmd->add_option("--L", L)->check(CLI::PositiveNumber);
    sb_cmd->add_option("--exponent", exponent)->check(CLI::PositiveNumber);
    sb_cmd->add_option("--trials", sb_trials);
    sb_cmd->add_flag("--exact", sb_exact, "Enumerate discrete entries exactly");
    sb_cmd->add_option("--seed", seed);
    sb_cmd->add_option("--workers", workers);

    // experiment run
    auto* exp_cmd = app.add_subcommand("experiment", "Experiment runner");
    exp_cmd->require_subcommand(1);
    auto* run_cmd = exp_cmd->add_subcommand("run", "Run an experiment config");
    std::string config_path, out_dir;
    std::optional<std::size_t> trials_override;
    std::string law_override;
    bool emit_gnuplot = false;
    run_cmd->add_option("--config", config_path, "Experiment config JSON");
    run_cmd->add_option("--out", out_dir, "Output directory")->required();
    run_cmd->add_option("--seed", seed, "Master seed (random and printed when omitted)");
    run_cmd->add_option("--workers", workers, "Worker threads (RML_WORKERS when omitted)");
    run_cmd->add_option("--trials-override", trials_override, "Replace the trial count");
    run_cmd->add_option("--law-override", law_override, "Comma-separated law names");
    run_cmd->add_flag("--emit-gnuplot", emit_gnuplot, "Also write plot.gp");

    auto* self_cmd = app.add_subcommand("selftest", "Deterministic property suites");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << kVersion << "\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "rml: " << e.what() << "\n";
        if (exp_cmd->parsed() && config_path.empty()) err << kConfigSchema;
        return 1;
    }

    try {
        if (*sample_cmd) {
            EnsembleSpec spec;
            try {
                spec = ensemble_spec_from_json(read_json(spec_path));
                spec.validate();
            } catch (const std::invalid_argument& e) {
                throw UsageError(std::string(e.what()) + "\n" + kSpecSchema);
            } catch (const nlohmann::json::exception& e) {
                throw UsageError(std::string(e.what()) + "\n" + kSpecSchema);
            }
            if (!seed) {
                seed = fresh_seed();
                err << "seed: " << *seed << "\n";
            }
            Stream s = Stream(*seed, tag_of("cli/sample"), 0).split(trial);
            const auto m = sample(spec, s, SeedPath{*seed, trial});
            if (sample_out.empty()) {
                if (sample_format == "bin") throw UsageError("--format bin needs --out");
                write_matrix_csv(out, m.data);
            } else {
                std::ofstream f(sample_out, std::ios::binary);
                if (!f) throw std::runtime_error("cannot write " + sample_out);
                if (sample_format == "bin")
                    write_matrix_binary(f, m.data);
                else
                    write_matrix_csv(f, m.data);
            }
            return 0;
        }
        if (*spectrum_cmd) {
            std::ifstream f(matrix_path, std::ios::binary);
            if (!f) throw UsageError("cannot open " + matrix_path);
            char magic[8] = {};
            f.read(magic, 8);
            f.clear();
            f.seekg(0);
            RMat A;
            if (std::string(magic, 8) == "RMLMAT01") {
                auto m = read_matrix_binary(f);
                if (std::holds_alternative<CMat>(m)) {
                    const RVec sv = svd_values(std::get<CMat>(m));
                    out << "singular_values";
                    for (Eigen::Index i = 0; i < sv.size(); ++i) out << "," << fmt::format("{:.17g}", sv[i]);
                    out << "\n";
                    return 0;
                }
                A = std::get<RMat>(m);
            } else {
                A = read_matrix_csv(f);
            }
            const auto s = summarize(A, !no_eigen && A.rows() == A.cols());
            out << spectral_csv_header() << "\n" << spectral_csv_row(s) << "\n";
            return 0;
        }
        if (*lcd_cmd) {
            const RVec v = read_vector(vector_path);
            LcdQuery q;
            q.a = v.transpose();
            q.alpha = alpha;
            q.gamma = gamma;
            q.K = K;
            q.ambient_count = ambient;
            q.mode = lcd_mode == "infimum" ? LcdMode::find_infimum : LcdMode::certify_lower_bound;
            out << to_json(essential_lcd(q)).dump(2) << "\n";
            return 0;
        }
        if (*sb_cmd) {
            const EnsembleSpec spec = ensemble_spec_from_json(read_json(sb_spec));
            const RVec v = read_vector(sb_vector);
            if (!seed) {
                seed = fresh_seed();
                err << "seed: " << *seed << "\n";
            }
            SmallBallOptions opt;
            opt.trials = sb_trials;
            opt.exact = sb_exact;
            opt.workers = resolve_workers(workers.value_or(0));
            const auto t =
                threshold_tau(spec, v, L, exponent, opt, Stream(*seed, tag_of("cli/smallball"), 0));
            const nlohmann::json j{{"L", t.L},
                                   {"exponent", t.exponent},
                                   {"t_hat", t.t_hat},
                                   {"bracket", {t.bracket_low, t.bracket_high}},
                                   {"t_pessimistic", t.t_pessimistic},
                                   {"t_optimistic", t.t_optimistic},
                                   {"inconclusive", t.inconclusive},
                                   {"method", method_name(t.method)},
                                   {"trials", t.trials},
                                   {"seed", *seed}};
            out << j.dump(2) << "\n";
            return 0;
        }
        if (*run_cmd) {
            if (config_path.empty()) {
                err << "rml: experiment run needs --config\n" << kConfigSchema;
                return 1;
            }
            const nlohmann::json raw = read_json(config_path);
            ExperimentConfig cfg;
            try {
                nlohmann::json j = raw;
                if (trials_override) j["trials"] = *trials_override;
                if (!law_override.empty()) {
                    j.erase("law");
                    nlohmann::json laws = nlohmann::json::array();
                    std::stringstream ss(law_override);
                    for (std::string name; std::getline(ss, name, ',');) laws.push_back(name);
                    j["laws"] = laws;
                }
                if (seed)
                    j["master_seed"] = *seed;
                else if (!j.contains("master_seed")) {
                    j["master_seed"] = fresh_seed();
                    err << "seed: " << j["master_seed"].get<std::uint64_t>() << "\n";
                }
                if (workers) j["workers"] = *workers;
                cfg = experiment_config_from_json(j);
            } catch (const std::invalid_argument& e) {
                err << "rml: " << e.what() << "\n" << kConfigSchema;
                return 1;
            } catch (const nlohmann::json::exception& e) {
                err << "rml: " << e.what() << "\n" << kConfigSchema;
                return 1;
            }
            const auto rep = run(cfg);
            write_outputs(rep, out_dir);
            if (emit_gnuplot) {
                std::vector<std::string> series;
                std::set<std::string> seen;
                for (const auto& r : rep.rows) {
                    if (!r.estimate || !r.epsilon) continue;
                    const auto key = r.law + " " + r.series;
                    if (seen.insert(key).second) series.push_back(key);
                }
                write_text_atomic(std::filesystem::path(out_dir) / "plot.gp",
                                  gnuplot_script(experiment_name(cfg.id), series));
            }
            out << fmt::format("{}: {} rows, {:.1f} s, seed {}, workers {}\n", experiment_name(cfg.id),
                               rep.rows.size(), rep.runtime_seconds, cfg.master_seed, rep.workers);
            return 0;
        }
        if (*self_cmd) {
            auto results = linear_algebra_suite(200, 12, 20240601);
            for (auto& r : char_fn_suite(10000)) results.push_back(r);
            bool ok = true;
            for (const auto& r : results) {
                out << fmt::format("{:<36} {:>6} max_violation {:.3e} {}\n", r.name, r.instances, r.max_violation,
                                   r.passed() ? "ok" : "FAILED");
                ok = ok && r.passed();
            }
            return ok ? 0 : 2;
        }
    } catch (const UsageError& e) {
        err << "rml: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "rml: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

}  // namespace rml::cli
