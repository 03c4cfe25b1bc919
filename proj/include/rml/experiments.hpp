#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rml/anticoncentration.hpp"
#include "rml/distributions.hpp"
#include "rml/ensembles.hpp"

namespace rml {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kRowsSchema = 1;

enum class ExperimentId {
    gap_simplicity,
    gap_rect,
    two_point_real,
    two_point_complex,
    real_eig_count,
    box_lcd,
    lo_1d,
    lo_2d,
    lo_4d,
    overlap_beta,
    delocalization,
    tensorization,
    linear_relation_repulsion,
};

std::string experiment_name(ExperimentId id);
ExperimentId experiment_from_name(const std::string& s);
// Exponent of epsilon in the bound each experiment fits against (0: none).
int bound_exponent(ExperimentId id);

struct ShiftPair {
    std::complex<double> z1{0.0, 0.0};
    std::complex<double> z2{0.0, 0.0};
};

struct ExperimentConfig {
    ExperimentId id = ExperimentId::gap_simplicity;
    std::vector<int> n_list{50};
    std::vector<double> epsilon_grid;
    // Shift values are multiplied by sqrt(n) unless shift_units is "absolute".
    std::vector<ShiftPair> shifts;
    std::string shift_units = "sqrt_n";
    std::size_t trials = 1000;
    std::vector<EntryLaw> laws;  // empty: rademacher and gaussian
    std::uint64_t master_seed = 0;
    int workers = 0;             // 0: RML_WORKERS or hardware concurrency
    nlohmann::json params = nlohmann::json::object();

    void validate() const;
    std::vector<EntryLaw> effective_laws() const;
};

nlohmann::json to_json(const ExperimentConfig& c);
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
// FNV-1a of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const ExperimentConfig& c);

struct ExperimentRow {
    std::string law;
    int n = 0;
    std::string series;
    std::optional<double> epsilon;
    std::optional<ConcentrationEstimate> estimate;
    std::optional<double> value;
};

struct FitRow {
    std::string law;
    int n = 0;
    std::string series;
    FitResult fit;
    int exponent = 0;
    // sum k / sum (trials eps^exponent) over all grid rows: the constant C
    // of p = C eps^exponent with the exponent held at the bound's value.
    double constant_fixed_exponent = 0.0;
};

struct ExperimentReport {
    ExperimentConfig config;
    std::vector<ExperimentRow> rows;
    std::vector<FitRow> fits;
    nlohmann::json stats = nlohmann::json::object();
    std::string epsilon_convention;
    double runtime_seconds = 0.0;
    int workers = 1;
};

ExperimentReport run(const ExperimentConfig& config);

FitResult fit_scaling(const std::vector<ConcentrationEstimate>& rows);

enum class EpsScaling { unscaled, n_inv_half };

struct JointIndicator {
    bool first = false;
    bool second = false;
    bool both = false;
};

// sigma_min(A - lambda_i I) <= eps * scale for i = 1, 2, from one sample.
JointIndicator joint_indicator(const RMat& A, double lambda1, double lambda2, double eps, EpsScaling scaling);

std::string rows_csv_header();
std::string rows_csv(const ExperimentReport& r);
nlohmann::json report_json(const ExperimentReport& r);
// Writes rows.csv, report.json and config-echo.json into dir (created if needed).
void write_outputs(const ExperimentReport& r, const std::string& dir);

}  // namespace rml
