#pragma once

#include <string>
#include <vector>

#include "lbsurv/asymptotics.hpp"
#include "lbsurv/estimator.hpp"
#include "lbsurv/mass_function.hpp"
#include "lbsurv/models.hpp"
#include "lbsurv/simulate.hpp"

namespace lbsurv {

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double x);

/// Generic CSV with leading `# ...` comment lines, a header row, and string
/// cells. Reading then writing reproduces the file byte for byte.
struct CsvTable {
    std::vector<std::string> comments; // without trailing newline, with leading '#'
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const CsvTable& table);

/// Cohort CSV: header a,v,delta. Extended simulation CSV: a,r,c,v,delta.
void write_cohort_csv(const std::string& path, const std::vector<CohortRecord>& cohort,
                      const std::vector<std::string>& comments = {});
std::vector<CohortRecord> read_cohort_csv(const std::string& path);
void write_sim_csv(const std::string& path, const std::vector<SimRecord>& cohort,
                   const std::vector<std::string>& comments = {});

/// MassFunction CSV: header t,mass.
void write_mass_csv(const std::string& path, const MassFunction& g,
                    const std::vector<std::string>& comments = {});
MassFunction read_mass_csv(const std::string& path);

/// Fit CSV: header t,mass_G,G,S_U.
void write_fit_csv(const std::string& path, const FitResult& fit,
                   const std::vector<std::string>& comments = {});
MassFunction read_fit_csv(const std::string& path);

/// Band CSV: header t,G,se,lo_G,hi_G,S_U,lo_S,hi_S.
void write_band_csv(const std::string& path, const BandResult& band,
                    const std::vector<std::string>& comments = {});

/// Model JSON: {"family": name, "params": [...]}.
std::string lifetime_to_json(const LifetimeModel& model);
std::string censoring_to_json(const CensoringModel& model);
LifetimeModel lifetime_from_json_text(const std::string& text);
CensoringModel censoring_from_json_text(const std::string& text);
CensoringModel read_censoring_file(const std::string& path);

/// Scenario JSON mirrors the Scenario type:
/// {"lifetime": {...}, "censoring": {...}, "k": int, "scheme": "i"|"ii"|"iii",
///  "seed": int, "m": int, "n": int}  (m, n optional; default -1).
Scenario scenario_from_json_text(const std::string& text);
Scenario read_scenario_file(const std::string& path);
std::string scenario_to_json(const Scenario& scenario);

enum class StudyMetric { SupError, Coverage, MedianRatio };

struct StudyScenario {
    std::string name;
    Scenario scenario;
};

struct StudySpec {
    std::vector<StudyScenario> scenarios;
    std::vector<int> k_values;
    int replicates = 1;
    std::string out_dir;
    std::uint64_t seed = 0;
    std::vector<StudyMetric> metrics;

    void validate() const;
};

StudySpec read_study_file(const std::string& path);
std::string metric_name(StudyMetric metric);

std::string read_text_file(const std::string& path);

} // namespace lbsurv
