#ifndef ACDS_STUDY_HPP
#define ACDS_STUDY_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "acds/activelearn.hpp"
#include "acds/simulators.hpp"

namespace acds::cli {

/// A study, a grid of noise levels and criteria, and
/// the run settings shared by every replication.
struct StudyConfig {
    sim::StudyKind study = sim::StudyKind::ODE_LINEAR;
    std::vector<double> sigma2;
    std::vector<activelearn::Criterion> criteria;
    int replications = 1;
    std::uint64_t master_seed = 1;
    activelearn::RunConfig run;
    std::string output_dir = "results";
    int parallel = 1;
    bool write_json = true;

    void validate() const;
};

/// Study defaults: the case study's run settings and noise levels, ACDS and MAXIMIN_ONLY.
StudyConfig default_config(sim::StudyKind kind);

/// Reads a key = value file with [study] and [run] sections. Missing keys keep
/// the study defaults. Throws std::invalid_argument on malformed input.
StudyConfig load_config(const std::string& path);

/// seed = derive_seed(master, {hash(study), sigma2 index, criterion, replication}).
std::uint64_t run_seed(std::uint64_t master, sim::StudyKind study, std::size_t sigma2_index,
                       activelearn::Criterion criterion, int replication);
/// Seed of the random problem instance; shared by all criteria of a cell.
std::uint64_t problem_seed(std::uint64_t master, sim::StudyKind study, std::size_t sigma2_index, int replication);

struct RunRow {
    std::string study;
    double sigma2 = 0.0;
    std::string criterion;
    int replication = 0;
    std::uint64_t seed = 0;
    std::int64_t gamma = 0;
    double l2_beta = 0.0;
    Index n_total = 0;
    bool converged = false;
    Index iterations = 0;
    std::string status = "ok";
};

struct SummaryRow {
    double sigma2 = 0.0;
    std::string criterion;
    int runs = 0;
    double gamma_mean = 0.0;
    double gamma_std = 0.0;
    double l2_mean = 0.0;
    double l2_std = 0.0;
    double n_mean = 0.0;
    double n_std = 0.0;
};

struct StudyResult {
    std::vector<RunRow> rows;
    std::vector<nlohmann::json> records;
    int aborted = 0;

    /// 0 when at most 10% of runs aborted, else 2.
    int exit_code() const;
};

/// Executes every (sigma2, criterion, replication) cell. Outputs are ordered
/// by cell regardless of completion order. Nothing is written to disk.
StudyResult execute_study(const StudyConfig& config, std::ostream* log = nullptr);

/// execute_study plus runs.csv, summary.csv and runs/*.json in config.output_dir.
StudyResult run_study(const StudyConfig& config, std::ostream* log = nullptr);

/// Serializes one run record; carries schema_version.
nlohmann::json record_to_json(const activelearn::RunRecord& rec, const basis::BasisLibrary& lib,
                              const RunRow& row, const activelearn::RunConfig& cfg);

/// Mean and sample standard deviation per (sigma2, criterion), aborted runs excluded.
std::vector<SummaryRow> summarize(const std::vector<RunRow>& rows);

void write_runs_csv(std::ostream& os, const std::vector<RunRow>& rows);
void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows);
std::vector<RunRow> read_runs_csv(std::istream& is);
std::vector<SummaryRow> read_summary_csv(std::istream& is);

/// Recomputes summary.csv from runs.csv in `dir`. Returns an empty string on
/// agreement, else a description of the first mismatch.
std::string verify_outputs(const std::string& dir);

/// Locale-independent shortest round-trip formatting.
std::string format_double(double v);

} // namespace acds::cli

#endif // ACDS_STUDY_HPP
