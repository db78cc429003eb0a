#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "lbsurv/models.hpp"

namespace lbsurv {

/// Median of the unbiased lifetime F_U (bisection on the cdf).
double lifetime_median(const LifetimeModel& model);
/// Median of the length-biased distribution G.
double length_biased_median(const LifetimeModel& model);

/// Prefix a bare filename with $LBSURV_OUT_DIR when the variable is set.
std::string resolve_output_path(const std::string& path);

/// Subcommand bodies. Each returns a process exit code and reports failures on
/// `err`; they never throw.
int cmd_simulate(const std::string& scenario_path, const std::string& out_path,
                 std::optional<std::uint64_t> seed, bool extended, std::ostream& out,
                 std::ostream& err);

int cmd_fit(const std::string& in_path, const std::string& out_path, double tol, long max_iter,
            std::ostream& out, std::ostream& err);

int cmd_band(const std::string& in_path, const std::string& fit_path, const std::string& out_path,
             double level, const std::string& mode, int paths, std::uint64_t seed, double tstar,
             const std::string& scenario_path, std::ostream& out, std::ostream& err);

int cmd_diag(const std::string& cens_path, double t, std::ostream& out, std::ostream& err);

int cmd_check_master(const std::string& scenario_path, int k, int reps,
                     std::optional<std::uint64_t> seed, std::ostream& out, std::ostream& err);

int cmd_study(const std::string& study_path, const std::string& out_path,
              std::optional<std::uint64_t> seed, std::ostream& out, std::ostream& err);

int cmd_oracle_compare(int count, std::uint64_t seed, std::ostream& out, std::ostream& err);

} // namespace lbsurv
