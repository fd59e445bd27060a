// Figure reproduction, single-point runs and protocol runs, with run records.
#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "cavcat/protocols.hpp"
#include "cavcat/reflection.hpp"
#include "cavcat/run_config.hpp"

namespace cavcat {

using ProgressFn = std::function<void(const std::string&)>;

/// SystemParams of one sweep point under the numerical settings of `config`.
SystemParams make_params(const RunConfig& config, double g, double kappa_t, cplx alpha);

/// Throws NumericalError when a finished run violates the record invariants:
/// trace drift < 1e-8, top Fock population < 1e-6, ring-down residual < 1e-8.
void check_record_invariants(const ReflectionOutcome& outcome);

/// Simulated reflections keyed on the full parameter tuple. Thread safe.
class OutcomeCache {
public:
    explicit OutcomeCache(RunConfig config) : config_(std::move(config)) {}
    std::shared_ptr<const ReflectionOutcome> get(double g, double kappa_t, cplx alpha);
    std::size_t size() const;

private:
    using Key = std::tuple<double, double, double, double, double, double, double, double, int, int>;
    RunConfig config_;
    mutable std::mutex mutex_;
    std::map<Key, std::shared_ptr<const ReflectionOutcome>> entries_;
};

/// Runs fn(0..n-1) on up to `jobs` threads. The first exception is rethrown after all workers finish.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

struct FidelityPoint {
    double g = 0.0;
    double kappa_t = 0.0;
    double alpha_sq = 0.0;
    std::optional<double> target;   // fig4b only
    int iterations = 0;             // fig4b only
    std::shared_ptr<const ReflectionOutcome> outcome;
    FidelityReport fidelity;
    double seconds = 0.0;
    std::string error;
};

/// Fig. 3 / 4a style sweep of F over curves x alpha_sq, sorted by (g, kappa T, |alpha|^2).
std::vector<FidelityPoint> fidelity_sweep(const RunConfig& config, OutcomeCache& cache, const ProgressFn& progress = {});

/// Input |alpha|^2 whose output |alpha_1|^2 hits `target` within the configured
/// tolerance, by Illinois regula falsi. Throws NumericalError with the bracket on failure.
FidelityPoint solve_for_output(const RunConfig& config, OutcomeCache& cache, double g, double target);

/// Noise channel and protocol run described by the protocol settings of `config`.
ReflectionChannel protocol_channel(const RunConfig& config);
ProtocolResult build_protocol(const RunConfig& config);

struct RunRecord {
    nlohmann::json json;
    std::vector<std::string> failures;
    /// 0 when every point passed, 3 otherwise.
    int exit_code() const noexcept { return failures.empty() ? 0 : 3; }
};

/// Runs the configured experiment, writes its CSV/JSON outputs and
/// run_record.json into config.out_dir, and returns the record.
RunRecord run_experiment(const RunConfig& config, const ProgressFn& progress = {});

std::string sha256_hex(const std::string& bytes);

} // namespace cavcat
