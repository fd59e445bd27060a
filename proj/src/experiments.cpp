#include "cavcat/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <thread>

#include <openssl/evp.h>

#include "cavcat/error.hpp"
#include "cavcat/serialization.hpp"

namespace cavcat {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string label(double x) {
    std::ostringstream os;
    os << x;
    return os.str();
}

std::ostringstream csv_stream() {
    std::ostringstream os;
    os << std::setprecision(17);
    return os;
}

// Serializes callbacks coming from worker threads.
ProgressFn locked(const ProgressFn& fn) {
    if (!fn) return {};
    auto m = std::make_shared<std::mutex>();
    return [fn, m](const std::string& s) {
        std::lock_guard lock(*m);
        fn(s);
    };
}

class OutputWriter {
public:
    explicit OutputWriter(fs::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) throw ConfigError("cannot create output directory " + dir_.string() + ": " + ec.message());
    }

    void write(const std::string& name, const std::string& content) {
        const fs::path p = dir_ / name;
        std::ofstream out(p, std::ios::binary);
        if (!out) throw ConfigError("cannot write " + p.string());
        out << content;
        out.close();
        if (!out) throw ConfigError("failed writing " + p.string());
        files_.push_back({{"path", name}, {"bytes", content.size()}, {"sha256", sha256_hex(content)}});
    }

    const nlohmann::json& files() const noexcept { return files_; }
    const fs::path& dir() const noexcept { return dir_; }

private:
    fs::path dir_;
    nlohmann::json files_ = nlohmann::json::array();
};

std::string envelope_csv(const ComplexEnvelope& f) {
    std::ostringstream os;
    write_csv(os, f);
    return os.str();
}

nlohmann::json point_json(const FidelityPoint& p) {
    nlohmann::json j;
    if (p.outcome) {
        j = to_json(*p.outcome, p.fidelity);
    }
    j["g"] = p.g;
    j["kappa_t"] = p.kappa_t;
    j["alpha_sq"] = p.alpha_sq;
    if (p.target) {
        j["target_out_sq"] = *p.target;
        j["iterations"] = p.iterations;
    }
    j["seconds"] = p.seconds;
    if (!p.error.empty()) j["error"] = p.error;
    return j;
}

std::string point_tag(double g, double kappa_t, double alpha_sq) {
    return "g=" + label(g) + " kappaT=" + label(kappa_t) + " |alpha|^2=" + label(alpha_sq);
}

struct Outputs {
    nlohmann::json points = nlohmann::json::array();
    nlohmann::json summary = nlohmann::json::object();
    std::vector<std::string> failures;
};

void collect(Outputs& out, const std::vector<FidelityPoint>& pts) {
    for (const auto& p : pts) {
        out.points.push_back(point_json(p));
        if (!p.error.empty()) out.failures.push_back(point_tag(p.g, p.kappa_t, p.alpha_sq) + ": " + p.error);
    }
}

void fidelity_fields(std::ostringstream& os, const FidelityPoint& p) {
    const auto& o = *p.outcome;
    os << p.alpha_sq << ',' << p.fidelity.F_exact << ',' << p.fidelity.F_eq7 << ',' << o.eta << ',' << o.xi0.real()
       << ',' << o.xi0.imag() << ',' << o.xi1.real() << ',' << o.xi1.imag() << ',' << std::norm(o.alpha_out) << ','
       << o.diagnostics.fock_cutoff;
}

Outputs run_simulate(const RunConfig& c, OutputWriter& w) {
    if (c.curves.size() != 1 || c.alpha_sq.size() != 1) throw ConfigError("simulate takes a single (g, kappa T, |alpha|^2)");
    const Curve cv = c.curves.front();
    const double a2 = c.alpha_sq.front();
    const auto t0 = Clock::now();
    std::optional<Trajectory> traj;
    FidelityPoint p{cv.g, cv.kappa_t, a2, {}, 0, nullptr, {}, 0.0, {}};
    Outputs out;
    try {
        auto o = std::make_shared<ReflectionOutcome>(
            simulate_reflection(make_params(c, cv.g, cv.kappa_t, std::sqrt(a2)), c.max_cutoff, &traj));
        check_record_invariants(*o);
        p.outcome = o;
        p.fidelity = fidelity_exact(*o);
    } catch (const NumericalError& e) {
        p.error = e.what();
    }
    p.seconds = seconds_since(t0);
    collect(out, {p});
    if (p.outcome) {
        nlohmann::json j = to_json(*p.outcome, p.fidelity);
        j["envelopes"] = {{"f_in", "f_in.csv"}, {"f_out_0", "f_out_0.csv"}, {"f_out_1", "f_out_1.csv"}};
        w.write("simulate.json", j.dump(2) + "\n");
        w.write("f_in.csv", envelope_csv(p.outcome->f_in));
        w.write("f_out_0.csv", envelope_csv(p.outcome->f_out_0));
        w.write("f_out_1.csv", envelope_csv(p.outcome->f_out_1));
        if (traj) {
            std::ostringstream os;
            write_trajectory_csv(os, *traj);
            w.write("trajectory.csv", os.str());
        }
        out.summary = {{"F_exact", p.fidelity.F_exact}, {"F_eq7", p.fidelity.F_eq7}, {"eta", p.outcome->eta}};
    }
    return out;
}

Outputs run_fig2(const RunConfig& c, OutcomeCache& cache, OutputWriter& w, const ProgressFn& progress) {
    if (c.alpha_sq.size() != 1) throw ConfigError("fig2 uses a single |alpha|^2");
    const double kt = c.curves.front().kappa_t;
    for (const auto& cv : c.curves)
        if (cv.kappa_t != kt) throw ConfigError("fig2 curves must share one kappa T (common grid)");
    const cplx alpha = std::sqrt(c.alpha_sq.front());
    if (alpha == cplx{}) throw ConfigError("fig2 needs |alpha|^2 > 0");

    // the g = 0 engine run cross-checks the empty-cavity filter
    std::vector<double> gs{0.0};
    for (const auto& cv : c.curves) gs.push_back(cv.g);
    std::vector<FidelityPoint> pts(gs.size());
    parallel_for(gs.size(), c.jobs, [&](std::size_t i) {
        const auto t0 = Clock::now();
        FidelityPoint& p = pts[i];
        p.g = gs[i];
        p.kappa_t = kt;
        p.alpha_sq = c.alpha_sq.front();
        try {
            p.outcome = cache.get(gs[i], kt, alpha);
            p.fidelity = fidelity_exact(*p.outcome);
        } catch (const NumericalError& e) {
            p.error = e.what();
        }
        p.seconds = seconds_since(t0);
        if (progress) progress("fig2 " + point_tag(p.g, kt, p.alpha_sq) + " done");
    });

    Outputs out;
    collect(out, pts);
    for (const auto& p : pts)
        if (!p.outcome) return out;

    const auto& f_in = pts[0].outcome->f_in;
    const auto& f0 = pts[0].outcome->f_out_0;
    auto os = csv_stream();
    os << "t,f_in_re,f_in_im,f_out_0_re,f_out_0_im";
    for (std::size_t k = 1; k < pts.size(); ++k) os << ",f_out_1_g" << label(pts[k].g) << "_re,f_out_1_g" << label(pts[k].g) << "_im";
    os << '\n';
    for (std::size_t i = 0; i < f_in.size(); ++i) {
        os << f_in.grid().at(i) << ',' << f_in[i].real() << ',' << f_in[i].imag() << ',' << f0[i].real() << ','
           << f0[i].imag();
        for (std::size_t k = 1; k < pts.size(); ++k) {
            const cplx v = pts[k].outcome->f_out_1[i];
            os << ',' << v.real() << ',' << v.imag();
        }
        os << '\n';
    }
    w.write("fig2.csv", os.str());

    nlohmann::json overlaps = {{"f_out_0", 1.0 - std::abs(inner_product(f_in, f0))}};
    nlohmann::json diffs = nlohmann::json::array();
    for (std::size_t k = 1; k < pts.size(); ++k) {
        overlaps["f_out_1_g" + label(pts[k].g)] = 1.0 - std::abs(inner_product(f_in, pts[k].outcome->f_out_1));
        for (std::size_t m = k + 1; m < pts.size(); ++m)
            diffs.push_back({{"g_a", pts[k].g},
                             {"g_b", pts[m].g},
                             {"sup_difference", pts[k].outcome->f_out_1.max_abs_difference(pts[m].outcome->f_out_1)}});
    }
    // engine output at g = 0 rescaled to the input amplitude equals f_out^(0)
    const auto& z = *pts[0].outcome;
    const double g0_check = z.f_out_1.scaled(z.alpha_out / z.alpha_in).max_abs_difference(f0);
    out.summary = {{"one_minus_abs_overlap", overlaps}, {"shape_differences", diffs}, {"g0_engine_vs_filter_sup", g0_check}};
    return out;
}

Outputs run_sweep(const RunConfig& c, OutcomeCache& cache, OutputWriter& w, const ProgressFn& progress) {
    const auto pts = fidelity_sweep(c, cache, progress);
    Outputs out;
    collect(out, pts);
    auto os = csv_stream();
    os << "g,kappa_t,alpha_sq,F_exact,F_eq7,eta,xi0_re,xi0_im,xi1_re,xi1_im,alpha_out_sq,fock_cutoff\n";
    for (const auto& p : pts) {
        if (!p.outcome) continue;
        os << p.g << ',' << p.kappa_t << ',';
        fidelity_fields(os, p);
        os << '\n';
    }
    w.write(to_string(c.experiment) + ".csv", os.str());
    return out;
}

Outputs run_fig4b(const RunConfig& c, OutcomeCache& cache, OutputWriter& w, const ProgressFn& progress) {
    struct Task {
        double target, g;
    };
    std::vector<Task> tasks;
    for (double t : c.targets)
        for (const auto& cv : c.curves) tasks.push_back({t, cv.g});
    std::vector<FidelityPoint> pts(tasks.size());
    parallel_for(tasks.size(), c.jobs, [&](std::size_t i) {
        const auto t0 = Clock::now();
        try {
            pts[i] = solve_for_output(c, cache, tasks[i].g, tasks[i].target);
        } catch (const NumericalError& e) {
            pts[i] = FidelityPoint{tasks[i].g, c.curves.front().kappa_t, 0.0, tasks[i].target, 0, nullptr, {}, 0.0, e.what()};
        }
        pts[i].seconds = seconds_since(t0);
        if (progress) progress("fig4b target=" + label(tasks[i].target) + " g=" + label(tasks[i].g) + " done");
    });
    std::sort(pts.begin(), pts.end(), [](const FidelityPoint& a, const FidelityPoint& b) {
        return std::tie(*a.target, a.g) < std::tie(*b.target, b.g);
    });
    Outputs out;
    collect(out, pts);
    auto os = csv_stream();
    os << "target_out_sq,g,alpha_sq,F_exact,F_eq7,eta,xi0_re,xi0_im,xi1_re,xi1_im,alpha_out_sq,fock_cutoff,iterations\n";
    for (const auto& p : pts) {
        if (!p.outcome) continue;
        os << *p.target << ',' << p.g << ',';
        fidelity_fields(os, p);
        os << ',' << p.iterations << '\n';
    }
    w.write("fig4b.csv", os.str());
    return out;
}

Outputs run_protocol(const RunConfig& c, OutputWriter& w) {
    const ProtocolResult r = build_protocol(c);
    w.write("protocol.json", to_json(r).dump(2) + "\n");
    Outputs out;
    out.summary = {{"branches", r.final_state.branches().size()},
                   {"modes", r.final_state.modes()},
                   {"success_probability", r.success_probability()}};
    return out;
}

CatState wigner_state(const RunConfig& c) {
    if (c.state.empty()) return build_protocol(c).final_state;
    std::ifstream in(c.state);
    if (!in) throw ConfigError("cannot open state file " + c.state);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("state file " + c.state + " is not valid JSON: " + e.what());
    }
    return cat_state_from_json(j.contains("final_state") ? j.at("final_state") : j);
}

Outputs run_wigner(const RunConfig& c, OutputWriter& w) {
    const CatState s = wigner_state(c);
    const WignerGrid g = wigner_grid(s, c.mode, c.extent, c.points);
    std::ostringstream os;
    write_wigner_csv(os, g);
    w.write("wigner.csv", os.str());
    const double w0 = wigner(s, c.mode, 0.0);
    Outputs out;
    out.summary = {{"mode", c.mode}, {"W0", w0}, {"parity", std::numbers::pi / 2.0 * w0}};
    return out;
}

ReflectionChannel channel_from_entry(const RunConfig& c, const nlohmann::json& entry) {
    if (entry.is_object() && entry.contains("simulate")) {
        const auto& p = entry.at("simulate");
        RunConfig local = c;
        try {
            local.gamma_s = p.value("gamma_s", c.gamma_s);
            const double g = p.value("g", c.curves.empty() ? 6.0 : c.curves.front().g);
            const double kt = p.value("kappa_t", c.curves.empty() ? 210.0 : c.curves.front().kappa_t);
            const double a2 = p.value("alpha_sq", std::norm(c.alpha));
            const bool shapes = p.value("shapes", true);
            local.validate();
            const auto o = simulate_reflection(make_params(local, g, kt, std::sqrt(a2)), local.max_cutoff);
            check_record_invariants(o);
            return ReflectionChannel::from_outcome(o, shapes);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("bad simulate channel: ") + e.what());
        }
    }
    return default_channel(entry);
}

} // namespace

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) != 1 || EVP_DigestFinal_ex(ctx, md, &len) != 1) {
        EVP_MD_CTX_free(ctx);
        throw Error("SHA-256 computation failed");
    }
    EVP_MD_CTX_free(ctx);
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return os.str();
}

SystemParams make_params(const RunConfig& c, double g, double kappa_t, cplx alpha) {
    SystemParams p = gaussian_params(g, c.gamma_s, kappa_t, alpha, c.spacing, c.fock_cutoff, c.margin);
    if (c.dt > 0.0) p.dt = c.dt;
    p.validate();
    return p;
}

void check_record_invariants(const ReflectionOutcome& o) {
    const auto& d = o.diagnostics;
    if (d.max_trace_drift >= 1e-8)
        throw NumericalError("trace drift " + std::to_string(d.max_trace_drift) + " exceeds 1e-8");
    if (d.max_top_fock_pop >= 1e-6)
        throw NumericalError("top Fock population " + std::to_string(d.max_top_fock_pop) + " exceeds 1e-6");
    if (d.ring_down_residual >= 1e-8)
        throw NumericalError("ring-down residual " + std::to_string(d.ring_down_residual) + " exceeds 1e-8");
}

std::shared_ptr<const ReflectionOutcome> OutcomeCache::get(double g, double kappa_t, cplx alpha) {
    const Key key{g,
                  config_.gamma_s,
                  kappa_t,
                  alpha.real(),
                  alpha.imag(),
                  config_.spacing,
                  config_.dt,
                  config_.margin.value_or(-1.0),
                  config_.fock_cutoff,
                  config_.max_cutoff};
    {
        std::lock_guard lock(mutex_);
        if (auto it = entries_.find(key); it != entries_.end()) return it->second;
    }
    auto o = std::make_shared<const ReflectionOutcome>(
        simulate_reflection(make_params(config_, g, kappa_t, alpha), config_.max_cutoff));
    check_record_invariants(*o);
    std::lock_guard lock(mutex_);
    return entries_.emplace(key, std::move(o)).first->second;
}

std::size_t OutcomeCache::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(jobs, 1)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first;
    std::mutex m;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(m);
                    if (!first) first = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (first) std::rethrow_exception(first);
}

std::vector<FidelityPoint> fidelity_sweep(const RunConfig& c, OutcomeCache& cache, const ProgressFn& progress) {
    std::vector<FidelityPoint> pts;
    for (const auto& cv : c.curves)
        for (double a2 : c.alpha_sq) pts.push_back(FidelityPoint{cv.g, cv.kappa_t, a2, {}, 0, nullptr, {}, 0.0, {}});
    parallel_for(pts.size(), c.jobs, [&](std::size_t i) {
        FidelityPoint& p = pts[i];
        const auto t0 = Clock::now();
        try {
            p.outcome = cache.get(p.g, p.kappa_t, std::sqrt(p.alpha_sq));
            p.fidelity = fidelity_exact(*p.outcome);
        } catch (const NumericalError& e) {
            p.error = e.what();
        }
        p.seconds = seconds_since(t0);
        if (progress)
            progress(point_tag(p.g, p.kappa_t, p.alpha_sq) +
                     (p.error.empty() ? " F=" + label(p.fidelity.F_exact) : " failed: " + p.error));
    });
    std::sort(pts.begin(), pts.end(), [](const FidelityPoint& a, const FidelityPoint& b) {
        return std::tie(a.g, a.kappa_t, a.alpha_sq) < std::tie(b.g, b.kappa_t, b.alpha_sq);
    });
    return pts;
}

FidelityPoint solve_for_output(const RunConfig& c, OutcomeCache& cache, double g, double target) {
    const double kt = c.curves.empty() ? 210.0 : c.curves.front().kappa_t;
    FidelityPoint p{g, kt, 0.0, target, 0, nullptr, {}, 0.0, {}};
    std::shared_ptr<const ReflectionOutcome> last;
    auto residual = [&](double a2) {
        ++p.iterations;
        last = cache.get(g, kt, std::sqrt(a2));
        return std::norm(last->alpha_out) - target;
    };
    auto accept = [&](double a2) {
        p.alpha_sq = a2;
        p.outcome = last;
        p.fidelity = fidelity_exact(*last);
        return p;
    };
    auto bracket_error = [&](double lo, double hi, double flo, double fhi) {
        std::ostringstream os;
        os << "no |alpha|^2 found for |alpha_1|^2 = " << target << " at g = " << g << "; bracket [" << lo << ", " << hi
           << "] with residuals [" << flo << ", " << fhi << "] after " << p.iterations << " evaluations";
        return NumericalError(os.str());
    };

    // weak-drive estimate of the loss as the first guess
    const auto f_in = make_params(c, g, kt, 1.0).pulse;
    const double eta_weak = std::clamp(1.0 - weak_drive_filter(f_in, g, 1.0, c.gamma_s).norm_squared(), 0.0, 0.99);
    double x = target / (1.0 - eta_weak);
    double fx = residual(x);
    if (std::abs(fx) < c.target_tolerance) return accept(x);

    double lo = target, hi = x, flo = 0.0, fhi = fx;
    if (fx < 0.0) {
        lo = x;
        flo = fx;
        hi = x * 1.25;
        fhi = residual(hi);
        for (int k = 0; fhi < 0.0; ++k) {
            if (k == 20) throw bracket_error(lo, hi, flo, fhi);
            lo = hi;
            flo = fhi;
            hi *= 1.5;
            fhi = residual(hi);
        }
    } else {
        flo = residual(lo);
        if (std::abs(flo) < c.target_tolerance) return accept(lo);
        if (flo > 0.0) throw bracket_error(lo, hi, flo, fhi);
    }
    if (std::abs(fhi) < c.target_tolerance) return accept(hi);

    // Illinois variant of regula falsi
    int side = 0;
    for (int it = 0; it < 60; ++it) {
        const double m = (lo * fhi - hi * flo) / (fhi - flo);
        const double fm = residual(m);
        if (std::abs(fm) < c.target_tolerance) return accept(m);
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = m;
            flo = fm;
            if (side == -1) fhi *= 0.5;
            side = -1;
        } else {
            hi = m;
            fhi = fm;
            if (side == 1) flo *= 0.5;
            side = 1;
        }
    }
    throw bracket_error(lo, hi, flo, fhi);
}

ReflectionChannel protocol_channel(const RunConfig& c) {
    if (c.noise == "ideal") return ReflectionChannel::ideal();
    if (c.noise == "lossy") return ReflectionChannel::lossy(c.eta);
    if (c.noise == "simulated")
        return channel_from_entry(c, {{"simulate", {{"alpha_sq", std::norm(c.alpha)}, {"shapes", c.shapes}}}});
    throw ConfigError("noise must be ideal, lossy or simulated");
}

ProtocolResult build_protocol(const RunConfig& c) {
    if (c.protocol == "script") {
        std::ifstream in(c.script);
        if (!in) throw ConfigError("cannot open script file " + c.script);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError("script file " + c.script + " is not valid JSON: " + e.what());
        }
        const Script s = script_from_json(j, [&](const nlohmann::json& entry) { return channel_from_entry(c, entry); });
        ProtocolResult r = run_script(s.steps, s.initial ? *s.initial : multidimensional_initial(c.alpha));
        r.metadata["protocol"] = "script";
        r.metadata["script"] = c.script;
        return r;
    }
    const ReflectionChannel noise = protocol_channel(c);
    if (c.protocol == "multipartite") return multipartite_cat(c.n_pulses, c.alpha, noise, c.postselect);
    return multidimensional_cat(c.rounds, c.alpha, noise, c.postselect.value_or(Outcome::plus));
}

RunRecord run_experiment(const RunConfig& config, const ProgressFn& progress_in) {
    config.validate();
    const ProgressFn progress = locked(progress_in);
    const auto t0 = Clock::now();
    OutputWriter writer(config.out_dir);
    OutcomeCache cache(config);

    Outputs out;
    switch (config.experiment) {
    case Experiment::simulate: out = run_simulate(config, writer); break;
    case Experiment::fig2: out = run_fig2(config, cache, writer, progress); break;
    case Experiment::fig3:
    case Experiment::fig4a: out = run_sweep(config, cache, writer, progress); break;
    case Experiment::fig4b: out = run_fig4b(config, cache, writer, progress); break;
    case Experiment::protocol: out = run_protocol(config, writer); break;
    case Experiment::wigner: out = run_wigner(config, writer); break;
    }

    RunRecord rec;
    rec.failures = out.failures;
    rec.json = {{"version", version()},
                {"experiment", to_string(config.experiment)},
                {"config", config.to_json()},
                {"status", rec.failures.empty() ? "ok" : "failed"},
                {"failures", rec.failures},
                {"summary", out.summary},
                {"points", out.points},
                {"files", writer.files()},
                {"timings", {{"total_seconds", seconds_since(t0)}, {"simulations", cache.size()}}}};
    std::ofstream rf(writer.dir() / "run_record.json");
    if (!rf) throw ConfigError("cannot write run_record.json");
    rf << rec.json.dump(2) << '\n';
    return rec;
}

} // namespace cavcat
