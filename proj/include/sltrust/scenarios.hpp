#ifndef SLTRUST_SCENARIOS_HPP
#define SLTRUST_SCENARIOS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sltrust/errors.hpp"
#include "sltrust/misbehavior.hpp"
#include "sltrust/opinion.hpp"
#include "sltrust/rng.hpp"

namespace sltrust {

/// Gaussian measurement process plus the agent's calibration estimate of it.
struct MeasurementModel {
    double mu = 0.25;        // true mean, meters
    double sigma = 0.75;     // true std, meters
    double mu_est = 0.25;    // calibration estimate used for standardization
    double sigma_est = 0.75;
    unsigned samples = 50;
};

inline const MeasurementModel& validate(const MeasurementModel& m) {
    if (m.sigma <= 0.0 || m.sigma_est <= 0.0 || m.samples < 1) {
        throw ConfigError("measurement model needs sigma > 0, sigma_est > 0, samples >= 1");
    }
    return m;
}

/// Uniform histogram over standardized measurements; doubles as the opinion
/// domain. Out-of-range samples clamp to the edge bins.
struct HistogramSpec {
    unsigned bins = 10;
    double z_lo = -4.0;
    double z_hi = 4.0;

    Domain domain() const {
        std::vector<std::string> labels;
        labels.reserve(bins);
        for (unsigned i = 0; i < bins; ++i) {
            labels.push_back("bin" + std::to_string(i));
        }
        return Domain(std::move(labels));
    }

    std::vector<double> centers() const {
        const double w = (z_hi - z_lo) / bins;
        std::vector<double> c(bins);
        for (unsigned i = 0; i < bins; ++i) {
            c[i] = z_lo + (i + 0.5) * w;
        }
        return c;
    }
};

inline const HistogramSpec& validate(const HistogramSpec& spec) {
    if (spec.bins < 2 || !(spec.z_lo < spec.z_hi)) {
        throw ConfigError("histogram needs bins >= 2 and z_lo < z_hi");
    }
    return spec;
}

/// Standardizes raw measurements with the agent's calibration estimates.
inline std::vector<double> z_transform(std::span<const double> samples, double mu_est,
                                       double sigma_est) {
    if (sigma_est <= 0.0) {
        throw ConfigError("sigma_est must be positive");
    }
    std::vector<double> z(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        z[i] = (samples[i] - mu_est) / sigma_est;
    }
    return z;
}

/// Bins standardized samples and maps the counts to an opinion with a
/// uniform base rate. Uncertainty depends only on (N, bins).
inline Opinion histogram_opinion(std::span<const double> z_samples, const HistogramSpec& spec) {
    validate(spec);
    const unsigned b = spec.bins;
    std::vector<double> counts(b, 0.0);
    const double width = (spec.z_hi - spec.z_lo) / b;
    for (double z : z_samples) {
        double idx = std::floor((z - spec.z_lo) / width);
        idx = std::clamp(idx, 0.0, static_cast<double>(b - 1));
        counts[static_cast<std::size_t>(idx)] += 1.0;
    }
    return from_evidence(EvidenceRecord{spec.domain(), std::move(counts),
                                        std::vector<double>(b, 1.0 / b)});
}

/// Recalibration estimate in standardized units, computed from the flagged
/// opinion and the elected reference. Probabilities are the renormalized
/// beliefs b/(1-u); sigma is the central second moment over bin centers.
struct Recalibration {
    double mu_z = 0.0;
    double sigma_z = 0.0;
};

inline Recalibration recalibrate(const Opinion& wrong, const Opinion& reference,
                                 const HistogramSpec& spec) {
    if (wrong.domain != spec.domain() || reference.domain != wrong.domain) {
        throw DomainMismatch("recalibration needs both opinions on the histogram domain");
    }
    const std::vector<double> centers = spec.centers();
    auto renorm = [](const Opinion& op) {
        std::vector<double> p(op.belief.size(), 0.0);
        const double mass = 1.0 - op.uncertainty;
        if (mass > 1e-12) {
            for (std::size_t i = 0; i < p.size(); ++i) {
                p[i] = op.belief[i] / mass;
            }
        }
        return p;
    };
    const std::vector<double> pw = renorm(wrong);
    const std::vector<double> pr = renorm(reference);
    Recalibration rec;
    for (std::size_t i = 0; i < centers.size(); ++i) {
        rec.mu_z += centers[i] * (pw[i] - pr[i]);
    }
    double var = 0.0;
    for (std::size_t i = 0; i < centers.size(); ++i) {
        const double d = centers[i] - rec.mu_z;
        var += d * d * pw[i];
    }
    rec.sigma_z = std::sqrt(var);
    return rec;
}

/// Closed-form batch elimination probabilities: trust depletes when a full
/// batch of `batch_size` consecutive reports is flagged.
struct EliminationResult {
    double p_dm = 0.0;  // misbehaving agent eliminated
    double p_wb = 0.0;  // honest agent wrongly blamed
};

inline EliminationResult elimination_model(double p_tp, double p_fp, unsigned batch_size,
                                           unsigned n_batches) {
    if (p_tp < 0.0 || p_tp > 1.0 || p_fp < 0.0 || p_fp > 1.0) {
        throw ConfigError("rates must lie in [0,1]");
    }
    EliminationResult out;
    out.p_dm = 1.0 - std::pow(1.0 - std::pow(p_tp, batch_size), n_batches);
    out.p_wb = 1.0 - std::pow(1.0 - std::pow(p_fp, batch_size), n_batches);
    return out;
}

// ---------------------------------------------------------------------------
// Intersection scenario harness
// ---------------------------------------------------------------------------

/// Fixed cast of the intersection experiments. Vehicles A and B and the RSU
/// observe vehicle B's lane position x with 50 samples; occluded vehicle C
/// gets 10. The auxiliary topic x_c (vehicle C's position) is observed by
/// the RSU and C; the broker pools both topics when adjudicating, which is
/// what lets it break word-against-word situations.
struct IntersectionConfig {
    HistogramSpec spec{5, -3.1, 3.1};
    MeasurementModel measurement{};         // mu/sigma of the true process
    double fault_mu_est = 1.0;              // scenario 2/3 miscalibration
    double fault_sigma_est = 0.75;
    unsigned samples_full = 50;
    unsigned samples_occluded = 10;
    unsigned samples_aux = 45;              // the brief mutual x_c window
};

/// Aggregated classification rates of one scenario at one threshold.
struct IntersectionRates {
    int scenario = 1;
    double theta = 0.15;
    unsigned runs = 0;
    std::uint64_t seed = 0;
    double all_honest_correct = std::numeric_limits<double>::quiet_NaN();
    double detected = std::numeric_limits<double>::quiet_NaN();
    double at_least_one = std::numeric_limits<double>::quiet_NaN();
    double wrong_accusation = std::numeric_limits<double>::quiet_NaN();
    double tp = std::numeric_limits<double>::quiet_NaN();
    double fp = std::numeric_limits<double>::quiet_NaN();
};

struct SweepRow {
    double theta;
    double p_detected;
    double p_at_least_one;
    double p_wrong_accusation;
    double p_all_honest;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    unsigned runs = 0;
    std::uint64_t seed = 0;
};

struct RocRow {
    double mu_est;
    double sigma_est;
    double theta;
    double fp;
    double tp;
};

struct RocResult {
    std::vector<RocRow> rows;
    unsigned runs = 0;
    std::uint64_t seed = 0;
};

struct ScaleRow {
    double error_rate;
    double theta;
    double p_tp;
    double p_fp;
};

struct ScaleResult {
    std::vector<ScaleRow> rows;
    unsigned reports_per_cell = 0;
    std::uint64_t seed = 0;
};

namespace detail {

inline AgentId report_agent(const AgentId& report_id) {
    const auto pos = report_id.find('#');
    return pos == AgentId::npos ? report_id : report_id.substr(0, pos);
}

inline std::set<AgentId> flagged_agents(const ClassificationResult& res) {
    std::set<AgentId> out;
    for (const AgentId& id : res.misbehaving) {
        out.insert(report_agent(id));
    }
    return out;
}

/// One run's report set for the intersection cast. `miscalibrated` agents
/// standardize with the fault estimates on every topic they observe.
struct IntersectionRun {
    std::vector<ReportedOpinion> reports;
    std::map<AgentId, Opinion> by_id;
};

inline IntersectionRun make_intersection_run(const IntersectionConfig& cfg,
                                             const std::set<AgentId>& miscalibrated,
                                             std::mt19937_64& rng) {
    std::normal_distribution<double> noise(cfg.measurement.mu, cfg.measurement.sigma);
    auto sample_opinion = [&](const AgentId& agent, unsigned n) {
        std::vector<double> x(n);
        for (double& v : x) {
            v = noise(rng);
        }
        const bool bad = miscalibrated.count(agent) > 0;
        const double mu_e = bad ? cfg.fault_mu_est : cfg.measurement.mu;
        const double sg_e = bad ? cfg.fault_sigma_est : cfg.measurement.sigma;
        return histogram_opinion(z_transform(x, mu_e, sg_e), cfg.spec);
    };

    IntersectionRun run;
    auto add = [&](const AgentId& agent, const std::string& topic, unsigned n) {
        ReportedOpinion r;
        r.agent_id = agent + "#" + topic;
        r.opinion = sample_opinion(agent, n);
        run.by_id[r.agent_id] = r.opinion;
        run.reports.push_back(std::move(r));
    };
    add("A", "x", cfg.samples_full);
    add("B", "x", cfg.samples_full);
    add("C", "x", cfg.samples_occluded);
    add("RSU", "x", cfg.samples_full);
    // Attackers are unaware of vehicle C and never publish on x_c.
    add("C", "xc", cfg.samples_aux);
    add("RSU", "xc", cfg.samples_aux);
    return run;
}

}  // namespace detail

/// Per-run adjudication used by all intersection experiments: a single
/// detection over the pooled x and x_c reports, no source discounting, no
/// trust history. Returns the flagged agents and the elected reference.
struct AdjudicationOutcome {
    std::set<AgentId> flagged;
    ClassificationResult result;
};

inline AdjudicationOutcome adjudicate_intersection(const detail::IntersectionRun& run,
                                                   double theta) {
    AdjudicationOutcome out;
    out.result = detect(run.reports, theta);
    out.flagged = detail::flagged_agents(out.result);
    return out;
}

/// Runs one scenario at one threshold. Scenario 1: everyone honest.
/// Scenario 2: the RSU is miscalibrated. Scenario 3: vehicles A and B mount
/// a collaborative attack, unaware of vehicle C.
inline IntersectionRates run_intersection(int scenario, double theta, unsigned runs,
                                          std::uint64_t seed,
                                          const IntersectionConfig& cfg = {}) {
    if (scenario < 1 || scenario > 3) {
        throw ConfigError("scenario must be 1, 2 or 3");
    }
    if (runs == 0) {
        throw ConfigError("runs must be positive");
    }
    validate(cfg.spec);
    validate(cfg.measurement);

    IntersectionRates rates;
    rates.scenario = scenario;
    rates.theta = theta;
    rates.runs = runs;
    rates.seed = seed;

    std::set<AgentId> miscalibrated;
    if (scenario == 2) {
        miscalibrated = {"RSU"};
    } else if (scenario == 3) {
        miscalibrated = {"A", "B"};
    }

    unsigned correct = 0;
    unsigned both = 0;
    unsigned one = 0;
    unsigned wrong = 0;
    unsigned tp = 0;
    unsigned fp_agents = 0;
    for (unsigned r = 0; r < runs; ++r) {
        auto rng = derive_stream(seed, {static_cast<std::uint64_t>(scenario), r});
        const auto run = detail::make_intersection_run(cfg, miscalibrated, rng);
        const auto verdict = adjudicate_intersection(run, theta);
        const auto& fa = verdict.flagged;
        if (scenario == 1) {
            correct += fa.empty();
        } else if (scenario == 2) {
            tp += fa.count("RSU") > 0;
            fp_agents += fa.count("A") + fa.count("B") + fa.count("C");
        } else {
            const bool hit_a = fa.count("A") > 0;
            const bool hit_b = fa.count("B") > 0;
            both += hit_a && hit_b;
            one += hit_a || hit_b;
            wrong += (fa.count("C") || fa.count("RSU")) && !(hit_a || hit_b);
        }
    }
    const double n = static_cast<double>(runs);
    if (scenario == 1) {
        rates.all_honest_correct = correct / n;
    } else if (scenario == 2) {
        rates.tp = tp / n;
        rates.fp = fp_agents / (3.0 * n);
    } else {
        rates.detected = both / n;
        rates.at_least_one = one / n;
        rates.wrong_accusation = wrong / n;
    }
    return rates;
}

/// Threshold sweep over scenarios 3 and 1, common random numbers across
/// thresholds so the curves are smooth in theta.
inline SweepResult threshold_sweep(std::span<const double> thetas, unsigned runs,
                                   std::uint64_t seed, const IntersectionConfig& cfg = {}) {
    if (runs == 0) {
        throw ConfigError("runs must be positive");
    }
    for (double t : thetas) {
        if (t < 0.0 || t > 1.0) {
            throw ConfigError("theta values must lie in [0,1]");
        }
    }
    SweepResult result;
    result.runs = runs;
    result.seed = seed;
    std::vector<SweepRow> rows(thetas.size());
    for (std::size_t i = 0; i < thetas.size(); ++i) {
        rows[i] = SweepRow{thetas[i], 0.0, 0.0, 0.0, 0.0};
    }
    for (unsigned r = 0; r < runs; ++r) {
        auto rng3 = derive_stream(seed, {3, r});
        const auto run3 = detail::make_intersection_run(cfg, {"A", "B"}, rng3);
        auto rng1 = derive_stream(seed, {1, r});
        const auto run1 = detail::make_intersection_run(cfg, {}, rng1);
        for (std::size_t i = 0; i < thetas.size(); ++i) {
            const auto f3 = adjudicate_intersection(run3, thetas[i]).flagged;
            const bool hit_a = f3.count("A") > 0;
            const bool hit_b = f3.count("B") > 0;
            rows[i].p_detected += hit_a && hit_b;
            rows[i].p_at_least_one += hit_a || hit_b;
            rows[i].p_wrong_accusation += (f3.count("C") || f3.count("RSU")) && !(hit_a || hit_b);
            rows[i].p_all_honest += adjudicate_intersection(run1, thetas[i]).flagged.empty();
        }
    }
    const double n = static_cast<double>(runs);
    for (auto& row : rows) {
        row.p_detected /= n;
        row.p_at_least_one /= n;
        row.p_wrong_accusation /= n;
        row.p_all_honest /= n;
    }
    result.rows = std::move(rows);
    return result;
}

/// ROC sweep for the faulty-RSU scenario. FP is the per-honest-agent flag
/// rate, TP the per-run RSU flag rate; rows are ordered by fault then theta.
inline RocResult roc_sweep(std::span<const std::pair<double, double>> faults,
                           std::span<const double> thetas, unsigned runs, std::uint64_t seed,
                           const IntersectionConfig& base_cfg = {}) {
    if (runs == 0) {
        throw ConfigError("runs must be positive");
    }
    RocResult result;
    result.runs = runs;
    result.seed = seed;
    for (const auto& [mu_est, sigma_est] : faults) {
        IntersectionConfig cfg = base_cfg;
        cfg.fault_mu_est = mu_est;
        cfg.fault_sigma_est = sigma_est;
        std::vector<RocRow> rows(thetas.size());
        for (std::size_t i = 0; i < thetas.size(); ++i) {
            rows[i] = RocRow{mu_est, sigma_est, thetas[i], 0.0, 0.0};
        }
        for (unsigned r = 0; r < runs; ++r) {
            auto rng = derive_stream(seed, {2, r});
            const auto run = detail::make_intersection_run(cfg, {"RSU"}, rng);
            for (std::size_t i = 0; i < thetas.size(); ++i) {
                const auto fa = adjudicate_intersection(run, thetas[i]).flagged;
                rows[i].tp += fa.count("RSU") > 0;
                rows[i].fp += fa.count("A") + fa.count("B") + fa.count("C");
            }
        }
        for (auto& row : rows) {
            row.tp /= runs;
            row.fp /= 3.0 * runs;
        }
        result.rows.insert(result.rows.end(), rows.begin(), rows.end());
    }
    return result;
}

/// Ensemble recalibration study for scenario 2: on every run where the RSU
/// is flagged, Eq.-(21)-style estimates are taken against the average fusion
/// of the honest non-RSU reports and converted back to meters through the
/// faulty calibration.
struct RecalibrationStudy {
    double mean_mu = 0.0;      // meters
    double mean_sigma = 0.0;   // meters
    unsigned detected_runs = 0;
    unsigned runs = 0;
};

inline RecalibrationStudy run_recalibration(double theta, unsigned runs, std::uint64_t seed,
                                            const IntersectionConfig& cfg = {}) {
    if (runs == 0) {
        throw ConfigError("runs must be positive");
    }
    RecalibrationStudy study;
    study.runs = runs;
    double mu_sum = 0.0;
    double sigma_sum = 0.0;
    for (unsigned r = 0; r < runs; ++r) {
        auto rng = derive_stream(seed, {2, r});
        const auto run = detail::make_intersection_run(cfg, {"RSU"}, rng);
        const auto verdict = adjudicate_intersection(run, theta);
        if (verdict.flagged.count("RSU") == 0) {
            continue;
        }
        std::vector<Opinion> honest_others;
        for (const AgentId& id : verdict.result.honest) {
            if (detail::report_agent(id) != "RSU") {
                honest_others.push_back(run.by_id.at(id));
            }
        }
        if (honest_others.empty()) {
            continue;
        }
        const Opinion reference =
            honest_others.size() == 1
                ? honest_others.front()
                : average_fuse(std::span<const Opinion>(honest_others));
        const Recalibration rec = recalibrate(run.by_id.at("RSU#x"), reference, cfg.spec);
        mu_sum += cfg.fault_mu_est + cfg.fault_sigma_est * rec.mu_z;
        sigma_sum += cfg.fault_sigma_est * rec.sigma_z;
        ++study.detected_runs;
    }
    if (study.detected_runs > 0) {
        study.mean_mu = mu_sum / study.detected_runs;
        study.mean_sigma = sigma_sum / study.detected_runs;
    }
    return study;
}

// ---------------------------------------------------------------------------
// Large-scale synthetic stand-in
// ---------------------------------------------------------------------------

/// Synthetic replacement for the city-scale traffic study: topics of
/// `group_size` agents, a fixed fraction of them running a coordinated
/// miscalibration of half a sigma, which keeps their conflict near the
/// threshold the way the published operating point (p_tp around 45%)
/// implies. The error rate corrupts individual samples of every agent:
/// corrupted samples are redrawn one sigma off on the side opposite the
/// attack, so sensor error and attacks stay distinguishable phenomena.
struct LargeScaleConfig {
    HistogramSpec spec{5, -3.1, 3.1};
    unsigned group_size = 8;
    unsigned samples = 50;
    double misbehaving_fraction = 0.1;
    double attack_shift_sigmas = -0.5;
    double corruption_shift_sigmas = 1.0;
};

inline ScaleResult large_scale_synthetic(const LargeScaleConfig& cfg,
                                         std::span<const double> error_rates,
                                         std::span<const double> thetas,
                                         unsigned reports_per_cell, std::uint64_t seed) {
    if (cfg.misbehaving_fraction < 0.0 || cfg.misbehaving_fraction > 1.0) {
        throw ConfigError("misbehaving_fraction must lie in [0,1]");
    }
    if (cfg.group_size < 2 || reports_per_cell < cfg.group_size) {
        throw ConfigError("need at least one full topic group per cell");
    }
    validate(cfg.spec);
    ScaleResult result;
    result.reports_per_cell = reports_per_cell;
    result.seed = seed;
    const unsigned topics = reports_per_cell / cfg.group_size;

    for (std::size_t ei = 0; ei < error_rates.size(); ++ei) {
        const double err = error_rates[ei];
        if (err < 0.0 || err > 1.0) {
            throw ConfigError("error rates must lie in [0,1]");
        }
        // tallies per theta: [flagged misb, total misb, flagged honest, total honest]
        std::vector<std::array<double, 4>> tally(thetas.size(), {0.0, 0.0, 0.0, 0.0});
        for (unsigned t = 0; t < topics; ++t) {
            auto rng = derive_stream(seed, {9000 + ei, t});
            std::bernoulli_distribution is_misb(cfg.misbehaving_fraction);
            std::bernoulli_distribution corrupt(err);
            std::normal_distribution<double> unit(0.0, 1.0);

            std::vector<ReportedOpinion> reports;
            std::vector<bool> misb_flags;
            reports.reserve(cfg.group_size);
            for (unsigned a = 0; a < cfg.group_size; ++a) {
                const bool misb = is_misb(rng);
                const double agent_shift = misb ? cfg.attack_shift_sigmas : 0.0;
                std::vector<double> z(cfg.samples);
                for (double& v : z) {
                    v = unit(rng) + agent_shift;
                    if (err > 0.0 && corrupt(rng)) {
                        v = unit(rng) + agent_shift + cfg.corruption_shift_sigmas;
                    }
                }
                ReportedOpinion r;
                r.agent_id = "agent" + std::to_string(a);
                r.opinion = histogram_opinion(z, cfg.spec);
                reports.push_back(std::move(r));
                misb_flags.push_back(misb);
            }
            for (std::size_t ti = 0; ti < thetas.size(); ++ti) {
                const ClassificationResult res = detect(reports, thetas[ti]);
                for (unsigned a = 0; a < cfg.group_size; ++a) {
                    const bool flagged = res.misbehaving.count("agent" + std::to_string(a)) > 0;
                    if (misb_flags[a]) {
                        tally[ti][0] += flagged;
                        tally[ti][1] += 1.0;
                    } else {
                        tally[ti][2] += flagged;
                        tally[ti][3] += 1.0;
                    }
                }
            }
        }
        for (std::size_t ti = 0; ti < thetas.size(); ++ti) {
            ScaleRow row;
            row.error_rate = err;
            row.theta = thetas[ti];
            row.p_tp = tally[ti][1] > 0 ? tally[ti][0] / tally[ti][1]
                                        : std::numeric_limits<double>::quiet_NaN();
            row.p_fp = tally[ti][3] > 0 ? tally[ti][2] / tally[ti][3]
                                        : std::numeric_limits<double>::quiet_NaN();
            result.rows.push_back(row);
        }
    }
    return result;
}

/// Full detail of a single intersection run, for trace emission.
struct ReplayDetail {
    int scenario = 1;
    double theta = 0.15;
    std::uint64_t seed = 0;
    unsigned run_index = 0;
    std::vector<ReportedOpinion> reports;
    std::vector<ConflictGraph::Edge> pairwise;  // all pairs, including cut ones
    ClassificationResult result;
    std::set<AgentId> flagged_agents;
};

inline ReplayDetail replay_intersection(int scenario, double theta, std::uint64_t seed,
                                        unsigned run_index, const IntersectionConfig& cfg = {}) {
    if (scenario < 1 || scenario > 3) {
        throw ConfigError("scenario must be 1, 2 or 3");
    }
    std::set<AgentId> miscalibrated;
    if (scenario == 2) {
        miscalibrated = {"RSU"};
    } else if (scenario == 3) {
        miscalibrated = {"A", "B"};
    }
    auto rng = derive_stream(seed, {static_cast<std::uint64_t>(scenario), run_index});
    auto run = detail::make_intersection_run(cfg, miscalibrated, rng);

    ReplayDetail out;
    out.scenario = scenario;
    out.theta = theta;
    out.seed = seed;
    out.run_index = run_index;
    out.reports = run.reports;
    for (auto i = run.by_id.begin(); i != run.by_id.end(); ++i) {
        for (auto j = std::next(i); j != run.by_id.end(); ++j) {
            out.pairwise.push_back({i->first, j->first,
                                    degree_of_conflict(i->second, j->second)});
        }
    }
    const auto verdict = adjudicate_intersection(run, theta);
    out.result = verdict.result;
    out.flagged_agents = verdict.flagged;
    return out;
}

}  // namespace sltrust

#endif  // SLTRUST_SCENARIOS_HPP
