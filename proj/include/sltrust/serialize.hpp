#ifndef SLTRUST_SERIALIZE_HPP
#define SLTRUST_SERIALIZE_HPP

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sltrust/broker.hpp"
#include "sltrust/errors.hpp"
#include "sltrust/misbehavior.hpp"
#include "sltrust/opinion.hpp"
#include "sltrust/scenarios.hpp"

namespace sltrust {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Canonical opinion JSON: {"labels": [...], "belief": [...],
// "uncertainty": u, "base_rate": [...]}
// ---------------------------------------------------------------------------

inline json to_json(const Opinion& op) {
    return json{{"labels", op.domain.labels()},
                {"belief", op.belief},
                {"uncertainty", op.uncertainty},
                {"base_rate", op.base_rate}};
}

inline Opinion opinion_from_json(const json& j) {
    for (const char* key : {"labels", "belief", "uncertainty", "base_rate"}) {
        if (!j.contains(key)) {
            throw ConfigError(std::string("opinion JSON missing field '") + key + "'");
        }
    }
    Opinion op;
    op.domain = Domain(j.at("labels").get<std::vector<std::string>>());
    op.belief = j.at("belief").get<std::vector<double>>();
    op.uncertainty = j.at("uncertainty").get<double>();
    op.base_rate = j.at("base_rate").get<std::vector<double>>();
    validate(op);
    return op;
}

inline json to_json(const ClassificationResult& res) {
    json conflicts = json::object();
    for (const auto& [id, dc] : res.conflicts) {
        conflicts[id] = dc;
    }
    json weights = json::object();
    for (const auto& [id, rw] : res.revision_weights) {
        weights[id] = rw;
    }
    json candidates = json::array();
    for (const Opinion& op : res.candidate_references) {
        candidates.push_back(to_json(op));
    }
    return json{{"reference", to_json(res.reference)},
                {"candidate_references", candidates},
                {"honest", std::vector<AgentId>(res.honest.begin(), res.honest.end())},
                {"misbehaving",
                 std::vector<AgentId>(res.misbehaving.begin(), res.misbehaving.end())},
                {"conflicts", conflicts},
                {"revision_weights", weights},
                {"max_conflict", res.max_conflict},
                {"avg_conflict", res.avg_conflict},
                {"degenerate_conflict", res.degenerate_conflict}};
}

// ---------------------------------------------------------------------------
// Reports and trust stores
// ---------------------------------------------------------------------------

inline std::vector<ReportedOpinion> reports_from_json(const json& j) {
    if (!j.is_array()) {
        throw ConfigError("reports file must hold a JSON array");
    }
    std::vector<ReportedOpinion> reports;
    for (const json& item : j) {
        if (!item.contains("agent_id")) {
            throw ConfigError("report entry missing field 'agent_id'");
        }
        if (!item.contains("opinion")) {
            throw ConfigError("report entry missing field 'opinion'");
        }
        ReportedOpinion r;
        r.agent_id = item.at("agent_id").get<std::string>();
        r.opinion = opinion_from_json(item.at("opinion"));
        if (item.contains("context")) {
            const json& c = item.at("context");
            r.context.p_src = c.value("p_src", 1.0);
            r.context.t_g = c.value("t_g", 1.0);
            r.context.t_t = c.value("t_t", 1.0);
            r.context.distance = c.value("distance", 0.0);
            r.context.age = c.value("age", 0.0);
            r.context.p0 = c.value("p0", 1.0);
        }
        reports.push_back(std::move(r));
    }
    return reports;
}

/// Trust stores serialize as JSON lines, one record per agent.
inline std::string trust_store_to_jsonl(const TrustStore& store) {
    std::ostringstream out;
    for (const auto& [id, tr] : store) {
        out << json{{"agent_id", id},
                    {"b", tr.trust.belief},
                    {"d", tr.trust.disbelief},
                    {"u", tr.trust.uncertainty},
                    {"a", tr.trust.base_rate},
                    {"lambda", tr.dependence_factor}}
                   .dump()
            << "\n";
    }
    return out.str();
}

inline TrustStore trust_store_from_jsonl(std::istream& in) {
    TrustStore store;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        const json j = json::parse(line);
        for (const char* key : {"agent_id", "b", "d", "u", "a"}) {
            if (!j.contains(key)) {
                throw ConfigError(std::string("trust record missing field '") + key + "'");
            }
        }
        TrustRecord tr;
        tr.agent_id = j.at("agent_id").get<std::string>();
        tr.trust = BinomialOpinion{j.at("b").get<double>(), j.at("d").get<double>(),
                                   j.at("u").get<double>(), j.at("a").get<double>()};
        tr.dependence_factor = j.value("lambda", 0.5);
        validate(tr.trust);
        store[tr.agent_id] = tr;
    }
    return store;
}

// ---------------------------------------------------------------------------
// Simulation config and trace
// ---------------------------------------------------------------------------

inline SimConfig sim_config_from_json(const json& j) {
    SimConfig cfg;
    cfg.seed = j.value("seed", 0ULL);
    if (!j.contains("cycles")) {
        throw ConfigError("config missing field 'cycles'");
    }
    cfg.cycles = j.at("cycles").get<unsigned>();
    cfg.theta = j.value("theta", 0.15);
    cfg.lambda_repeat = j.value("lambda_repeat", 0.5);
    cfg.p_sa = j.value("p_sa", 0.999);
    cfg.w_tr = j.value("w_tr", 5.0);
    cfg.initial_trust_evidence = j.value("initial_trust_evidence", 18.0);
    cfg.adjudicate_with_source_reliability =
        j.value("adjudicate_with_source_reliability", false);
    if (j.contains("ban")) {
        const json& b = j.at("ban");
        const std::string policy = b.value("policy", "threshold");
        if (policy == "threshold") {
            cfg.ban.kind = BanPolicy::Kind::TrustThreshold;
            cfg.ban.trust_floor = b.value("trust_floor", 0.2);
        } else if (policy == "batch") {
            cfg.ban.kind = BanPolicy::Kind::Batch;
            cfg.ban.batch_size = b.value("batch_size", 3u);
        } else {
            throw ConfigError("ban.policy must be 'threshold' or 'batch'");
        }
    }
    if (j.contains("histogram")) {
        const json& h = j.at("histogram");
        cfg.spec.bins = h.value("bins", 5u);
        cfg.spec.z_lo = h.value("z_lo", -3.1);
        cfg.spec.z_hi = h.value("z_hi", 3.1);
    }
    if (j.contains("measurement")) {
        const json& m = j.at("measurement");
        cfg.measurement.mu = m.value("mu", 0.25);
        cfg.measurement.sigma = m.value("sigma", 0.75);
    }
    if (!j.contains("topics") || !j.at("topics").is_array()) {
        throw ConfigError("config missing array field 'topics'");
    }
    for (const json& t : j.at("topics")) {
        if (!t.contains("id")) {
            throw ConfigError("topic entry missing field 'id'");
        }
        Topic topic;
        topic.topic_id = t.at("id").get<std::string>();
        topic.window_start = t.value("window_start", 0u);
        topic.window_end = t.value("window_end", cfg.cycles);
        cfg.topics.push_back(std::move(topic));
    }
    if (!j.contains("agents") || !j.at("agents").is_array()) {
        throw ConfigError("config missing array field 'agents'");
    }
    for (const json& a : j.at("agents")) {
        if (!a.contains("id")) {
            throw ConfigError("agent entry missing field 'id'");
        }
        AgentProfile profile;
        profile.true_id = a.at("id").get<std::string>();
        const std::string role = a.value("role", "provider");
        if (role == "provider") {
            profile.role = AgentRole::Provider;
        } else if (role == "user") {
            profile.role = AgentRole::User;
        } else if (role == "hidden_observer") {
            profile.role = AgentRole::HiddenObserver;
        } else {
            throw ConfigError("agent '" + profile.true_id + "' has unknown role '" + role + "'");
        }
        if (!a.contains("topics") || !a.at("topics").is_array()) {
            throw ConfigError("agent '" + profile.true_id + "' missing array field 'topics'");
        }
        profile.topics = a.at("topics").get<std::vector<std::string>>();
        profile.window_start = a.value("window_start", 0u);
        profile.window_end = a.value("window_end", cfg.cycles);
        profile.samples = a.value("samples", 50u);
        if (a.contains("behavior")) {
            const json& b = a.at("behavior");
            const std::string type = b.value("type", "honest");
            if (type == "honest") {
                profile.behavior.type = BehaviorSpec::Type::Honest;
            } else if (type == "faulty") {
                profile.behavior.type = BehaviorSpec::Type::Faulty;
                profile.behavior.mu_est = b.value("mu_est", cfg.measurement.mu);
                profile.behavior.sigma_est = b.value("sigma_est", cfg.measurement.sigma);
            } else if (type == "sybil") {
                profile.behavior.type = BehaviorSpec::Type::Sybil;
            } else {
                throw ConfigError("agent '" + profile.true_id + "' has unknown behavior '" +
                                  type + "'");
            }
        }
        cfg.agents.push_back(std::move(profile));
    }
    return cfg;
}

inline json to_json(const TraceEvent& ev) {
    json payload = json::object();
    for (const auto& [k, v] : ev.payload) {
        payload[k] = v;
    }
    return json{{"cycle", ev.cycle},
                {"event_type", ev.event_type},
                {"agent", ev.agent},
                {"topic", ev.topic},
                {"payload", payload}};
}

inline std::string trace_to_jsonl(const SimulationTrace& trace) {
    std::ostringstream out;
    for (const TraceEvent& ev : trace.events) {
        out << to_json(ev).dump() << "\n";
    }
    return out.str();
}

inline json to_json(const ReplayDetail& replay) {
    json reports = json::array();
    for (const ReportedOpinion& r : replay.reports) {
        reports.push_back(json{{"agent_id", r.agent_id}, {"opinion", to_json(r.opinion)}});
    }
    json pairwise = json::array();
    for (const auto& e : replay.pairwise) {
        pairwise.push_back(json{{"a", e.a}, {"b", e.b}, {"dc", e.dc}});
    }
    return json{{"scenario", replay.scenario},
                {"theta", replay.theta},
                {"seed", replay.seed},
                {"run_index", replay.run_index},
                {"reports", reports},
                {"pairwise_conflicts", pairwise},
                {"classification", to_json(replay.result)},
                {"flagged_agents", std::vector<AgentId>(replay.flagged_agents.begin(),
                                                        replay.flagged_agents.end())}};
}

// ---------------------------------------------------------------------------
// CSV emission
// ---------------------------------------------------------------------------

namespace detail {

inline std::string format_rate(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace detail

inline std::string sweep_to_csv(const SweepResult& result) {
    std::ostringstream out;
    out << "theta,p_detected,p_at_least_one,p_wrong_accusation,p_all_honest\n";
    for (const SweepRow& row : result.rows) {
        out << detail::format_rate(row.theta) << ',' << detail::format_rate(row.p_detected)
            << ',' << detail::format_rate(row.p_at_least_one) << ','
            << detail::format_rate(row.p_wrong_accusation) << ','
            << detail::format_rate(row.p_all_honest) << "\n";
    }
    return out.str();
}

inline std::string roc_to_csv(const RocResult& result) {
    std::ostringstream out;
    out << "mu_est,sigma_est,theta,fp,tp\n";
    for (const RocRow& row : result.rows) {
        out << detail::format_rate(row.mu_est) << ',' << detail::format_rate(row.sigma_est)
            << ',' << detail::format_rate(row.theta) << ',' << detail::format_rate(row.fp)
            << ',' << detail::format_rate(row.tp) << "\n";
    }
    return out.str();
}

inline std::string scale_to_csv(const ScaleResult& result) {
    std::ostringstream out;
    out << "error_rate,theta,p_tp,p_fp\n";
    for (const ScaleRow& row : result.rows) {
        out << detail::format_rate(row.error_rate) << ',' << detail::format_rate(row.theta)
            << ',' << detail::format_rate(row.p_tp) << ',' << detail::format_rate(row.p_fp)
            << "\n";
    }
    return out.str();
}

/// Writes through a temp file in the same directory and renames, so readers
/// never observe a half-written artifact.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw ConfigError("cannot open '" + tmp.string() + "' for writing");
        }
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace sltrust

#endif  // SLTRUST_SERIALIZE_HPP
