#ifndef SLTRUST_BROKER_HPP
#define SLTRUST_BROKER_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "sltrust/errors.hpp"
#include "sltrust/misbehavior.hpp"
#include "sltrust/rng.hpp"
#include "sltrust/scenarios.hpp"
#include "sltrust/trust.hpp"

namespace sltrust {

enum class AgentRole { Provider, User, HiddenObserver };

/// How an agent behaves when measuring and talking to the broker.
struct BehaviorSpec {
    enum class Type { Honest, Faulty, Sybil };
    Type type = Type::Honest;
    double mu_est = 0.25;     // calibration used when faulty
    double sigma_est = 0.75;
};

struct AgentProfile {
    AgentId true_id;
    AgentRole role = AgentRole::Provider;
    std::vector<std::string> topics;
    unsigned window_start = 0;
    unsigned window_end = 0;  // exclusive
    unsigned samples = 50;
    BehaviorSpec behavior;

    bool active(unsigned cycle) const {
        return cycle >= window_start && cycle < window_end;
    }
};

struct Topic {
    std::string topic_id;
    unsigned window_start = 0;
    unsigned window_end = 0;

    bool active(unsigned cycle) const {
        return cycle >= window_start && cycle < window_end;
    }
};

struct BanPolicy {
    enum class Kind { TrustThreshold, Batch };
    Kind kind = Kind::TrustThreshold;
    double trust_floor = 0.2;   // permanent revocation below this projection
    unsigned batch_size = 3;    // consecutive flagged reports per batch
};

struct SimConfig {
    std::uint64_t seed = 0;
    unsigned cycles = 0;
    double theta = 0.15;
    double lambda_repeat = 0.5;
    double p_sa = 0.999;
    double w_tr = 5.0;
    // Certificate holders enter the system with a favorable prior; heavy
    // source-reliability discounting otherwise mutes every conflict before
    // any reputation exists.
    double initial_trust_evidence = 18.0;
    // When set, adjudication discounts incident evidence by the stored
    // source reliability. Off by default: a distrusted agent's muted
    // opinions otherwise stop conflicting with anything, which stalls both
    // revision and the ban policies.
    bool adjudicate_with_source_reliability = false;
    BanPolicy ban;
    HistogramSpec spec{5, -3.1, 3.1};
    MeasurementModel measurement;
    std::vector<Topic> topics;
    std::vector<AgentProfile> agents;
};

struct TraceEvent {
    unsigned cycle = 0;
    std::string event_type;
    AgentId agent;
    std::string topic;
    std::map<std::string, std::string> payload;
};

enum class RegistrationOutcome { Accepted, SybilFlagged, RevokedRejected };

struct Incident {
    AgentId reporter;  // true id
    std::string topic;
    unsigned cycle = 0;
    std::vector<ReportedOpinion> reports;  // true-id keyed evidence
};

struct SimulationTrace {
    std::vector<TraceEvent> events;
    TrustStore final_trust;
    std::set<AgentId> revoked;
    unsigned cycles = 0;
    std::uint64_t seed = 0;
};

/// Synchronous pub/sub broker: per cycle it ages trust, resolves pseudonym
/// registrations (flagging Sybils), routes published opinions, lets users
/// cross-check deliveries, adjudicates reported incidents as neutral judge,
/// and rewards successful cooperations.
class Broker {
public:
    explicit Broker(SimConfig config) : cfg_(std::move(config)) {
        validate_config();
        for (const AgentProfile& a : cfg_.agents) {
            TrustRecord tr;
            tr.agent_id = a.true_id;
            tr.trust = detail::binomial_from_evidence(cfg_.initial_trust_evidence, 0.0, 0.5);
            tr.dependence_factor = cfg_.lambda_repeat;
            tr.revision_reward = cfg_.w_tr;
            trust_[a.true_id] = tr;
        }
    }

    /// Registration with pseudonym resolution; one pseudonym per agent and
    /// topic. A second pseudonym on the same topic flags the Sybil and
    /// voids all its registrations there.
    RegistrationOutcome register_agent(const AgentId& true_id, const std::string& pseudonym,
                                       const std::string& topic, unsigned cycle) {
        if (revoked_.count(true_id)) {
            log(cycle, "register_rejected", true_id, topic, {{"reason", "revoked"}});
            return RegistrationOutcome::RevokedRejected;
        }
        auto& by_true = registrations_[topic];
        auto it = by_true.find(true_id);
        if (it != by_true.end() && it->second != pseudonym) {
            by_true.erase(it);
            sybil_flagged_[topic].insert(true_id);
            log(cycle, "sybil_flag", true_id, topic, {{"pseudonym", pseudonym}});
            record_report_outcome(true_id, true, cycle);
            return RegistrationOutcome::SybilFlagged;
        }
        if (sybil_flagged_[topic].count(true_id)) {
            return RegistrationOutcome::SybilFlagged;
        }
        by_true[true_id] = pseudonym;
        log(cycle, "register", true_id, topic, {{"pseudonym", pseudonym}});
        return RegistrationOutcome::Accepted;
    }

    const TrustStore& trust() const { return trust_; }
    const std::set<AgentId>& revoked() const { return revoked_; }

    /// Runs the synchronous cycle loop and returns the full trace.
    SimulationTrace run_cycles() {
        SimulationTrace trace;
        for (unsigned cycle = 0; cycle < cfg_.cycles; ++cycle) {
            step(cycle);
        }
        trace.events = events_;
        trace.final_trust = trust_;
        trace.revoked = revoked_;
        trace.cycles = cfg_.cycles;
        trace.seed = cfg_.seed;
        return trace;
    }

private:
    struct Publication {
        AgentId true_id;
        std::string pseudonym;
        Opinion opinion;
    };

    void validate_config() const {
        std::set<AgentId> ids;
        for (const AgentProfile& a : cfg_.agents) {
            if (!ids.insert(a.true_id).second) {
                throw ConfigError("duplicate agent id '" + a.true_id + "'");
            }
            if (a.samples < 1) {
                throw ConfigError("agent '" + a.true_id + "' needs samples >= 1");
            }
        }
        std::set<std::string> topic_ids;
        for (const Topic& t : cfg_.topics) {
            if (!topic_ids.insert(t.topic_id).second) {
                throw ConfigError("duplicate topic id '" + t.topic_id + "'");
            }
        }
        for (const AgentProfile& a : cfg_.agents) {
            for (const std::string& t : a.topics) {
                if (!topic_ids.count(t)) {
                    throw ConfigError("agent '" + a.true_id + "' references unknown topic '" +
                                      t + "'");
                }
            }
        }
        validate(cfg_.spec);
        validate(cfg_.measurement);
    }

    void step(unsigned cycle) {
        // Bookkeeping: trust ages before any judging or fusion this round.
        for (auto& [id, tr] : trust_) {
            tr = age_trust(tr, AgingParams{cfg_.p_sa});
        }
        registrations_.clear();
        sybil_flagged_.clear();

        // Registration. Sybil agents present a second pseudonym on each of
        // their topics and are flagged by pseudonym resolution.
        for (std::size_t ai = 0; ai < cfg_.agents.size(); ++ai) {
            const AgentProfile& a = cfg_.agents[ai];
            if (!a.active(cycle) || revoked_.count(a.true_id)) {
                continue;
            }
            for (const std::string& topic : a.topics) {
                if (!topic_window(topic).active(cycle)) {
                    continue;
                }
                const std::string pseudonym = "p:" + a.true_id + ":" + topic;
                register_agent(a.true_id, pseudonym, topic, cycle);
                if (a.behavior.type == BehaviorSpec::Type::Sybil) {
                    register_agent(a.true_id, pseudonym + ":alt", topic, cycle);
                }
            }
        }

        // Routing plus hidden-observer recording, then user checks.
        std::map<std::string, std::vector<Publication>> published;
        std::map<std::string, std::vector<Publication>> observed;
        for (std::size_t ai = 0; ai < cfg_.agents.size(); ++ai) {
            const AgentProfile& a = cfg_.agents[ai];
            if (!a.active(cycle) || revoked_.count(a.true_id)) {
                continue;
            }
            for (const std::string& topic : a.topics) {
                if (!topic_window(topic).active(cycle)) {
                    continue;
                }
                if (a.role == AgentRole::Provider) {
                    auto reg = registrations_[topic].find(a.true_id);
                    if (reg == registrations_[topic].end()) {
                        continue;  // Sybil-voided registration publishes nothing
                    }
                    Publication pub{a.true_id, reg->second, measure(a, topic, cycle)};
                    log(cycle, "publish", a.true_id, topic, {{"pseudonym", pub.pseudonym}});
                    published[topic].push_back(std::move(pub));
                } else if (a.role == AgentRole::HiddenObserver) {
                    observed[topic].push_back(
                        Publication{a.true_id, "", measure(a, topic, cycle)});
                }
            }
        }

        std::vector<Incident> incidents;
        std::set<std::string> incident_topics;
        for (std::size_t ai = 0; ai < cfg_.agents.size(); ++ai) {
            const AgentProfile& a = cfg_.agents[ai];
            if (a.role != AgentRole::User || !a.active(cycle) || revoked_.count(a.true_id)) {
                continue;
            }
            for (const std::string& topic : a.topics) {
                if (!topic_window(topic).active(cycle)) {
                    continue;
                }
                auto it = published.find(topic);
                if (it == published.end() || it->second.empty()) {
                    continue;
                }
                for (const Publication& pub : it->second) {
                    log(cycle, "deliver", pub.true_id, topic, {{"to", a.true_id}});
                }
                const Opinion own = measure(a, topic, cycle);
                auto incident = user_check_and_report(a, topic, cycle, it->second, own);
                if (incident && !incident_topics.count(topic)) {
                    incident_topics.insert(topic);
                    incidents.push_back(std::move(*incident));
                }
                participants_[topic].insert(a.true_id);
            }
        }
        for (const auto& [topic, pubs] : published) {
            for (const Publication& pub : pubs) {
                participants_[topic].insert(pub.true_id);
            }
        }

        // Adjudication, then success rewards for incident-free topics.
        for (Incident& incident : incidents) {
            adjudicate(incident, observed[incident.topic], cycle);
        }
        for (const auto& [topic, pubs] : published) {
            if (incident_topics.count(topic) || pubs.empty()) {
                continue;
            }
            const auto& group = participants_[topic];
            if (group.size() < 2) {
                continue;  // nobody to cooperate with, nothing to reward
            }
            for (const AgentId& id : group) {
                if (!revoked_.count(id)) {
                    reward(id, 1.0, group, cycle, topic);
                }
            }
            remember_cooperation(group);
        }
        participants_.clear();
    }

    /// User-side consistency check: the user fuses deliveries with its own
    /// measurement and reports an incident when anything is flagged. With a
    /// single opinion no check is possible and nothing is reported.
    std::optional<Incident> user_check_and_report(const AgentProfile& user,
                                                  const std::string& topic, unsigned cycle,
                                                  const std::vector<Publication>& deliveries,
                                                  const Opinion& own) {
        std::vector<ReportedOpinion> reports;
        for (const Publication& pub : deliveries) {
            reports.push_back(ReportedOpinion{pub.pseudonym, pub.opinion, {}});
        }
        reports.push_back(ReportedOpinion{"self:" + user.true_id, own, {}});
        if (reports.size() < 2) {
            return std::nullopt;
        }
        const ClassificationResult res = detect(reports, cfg_.theta);
        if (res.misbehaving.empty()) {
            return std::nullopt;
        }
        log(cycle, "incident", user.true_id, topic,
            {{"flagged", std::to_string(res.misbehaving.size())}});

        Incident incident;
        incident.reporter = user.true_id;
        incident.topic = topic;
        incident.cycle = cycle;
        for (const Publication& pub : deliveries) {
            incident.reports.push_back(ReportedOpinion{pub.true_id, pub.opinion, {}});
        }
        incident.reports.push_back(ReportedOpinion{user.true_id, own, {}});
        return incident;
    }

    /// Court-case adjudication: all involved agents are temporarily
    /// suspended, the broker re-runs detection over the retained reports
    /// plus hidden-observer reports with source reliability from the trust
    /// store, revises trust of the flagged agents, rewards the vindicated,
    /// and applies the ban policy.
    void adjudicate(const Incident& incident, const std::vector<Publication>& observers,
                    unsigned cycle) {
        std::vector<ReportedOpinion> reports = incident.reports;
        for (const Publication& obs : observers) {
            reports.push_back(ReportedOpinion{obs.true_id, obs.opinion, {}});
        }
        std::set<AgentId> involved;
        for (const ReportedOpinion& r : incident.reports) {
            involved.insert(r.agent_id);
            log(cycle, "suspend", r.agent_id, incident.topic, {});
        }
        if (reports.size() < 2) {
            return;
        }
        DetectOptions opts;
        opts.trust = &trust_;
        opts.use_store_reliability = cfg_.adjudicate_with_source_reliability;
        opts.revise = true;
        const ClassificationResult res = detect(reports, cfg_.theta, opts, &trust_);

        std::string flagged_list;
        for (const AgentId& id : res.misbehaving) {
            flagged_list += (flagged_list.empty() ? "" : ",") + id;
        }
        log(cycle, "verdict", incident.reporter, incident.topic,
            {{"misbehaving", flagged_list},
             {"degenerate", res.degenerate_conflict ? "1" : "0"}});

        for (const auto& [id, rw] : res.revision_weights) {
            log(cycle, "trust_revised", id, incident.topic, {{"rw", std::to_string(rw)}});
            record_report_outcome(id, true, cycle);
        }
        for (const AgentId& id : involved) {
            if (res.misbehaving.count(id)) {
                continue;
            }
            log(cycle, "reinstate", id, incident.topic, {});
            reward(id, cfg_.w_tr, involved, cycle, incident.topic);
            record_report_outcome(id, false, cycle);
        }
        remember_cooperation(involved);

        if (cfg_.ban.kind == BanPolicy::Kind::TrustThreshold) {
            for (const AgentId& id : res.misbehaving) {
                auto it = trust_.find(id);
                if (it != trust_.end() &&
                    source_reliability(it->second.trust) < cfg_.ban.trust_floor) {
                    revoke(id, cycle, incident.topic);
                }
            }
        }
    }

    void reward(const AgentId& id, double weight, const std::set<AgentId>& group,
                unsigned cycle, const std::string& topic) {
        auto it = trust_.find(id);
        if (it == trust_.end()) {
            return;
        }
        const double lambda = repeat_cooperation(id, group) ? cfg_.lambda_repeat : 0.0;
        if (lambda == 0.0) {
            it->second = reward_success(it->second, weight);
        } else {
            // The accumulated record stays independent; only the increment
            // carries the repeat-cooperation dependence.
            BinomialOpinion increment =
                detail::binomial_from_evidence(weight, 0.0, it->second.trust.base_rate);
            it->second.trust =
                accumulate_partially_dependent(it->second.trust, increment, 0.0, lambda);
        }
        log(cycle, "reward", id, topic,
            {{"weight", std::to_string(weight)}, {"lambda", std::to_string(lambda)}});
    }

    bool repeat_cooperation(const AgentId& id, const std::set<AgentId>& group) const {
        for (const AgentId& other : group) {
            if (other == id) {
                continue;
            }
            auto key = id < other ? std::make_pair(id, other) : std::make_pair(other, id);
            if (pair_successes_.count(key)) {
                return true;
            }
        }
        return false;
    }

    void remember_cooperation(const std::set<AgentId>& group) {
        for (auto i = group.begin(); i != group.end(); ++i) {
            for (auto j = std::next(i); j != group.end(); ++j) {
                pair_successes_.insert({*i, *j});
            }
        }
    }

    /// Ban bookkeeping under the batch policy: a batch of consecutive
    /// flagged reports depletes trust; every full batch starts fresh.
    void record_report_outcome(const AgentId& id, bool detected, unsigned cycle) {
        if (cfg_.ban.kind != BanPolicy::Kind::Batch) {
            return;
        }
        auto& state = batch_state_[id];
        state.all_detected = state.position == 0 ? detected : (state.all_detected && detected);
        ++state.position;
        if (state.position >= cfg_.ban.batch_size) {
            if (state.all_detected) {
                revoke(id, cycle, "");
            }
            state.position = 0;
            state.all_detected = false;
        }
    }

    void revoke(const AgentId& id, unsigned cycle, const std::string& topic) {
        if (revoked_.insert(id).second) {
            log(cycle, "revoke", id, topic, {});
        }
    }

    Opinion measure(const AgentProfile& a, const std::string& topic, unsigned cycle) {
        auto rng = derive_stream(cfg_.seed,
                                 {0x6D, cycle, agent_index(a.true_id), topic_index(topic)});
        std::normal_distribution<double> noise(cfg_.measurement.mu, cfg_.measurement.sigma);
        std::vector<double> x(a.samples);
        for (double& v : x) {
            v = noise(rng);
        }
        const bool bad = a.behavior.type == BehaviorSpec::Type::Faulty;
        const double mu_e = bad ? a.behavior.mu_est : cfg_.measurement.mu;
        const double sg_e = bad ? a.behavior.sigma_est : cfg_.measurement.sigma;
        return histogram_opinion(z_transform(x, mu_e, sg_e), cfg_.spec);
    }

    const Topic& topic_window(const std::string& id) const {
        for (const Topic& t : cfg_.topics) {
            if (t.topic_id == id) {
                return t;
            }
        }
        throw ConfigError("unknown topic '" + id + "'");
    }

    std::uint64_t agent_index(const AgentId& id) const {
        for (std::size_t i = 0; i < cfg_.agents.size(); ++i) {
            if (cfg_.agents[i].true_id == id) {
                return i;
            }
        }
        return cfg_.agents.size();
    }

    std::uint64_t topic_index(const std::string& id) const {
        for (std::size_t i = 0; i < cfg_.topics.size(); ++i) {
            if (cfg_.topics[i].topic_id == id) {
                return i;
            }
        }
        return cfg_.topics.size();
    }

    void log(unsigned cycle, const std::string& type, const AgentId& agent,
             const std::string& topic, std::map<std::string, std::string> payload) {
        events_.push_back(TraceEvent{cycle, type, agent, topic, std::move(payload)});
    }

    struct BatchState {
        unsigned position = 0;
        bool all_detected = false;
    };

    SimConfig cfg_;
    TrustStore trust_;
    std::set<AgentId> revoked_;
    std::map<std::string, std::map<AgentId, std::string>> registrations_;  // topic -> true->pseudonym
    std::map<std::string, std::set<AgentId>> sybil_flagged_;
    std::map<std::string, std::set<AgentId>> participants_;
    std::set<std::pair<AgentId, AgentId>> pair_successes_;
    std::map<AgentId, BatchState> batch_state_;
    std::vector<TraceEvent> events_;
};

inline SimulationTrace run_cycles(const SimConfig& config) {
    Broker broker(config);
    return broker.run_cycles();
}

}  // namespace sltrust

#endif  // SLTRUST_BROKER_HPP
