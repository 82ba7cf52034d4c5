#ifndef SLTRUST_MISBEHAVIOR_HPP
#define SLTRUST_MISBEHAVIOR_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sltrust/errors.hpp"
#include "sltrust/opinion.hpp"
#include "sltrust/trust.hpp"

namespace sltrust {

using AgentId = std::string;
using TrustStore = std::map<AgentId, TrustRecord>;

/// One incoming report: who said it, what they said, and the discounting
/// context it arrives with.
struct ReportedOpinion {
    AgentId agent_id;
    Opinion opinion;
    DiscountContext context;
};

/// Pairwise conflict graph after thresholding. Retained edges all satisfy
/// dc <= theta and are sorted ascending by conflict.
struct ConflictGraph {
    struct Edge {
        AgentId a;
        AgentId b;
        double dc;
    };
    std::vector<AgentId> vertices;  // sorted
    std::vector<Edge> edges;        // retained, ascending by (dc, a, b)
    double theta = 0.0;

    bool adjacent(const AgentId& x, const AgentId& y) const {
        for (const Edge& e : edges) {
            if ((e.a == x && e.b == y) || (e.a == y && e.b == x)) {
                return true;
            }
        }
        return false;
    }
};

/// Outcome of one full detection run.
struct ClassificationResult {
    Opinion reference;
    std::vector<Opinion> candidate_references;
    std::set<AgentId> honest;
    std::set<AgentId> misbehaving;
    std::map<AgentId, double> conflicts;         // DC to the elected reference
    std::map<AgentId, double> revision_weights;  // misbehaving agents only
    double max_conflict = 0.0;
    double avg_conflict = 0.0;
    bool degenerate_conflict = false;  // MC == AC, revision suppressed
};

/// Pairwise degree of conflict: half the L1 distance of the projected
/// probabilities, damped by both opinions' confidence.
inline double degree_of_conflict(const Opinion& a, const Opinion& b) {
    if (a.domain != b.domain) {
        throw DomainMismatch("conflict is only defined on a shared domain");
    }
    const std::vector<double> pa = project(a);
    const std::vector<double> pb = project(b);
    double l1 = 0.0;
    for (std::size_t i = 0; i < pa.size(); ++i) {
        l1 += std::abs(pa[i] - pb[i]);
    }
    return 0.5 * l1 * (1.0 - a.uncertainty) * (1.0 - b.uncertainty);
}

/// Builds the thresholded conflict graph over already-discounted reports.
inline ConflictGraph build_conflict_graph(const std::vector<ReportedOpinion>& reports,
                                          double theta) {
    if (reports.size() < 2) {
        throw InsufficientReports("conflict clustering needs at least two reports");
    }
    ConflictGraph g;
    g.theta = theta;
    std::map<AgentId, const Opinion*> by_id;
    for (const ReportedOpinion& r : reports) {
        by_id[r.agent_id] = &r.opinion;
    }
    for (const auto& [id, op] : by_id) {
        g.vertices.push_back(id);
    }
    for (std::size_t i = 0; i < g.vertices.size(); ++i) {
        for (std::size_t j = i + 1; j < g.vertices.size(); ++j) {
            const double dc = degree_of_conflict(*by_id[g.vertices[i]], *by_id[g.vertices[j]]);
            if (dc <= theta) {
                g.edges.push_back({g.vertices[i], g.vertices[j], dc});
            }
        }
    }
    std::sort(g.edges.begin(), g.edges.end(), [](const auto& x, const auto& y) {
        return std::tie(x.dc, x.a, x.b) < std::tie(y.dc, y.a, y.b);
    });
    return g;
}

/// Connected components of maximal cardinality, each sorted, ordered by
/// first member. Smaller components are pruned.
inline std::vector<std::vector<AgentId>> dominant_components(const ConflictGraph& g) {
    std::map<AgentId, std::vector<AgentId>> adj;
    for (const AgentId& v : g.vertices) {
        adj[v];
    }
    for (const auto& e : g.edges) {
        adj[e.a].push_back(e.b);
        adj[e.b].push_back(e.a);
    }
    std::set<AgentId> seen;
    std::vector<std::vector<AgentId>> comps;
    for (const AgentId& v : g.vertices) {
        if (seen.count(v)) {
            continue;
        }
        std::vector<AgentId> stack{v};
        std::set<AgentId> comp;
        while (!stack.empty()) {
            AgentId x = stack.back();
            stack.pop_back();
            if (!comp.insert(x).second) {
                continue;
            }
            for (const AgentId& y : adj[x]) {
                if (!comp.count(y)) {
                    stack.push_back(y);
                }
            }
        }
        seen.insert(comp.begin(), comp.end());
        comps.emplace_back(comp.begin(), comp.end());
    }
    std::size_t max_size = 0;
    for (const auto& c : comps) {
        max_size = std::max(max_size, c.size());
    }
    std::vector<std::vector<AgentId>> dominant;
    for (auto& c : comps) {
        if (c.size() == max_size) {
            dominant.push_back(std::move(c));
        }
    }
    std::sort(dominant.begin(), dominant.end());
    return dominant;
}

/// Reference opinion of one component: the unique vertex adjacent to every
/// other member if one exists, otherwise the average fusion of all members.
inline Opinion reference_opinion(const ConflictGraph& g, const std::vector<AgentId>& component,
                                 const std::map<AgentId, Opinion>& opinions) {
    if (component.empty()) {
        throw InsufficientReports("empty component has no reference");
    }
    if (component.size() == 1) {
        return opinions.at(component.front());
    }
    std::vector<AgentId> hubs;
    for (const AgentId& v : component) {
        bool all = true;
        for (const AgentId& w : component) {
            if (w != v && !g.adjacent(v, w)) {
                all = false;
                break;
            }
        }
        if (all) {
            hubs.push_back(v);
        }
    }
    if (hubs.size() == 1) {
        return opinions.at(hubs.front());
    }
    std::vector<Opinion> members;
    members.reserve(component.size());
    for (const AgentId& v : component) {
        members.push_back(opinions.at(v));
    }
    return average_fuse(std::span<const Opinion>(members));
}

/// Scores every agent against the reference and partitions by the threshold;
/// the boundary dc == theta counts as honest.
struct ClassifyOutcome {
    std::set<AgentId> honest;
    std::set<AgentId> misbehaving;
    std::map<AgentId, double> conflicts;
};

inline ClassifyOutcome classify(const std::map<AgentId, Opinion>& opinions,
                                const Opinion& reference, double theta) {
    ClassifyOutcome out;
    for (const auto& [id, op] : opinions) {
        const double dc = degree_of_conflict(op, reference);
        out.conflicts[id] = dc;
        if (dc <= theta) {
            out.honest.insert(id);
        } else {
            out.misbehaving.insert(id);
        }
    }
    return out;
}

/// One competing hypothesis: a candidate reference with its classification.
struct Candidate {
    Opinion reference;
    std::vector<AgentId> members;  // component, sorted
    ClassifyOutcome outcome;

    double avg_honest_conflict() const {
        if (outcome.honest.empty()) {
            return 0.0;
        }
        double sum = 0.0;
        for (const AgentId& id : outcome.honest) {
            sum += outcome.conflicts.at(id);
        }
        return sum / static_cast<double>(outcome.honest.size());
    }
};

/// Law-of-parsimony selection: largest honest set, then lowest average
/// conflict among honest members, then first component in sorted order.
inline std::size_t select_reference(const std::vector<Candidate>& candidates) {
    if (candidates.empty()) {
        throw InsufficientReports("no candidate references");
    }
    std::size_t best = 0;
    for (std::size_t k = 1; k < candidates.size(); ++k) {
        const auto& cand = candidates[k];
        const auto& cur = candidates[best];
        if (cand.outcome.honest.size() != cur.outcome.honest.size()) {
            if (cand.outcome.honest.size() > cur.outcome.honest.size()) {
                best = k;
            }
            continue;
        }
        const double ac_cand = cand.avg_honest_conflict();
        const double ac_cur = cur.avg_honest_conflict();
        if (ac_cand != ac_cur) {
            if (ac_cand < ac_cur) {
                best = k;
            }
            continue;
        }
        if (cand.members < cur.members) {
            best = k;
        }
    }
    return best;
}

/// Trust-revision outcome: the conflict statistics and the weight applied to
/// each misbehaving agent.
struct ReviseOutcome {
    double max_conflict = 0.0;
    double avg_conflict = 0.0;
    std::map<AgentId, double> weights;
    bool degenerate = false;  // MC == AC; nothing applied
};

/// Revision weight RW = MC * (DC - AC) / (MC - AC), clamped into [0, MC] so
/// the revised opinion stays valid. Belief and uncertainty scale by (1 - RW)
/// and disbelief absorbs the removed mass.
inline ReviseOutcome revise_trust(const std::map<AgentId, double>& conflicts,
                                  const std::set<AgentId>& misbehaving, TrustStore& store) {
    if (conflicts.empty()) {
        throw InsufficientReports("revision needs at least one conflict value");
    }
    ReviseOutcome out;
    double sum = 0.0;
    for (const auto& [id, dc] : conflicts) {
        out.max_conflict = std::max(out.max_conflict, dc);
        sum += dc;
    }
    out.avg_conflict = sum / static_cast<double>(conflicts.size());
    if (misbehaving.empty()) {
        return out;
    }
    const double spread = out.max_conflict - out.avg_conflict;
    if (spread <= 1e-12) {
        out.degenerate = true;
        return out;
    }
    for (const AgentId& id : misbehaving) {
        const double dc = conflicts.at(id);
        const double rw = std::clamp(out.max_conflict * (dc - out.avg_conflict) / spread,
                                     0.0, out.max_conflict);
        out.weights[id] = rw;
        auto it = store.find(id);
        if (it == store.end()) {
            continue;
        }
        BinomialOpinion& t = it->second.trust;
        t.belief = (1.0 - rw) * t.belief;
        t.uncertainty = (1.0 - rw) * t.uncertainty;
        t.disbelief = 1.0 - t.belief - t.uncertainty;
    }
    return out;
}

/// Options for the composed pipeline.
struct DetectOptions {
    const TrustStore* trust = nullptr;  // needed for store reliability / revision
    bool use_store_reliability = false; // fill p_src from projected trust
    bool revise = false;                // apply step-6 revision to the store
    std::optional<Opinion> aux_reference;  // corroborating consensus for size ties
};

/// Steps 1-6 composed: discount, cluster, elect references, re-score,
/// classify, select, and optionally revise trust. Deterministic in its
/// inputs. When `aux_reference` is set, candidates tied on honest-set size
/// prefer the one closest to it before the parsimony tie-breaks.
inline ClassificationResult detect(const std::vector<ReportedOpinion>& reports, double theta,
                                   const DetectOptions& opts = {}, TrustStore* mutable_store = nullptr) {
    if (reports.size() < 2) {
        throw InsufficientReports("detection needs at least two reports");
    }
    std::vector<ReportedOpinion> discounted;
    discounted.reserve(reports.size());
    for (const ReportedOpinion& r : reports) {
        ReportedOpinion d = r;
        if (opts.use_store_reliability && opts.trust != nullptr) {
            auto it = opts.trust->find(r.agent_id);
            d.context.p_src = it == opts.trust->end()
                                  ? BinomialOpinion::vacuous().projected()
                                  : source_reliability(it->second.trust);
        }
        d.opinion = discount_opinion(r.opinion, d.context);
        discounted.push_back(std::move(d));
    }

    std::map<AgentId, Opinion> opinions;
    for (const ReportedOpinion& r : discounted) {
        opinions[r.agent_id] = r.opinion;
    }

    const ConflictGraph graph = build_conflict_graph(discounted, theta);
    const auto components = dominant_components(graph);

    std::vector<Candidate> candidates;
    candidates.reserve(components.size());
    for (const auto& comp : components) {
        Candidate cand;
        cand.reference = reference_opinion(graph, comp, opinions);
        cand.members = comp;
        cand.outcome = classify(opinions, cand.reference, theta);
        candidates.push_back(std::move(cand));
    }

    std::size_t chosen = 0;
    if (candidates.size() > 1 && opts.aux_reference.has_value()) {
        // Corroboration first among size ties, then the parsimony rules.
        std::size_t best = 0;
        for (std::size_t k = 1; k < candidates.size(); ++k) {
            const auto& cand = candidates[k];
            const auto& cur = candidates[best];
            if (cand.outcome.honest.size() != cur.outcome.honest.size()) {
                if (cand.outcome.honest.size() > cur.outcome.honest.size()) {
                    best = k;
                }
                continue;
            }
            const double da = degree_of_conflict(cand.reference, *opts.aux_reference);
            const double db = degree_of_conflict(cur.reference, *opts.aux_reference);
            if (da != db) {
                if (da < db) {
                    best = k;
                }
                continue;
            }
            const double aca = cand.avg_honest_conflict();
            const double acb = cur.avg_honest_conflict();
            if (aca != acb) {
                if (aca < acb) {
                    best = k;
                }
                continue;
            }
            if (cand.members < cur.members) {
                best = k;
            }
        }
        chosen = best;
    } else {
        chosen = select_reference(candidates);
    }

    const Candidate& winner = candidates[chosen];
    ClassificationResult result;
    result.reference = winner.reference;
    for (const Candidate& c : candidates) {
        result.candidate_references.push_back(c.reference);
    }
    result.honest = winner.outcome.honest;
    result.misbehaving = winner.outcome.misbehaving;
    result.conflicts = winner.outcome.conflicts;
    for (const auto& [id, dc] : result.conflicts) {
        result.max_conflict = std::max(result.max_conflict, dc);
    }
    {
        double sum = 0.0;
        for (const auto& [id, dc] : result.conflicts) {
            sum += dc;
        }
        result.avg_conflict = sum / static_cast<double>(result.conflicts.size());
    }

    if (!result.misbehaving.empty()) {
        TrustStore scratch;
        TrustStore* store = nullptr;
        if (opts.revise && mutable_store != nullptr) {
            store = mutable_store;
        } else {
            store = &scratch;  // weights still reported, nothing persisted
        }
        ReviseOutcome rev = revise_trust(result.conflicts, result.misbehaving, *store);
        result.revision_weights = rev.weights;
        result.degenerate_conflict = rev.degenerate;
    }
    return result;
}

}  // namespace sltrust

#endif  // SLTRUST_MISBEHAVIOR_HPP
