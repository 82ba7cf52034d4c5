#ifndef SLTRUST_TRUST_HPP
#define SLTRUST_TRUST_HPP

#include <cmath>
#include <string>
#include <utility>

#include "sltrust/errors.hpp"
#include "sltrust/opinion.hpp"

namespace sltrust {

/// Per-agent trust state: a binomial opinion over {trustworthy,
/// untrustworthy}, the dependence factor used when accumulating repeat
/// cooperations, and the reward granted on vindication.
struct TrustRecord {
    std::string agent_id;
    BinomialOpinion trust = BinomialOpinion::vacuous();
    double dependence_factor = 0.5;
    double revision_reward = 5.0;
};

/// Inputs of the step-1 trust discounting product:
/// P_dis = p_src * t_g^distance * t_t^age * p0.
struct DiscountContext {
    double p_src = 1.0;       // source reliability, [0,1]
    double t_g = 1.0;         // spatial decay per meter, (0,1]
    double t_t = 1.0;         // temporal decay per second, (0,1]
    double distance = 0.0;    // meters
    double age = 0.0;         // seconds
    double p0 = 1.0;          // prior weight, (0,1]
};

inline const DiscountContext& validate(const DiscountContext& ctx) {
    if (ctx.p_src < 0.0 || ctx.p_src > 1.0) {
        throw ConfigError("p_src must lie in [0,1]");
    }
    if (ctx.t_g <= 0.0 || ctx.t_g > 1.0 || ctx.t_t <= 0.0 || ctx.t_t > 1.0 ||
        ctx.p0 <= 0.0 || ctx.p0 > 1.0) {
        throw ConfigError("decay factors must lie in (0,1]");
    }
    if (ctx.distance < 0.0 || ctx.age < 0.0) {
        throw ConfigError("distance and age must be non-negative");
    }
    return ctx;
}

/// P({trust still valid}) per bookkeeping round.
struct AgingParams {
    double p_sa = 0.999;
};

namespace detail {

inline std::pair<double, double> binomial_evidence(const BinomialOpinion& op) {
    if (op.uncertainty <= 0.0) {
        throw DogmaticOpinion("trust opinion has zero uncertainty");
    }
    return {2.0 * op.belief / op.uncertainty, 2.0 * op.disbelief / op.uncertainty};
}

inline BinomialOpinion binomial_from_evidence(double r, double s, double base_rate) {
    const double denom = 2.0 + r + s;
    return BinomialOpinion{r / denom, s / denom, 2.0 / denom, base_rate};
}

}  // namespace detail

/// Adds `weight` positive evidence to the trust opinion through the evidence
/// mapping. Weight 1 is a routine cooperation, the revision reward is used
/// for vindication in an adjudicated case.
inline TrustRecord reward_success(const TrustRecord& tr, double weight) {
    if (weight < 0.0) {
        throw ConfigError("reward weight must be non-negative");
    }
    validate(tr.trust);
    auto [r, s] = detail::binomial_evidence(tr.trust);
    TrustRecord out = tr;
    out.trust = detail::binomial_from_evidence(r + weight, s, tr.trust.base_rate);
    return out;
}

/// Splits binomial evidence into an independent part scaled by (1 - lambda)
/// and a dependent part scaled by lambda.
inline std::pair<EvidenceRecord, EvidenceRecord> split_dependence(const EvidenceRecord& ev,
                                                                  double lambda) {
    if (lambda < 0.0 || lambda > 1.0) {
        throw ConfigError("dependence factor must lie in [0,1]");
    }
    EvidenceRecord ind = ev;
    EvidenceRecord dep = ev;
    for (std::size_t i = 0; i < ev.evidence.size(); ++i) {
        ind.evidence[i] = ev.evidence[i] * (1.0 - lambda);
        dep.evidence[i] = ev.evidence[i] * lambda;
    }
    return {std::move(ind), std::move(dep)};
}

namespace detail {

inline bool has_evidence(const EvidenceRecord& ev) { return ev.total() > 1e-15; }

}  // namespace detail

/// Accumulates two binomial opinions whose successes are partially dependent:
/// the dependent parts are average-fused, then cumulatively fused with both
/// independent parts. Zero-evidence parts are neutral and skipped.
inline BinomialOpinion accumulate_partially_dependent(const BinomialOpinion& a,
                                                      const BinomialOpinion& b,
                                                      double lambda_a, double lambda_b) {
    static const Domain dom({"trustworthy", "untrustworthy"});
    const Opinion oa = to_opinion(validate(a), dom);
    const Opinion ob = to_opinion(validate(b), dom);
    auto [ind_a, dep_a] = split_dependence(to_evidence(oa), lambda_a);
    auto [ind_b, dep_b] = split_dependence(to_evidence(ob), lambda_b);

    // Average fusion tolerates vacuous operands; two empty dependent parts
    // just yield a vacuous contribution that the cumulative stage skips.
    const Opinion dep = average_fuse(from_evidence(dep_a), from_evidence(dep_b));

    Opinion acc = dep;
    bool have = detail::has_evidence(to_evidence(dep));
    for (const EvidenceRecord* part : {&ind_a, &ind_b}) {
        if (!detail::has_evidence(*part)) {
            continue;
        }
        const Opinion op = from_evidence(*part);
        acc = have ? cumulative_fuse(acc, op) : op;
        have = true;
    }
    return to_binomial(acc);
}

/// Fades trust toward uncertainty: belief and disbelief scale by p_sa, the
/// freed mass moves to uncertainty, the base rate is untouched.
inline TrustRecord age_trust(const TrustRecord& tr, const AgingParams& params) {
    if (params.p_sa <= 0.0 || params.p_sa > 1.0) {
        throw ConfigError("p_sa must lie in (0,1]");
    }
    validate(tr.trust);
    TrustRecord out = tr;
    out.trust.belief = params.p_sa * tr.trust.belief;
    out.trust.disbelief = params.p_sa * tr.trust.disbelief;
    out.trust.uncertainty = 1.0 - params.p_sa * (tr.trust.belief + tr.trust.disbelief);
    return out;
}

/// Step-1 discounting of a reported opinion by source reliability and
/// spatio-temporal decay. Belief scales by P_dis, uncertainty absorbs the
/// remainder, the base rate is untouched.
inline Opinion discount_opinion(const Opinion& op, const DiscountContext& ctx) {
    validate(op);
    validate(ctx);
    const double p_dis = ctx.p_src * std::pow(ctx.t_g, ctx.distance) *
                         std::pow(ctx.t_t, ctx.age) * ctx.p0;
    Opinion out = op;
    double bsum = 0.0;
    for (std::size_t i = 0; i < out.belief.size(); ++i) {
        out.belief[i] = p_dis * op.belief[i];
        bsum += op.belief[i];
    }
    out.uncertainty = 1.0 - p_dis * bsum;
    return out;
}

/// Scalar source reliability: the projected probability of the trust opinion.
inline double source_reliability(const BinomialOpinion& trust) {
    return trust.projected();
}

}  // namespace sltrust

#endif  // SLTRUST_TRUST_HPP
