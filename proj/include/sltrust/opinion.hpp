#ifndef SLTRUST_OPINION_HPP
#define SLTRUST_OPINION_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "sltrust/errors.hpp"

namespace sltrust {

/// Numeric tolerance for the opinion invariants (additivity, ranges).
inline constexpr double kInvariantTol = 1e-9;

/// A finite domain of at least two mutually exclusive outcomes.
class Domain {
public:
    Domain() = default;

    explicit Domain(std::vector<std::string> labels) : labels_(std::move(labels)) {
        if (labels_.size() < 2) {
            throw InvalidOpinion("domain cardinality must be >= 2");
        }
        for (std::size_t i = 0; i < labels_.size(); ++i) {
            for (std::size_t j = i + 1; j < labels_.size(); ++j) {
                if (labels_[i] == labels_[j]) {
                    throw InvalidOpinion("duplicate domain label '" + labels_[i] + "'");
                }
            }
        }
    }

    /// Convenience constructor: labels "x0".."x{n-1}".
    static Domain of_size(std::size_t n, const std::string& prefix = "x") {
        std::vector<std::string> labels;
        labels.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            labels.push_back(prefix + std::to_string(i));
        }
        return Domain(std::move(labels));
    }

    std::size_t cardinality() const { return labels_.size(); }
    const std::vector<std::string>& labels() const { return labels_; }

    friend bool operator==(const Domain& a, const Domain& b) { return a.labels_ == b.labels_; }
    friend bool operator!=(const Domain& a, const Domain& b) { return !(a == b); }

private:
    std::vector<std::string> labels_;
};

/// Multinomial subjective-logic opinion: belief mass per outcome, an
/// uncertainty mass, and a base-rate prior over the same domain.
struct Opinion {
    Domain domain;
    std::vector<double> belief;
    double uncertainty = 1.0;
    std::vector<double> base_rate;

    Opinion() = default;

    Opinion(Domain dom, std::vector<double> b, double u, std::vector<double> a)
        : domain(std::move(dom)),
          belief(std::move(b)),
          uncertainty(u),
          base_rate(std::move(a)) {}

    /// Fully uncertain opinion with a uniform prior.
    static Opinion vacuous(Domain dom) {
        const std::size_t w = dom.cardinality();
        return Opinion(std::move(dom), std::vector<double>(w, 0.0), 1.0,
                       std::vector<double>(w, 1.0 / static_cast<double>(w)));
    }

    double belief_sum() const {
        return std::accumulate(belief.begin(), belief.end(), 0.0);
    }
};

/// Binomial opinion, the two-outcome special case.
struct BinomialOpinion {
    double belief = 0.0;
    double disbelief = 0.0;
    double uncertainty = 1.0;
    double base_rate = 0.5;

    static BinomialOpinion vacuous(double base_rate = 0.5) {
        return BinomialOpinion{0.0, 0.0, 1.0, base_rate};
    }

    /// Projected probability of the positive outcome.
    double projected() const { return belief + base_rate * uncertainty; }
};

/// Dirichlet evidence equivalent to an opinion under the evidence mapping.
/// Evidence values are non-negative reals so that fractional splits and
/// weighted rewards stay closed under the mapping.
struct EvidenceRecord {
    Domain domain;
    std::vector<double> evidence;
    std::vector<double> base_rate;

    double total() const {
        return std::accumulate(evidence.begin(), evidence.end(), 0.0);
    }
};

namespace detail {

inline bool in_unit(double v, double tol = kInvariantTol) {
    return v >= -tol && v <= 1.0 + tol;
}

}  // namespace detail

/// Checks every opinion invariant; returns the opinion unchanged on success.
inline const Opinion& validate(const Opinion& op) {
    const std::size_t w = op.domain.cardinality();
    if (op.belief.size() != w || op.base_rate.size() != w) {
        throw InvalidOpinion("belief/base_rate size does not match domain cardinality");
    }
    double bsum = 0.0;
    double asum = 0.0;
    for (std::size_t i = 0; i < w; ++i) {
        if (!detail::in_unit(op.belief[i])) {
            throw InvalidOpinion("belief[" + std::to_string(i) + "] outside [0,1]");
        }
        if (!detail::in_unit(op.base_rate[i])) {
            throw InvalidOpinion("base_rate[" + std::to_string(i) + "] outside [0,1]");
        }
        bsum += op.belief[i];
        asum += op.base_rate[i];
    }
    if (!detail::in_unit(op.uncertainty)) {
        throw InvalidOpinion("uncertainty outside [0,1]");
    }
    if (std::abs(bsum + op.uncertainty - 1.0) > kInvariantTol) {
        throw InvalidOpinion("belief mass plus uncertainty is " +
                             std::to_string(bsum + op.uncertainty) + ", expected 1");
    }
    if (std::abs(asum - 1.0) > kInvariantTol) {
        throw InvalidOpinion("base rate sums to " + std::to_string(asum) + ", expected 1");
    }
    return op;
}

inline const BinomialOpinion& validate(const BinomialOpinion& op) {
    if (!detail::in_unit(op.belief) || !detail::in_unit(op.disbelief) ||
        !detail::in_unit(op.uncertainty) || !detail::in_unit(op.base_rate)) {
        throw InvalidOpinion("binomial component outside [0,1]");
    }
    if (std::abs(op.belief + op.disbelief + op.uncertainty - 1.0) > kInvariantTol) {
        throw InvalidOpinion("binomial masses do not sum to 1");
    }
    return op;
}

/// Evidence mapping, forward direction: belief = r / (W + sum r),
/// uncertainty = W / (W + sum r).
inline Opinion from_evidence(const EvidenceRecord& ev) {
    const std::size_t w = ev.domain.cardinality();
    if (ev.evidence.size() != w || ev.base_rate.size() != w) {
        throw DomainMismatch("evidence/base_rate size does not match domain");
    }
    for (double r : ev.evidence) {
        if (r < 0.0 || !std::isfinite(r)) {
            throw InvalidOpinion("evidence values must be non-negative finite reals");
        }
    }
    const double wf = static_cast<double>(w);
    const double denom = wf + ev.total();
    Opinion op;
    op.domain = ev.domain;
    op.base_rate = ev.base_rate;
    op.belief.resize(w);
    for (std::size_t i = 0; i < w; ++i) {
        op.belief[i] = ev.evidence[i] / denom;
    }
    op.uncertainty = wf / denom;
    return op;
}

/// Evidence mapping, reverse direction: r = W * belief / uncertainty.
/// Undefined for dogmatic opinions.
inline EvidenceRecord to_evidence(const Opinion& op) {
    validate(op);
    if (op.uncertainty <= 0.0) {
        throw DogmaticOpinion("evidence mapping is undefined at zero uncertainty");
    }
    const double wf = static_cast<double>(op.domain.cardinality());
    EvidenceRecord ev;
    ev.domain = op.domain;
    ev.base_rate = op.base_rate;
    ev.evidence.resize(op.belief.size());
    for (std::size_t i = 0; i < op.belief.size(); ++i) {
        ev.evidence[i] = std::max(0.0, wf * op.belief[i] / op.uncertainty);
    }
    return ev;
}

/// Probability projection P(x) = b(x) + a(x) * u.
inline std::vector<double> project(const Opinion& op) {
    std::vector<double> p(op.belief.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = op.belief[i] + op.base_rate[i] * op.uncertainty;
    }
    return p;
}

/// Dirichlet density at a strictly positive probability vector, with
/// concentration r_x + a_x * W. Used by test oracles and diagnostics.
inline double dirichlet_pdf(std::span<const double> p, const EvidenceRecord& ev) {
    const std::size_t w = ev.domain.cardinality();
    if (p.size() != w) {
        throw DomainMismatch("probability vector size does not match domain");
    }
    double psum = 0.0;
    for (double v : p) {
        if (v <= 0.0 || !std::isfinite(v)) {
            throw InvalidProbabilityVector("components must be strictly positive");
        }
        psum += v;
    }
    if (std::abs(psum - 1.0) > 1e-6) {
        throw InvalidProbabilityVector("components must sum to 1");
    }
    const double wf = static_cast<double>(w);
    double alpha_sum = 0.0;
    double log_beta = 0.0;
    double log_kernel = 0.0;
    for (std::size_t i = 0; i < w; ++i) {
        const double alpha = ev.evidence[i] + ev.base_rate[i] * wf;
        if (alpha < 0.0) {
            throw InvalidOpinion("negative Dirichlet concentration");
        }
        alpha_sum += alpha;
        log_beta += std::lgamma(alpha);
        log_kernel += (alpha - 1.0) * std::log(p[i]);
    }
    return std::exp(std::lgamma(alpha_sum) - log_beta + log_kernel);
}

namespace detail {

inline void require_same_domain(const Opinion& a, const Opinion& b) {
    if (a.domain != b.domain) {
        throw FusionDomainMismatch("operands live on different domains");
    }
}

}  // namespace detail

/// Aleatory cumulative belief fusion of two opinions; equivalent to adding
/// their Dirichlet evidence. Requires 0 < u < 1 for both operands.
inline Opinion cumulative_fuse(const Opinion& a, const Opinion& b) {
    detail::require_same_domain(a, b);
    validate(a);
    validate(b);
    const double ua = a.uncertainty;
    const double ub = b.uncertainty;
    if (ua <= 0.0 || ub <= 0.0) {
        throw DogmaticOperand("cumulative fusion requires uncertainty > 0");
    }
    if (ua >= 1.0 || ub >= 1.0) {
        throw VacuousOperand("cumulative fusion requires uncertainty < 1");
    }
    const double denom = ua + ub - ua * ub;
    Opinion out;
    out.domain = a.domain;
    out.uncertainty = ua * ub / denom;
    out.belief.resize(a.belief.size());
    out.base_rate.resize(a.base_rate.size());
    const bool equal_u = std::abs(ua - ub) <= 1e-12;
    const double a_denom = ua + ub - 2.0 * ua * ub;
    for (std::size_t i = 0; i < out.belief.size(); ++i) {
        out.belief[i] = (a.belief[i] * ub + b.belief[i] * ua) / denom;
        if (equal_u) {
            out.base_rate[i] = 0.5 * (a.base_rate[i] + b.base_rate[i]);
        } else {
            out.base_rate[i] = (a.base_rate[i] * ub + b.base_rate[i] * ua -
                                (a.base_rate[i] + b.base_rate[i]) * ua * ub) /
                               a_denom;
        }
    }
    return out;
}

/// Aleatory average belief fusion of n >= 2 opinions: the mean of their
/// evidence vectors under the evidence mapping, with the mean base rate.
/// For n = 2 this is exactly the pairwise closed form.
inline Opinion average_fuse(std::span<const Opinion> ops) {
    if (ops.size() < 2) {
        throw FusionDomainMismatch("average fusion needs at least two operands");
    }
    const Opinion& first = ops.front();
    const std::size_t w = first.domain.cardinality();
    const double wf = static_cast<double>(w);
    std::vector<double> mean_evidence(w, 0.0);
    std::vector<double> mean_base(w, 0.0);
    for (const Opinion& op : ops) {
        detail::require_same_domain(first, op);
        validate(op);
        if (op.uncertainty <= 0.0) {
            throw DogmaticOperand("average fusion requires uncertainty > 0");
        }
        for (std::size_t i = 0; i < w; ++i) {
            mean_evidence[i] += wf * op.belief[i] / op.uncertainty;
            mean_base[i] += op.base_rate[i];
        }
    }
    const double n = static_cast<double>(ops.size());
    for (std::size_t i = 0; i < w; ++i) {
        mean_evidence[i] /= n;
        mean_base[i] /= n;
    }
    return from_evidence(EvidenceRecord{first.domain, std::move(mean_evidence),
                                        std::move(mean_base)});
}

inline Opinion average_fuse(const Opinion& a, const Opinion& b) {
    const Opinion ops[] = {a, b};
    return average_fuse(std::span<const Opinion>(ops, 2));
}

/// Binomial opinions map to the two-outcome multinomial form and back.
inline Opinion to_opinion(const BinomialOpinion& op, const Domain& dom) {
    if (dom.cardinality() != 2) {
        throw DomainMismatch("binomial opinions need a two-outcome domain");
    }
    return Opinion(dom, {op.belief, op.disbelief}, op.uncertainty,
                   {op.base_rate, 1.0 - op.base_rate});
}

inline BinomialOpinion to_binomial(const Opinion& op) {
    if (op.domain.cardinality() != 2) {
        throw DomainMismatch("opinion is not binomial");
    }
    return BinomialOpinion{op.belief[0], op.belief[1], op.uncertainty, op.base_rate[0]};
}

}  // namespace sltrust

#endif  // SLTRUST_OPINION_HPP
