#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "sltrust/opinion.hpp"
#include "sltrust/rng.hpp"
#include "sltrust/trust.hpp"

using namespace sltrust;

namespace {

const Domain kTrustDomain({"trustworthy", "untrustworthy"});

TrustRecord record(double b, double d, double u, double a = 0.5) {
    TrustRecord tr;
    tr.agent_id = "agent";
    tr.trust = BinomialOpinion{b, d, u, a};
    return tr;
}

BinomialOpinion from_rs(double r, double s) {
    const double denom = 2.0 + r + s;
    return BinomialOpinion{r / denom, s / denom, 2.0 / denom, 0.5};
}

BinomialOpinion random_binomial(std::mt19937_64& rng, double min_u = 1e-3) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double u = min_u + (1.0 - min_u) * unit(rng);
    const double split = unit(rng);
    return BinomialOpinion{(1.0 - u) * split, (1.0 - u) * (1.0 - split), u, 0.5};
}

double max_diff(const BinomialOpinion& a, const BinomialOpinion& b) {
    return std::max({std::abs(a.belief - b.belief), std::abs(a.disbelief - b.disbelief),
                     std::abs(a.uncertainty - b.uncertainty)});
}

}  // namespace

TEST_CASE("reward accumulation through the evidence mapping", "[trust]") {
    SECTION("one routine success on vacuous trust") {
        const TrustRecord tr = reward_success(record(0.0, 0.0, 1.0), 1.0);
        CHECK(tr.trust.belief == Catch::Approx(1.0 / 3.0).margin(1e-12));
        CHECK(tr.trust.disbelief == 0.0);
        CHECK(tr.trust.uncertainty == Catch::Approx(2.0 / 3.0).margin(1e-12));
    }
    SECTION("zero weight changes nothing") {
        const TrustRecord base = record(0.3, 0.1, 0.6);
        CHECK(max_diff(reward_success(base, 0.0).trust, base.trust) < 1e-12);
    }
    SECTION("vindication reward of five") {
        const TrustRecord tr = reward_success(record(0.0, 0.0, 1.0), 5.0);
        CHECK(tr.trust.belief == Catch::Approx(5.0 / 7.0).margin(1e-12));
        CHECK(tr.trust.uncertainty == Catch::Approx(2.0 / 7.0).margin(1e-12));
    }
    SECTION("dogmatic trust cannot enter evidence space") {
        CHECK_THROWS_AS(reward_success(record(0.8, 0.2, 0.0), 1.0), DogmaticOpinion);
    }
    SECTION("projected trust strictly increases with positive weight") {
        auto rng = derive_stream(202, {1});
        for (int i = 0; i < 2000; ++i) {
            const BinomialOpinion before = random_binomial(rng);
            TrustRecord tr = record(before.belief, before.disbelief, before.uncertainty);
            const BinomialOpinion after = reward_success(tr, 0.5 + i % 5).trust;
            CHECK(after.projected() > before.projected());
        }
    }
}

TEST_CASE("dependence splitting", "[trust]") {
    const EvidenceRecord ev{kTrustDomain, {4.0, 2.0}, {0.5, 0.5}};
    SECTION("lambda 0 keeps everything independent") {
        const auto [ind, dep] = split_dependence(ev, 0.0);
        CHECK(dep.total() == 0.0);
        CHECK(ind.evidence[0] == 4.0);
    }
    SECTION("lambda 1 keeps everything dependent") {
        const auto [ind, dep] = split_dependence(ev, 1.0);
        CHECK(ind.total() == 0.0);
        CHECK(dep.evidence[1] == 2.0);
    }
    SECTION("lambda 0.25 splits proportionally") {
        const auto [ind, dep] = split_dependence(ev, 0.25);
        CHECK(ind.evidence[0] == Catch::Approx(3.0));
        CHECK(ind.evidence[1] == Catch::Approx(1.5));
        CHECK(dep.evidence[0] == Catch::Approx(1.0));
        CHECK(dep.evidence[1] == Catch::Approx(0.5));
    }
    CHECK_THROWS_AS(split_dependence(ev, 1.5), ConfigError);
}

TEST_CASE("partially dependent accumulation", "[trust]") {
    SECTION("lambda 0 collapses to cumulative fusion") {
        auto rng = derive_stream(202, {2});
        for (int i = 0; i < 500; ++i) {
            BinomialOpinion a = random_binomial(rng);
            BinomialOpinion b = random_binomial(rng);
            a.uncertainty = std::min(a.uncertainty, 1.0 - 1e-6);
            b.uncertainty = std::min(b.uncertainty, 1.0 - 1e-6);
            a.belief = (1.0 - a.uncertainty) * 0.6;
            a.disbelief = 1.0 - a.uncertainty - a.belief;
            b.belief = (1.0 - b.uncertainty) * 0.4;
            b.disbelief = 1.0 - b.uncertainty - b.belief;
            const BinomialOpinion acc = accumulate_partially_dependent(a, b, 0.0, 0.0);
            const BinomialOpinion oracle = to_binomial(
                cumulative_fuse(to_opinion(a, kTrustDomain), to_opinion(b, kTrustDomain)));
            CHECK(max_diff(acc, oracle) < 1e-9);
        }
    }
    SECTION("lambda 1 collapses to average fusion") {
        auto rng = derive_stream(202, {3});
        for (int i = 0; i < 500; ++i) {
            const BinomialOpinion a = random_binomial(rng);
            const BinomialOpinion b = random_binomial(rng);
            const BinomialOpinion acc = accumulate_partially_dependent(a, b, 1.0, 1.0);
            const BinomialOpinion oracle = to_binomial(
                average_fuse(to_opinion(a, kTrustDomain), to_opinion(b, kTrustDomain)));
            CHECK(max_diff(acc, oracle) < 1e-9);
        }
    }
    SECTION("evidence oracle for the half split") {
        // r_a=(4,0), r_b=(4,0), lambda=0.5: dep mean (2,0) + ind (2,0) + (2,0) = (6,0)
        const BinomialOpinion a = from_rs(4.0, 0.0);
        const BinomialOpinion acc = accumulate_partially_dependent(a, a, 0.5, 0.5);
        CHECK(acc.belief == Catch::Approx(0.75).margin(1e-12));
        CHECK(acc.uncertainty == Catch::Approx(0.25).margin(1e-12));
    }
    SECTION("vacuous operand with lambda contributes nothing") {
        const BinomialOpinion a = from_rs(4.0, 2.0);
        const BinomialOpinion vac = BinomialOpinion::vacuous();
        const BinomialOpinion acc = accumulate_partially_dependent(a, vac, 0.5, 0.5);
        // dependent part of a (2,1) averaged with empty (2,1)/... mean ((2,1)+(0,0))/2 = (1,0.5)
        // plus independent (2,1): total (3, 1.5)
        const BinomialOpinion expect = from_rs(3.0, 1.5);
        CHECK(max_diff(acc, expect) < 1e-9);
    }
}

TEST_CASE("trust aging", "[trust]") {
    SECTION("p_sa of one is the identity") {
        const TrustRecord tr = record(0.6, 0.2, 0.2);
        CHECK(max_diff(age_trust(tr, {1.0}).trust, tr.trust) < 1e-15);
    }
    SECTION("vacuous trust never ages") {
        const TrustRecord tr = record(0.0, 0.0, 1.0);
        CHECK(max_diff(age_trust(tr, {0.5}).trust, tr.trust) < 1e-15);
    }
    SECTION("published example") {
        const TrustRecord tr = age_trust(record(0.6, 0.2, 0.2), {0.9});
        CHECK(tr.trust.belief == Catch::Approx(0.54).margin(1e-12));
        CHECK(tr.trust.disbelief == Catch::Approx(0.18).margin(1e-12));
        CHECK(tr.trust.uncertainty == Catch::Approx(0.28).margin(1e-12));
    }
    SECTION("aging n times equals one application of p_sa^n") {
        auto rng = derive_stream(202, {4});
        for (int i = 0; i < 500; ++i) {
            const BinomialOpinion start = random_binomial(rng);
            TrustRecord tr = record(start.belief, start.disbelief, start.uncertainty);
            const int n = 1 + i % 6;
            TrustRecord stepped = tr;
            for (int k = 0; k < n; ++k) {
                stepped = age_trust(stepped, {0.97});
            }
            const TrustRecord once = age_trust(tr, {std::pow(0.97, n)});
            CHECK(max_diff(stepped.trust, once.trust) < 1e-9);
            CHECK(stepped.trust.uncertainty >= start.uncertainty - 1e-12);
            CHECK_NOTHROW(validate(stepped.trust));
        }
    }
}

TEST_CASE("opinion discounting", "[trust]") {
    const Domain dom = Domain::of_size(2);
    const Opinion op(dom, {0.5, 0.3}, 0.2, {0.5, 0.5});
    SECTION("neutral context is the identity") {
        const Opinion out = discount_opinion(op, DiscountContext{});
        CHECK(out.belief[0] == Catch::Approx(0.5).margin(1e-15));
        CHECK(out.uncertainty == Catch::Approx(0.2).margin(1e-15));
    }
    SECTION("zero source reliability collapses to vacuous") {
        DiscountContext ctx;
        ctx.p_src = 0.0;
        const Opinion out = discount_opinion(op, ctx);
        CHECK(out.belief[0] == 0.0);
        CHECK(out.uncertainty == Catch::Approx(1.0).margin(1e-15));
    }
    SECTION("full product, computed against the formula") {
        DiscountContext ctx;
        ctx.p_src = 0.8;
        ctx.t_g = 0.99;
        ctx.distance = 10.0;
        ctx.t_t = 0.95;
        ctx.age = 2.0;
        const double p_dis = 0.8 * std::pow(0.99, 10.0) * std::pow(0.95, 2.0);
        const Opinion out = discount_opinion(op, ctx);
        CHECK(out.belief[0] == Catch::Approx(p_dis * 0.5).margin(1e-12));
        CHECK(out.belief[1] == Catch::Approx(p_dis * 0.3).margin(1e-12));
        CHECK(out.uncertainty == Catch::Approx(1.0 - p_dis * 0.8).margin(1e-12));
        CHECK_NOTHROW(validate(out));
    }
    SECTION("uncertainty never decreases and belief ratios are preserved") {
        auto rng = derive_stream(202, {5});
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (int i = 0; i < 1000; ++i) {
            Opinion o(dom, {0.0, 0.0}, 0.0, {0.5, 0.5});
            const double u = unit(rng);
            const double split = unit(rng);
            o.belief[0] = (1.0 - u) * split;
            o.belief[1] = (1.0 - u) * (1.0 - split);
            o.uncertainty = u;
            DiscountContext ctx;
            ctx.p_src = unit(rng);
            ctx.t_g = 0.9 + 0.1 * unit(rng);
            ctx.t_t = 0.9 + 0.1 * unit(rng);
            ctx.distance = 10.0 * unit(rng);
            ctx.age = 10.0 * unit(rng);
            const Opinion out = discount_opinion(o, ctx);
            CHECK(out.uncertainty >= o.uncertainty - 1e-12);
            CHECK_NOTHROW(validate(out));
            if (o.belief[1] > 1e-9 && out.belief[1] > 1e-12) {
                CHECK(out.belief[0] / out.belief[1] ==
                      Catch::Approx(o.belief[0] / o.belief[1]).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("source reliability is the trust projection", "[trust]") {
    CHECK(source_reliability(BinomialOpinion{0.6, 0.2, 0.2, 0.5}) ==
          Catch::Approx(0.6 + 0.5 * 0.2));
    CHECK(source_reliability(BinomialOpinion::vacuous()) == Catch::Approx(0.5));
}
