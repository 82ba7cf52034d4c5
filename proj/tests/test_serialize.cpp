#include <catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "sltrust/rng.hpp"
#include "sltrust/serialize.hpp"

using namespace sltrust;

TEST_CASE("canonical opinion JSON shape", "[serialize]") {
    const Opinion op(Domain({"x", "not_x"}), {0.4, 0.4}, 0.2, {0.5, 0.5});
    const json j = to_json(op);
    CHECK(j.at("labels") == json::array({"x", "not_x"}));
    CHECK(j.at("belief") == json::array({0.4, 0.4}));
    CHECK(j.at("uncertainty") == 0.2);
    CHECK(j.at("base_rate") == json::array({0.5, 0.5}));
}

TEST_CASE("opinion JSON round trip", "[serialize][property]") {
    auto rng = derive_stream(505, {1});
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 300; ++i) {
        const std::size_t w = 2 + i % 6;
        Opinion op;
        op.domain = Domain::of_size(w);
        op.uncertainty = 0.05 + 0.9 * unit(rng);
        op.belief.resize(w);
        double sum = 0.0;
        std::vector<double> raw(w);
        for (double& v : raw) {
            v = unit(rng);
            sum += v;
        }
        for (std::size_t k = 0; k < w; ++k) {
            op.belief[k] = (1.0 - op.uncertainty) * raw[k] / sum;
        }
        op.base_rate.assign(w, 1.0 / static_cast<double>(w));
        const Opinion back = opinion_from_json(to_json(op));
        CHECK(back.uncertainty == Catch::Approx(op.uncertainty).margin(1e-15));
        for (std::size_t k = 0; k < w; ++k) {
            CHECK(back.belief[k] == Catch::Approx(op.belief[k]).margin(1e-15));
        }
    }
}

TEST_CASE("malformed opinions are rejected with the offending field", "[serialize]") {
    json j = to_json(Opinion(Domain({"x", "y"}), {0.6, 0.5}, -0.1, {0.5, 0.5}));
    CHECK_THROWS_AS(opinion_from_json(j), InvalidOpinion);
    json missing{{"labels", {"x", "y"}}, {"belief", {0.5, 0.5}}};
    try {
        opinion_from_json(missing);
        FAIL("expected a ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("uncertainty") != std::string::npos);
    }
}

TEST_CASE("trust store JSONL round trip", "[serialize]") {
    TrustStore store;
    TrustRecord tr;
    tr.agent_id = "veh1";
    tr.trust = BinomialOpinion{0.6, 0.1, 0.3, 0.5};
    tr.dependence_factor = 0.25;
    store["veh1"] = tr;
    tr.agent_id = "veh2";
    tr.trust = BinomialOpinion::vacuous();
    store["veh2"] = tr;

    const std::string jsonl = trust_store_to_jsonl(store);
    std::istringstream in(jsonl);
    const TrustStore back = trust_store_from_jsonl(in);
    REQUIRE(back.size() == 2);
    CHECK(back.at("veh1").trust.belief == Catch::Approx(0.6));
    CHECK(back.at("veh1").dependence_factor == Catch::Approx(0.25));
    CHECK(back.at("veh2").trust.uncertainty == 1.0);
}

TEST_CASE("classification JSON carries the verdict", "[serialize]") {
    const Opinion h1(Domain({"x", "y"}), {0.5, 0.3}, 0.2, {0.5, 0.5});
    const Opinion h2(Domain({"x", "y"}), {0.48, 0.32}, 0.2, {0.5, 0.5});
    const Opinion dev(Domain({"x", "y"}), {0.02, 0.78}, 0.2, {0.5, 0.5});
    const auto res = detect({{"a", h1, {}}, {"b", h2, {}}, {"z", dev, {}}}, 0.15);
    const json j = to_json(res);
    CHECK(j.contains("reference"));
    CHECK(j.contains("candidate_references"));
    CHECK(j.at("misbehaving") == json::array({"z"}));
    CHECK(j.at("conflicts").size() == 3);
    CHECK(j.at("revision_weights").contains("z"));
    CHECK(j.at("max_conflict").get<double>() >= j.at("avg_conflict").get<double>());
}

TEST_CASE("sim config parsing", "[serialize]") {
    const json good{{"seed", 7},
                    {"cycles", 5},
                    {"theta", 0.2},
                    {"topics", json::array({{{"id", "seg"}}})},
                    {"agents", json::array({{{"id", "p1"},
                                             {"role", "provider"},
                                             {"topics", json::array({"seg"})}},
                                            {{"id", "u1"},
                                             {"role", "user"},
                                             {"topics", json::array({"seg"})},
                                             {"behavior", {{"type", "honest"}}}}})}};
    const SimConfig cfg = sim_config_from_json(good);
    CHECK(cfg.cycles == 5);
    CHECK(cfg.agents.size() == 2);
    CHECK(cfg.agents[1].role == AgentRole::User);

    SECTION("missing and invalid fields are named") {
        json bad = good;
        bad.erase("cycles");
        try {
            sim_config_from_json(bad);
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("cycles") != std::string::npos);
        }
        bad = good;
        bad["agents"][0]["role"] = "wizard";
        CHECK_THROWS_AS(sim_config_from_json(bad), ConfigError);
        bad = good;
        bad["ban"] = {{"policy", "exile"}};
        CHECK_THROWS_AS(sim_config_from_json(bad), ConfigError);
    }
}

TEST_CASE("CSV emission uses the pinned headers", "[serialize]") {
    SweepResult sweep;
    sweep.rows.push_back(SweepRow{0.15, 0.7, 0.8, 0.1, 0.9});
    const std::string sweep_csv = sweep_to_csv(sweep);
    CHECK(sweep_csv.rfind("theta,p_detected,p_at_least_one,p_wrong_accusation,p_all_honest\n",
                          0) == 0);

    RocResult roc;
    roc.rows.push_back(RocRow{1.0, 0.75, 0.15, 0.05, 0.9});
    CHECK(roc_to_csv(roc).rfind("mu_est,sigma_est,theta,fp,tp\n", 0) == 0);

    ScaleResult scale;
    scale.rows.push_back(ScaleRow{0.1, 0.1, 0.45, 0.1});
    CHECK(scale_to_csv(scale).rfind("error_rate,theta,p_tp,p_fp\n", 0) == 0);
}

TEST_CASE("atomic write leaves no temp file behind", "[serialize]") {
    const auto dir = std::filesystem::temp_directory_path() / "sltrust_test_io";
    std::filesystem::create_directories(dir);
    const auto path = dir / "artifact.csv";
    atomic_write(path, "hello\n");
    CHECK(std::filesystem::exists(path));
    CHECK_FALSE(std::filesystem::exists(dir / "artifact.csv.tmp"));
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "hello");
    std::filesystem::remove_all(dir);
}

TEST_CASE("trace events serialize as JSON lines", "[serialize]") {
    SimulationTrace trace;
    trace.events.push_back(TraceEvent{3, "reward", "p1", "seg", {{"weight", "1"}}});
    const std::string jsonl = trace_to_jsonl(trace);
    const json j = json::parse(jsonl.substr(0, jsonl.find('\n')));
    CHECK(j.at("cycle") == 3);
    CHECK(j.at("event_type") == "reward");
    CHECK(j.at("agent") == "p1");
    CHECK(j.at("payload").at("weight") == "1");
}
