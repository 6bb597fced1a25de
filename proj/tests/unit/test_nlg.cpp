#include "doctest.h"

#include <random>

#include "handover/errors.hpp"
#include "handover/nlg.hpp"
#include "handover/scenario.hpp"
#include "oracles.hpp"

using namespace handover;

namespace {

Fact request(double t) {
  Fact f;
  f.predicate = Predicate::HandoverRequest;
  f.time_s = t;
  return f;
}

Fact budget(double t) {
  Fact f;
  f.predicate = Predicate::TimeBudget;
  f.time_s = t;
  return f;
}

Fact hazard(Tag tag, double distance, double time, double salience, int referent) {
  Fact f;
  f.predicate = Predicate::Hazard;
  f.tag = tag;
  f.distance_m = distance;
  f.time_s = time;
  f.salience = salience;
  f.referent = referent;
  return f;
}

std::vector<Fact> random_facts(std::mt19937_64& rng) {
  auto real = [&](double lo, double hi) { return std::uniform_real_distribution<>(lo, hi)(rng); };
  std::vector<Fact> facts{request(real(2, 40)), budget(real(2, 40))};
  const int n = static_cast<int>(rng() % 7);
  for (int i = 0; i < n; ++i) {
    const double t = real(1, 30);
    switch (rng() % 4) {
      case 0: facts.push_back(hazard(kAllTags[rng() % 5], t * 30, t, real(0.05, 5), static_cast<int>(rng() % 3))); break;
      case 1: {
        Fact f;
        f.predicate = Predicate::Obstacle;
        f.lane = static_cast<int>(rng() % 3);
        f.distance_m = t * 30;
        f.time_s = t;
        f.salience = real(0.05, 5);
        facts.push_back(f);
        break;
      }
      case 2: {
        Fact f;
        f.predicate = Predicate::SensorLoss;
        f.distance_m = t * 30;
        f.time_s = t;
        f.salience = real(0.05, 5);
        facts.push_back(f);
        break;
      }
      default: {
        Fact f;
        f.predicate = Predicate::ActionAdvice;
        f.time_s = t;
        f.salience = 0.01;
        facts.push_back(f);
      }
    }
  }
  return facts;
}

bool has(const Message& m, Predicate p) {
  for (const Fact& f : m.facts) {
    if (f.predicate == p) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("realization examples") {
  CHECK(realize({request(12.4)}, Verbosity::Terse).text == "Take over. 12 seconds.");
  CHECK(realize({request(12.4)}, Verbosity::Standard).text == "Please take over in 12 seconds.");
  CHECK(realize({hazard(Tag::Fog, 790, 20, 1, 0)}, Verbosity::Standard).text ==
        "Fog bank in 800 meters.");
  CHECK(realize({hazard(Tag::Fog, 790, 20, 1, 2), hazard(Tag::Construction, 805, 21, 1, 2)},
                Verbosity::Standard)
            .text == "Fog and construction in 800 meters.");
  CHECK_THROWS_AS(realize({}, Verbosity::Terse), std::invalid_argument);
}

TEST_CASE("sentence order is request first then time to event") {
  const Message m = realize({hazard(Tag::Ice, 600, 20, 1, 1), budget(9.0),
                             hazard(Tag::Fog, 100, 3, 1, 0), request(5.0)},
                            Verbosity::Terse);
  CHECK(m.text.find("Take over") == 0);
  CHECK(m.text.find("Fog") < m.text.find("Critical"));
  CHECK(m.text.find("Critical") < m.text.find("Ice"));
  CHECK(m.word_count == count_words(m.text));
}

TEST_CASE("rounding") {
  CHECK(round_distance(790) == 800);
  CHECK(round_distance(824) == 800);
  CHECK(round_distance(826) == 850);
  CHECK(count_words("  a  b\tc\n") == 3);
}

TEST_CASE("density estimate") {
  Message m;
  m.word_count = 10;
  CHECK(estimate_density(m, Modality::Audio, 100).est_duration == doctest::Approx(4.0));
  CHECK(estimate_density(m, Modality::Visual, 100).est_duration == doctest::Approx(2.5));
  CHECK(estimate_density(m, Modality::Tactile, 100).est_duration == 1.0);
  CHECK_FALSE(estimate_density(m, Modality::Audio, 10).fits);
  m.word_count = 0;
  CHECK(estimate_density(m, Modality::Audio, 0.01).est_duration == 0.0);
  CHECK(estimate_density(m, Modality::Audio, 0.01).fits);
  CHECK_THROWS_AS(estimate_density(m, Modality::Audio, 0.0), std::invalid_argument);
}

TEST_CASE("verbosity follows load") {
  CHECK(verbosity_for_load(1) == Verbosity::Detailed);
  CHECK(verbosity_for_load(2) == Verbosity::Standard);
  CHECK(verbosity_for_load(3) == Verbosity::Terse);
  CHECK_THROWS_AS(verbosity_for_load(4), std::invalid_argument);
}

TEST_CASE("content planning") {
  CriticalityReport report;
  std::vector<Fact> facts{request(20), budget(20), hazard(Tag::Fog, 300, 10, 0.5, 0),
                          hazard(Tag::Ice, 300, 10, 3.0, 1), hazard(Tag::Tunnel, 300, 10, 1.5, 2)};
  Budget b;
  b.notice_s = 1000;
  b.max_optional = 2;
  auto chosen = plan_content(report, facts, b);
  REQUIRE(chosen.size() == 4);
  CHECK(chosen[0].predicate == Predicate::HandoverRequest);
  CHECK(chosen[1].predicate == Predicate::TimeBudget);
  CHECK(chosen[2].tag == Tag::Ice);
  CHECK(chosen[3].tag == Tag::Tunnel);

  facts = {budget(20), request(20), hazard(Tag::Fog, 300, 10, 1, 0), hazard(Tag::Ice, 300, 10, 1, 1)};
  b.max_optional = 1;
  chosen = plan_content(report, facts, b);
  REQUIRE(chosen.size() == 3);
  CHECK(chosen[0].predicate == Predicate::HandoverRequest);
  CHECK(chosen[2].tag == Tag::Fog);  // equal salience keeps input order

  CHECK(plan_content(report, {request(5), budget(5)}, b).size() == 2);
  CHECK_THROWS_AS(plan_content(report, {request(5)}, b), std::invalid_argument);
}

TEST_CASE("compose examples") {
  CriticalityReport report;
  std::vector<Fact> facts{request(10), budget(18), hazard(Tag::Fog, 700, 19, 0.2, 1),
                          hazard(Tag::Construction, 700, 19, 0.1, 1)};
  Message m = compose(report, facts, Modality::Audio, 5.0, 3);
  CHECK(m.facts.size() == 2);
  CHECK(m.est_duration <= 0.3 * 5.0);

  m = compose(report, facts, Modality::Audio, 400.0, 1);
  CHECK(m.facts.size() == facts.size());
  CHECK(m.verbosity == Verbosity::Detailed);
  CHECK(m.text.find("Fog and construction lie ahead") != std::string::npos);
}

TEST_CASE("composition properties on random fact sets") {
  std::mt19937_64 rng(77);
  const CriticalityReport report;
  for (int i = 0; i < 400; ++i) {
    const auto facts = random_facts(rng);
    for (Modality channel : kAllModalities) {
      for (double notice : {4.0, 5.0, 7.5, 10.0, 20.0, 40.0}) {
        std::size_t prev = SIZE_MAX;
        for (int load = 1; load <= 3; ++load) {
          const Message m = compose(report, facts, channel, notice, load);
          CHECK(m.est_duration <= 0.3 * notice + 1e-9);
          CHECK(m.word_count == count_words(m.text));
          CHECK(has(m, Predicate::HandoverRequest));
          CHECK(has(m, Predicate::TimeBudget));
          CHECK(m.facts.size() <= prev);
          prev = m.facts.size();
          CHECK(compose(report, facts, channel, notice, load).text == m.text);
        }
      }
      for (int load = 1; load <= 3; ++load) {
        std::size_t prev = 0;
        for (double notice = 0.5; notice <= 60.0; notice += 0.5) {
          const std::size_t n = compose(report, facts, channel, notice, load).facts.size();
          CHECK(n >= prev);
          prev = n;
        }
      }
    }
  }
}

TEST_CASE("below four seconds only the minimal core remains") {
  const CriticalityReport report;
  const std::vector<Fact> facts{request(3), budget(3), hazard(Tag::Fog, 90, 3, 1, 0)};
  const Message m = compose(report, facts, Modality::Audio, 3.0, 1);
  CHECK(m.verbosity == Verbosity::Minimal);
  CHECK(m.text == "Takeover! 3 seconds.");
  CHECK(m.est_duration == doctest::Approx(1.2));
}

TEST_CASE("template table") {
  const auto file = TemplateTable::load(oracle::data_dir() / "templates.json");
  CHECK(file.to_json() == TemplateTable::defaults().to_json());
  CHECK(TemplateTable::from_json(file.to_json()).to_json() == file.to_json());
  CHECK(file.get("HAZARD_FOG.STANDARD") == "Fog bank in {distance} meters.");
  CHECK_THROWS_AS(file.get("HAZARD_SNOW.TERSE"), MissingTemplate);
  try {
    TemplateTable::from_json(R"({"HANDOVER_REQUEST.TERSE": "x"})");
    FAIL("expected a missing template");
  } catch (const MissingTemplate& e) {
    CHECK(std::string(e.what()).find("missing template") == 0);
  }
  CHECK_THROWS_AS(TemplateTable::from_json("{"), SyntaxError);
  CHECK_THROWS_AS(TemplateTable::from_json("[1]"), ValidationError);
}

TEST_CASE("grounded facts for a foggy road") {
  const Scenario s = load_scenario(oracle::pack_dir() / "fog_highway.json");
  const SimParams p = s.params();
  const auto catalog = QueryCatalog::defaults();
  const Trace t = rollout(s.initial, s.road, p, s.horizon);
  const auto report = score_trace(t.propositions, catalog, {}, p.dt);
  const auto facts = ground_facts(report, t, s.road, catalog, p, 11.0);
  REQUIRE(facts.size() >= 4);
  CHECK(facts[0].predicate == Predicate::HandoverRequest);
  CHECK(facts[0].time_s == 11.0);
  CHECK(facts[1].predicate == Predicate::TimeBudget);
  CHECK(facts.back().predicate == Predicate::ActionAdvice);
  bool fog = false;
  for (const Fact& f : facts) fog = fog || (f.predicate == Predicate::Hazard && f.tag == Tag::Fog);
  CHECK(fog);
}
