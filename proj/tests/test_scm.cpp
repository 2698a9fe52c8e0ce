#include <doctest.h>

#include <cmath>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "ccd/errors.hpp"
#include "ccd/scm.hpp"

using namespace ccd;

namespace {

// Independent reading of the likelihood-of-further-compromise sum over the edge list.
double brute_h(const EpisodeState& s) {
    const auto& g = *s.graph;
    double h = 0.0;
    for (auto n : s.compromised)
        for (auto [a, b] : g.edges()) {
            if (a == n && !s.isolated.count(b)) h += g.node(b).vulnerability;
            if (b == n && !s.isolated.count(a)) h += g.node(a).vulnerability;
        }
    return h;
}

bool cyclic(const CausalDiagram& d) {
    std::map<std::string, std::vector<std::string>> out;
    for (const auto* list : {&d.within_slice_edges, &d.transition_edges})
        for (const auto& [a, b] : *list) out[to_string(a)].push_back(to_string(b));
    std::map<std::string, int> colour;
    auto visit = [&](auto&& self, const std::string& v) -> bool {
        colour[v] = 1;
        for (const auto& w : out[v]) {
            if (colour[w] == 1) return true;
            if (colour[w] == 0 && self(self, w)) return true;
        }
        colour[v] = 2;
        return false;
    };
    for (const auto& v : d.variables())
        if (colour[to_string(v)] == 0 && visit(visit, to_string(v))) return true;
    return false;
}

}  // namespace

TEST_SUITE("scm") {

TEST_CASE("single slice diagram") {
    const auto d = build_dag(1);
    CHECK(d.variables().size() == 7);
    CHECK(d.within_slice_edges.size() == 7);
    CHECK(d.transition_edges.empty());
}

TEST_CASE("three slice diagram") {
    const auto d = build_dag(3);
    CHECK(d.variables().size() == 21);
    CHECK(d.within_slice_edges.size() == 21);
    CHECK(d.transition_edges.size() == 4);
    CHECK_FALSE(cyclic(d));
    CHECK(d.topological_order().size() == 21);
}

TEST_CASE("edges are exactly the documented ones in every slice") {
    const auto d = build_dag(4);
    std::set<std::pair<SliceVar, SliceVar>> w(d.within_slice_edges.begin(), d.within_slice_edges.end());
    std::set<std::pair<SliceVar, SliceVar>> tr(d.transition_edges.begin(), d.transition_edges.end());
    std::set<std::pair<SliceVar, SliceVar>> want_w, want_tr;
    const std::vector<std::pair<Var, Var>> within{{Var::I, Var::S}, {Var::C, Var::H}, {Var::A, Var::T}, {Var::P, Var::H},
                                                  {Var::P, Var::A}, {Var::I, Var::A}, {Var::C, Var::T}};
    for (std::size_t t = 0; t < 4; ++t) {
        for (auto [a, b] : within) want_w.insert({{a, t}, {b, t}});
        if (t > 0) {
            want_tr.insert({{Var::H, t - 1}, {Var::C, t}});
            want_tr.insert({{Var::C, t - 1}, {Var::S, t}});
        }
    }
    CHECK(w == want_w);
    CHECK(tr == want_tr);
    const auto parents = d.parents({Var::S, 2});
    CHECK(std::set<SliceVar>(parents.begin(), parents.end()) == std::set<SliceVar>{{Var::I, 2}, {Var::C, 1}});
}

TEST_CASE("topological order respects every edge") {
    const auto d = build_dag(25);
    const auto order = d.topological_order();
    std::map<SliceVar, std::size_t> pos;
    for (std::size_t k = 0; k < order.size(); ++k) pos[order[k]] = k;
    for (const auto* list : {&d.within_slice_edges, &d.transition_edges})
        for (const auto& [a, b] : *list) CHECK(pos.at(a) < pos.at(b));
}

TEST_CASE("dag edge list") {
    std::ostringstream out;
    write_dag_edges(out, build_dag(2));
    const auto text = out.str();
    CHECK(text.find("H_0 -> C_1\n") != std::string::npos);
    CHECK(text.find("I_1 -> S_1\n") != std::string::npos);
    CHECK(std::count(text.begin(), text.end(), '\n') == 16);
}

TEST_CASE("structural equations on hand-built states") {
    std::vector<NodeAttr> nodes{{0.9, true}, {0.4, false}, {0.6, false}, {0.3, false}, {0.5, false}};
    auto g = std::make_shared<const NetworkGraph>(nodes, std::vector<std::pair<NodeId, NodeId>>{{0, 1}, {0, 2}, {3, 4}},
                                                  std::vector<NodeId>{0}, 4);
    auto s = EpisodeState::initial(g);
    const Costs costs{1.0, 1.5, 0.75};

    SUBCASE("no compromise") {
        s.isolated[3] = 2;
        const auto x = compute_slice(s, BlueAction::isolate(3), {0.2, 0.7}, costs);
        CHECK(x.p == 0.2);
        CHECK(x.i == 0.7);
        CHECK(x.s == 4.0);
        CHECK(x.c == 0.0);
        CHECK(x.h == 0.0);
        CHECK(x.a == 0.75);
        CHECK(x.total == x.a);
    }
    SUBCASE("one compromised node with neighbours 0.4 and 0.6") {
        s.compromised = {0};
        CHECK(compute_slice(s, BlueAction::noop(), {}, costs).h == doctest::Approx(1.0).epsilon(1e-12));
        s.isolated[2] = 1;
        CHECK(compute_slice(s, BlueAction::noop(), {}, costs).h == doctest::Approx(0.4).epsilon(1e-12));
    }
    SUBCASE("four compromised nodes") {
        s.compromised = {0, 1, 2, 3};
        const auto x = compute_slice(s, BlueAction::restore(1), {}, costs);
        CHECK(x.c == doctest::Approx(8.0).epsilon(1e-12));
        CHECK(x.a == 1.5);
        CHECK(x.total == x.c + x.a);
    }
}

TEST_CASE("structural equations match brute force on random states") {
    Rng rng(31);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        ScenarioConfig cfg;
        cfg.topology_seed = seed;
        cfg.n_nodes = 3 + seed % 12;
        auto g = std::make_shared<const NetworkGraph>(generate_network(cfg));
        auto s = EpisodeState::initial(g);
        for (NodeId n = 0; n < g->size(); ++n) {
            if (uniform01(rng) < 0.4) s.compromised.insert(n);
            if (uniform01(rng) < 0.3) s.isolated[n] = 1;
        }
        const Costs costs{0.5 + uniform01(rng), 1.5, 0.75};
        const auto x = compute_slice(s, BlueAction::noop(), {}, costs);
        std::set<NodeId> k_or_phi(s.compromised);
        for (auto [n, _] : s.isolated) k_or_phi.insert(n);
        CHECK(x.s == static_cast<double>(g->size() - k_or_phi.size()));
        CHECK(std::abs(x.c - std::pow(costs.compromise * static_cast<double>(s.compromised.size()), 1.5)) <= 1e-12);
        CHECK(std::abs(x.h - brute_h(s)) <= 1e-12);
        bool all_neighbours_cut = true;
        for (auto n : s.compromised)
            for (auto v : g->neighbours(n))
                if (!s.is_isolated(v)) all_neighbours_cut = false;
        CHECK((x.h == 0.0) == (s.compromised.empty() || all_neighbours_cut));
        CHECK(x.total == x.c + x.a);
    }
}

TEST_CASE("terminal padding repeats the last slice without action cost") {
    std::vector<NodeAttr> nodes{{1.0, true}, {1.0, false}, {1.0, false}};
    auto g = std::make_shared<const NetworkGraph>(nodes, std::vector<std::pair<NodeId, NodeId>>{{0, 1}, {1, 2}},
                                                  std::vector<NodeId>{0}, 2);
    EngineRules r;
    r.red_skill = 1.0;
    Rng rng(1);
    const auto recs = run_episode(r, g, BluePolicy{0.0, 0.0}, 10, rng);
    REQUIRE(recs.size() == 3);
    const auto sl = episode_slices(recs, {}, 10);
    REQUIRE(sl.samples.size() == 10);
    for (std::size_t t = 0; t < 10; ++t) {
        CHECK(sl.samples[t].t == t);
        CHECK(sl.padded[t] == (t >= 3));
        if (t >= 3) {
            CHECK(sl.samples[t].c == sl.samples[2].c);
            CHECK(sl.samples[t].h == sl.samples[2].h);
            CHECK(sl.samples[t].a == 0.0);
            CHECK(sl.samples[t].total == sl.samples[t].c);
        }
    }
}

TEST_CASE("observational dataset") {
    ScenarioConfig cfg;
    const auto g = generate_network(cfg);
    Rng a(5), b(5);
    const auto d = collect_observational(cfg, g, 10, 25, 0.5, 0.2, a);
    const auto e = collect_observational(cfg, g, 10, 25, 0.5, 0.2, b);
    for (auto v : kAllVars) {
        CHECK(d[v].rows() == 10);
        CHECK(d[v].cols() == 25);
        CHECK(d[v] == e[v]);
    }
    CHECK(d.padded.rows() == 10);
    CHECK(d.policies.size() == 10);
    for (std::size_t env = 0; env < 10; ++env) {
        CHECK(d.policies[env].p_res >= 0.0);
        CHECK(d.policies[env].p_res <= 1.0);
        for (std::size_t t = 0; t < 25; ++t) {
            const auto x = d.sample(env, t);
            CHECK(x.total == x.c + x.a);
            CHECK(x.p == d.policies[env].p_res);
            for (auto v : kAllVars) {
                CHECK(std::isfinite(x.get(v)));
                CHECK(x.get(v) >= 0.0);
            }
        }
    }
}

TEST_CASE("dataset rows come from the recorded episode") {
    ScenarioConfig cfg;
    cfg.red_skill = 0.6;
    const auto g = generate_network(cfg);
    Rng rng(9);
    const auto d = collect_observational(cfg, g, 4, 25, 0.5, 0.2, rng);
    auto shared = std::make_shared<const NetworkGraph>(g);
    for (std::size_t env = 0; env < 4; ++env) {
        Rng er(d.seeds[env]);
        const auto recs = run_episode(EngineRules::from(cfg), shared, d.policies[env], 25, er);
        const auto sl = episode_slices(recs, Costs::from(cfg), 25);
        for (std::size_t t = 0; t < 25; ++t) {
            CHECK(d.sample(env, t) == sl.samples[t]);
            CHECK(d.padded(env, t) == sl.padded[t]);
        }
    }
}

TEST_CASE("policies are normal draws clipped to the unit interval") {
    ScenarioConfig cfg;
    const auto g = generate_network(cfg);
    Rng rng(2);
    const auto d = collect_observational(cfg, g, 400, 1, 0.5, 0.2, rng);
    double sum = 0, sq = 0;
    for (const auto& p : d.policies) {
        CHECK(p.p_res >= 0.0);
        CHECK(p.p_res <= 1.0);
        sum += p.p_res;
        sq += p.p_res * p.p_res;
    }
    const double mean = sum / 400, sd = std::sqrt(sq / 400 - mean * mean);
    CHECK(std::abs(mean - 0.5) < 0.04);
    CHECK(std::abs(sd - 0.2) < 0.03);

    Rng wide(3);
    for (const auto& p : collect_observational(cfg, g, 200, 1, 0.5, 3.0, wide).policies) {
        CHECK(p.p_res >= 0.0);
        CHECK(p.p_iso <= 1.0);
    }
}

TEST_CASE("dataset csv round trip") {
    ScenarioConfig cfg;
    const auto g = generate_network(cfg);
    Rng rng(5);
    const auto d = collect_observational(cfg, g, 3, 6, 0.5, 0.2, rng);
    std::stringstream io;
    write_dataset_csv(io, d);
    const auto text = io.str();
    CHECK(text.rfind("env,t,p,i,s,c,h,a,total,padded\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 3 * 6);
    const auto back = read_dataset_csv(io);
    CHECK(back.n_envs == 3);
    CHECK(back.horizon == 6);
    for (auto v : kAllVars) CHECK(back[v] == d[v]);
    CHECK(back.padded == d.padded);

    std::istringstream bad("env,t,p\n0,0,0.5\n");
    CHECK_THROWS_AS(read_dataset_csv(bad), ParseError);
}

}
