#include <doctest.h>

#include <cmath>
#include <memory>

#include "ccd/errors.hpp"
#include "ccd/optim.hpp"
#include "oracles.hpp"

using namespace ccd;

namespace {

struct World {
    ScenarioConfig cfg;
    std::shared_ptr<const NetworkGraph> graph;
    ObservationalDataset data;
    std::shared_ptr<const EstimatedSem> sem;
};

// A small fitted world shared by the tests below; fitting is the slow part.
const World& world() {
    static const World w = [] {
        World w;
        w.cfg.red_skill = 0.6;
        w.graph = std::make_shared<const NetworkGraph>(generate_network(w.cfg));
        Rng rng(21);
        w.data = collect_observational(w.cfg, *w.graph, 4, 25, 0.5, 0.2, rng);
        w.sem = std::make_shared<const EstimatedSem>(fit_sem_estimators(w.data));
        return w;
    }();
    return w;
}

// Smooth deterministic objective with its unique minimum 0.1 at (1, 1).
SemSample bowl(const InterventionSet& set) {
    const auto p = set.value_of(Var::P).value_or(0.5);
    const auto i = set.value_of(Var::I).value_or(0.5);
    SemSample s;
    s.total = (1 - p) * (1 - p) + (1 - i) * (1 - i) + 0.1;
    return s;
}

OptimizerOptions quick(std::size_t budget) {
    OptimizerOptions o;
    o.budget = budget;
    o.candidates_per_set = 100;
    o.n_mc = 20;
    o.prior_seed = 5;
    return o;
}

bool same_trace(const ConvergenceTrace& a, const ConvergenceTrace& b) {
    if (a.trials.size() != b.trials.size()) return false;
    for (std::size_t k = 0; k < a.trials.size(); ++k) {
        const auto &x = a.trials[k], &y = b.trials[k];
        if (!(x.set == y.set) || x.observed_y != y.observed_y || x.cumulative_cost != y.cumulative_cost ||
            x.best_so_far != y.best_so_far)
            return false;
    }
    return true;
}

HistoryEntry entry(std::size_t t, InterventionSet set, double h) {
    SemSample s;
    s.t = t;
    s.h = h;
    return {t, std::move(set), 0.0, s};
}

}  // namespace

TEST_SUITE("optim") {

TEST_CASE("intervention sets") {
    CHECK(InterventionSet::PI(0.2, 0.7).value_of(Var::I) == 0.7);
    CHECK_FALSE(InterventionSet::P(0.2).value_of(Var::I).has_value());
    CHECK(InterventionSet::I(0.3).apply({0.5, 0.5}) == BluePolicy{0.5, 0.3});
    CHECK_THROWS_AS(InterventionSet::P(1.2), ValidationError);
    CHECK_THROWS_AS(InterventionSet(SetKind::PI, {0.1}), ValidationError);
    CHECK(parse_set(to_string(SetKind::PI)) == SetKind::PI);
    CHECK(parse_method("DCBO") == Method::DCBO);
    CHECK_THROWS_AS(parse_method("TPE"), ValidationError);
}

TEST_CASE("unit intervention cost") {
    CHECK(intervention_unit_cost(InterventionSet::P(0.4)) == 1.0);
    CHECK(intervention_unit_cost(InterventionSet::PI(0.4, 0.1)) == 2.0);
    double total = 0;
    for (int k = 0; k < 50; ++k) total += intervention_unit_cost(InterventionSet::I(0.5));
    CHECK(total == 50.0);
}

TEST_CASE("history slices strictly increase") {
    InterventionHistory h;
    h.append(entry(3, InterventionSet::P(0.1), 0));
    CHECK_THROWS(h.append(entry(3, InterventionSet::P(0.1), 0)));
    CHECK_THROWS(h.append(entry(2, InterventionSet::P(0.1), 0)));
    h.append(entry(5, InterventionSet::P(0.1), 0));
    CHECK(h.at(5) != nullptr);
    CHECK(h.at(4) == nullptr);
}

TEST_CASE("expected improvement closed forms") {
    CHECK(expected_improvement(0.0, 1.0, 0.0) == doctest::Approx(0.39894).epsilon(1e-5));
    CHECK(expected_improvement(0.0, 1.0, 1.0) == doctest::Approx(1.08332).epsilon(1e-5));
    CHECK(expected_improvement(2.0, 0.0, 1.0) == 0.0);
    CHECK(expected_improvement(1.0, 0.0, 1.0) == 0.0);
    CHECK(expected_improvement(0.25, 0.0, 1.0) == 0.75);
    Rng rng(1);
    for (int k = 0; k < 200; ++k) {
        const double m = uniform(rng, -3, 3), v = uniform(rng, 0, 4), b = uniform(rng, -3, 3);
        const double sd = std::sqrt(v);
        const double z = (b - m) / sd;
        CHECK(expected_improvement(m, v, b) == doctest::Approx((b - m) * oracle::normal_cdf(z) + sd * oracle::normal_pdf(z)));
        CHECK(expected_improvement(m, v, b) >= 0.0);
        CHECK(expected_improvement(m + 0.1, v, b) < expected_improvement(m, v, b));
    }
}

TEST_CASE("estimated functions have the documented signatures") {
    const auto& sem = *world().sem;
    CHECK(sem.f_c->dims() == 1);
    for (const auto* f : {sem.f_s.get(), sem.f_h.get(), sem.f_a.get(), sem.f_t.get()}) CHECK(f->dims() == 2);
    CHECK(sem.f_s->size() == 4 * 24);
    CHECK(sem.f_t->size() == 4 * 25);
}

TEST_CASE("total cost estimate recovers the sum of its inputs") {
    const auto& w = world();
    Rng rng(2);
    const auto& c = w.data[Var::C];
    const auto& a = w.data[Var::A];
    for (int k = 0; k < 20; ++k) {
        const auto e = static_cast<Eigen::Index>(uniform_index(rng, 4)), t = static_cast<Eigen::Index>(uniform_index(rng, 25));
        Eigen::VectorXd x(2);
        x << c(e, t), a(e, t);
        const double truth = x.sum();
        if (truth > 0.1) CHECK(std::abs(w.sem->f_t->mean(x) - truth) <= 0.05 * truth);
    }
}

TEST_CASE("constant action cost is learned as a constant") {
    auto data = world().data;
    data[Var::A].setConstant(1.5);
    data[Var::T] = data[Var::C].array() + 1.5;
    const auto sem = fit_sem_estimators(data);
    Rng rng(3);
    for (int k = 0; k < 20; ++k) {
        Eigen::VectorXd x(2);
        x << uniform01(rng), uniform01(rng);
        CHECK(std::abs(sem.f_a->mean(x) - 1.5) <= 0.05);
    }
}

TEST_CASE("fit errors name the function") {
    ObservationalDataset d = world().data;
    d.padded.setConstant(true);
    try {
        fit_sem_estimators(d);
        FAIL("expected FitError");
    } catch (const FitError& e) {
        CHECK(std::string(e.what()).find("f_") != std::string::npos);
    }
}

TEST_CASE("interventional mean composes the fitted functions") {
    auto data = world().data;
    data[Var::C].setZero();
    data[Var::A].setConstant(1.5);
    data[Var::T].setConstant(1.5);
    data[Var::H].setZero();
    const auto sem = fit_sem_estimators(data);
    Rng rng(4);
    const double got = interventional_mean(sem, InterventionSet::P(0.3), {}, 10, 200, rng);
    Eigen::VectorXd h(1);
    h << sem.mean_h[9];
    Eigen::VectorXd pi(2);
    pi << 0.3, sem.mean_i;
    Eigen::VectorXd ca(2);
    ca << sem.f_c->mean(h), sem.f_a->mean(pi);
    CHECK(got == doctest::Approx(sem.f_t->mean(ca)).epsilon(0.02));
    CHECK(got == doctest::Approx(1.5).epsilon(0.02));
}

TEST_CASE("interventional mean is reproducible") {
    const auto& sem = *world().sem;
    Rng a(9), b(9);
    CHECK(interventional_mean(sem, InterventionSet::PI(0.2, 0.8), {}, 22, 30, a) ==
          interventional_mean(sem, InterventionSet::PI(0.2, 0.8), {}, 22, 30, b));
}

TEST_CASE("history changes the prior only through the previous slice") {
    const auto& w = world();
    InterventionHistory hist;
    hist.append(entry(22, InterventionSet::PI(0.0, 0.0), w.sem->mean_h[22] + 5.0));
    const auto cbo = make_causal_prior(w.sem, SetKind::PI, {}, 23, 50, 7);
    const auto dcbo = make_causal_prior(w.sem, SetKind::PI, hist, 23, 50, 7);
    const auto far = make_causal_prior(w.sem, SetKind::PI, hist, 21, 50, 7);
    const auto far_cbo = make_causal_prior(w.sem, SetKind::PI, {}, 21, 50, 7);
    const Eigen::Vector2d x(0.4, 0.6);
    CHECK(cbo(x) != dcbo(x));
    CHECK(far(x) == far_cbo(x));
}

TEST_CASE("causal prior equals the interventional mean under its seed") {
    const auto& w = world();
    const auto prior = make_causal_prior(w.sem, SetKind::PI, {}, 22, 40, 11);
    Rng rng(8);
    for (int k = 0; k < 5; ++k) {
        const Eigen::Vector2d x(uniform01(rng), uniform01(rng));
        Rng r(11);
        CHECK(prior(x) == interventional_mean(*w.sem, InterventionSet::PI(x[0], x[1]), {}, 22, 40, r));
        CHECK(prior(x) == prior(x));
    }
}

TEST_CASE("simulator objective") {
    auto cfg = world().cfg;
    const auto g = world().graph;
    SUBCASE("inert attacker costs only the action") {
        cfg.red_skill = 0.0;
        const auto s = evaluate_intervention(cfg, g, InterventionSet::PI(1.0, 0.0), 10, {}, 20, 3);
        CHECK(s.c == 0.0);
        CHECK(s.total == s.a);
        CHECK(s.a == 0.0);  // nothing compromised, so blue has no target
    }
    SUBCASE("free world") {
        cfg.cost_compromise = cfg.cost_restore = cfg.cost_isolate = 0.0;
        for (auto set : {InterventionSet::P(0.3), InterventionSet::PI(0.9, 0.1), InterventionSet::I(0.0)})
            CHECK(evaluate_intervention(cfg, g, set, 12, {}, 10, 4).total == 0.0);
    }
    SUBCASE("same seed, same value") {
        const auto a = evaluate_intervention(cfg, g, InterventionSet::P(0.3), 12, {}, 10, 4);
        CHECK(a == evaluate_intervention(cfg, g, InterventionSet::P(0.3), 12, {}, 10, 4));
        CHECK(a.total == doctest::Approx(a.c + a.a));
    }
    SUBCASE("history slices run their recorded intervention") {
        InterventionHistory h;
        h.append(entry(5, InterventionSet::PI(1.0, 0.0), 0));
        const auto with = evaluate_intervention(cfg, g, InterventionSet::P(0.5), 12, h, 20, 4);
        const auto without = evaluate_intervention(cfg, g, InterventionSet::P(0.5), 12, {}, 20, 4);
        CHECK(with != without);
        // History at or after t is irrelevant.
        InterventionHistory late;
        late.append(entry(13, InterventionSet::PI(1.0, 0.0), 0));
        CHECK(evaluate_intervention(cfg, g, InterventionSet::P(0.5), 12, late, 20, 4) == without);
    }
    CHECK_THROWS_AS(evaluate_intervention(cfg, g, InterventionSet::P(0.5), 25, {}, 20, 4), ValidationError);
}

TEST_CASE("one-trial budget is a single probe") {
    Rng rng(1);
    const auto tr = run_optimizer(Method::BO, bowl, nullptr, {}, 3, quick(1), rng);
    REQUIRE(tr.trials.size() == 1);
    CHECK(tr.trials[0].best_so_far == tr.trials[0].observed_y);
    CHECK(tr.best_value == tr.trials[0].observed_y);
    CHECK(tr.trials[0].set.kind() == SetKind::PI);
}

TEST_CASE("each method finds the corner minimum") {
    for (auto m : {Method::BO, Method::CBO, Method::DCBO}) {
        Rng rng(2);
        const auto tr = run_optimizer(m, bowl, world().sem, {}, 22, quick(50), rng);
        CAPTURE(to_string(m));
        CHECK(tr.best_value <= 0.1 * 1.05);
        CHECK(tr.trials.size() == 50);
    }
}

TEST_CASE("trace invariants") {
    for (auto m : {Method::BO, Method::CBO, Method::DCBO}) {
        Rng rng(3);
        const auto tr = run_optimizer(m, bowl, world().sem, {}, 22, quick(25), rng);
        double lowest = 1e300;
        for (std::size_t k = 0; k < tr.trials.size(); ++k) {
            const auto& t = tr.trials[k];
            lowest = std::min(lowest, t.observed_y);
            CHECK(t.index == k);
            CHECK(t.best_so_far == lowest);
            if (k > 0) {
                CHECK(t.best_so_far <= tr.trials[k - 1].best_so_far);
                CHECK(t.cumulative_cost >= tr.trials[k - 1].cumulative_cost);
            }
        }
        CHECK(tr.best_value == lowest);
        CHECK(bowl(*tr.best_set).total == lowest);
    }
}

TEST_CASE("causal methods probe every set first, in canonical order") {
    Rng rng(4);
    const auto tr = run_optimizer(Method::CBO, bowl, world().sem, {}, 22, quick(5), rng);
    CHECK(tr.trials[0].set.kind() == SetKind::P);
    CHECK(tr.trials[1].set.kind() == SetKind::PI);
    CHECK(tr.trials[2].set.kind() == SetKind::I);
}

TEST_CASE("DCBO with no history replays CBO") {
    Rng a(5), b(5);
    const auto cbo = run_optimizer(Method::CBO, bowl, world().sem, {}, 22, quick(20), a);
    const auto dcbo = run_optimizer(Method::DCBO, bowl, world().sem, {}, 22, quick(20), b);
    CHECK(same_trace(cbo, dcbo));
}

TEST_CASE("traces are reproducible and independent of set order") {
    for (auto m : {Method::BO, Method::CBO, Method::DCBO}) {
        Rng a(6), b(6), c(6);
        auto opts = quick(15);
        const auto x = run_optimizer(m, bowl, world().sem, {}, 22, opts, a);
        const auto y = run_optimizer(m, bowl, world().sem, {}, 22, opts, b);
        opts.set_order = {SetKind::I, SetKind::PI, SetKind::P};
        const auto z = run_optimizer(m, bowl, world().sem, {}, 22, opts, c);
        CHECK(same_trace(x, y));
        CHECK(same_trace(x, z));
    }
}

TEST_CASE("optimizer argument errors") {
    Rng rng(1);
    CHECK_THROWS_AS(run_optimizer(Method::BO, bowl, nullptr, {}, 3, quick(0), rng), ValidationError);
    CHECK_THROWS_AS(run_optimizer(Method::CBO, bowl, nullptr, {}, 3, quick(3), rng), ValidationError);
    auto bad = quick(3);
    bad.set_order = {SetKind::P, SetKind::P, SetKind::I};
    CHECK_THROWS_AS(run_optimizer(Method::BO, bowl, nullptr, {}, 3, bad, rng), ValidationError);
    const Objective broken = [](const InterventionSet&) -> SemSample { throw std::runtime_error("simulator down"); };
    try {
        run_optimizer(Method::BO, broken, nullptr, {}, 3, quick(3), rng);
        FAIL("expected failure");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("trial 0") != std::string::npos);
    }
}

TEST_CASE("sequences") {
    const SequentialObjective obj = [](const InterventionSet& s, std::size_t, const InterventionHistory&) { return bowl(s); };
    SUBCASE("three slices leave three history entries") {
        const auto r = run_sequence(Method::DCBO, obj, world().sem, {22, 23, 24}, {}, quick(6), 9);
        CHECK(r.traces.size() == 3);
        CHECK(r.history.size() == 3);
        CHECK(r.history.at(23)->y_star == r.traces[1].best_value);
    }
    SUBCASE("a single slice is one optimizer run") {
        const auto opts = quick(8);
        const auto r = run_sequence(Method::CBO, obj, world().sem, {22}, {}, opts, 9);
        auto o2 = opts;
        o2.prior_seed = prior_seed_for(opts.prior_seed, 22);
        Rng rng(derive_seed(9, {stream::kOptimizer, 22}));
        CHECK(same_trace(r.traces[0], run_optimizer(Method::CBO, bowl, world().sem, {}, 22, o2, rng)));
    }
    SUBCASE("the objective sees the applied path, not the method's own optima") {
        InterventionHistory applied;
        applied.append(entry(22, InterventionSet::P(0.25), 0));
        std::vector<std::size_t> seen;
        const SequentialObjective spy = [&](const InterventionSet& s, std::size_t t, const InterventionHistory& h) {
            seen.push_back(h.size());
            CHECK(h.entries().front().set == InterventionSet::P(0.25));
            (void)t;
            return bowl(s);
        };
        run_sequence(Method::BO, spy, nullptr, {22, 23}, applied, quick(3), 1);
        CHECK(seen == std::vector<std::size_t>(6, 1));
    }
    SUBCASE("slices must increase") {
        CHECK_THROWS_AS(run_sequence(Method::BO, obj, nullptr, {23, 22}, {}, quick(2), 1), ValidationError);
    }
}

}
