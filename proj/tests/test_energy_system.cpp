#include <cmath>

#include "doctest.h"
#include "flexbid/energy_system.hpp"

using namespace flexbid;

namespace {

UnitSpec unit(const std::string& id, UnitKind kind, double cap, double alpha,
              double mpl = 0, double beta = 0, double heat_ratio = 0) {
    UnitSpec u;
    u.id = id;
    u.kind = kind;
    u.capacity = cap;
    u.alpha = alpha;
    u.min_part_load = mpl;
    u.beta = beta;
    u.heat_ratio = heat_ratio;
    return u;
}

EnergySystem boiler_only() {
    EnergySystem s;
    s.gas_price = 30;
    s.units.push_back(unit("b1", UnitKind::kBoiler, 4, 1.0 / 0.9));
    return s;
}

EnergySystem generator_only(double cap = 10, double alpha = 1.0 / 0.4) {
    EnergySystem s;
    s.gas_price = 30;
    s.units.push_back(unit("g1", UnitKind::kChp, cap, alpha));
    return s;
}

Demands demands(double el, double heat, double cool) {
    Demands d;
    d.el = el;
    d.heat = heat;
    d.cool = cool;
    return d;
}

}  // namespace

TEST_CASE("boiler meets a heat demand at its efficiency") {
    DispatchResult r = dispatch(boiler_only(), demands(0, 3.6, 0));
    CHECK(r.gas_purchase == doctest::Approx(4.0).epsilon(1e-9));
    CHECK(r.cost == doctest::Approx(120.0).epsilon(1e-9));
    REQUIRE(r.units.size() == 1);
    CHECK(r.units[0].heat == doctest::Approx(3.6));
    CHECK(r.units[0].on);
}

TEST_CASE("zero demands keep every unit off") {
    EnergySystem s = boiler_only();
    s.units.push_back(unit("g1", UnitKind::kChp, 5, 2.5, 0.3, 0.2, 0.9));
    DispatchResult r = dispatch(s, demands(0, 0, 0));
    CHECK(r.cost == doctest::Approx(0.0));
    for (const UnitDispatch& u : r.units) {
        CHECK(!u.on);
        CHECK(u.output == doctest::Approx(0.0));
    }
}

TEST_CASE("chp coproduces heat against the heat demand") {
    EnergySystem s;
    s.gas_price = 30;
    s.units.push_back(unit("chp1", UnitKind::kChp, 4.4, 2.0, 0, 0, 4.0 / 4.4));
    DispatchResult r = dispatch(s, demands(4.4, 4.0, 0));
    REQUIRE(r.units.size() == 1);
    CHECK(r.units[0].el == doctest::Approx(4.4));
    CHECK(r.units[0].heat == doctest::Approx(4.0).epsilon(1e-9));
    CHECK(r.cost == doctest::Approx(4.4 * 2.0 * 30).epsilon(1e-9));
}

TEST_CASE("grid inflow displaces on-site generation") {
    EnergySystem s = generator_only();
    DispatchResult with_grid = dispatch(s, demands(6, 0, 0), 2.5);
    DispatchResult reduced = dispatch(s, demands(3.5, 0, 0));
    CHECK(with_grid.cost == doctest::Approx(reduced.cost).epsilon(1e-12));
    CHECK(with_grid.units[0].el == doctest::Approx(3.5));
}

TEST_CASE("minimum part load forces venting when demand is low") {
    EnergySystem s;
    s.gas_price = 10;
    s.units.push_back(unit("b1", UnitKind::kBoiler, 4, 1.0, 0.5));
    DispatchResult r = dispatch(s, demands(0, 1.0, 0));
    // unit must run at or above 2 MW; surplus heat is vented
    CHECK(r.units[0].output == doctest::Approx(2.0));
    CHECK(r.cost == doctest::Approx(20.0));
}

TEST_CASE("idle draw charges the on state") {
    EnergySystem s;
    s.gas_price = 30;
    s.units.push_back(unit("b1", UnitKind::kBoiler, 4, 1.0 / 0.9, 0, 0.5));
    DispatchResult r = dispatch(s, demands(0, 3.6, 0));
    CHECK(r.gas_purchase == doctest::Approx(4.5).epsilon(1e-9));
    CHECK(r.cost == doctest::Approx(135.0).epsilon(1e-9));
}

TEST_CASE("absorption chain pulls heat through the boiler") {
    EnergySystem s;
    s.gas_price = 30;
    s.units.push_back(unit("b1", UnitKind::kBoiler, 6, 1.0 / 0.9));
    s.units.push_back(unit("ac1", UnitKind::kAbsorptionChiller, 3, 1.0 / 0.7));
    DispatchResult r = dispatch(s, demands(0, 0, 2.0));
    const double heat_draw = 2.0 / 0.7;
    CHECK(r.units[1].heat == doctest::Approx(-heat_draw).epsilon(1e-9));
    CHECK(r.gas_purchase == doctest::Approx(heat_draw / 0.9).epsilon(1e-9));
}

TEST_CASE("compression chiller load is generated on site") {
    EnergySystem s;
    s.gas_price = 30;
    s.units.push_back(unit("g1", UnitKind::kChp, 10, 2.0));
    s.units.push_back(unit("cc1", UnitKind::kCompressionChiller, 5, 0.18));
    DispatchResult r = dispatch(s, demands(1.0, 0, 5.0));
    const double cc_el = 5.0 * 0.18;
    CHECK(r.units[1].el == doctest::Approx(-cc_el).epsilon(1e-9));
    CHECK(r.units[0].el == doctest::Approx(1.0 + cc_el).epsilon(1e-9));
}

TEST_CASE("dispatch cost is non-decreasing in each demand") {
    EnergySystem s;
    s.gas_price = 25;
    s.units.push_back(unit("g1", UnitKind::kChp, 8, 2.2, 0.2, 0.3, 0.8));
    s.units.push_back(unit("b1", UnitKind::kBoiler, 6, 1.2, 0.1, 0.1));
    s.units.push_back(unit("cc1", UnitKind::kCompressionChiller, 4, 0.25));
    double prev = -1;
    for (double h : {0.0, 1.5, 3.0, 4.5, 6.0}) {
        DispatchResult r = dispatch(s, demands(2.0, h, 1.0));
        CHECK(r.cost >= prev - 1e-9);
        prev = r.cost;
    }
    prev = -1;
    // electricity levels start above the chp minimum part load; with an
    // equality balance and no grid, lower levels are genuinely unreachable
    for (double e : {2.0, 4.0, 6.0}) {
        DispatchResult r = dispatch(s, demands(e, 2.0, 1.0));
        CHECK(r.cost >= prev - 1e-9);
        prev = r.cost;
    }
}

TEST_CASE("infeasible demands name the violated product") {
    try {
        dispatch(boiler_only(), demands(0, 10.0, 0));
        FAIL("expected DispatchError");
    } catch (const DispatchError& e) {
        CHECK(std::string(e.what()).find("heat") != std::string::npos);
    }
    CHECK_THROWS_AS(dispatch(boiler_only(), demands(1.0, 0, 0)), DispatchError);
    CHECK_THROWS_AS(dispatch(boiler_only(), demands(0, 0, 1.0)), DispatchError);
}

TEST_CASE("marginal cost of an affine generator is exact") {
    MarginalCostFit fit = marginal_cost(generator_only(), 0, 0, 11);
    CHECK(std::fabs(fit.mc - 75.0) <= 1e-9);
    CHECK(std::fabs(fit.intercept) <= 1e-9);
    CHECK(std::fabs(fit.r2 - 1.0) <= 1e-12);
    CHECK(fit.sweep.size() == 11);
    CHECK(fit.sweep.back().first == doctest::Approx(10.0));
}

TEST_CASE("marginal cost is unchanged by a separable heat load") {
    EnergySystem s = generator_only();
    s.units.push_back(unit("b1", UnitKind::kBoiler, 5, 1.0 / 0.9));
    MarginalCostFit with_heat = marginal_cost(s, 3.0, 0, 9);
    MarginalCostFit bare = marginal_cost(generator_only(), 0, 0, 9);
    CHECK(with_heat.mc == doctest::Approx(bare.mc).epsilon(1e-9));
    CHECK(with_heat.intercept ==
          doctest::Approx(3.0 / 0.9 * 30.0).epsilon(1e-9));
}

TEST_CASE("marginal cost guards degenerate sweeps") {
    CHECK_THROWS_AS(marginal_cost(boiler_only(), 0, 0, 5), std::invalid_argument);
    CHECK_THROWS_AS(marginal_cost(generator_only(), 0, 0, 2),
                    std::invalid_argument);
}

TEST_CASE("flexible capacity around a working point") {
    FlexCapacity f = flex_capacity(generator_only(), demands(4, 0, 0));
    CHECK(f.max_positive == doctest::Approx(6.0).epsilon(1e-9));
    CHECK(f.max_negative == doctest::Approx(4.0).epsilon(1e-9));

    EnergySystem s = generator_only();
    s.units.push_back(unit("eb1", UnitKind::kElectrodeBoiler, 2, 1.0));
    f = flex_capacity(s, demands(4, 0, 0));
    CHECK(f.max_positive == doctest::Approx(6.0).epsilon(1e-9));
    CHECK(f.max_negative == doctest::Approx(6.0).epsilon(1e-9));

    f = flex_capacity(boiler_only(), demands(0, 2.0, 0));
    CHECK(f.max_positive == doctest::Approx(0.0));
    CHECK(f.max_negative == doctest::Approx(0.0));
}

TEST_CASE("system validation rejects malformed units") {
    EnergySystem s;
    s.units.push_back(unit("", UnitKind::kBoiler, 4, 1));
    CHECK_THROWS_AS(check_system(s), std::invalid_argument);

    s.units[0].id = "b1";
    s.units[0].capacity = 0;
    CHECK_THROWS_AS(check_system(s), std::invalid_argument);

    s.units[0].capacity = 4;
    s.units[0].min_part_load = 1.0;
    CHECK_THROWS_AS(check_system(s), std::invalid_argument);

    s.units[0].min_part_load = 0;
    s.units[0].heat_ratio = 0.5;  // not a chp
    CHECK_THROWS_AS(check_system(s), std::invalid_argument);

    s.units[0].heat_ratio = 0;
    s.units.push_back(unit("b1", UnitKind::kBoiler, 2, 1));
    CHECK_THROWS_AS(check_system(s), std::invalid_argument);  // duplicate id
}
