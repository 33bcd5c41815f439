//! Shared test support: a brute-force lattice-search oracle for tiny market
//! instances and a random instance generator.
//!
//! The oracle never touches the LP machinery: it enumerates charge/discharge
//! schedules on a fixed grid, walks battery feasibility directly, and grids
//! the per-hour market split (with the exact shortfall corner added so vertex
//! solutions are hit exactly). The grid is a parameter: hand-derived fixtures
//! sit on a coarse grid, random small instances use the 0.1-MWh grid.
#![allow(clippy::needless_range_loop, clippy::too_many_arguments)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use windbid::market::{BatteryContext, BidVector, MarketDay, ScenarioSet};

pub const GRID: f64 = 0.1;

/// 0, grid, 2*grid, ..., plus the exact endpoint and any extra candidates.
fn lattice(max: f64, extra: &[f64], grid: f64) -> Vec<f64> {
    let mut vals = Vec::new();
    if max < 0.0 {
        return vals;
    }
    let steps = (max / grid).floor() as usize;
    for k in 0..=steps {
        vals.push(k as f64 * grid);
    }
    for &e in extra.iter().chain(std::iter::once(&max)) {
        if e >= -1e-12 && e <= max + 1e-12 && !vals.iter().any(|v| (v - e).abs() < 1e-12) {
            vals.push(e.max(0.0));
        }
    }
    vals
}

/// Best per-hour market value for a given residual (wind minus bid minus net
/// charge): sell rt, buy back up (capped by the bid), curtail op.
fn best_hour_value(
    resid: f64,
    bid: f64,
    rt_price: f64,
    up_price: f64,
    op_price: f64,
    grid: f64,
) -> f64 {
    let mut best = f64::NEG_INFINITY;
    let shortfall = (-resid).max(0.0);
    let mut try_up = |up: f64| {
        let op_cap = resid + up;
        if op_cap < -1e-9 {
            return;
        }
        let steps = (op_cap.max(0.0) / grid).floor() as usize;
        let mut try_op = |op: f64| {
            let rt = resid + up - op;
            if rt < -1e-9 {
                return;
            }
            let v = rt.max(0.0) * rt_price - up * up_price - op * op_price;
            if v > best {
                best = v;
            }
        };
        for k in 0..=steps {
            try_op(k as f64 * grid);
        }
        try_op(op_cap.max(0.0));
    };
    let steps = (bid / grid).floor() as usize;
    for k in 0..=steps {
        try_up(k as f64 * grid);
    }
    try_up(bid);
    if shortfall <= bid + 1e-12 {
        try_up(shortfall.min(bid));
    }
    best
}

/// Recourse value of one scenario under a fixed bid, by exhaustive lattice
/// search over charge/discharge schedules. Returns -inf when no lattice
/// schedule satisfies the battery constraints.
pub fn oracle_scenario_value(
    battery: &BatteryContext,
    scenarios: &ScenarioSet,
    w: usize,
    bid: &BidVector,
    horizon: usize,
    grid: f64,
) -> f64 {
    let ch_vals = lattice(battery.p_ch_max, &[], grid);
    let dis_vals = lattice(battery.p_dis_max, &[], grid);

    // Hour values depend on (t, ch, dis) only; precompute.
    let mut hour_val = vec![vec![vec![0.0; dis_vals.len()]; ch_vals.len()]; horizon];
    for t in 0..horizon {
        for (ci, ch) in ch_vals.iter().enumerate() {
            for (di, dis) in dis_vals.iter().enumerate() {
                let resid = scenarios.wind[w][t] - bid.p_da[t] - ch + dis;
                hour_val[t][ci][di] = best_hour_value(
                    resid,
                    bid.p_da[t],
                    scenarios.rt_price[w][t],
                    scenarios.up_price[w][t],
                    scenarios.op_price[w][t],
                    grid,
                );
            }
        }
    }

    fn walk(
        t: usize,
        horizon: usize,
        energy: f64,
        battery: &BatteryContext,
        ch_vals: &[f64],
        dis_vals: &[f64],
        hour_val: &[Vec<Vec<f64>>],
    ) -> f64 {
        if t == horizon {
            // The terminal floor applies to the last period's energy.
            return if energy >= battery.e_final - 1e-9 { 0.0 } else { f64::NEG_INFINITY };
        }
        let mut best = f64::NEG_INFINITY;
        for (ci, ch) in ch_vals.iter().enumerate() {
            for (di, dis) in dis_vals.iter().enumerate() {
                let e_next = energy + battery.eta_ch * ch - battery.eta_dis * dis;
                if e_next < battery.e_min - 1e-9 || e_next > battery.e_max + 1e-9 {
                    continue;
                }
                let v = hour_val[t][ci][di];
                if !v.is_finite() {
                    continue;
                }
                let rest = walk(t + 1, horizon, e_next, battery, ch_vals, dis_vals, hour_val);
                if rest.is_finite() && v + rest > best {
                    best = v + rest;
                }
            }
        }
        best
    }
    walk(0, horizon, battery.e_init, battery, &ch_vals, &dis_vals, &hour_val)
}

/// Probability-weighted second-stage value plus day-ahead revenue.
pub fn oracle_second_stage(
    day: &MarketDay,
    battery: &BatteryContext,
    scenarios: &ScenarioSet,
    bid: &BidVector,
    grid: f64,
) -> f64 {
    let horizon = day.horizon();
    let da: f64 = day.da_price.iter().zip(&bid.p_da).map(|(p, b)| p * b).sum();
    let mut total = da;
    for w in 0..scenarios.n_scenarios() {
        let v = oracle_scenario_value(battery, scenarios, w, bid, horizon, grid);
        if !v.is_finite() {
            return f64::NEG_INFINITY;
        }
        total += scenarios.prob[w] * v;
    }
    total
}

/// Exhaustive search over bid lattices (including each scenario's exact wind
/// values as candidates). Only sane for T <= 2.
pub fn oracle_full_sp(
    day: &MarketDay,
    battery: &BatteryContext,
    scenarios: &ScenarioSet,
    grid: f64,
) -> (f64, BidVector) {
    let horizon = day.horizon();
    let mut candidates: Vec<Vec<f64>> = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let max_wind = scenarios.wind.iter().map(|g| g[t]).fold(0.0f64, f64::max);
        let cap = max_wind + battery.p_dis_max;
        let exact: Vec<f64> = scenarios.wind.iter().map(|g| g[t]).collect();
        candidates.push(lattice(cap, &exact, grid));
    }
    let mut best = (f64::NEG_INFINITY, BidVector::zeros(horizon));
    let mut bid = BidVector::zeros(horizon);
    fn rec(
        t: usize,
        candidates: &[Vec<f64>],
        bid: &mut BidVector,
        day: &MarketDay,
        battery: &BatteryContext,
        scenarios: &ScenarioSet,
        grid: f64,
        best: &mut (f64, BidVector),
    ) {
        if t == candidates.len() {
            let v = oracle_second_stage(day, battery, scenarios, bid, grid);
            if v > best.0 {
                *best = (v, bid.clone());
            }
            return;
        }
        for &c in &candidates[t] {
            bid.p_da[t] = c;
            rec(t + 1, candidates, bid, day, battery, scenarios, grid, best);
        }
    }
    rec(0, &candidates, &mut bid, day, battery, scenarios, grid, &mut best);
    best
}

/// Objective slack allowed between the LP optimum and the lattice oracle:
/// every gridded quantity may sit up to one grid step away from the vertex.
pub fn lattice_tolerance(day: &MarketDay, scenarios: &ScenarioSet, grid: f64) -> f64 {
    let mut mass = 0.0;
    for t in 0..day.horizon() {
        let worst = (0..scenarios.n_scenarios())
            .map(|w| {
                6.0 * scenarios.rt_price[w][t].abs()
                    + 3.0 * scenarios.up_price[w][t]
                    + 3.0 * scenarios.op_price[w][t]
            })
            .fold(0.0f64, f64::max);
        mass += day.da_price[t].abs() + worst;
    }
    grid * mass
}

pub struct RandomInstance {
    pub day: MarketDay,
    pub battery: BatteryContext,
    pub scenarios: ScenarioSet,
}

/// Small bounded instance: penalties dominate both market prices, so the
/// program always has a finite optimum.
pub fn random_instance(
    rng: &mut ChaCha8Rng,
    horizon: usize,
    n_scen: usize,
    with_battery: bool,
) -> RandomInstance {
    let da_price: Vec<f64> = (0..horizon).map(|_| rng.gen_range(5.0..60.0)).collect();
    let mut wind: Vec<Vec<f64>> = Vec::with_capacity(n_scen);
    let mut rt_price = Vec::with_capacity(n_scen);
    let mut up_price = Vec::with_capacity(n_scen);
    let mut op_price = Vec::with_capacity(n_scen);
    for _ in 0..n_scen {
        let rt: Vec<f64> = (0..horizon).map(|_| rng.gen_range(0.0..70.0)).collect();
        let up: Vec<f64> =
            rt.iter().zip(&da_price).map(|(r, d)| r.max(*d) + rng.gen_range(5.0..40.0)).collect();
        let op: Vec<f64> = (0..horizon).map(|_| rng.gen_range(0.0..30.0)).collect();
        wind.push((0..horizon).map(|_| rng.gen_range(0.0..2.0)).collect());
        rt_price.push(rt);
        up_price.push(up);
        op_price.push(op);
    }
    let prob = if n_scen == 1 {
        vec![1.0]
    } else {
        let u: f64 = rng.gen_range(0.3..0.7);
        let mut p = vec![u];
        let rest = (1.0 - u) / (n_scen - 1) as f64;
        p.resize(n_scen, rest);
        p
    };
    let rt_forecast = rt_price[0].clone();
    let wind_forecast = wind[0].clone();

    let battery = if with_battery {
        let e_max = rng.gen_range(0.5..2.0);
        let e_init: f64 = rng.gen_range(0.0..e_max);
        let e_final = rng.gen_range(0.0..e_init.max(1e-12));
        let rate = GRID * rng.gen_range(0..=5) as f64;
        BatteryContext {
            e_min: 0.0,
            e_max,
            e_init,
            e_final,
            p_ch_max: rate,
            p_dis_max: rate,
            eta_ch: rng.gen_range(0.85..1.0),
            eta_dis: rng.gen_range(0.85..1.0),
        }
    } else {
        BatteryContext::disabled()
    };

    RandomInstance {
        day: MarketDay { da_price, rt_price_forecast: rt_forecast, wind_forecast },
        battery,
        scenarios: ScenarioSet { prob, wind, rt_price, up_price, op_price },
    }
}

/// Random nonnegative bid, occasionally above the available wind.
pub fn random_bid(rng: &mut ChaCha8Rng, instance: &RandomInstance) -> BidVector {
    let p_da =
        instance.day.wind_forecast.iter().map(|g| rng.gen_range(0.0..(1.3 * g + 0.5))).collect();
    BidVector { p_da }
}
