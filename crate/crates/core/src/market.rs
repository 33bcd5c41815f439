//! Two-stage stochastic market model for a wind farm with storage.
//!
//! First stage commits a day-ahead bid per hour; recourse per scenario sells
//! in real time, buys back under-production, curtails over-production, and
//! moves energy through the battery. `build_extensive_form` assembles the
//! deterministic equivalent over all scenarios; `solve_second_stage` fixes the
//! bid and solves the decoupled per-scenario programs (optionally in parallel);
//! `solve_full_sp` optimizes bid and recourse jointly.

use crate::lp::{ColLabel, LpStandardForm, RowLabel, RowSense, RowSpec, StartBasis};
use crate::simplex::{self, SimplexError, SimplexOptions, SimplexStatus};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid {what}: {detail}")]
    Invalid { what: &'static str, detail: String },
    #[error("solver failure{}: {source}", scenario_tag(*.scenario))]
    Solver {
        scenario: Option<usize>,
        #[source]
        source: SimplexError,
    },
}

fn scenario_tag(scenario: Option<usize>) -> String {
    match scenario {
        Some(s) => format!(" in scenario {s}"),
        None => String::new(),
    }
}

/// One 24-hour (or general-horizon) problem context.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarketDay {
    /// Day-ahead prices per hour (currency/MWh).
    pub da_price: Vec<f64>,
    /// Forecast real-time prices per hour (currency/MWh).
    pub rt_price_forecast: Vec<f64>,
    /// Forecast wind production per hour (MWh).
    pub wind_forecast: Vec<f64>,
}

impl MarketDay {
    pub fn horizon(&self) -> usize {
        self.da_price.len()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let t = self.horizon();
        if t == 0 {
            return Err(ModelError::Invalid { what: "MarketDay", detail: "empty horizon".into() });
        }
        if self.rt_price_forecast.len() != t || self.wind_forecast.len() != t {
            return Err(ModelError::DimensionMismatch(format!(
                "day vectors disagree: da {}, rt {}, wind {}",
                t,
                self.rt_price_forecast.len(),
                self.wind_forecast.len()
            )));
        }
        if self.wind_forecast.iter().any(|g| *g < 0.0 || !g.is_finite()) {
            return Err(ModelError::Invalid {
                what: "MarketDay",
                detail: "wind forecast must be finite and nonnegative".into(),
            });
        }
        Ok(())
    }
}

/// Storage parameters for one episode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatteryContext {
    pub e_min: f64,
    pub e_max: f64,
    /// Pre-horizon energy level.
    pub e_init: f64,
    /// Floor on the final energy level.
    pub e_final: f64,
    pub p_ch_max: f64,
    pub p_dis_max: f64,
    pub eta_ch: f64,
    pub eta_dis: f64,
}

impl BatteryContext {
    /// A battery that cannot store or move any energy.
    pub fn disabled() -> Self {
        Self {
            e_min: 0.0,
            e_max: 0.0,
            e_init: 0.0,
            e_final: 0.0,
            p_ch_max: 0.0,
            p_dis_max: 0.0,
            eta_ch: 1.0,
            eta_dis: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let ok = 0.0 <= self.e_min
            && self.e_min <= self.e_init
            && self.e_init <= self.e_max
            && self.e_min <= self.e_final
            && self.e_final <= self.e_max
            && self.eta_ch > 0.0
            && self.eta_ch <= 1.0
            && self.eta_dis > 0.0
            && self.p_ch_max >= 0.0
            && self.p_dis_max >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(ModelError::Invalid { what: "BatteryContext", detail: format!("{self:?}") })
        }
    }
}

/// Per-scenario realizations, stored scenario-major: `wind[ω][t]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioSet {
    pub prob: Vec<f64>,
    pub wind: Vec<Vec<f64>>,
    pub rt_price: Vec<Vec<f64>>,
    pub up_price: Vec<Vec<f64>>,
    pub op_price: Vec<Vec<f64>>,
}

impl ScenarioSet {
    /// Single scenario with probability one matching the day's forecasts,
    /// with given penalty prices.
    pub fn deterministic(day: &MarketDay, up_price: Vec<f64>, op_price: Vec<f64>) -> Self {
        Self {
            prob: vec![1.0],
            wind: vec![day.wind_forecast.clone()],
            rt_price: vec![day.rt_price_forecast.clone()],
            up_price: vec![up_price],
            op_price: vec![op_price],
        }
    }

    pub fn n_scenarios(&self) -> usize {
        self.prob.len()
    }

    pub fn validate(&self, horizon: usize) -> Result<(), ModelError> {
        let s = self.n_scenarios();
        for (name, mat) in [
            ("wind", &self.wind),
            ("rt_price", &self.rt_price),
            ("up_price", &self.up_price),
            ("op_price", &self.op_price),
        ] {
            if mat.len() != s {
                return Err(ModelError::DimensionMismatch(format!(
                    "{name} has {} scenarios, prob has {s}",
                    mat.len()
                )));
            }
            for (w, row) in mat.iter().enumerate() {
                if row.len() != horizon {
                    return Err(ModelError::DimensionMismatch(format!(
                        "{name}[{w}] has length {}, horizon is {horizon}",
                        row.len()
                    )));
                }
            }
        }
        let total: f64 = self.prob.iter().sum();
        if (total - 1.0).abs() > 1e-9 || self.prob.iter().any(|p| *p < 0.0) {
            return Err(ModelError::Invalid {
                what: "ScenarioSet",
                detail: format!("probabilities sum to {total}"),
            });
        }
        if self.wind.iter().flatten().any(|g| *g < 0.0) {
            return Err(ModelError::Invalid {
                what: "ScenarioSet",
                detail: "negative wind realization".into(),
            });
        }
        if self.up_price.iter().flatten().chain(self.op_price.iter().flatten()).any(|p| *p < 0.0) {
            return Err(ModelError::Invalid {
                what: "ScenarioSet",
                detail: "negative penalty price".into(),
            });
        }
        Ok(())
    }
}

/// First-stage decision: committed day-ahead energy per hour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BidVector {
    pub p_da: Vec<f64>,
}

impl BidVector {
    pub fn zeros(horizon: usize) -> Self {
        Self { p_da: vec![0.0; horizon] }
    }

    pub fn validate(&self, horizon: usize) -> Result<(), ModelError> {
        if self.p_da.len() != horizon {
            return Err(ModelError::DimensionMismatch(format!(
                "bid has length {}, horizon is {horizon}",
                self.p_da.len()
            )));
        }
        if self.p_da.iter().any(|b| *b < 0.0 || !b.is_finite()) {
            return Err(ModelError::Invalid {
                what: "BidVector",
                detail: "bids must be finite and nonnegative".into(),
            });
        }
        Ok(())
    }
}

/// Recourse values per scenario and hour, scenario-major like `ScenarioSet`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SecondStageAssignment {
    pub p_rt: Vec<Vec<f64>>,
    pub p_up: Vec<Vec<f64>>,
    pub p_op: Vec<Vec<f64>>,
    pub p_ch: Vec<Vec<f64>>,
    pub p_dis: Vec<Vec<f64>>,
    pub energy: Vec<Vec<f64>>,
}

impl SecondStageAssignment {
    fn zeros(horizon: usize, scenarios: usize) -> Self {
        let mat = || vec![vec![0.0; horizon]; scenarios];
        Self { p_rt: mat(), p_up: mat(), p_op: mat(), p_ch: mat(), p_dis: mat(), energy: mat() }
    }
}

/// Result of an LP solve with enough diagnostics to audit it.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub status: SimplexStatus,
    /// Finite iff `status == Optimal`; NaN if infeasible, +inf if unbounded.
    pub objective: f64,
    pub first_stage: BidVector,
    pub recourse: SecondStageAssignment,
    pub iterations: usize,
    pub max_constraint_violation: f64,
}

/// Whether a discharge of P^dis decreases stored energy by η^dis·P^dis or by
/// P^dis/η^dis (the physical convention).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DischargeConvention {
    Multiply,
    Divide,
}

/// Whether under-production is capped by the day-ahead commitment. Without the
/// cap the program is unbounded whenever some λ^RT exceeds λ^up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UpCap {
    Bid,
    Unlimited,
}

#[derive(Debug, Clone)]
pub struct ModelConfig {
    pub discharge_convention: DischargeConvention,
    pub up_cap: UpCap,
    pub solver: SimplexOptions,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            discharge_convention: DischargeConvention::Multiply,
            up_cap: UpCap::Bid,
            solver: SimplexOptions::default(),
        }
    }
}

impl ModelConfig {
    fn dis_coeff(&self, battery: &BatteryContext) -> f64 {
        match self.discharge_convention {
            DischargeConvention::Multiply => battery.eta_dis,
            DischargeConvention::Divide => 1.0 / battery.eta_dis,
        }
    }
}

fn check_dims(day: &MarketDay, scenarios: &ScenarioSet) -> Result<(usize, usize), ModelError> {
    let horizon = day.horizon();
    if horizon == 0 {
        return Err(ModelError::DimensionMismatch("empty horizon".into()));
    }
    if day.rt_price_forecast.len() != horizon || day.wind_forecast.len() != horizon {
        return Err(ModelError::DimensionMismatch("day vectors disagree with horizon".into()));
    }
    let s = scenarios.n_scenarios();
    if s == 0 {
        return Err(ModelError::DimensionMismatch("no scenarios".into()));
    }
    for (name, mat) in [
        ("wind", &scenarios.wind),
        ("rt_price", &scenarios.rt_price),
        ("up_price", &scenarios.up_price),
        ("op_price", &scenarios.op_price),
    ] {
        if mat.len() != s || mat.iter().any(|row| row.len() != horizon) {
            return Err(ModelError::DimensionMismatch(format!(
                "scenario matrix {name} does not conform to T={horizon}, S={s}"
            )));
        }
    }
    Ok((horizon, s))
}

/// Builds the deterministic equivalent of the stochastic program: first-stage
/// bid columns shared across scenarios plus six recourse columns per (t, ω).
pub fn build_extensive_form(
    day: &MarketDay,
    battery: &BatteryContext,
    scenarios: &ScenarioSet,
    config: &ModelConfig,
) -> Result<LpStandardForm, ModelError> {
    let (horizon, n_scen) = check_dims(day, scenarios)?;
    let cap = config.up_cap == UpCap::Bid;
    let dis = config.dis_coeff(battery);

    let recourse_cols = 6 * horizon;
    let n_cols = horizon + recourse_cols * n_scen;
    let da = |t: usize| t;
    let base = |w: usize| horizon + w * recourse_cols;
    let rt = |w: usize, t: usize| base(w) + 6 * t;
    let up = |w: usize, t: usize| base(w) + 6 * t + 1;
    let op = |w: usize, t: usize| base(w) + 6 * t + 2;
    let ch = |w: usize, t: usize| base(w) + 6 * t + 3;
    let dis_c = |w: usize, t: usize| base(w) + 6 * t + 4;
    let en = |w: usize, t: usize| base(w) + 6 * t + 5;

    let mut objective = vec![0.0; n_cols];
    let mut lower = vec![0.0; n_cols];
    let mut upper = vec![f64::INFINITY; n_cols];
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_cols];
    let mut col_labels = vec![ColLabel::Aux(String::new()); n_cols];
    for t in 0..horizon {
        objective[da(t)] = day.da_price[t];
        col_labels[da(t)] = ColLabel::DayAheadBid { t };
    }
    for w in 0..n_scen {
        let p = scenarios.prob[w];
        for t in 0..horizon {
            objective[rt(w, t)] = p * scenarios.rt_price[w][t];
            objective[up(w, t)] = -p * scenarios.up_price[w][t];
            objective[op(w, t)] = -p * scenarios.op_price[w][t];
            upper[ch(w, t)] = battery.p_ch_max;
            upper[dis_c(w, t)] = battery.p_dis_max;
            lower[en(w, t)] = battery.e_min;
            upper[en(w, t)] = battery.e_max;
            col_labels[rt(w, t)] = ColLabel::RtSale { t, scenario: w };
            col_labels[up(w, t)] = ColLabel::UnderProduction { t, scenario: w };
            col_labels[op(w, t)] = ColLabel::OverProduction { t, scenario: w };
            col_labels[ch(w, t)] = ColLabel::Charge { t, scenario: w };
            col_labels[dis_c(w, t)] = ColLabel::Discharge { t, scenario: w };
            col_labels[en(w, t)] = ColLabel::Energy { t, scenario: w };
        }
    }

    let mut rows = Vec::new();
    let mut hint = Vec::new();
    for w in 0..n_scen {
        for t in 0..horizon {
            let row = rows.len();
            cols[da(t)].push((row, 1.0));
            cols[rt(w, t)].push((row, 1.0));
            cols[op(w, t)].push((row, 1.0));
            cols[up(w, t)].push((row, -1.0));
            cols[ch(w, t)].push((row, 1.0));
            cols[dis_c(w, t)].push((row, -1.0));
            rows.push(RowSpec {
                label: RowLabel::Balance { t, scenario: w },
                sense: RowSense::Eq,
                rhs: scenarios.wind[w][t],
            });
            hint.push(StartBasis::Column(rt(w, t)));
        }
        for t in 0..horizon {
            let row = rows.len();
            cols[en(w, t)].push((row, 1.0));
            if t > 0 {
                cols[en(w, t - 1)].push((row, -1.0));
            }
            cols[ch(w, t)].push((row, -battery.eta_ch));
            cols[dis_c(w, t)].push((row, dis));
            rows.push(RowSpec {
                label: RowLabel::Dynamics { t, scenario: w },
                sense: RowSense::Eq,
                rhs: if t == 0 { battery.e_init } else { 0.0 },
            });
            hint.push(StartBasis::Column(en(w, t)));
        }
        if cap {
            for t in 0..horizon {
                let row = rows.len();
                cols[up(w, t)].push((row, 1.0));
                cols[da(t)].push((row, -1.0));
                rows.push(RowSpec {
                    label: RowLabel::UpCap { t, scenario: w },
                    sense: RowSense::Le,
                    rhs: 0.0,
                });
                hint.push(StartBasis::RowSlack);
            }
        }
        let row = rows.len();
        cols[en(w, horizon - 1)].push((row, 1.0));
        rows.push(RowSpec {
            label: RowLabel::Terminal { scenario: w },
            sense: RowSense::Ge,
            rhs: battery.e_final,
        });
        hint.push(StartBasis::RowSlack);
    }

    Ok(LpStandardForm {
        objective,
        lower,
        upper,
        cols,
        rows,
        col_labels,
        objective_offset: 0.0,
        basis_hint: Some(hint),
    })
}

/// Builds the deterministic recourse program of one scenario for a fixed bid.
/// The day-ahead revenue is NOT included (no first-stage columns here).
fn build_scenario_lp(
    day: &MarketDay,
    battery: &BatteryContext,
    scenarios: &ScenarioSet,
    w: usize,
    bid: &BidVector,
    config: &ModelConfig,
) -> LpStandardForm {
    let horizon = day.horizon();
    let dis = config.dis_coeff(battery);
    let rt = |t: usize| 6 * t;
    let up = |t: usize| 6 * t + 1;
    let op = |t: usize| 6 * t + 2;
    let ch = |t: usize| 6 * t + 3;
    let dis_c = |t: usize| 6 * t + 4;
    let en = |t: usize| 6 * t + 5;
    let n_cols = 6 * horizon;

    let mut objective = vec![0.0; n_cols];
    let mut lower = vec![0.0; n_cols];
    let mut upper = vec![f64::INFINITY; n_cols];
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_cols];
    let mut col_labels = vec![ColLabel::Aux(String::new()); n_cols];
    for t in 0..horizon {
        objective[rt(t)] = scenarios.rt_price[w][t];
        objective[up(t)] = -scenarios.up_price[w][t];
        objective[op(t)] = -scenarios.op_price[w][t];
        if config.up_cap == UpCap::Bid {
            upper[up(t)] = bid.p_da[t];
        }
        upper[ch(t)] = battery.p_ch_max;
        upper[dis_c(t)] = battery.p_dis_max;
        lower[en(t)] = battery.e_min;
        upper[en(t)] = battery.e_max;
        col_labels[rt(t)] = ColLabel::RtSale { t, scenario: w };
        col_labels[up(t)] = ColLabel::UnderProduction { t, scenario: w };
        col_labels[op(t)] = ColLabel::OverProduction { t, scenario: w };
        col_labels[ch(t)] = ColLabel::Charge { t, scenario: w };
        col_labels[dis_c(t)] = ColLabel::Discharge { t, scenario: w };
        col_labels[en(t)] = ColLabel::Energy { t, scenario: w };
    }

    let mut rows = Vec::new();
    let mut hint = Vec::new();
    for t in 0..horizon {
        let row = rows.len();
        cols[rt(t)].push((row, 1.0));
        cols[op(t)].push((row, 1.0));
        cols[up(t)].push((row, -1.0));
        cols[ch(t)].push((row, 1.0));
        cols[dis_c(t)].push((row, -1.0));
        let resid = scenarios.wind[w][t] - bid.p_da[t];
        rows.push(RowSpec {
            label: RowLabel::Balance { t, scenario: w },
            sense: RowSense::Eq,
            rhs: resid,
        });
        hint.push(if resid >= 0.0 { StartBasis::Column(rt(t)) } else { StartBasis::Column(up(t)) });
    }
    for t in 0..horizon {
        let row = rows.len();
        cols[en(t)].push((row, 1.0));
        if t > 0 {
            cols[en(t - 1)].push((row, -1.0));
        }
        cols[ch(t)].push((row, -battery.eta_ch));
        cols[dis_c(t)].push((row, dis));
        rows.push(RowSpec {
            label: RowLabel::Dynamics { t, scenario: w },
            sense: RowSense::Eq,
            rhs: if t == 0 { battery.e_init } else { 0.0 },
        });
        hint.push(StartBasis::Column(en(t)));
    }
    let row = rows.len();
    cols[en(horizon - 1)].push((row, 1.0));
    rows.push(RowSpec {
        label: RowLabel::Terminal { scenario: w },
        sense: RowSense::Ge,
        rhs: battery.e_final,
    });
    hint.push(StartBasis::RowSlack);

    LpStandardForm {
        objective,
        lower,
        upper,
        cols,
        rows,
        col_labels,
        objective_offset: 0.0,
        basis_hint: Some(hint),
    }
}

/// Solves any labeled LP and maps the solution back to market quantities.
pub fn solve_lp(lp: &LpStandardForm, opts: &SimplexOptions) -> Result<SolveReport, ModelError> {
    let sol =
        simplex::solve(lp, opts).map_err(|source| ModelError::Solver { scenario: None, source })?;

    let mut horizon = 0usize;
    let mut n_scen = 0usize;
    for label in &lp.col_labels {
        match label {
            ColLabel::DayAheadBid { t } => horizon = horizon.max(t + 1),
            ColLabel::RtSale { t, scenario }
            | ColLabel::UnderProduction { t, scenario }
            | ColLabel::OverProduction { t, scenario }
            | ColLabel::Charge { t, scenario }
            | ColLabel::Discharge { t, scenario }
            | ColLabel::Energy { t, scenario } => {
                horizon = horizon.max(t + 1);
                n_scen = n_scen.max(scenario + 1);
            }
            ColLabel::Aux(_) => {}
        }
    }
    let mut first_stage = BidVector::zeros(horizon);
    let mut recourse = SecondStageAssignment::zeros(horizon, n_scen);
    if sol.status == SimplexStatus::Optimal {
        for (label, &v) in lp.col_labels.iter().zip(&sol.x) {
            match label {
                ColLabel::DayAheadBid { t } => first_stage.p_da[*t] = v,
                ColLabel::RtSale { t, scenario } => recourse.p_rt[*scenario][*t] = v,
                ColLabel::UnderProduction { t, scenario } => recourse.p_up[*scenario][*t] = v,
                ColLabel::OverProduction { t, scenario } => recourse.p_op[*scenario][*t] = v,
                ColLabel::Charge { t, scenario } => recourse.p_ch[*scenario][*t] = v,
                ColLabel::Discharge { t, scenario } => recourse.p_dis[*scenario][*t] = v,
                ColLabel::Energy { t, scenario } => recourse.energy[*scenario][*t] = v,
                ColLabel::Aux(_) => {}
            }
        }
    }
    Ok(SolveReport {
        status: sol.status,
        objective: sol.objective,
        first_stage,
        recourse,
        iterations: sol.iterations,
        max_constraint_violation: sol.max_violation,
    })
}

/// Evaluates a fixed bid: each scenario is an independent deterministic LP and
/// the results combine as the probability-weighted sum plus day-ahead revenue.
pub fn solve_second_stage(
    day: &MarketDay,
    battery: &BatteryContext,
    scenarios: &ScenarioSet,
    bid: &BidVector,
    config: &ModelConfig,
) -> Result<SolveReport, ModelError> {
    let (horizon, n_scen) = check_dims(day, scenarios)?;
    bid.validate(horizon)?;

    let results: Vec<Result<SolveReport, ModelError>> = (0..n_scen)
        .into_par_iter()
        .map(|w| {
            let lp = build_scenario_lp(day, battery, scenarios, w, bid, config);
            solve_lp(&lp, &config.solver).map_err(|e| match e {
                ModelError::Solver { source, .. } => {
                    ModelError::Solver { scenario: Some(w), source }
                }
                other => other,
            })
        })
        .collect();

    let da_revenue: f64 = day.da_price.iter().zip(&bid.p_da).map(|(price, b)| price * b).sum();
    let mut objective = da_revenue;
    let mut recourse = SecondStageAssignment::zeros(horizon, n_scen);
    let mut iterations = 0;
    let mut violation = 0.0f64;
    let mut feasible = true;
    for (w, res) in results.into_iter().enumerate() {
        let rep = res?;
        match rep.status {
            SimplexStatus::Optimal => {
                objective += scenarios.prob[w] * rep.objective;
                recourse.p_rt[w] = rep.recourse.p_rt[w].clone();
                recourse.p_up[w] = rep.recourse.p_up[w].clone();
                recourse.p_op[w] = rep.recourse.p_op[w].clone();
                recourse.p_ch[w] = rep.recourse.p_ch[w].clone();
                recourse.p_dis[w] = rep.recourse.p_dis[w].clone();
                recourse.energy[w] = rep.recourse.energy[w].clone();
            }
            SimplexStatus::Infeasible => feasible = false,
            SimplexStatus::Unbounded => {
                return Ok(SolveReport {
                    status: SimplexStatus::Unbounded,
                    objective: f64::INFINITY,
                    first_stage: bid.clone(),
                    recourse,
                    iterations,
                    max_constraint_violation: violation,
                });
            }
        }
        iterations += rep.iterations;
        violation = violation.max(rep.max_constraint_violation);
    }
    if !feasible {
        return Ok(SolveReport {
            status: SimplexStatus::Infeasible,
            objective: f64::NAN,
            first_stage: bid.clone(),
            recourse,
            iterations,
            max_constraint_violation: violation,
        });
    }
    Ok(SolveReport {
        status: SimplexStatus::Optimal,
        objective,
        first_stage: bid.clone(),
        recourse,
        iterations,
        max_constraint_violation: violation,
    })
}

/// Solves the unrestricted two-stage program (bid and recourse jointly).
pub fn solve_full_sp(
    day: &MarketDay,
    battery: &BatteryContext,
    scenarios: &ScenarioSet,
    config: &ModelConfig,
) -> Result<SolveReport, ModelError> {
    let lp = build_extensive_form(day, battery, scenarios, config)?;
    solve_lp(&lp, &config.solver)
}
