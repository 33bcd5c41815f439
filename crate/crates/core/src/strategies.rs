//! Rule-based bidding baselines.

use crate::market::{BidVector, MarketDay};

/// Commit the full forecast wherever the DA price strictly beats the forecast
/// RT price, nothing otherwise (ties commit nothing).
pub fn benchmark_bid(day: &MarketDay) -> BidVector {
    let p_da = day
        .da_price
        .iter()
        .zip(&day.rt_price_forecast)
        .zip(&day.wind_forecast)
        .map(|((da, rt), g)| if da > rt { *g } else { 0.0 })
        .collect();
    BidVector { p_da }
}

pub fn zero_bid(day: &MarketDay) -> BidVector {
    BidVector::zeros(day.horizon())
}

/// Commit the entire wind forecast.
pub fn full_bid(day: &MarketDay) -> BidVector {
    BidVector { p_da: day.wind_forecast.clone() }
}
