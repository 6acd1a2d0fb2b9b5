//! Independent pricing oracles: characteristic-function formulas and Monte
//! Carlo simulation.

pub mod monte_carlo;
pub mod semi_analytic;

pub use monte_carlo::{mc_price, mc_prices, McConfig, McEstimate};
pub use semi_analytic::{char_fn_parts, heston_price, heston_price_with, probabilities, AnalyticKind, CharFnParts, FourierSettings};
