//! Core library for running LLMCoin prediction-market experiments.
//!
//! The pipeline: [`questionbank`] generates math questions with exact,
//! algorithmically verified answers; [`protocol`] runs forecasting rounds in
//! which a predictor bets on whether baseline answerers got each question
//! right; [`market`] keeps the coin ledger honest (stake bounds, even-odds
//! settlement, bankruptcy); [`adapters`] supplies predictor/baseline backends
//! (HTTP chat endpoints, replay fixtures, synthetic calibrated bettors) and
//! the strict record parser; [`analysis`] turns run logs into accuracy,
//! learning, calibration, and bankroll tables with the accompanying
//! hypothesis tests.
//!
//! Coins are exact unsigned integers and ROI is an exact rational; the
//! floating-point statistics kernels in [`stats`] are generic over the
//! scalar type (see [`Scalar`]).

pub mod adapters;
pub mod analysis;
pub mod market;
pub mod protocol;
pub mod questionbank;
pub mod rng;
pub mod scalar;
pub mod stats;

/// Default floating-point scalar used by the concrete analysis paths.
pub type Scalar = f64;

/// Coin amounts: stakes, balances, winnings. Always whole coins.
pub type Coins = u64;

/// Exact rational used for ROI and other ratios of coin quantities.
pub type Rational = num_rational::Ratio<i128>;
