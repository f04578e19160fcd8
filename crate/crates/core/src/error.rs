use thiserror::Error;

use crate::estimator::EstimationError;
use crate::indicators::IndicatorError;
use crate::panel::PanelError;
use crate::simulator::SimulationError;
use crate::suite::SuiteError;
use crate::weights::WeightsError;

/// Any failure raised by the engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Panel(#[from] PanelError),
    #[error(transparent)]
    Indicator(#[from] IndicatorError),
    #[error(transparent)]
    Weights(#[from] WeightsError),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error(transparent)]
    Suite(#[from] SuiteError),
    #[error(transparent)]
    Simulation(#[from] SimulationError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
