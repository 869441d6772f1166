use thiserror::Error;

use crate::orbital::SatelliteId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("coincident points: satellite and gateway positions are identical")]
    CoincidentPoints,

    #[error("self link: {0} cannot link to itself")]
    SelfLink(SatelliteId),

    #[error("infeasible link budget: {0}")]
    Infeasible(String),

    #[error("degenerate corridor: gateways are antipodal or coincident")]
    DegenerateCorridor,

    #[error("endpoint outside graph: {0}")]
    EndpointOutsideGraph(SatelliteId),

    #[error("graph too large for exhaustive search: {nodes} nodes (limit {limit})")]
    GraphTooLarge { nodes: usize, limit: usize },

    #[error("dead end: no feasible action")]
    DeadEnd,

    #[error("no serving satellite above the elevation mask for gateway {0}")]
    NoServingSatellite(String),

    #[error("training diverged at episode {episode}: loss = {loss}")]
    TrainingDiverged { episode: usize, loss: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("policy file: {0}")]
    PolicyFormat(String),
}
