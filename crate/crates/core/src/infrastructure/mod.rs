//! Workspaces with endpoints, roadmap graphs over them, and the
//! valid-infrastructure check.

mod augment;
mod roadmap;
mod validity;

pub use roadmap::{build_grid_roadmap, Roadmap, RoadmapEdge, ENDPOINT_SNAP_FACTOR};
pub use validity::{
    check_valid_infrastructure, check_valid_roadmap, compute_r_bound, discrete_r_bound, edge_steps,
    static_shortest_path, step_distances_to, PathResult, ValidityReport,
};

use crate::geometry::{clear_of, point_clearance, Point2, PolygonRegion};
use serde::{Deserialize, Serialize};

pub type EndpointId = usize;
pub type VertexId = usize;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum InfraError {
    #[error("infrastructure needs at least two endpoints, got {0}")]
    TooFewEndpoints(usize),
    #[error("endpoints {0} and {1} coincide")]
    DuplicateEndpoint(EndpointId, EndpointId),
    #[error("endpoint {0} has clearance {1:.3} m, needs more than {2:.3} m")]
    EndpointNotStandable(EndpointId, f64, f64),
    #[error("endpoints {0:?} are not connected to the roadmap")]
    EndpointDisconnected(Vec<EndpointId>),
    #[error("cell size must be positive")]
    BadCell,
    #[error("infrastructure is not valid: endpoint pairs {0:?} cannot be connected")]
    InvalidInfrastructure(Vec<(EndpointId, EndpointId)>),
}

/// A workspace together with its endpoint set `E`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Infrastructure {
    pub workspace: PolygonRegion,
    pub endpoints: Vec<Point2>,
}

impl Infrastructure {
    pub fn new(workspace: PolygonRegion, endpoints: Vec<Point2>) -> Result<Self, InfraError> {
        if endpoints.len() < 2 {
            return Err(InfraError::TooFewEndpoints(endpoints.len()));
        }
        for i in 0..endpoints.len() {
            for j in (i + 1)..endpoints.len() {
                if endpoints[i] == endpoints[j] {
                    return Err(InfraError::DuplicateEndpoint(i, j));
                }
            }
        }
        Ok(Infrastructure { workspace, endpoints })
    }

    /// Every endpoint must hold a robot of radius `r_bar`.
    pub fn check_standable(&self, r_bar: f64) -> Result<(), InfraError> {
        for (i, &e) in self.endpoints.iter().enumerate() {
            let c = point_clearance(e, &self.workspace);
            if !clear_of(c, r_bar) {
                return Err(InfraError::EndpointNotStandable(i, c, r_bar));
            }
        }
        Ok(())
    }

    pub fn endpoint(&self, id: EndpointId) -> Point2 {
        self.endpoints[id]
    }

    /// Endpoint index whose location is within `tol` of `p`.
    pub fn endpoint_at(&self, p: Point2, tol: f64) -> Option<EndpointId> {
        self.endpoints.iter().position(|e| e.dist(p) <= tol)
    }
}
