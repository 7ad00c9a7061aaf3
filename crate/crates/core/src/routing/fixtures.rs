//! Reference routing solutions, stored exactly as printed at 6 significant
//! digits (entries quoted as O(10⁻ⁿ) replaced by 0). They anchor every
//! sign and ordering convention of the routing pipeline: applied to their
//! clusters they must decouple the channel pair from all other modes to
//! within the printed precision, for any common input squeezing.

use crate::error::Result;
use crate::gaussian::UnitaryMatrix;
use crate::graph::Graph;
use crate::routing::{Partition, RoutingProblem};

use nalgebra::DMatrix;

/// Unitarity/residual tolerance implied by 6-digit printed matrices.
pub const PRINTED_PRECISION_TOL: f64 = 1e-3;

const GRID6_UA_RE: [[f64; 3]; 3] = [
    [-0.564055, 0.0, 0.564055],
    [0.250315, 0.0, 0.250315],
    [0.0, -0.277133, 0.0],
];
const GRID6_UA_IM: [[f64; 3]; 3] = [
    [-0.426429, 0.0, 0.426429],
    [-0.661319, 0.0, -0.661319],
    [0.0, -0.960831, 0.0],
];
const GRID6_UB_RE: [[f64; 3]; 3] = [
    [-0.564055, 0.0, 0.564055],
    [-0.449914, 0.0, -0.449914],
    [0.0, -0.993175, 0.0],
];
const GRID6_UB_IM: [[f64; 3]; 3] = [
    [0.426429, 0.0, -0.426429],
    [-0.545507, 0.0, -0.545507],
    [0.0, -0.116635, 0.0],
];

const FC6_UA_RE: [[f64; 3]; 3] = [
    [0.56149, -0.397134, -0.164356],
    [-0.56149, 0.397134, 0.164356],
    [0.408248, 0.408248, 0.408248],
];
const FC6_UA_IM: [[f64; 3]; 3] = [
    [-0.134394, -0.419068, 0.553462],
    [-0.134394, -0.419068, 0.553462],
    [-0.408248, -0.408248, -0.408248],
];
const FC6_UB_RE: [[f64; 3]; 3] = [
    [0.447715, 0.293987, 0.104392],
    [0.436176, 0.614297, -0.472751],
    [0.124502, 0.361237, 0.860632],
];
const FC6_UB_IM: [[f64; 3]; 3] = [
    [-0.706639, 0.450256, -0.0124474],
    [0.201155, -0.408378, 0.0407497],
    [0.232375, -0.190305, 0.152002],
];

fn to_unitary(re: &[[f64; 3]; 3], im: &[[f64; 3]; 3]) -> UnitaryMatrix {
    let re = DMatrix::from_fn(3, 3, |i, j| re[i][j]);
    let im = DMatrix::from_fn(3, 3, |i, j| im[i][j]);
    UnitaryMatrix::with_tolerance(re, im, PRINTED_PRECISION_TOL)
        .expect("printed matrices are unitary at their precision")
}

/// Reference local unitaries turning the 2×3 grid's vertically adjacent
/// corner pair (nodes 0 and 3) into an EPR channel across the two rows.
pub fn grid6_unitaries() -> (UnitaryMatrix, UnitaryMatrix) {
    (
        to_unitary(&GRID6_UA_RE, &GRID6_UA_IM),
        to_unitary(&GRID6_UB_RE, &GRID6_UB_IM),
    )
}

/// The routing instance the grid fixture solves: 2×3 grid, Alice holds the
/// top row {0, 1, 2}, Bob the bottom row {3, 4, 5}, channel pair (0, 3),
/// equal input and channel squeezing of `squeezing_db` dB.
pub fn grid6_problem(squeezing_db: f64) -> Result<RoutingProblem> {
    let g = Graph::grid(2, 3)?;
    let partition = Partition::new(vec![0, 1, 2], vec![3, 4, 5])?;
    RoutingProblem::from_graph(&g, &partition, (0, 3), squeezing_db)
}

/// Reference local unitaries producing a same-team EPR channel between
/// nodes 0 and 1 of the fully connected 6-node cluster.
pub fn fully_connected6_unitaries() -> (UnitaryMatrix, UnitaryMatrix) {
    (
        to_unitary(&FC6_UA_RE, &FC6_UA_IM),
        to_unitary(&FC6_UB_RE, &FC6_UB_IM),
    )
}

/// The routing instance the fully connected fixture solves: complete graph
/// on 6 nodes split 3/3, channel pair (0, 1) inside Alice's team.
pub fn fully_connected6_problem(squeezing_db: f64) -> Result<RoutingProblem> {
    let g = Graph::complete(6);
    let partition = Partition::new(vec![0, 1, 2], vec![3, 4, 5])?;
    RoutingProblem::from_graph(&g, &partition, (0, 1), squeezing_db)
}
