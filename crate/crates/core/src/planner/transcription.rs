//! Trapezoidal direct transcription of the minimum-time problem.
//!
//! Decision vector (scaled): `[t_f, (x, z, V, gamma, T, alpha) at each node]`
//! on normalized time `tau in [0, 1]`. Boundary values are imposed as fixed
//! variable bounds.

use nalgebra::{DMatrix, DVector, SVector};
use num_dual::{hessian, jacobian, Dual2SVec64, DualNum, DualSVec64};
use std::f64::consts::{FRAC_PI_4, PI};

use super::model::{planar_rhs, planar_trim, SPEED_EPS};
use super::solver::{Evaluation, NonlinearProgram};
use super::{MissionSpec, Obstacle};
use crate::vehicle::VehicleParams;
use crate::{Error, Result};

pub const VARS_PER_NODE: usize = 6;
pub const MIN_NODES: usize = 10;
pub const MIN_FLIGHT_TIME: f64 = 1e-9;
pub const MAX_FLIGHT_TIME: f64 = 1e3;
pub const MIN_INTERIOR_SPEED: f64 = 0.1;
pub const MAX_SPEED: f64 = 100.0;
/// Lower thrust bound; keeps the square-root wake model differentiable.
pub const THRUST_FLOOR: f64 = 1e-2;
pub const ALPHA_LIMIT: f64 = FRAC_PI_4;

const POS_SCALE: f64 = 10.0;
const SPEED_SCALE: f64 = 10.0;
const TIME_SCALE: f64 = 10.0;
const STATE_SCALE: [f64; 4] = [POS_SCALE, POS_SCALE, SPEED_SCALE, 1.0];

/// Collocation NLP for one mission.
#[derive(Debug, Clone)]
pub struct Transcription {
    nodes: usize,
    params: VehicleParams,
    obstacles: Vec<Obstacle>,
    lower: DVector<f64>,
    upper: DVector<f64>,
    smoothing: f64,
    time_weight: f64,
}

/// Physical node values `[x, z, V, gamma, T, alpha]`.
pub type NodeValues = [f64; VARS_PER_NODE];

fn scaled_rhs<D: DualNum<Primitive = f64> + Copy>(v: [D; 4], params: &VehicleParams, thrust_scale: f64) -> [D; 4] {
    let f = planar_rhs(v[0] * SPEED_SCALE, v[1], v[2] * thrust_scale, v[3], params, &params.aero_fit);
    [f[0] / POS_SCALE, f[1] / POS_SCALE, f[2] / SPEED_SCALE, f[3]]
}

impl Transcription {
    pub fn new(mission: &MissionSpec, nodes: usize, params: &VehicleParams, smoothing: f64) -> Result<Self> {
        if nodes < MIN_NODES {
            return Err(Error::InvalidParameter(format!("need at least {MIN_NODES} nodes, got {nodes}")));
        }
        if !(smoothing >= 0.0 && smoothing.is_finite()) {
            return Err(Error::InvalidParameter("smoothing weight must be >= 0".into()));
        }
        params.validate()?;
        mission.validate()?;
        let max_thrust = mission.max_thrust(params.max_thrust);
        if max_thrust <= THRUST_FLOOR {
            return Err(Error::InfeasibleMission("thrust ceiling below the planner floor".into()));
        }
        let mut tr = Transcription {
            nodes,
            params: params.clone(),
            obstacles: mission.obstacles.clone(),
            lower: DVector::zeros(1 + VARS_PER_NODE * nodes),
            upper: DVector::zeros(1 + VARS_PER_NODE * nodes),
            smoothing,
            time_weight: 1.0,
        };
        tr.lower[0] = MIN_FLIGHT_TIME / TIME_SCALE;
        tr.upper[0] = MAX_FLIGHT_TIME / TIME_SCALE;
        let b = &mission.bounds;
        for k in 0..nodes {
            let lo = [b.x[0], b.z[0], MIN_INTERIOR_SPEED, -PI, THRUST_FLOOR, -ALPHA_LIMIT];
            let hi = [b.x[1], b.z[1], MAX_SPEED, PI, max_thrust, ALPHA_LIMIT];
            for j in 0..VARS_PER_NODE {
                let (i, l, u) = (tr.index(k, j), tr.scale_var(j, lo[j]), tr.scale_var(j, hi[j]));
                tr.lower[i] = l;
                tr.upper[i] = u;
            }
        }
        let s0 = mission.initial;
        let first = [Some(s0.x), Some(s0.z), Some(s0.speed), Some(s0.gamma)];
        let mut last = mission.terminal.as_array();
        if mission.altitude_hold {
            last[1] = Some(s0.z);
        }
        for (k, fixed) in [(0, first), (nodes - 1, last)] {
            // Boundary speeds only need to stay off the singularity.
            let (i, l) = (tr.index(k, 2), tr.scale_var(2, SPEED_EPS * 10.0));
            tr.lower[i] = l;
            for (j, v) in fixed.iter().enumerate() {
                if let Some(v) = v {
                    let sv = tr.scale_var(j, *v);
                    let i = tr.index(k, j);
                    if sv < tr.lower[i] - 1e-12 || sv > tr.upper[i] + 1e-12 {
                        return Err(Error::InfeasibleMission(format!(
                            "boundary value {v} of state {j} at node {k} violates its bounds"
                        )));
                    }
                    tr.lower[i] = sv;
                    tr.upper[i] = sv;
                }
            }
        }
        let mut trims = Vec::new();
        if mission.trim_initial {
            trims.push((0, s0.speed, s0.gamma));
        }
        if let (true, Some(v), Some(g)) = (mission.trim_terminal, mission.terminal.speed, mission.terminal.gamma) {
            trims.push((nodes - 1, v, g));
        }
        for (k, v, g) in trims {
            let u = planar_trim(v, g, params, &params.aero_fit)?;
            for (j, val) in [(4, u.thrust), (5, u.pitch - g)] {
                let (i, sv) = (tr.index(k, j), tr.scale_var(j, val));
                if sv < tr.lower[i] || sv > tr.upper[i] {
                    return Err(Error::InfeasibleMission(format!(
                        "trim input {val} of variable {j} at node {k} violates its bounds"
                    )));
                }
                tr.lower[i] = sv;
                tr.upper[i] = sv;
            }
        }
        Ok(tr)
    }

    /// Scales the flight-time term of the objective; zero gives a pure feasibility problem.
    pub fn with_time_weight(mut self, weight: f64) -> Self {
        self.time_weight = weight;
        self
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn num_variables(&self) -> usize {
        1 + VARS_PER_NODE * self.nodes
    }

    pub fn num_defects(&self) -> usize {
        4 * (self.nodes - 1)
    }

    pub fn num_obstacle_constraints(&self) -> usize {
        self.obstacles.len() * self.nodes
    }

    pub fn index(&self, node: usize, var: usize) -> usize {
        1 + VARS_PER_NODE * node + var
    }

    fn thrust_scale(&self) -> f64 {
        self.params.weight()
    }

    fn var_scale(&self, var: usize) -> f64 {
        match var {
            0 | 1 => POS_SCALE,
            2 => SPEED_SCALE,
            4 => self.thrust_scale(),
            _ => 1.0,
        }
    }

    fn scale_var(&self, var: usize, v: f64) -> f64 {
        v / self.var_scale(var)
    }

    pub fn final_time(&self, y: &DVector<f64>) -> f64 {
        y[0] * TIME_SCALE
    }

    pub fn node_values(&self, y: &DVector<f64>, k: usize) -> NodeValues {
        let mut out = [0.0; VARS_PER_NODE];
        for (j, o) in out.iter_mut().enumerate() {
            *o = y[self.index(k, j)] * self.var_scale(j);
        }
        out
    }

    /// Packs physical values into a scaled decision vector.
    pub fn pack(&self, final_time: f64, nodes: &[NodeValues]) -> DVector<f64> {
        let mut y = DVector::zeros(self.num_variables());
        y[0] = final_time / TIME_SCALE;
        for (k, n) in nodes.iter().enumerate() {
            for j in 0..VARS_PER_NODE {
                y[self.index(k, j)] = self.scale_var(j, n[j]);
            }
        }
        y
    }

    fn local(&self, y: &DVector<f64>, k: usize) -> [f64; 4] {
        [y[self.index(k, 2)], y[self.index(k, 3)], y[self.index(k, 4)], y[self.index(k, 5)]]
    }

    fn node_rhs(&self, y: &DVector<f64>, k: usize) -> [f64; 4] {
        scaled_rhs(self.local(y, k), &self.params, self.thrust_scale())
    }

    fn node_jacobian(&self, y: &DVector<f64>, k: usize) -> ([f64; 4], SVector<f64, 4>, nalgebra::SMatrix<f64, 4, 4>) {
        let ts = self.thrust_scale();
        let v = SVector::from(self.local(y, k));
        let (f, j) = jacobian(
            |v: SVector<DualSVec64<4>, 4>| SVector::from(scaled_rhs([v[0], v[1], v[2], v[3]], &self.params, ts)),
            &v,
        );
        ([f[0], f[1], f[2], f[3]], f, j)
    }

    fn half_step(&self) -> f64 {
        TIME_SCALE * 0.5 / (self.nodes - 1) as f64
    }

    /// Scaled defects; row `4k + i` is state `i` across interval `k`.
    pub fn defects(&self, y: &DVector<f64>) -> DVector<f64> {
        let h = self.half_step() * y[0];
        let rhs: Vec<[f64; 4]> = (0..self.nodes).map(|k| self.node_rhs(y, k)).collect();
        DVector::from_fn(self.num_defects(), |r, _| {
            let (k, i) = (r / 4, r % 4);
            y[self.index(k + 1, i)] - y[self.index(k, i)] - h * (rhs[k][i] + rhs[k + 1][i])
        })
    }

    /// Defects in physical units.
    pub fn physical_defects(&self, y: &DVector<f64>) -> DVector<f64> {
        let mut d = self.defects(y);
        for (r, v) in d.iter_mut().enumerate() {
            *v *= STATE_SCALE[r % 4];
        }
        d
    }

    fn obstacle_values(&self, y: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.num_obstacle_constraints(), |r, _| {
            let (o, k) = (r / self.nodes, r % self.nodes);
            let ob = &self.obstacles[o];
            let rad2 = ob.inflated_radius().powi(2);
            let x = y[self.index(k, 0)] * POS_SCALE;
            let z = y[self.index(k, 1)] * POS_SCALE;
            ((x - ob.x).powi(2) + (z - ob.z).powi(2) - rad2) / rad2
        })
    }

    fn objective(&self, y: &DVector<f64>) -> f64 {
        let mut f = self.time_weight * y[0];
        if self.smoothing > 0.0 {
            for k in 0..self.nodes - 1 {
                for j in [4, 5] {
                    f += self.smoothing * (y[self.index(k + 1, j)] - y[self.index(k, j)]).powi(2);
                }
            }
        }
        f
    }
}

impl NonlinearProgram for Transcription {
    fn lower(&self) -> &DVector<f64> {
        &self.lower
    }

    fn upper(&self) -> &DVector<f64> {
        &self.upper
    }

    fn values(&self, y: &DVector<f64>) -> (f64, DVector<f64>, DVector<f64>) {
        (self.objective(y), self.defects(y), self.obstacle_values(y))
    }

    fn evaluate(&self, y: &DVector<f64>) -> Evaluation {
        let n = self.num_variables();
        let h = self.half_step();
        let tf = y[0];
        let mut gradient = DVector::zeros(n);
        gradient[0] = self.time_weight;
        if self.smoothing > 0.0 {
            for k in 0..self.nodes - 1 {
                for j in [4, 5] {
                    let (a, b) = (self.index(k, j), self.index(k + 1, j));
                    let d = 2.0 * self.smoothing * (y[b] - y[a]);
                    gradient[b] += d;
                    gradient[a] -= d;
                }
            }
        }

        let per_node: Vec<_> = (0..self.nodes).map(|k| self.node_jacobian(y, k)).collect();
        let m = self.num_defects();
        let mut eq = DVector::zeros(m);
        let mut eq_jacobian = DMatrix::zeros(m, n);
        for k in 0..self.nodes - 1 {
            let (fa, _, ja) = &per_node[k];
            let (fb, _, jb) = &per_node[k + 1];
            for i in 0..4 {
                let r = 4 * k + i;
                eq[r] = y[self.index(k + 1, i)] - y[self.index(k, i)] - h * tf * (fa[i] + fb[i]);
                eq_jacobian[(r, self.index(k + 1, i))] += 1.0;
                eq_jacobian[(r, self.index(k, i))] -= 1.0;
                eq_jacobian[(r, 0)] = -h * (fa[i] + fb[i]);
                for j in 0..4 {
                    eq_jacobian[(r, self.index(k, 2 + j))] -= h * tf * ja[(i, j)];
                    eq_jacobian[(r, self.index(k + 1, 2 + j))] -= h * tf * jb[(i, j)];
                }
            }
        }

        let ineq = self.obstacle_values(y);
        let mut ineq_jacobian = DMatrix::zeros(ineq.len(), n);
        for (o, ob) in self.obstacles.iter().enumerate() {
            let rad2 = ob.inflated_radius().powi(2);
            for k in 0..self.nodes {
                let r = o * self.nodes + k;
                let x = y[self.index(k, 0)] * POS_SCALE;
                let z = y[self.index(k, 1)] * POS_SCALE;
                ineq_jacobian[(r, self.index(k, 0))] = 2.0 * POS_SCALE * (x - ob.x) / rad2;
                ineq_jacobian[(r, self.index(k, 1))] = 2.0 * POS_SCALE * (z - ob.z) / rad2;
            }
        }

        Evaluation {
            objective: self.objective(y),
            gradient,
            eq,
            eq_jacobian,
            ineq,
            ineq_jacobian,
        }
    }

    fn add_hessian(&self, y: &DVector<f64>, w_eq: &DVector<f64>, w_ineq: &DVector<f64>, hess: &mut DMatrix<f64>) {
        if self.smoothing > 0.0 {
            for k in 0..self.nodes - 1 {
                for j in [4, 5] {
                    let (a, b) = (self.index(k, j), self.index(k + 1, j));
                    let s = 2.0 * self.smoothing;
                    hess[(a, a)] += s;
                    hess[(b, b)] += s;
                    hess[(a, b)] -= s;
                    hess[(b, a)] -= s;
                }
            }
        }

        let h = self.half_step();
        let tf = y[0];
        let ts = self.thrust_scale();
        for k in 0..self.nodes {
            let mut w = [0.0; 4];
            for i in 0..4 {
                if k >= 1 {
                    w[i] += w_eq[4 * (k - 1) + i];
                }
                if k + 1 < self.nodes {
                    w[i] += w_eq[4 * k + i];
                }
            }
            if w.iter().all(|v| *v == 0.0) {
                continue;
            }
            let v = SVector::from(self.local(y, k));
            let (_, grad, hk) = hessian(
                |v: SVector<Dual2SVec64<4>, 4>| {
                    let f = scaled_rhs([v[0], v[1], v[2], v[3]], &self.params, ts);
                    f[0] * w[0] + f[1] * w[1] + f[2] * w[2] + f[3] * w[3]
                },
                &v,
            );
            for a in 0..4 {
                let ia = self.index(k, 2 + a);
                hess[(ia, 0)] -= h * grad[a];
                hess[(0, ia)] -= h * grad[a];
                for b in 0..4 {
                    hess[(ia, self.index(k, 2 + b))] -= h * tf * hk[(a, b)];
                }
            }
        }

        for (o, ob) in self.obstacles.iter().enumerate() {
            let c = 2.0 * POS_SCALE * POS_SCALE / ob.inflated_radius().powi(2);
            for k in 0..self.nodes {
                let w = w_ineq[o * self.nodes + k];
                if w != 0.0 {
                    let (ix, iz) = (self.index(k, 0), self.index(k, 1));
                    hess[(ix, ix)] += w * c;
                    hess[(iz, iz)] += w * c;
                }
            }
        }
    }
}
