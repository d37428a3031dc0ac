use serde::{Deserialize, Serialize};

use super::PlanarState;
use crate::{Error, Result};

/// Boundary state with optional free components.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryState {
    pub x: Option<f64>,
    pub z: Option<f64>,
    pub speed: Option<f64>,
    pub gamma: Option<f64>,
}

impl BoundaryState {
    pub fn fixed(s: PlanarState) -> Self {
        BoundaryState {
            x: Some(s.x),
            z: Some(s.z),
            speed: Some(s.speed),
            gamma: Some(s.gamma),
        }
    }

    pub fn as_array(&self) -> [Option<f64>; 4] {
        [self.x, self.z, self.speed, self.gamma]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Obstacle {
    pub x: f64,
    pub z: f64,
    pub radius: f64,
    /// Inflation added to the radius.
    #[serde(default)]
    pub margin: f64,
}

impl Obstacle {
    pub fn inflated_radius(&self) -> f64 {
        self.radius + self.margin
    }

    pub fn clearance(&self, x: f64, z: f64) -> f64 {
        ((x - self.x).powi(2) + (z - self.z).powi(2)).sqrt() - self.inflated_radius()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathBounds {
    pub x: [f64; 2],
    pub z: [f64; 2],
}

impl Default for PathBounds {
    fn default() -> Self {
        PathBounds {
            x: [-1e4, 1e4],
            z: [-1e4, 1e4],
        }
    }
}

/// Boundary conditions, obstacles and path limits of one maneuver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissionSpec {
    #[serde(default)]
    pub name: String,
    pub initial: PlanarState,
    pub terminal: BoundaryState,
    /// Starting point for free terminal components.
    #[serde(default)]
    pub terminal_guess: BoundaryState,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
    #[serde(default)]
    pub bounds: PathBounds,
    /// Terminal altitude equals the initial altitude.
    #[serde(default)]
    pub altitude_hold: bool,
    /// Optional flight-time guess, s.
    #[serde(default)]
    pub time_guess: Option<f64>,
    /// Planner thrust ceiling, N; leaves authority for feedback when below the vehicle limit.
    #[serde(default)]
    pub thrust_limit: Option<f64>,
    /// Start from steady flight: node-0 thrust and angle of attack are the trim values.
    #[serde(default)]
    pub trim_initial: bool,
    /// End in steady flight; needs a fixed terminal speed and flight-path angle.
    #[serde(default)]
    pub trim_terminal: bool,
}

impl MissionSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InfeasibleMission(m.to_string()));
        for o in &self.obstacles {
            if !(o.radius > 0.0) || !(o.margin >= 0.0) {
                return bad("obstacle radius must be > 0 and margin >= 0");
            }
            if o.clearance(self.initial.x, self.initial.z) < 0.0 {
                return bad("initial position lies inside an obstacle");
            }
        }
        let b = &self.bounds;
        if !(b.x[0] < b.x[1] && b.z[0] < b.z[1]) {
            return bad("path bounds are empty");
        }
        let inside = |v: f64, r: [f64; 2]| v >= r[0] && v <= r[1];
        if !inside(self.initial.x, b.x) || !inside(self.initial.z, b.z) {
            return bad("initial position outside path bounds");
        }
        if let Some(x) = self.terminal.x {
            if !inside(x, b.x) {
                return bad("terminal x outside path bounds");
            }
        }
        if let Some(z) = self.terminal_altitude() {
            if !inside(z, b.z) {
                return bad("terminal z outside path bounds");
            }
        }
        if self.altitude_hold {
            if let Some(z) = self.terminal.z {
                if (z - self.initial.z).abs() > 1e-9 {
                    return bad("altitude hold conflicts with the terminal altitude");
                }
            }
        }
        let speeds = [Some(self.initial.speed), self.terminal.speed];
        if speeds.iter().flatten().any(|v| !(*v > 0.0)) {
            return bad("boundary speeds must be > 0");
        }
        let all = [self.initial.x, self.initial.z, self.initial.speed, self.initial.gamma];
        if all.iter().chain(self.terminal.as_array().iter().flatten()).any(|v| !v.is_finite()) {
            return bad("boundary values must be finite");
        }
        if let Some(t) = self.thrust_limit {
            if !(t > 0.0 && t.is_finite()) {
                return bad("thrust limit must be > 0");
            }
        }
        if self.trim_terminal && (self.terminal.speed.is_none() || self.terminal.gamma.is_none()) {
            return bad("a trimmed terminal state needs fixed speed and flight-path angle");
        }
        if let Some(t) = self.time_guess {
            if !(t > 0.0) {
                return bad("time guess must be > 0");
            }
        }
        Ok(())
    }

    /// Thrust ceiling used by the planner.
    pub fn max_thrust(&self, vehicle_limit: f64) -> f64 {
        self.thrust_limit.map_or(vehicle_limit, |t| t.min(vehicle_limit))
    }

    pub fn terminal_altitude(&self) -> Option<f64> {
        if self.altitude_hold {
            Some(self.initial.z)
        } else {
            self.terminal.z
        }
    }
}
