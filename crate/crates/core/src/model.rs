//! The three-variable vector field, its coefficient presets, and equilibria.
//!
//! ```text
//! dx/dt = -x - x*y^2 + c2*z + c1
//! dy/dt = (x + x*y^2 - y) / c3
//! dz/dt = (y - z) / c4 - x*y*z / c4
//! ```

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("coefficient {name} must be nonzero (it divides the vector field)")]
    ZeroDivisor { name: &'static str },
    #[error("coefficient {name} is not finite: {value}")]
    NonFiniteCoefficient { name: &'static str, value: f64 },
    #[error("state is not finite: ({x}, {y}, {z})")]
    NonFiniteState { x: f64, y: f64, z: f64 },
    #[error("unknown preset '{0}' (expected fig12, fig13 or all_ones)")]
    UnknownPreset(String),
}

/// System state `(x, y, z)` at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StateVec {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl StateVec {
    pub const ORIGIN: StateVec = StateVec { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        StateVec { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn sup_norm(&self) -> f64 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn component(&self, c: Component) -> f64 {
        match c {
            Component::X => self.x,
            Component::Y => self.y,
            Component::Z => self.z,
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub(crate) fn check_finite(&self) -> Result<(), ModelError> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(ModelError::NonFiniteState { x: self.x, y: self.y, z: self.z })
        }
    }
}

impl Add for StateVec {
    type Output = StateVec;
    fn add(self, o: StateVec) -> StateVec {
        StateVec::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for StateVec {
    type Output = StateVec;
    fn sub(self, o: StateVec) -> StateVec {
        StateVec::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<StateVec> for f64 {
    type Output = StateVec;
    fn mul(self, s: StateVec) -> StateVec {
        StateVec::new(self * s.x, self * s.y, self * s.z)
    }
}

/// One of the three state channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Component {
    X,
    Y,
    Z,
}

impl Component {
    pub const ALL: [Component; 3] = [Component::X, Component::Y, Component::Z];

    pub fn name(self) -> &'static str {
        match self {
            Component::X => "x",
            Component::Y => "y",
            Component::Z => "z",
        }
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Component {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "x" => Ok(Component::X),
            "y" => Ok(Component::Y),
            "z" => Ok(Component::Z),
            other => Err(format!("unknown component '{other}' (expected x, y or z)")),
        }
    }
}

/// The four parameters of the vector field. `c3` and `c4` are divisors and
/// must be nonzero; construction through [`Coefficients::new`] enforces it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    c1: f64,
    c2: f64,
    c3: f64,
    c4: f64,
}

/// Selects one of the four coefficients by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CoefficientName {
    C1,
    C2,
    C3,
    C4,
}

impl CoefficientName {
    pub fn name(self) -> &'static str {
        match self {
            CoefficientName::C1 => "c1",
            CoefficientName::C2 => "c2",
            CoefficientName::C3 => "c3",
            CoefficientName::C4 => "c4",
        }
    }

    /// Whether the coefficient appears as a divisor in the field.
    pub fn is_divisor(self) -> bool {
        matches!(self, CoefficientName::C3 | CoefficientName::C4)
    }
}

impl fmt::Display for CoefficientName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CoefficientName {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "c1" => Ok(CoefficientName::C1),
            "c2" => Ok(CoefficientName::C2),
            "c3" => Ok(CoefficientName::C3),
            "c4" => Ok(CoefficientName::C4),
            other => Err(format!("unknown coefficient '{other}' (expected c1, c2, c3 or c4)")),
        }
    }
}

impl Coefficients {
    pub fn new(c1: f64, c2: f64, c3: f64, c4: f64) -> Result<Self, ModelError> {
        for (name, value) in [("c1", c1), ("c2", c2), ("c3", c3), ("c4", c4)] {
            if !value.is_finite() {
                return Err(ModelError::NonFiniteCoefficient { name, value });
            }
        }
        if c3 == 0.0 {
            return Err(ModelError::ZeroDivisor { name: "c3" });
        }
        if c4 == 0.0 {
            return Err(ModelError::ZeroDivisor { name: "c4" });
        }
        Ok(Coefficients { c1, c2, c3, c4 })
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }
    pub fn c2(&self) -> f64 {
        self.c2
    }
    pub fn c3(&self) -> f64 {
        self.c3
    }
    pub fn c4(&self) -> f64 {
        self.c4
    }

    pub fn get(&self, which: CoefficientName) -> f64 {
        match which {
            CoefficientName::C1 => self.c1,
            CoefficientName::C2 => self.c2,
            CoefficientName::C3 => self.c3,
            CoefficientName::C4 => self.c4,
        }
    }

    /// Returns a copy with one coefficient replaced, revalidated.
    pub fn with(&self, which: CoefficientName, value: f64) -> Result<Self, ModelError> {
        let mut arr = self.to_array();
        let idx = match which {
            CoefficientName::C1 => 0,
            CoefficientName::C2 => 1,
            CoefficientName::C3 => 2,
            CoefficientName::C4 => 3,
        };
        arr[idx] = value;
        Coefficients::new(arr[0], arr[1], arr[2], arr[3])
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.c1, self.c2, self.c3, self.c4]
    }
}

/// The coefficient sets shipped with the toolkit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PresetId {
    /// Long-horizon run: `(1, 1.67515, 1, 1)`.
    Fig12,
    /// Bifurcation set: `(25, 0, 0.05017, 1)`.
    Fig13,
    /// Unit coefficients: `(1, 1, 1, 1)`.
    AllOnes,
}

impl PresetId {
    pub const ALL: [PresetId; 3] = [PresetId::Fig12, PresetId::Fig13, PresetId::AllOnes];

    pub fn name(self) -> &'static str {
        match self {
            PresetId::Fig12 => "fig12",
            PresetId::Fig13 => "fig13",
            PresetId::AllOnes => "all_ones",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            PresetId::Fig12 => "long-time run settling onto an equilibrium",
            PresetId::Fig13 => "bifurcation set with a fast y-subsystem",
            PresetId::AllOnes => "unit coefficients, converges to a single equilibrium",
        }
    }
}

impl fmt::Display for PresetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PresetId {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fig12" => Ok(PresetId::Fig12),
            "fig13" => Ok(PresetId::Fig13),
            "all_ones" => Ok(PresetId::AllOnes),
            other => Err(ModelError::UnknownPreset(other.to_string())),
        }
    }
}

/// Coefficients, initial state, and initial time for a preset.
pub fn preset(id: PresetId) -> (Coefficients, StateVec, f64) {
    let coeffs = match id {
        PresetId::Fig12 => Coefficients { c1: 1.0, c2: 1.67515, c3: 1.0, c4: 1.0 },
        PresetId::Fig13 => Coefficients { c1: 25.0, c2: 0.0, c3: 0.05017, c4: 1.0 },
        PresetId::AllOnes => Coefficients { c1: 1.0, c2: 1.0, c3: 1.0, c4: 1.0 },
    };
    (coeffs, StateVec::ORIGIN, 0.0)
}

/// Evaluates the field without checking inputs. Used by the steppers, which
/// check finiteness once per step.
#[inline]
pub(crate) fn field_unchecked(s: StateVec, c: &Coefficients) -> StateVec {
    let StateVec { x, y, z } = s;
    let xy2 = x * y * y;
    StateVec { x: -x - xy2 + c.c2 * z + c.c1, y: (x + xy2 - y) / c.c3, z: (y - z) / c.c4 - x * y * z / c.c4 }
}

/// Time derivative `(dx/dt, dy/dt, dz/dt)` at `state`.
pub fn vector_field(state: StateVec, coeffs: &Coefficients) -> Result<StateVec, ModelError> {
    state.check_finite()?;
    let out = field_unchecked(state, coeffs);
    out.check_finite()?;
    Ok(out)
}

/// Jacobian of the field, row `i` holding the partials of component `i`.
fn jacobian(s: StateVec, c: &Coefficients) -> [[f64; 3]; 3] {
    let StateVec { x, y, z } = s;
    [
        [-1.0 - y * y, -2.0 * x * y, c.c2],
        [(1.0 + y * y) / c.c3, (2.0 * x * y - 1.0) / c.c3, 0.0],
        [-y * z / c.c4, (1.0 - x * z) / c.c4, (-1.0 - x * y) / c.c4],
    ]
}

/// Solves `a * v = b` by Gaussian elimination with partial pivoting.
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap_or(col);
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let factor = a[row][col] / a[col][col];
            let pivot_row = a[col];
            for (dst, src) in a[row].iter_mut().zip(pivot_row).skip(col) {
                *dst -= factor * src;
            }
            b[row] -= factor * b[col];
        }
    }
    let mut v = [0.0; 3];
    for row in (0..3).rev() {
        let mut acc = b[row];
        for k in row + 1..3 {
            acc -= a[row][k] * v[k];
        }
        v[row] = acc / a[row][row];
    }
    v.iter().all(|e| e.is_finite()).then_some(v)
}

/// An equilibrium of the field together with its residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    pub state: StateVec,
    /// Euclidean norm of the vector field at `state`.
    pub residual_norm: f64,
}

/// Starting points for the equilibrium search: the 27 points of
/// `{-1, 0.5, 2}^3` followed by the origin.
pub fn newton_start_grid() -> Vec<StateVec> {
    const LEVELS: [f64; 3] = [-1.0, 0.5, 2.0];
    let mut grid = Vec::with_capacity(28);
    for &x in &LEVELS {
        for &y in &LEVELS {
            for &z in &LEVELS {
                grid.push(StateVec::new(x, y, z));
            }
        }
    }
    grid.push(StateVec::ORIGIN);
    grid
}

const MAX_HALVINGS: u32 = 40;
const DEDUP_TOL: f64 = 1e-6;

fn damped_newton(start: StateVec, c: &Coefficients, tol: f64, max_iter: usize) -> Option<FixedPoint> {
    let mut s = start;
    let mut f = field_unchecked(s, c);
    let mut r = f.norm();
    for _ in 0..max_iter {
        if r <= tol {
            return Some(FixedPoint { state: s, residual_norm: r });
        }
        let step = solve3(jacobian(s, c), [-f.x, -f.y, -f.z])?;
        let step = StateVec::new(step[0], step[1], step[2]);
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let trial = s + lambda * step;
            let ft = field_unchecked(trial, c);
            let rt = ft.norm();
            if trial.is_finite() && rt.is_finite() && rt < r {
                s = trial;
                f = ft;
                r = rt;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (r <= tol).then_some(FixedPoint { state: s, residual_norm: r })
}

/// All real equilibria reachable by damped Newton from [`newton_start_grid`],
/// deduplicated at `1e-6` in sup-norm. Every returned point has
/// `residual_norm <= tol`. Points appear in order of discovery.
pub fn fixed_points(coeffs: &Coefficients, tol: f64, max_iter: usize) -> Vec<FixedPoint> {
    assert!(tol > 0.0, "fixed_points tolerance must be positive");
    let mut found: Vec<FixedPoint> = Vec::new();
    for start in newton_start_grid() {
        if let Some(fp) = damped_newton(start, coeffs, tol, max_iter) {
            if !found.iter().any(|p| (p.state - fp.state).sup_norm() <= DEDUP_TOL) {
                found.push(fp);
            }
        }
    }
    found
}
