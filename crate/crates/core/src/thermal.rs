//! SMA wire thermal dynamics.
//!
//! Each wire follows a forward-Euler Joule-heating model
//!
//! ```text
//! T(k+1) = T(k) - (h_c A_c / C_v) (T(k) - T_0) dt + (dt / C_v) rho J^2 u(k)
//! ```
//!
//! which lumps into the affine form `T(k+1) = a1 T(k) + a2 u(k) + a3`. Augmenting
//! the temperature with a constant slot, `x = [T, 1]`, turns every wire into a
//! linear 2×2 block and the robot into a block-diagonal linear system.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, Error, Result};
use crate::linalg::{Mat2, Vec2};
use crate::Scalar;

/// Physical constants of one wire. `rho` and `current` are lumped so that the
/// Joule power is `rho * current^2 * u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalThermalParams<T> {
    /// Convective coefficient, W/(m²·K).
    pub h_c: T,
    /// Surface area, m².
    pub area: T,
    /// Heat capacity, J/K.
    pub c_v: T,
    /// Resistance lump, Ω.
    pub rho: T,
    /// Current lump, A.
    pub current: T,
    /// Ambient temperature, °C.
    pub t_0: T,
    /// Sampling interval, s.
    pub dt: T,
}

impl<T: Scalar> PhysicalThermalParams<T> {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("h_c", self.h_c),
            ("area", self.area),
            ("c_v", self.c_v),
            ("rho", self.rho),
            ("current", self.current),
            ("dt", self.dt),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > T::zero()) {
                return Err(invalid(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        if !self.t_0.is_finite() {
            return Err(Error::NonFinite("t_0"));
        }
        Ok(())
    }

    /// Cooling rate `h_c A_c / C_v` in 1/s.
    pub fn cooling_rate(&self) -> T {
        self.h_c * self.area / self.c_v
    }
}

/// Affine coefficients `(a1, a2, a3)` of `T(k+1) = a1 T(k) + a2 u(k) + a3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LumpedThermalParams<T> {
    pub a1: T,
    pub a2: T,
    pub a3: T,
}

impl<T: Scalar> LumpedThermalParams<T> {
    /// Validated constructor: `0 < a1 < 1`, `a2 > 0`, `a3 >= 0`.
    pub fn new(a1: T, a2: T, a3: T) -> Result<Self> {
        let p = Self { a1, a2, a3 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a1.is_finite() && self.a2.is_finite() && self.a3.is_finite()) {
            return Err(Error::NonFinite("lumped thermal coefficients"));
        }
        if !(self.a1 > T::zero() && self.a1 < T::one()) {
            return Err(invalid(format!("a1 must lie in (0,1), got {}", self.a1)));
        }
        if self.a2 <= T::zero() {
            return Err(invalid(format!("a2 must be > 0, got {}", self.a2)));
        }
        if self.a3 < T::zero() {
            return Err(invalid(format!("a3 must be >= 0, got {}", self.a3)));
        }
        Ok(())
    }

    /// Unforced equilibrium `a3 / (1 - a1)`.
    pub fn ambient(&self) -> T {
        self.a3 / (T::one() - self.a1)
    }

    /// Equilibrium under a constant duty cycle.
    pub fn equilibrium(&self, u: T) -> T {
        (self.a2 * u + self.a3) / (T::one() - self.a1)
    }
}

/// Lumps physical constants into the affine model.
pub fn lump<T: Scalar>(phys: &PhysicalThermalParams<T>) -> Result<LumpedThermalParams<T>> {
    phys.validate()?;
    let decay = phys.cooling_rate() * phys.dt;
    let a1 = T::one() - decay;
    if !(a1 > T::zero() && a1 < T::one()) {
        return Err(invalid(format!(
            "unstable discretization: 1 - (h_c*area/c_v)*dt = {a1} is outside (0,1)"
        )));
    }
    let a2 = phys.dt / phys.c_v * phys.rho * phys.current * phys.current;
    let a3 = decay * phys.t_0;
    if a3 < T::zero() {
        return Err(invalid(format!("ambient temperature t_0 = {} gives a3 < 0", phys.t_0)));
    }
    LumpedThermalParams::new(a1, a2, a3)
}

pub(crate) fn check_duty<T: Scalar>(u: T) -> Result<()> {
    if u >= T::zero() && u <= T::one() {
        Ok(())
    } else {
        Err(Error::DutyOutOfRange(u.as_f64()))
    }
}

/// One step of the lumped scalar model.
pub fn step_temperature<T: Scalar>(p: &LumpedThermalParams<T>, temp: T, u: T) -> Result<T> {
    check_duty(u)?;
    Ok(p.a1 * temp + p.a2 * u + p.a3)
}

/// Augmented wire state `[T, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentedState<T> {
    temp: T,
    one: T,
}

impl<T: Scalar> AugmentedState<T> {
    pub fn new(temp: T) -> Self {
        Self { temp, one: T::one() }
    }

    pub fn temp(&self) -> T {
        self.temp
    }

    pub fn one(&self) -> T {
        self.one
    }

    pub fn as_vec2(&self) -> Vec2<T> {
        Vec2::new(self.temp, self.one)
    }

    pub fn from_temps(temps: &[T]) -> Vec<Self> {
        temps.iter().copied().map(Self::new).collect()
    }
}

/// One wire's augmented dynamics `x(k+1) = A x(k) + B u(k)` with
/// `A = [[a1, a3], [0, 1]]` and `B = [a2, 0]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalBlock<T> {
    a: Mat2<T>,
    b: Vec2<T>,
}

impl<T: Scalar> ThermalBlock<T> {
    pub fn from_lumped(p: &LumpedThermalParams<T>) -> Self {
        Self {
            a: Mat2([[p.a1, p.a3], [T::zero(), T::one()]]),
            b: Vec2::new(p.a2, T::zero()),
        }
    }

    /// Builds a block from raw coefficients without the physical-range checks
    /// of [`LumpedThermalParams`]. Used for certificate checks on arbitrary models.
    pub fn from_coefficients(a1: T, a2: T, a3: T) -> Result<Self> {
        if !(a1.is_finite() && a2.is_finite() && a3.is_finite()) {
            return Err(Error::NonFinite("block coefficients"));
        }
        Ok(Self::from_lumped(&LumpedThermalParams { a1, a2, a3 }))
    }

    pub fn a(&self) -> Mat2<T> {
        self.a
    }

    pub fn b(&self) -> Vec2<T> {
        self.b
    }

    pub fn a1(&self) -> T {
        self.a.0[0][0]
    }

    pub fn a2(&self) -> T {
        self.b.0[0]
    }

    pub fn a3(&self) -> T {
        self.a.0[0][1]
    }

    pub fn params(&self) -> LumpedThermalParams<T> {
        LumpedThermalParams {
            a1: self.a1(),
            a2: self.a2(),
            a3: self.a3(),
        }
    }

    /// Unforced equilibrium, when the block has one (`0 < a1 < 1`).
    pub fn ambient(&self) -> Option<T> {
        let a1 = self.a1();
        (a1 > T::zero() && a1 < T::one()).then(|| self.a3() / (T::one() - a1))
    }

    /// `A x + B u` with no range check on `u`.
    pub fn apply(&self, x: Vec2<T>, u: T) -> Vec2<T> {
        self.a * x + self.b.scale(u)
    }
}

/// Block-diagonal system over `m` wires.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockLinearSystem<T> {
    blocks: Vec<ThermalBlock<T>>,
}

impl<T: Scalar> BlockLinearSystem<T> {
    pub fn from_blocks(blocks: Vec<ThermalBlock<T>>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(invalid("block system needs at least one SMA"));
        }
        Ok(Self { blocks })
    }

    pub fn m(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[ThermalBlock<T>] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &ThermalBlock<T> {
        &self.blocks[i]
    }

    /// Ambient equilibria; `None` for blocks without a stable equilibrium.
    pub fn ambient(&self) -> Vec<Option<T>> {
        self.blocks.iter().map(ThermalBlock::ambient).collect()
    }

    /// Advances every block by one step. Inputs must lie in `[0,1]`.
    pub fn step(&self, x: &[AugmentedState<T>], u: &[T]) -> Result<Vec<AugmentedState<T>>> {
        check_len("step_block state", self.m(), x.len())?;
        check_len("step_block input", self.m(), u.len())?;
        u.iter().try_for_each(|&ui| check_duty(ui))?;
        Ok(self
            .blocks
            .iter()
            .zip(x.iter().zip(u))
            .map(|(blk, (xi, &ui))| AugmentedState::new(blk.apply(xi.as_vec2(), ui)[0]))
            .collect())
    }
}

/// Stacks per-wire parameters into the block system, preserving order.
pub fn build_block_system<T: Scalar>(params: &[LumpedThermalParams<T>]) -> Result<BlockLinearSystem<T>> {
    if params.is_empty() {
        return Err(invalid("parameter list is empty"));
    }
    params.iter().try_for_each(LumpedThermalParams::validate)?;
    BlockLinearSystem::from_blocks(params.iter().map(ThermalBlock::from_lumped).collect())
}

pub fn step_block<T: Scalar>(
    sys: &BlockLinearSystem<T>,
    x: &[AugmentedState<T>],
    u: &[T],
) -> Result<Vec<AugmentedState<T>>> {
    sys.step(x, u)
}

/// Outcome of a least-squares calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LumpedFit<T> {
    pub params: LumpedThermalParams<T>,
    /// Root-mean-square one-step prediction residual, °C.
    pub residual_rms: T,
    /// Number of regression rows (consecutive sample pairs).
    pub rows: usize,
}

/// Ordinary least squares of `T(k+1) = a1 T(k) + a2 u(k) + a3` over all
/// consecutive `(temp, duty)` pairs of `trace`.
pub fn fit_lumped<T: Scalar>(trace: &[(T, T)]) -> Result<LumpedFit<T>> {
    if trace.len() < 3 {
        return Err(Error::RankDeficient(format!(
            "need at least 3 samples, got {}",
            trace.len()
        )));
    }
    for &(temp, u) in trace {
        if !temp.is_finite() {
            return Err(Error::NonFinite("trace temperature"));
        }
        check_duty(u)?;
    }
    let regressors = &trace[..trace.len() - 1];
    let distinct = |f: fn(&(T, T)) -> T| {
        let first = f(&regressors[0]);
        regressors.iter().any(|s| f(s) != first)
    };
    if !distinct(|s| s.1) {
        return Err(Error::RankDeficient("duty cycle is constant over the trace".into()));
    }
    if !distinct(|s| s.0) {
        return Err(Error::RankDeficient("temperature is constant over the trace".into()));
    }

    let rows: Vec<[T; 3]> = regressors.iter().map(|&(t, u)| [t, u, T::one()]).collect();
    let target: Vec<T> = trace[1..].iter().map(|s| s.0).collect();
    let coef = least_squares_3(&rows, &target)?;

    let ssr = rows
        .iter()
        .zip(&target)
        .map(|(r, &y)| {
            let res = y - (coef[0] * r[0] + coef[1] * r[1] + coef[2] * r[2]);
            res * res
        })
        .fold(T::zero(), |a, b| a + b);
    let residual_rms = (ssr / T::from_usize_lossy(rows.len())).sqrt();

    let params = LumpedThermalParams {
        a1: coef[0],
        a2: coef[1],
        a3: coef[2],
    };
    params
        .validate()
        .map_err(|e| Error::Calibration(format!("fitted {params:?} out of range: {e}")))?;
    Ok(LumpedFit {
        params,
        residual_rms,
        rows: rows.len(),
    })
}

/// Householder QR solve of an `n × 3` least-squares problem.
fn least_squares_3<T: Scalar>(rows: &[[T; 3]], target: &[T]) -> Result<[T; 3]> {
    let n = rows.len();
    let mut cols: Vec<Vec<T>> = (0..3).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
    let mut y = target.to_vec();
    let norms: Vec<T> = cols.iter().map(|c| norm(c)).collect();
    let tol = T::epsilon().sqrt();

    for j in 0..3 {
        let alpha = {
            let tail = norm(&cols[j][j..]);
            if cols[j][j] > T::zero() {
                -tail
            } else {
                tail
            }
        };
        if norms[j] == T::zero() || alpha.abs() <= tol * norms[j] {
            return Err(Error::RankDeficient(format!(
                "regressor column {j} is linearly dependent on the others"
            )));
        }
        let mut v: Vec<T> = cols[j][j..].to_vec();
        v[0] = v[0] - alpha;
        let vnorm2 = v.iter().fold(T::zero(), |a, &b| a + b * b);
        let reflect = |c: &mut [T]| {
            let d = v.iter().zip(c.iter()).fold(T::zero(), |a, (&vi, &ci)| a + vi * ci);
            let s = (d + d) / vnorm2;
            c.iter_mut().zip(&v).for_each(|(ci, &vi)| *ci = *ci - s * vi);
        };
        for col in cols.iter_mut().skip(j) {
            reflect(&mut col[j..]);
        }
        reflect(&mut y[j..n]);
    }

    let mut x = [T::zero(); 3];
    for j in (0..3).rev() {
        let mut acc = y[j];
        for (k, xk) in x.iter().enumerate().skip(j + 1) {
            acc = acc - cols[k][j] * *xk;
        }
        x[j] = acc / cols[j][j];
    }
    Ok(x)
}

fn norm<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |a, &b| a + b * b).sqrt()
}

/// Deterministic trace of the lumped model from `temp0` under `inputs`.
/// Returns one `(temp, duty)` sample per input.
pub fn simulate_trace<T: Scalar>(p: &LumpedThermalParams<T>, temp0: T, inputs: &[T]) -> Result<Vec<(T, T)>> {
    let mut temp = temp0;
    let mut out = Vec::with_capacity(inputs.len());
    for &u in inputs {
        out.push((temp, u));
        temp = step_temperature(p, temp, u)?;
    }
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
struct TraceRecord {
    step: u64,
    temp_c: f64,
    duty: f64,
}

pub const TRACE_HEADER: [&str; 3] = ["step", "temp_c", "duty"];

/// Reads a calibration trace with header `step,temp_c,duty`.
pub fn read_trace_csv<T: Scalar, R: Read>(reader: R) -> Result<Vec<(T, T)>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>() != TRACE_HEADER {
        return Err(Error::Parse(format!(
            "expected header `step,temp_c,duty`, got `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize::<TraceRecord>().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Parse(format!("line {line}: {e}")))?;
        if rec.step != i as u64 {
            return Err(Error::Parse(format!(
                "line {line}: expected step {i}, got {}",
                rec.step
            )));
        }
        if !(0.0..=1.0).contains(&rec.duty) {
            return Err(Error::Parse(format!(
                "line {line}: duty must lie in [0,1], got {}",
                rec.duty
            )));
        }
        let (t, u) = (T::from_f64(rec.temp_c), T::from_f64(rec.duty));
        match (t, u) {
            (Some(t), Some(u)) if t.is_finite() => out.push((t, u)),
            _ => return Err(Error::Parse(format!("line {line}: non-finite value"))),
        }
    }
    Ok(out)
}

pub fn write_trace_csv<T: Scalar, W: Write>(writer: W, trace: &[(T, T)]) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    for (i, &(t, u)) in trace.iter().enumerate() {
        wtr.serialize(TraceRecord {
            step: i as u64,
            temp_c: t.as_f64(),
            duty: u.as_f64(),
        })
        .map_err(|e| Error::Parse(e.to_string()))?;
    }
    wtr.flush().map_err(|e| Error::Parse(e.to_string()))
}
