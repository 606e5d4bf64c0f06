//! Closed-form cost model of the spin-Hall (GSHE) switch.
//!
//! All quantities are SI: metres, ohms, siemens, amperes, volts, watts,
//! seconds, joules. Read-out power follows the device's equivalent circuit:
//! a heavy-metal resistance `r` in series with a differential MTJ pair of
//! conductances `G_P` (parallel) and `G_AP` (anti-parallel).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Spin current needed for deterministic switching (20 µA).
pub const DETERMINISTIC_CURRENT: f64 = 20e-6;
/// Default sub-critical operating current (15 µA).
pub const PROBABILISTIC_CURRENT: f64 = 15e-6;
/// Mean switching delay at 20 µA.
pub const DETERMINISTIC_DELAY: f64 = 1.55e-9;
/// Mean switching delay at 15 µA.
pub const PROBABILISTIC_DELAY: f64 = 4.5e-9;
/// Deterministic power including leakage.
pub const DETERMINISTIC_POWER: f64 = 0.2125e-6;
/// Approximate power in the sub-critical regime at 15 µA.
pub const PROBABILISTIC_POWER: f64 = 0.12e-6;
/// Power of a gate operated at 90 % output accuracy.
pub const POWER_AT_90_PERCENT: f64 = 0.1071e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DeviceError {
    #[error("device parameter {0} must be strictly positive")]
    NonPositive(&'static str),
    #[error("TMR must be non-negative")]
    NegativeTmr,
    #[error("zero TMR: G_P equals G_AP and the read-out is infeasible")]
    ZeroTmr,
    #[error("spin current must be non-negative")]
    NegativeCurrent,
    #[error("invalid calibration: {0}")]
    Calibration(String),
    #[error("invalid operating point: {0}")]
    OperatingPoint(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Material and geometry constants of one switch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams {
    /// Nanomagnet footprint, width × length (m²).
    pub nanomagnet_area: f64,
    /// Resistance-area product of the MTJ (Ω·m²).
    pub rap: f64,
    /// Tunneling magnetoresistance ratio, `G_P / G_AP - 1`.
    pub tmr: f64,
    /// Heavy-metal resistance (Ω).
    pub r_hm: f64,
    /// Spin-Hall internal gain.
    pub beta: f64,
    /// Spin current for deterministic switching (A).
    pub switching_current: f64,
    /// Saturation magnetization of write/read nanomagnets (A/m); informational.
    pub ms_write: f64,
    pub ms_read: f64,
    /// Uniaxial anisotropy energy density of write/read nanomagnets (J/m³); informational.
    pub ku_write: f64,
    pub ku_read: f64,
    /// Additive static power (W); zero unless calibrated.
    pub leakage: f64,
}

impl Default for DeviceParams {
    fn default() -> Self {
        Self::reference()
    }
}

impl DeviceParams {
    /// The reference switch: 28 nm × 15 nm nanomagnets, RAP 1 Ω·µm², TMR 170 %,
    /// r ≈ 1 kΩ, θ_SH = 0.4 on a 1 nm heavy metal.
    pub fn reference() -> Self {
        Self::from_material(15e-9, 28e-9, 1e-12, 1.7, 1e3, 0.4, 1e-9, DETERMINISTIC_CURRENT)
            .expect("reference parameters are valid")
    }

    /// Builds parameters from raw material values; `beta = θ_SH · w_NM / t_HM`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_material(
        nm_width: f64,
        nm_length: f64,
        rap: f64,
        tmr: f64,
        r_hm: f64,
        spin_hall_angle: f64,
        hm_thickness: f64,
        switching_current: f64,
    ) -> Result<Self, DeviceError> {
        for (name, v) in [
            ("nanomagnet width", nm_width),
            ("nanomagnet length", nm_length),
            ("spin-Hall angle", spin_hall_angle),
            ("heavy-metal thickness", hm_thickness),
        ] {
            if !(v > 0.0) {
                return Err(DeviceError::NonPositive(name));
            }
        }
        let p = Self {
            nanomagnet_area: nm_width * nm_length,
            rap,
            tmr,
            r_hm,
            beta: spin_hall_angle * nm_width / hm_thickness,
            switching_current,
            ms_write: 1e6,
            ms_read: 5e5,
            ku_write: 2.5e4,
            ku_read: 5e3,
            leakage: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), DeviceError> {
        for (name, v) in [
            ("nanomagnet_area", self.nanomagnet_area),
            ("rap", self.rap),
            ("r_hm", self.r_hm),
            ("beta", self.beta),
            ("switching_current", self.switching_current),
        ] {
            if !(v > 0.0) {
                return Err(DeviceError::NonPositive(name));
            }
        }
        if !(self.tmr >= 0.0) {
            return Err(DeviceError::NegativeTmr);
        }
        if !(self.leakage >= 0.0) {
            return Err(DeviceError::NonPositive("leakage"));
        }
        Ok(())
    }

    /// Same parameters with leakage set so that the deterministic current
    /// dissipates exactly [`DETERMINISTIC_POWER`].
    pub fn with_calibrated_leakage(&self) -> Result<Self, DeviceError> {
        let mut p = self.clone();
        p.leakage = 0.0;
        let ideal = read_power(&p, p.switching_current)?;
        p.leakage = (DETERMINISTIC_POWER - ideal).max(0.0);
        Ok(p)
    }

    /// Flat `key value` text (SI units); `#` starts a comment.
    pub fn to_text(&self) -> String {
        format!(
            "nanomagnet_area {:e}\nrap {:e}\ntmr {}\nr_hm {}\nbeta {}\nswitching_current {:e}\n\
             ms_write {:e}\nms_read {:e}\nku_write {:e}\nku_read {:e}\nleakage {:e}\n",
            self.nanomagnet_area,
            self.rap,
            self.tmr,
            self.r_hm,
            self.beta,
            self.switching_current,
            self.ms_write,
            self.ms_read,
            self.ku_write,
            self.ku_read,
            self.leakage
        )
    }
}

fn parse_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let code = l.split('#').next().unwrap_or("").trim();
        if code.is_empty() {
            None
        } else {
            Some((
                i + 1,
                code.split(|c: char| c.is_whitespace() || c == '=' || c == ',')
                    .filter(|t| !t.is_empty())
                    .collect(),
            ))
        }
    })
}

fn number(tok: &str, line: usize) -> Result<f64, DeviceError> {
    tok.parse::<f64>().map_err(|_| DeviceError::Parse {
        line,
        message: format!("not a number: {tok:?}"),
    })
}

/// Parses the flat parameter file. Besides the direct fields it accepts the
/// raw material keys `nm_width`, `nm_length`, `spin_hall_angle` and
/// `hm_thickness`, from which area and beta are derived. Missing keys keep
/// their reference values.
impl FromStr for DeviceParams {
    type Err = DeviceError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut p = DeviceParams::reference();
        let (mut width, mut length, mut angle, mut thickness) = (None, None, None, None);
        let mut explicit_beta = false;
        for (line, toks) in parse_lines(text) {
            if toks.len() != 2 {
                return Err(DeviceError::Parse {
                    line,
                    message: "expected `key value`".into(),
                });
            }
            let v = number(toks[1], line)?;
            match toks[0] {
                "nanomagnet_area" => p.nanomagnet_area = v,
                "rap" => p.rap = v,
                "tmr" => p.tmr = v,
                "r_hm" => p.r_hm = v,
                "beta" => {
                    p.beta = v;
                    explicit_beta = true;
                }
                "switching_current" => p.switching_current = v,
                "ms_write" => p.ms_write = v,
                "ms_read" => p.ms_read = v,
                "ku_write" => p.ku_write = v,
                "ku_read" => p.ku_read = v,
                "leakage" => p.leakage = v,
                "nm_width" => width = Some(v),
                "nm_length" => length = Some(v),
                "spin_hall_angle" => angle = Some(v),
                "hm_thickness" => thickness = Some(v),
                other => {
                    return Err(DeviceError::Parse {
                        line,
                        message: format!("unknown key {other:?}"),
                    })
                }
            }
        }
        let w = width.unwrap_or(15e-9);
        if width.is_some() || length.is_some() {
            p.nanomagnet_area = w * length.unwrap_or(28e-9);
        }
        if !explicit_beta && (width.is_some() || angle.is_some() || thickness.is_some()) {
            p.beta = angle.unwrap_or(0.4) * w / thickness.unwrap_or(1e-9);
        }
        p.validate()?;
        Ok(p)
    }
}

/// MTJ conductances `(G_P, G_AP)`: `G_P = area / RAP`, `G_P / G_AP = 1 + TMR`.
pub fn conductances(params: &DeviceParams) -> (f64, f64) {
    let gp = params.nanomagnet_area / params.rap;
    (gp, gp / (1.0 + params.tmr))
}

/// Output and supply voltages `(V_OUT, V_SUP)` for spin current `current`.
pub fn readout_voltages(params: &DeviceParams, current: f64) -> Result<(f64, f64), DeviceError> {
    if !(current >= 0.0) {
        return Err(DeviceError::NegativeCurrent);
    }
    let (gp, gap) = conductances(params);
    if gp == gap {
        return Err(DeviceError::ZeroTmr);
    }
    let r = params.r_hm;
    let v_out = current * r / params.beta;
    let v_sup = (current / params.beta) * (1.0 + r * (gp + gap)) / (gp - gap);
    Ok((v_out, v_sup))
}

/// Read-out power dissipation at spin current `current`, plus `params.leakage`.
pub fn read_power(params: &DeviceParams, current: f64) -> Result<f64, DeviceError> {
    let (gp, gap) = conductances(params);
    let (v_out, v_sup) = readout_voltages(params, current)?;
    let p = v_out * v_out / params.r_hm + (v_sup - v_out).powi(2) * gp + (v_out + v_sup).powi(2) * gap;
    Ok(p + params.leakage)
}

/// Switching energy: power × delay.
pub fn energy(power: f64, delay: f64) -> f64 {
    power * delay
}

/// Spin current delivered into a stage: the control current plus, for
/// each driving stage `i`, `β·ΔG_i·V_i / (1 + r·G_i)`.
///
/// Each entry of `inputs` is `(ΔG_i, V_i, G_i)`. The circuit simulator does
/// not use this: it abstracts gates to a correctness probability.
pub fn stage_input_current(params: &DeviceParams, control_current: f64, inputs: &[(f64, f64, f64)]) -> f64 {
    control_current
        + inputs
            .iter()
            .map(|&(dg, v, g)| params.beta * dg * v / (1.0 + params.r_hm * g))
            .sum::<f64>()
}

/// Correctness of the next stage: `P_flip(I)` when the stage's function
/// requires the write magnet to flip, 1 otherwise.
pub fn next_stage_correctness(calibration: &FlipCalibration, current: f64, must_flip: bool) -> f64 {
    if must_flip {
        calibration.flip_probability(current)
    } else {
        1.0
    }
}

/// Piecewise-linear map from spin current to switching correctness.
///
/// Points are sorted by current; below the first point the correctness is
/// held at the first value, above the last at the last value, and the
/// result is clamped to `[0.5, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlipCalibration {
    points: Vec<(f64, f64)>,
}

impl FlipCalibration {
    pub fn new(mut points: Vec<(f64, f64)>) -> Result<Self, DeviceError> {
        if points.is_empty() {
            return Err(DeviceError::Calibration("no calibration points".into()));
        }
        for &(i, p) in &points {
            if !(i >= 0.0) || !i.is_finite() {
                return Err(DeviceError::Calibration(format!("bad current {i}")));
            }
            if !(0.0..=1.0).contains(&p) {
                return Err(DeviceError::Calibration(format!("probability {p} outside [0, 1]")));
            }
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in points.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(DeviceError::Calibration(format!("duplicate current {}", w[0].0)));
            }
            if w[1].1 < w[0].1 {
                return Err(DeviceError::Calibration(format!(
                    "correctness decreases from {} at {} A to {} at {} A",
                    w[0].1, w[0].0, w[1].1, w[1].0
                )));
            }
        }
        Ok(Self { points })
    }

    /// Requires a point at the deterministic current with correctness 1.
    pub fn for_device(params: &DeviceParams, points: Vec<(f64, f64)>) -> Result<Self, DeviceError> {
        let cal = Self::new(points)?;
        let anchored = cal
            .points
            .iter()
            .any(|&(i, p)| (i - params.switching_current).abs() <= 1e-12 && p == 1.0);
        if !anchored {
            return Err(DeviceError::Calibration(format!(
                "missing point ({} A, 1.0)",
                params.switching_current
            )));
        }
        Ok(cal)
    }

    /// Default calibration: 0.5 at zero current, 0.9 at 15 µA, 1.0 at 20 µA.
    pub fn reference() -> Self {
        Self::new(vec![
            (0.0, 0.5),
            (PROBABILISTIC_CURRENT, 0.9),
            (DETERMINISTIC_CURRENT, 1.0),
        ])
        .expect("reference calibration is valid")
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn flip_probability(&self, current: f64) -> f64 {
        let pts = &self.points;
        let p = match pts.iter().position(|&(i, _)| i >= current) {
            Some(0) => pts[0].1,
            None => pts[pts.len() - 1].1,
            Some(k) => {
                let (i0, p0) = pts[k - 1];
                let (i1, p1) = pts[k];
                p0 + (p1 - p0) * (current - i0) / (i1 - i0)
            }
        };
        p.clamp(0.5, 1.0)
    }
}

/// `current probability` pairs, one per line.
impl FromStr for FlipCalibration {
    type Err = DeviceError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut pts = Vec::new();
        for (line, toks) in parse_lines(text) {
            if toks.len() != 2 {
                return Err(DeviceError::Parse {
                    line,
                    message: "expected `current probability`".into(),
                });
            }
            pts.push((number(toks[0], line)?, number(toks[1], line)?));
        }
        Self::new(pts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub spin_current: f64,
    pub correctness: f64,
    pub mean_delay: f64,
    pub power: f64,
}

impl OperatingPoint {
    pub fn new(
        params: &DeviceParams,
        spin_current: f64,
        correctness: f64,
        mean_delay: f64,
        power: f64,
    ) -> Result<Self, DeviceError> {
        if !(0.5..=1.0).contains(&correctness) {
            return Err(DeviceError::OperatingPoint(format!(
                "correctness {correctness} outside [0.5, 1]"
            )));
        }
        let deterministic = spin_current >= params.switching_current;
        if deterministic != (correctness == 1.0) {
            return Err(DeviceError::OperatingPoint(format!(
                "correctness {correctness} inconsistent with current {spin_current} A"
            )));
        }
        if spin_current > 0.0 && !(power > 0.0) {
            return Err(DeviceError::OperatingPoint("power must be positive".into()));
        }
        Ok(Self {
            spin_current,
            correctness,
            mean_delay,
            power,
        })
    }

    /// Operating point at `current` using the calibration for correctness
    /// and the read-out equations for power.
    pub fn evaluate(
        params: &DeviceParams,
        calibration: &FlipCalibration,
        current: f64,
        mean_delay: f64,
    ) -> Result<Self, DeviceError> {
        let correctness = if current >= params.switching_current {
            1.0
        } else {
            calibration.flip_probability(current).min(1.0 - f64::EPSILON)
        };
        Self::new(params, current, correctness, mean_delay, read_power(params, current)?)
    }

    /// 20 µA, correctness 1, 1.55 ns, 0.2125 µW.
    pub fn deterministic(params: &DeviceParams) -> Self {
        Self::new(
            params,
            params.switching_current,
            1.0,
            DETERMINISTIC_DELAY,
            DETERMINISTIC_POWER,
        )
        .expect("reference point is valid")
    }

    /// 15 µA, 4.5 ns, 0.12 µW; correctness is configuration.
    pub fn probabilistic(params: &DeviceParams, correctness: f64) -> Result<Self, DeviceError> {
        Self::new(
            params,
            PROBABILISTIC_CURRENT,
            correctness,
            PROBABILISTIC_DELAY,
            PROBABILISTIC_POWER,
        )
    }

    pub fn energy(&self) -> f64 {
        energy(self.power, self.mean_delay)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimitiveKind {
    Intrinsic,
    WithTransducer,
    ObfuscatedWithMuxes,
}

impl PrimitiveKind {
    pub const ALL: [PrimitiveKind; 3] = [
        PrimitiveKind::Intrinsic,
        PrimitiveKind::WithTransducer,
        PrimitiveKind::ObfuscatedWithMuxes,
    ];
}

impl fmt::Display for PrimitiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PrimitiveKind::Intrinsic => "intrinsic",
            PrimitiveKind::WithTransducer => "with_transducer",
            PrimitiveKind::ObfuscatedWithMuxes => "obfuscated_with_muxes",
        })
    }
}

impl FromStr for PrimitiveKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "intrinsic" => Ok(PrimitiveKind::Intrinsic),
            "with_transducer" | "transducer" => Ok(PrimitiveKind::WithTransducer),
            "obfuscated_with_muxes" | "obfuscated" => Ok(PrimitiveKind::ObfuscatedWithMuxes),
            other => Err(format!("unknown primitive kind {other:?}")),
        }
    }
}

/// Deterministic-regime cost of one GSHE primitive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrimitiveCost {
    pub kind: PrimitiveKind,
    pub energy: f64,
    pub power: f64,
    pub delay: f64,
    pub area: f64,
}

pub fn primitive_cost(kind: PrimitiveKind) -> PrimitiveCost {
    let (energy, power, delay, area_um2) = match kind {
        PrimitiveKind::Intrinsic => (0.33e-15, 0.2125e-6, 1.55e-9, 0.0016),
        PrimitiveKind::WithTransducer => (0.45e-15, 0.2525e-6, 1.8e-9, 0.003),
        PrimitiveKind::ObfuscatedWithMuxes => (0.49e-15, 0.2673e-6, 1.83e-9, 0.029),
    };
    PrimitiveCost {
        kind,
        energy,
        power,
        delay,
        area: area_um2 * 1e-12,
    }
}

/// Relative overheads `(energy, power, delay, area)` of `a` over `b`.
pub fn overheads(a: &PrimitiveCost, b: &PrimitiveCost) -> (f64, f64, f64, f64) {
    (
        a.energy / b.energy - 1.0,
        a.power / b.power - 1.0,
        a.delay / b.delay - 1.0,
        a.area / b.area - 1.0,
    )
}
