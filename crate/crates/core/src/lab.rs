//! Time-domain experiments: field-driven Majorana transfer, mismatch
//! metrics, revival period and gate sequences.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analytic::{half_period_steps, oscillation_period};
use crate::error::{Error, Result};
use crate::linalg::{parabola_vertex, C64};
use crate::numeric::{
    diagonalize_ring, extract_majorana_pair, residual_r_prime, two_level_decompose, MajoranaTarget,
};
use crate::walker::{overlap, ring_coin_field, step_into, CoinField, RingConfig, WalkerState};

/// Applies the walk step `steps` times.
pub fn evolve(state: &WalkerState, steps: usize, field: &CoinField) -> Result<WalkerState> {
    if state.len() != field.len() {
        return Err(Error::LengthMismatch {
            expected: field.len(),
            found: state.len(),
        });
    }
    let mut cur = state.amplitudes().to_vec();
    let mut next = cur.clone();
    for _ in 0..steps {
        step_into(&cur, field, &mut next);
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(WalkerState::from_raw_unchecked(cur))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MismatchMode {
    /// `sum_n |a(n) - b(n)|^2` as given.
    Raw,
    /// Same sum after rotating `a` by the global phase that minimizes it.
    PhaseAligned,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mismatch {
    pub total: f64,
    pub per_site: Vec<f64>,
}

/// Site-resolved squared distance between two states.
pub fn mismatch(a: &WalkerState, b: &WalkerState, mode: MismatchMode) -> Result<Mismatch> {
    let ov = overlap(a, b)?;
    let rot = match mode {
        MismatchMode::Raw => C64::new(1.0, 0.0),
        MismatchMode::PhaseAligned if ov.norm() > 0.0 => ov / ov.norm(),
        MismatchMode::PhaseAligned => C64::new(1.0, 0.0),
    };
    let per_site: Vec<f64> = a
        .amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|(x, y)| (x[0] * rot - y[0]).norm_sqr() + (x[1] * rot - y[1]).norm_sqr())
        .collect();
    Ok(Mismatch {
        total: per_site.iter().sum(),
        per_site,
    })
}

/// Majorana pair `(psi_0^+, psi_0^-)` of the zero-field ring, localized at
/// `n = 0` and `n = N1`.
pub fn zero_field_majoranas(config: &RingConfig) -> Result<(WalkerState, WalkerState)> {
    let bare = config.with_alpha(0.0);
    extract_majorana_pair(&diagonalize_ring(&bare)?, MajoranaTarget::Zero, &bare)
}

fn require_symmetric(config: &RingConfig) -> Result<usize> {
    config.half().ok_or_else(|| {
        Error::InvalidConfig(format!(
            "experiment needs a symmetric ring, got n1 = {}, n2 = {}",
            config.n1, config.n2
        ))
    })
}

/// Outcome of evolving the `n = 0` Majorana for half a period with the field on.
#[derive(Clone, Debug, Serialize)]
pub struct TransferReport {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "theta_over_pi", with = "crate::serde_util::over_pi")]
    pub theta: f64,
    #[serde(rename = "alpha_over_pi", with = "crate::serde_util::over_pi")]
    pub alpha: f64,
    #[serde(rename = "period_T")]
    pub period_t: f64,
    pub steps_applied: usize,
    pub mismatch_raw: f64,
    pub mismatch_aligned: f64,
    pub per_site_mismatch: Vec<f64>,
    #[serde(with = "crate::serde_util::complex")]
    pub c_plus: C64,
    #[serde(with = "crate::serde_util::complex")]
    pub c_minus: C64,
    #[serde(rename = "residual_R2")]
    pub residual_r2: f64,
    #[serde(rename = "residual_Rprime2")]
    pub residual_r_prime2: f64,
}

/// Evolves `psi_0^+` for `round(T/2)` steps at the configured field and
/// compares the result with `psi_0^-`. The per-site profile is phase aligned.
pub fn half_period_transfer(config: &RingConfig) -> Result<TransferReport> {
    transfer_with_steps(config, None)
}

/// [`half_period_transfer`] with an optional override of the step count.
pub fn transfer_with_steps(config: &RingConfig, steps: Option<usize>) -> Result<TransferReport> {
    let m = require_symmetric(config)?;
    let period_t = oscillation_period(m, config.theta, config.alpha)?;
    let steps = match steps {
        Some(s) => s,
        None => half_period_steps(m, config.theta, config.alpha)?,
    };
    let (start, target) = zero_field_majoranas(config)?;
    let model = two_level_decompose(&start, &diagonalize_ring(config)?)?;
    let finish = evolve(&start, steps, &ring_coin_field(config))?;
    let raw = mismatch(&finish, &target, MismatchMode::Raw)?;
    let aligned = mismatch(&finish, &target, MismatchMode::PhaseAligned)?;
    Ok(TransferReport {
        m,
        theta: config.theta,
        alpha: config.alpha,
        period_t,
        steps_applied: steps,
        mismatch_raw: raw.total,
        mismatch_aligned: aligned.total,
        per_site_mismatch: aligned.per_site,
        c_plus: model.c_plus,
        c_minus: model.c_minus,
        residual_r2: model.residual_r2,
        residual_r_prime2: residual_r_prime(&start, &model),
    })
}

/// `|<psi(0)|psi(t)>|^2` for `t = 0..=horizon`, starting from the `n = 0`
/// Majorana with the configured field on.
pub fn fidelity_trace(config: &RingConfig, horizon: usize) -> Result<Vec<f64>> {
    let (start, _) = zero_field_majoranas(config)?;
    let field = ring_coin_field(config);
    let mut cur = start.amplitudes().to_vec();
    let mut next = cur.clone();
    let mut out = Vec::with_capacity(horizon + 1);
    for t in 0..=horizon {
        if t > 0 {
            step_into(&cur, &field, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        let ov: C64 = start
            .amplitudes()
            .iter()
            .zip(&cur)
            .map(|(x, y)| x[0].conj() * y[0] + x[1].conj() * y[1])
            .sum();
        out.push(ov.norm_sqr());
    }
    Ok(out)
}

/// Refinement of the revival peak location.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeakFit {
    /// Parabola through the maximum and its two neighbours.
    ThreePoint,
    /// Least-squares parabola over the top of the revival lobe.
    LobeLeastSquares,
}

const LOBE_LOW: f64 = 0.25;
const LOBE_HIGH: f64 = 0.75;
const LOBE_TOP: f64 = 0.9;

/// Locates the first revival of the fidelity. The revival lobe is the first
/// excursion above 0.75 after the fidelity has dropped below 0.25, and ends
/// when it drops below 0.25 again.
pub fn revival_peak(fidelity: &[f64], fit: PeakFit) -> Option<f64> {
    let dip = fidelity.iter().position(|&f| f < LOBE_LOW)?;
    let rise = dip + fidelity[dip..].iter().position(|&f| f > LOBE_HIGH)?;
    let end = fidelity[rise..]
        .iter()
        .position(|&f| f < LOBE_LOW)
        .map_or(fidelity.len(), |k| rise + k);
    let lobe = &fidelity[rise..end];
    let (k, &peak) = lobe.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1))?;
    let top = rise + k;
    if top == 0 || top + 1 >= fidelity.len() {
        return None;
    }
    let (lo, hi) = match fit {
        PeakFit::ThreePoint => (top - 1, top + 1),
        PeakFit::LobeLeastSquares => {
            let mut lo = top;
            while lo > rise && fidelity[lo - 1] >= LOBE_TOP * peak {
                lo -= 1;
            }
            let mut hi = top;
            while hi + 1 < end && fidelity[hi + 1] >= LOBE_TOP * peak {
                hi += 1;
            }
            (lo.min(top - 1), hi.max(top + 1))
        }
    };
    let xs: Vec<f64> = (lo..=hi).map(|t| t as f64).collect();
    let vertex = parabola_vertex(&xs, &fidelity[lo..=hi])?;
    (vertex >= lo as f64 && vertex <= hi as f64).then_some(vertex)
}

/// Revival period of the `n = 0` Majorana, least-squares lobe fit.
pub fn measure_period(config: &RingConfig, horizon: usize) -> Result<f64> {
    measure_period_with(config, horizon, PeakFit::LobeLeastSquares)
}

pub fn measure_period_with(config: &RingConfig, horizon: usize, fit: PeakFit) -> Result<f64> {
    let trace = fidelity_trace(config, horizon)?;
    revival_peak(&trace, fit).ok_or(Error::NoRevival(horizon))
}

/// `C0`: one step at zero field. `C1`: `round(T/2)` steps at the configured field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GateOp {
    C0,
    C1,
}

/// Parses a gate string such as `"1011011011"` (`0` = C0, `1` = C1).
pub fn parse_gates(text: &str) -> Result<Vec<GateOp>> {
    text.chars()
        .map(|c| match c {
            '0' => Ok(GateOp::C0),
            '1' => Ok(GateOp::C1),
            other => Err(Error::InvalidConfig(format!(
                "gate '{other}' is not 0 or 1"
            ))),
        })
        .collect()
}

/// Logical Majorana state: `|0>` at `n = 0`, `|1>` at `n = N1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MajoranaLabel {
    #[serde(rename = "|0>")]
    Zero,
    #[serde(rename = "|1>")]
    One,
}

impl MajoranaLabel {
    pub fn flipped(self) -> Self {
        match self {
            MajoranaLabel::Zero => MajoranaLabel::One,
            MajoranaLabel::One => MajoranaLabel::Zero,
        }
    }
}

impl fmt::Display for MajoranaLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MajoranaLabel::Zero => "|0>",
            MajoranaLabel::One => "|1>",
        })
    }
}

impl FromStr for MajoranaLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "0" | "|0>" => Ok(MajoranaLabel::Zero),
            "1" | "|1>" => Ok(MajoranaLabel::One),
            other => Err(Error::InvalidConfig(format!(
                "unknown Majorana label '{other}'"
            ))),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SequenceResult {
    pub sequence: Vec<GateOp>,
    pub start_label: MajoranaLabel,
    pub target_label: MajoranaLabel,
    pub steps_per_c1: usize,
    pub total_steps: usize,
    pub total_mismatch: f64,
    pub mismatch_raw: f64,
    /// `arg <psi_target|psi_final>` in radians.
    #[serde(rename = "extra_phase")]
    pub extra_phase: f64,
    pub final_state: WalkerState,
}

/// Applies `sequence` left to right to the Majorana named by `start` and
/// compares with the Majorana expected from the parity of C1 gates.
pub fn run_gate_sequence(
    sequence: &[GateOp],
    config: &RingConfig,
    start: MajoranaLabel,
) -> Result<SequenceResult> {
    let m = require_symmetric(config)?;
    let steps_per_c1 = half_period_steps(m, config.theta, config.alpha)?;
    let (zero, one) = zero_field_majoranas(config)?;
    let pick = |label| match label {
        MajoranaLabel::Zero => &zero,
        MajoranaLabel::One => &one,
    };
    let idle = ring_coin_field(&config.with_alpha(0.0));
    let driven = ring_coin_field(config);

    let mut state = pick(start).clone();
    let mut target_label = start;
    let mut total_steps = 0;
    for op in sequence {
        let (field, steps) = match op {
            GateOp::C0 => (&idle, 1),
            GateOp::C1 => {
                target_label = target_label.flipped();
                (&driven, steps_per_c1)
            }
        };
        state = evolve(&state, steps, field)?;
        total_steps += steps;
    }
    let target = pick(target_label);
    let aligned = mismatch(&state, target, MismatchMode::PhaseAligned)?;
    let raw = mismatch(&state, target, MismatchMode::Raw)?;
    Ok(SequenceResult {
        sequence: sequence.to_vec(),
        start_label: start,
        target_label,
        steps_per_c1,
        total_steps,
        total_mismatch: aligned.total,
        mismatch_raw: raw.total,
        extra_phase: overlap(target, &state)?.arg(),
        final_state: state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn sym(m: usize, alpha: f64) -> RingConfig {
        RingConfig::symmetric(m, FRAC_PI_4, alpha).unwrap()
    }

    #[test]
    fn zero_steps_is_identity() {
        let c = sym(4, 0.05 * PI);
        let psi = WalkerState::localized(8, 3, 1);
        assert_eq!(evolve(&psi, 0, &ring_coin_field(&c)).unwrap(), psi);
    }

    #[test]
    fn evolve_conserves_norm() {
        let c = sym(5, 0.05 * PI);
        let psi = WalkerState::localized(10, 0, 0);
        let out = evolve(&psi, 5000, &ring_coin_field(&c)).unwrap();
        assert!((out.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn evolve_length_mismatch() {
        let psi = WalkerState::localized(6, 0, 0);
        let field = ring_coin_field(&sym(4, 0.0));
        assert!(matches!(
            evolve(&psi, 1, &field),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn majorana_is_stationary_at_zero_field() {
        let c = sym(4, 0.0);
        let (zero, _) = zero_field_majoranas(&c).unwrap();
        let out = evolve(&zero, 37, &ring_coin_field(&c)).unwrap();
        assert!(overlap(&zero, &out).unwrap().norm_sqr() > 1.0 - 1e-8);
    }

    #[test]
    fn mismatch_limits() {
        let a = WalkerState::localized(4, 0, 0);
        let b = WalkerState::localized(4, 2, 1);
        for mode in [MismatchMode::Raw, MismatchMode::PhaseAligned] {
            assert_eq!(mismatch(&a, &a, mode).unwrap().total, 0.0);
            assert!((mismatch(&a, &b, mode).unwrap().total - 2.0).abs() < 1e-15);
        }
        let c = a.scaled(C64::new(0.0, 1.0));
        assert!((mismatch(&a, &c, MismatchMode::Raw).unwrap().total - 2.0).abs() < 1e-15);
        assert!(mismatch(&a, &c, MismatchMode::PhaseAligned).unwrap().total < 1e-15);
    }

    #[test]
    fn transfer_moves_weight_to_interface() {
        let c = sym(4, 0.05 * PI);
        let report = half_period_transfer(&c).unwrap();
        assert_eq!(report.steps_applied, 64);
        assert!(report.mismatch_aligned <= report.mismatch_raw);
        let (start, _) = zero_field_majoranas(&c).unwrap();
        let p = evolve(&start, 64, &ring_coin_field(&c))
            .unwrap()
            .site_probabilities();
        let interface: f64 = p[2..7].iter().sum();
        assert!(interface > 0.9, "{p:?}");
    }

    #[test]
    fn transfer_requires_symmetric_ring() {
        let c = RingConfig::new(4, 5, FRAC_PI_4, 0.05 * PI).unwrap();
        assert!(matches!(
            half_period_transfer(&c),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            half_period_transfer(&sym(4, 0.2 * PI)),
            Err(Error::OutOfRegime(_))
        ));
    }

    #[test]
    fn revival_peak_on_synthetic_trace() {
        let trace: Vec<f64> = (0..400)
            .map(|t| (PI * t as f64 / 123.4).cos().powi(2))
            .collect();
        for fit in [PeakFit::ThreePoint, PeakFit::LobeLeastSquares] {
            let p = revival_peak(&trace, fit).unwrap();
            assert!((p - 123.4).abs() < 0.05, "{fit:?}: {p}");
        }
        assert_eq!(revival_peak(&trace[..100], PeakFit::LobeLeastSquares), None);
    }

    #[test]
    fn gate_parsing() {
        assert_eq!(parse_gates("10").unwrap(), vec![GateOp::C1, GateOp::C0]);
        assert!(parse_gates("102").is_err());
        assert!(parse_gates("").unwrap().is_empty());
        assert_eq!("1".parse::<MajoranaLabel>().unwrap(), MajoranaLabel::One);
        assert_eq!(MajoranaLabel::Zero.to_string(), "|0>");
    }

    #[test]
    fn idle_gate_keeps_label() {
        let r = run_gate_sequence(&[GateOp::C0], &sym(4, 0.05 * PI), MajoranaLabel::Zero).unwrap();
        assert_eq!(r.target_label, MajoranaLabel::Zero);
        assert_eq!(r.total_steps, 1);
        assert!(r.total_mismatch < 1e-8);
    }

    #[test]
    fn sequence_step_accounting() {
        let seq = parse_gates("1011011011").unwrap();
        let r = run_gate_sequence(&seq, &sym(4, 0.05 * PI), MajoranaLabel::Zero).unwrap();
        assert_eq!(r.steps_per_c1, 64);
        assert_eq!(r.total_steps, 3 + 7 * 64);
        assert_eq!(r.target_label, MajoranaLabel::One);
        assert!((r.final_state.norm_sqr() - 1.0).abs() < 1e-9);
    }
}
