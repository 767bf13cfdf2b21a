//! Walker states on a two-domain ring and the one-step walk operator.
//!
//! The ring has `N = n1 + n2` sites. Sites `[0, n1)` carry coin angle `+theta`
//! and sites `[n1, N)` carry `-theta`, so the coin angle flips sign at the two
//! topological boundaries `n = 0` and `n = n1`. Each site holds a two-component
//! amplitude ordered `(L, R)`; flattened vectors are site-major with index `2n`
//! for `L` and `2n + 1` for `R`.
//!
//! One step applies the coin sitewise and then shifts: the `L` component moves
//! one site down (`new L(n) = (C psi)_L(n + 1)`) and the `R` component one site
//! up (`new R(n) = (C psi)_R(n - 1)`), indices taken mod `N`.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector, Matrix2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{fix_global_phase, C64};

/// Two-by-two coin operator acting on the `(L, R)` space of a single site.
pub type Coin = Matrix2<C64>;

/// Tolerance on the state norm after construction and after each step.
pub const NORM_TOL: f64 = 1e-12;

/// Ring geometry and walk parameters. Angles are in radians.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RingConfig {
    pub n1: usize,
    pub n2: usize,
    pub theta: f64,
    pub alpha: f64,
}

impl RingConfig {
    pub fn new(n1: usize, n2: usize, theta: f64, alpha: f64) -> Result<Self> {
        if n1 == 0 {
            return Err(Error::InvalidConfig("n1 must be at least 1".into()));
        }
        if n2 == 0 {
            return Err(Error::InvalidConfig("n2 must be at least 1".into()));
        }
        if !(theta > 0.0 && theta < FRAC_PI_2) {
            return Err(Error::InvalidConfig(format!(
                "theta = {theta} must lie strictly inside (0, pi/2)"
            )));
        }
        if !alpha.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "alpha = {alpha} is not finite"
            )));
        }
        Ok(Self {
            n1,
            n2,
            theta,
            alpha,
        })
    }

    /// Symmetric ring with `n1 = n2 = m`.
    pub fn symmetric(m: usize, theta: f64, alpha: f64) -> Result<Self> {
        Self::new(m, m, theta, alpha)
    }

    /// Total number of sites `N`.
    pub fn sites(&self) -> usize {
        self.n1 + self.n2
    }

    pub fn is_symmetric(&self) -> bool {
        self.n1 == self.n2
    }

    /// Half-ring length `M` of a symmetric ring.
    pub fn half(&self) -> Option<usize> {
        self.is_symmetric().then_some(self.n1)
    }

    pub fn with_alpha(self, alpha: f64) -> Self {
        Self { alpha, ..self }
    }
}

/// Evaluates the coin
/// `[[cos t e^{-ia}, sin t e^{-ia}], [-sin t e^{ia}, cos t e^{ia}]]`.
pub fn coin_matrix(theta: f64, alpha: f64) -> Coin {
    let (s, c) = theta.sin_cos();
    let down = C64::from_polar(1.0, -alpha);
    let up = C64::from_polar(1.0, alpha);
    Coin::new(down * c, down * s, -up * s, up * c)
}

/// Per-site coin angles plus the shared field, with the coins precomputed.
#[derive(Clone, Debug, PartialEq)]
pub struct CoinField {
    angles: Vec<f64>,
    alpha: f64,
    coins: Vec<Coin>,
}

impl CoinField {
    pub fn from_angles(angles: Vec<f64>, alpha: f64) -> Result<Self> {
        if angles.is_empty() {
            return Err(Error::InvalidConfig(
                "coin field needs at least one site".into(),
            ));
        }
        let coins = angles.iter().map(|&t| coin_matrix(t, alpha)).collect();
        Ok(Self {
            angles,
            alpha,
            coins,
        })
    }

    /// Translation-invariant field with the same angle on every site.
    pub fn uniform(sites: usize, theta: f64, alpha: f64) -> Result<Self> {
        Self::from_angles(vec![theta; sites], alpha)
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn coin(&self, site: usize) -> &Coin {
        &self.coins[site]
    }

    /// Number of sign flips of the coin angle going once around the cycle.
    pub fn sign_changes(&self) -> usize {
        let n = self.angles.len();
        (0..n)
            .filter(|&i| (self.angles[i] > 0.0) != (self.angles[(i + 1) % n] > 0.0))
            .count()
    }
}

/// Coin field of the two-domain ring: `+theta` on `[0, n1)`, `-theta` on `[n1, N)`.
pub fn ring_coin_field(config: &RingConfig) -> CoinField {
    let angles = (0..config.sites())
        .map(|n| {
            if n < config.n1 {
                config.theta
            } else {
                -config.theta
            }
        })
        .collect();
    CoinField::from_angles(angles, config.alpha).expect("ring has at least two sites")
}

/// Normalized walker wavefunction, one `[L, R]` pair per site.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkerState {
    amps: Vec<[C64; 2]>,
}

impl WalkerState {
    /// Builds a state from raw amplitudes, rescaling to unit norm.
    pub fn normalized(mut amps: Vec<[C64; 2]>) -> Result<Self> {
        let norm = norm_sqr(&amps).sqrt();
        if norm.is_nan() || norm <= 0.0 || !norm.is_finite() {
            return Err(Error::ZeroNorm);
        }
        for a in amps.iter_mut() {
            a[0] /= norm;
            a[1] /= norm;
        }
        Ok(Self { amps })
    }

    /// State with all weight in one coin component of one site.
    pub fn localized(sites: usize, site: usize, component: usize) -> Self {
        assert!(site < sites && component < 2);
        let mut amps = vec![[C64::new(0.0, 0.0); 2]; sites];
        amps[site][component] = C64::new(1.0, 0.0);
        Self { amps }
    }

    pub fn from_flat(v: &[C64]) -> Result<Self> {
        if v.is_empty() || !v.len().is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "flattened state length {} is not a positive even number",
                v.len()
            )));
        }
        Self::normalized(v.chunks_exact(2).map(|c| [c[0], c[1]]).collect())
    }

    pub fn to_flat(&self) -> DVector<C64> {
        DVector::from_iterator(
            2 * self.amps.len(),
            self.amps.iter().flat_map(|a| [a[0], a[1]]),
        )
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn amplitudes(&self) -> &[[C64; 2]] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.amps)
    }

    /// `|psi_L(n)|^2 + |psi_R(n)|^2` for every site.
    pub fn site_probabilities(&self) -> Vec<f64> {
        self.amps
            .iter()
            .map(|a| a[0].norm_sqr() + a[1].norm_sqr())
            .collect()
    }

    /// Same state with the largest-magnitude amplitude made real and positive.
    pub fn with_canonical_phase(&self) -> Self {
        let mut flat: Vec<C64> = self.amps.iter().flat_map(|a| [a[0], a[1]]).collect();
        fix_global_phase(&mut flat);
        Self {
            amps: flat.chunks_exact(2).map(|c| [c[0], c[1]]).collect(),
        }
    }

    /// Multiplies every amplitude by `z` (expected to have unit modulus).
    pub fn scaled(&self, z: C64) -> Self {
        Self {
            amps: self.amps.iter().map(|a| [a[0] * z, a[1] * z]).collect(),
        }
    }

    pub(crate) fn from_raw_unchecked(amps: Vec<[C64; 2]>) -> Self {
        Self { amps }
    }
}

/// Serialized as a list of `[[re_L, im_L], [re_R, im_R]]` pairs.
impl Serialize for WalkerState {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[[f64; 2]; 2]> = self
            .amps
            .iter()
            .map(|a| [[a[0].re, a[0].im], [a[1].re, a[1].im]])
            .collect();
        pairs.serialize(s)
    }
}

fn norm_sqr(amps: &[[C64; 2]]) -> f64 {
    amps.iter().map(|a| a[0].norm_sqr() + a[1].norm_sqr()).sum()
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::LengthMismatch { expected, found });
    }
    Ok(())
}

/// Writes one walk step of `src` into `dst`.
pub(crate) fn step_into(src: &[[C64; 2]], field: &CoinField, dst: &mut [[C64; 2]]) {
    let n = src.len();
    for (site, amp) in src.iter().enumerate() {
        let c = field.coin(site);
        let left = c[(0, 0)] * amp[0] + c[(0, 1)] * amp[1];
        let right = c[(1, 0)] * amp[0] + c[(1, 1)] * amp[1];
        dst[(site + n - 1) % n][0] = left;
        dst[(site + 1) % n][1] = right;
    }
}

/// Applies the coin sitewise, then shifts `L` down and `R` up by one site.
pub fn apply_step(state: &WalkerState, field: &CoinField) -> Result<WalkerState> {
    check_len(field.len(), state.len())?;
    let mut out = vec![[C64::new(0.0, 0.0); 2]; state.len()];
    step_into(&state.amps, field, &mut out);
    Ok(WalkerState { amps: out })
}

/// Dense `2N x 2N` matrix of the step operator in the site-major flattening.
pub fn build_step_unitary(field: &CoinField) -> DMatrix<C64> {
    let n = field.len();
    let mut u = DMatrix::<C64>::zeros(2 * n, 2 * n);
    for site in 0..n {
        let c = field.coin(site);
        let down = (site + n - 1) % n;
        let up = (site + 1) % n;
        for k in 0..2 {
            u[(2 * down, 2 * site + k)] += c[(0, k)];
            u[(2 * up + 1, 2 * site + k)] += c[(1, k)];
        }
    }
    u
}

/// Inner product `<a|b>`, conjugating `a`.
pub fn overlap(a: &WalkerState, b: &WalkerState) -> Result<C64> {
    check_len(a.len(), b.len())?;
    Ok(a.amps
        .iter()
        .zip(&b.amps)
        .map(|(x, y)| x[0].conj() * y[0] + x[1].conj() * y[1])
        .sum())
}
