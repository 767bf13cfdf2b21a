//! Closed-form bound-state spectrum of the two-domain ring.
//!
//! Within each domain the eigenstates are superpositions of two plane waves
//! `e^{+-ikn}` sharing the quasi-energy `E`, with `cos E = cos(theta) cos(q)` and
//! `q = k - alpha`. Bound states have a real decay factor `mu = e^{ik}` with
//! `|mu| < 1`; they live in the gaps `|cos E| > cos(theta)` around `E = 0`
//! (`mu > 0`) and `E = pi` (`mu < 0`).
//!
//! Matching the piecewise ansatz
//!
//! ```text
//! psi(n) = u1 mu^n a + u2 mu^(N1-n) b,             n in [0, N1)
//! psi(n) = u3 mu^(n-N1) c + u4 mu^(N-n) d,         n in [N1, N)
//! ```
//!
//! at the two domain walls gives a 4x4 linear system `A u = 0`. A uniform field
//! `alpha` is removed by the gauge `psi_alpha(n) = e^{i alpha n} psi_0(n)`, which
//! turns the ring into a periodic chain with Bloch phase `phi = 2 m pi - N alpha`.
//! All boundary matrices here are written in that `alpha = 0` frame.

use std::f64::consts::PI;

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian2_dominant, svd4, C64};
use crate::roots::find_roots;
use crate::walker::{coin_matrix, RingConfig, WalkerState};

/// Acceptance threshold on `|det A|` at a root.
pub const DET_TOL: f64 = 1e-10;
/// "Large ring" regime: `mu^min(N1, N2)` must stay below this.
pub const LARGE_RING_LIMIT: f64 = 0.2;
/// "Weak field" regime: `|alpha|` must stay below this.
pub const WEAK_FIELD_LIMIT: f64 = 0.1 * PI;

/// Singular values below this fraction of the largest count as null directions.
const NULL_REL_TOL: f64 = 1e-8;
const SCAN_INTERVALS: usize = 2048;
/// Relative distance kept from the band edge, where `mu -> +-1`.
const EDGE_MARGIN: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    NearZero,
    NearPi,
}

/// Position of a solution relative to its branch centre: `E = 0 +- eps` or `E = pi +- eps`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergySign {
    Plus,
    Minus,
}

/// Domain wall at which a resolved degenerate bound state is localized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// `n = 0`, between sites `N - 1` and `0`.
    Origin,
    /// `n = N1`, between sites `N1 - 1` and `N1`.
    Interface,
}

/// Point on the dispersion surface `cos E = cos(theta) cos(q)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DispersionPoint {
    Propagating { energy: f64, q: f64 },
    Bound { energy: f64, mu: f64 },
}

impl DispersionPoint {
    /// Classifies an energy: inside the band it returns the reduced momentum
    /// `q in [0, pi]`, inside a gap the decay factor `mu`.
    pub fn at_energy(energy: f64, theta: f64) -> Self {
        match bound_mu(energy, theta) {
            Ok(mu) => DispersionPoint::Bound { energy, mu },
            Err(_) => {
                let q = (energy.cos() / theta.cos()).clamp(-1.0, 1.0).acos();
                DispersionPoint::Propagating { energy, q }
            }
        }
    }

    pub fn energy(&self) -> f64 {
        match *self {
            DispersionPoint::Propagating { energy, .. } | DispersionPoint::Bound { energy, .. } => {
                energy
            }
        }
    }
}

/// Coin-space eigenvector `(a, b)` of a plane wave (also used for `(c, d)`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlaneWaveVector {
    pub a: C64,
    pub b: C64,
}

impl PlaneWaveVector {
    pub fn norm_sqr(&self) -> f64 {
        self.a.norm_sqr() + self.b.norm_sqr()
    }
}

/// One analytic bound state of the ring.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundStateSolution {
    pub energy: f64,
    pub mu: f64,
    /// Unit-norm null vector `(u1, u2, u3, u4)` of the boundary matrix.
    #[serde(with = "crate::serde_util::complex4")]
    pub u: [C64; 4],
    pub bloch_phase: f64,
    pub branch: Branch,
    pub sign: EnergySign,
    /// Set when the solution belongs to an exactly degenerate pair and `u`
    /// was chosen to localize at one wall.
    pub boundary: Option<Boundary>,
}

/// Propagating-branch quasi-energy `arccos(cos(theta) cos(q))` in `[0, pi]`.
pub fn quasi_energy(q: f64, theta: f64) -> f64 {
    (theta.cos() * q.cos()).clamp(-1.0, 1.0).acos()
}

/// Decay factor `mu` with `|mu| < 1` solving `cos E = cos(theta) (mu + 1/mu) / 2`.
///
/// Positive near `E = 0`, negative near `E = pi`.
pub fn bound_mu(energy: f64, theta: f64) -> Result<f64> {
    let x = energy.cos() / theta.cos();
    if x.abs().partial_cmp(&1.0) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::Propagating { energy });
    }
    let root = (x * x - 1.0).sqrt();
    Ok(if x > 0.0 {
        1.0 / (x + root)
    } else {
        1.0 / (x - root)
    })
}

/// Leading-order decay factor of the zero-energy bound state, `cos t / (1 + sin t)`.
pub fn leading_mu(theta: f64) -> f64 {
    theta.cos() / (1.0 + theta.sin())
}

/// Normalized `[sin t, e^{-i(E+q)} - cos t] / sqrt(2 - 2 cos t cos(E+q))`.
pub fn plane_wave_eigenvector(energy: f64, q: f64, theta: f64) -> Result<PlaneWaveVector> {
    let denom = 2.0 - 2.0 * theta.cos() * (energy + q).cos();
    if denom < 1e-14 {
        return Err(Error::DegenerateDirection { energy, q });
    }
    let n = denom.sqrt();
    Ok(PlaneWaveVector {
        a: C64::new(theta.sin() / n, 0.0),
        b: (C64::from_polar(1.0, -(energy + q)) - theta.cos()) / n,
    })
}

/// Analytic continuation of the plane-wave eigenvector to a real `e^{ik} = mu`,
/// at zero field, normalized.
pub fn bound_eigenvector(energy: f64, mu: f64, theta: f64) -> PlaneWaveVector {
    let a = C64::new(theta.sin(), 0.0);
    let b = C64::from_polar(1.0 / mu, -energy) - theta.cos();
    let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
    PlaneWaveVector { a: a / n, b: b / n }
}

struct Ansatz {
    a: PlaneWaveVector,
    b: PlaneWaveVector,
    c: PlaneWaveVector,
    d: PlaneWaveVector,
}

impl Ansatz {
    fn new(energy: f64, mu: f64, theta: f64) -> Self {
        Self {
            a: bound_eigenvector(energy, mu, theta),
            b: bound_eigenvector(energy, 1.0 / mu, theta),
            c: bound_eigenvector(energy, mu, -theta),
            d: bound_eigenvector(energy, 1.0 / mu, -theta),
        }
    }
}

fn apply_coin(theta: f64, v: &PlaneWaveVector) -> PlaneWaveVector {
    let c = coin_matrix(theta, 0.0);
    PlaneWaveVector {
        a: c[(0, 0)] * v.a + c[(0, 1)] * v.b,
        b: c[(1, 0)] * v.a + c[(1, 1)] * v.b,
    }
}

/// The four domain-wall matching equations as a matrix acting on `(u1..u4)`.
///
/// Rows, with `z = e^{-iE}` and Bloch phase `phi` across the cell boundary:
/// 1. `(C(t) psi(N1-1))_R = z psi(N1)_R`
/// 2. `(C(-t) psi(N1))_L = z psi(N1-1)_L`
/// 3. `e^{-i phi} (C(-t) psi(N-1))_R = z psi(0)_R`
/// 4. `e^{i phi} (C(t) psi(0))_L = z psi(N-1)_L`
pub fn boundary_matrix(energy: f64, mu: f64, config: &RingConfig, phi: f64) -> Matrix4<C64> {
    let t = config.theta;
    let (n1, n2) = (config.n1 as i32, config.n2 as i32);
    let z = C64::from_polar(1.0, -energy);
    let fwd = C64::from_polar(1.0, phi);
    let back = fwd.conj();
    let p = |k: i32| C64::new(mu.powi(k), 0.0);

    let Ansatz { a, b, c, d } = Ansatz::new(energy, mu, t);
    let (ca, cb) = (apply_coin(t, &a), apply_coin(t, &b));
    let (cc, cd) = (apply_coin(-t, &c), apply_coin(-t, &d));

    Matrix4::new(
        // 1: R component entering site N1
        p(n1 - 1) * ca.b,
        p(1) * cb.b,
        -z * c.b,
        -z * p(n2) * d.b,
        // 2: L component entering site N1 - 1
        -z * p(n1 - 1) * a.a,
        -z * p(1) * b.a,
        cc.a,
        p(n2) * cd.a,
        // 3: R component entering site 0
        -z * a.b,
        -z * p(n1) * b.b,
        back * p(n2 - 1) * cc.b,
        back * p(1) * cd.b,
        // 4: L component entering site N - 1
        fwd * ca.a,
        fwd * p(n1) * cb.a,
        -z * p(n2 - 1) * c.a,
        -z * p(1) * d.a,
    )
}

/// Magnitude side of the general energy condition:
/// `sin E = +-(1/mu - mu) cos t sqrt(mu^2N1 + mu^2N2 - 2 mu^(N1+N2) cos phi)
///           / (2 sqrt((1 - mu^2N1)(1 - mu^2N2)))`.
pub fn energy_condition_general(mu: f64, theta: f64, n1: usize, n2: usize, phi: f64) -> f64 {
    let (n1, n2) = (n1 as i32, n2 as i32);
    let radicand =
        (mu.powi(2 * n1) + mu.powi(2 * n2) - 2.0 * mu.powi(n1 + n2) * phi.cos()).max(0.0);
    let denom = 2.0 * ((1.0 - mu.powi(2 * n1)) * (1.0 - mu.powi(2 * n2))).sqrt();
    (1.0 / mu - mu) * theta.cos() * radicand.sqrt() / denom
}

/// Symmetric-ring form: `(1/mu - mu) cos t sin(phi/2) mu^M / (1 - mu^2M)`.
pub fn energy_condition_symmetric(mu: f64, theta: f64, m: usize, phi: f64) -> f64 {
    let m = m as i32;
    (1.0 / mu - mu) * theta.cos() * (0.5 * phi).sin() * mu.powi(m) / (1.0 - mu.powi(2 * m))
}

/// Symmetric ring threaded by a uniform field (`phi = 2 m pi - 2 M alpha`):
/// `(1/mu - mu) cos t sin(M alpha) mu^M / (1 - mu^2M)`.
pub fn energy_condition_flux(mu: f64, theta: f64, m: usize, alpha: f64) -> f64 {
    let mi = m as i32;
    (1.0 / mu - mu) * theta.cos() * (m as f64 * alpha).sin() * mu.powi(mi) / (1.0 - mu.powi(2 * mi))
}

/// Bloch phase that makes the gauge-transformed state single valued:
/// `N alpha + phi = 2 m pi`.
pub fn ring_bloch_phase(config: &RingConfig, m: i64) -> f64 {
    2.0 * PI * m as f64 - config.sites() as f64 * config.alpha
}

/// Residual `sin E - |rhs(mu(E))|`, defined on both gaps.
fn energy_residual(energy: f64, config: &RingConfig, phi: f64) -> f64 {
    match bound_mu(energy, config.theta) {
        Ok(mu) => {
            // sin(pi - E) keeps E = pi an exact zero
            let lhs = if energy > 0.5 * PI {
                (PI - energy).sin()
            } else {
                energy.sin()
            };
            lhs - energy_condition_general(mu, config.theta, config.n1, config.n2, phi).abs()
        }
        Err(_) => f64::NAN,
    }
}

/// Ring state assembled from amplitudes `u`, including the gauge phase
/// `e^{i alpha n}`. Not normalized.
fn assemble(u: &[C64; 4], energy: f64, mu: f64, config: &RingConfig) -> Vec<[C64; 2]> {
    let Ansatz { a, b, c, d } = Ansatz::new(energy, mu, config.theta);
    let (n1, n) = (config.n1 as i32, config.sites() as i32);
    (0..n)
        .map(|site| {
            let (x, y) = if site < n1 {
                (u[0] * mu.powi(site), u[1] * mu.powi(n1 - site))
            } else {
                (u[2] * mu.powi(site - n1), u[3] * mu.powi(n - site))
            };
            let (v, w) = if site < n1 { (a, b) } else { (c, d) };
            let gauge = C64::from_polar(1.0, config.alpha * site as f64);
            [gauge * (x * v.a + y * w.a), gauge * (x * v.b + y * w.b)]
        })
        .collect()
}

fn unit4(v: nalgebra::Vector4<C64>) -> [C64; 4] {
    let n = v.norm();
    [v[0] / n, v[1] / n, v[2] / n, v[3] / n]
}

fn null_dimension(a: &Matrix4<C64>) -> usize {
    let svd = svd4(a);
    let top = svd[0].0;
    if top == 0.0 {
        return 4;
    }
    svd.iter().filter(|(s, _)| *s <= NULL_REL_TOL * top).count()
}

/// Splits an exactly degenerate pair of null vectors into the states
/// localized at `n = 0` (maximal weight on site 0) and at `n = N1`.
fn localized_pair(
    v1: [C64; 4],
    v2: [C64; 4],
    energy: f64,
    mu: f64,
    config: &RingConfig,
) -> ([C64; 4], [C64; 4]) {
    let w1 = assemble(&v1, energy, mu, config);
    let w2 = assemble(&v2, energy, mu, config);
    let dot = |x: &[[C64; 2]], y: &[[C64; 2]]| -> C64 {
        x.iter()
            .zip(y)
            .map(|(p, q)| p[0].conj() * q[0] + p[1].conj() * q[1])
            .sum()
    };
    let n1 = dot(&w1, &w1).re.sqrt();
    let u_e1: Vec<C64> = v1.iter().map(|z| z / n1).collect();
    let e1: Vec<[C64; 2]> = w1.iter().map(|p| [p[0] / n1, p[1] / n1]).collect();
    let proj = dot(&e1, &w2);
    let rest: Vec<[C64; 2]> = w2
        .iter()
        .zip(&e1)
        .map(|(p, q)| [p[0] - proj * q[0], p[1] - proj * q[1]])
        .collect();
    let n2 = dot(&rest, &rest).re.sqrt();
    let u_e2: Vec<C64> = v2
        .iter()
        .zip(&u_e1)
        .map(|(x, y)| (x - proj * y) / n2)
        .collect();
    let e2: Vec<[C64; 2]> = rest.iter().map(|p| [p[0] / n2, p[1] / n2]).collect();

    let p = e1[0][0].norm_sqr() + e1[0][1].norm_sqr();
    let r = e2[0][0].norm_sqr() + e2[0][1].norm_sqr();
    let w = e1[0][0].conj() * e2[0][0] + e1[0][1].conj() * e2[0][1];
    let (dom, perp) = hermitian2_dominant(p, w, r);
    let combine = |c: [C64; 2]| {
        let v = nalgebra::Vector4::from_fn(|i, _| c[0] * u_e1[i] + c[1] * u_e2[i]);
        unit4(v)
    };
    (combine(dom), combine(perp))
}

/// All bound states of the ring at Bloch phase `phi` (use
/// [`ring_bloch_phase`] for a ring threaded by `config.alpha`).
///
/// Roots of `sin E = |rhs(mu(E))|` are bracketed on a grid over each gap,
/// refined by bisection, and mirrored to `-E`. Exactly degenerate roots
/// (`E = 0` or `pi`) yield a pair localized at the two walls.
pub fn solve_bound_energies(config: &RingConfig, phi: f64) -> Result<Vec<BoundStateSolution>> {
    let theta = config.theta;
    let margin = EDGE_MARGIN * theta;
    let residual = |e: f64| energy_residual(e, config, phi);
    let mut out = Vec::new();

    for (branch, lo, hi) in [
        (Branch::NearZero, 0.0, theta - margin),
        (Branch::NearPi, PI - theta + margin, PI),
    ] {
        let centre = if branch == Branch::NearZero { 0.0 } else { PI };
        for root in find_roots(residual, lo, hi, SCAN_INTERVALS)? {
            let mu = bound_mu(root, theta)?;
            if root == centre {
                let a = boundary_matrix(root, mu, config, phi);
                check_det(&a, lo, hi)?;
                let svd = svd4(&a);
                let (v1, v2) = (unit4(svd[3].1), unit4(svd[2].1));
                let (origin, interface) = localized_pair(v1, v2, root, mu, config);
                for (u, boundary) in [(origin, Boundary::Origin), (interface, Boundary::Interface)]
                {
                    out.push(BoundStateSolution {
                        energy: root,
                        mu,
                        u,
                        bloch_phase: phi,
                        branch,
                        sign: EnergySign::Plus,
                        boundary: Some(boundary),
                    });
                }
                continue;
            }
            // near zero: E = +-eps; near pi: root = pi - eps, mirror = -(pi - eps) = pi + eps
            let (first, second) = match branch {
                Branch::NearZero => ((root, EnergySign::Plus), (-root, EnergySign::Minus)),
                Branch::NearPi => ((root, EnergySign::Minus), (-root, EnergySign::Plus)),
            };
            for (energy, sign) in [first, second] {
                let a = boundary_matrix(energy, mu, config, phi);
                check_det(&a, lo, hi)?;
                let u = unit4(svd4(&a)[3].1);
                out.push(BoundStateSolution {
                    energy,
                    mu,
                    u,
                    bloch_phase: phi,
                    branch,
                    sign,
                    boundary: None,
                });
            }
        }
    }
    Ok(out)
}

fn check_det(a: &Matrix4<C64>, lo: f64, hi: f64) -> Result<()> {
    let det = a.determinant().norm();
    if det > DET_TOL {
        return Err(Error::NoConvergence {
            lo,
            hi,
            residual: det,
        });
    }
    Ok(())
}

/// Bound states of the ring threaded by `config.alpha`, flux integer `m = 0`.
pub fn solve_ring_bound_energies(config: &RingConfig) -> Result<Vec<BoundStateSolution>> {
    solve_bound_energies(config, ring_bloch_phase(config, 0))
}

/// Normalized ring wavefunction of an analytic bound state, with the
/// largest-magnitude amplitude made real and positive.
pub fn bound_state_wavefunction(
    solution: &BoundStateSolution,
    config: &RingConfig,
) -> Result<WalkerState> {
    let sites = config.sites();
    let winding = sites as f64 * config.alpha + solution.bloch_phase;
    if (winding - 2.0 * PI * (winding / (2.0 * PI)).round()).abs() > 1e-9 {
        return Err(Error::FluxMismatch {
            phi: solution.bloch_phase,
            alpha: config.alpha,
            sites,
        });
    }
    let a = boundary_matrix(solution.energy, solution.mu, config, solution.bloch_phase);
    let dim = null_dimension(&a);
    if dim == 0 || (dim > 1 && solution.boundary.is_none()) {
        return Err(Error::NullSpace(dim));
    }
    let raw = assemble(&solution.u, solution.energy, solution.mu, config);
    WalkerState::normalized(raw).map(|s| s.with_canonical_phase())
}

/// Leading-order bound energies of a large asymmetric ring at zero field.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproxEnergies {
    pub mu: f64,
    pub eps0: f64,
    pub eps1: f64,
}

impl ApproxEnergies {
    /// `[eps0, -eps0, pi + eps1, pi - eps1]`.
    pub fn energies(&self) -> [f64; 4] {
        [self.eps0, -self.eps0, PI + self.eps1, PI - self.eps1]
    }
}

/// `eps0 = (mu^N2 - mu^N1) sin t`, `eps1 = ((-mu)^N2 - (-mu)^N1) sin t`,
/// `mu = cos t / (1 + sin t)`. Requires `mu^min(N1, N2) < 0.2`.
pub fn approx_bound_energies(config: &RingConfig) -> Result<ApproxEnergies> {
    let mu = leading_mu(config.theta);
    let tail = mu.powi(config.n1.min(config.n2) as i32);
    if tail >= LARGE_RING_LIMIT {
        return Err(Error::OutOfRegime(format!(
            "mu^min(N1,N2) = {tail:.4} is not below {LARGE_RING_LIMIT}"
        )));
    }
    Ok(approx_bound_energies_unchecked(config))
}

/// [`approx_bound_energies`] without the large-ring check.
pub fn approx_bound_energies_unchecked(config: &RingConfig) -> ApproxEnergies {
    let mu = leading_mu(config.theta);
    let s = config.theta.sin();
    let (n1, n2) = (config.n1 as i32, config.n2 as i32);
    ApproxEnergies {
        mu,
        eps0: (mu.powi(n2) - mu.powi(n1)) * s,
        eps1: ((-mu).powi(n2) - (-mu).powi(n1)) * s,
    }
}

fn check_weak_field(alpha: f64) -> Result<()> {
    if alpha.abs() > WEAK_FIELD_LIMIT * (1.0 + 1e-12) {
        return Err(Error::OutOfRegime(format!(
            "|alpha| = {:.4} pi exceeds the weak-field limit 0.1 pi",
            alpha.abs() / PI
        )));
    }
    Ok(())
}

/// Weak-field splitting `eps0 = 2 mu^M sin(N alpha / 2) sin t` of a symmetric
/// ring with `N = 2M`. Requires `|alpha| <= 0.1 pi`.
pub fn approx_bound_energies_flux(m: usize, theta: f64, alpha: f64) -> Result<f64> {
    check_weak_field(alpha)?;
    Ok(approx_bound_energies_flux_unchecked(m, theta, alpha))
}

/// [`approx_bound_energies_flux`] without the weak-field check.
pub fn approx_bound_energies_flux_unchecked(m: usize, theta: f64, alpha: f64) -> f64 {
    let sites = 2.0 * m as f64;
    2.0 * leading_mu(theta).powi(m as i32) * (0.5 * sites * alpha).sin() * theta.sin()
}

/// Two-level oscillation period `T = pi / (2 mu^M sin(N alpha / 2) sin t)`.
pub fn oscillation_period(m: usize, theta: f64, alpha: f64) -> Result<f64> {
    check_weak_field(alpha)?;
    oscillation_period_unchecked(m, theta, alpha)
}

/// [`oscillation_period`] without the weak-field check.
pub fn oscillation_period_unchecked(m: usize, theta: f64, alpha: f64) -> Result<f64> {
    if (m as f64 * alpha).sin().abs() < 1e-12 {
        return Err(Error::InfinitePeriod);
    }
    let eps = approx_bound_energies_flux_unchecked(m, theta, alpha);
    if eps.abs() < f64::MIN_POSITIVE {
        return Err(Error::InfinitePeriod);
    }
    Ok(PI / eps.abs())
}

/// Number of steps in half a period, rounded to the nearest integer.
pub fn half_period_steps(m: usize, theta: f64, alpha: f64) -> Result<usize> {
    Ok((0.5 * oscillation_period(m, theta, alpha)?).round() as usize)
}
