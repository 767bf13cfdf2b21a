//! Dense diagonalization of the one-step unitary and projections onto its
//! eigenstates.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{angular_distance, hermitian2_dominant, principal_angle, C64};
use crate::walker::{build_step_unitary, overlap, ring_coin_field, RingConfig, WalkerState};

/// Maximum deviation of `U^H U` from the identity.
pub const UNITARY_TOL: f64 = 1e-10;
/// Half-width of the window searched for a doublet around `0` or `pi`.
pub const DOUBLET_WINDOW: f64 = 1e-6;
/// Largest gap at which a doublet counts as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-8;
/// Window around `E = 0` in which the split pair of a threaded ring is sought.
pub const PAIR_WINDOW: f64 = 0.5;

const SOLVER_MAX_ITER: usize = 100_000;
/// Eigenvalues of `(U + U^H)/2` closer than this are resolved together.
const CLUSTER_TOL: f64 = 1e-8;
const RESIDUAL_TOL: f64 = 1e-8;

/// Quasi-energies `E_j` (eigenvalues `e^{-i E_j}`) on `(-pi, pi]` with their
/// orthonormal eigenvectors, sorted by `|E|`.
#[derive(Clone, Debug)]
pub struct QuasiEnergySpectrum {
    quasi_energies: Vec<f64>,
    eigenvectors: Vec<WalkerState>,
}

impl QuasiEnergySpectrum {
    pub fn quasi_energies(&self) -> &[f64] {
        &self.quasi_energies
    }

    pub fn eigenvectors(&self) -> &[WalkerState] {
        &self.eigenvectors
    }

    pub fn len(&self) -> usize {
        self.quasi_energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quasi_energies.is_empty()
    }

    /// Number of lattice sites the eigenvectors live on.
    pub fn sites(&self) -> usize {
        self.len() / 2
    }

    /// Indices of the `count` quasi-energies closest to `target`, nearest first.
    pub fn nearest(&self, target: f64, count: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| {
            angular_distance(self.quasi_energies[a], target)
                .total_cmp(&angular_distance(self.quasi_energies[b], target))
                .then(a.cmp(&b))
        });
        idx.truncate(count);
        idx
    }

    /// The `count` quasi-energies closest to either gap centre `0` or `pi`,
    /// in ascending order.
    pub fn near_gap_centres(&self, count: usize) -> Vec<f64> {
        let dist = |e: f64| e.abs().min(PI - e.abs());
        let mut e = self.quasi_energies.clone();
        e.sort_by(|a, b| dist(*a).total_cmp(&dist(*b)));
        e.truncate(count);
        e.sort_by(f64::total_cmp);
        e
    }
}

/// Full eigendecomposition of a unitary `2N x 2N` step matrix.
pub fn diagonalize_step(u: &DMatrix<C64>) -> Result<QuasiEnergySpectrum> {
    let dim = u.nrows();
    if dim == 0 || dim != u.ncols() || !dim.is_multiple_of(2) {
        return Err(Error::InvalidConfig(format!(
            "step matrix has shape {}x{}",
            dim,
            u.ncols()
        )));
    }
    let deviation = (u.adjoint() * u - DMatrix::<C64>::identity(dim, dim))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if deviation > UNITARY_TOL {
        return Err(Error::NotUnitary(deviation));
    }

    let columns = commuting_eigenvectors(u)?;
    let mut energies = Vec::with_capacity(dim);
    for v in &columns {
        let uv = u * v;
        let lambda = v.dotc(&uv);
        let residual = (uv - v * lambda).norm();
        if residual > RESIDUAL_TOL {
            return Err(Error::Eigensolver(format!(
                "eigenvector residual {residual:e}"
            )));
        }
        energies.push(principal_angle(-lambda.arg()));
    }
    let mut columns = columns;

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| {
        let (ea, eb) = (energies[a], energies[b]);
        ea.abs()
            .total_cmp(&eb.abs())
            .then((PI - ea.abs()).total_cmp(&(PI - eb.abs())))
            .then(ea.total_cmp(&eb))
    });
    columns = order.iter().map(|&i| columns[i].clone()).collect();
    energies = order.iter().map(|&i| energies[i]).collect();
    reorthonormalize_clusters(&mut columns, &energies);

    let eigenvectors = columns
        .iter()
        .map(|v| WalkerState::from_flat(v.as_slice()).map(|s| s.with_canonical_phase()))
        .collect::<Result<Vec<_>>>()?;
    Ok(QuasiEnergySpectrum {
        quasi_energies: energies,
        eigenvectors,
    })
}

fn hermitian_eigen(h: DMatrix<C64>) -> Result<SymmetricEigen<C64, nalgebra::Dyn>> {
    SymmetricEigen::try_new(h, f64::EPSILON, SOLVER_MAX_ITER)
        .ok_or_else(|| Error::Eigensolver("Hermitian eigensolver did not converge".into()))
}

/// Eigenvectors of a unitary `u` from its commuting Hermitian parts:
/// `(u + u^H)/2` has eigenvalues `cos E`, and inside each cluster of equal
/// `cos E` the restriction of `(u - u^H)/2i` separates `E` from `-E`.
fn commuting_eigenvectors(u: &DMatrix<C64>) -> Result<Vec<DVector<C64>>> {
    let half = C64::new(0.5, 0.0);
    let real_part = hermitian_eigen((u + u.adjoint()) * half)?;
    let mut order: Vec<usize> = (0..u.nrows()).collect();
    order.sort_by(|&a, &b| real_part.eigenvalues[a].total_cmp(&real_part.eigenvalues[b]));

    let mut out = Vec::with_capacity(u.nrows());
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len()
            && real_part.eigenvalues[order[end]] - real_part.eigenvalues[order[end - 1]]
                <= CLUSTER_TOL
        {
            end += 1;
        }
        let basis = DMatrix::from_columns(
            &order[start..end]
                .iter()
                .map(|&i| real_part.eigenvectors.column(i))
                .collect::<Vec<_>>(),
        );
        if end - start == 1 {
            out.push(basis.column(0).into_owned());
        } else {
            let b = basis.adjoint() * u * &basis;
            let imag_part = hermitian_eigen((&b - b.adjoint()) * C64::new(0.0, -0.5))?;
            let rotated = &basis * imag_part.eigenvectors;
            out.extend(rotated.column_iter().map(|c| c.into_owned()));
        }
        start = end;
    }
    Ok(out)
}

/// Modified Gram-Schmidt inside each run of equal (within the degeneracy
/// tolerance) quasi-energies.
fn reorthonormalize_clusters(columns: &mut [DVector<C64>], energies: &[f64]) {
    let mut start = 0;
    while start < columns.len() {
        let mut end = start + 1;
        while end < columns.len()
            && angular_distance(energies[end], energies[start]) <= DEGENERACY_TOL
        {
            end += 1;
        }
        for j in start..end {
            for i in start..j {
                let proj = columns[i].dotc(&columns[j]);
                let qi = columns[i].clone();
                columns[j] -= qi * proj;
            }
            let n = columns[j].norm();
            columns[j] /= C64::new(n, 0.0);
        }
        start = end;
    }
}

/// Diagonalizes the step operator of a ring.
pub fn diagonalize_ring(config: &RingConfig) -> Result<QuasiEnergySpectrum> {
    diagonalize_step(&build_step_unitary(&ring_coin_field(config)))
}

/// Gap centre of a Majorana doublet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MajoranaTarget {
    Zero,
    Pi,
}

impl MajoranaTarget {
    pub fn energy(self) -> f64 {
        match self {
            MajoranaTarget::Zero => 0.0,
            MajoranaTarget::Pi => PI,
        }
    }
}

/// Splits the degenerate doublet at `target` into the state with maximal
/// weight on site 0 (localized at `n = 0`) and its orthogonal complement in
/// the doublet (localized at `n = N1`).
pub fn extract_majorana_pair(
    spectrum: &QuasiEnergySpectrum,
    target: MajoranaTarget,
    config: &RingConfig,
) -> Result<(WalkerState, WalkerState)> {
    if spectrum.sites() != config.sites() {
        return Err(Error::LengthMismatch {
            expected: config.sites(),
            found: spectrum.sites(),
        });
    }
    let t = target.energy();
    let idx = spectrum.nearest(t, 2);
    let e = spectrum.quasi_energies();
    let distance = angular_distance(e[idx[1]], t);
    if distance > DOUBLET_WINDOW {
        return Err(Error::NoDoublet {
            target: t,
            distance,
        });
    }
    let gap = angular_distance(e[idx[0]], e[idx[1]]);
    if gap > DEGENERACY_TOL {
        return Err(Error::NotDegenerate { target: t, gap });
    }

    let (v1, v2) = (
        &spectrum.eigenvectors()[idx[0]],
        &spectrum.eigenvectors()[idx[1]],
    );
    let (a, b) = (v1.amplitudes()[0], v2.amplitudes()[0]);
    let p = a[0].norm_sqr() + a[1].norm_sqr();
    let r = b[0].norm_sqr() + b[1].norm_sqr();
    let w = a[0].conj() * b[0] + a[1].conj() * b[1];
    let (dom, perp) = hermitian2_dominant(p, w, r);
    let combine = |c: [C64; 2]| -> Result<WalkerState> {
        let amps = v1
            .amplitudes()
            .iter()
            .zip(v2.amplitudes())
            .map(|(x, y)| [c[0] * x[0] + c[1] * y[0], c[0] * x[1] + c[1] * y[1]])
            .collect();
        WalkerState::normalized(amps).map(|s| s.with_canonical_phase())
    };
    Ok((combine(dom)?, combine(perp)?))
}

/// Projection of a state onto the split pair `psi_+-` around `E = 0`.
#[derive(Clone, Debug, Serialize)]
pub struct TwoLevelModel {
    #[serde(with = "crate::serde_util::complex")]
    pub c_plus: C64,
    #[serde(with = "crate::serde_util::complex")]
    pub c_minus: C64,
    #[serde(rename = "residual_R2")]
    pub residual_r2: f64,
    /// `E_+ - E_-`.
    pub gap: f64,
    pub energy_plus: f64,
    pub energy_minus: f64,
    #[serde(skip)]
    pub plus: WalkerState,
    #[serde(skip)]
    pub minus: WalkerState,
}

/// `c_+- = <psi_+-|psi>` and `|R|^2 = 1 - |c_+|^2 - |c_-|^2` for the two
/// eigenstates of `spectrum_alpha` nearest `E = 0`.
pub fn two_level_decompose(
    psi: &WalkerState,
    spectrum_alpha: &QuasiEnergySpectrum,
) -> Result<TwoLevelModel> {
    let idx = spectrum_alpha.nearest(0.0, 2);
    let e = spectrum_alpha.quasi_energies();
    if idx.len() < 2 || e[idx[1]].abs() > PAIR_WINDOW {
        let distance = idx.get(1).map_or(f64::INFINITY, |&i| e[i].abs());
        return Err(Error::NoDoublet {
            target: 0.0,
            distance,
        });
    }
    let (hi, lo) = if e[idx[0]] >= e[idx[1]] {
        (idx[0], idx[1])
    } else {
        (idx[1], idx[0])
    };
    let plus = spectrum_alpha.eigenvectors()[hi].clone();
    let minus = spectrum_alpha.eigenvectors()[lo].clone();
    let c_plus = overlap(&plus, psi)?;
    let c_minus = overlap(&minus, psi)?;
    Ok(TwoLevelModel {
        c_plus,
        c_minus,
        residual_r2: 1.0 - c_plus.norm_sqr() - c_minus.norm_sqr(),
        gap: e[hi] - e[lo],
        energy_plus: e[hi],
        energy_minus: e[lo],
        plus,
        minus,
    })
}

/// `||psi - (psi_+' + psi_-')/sqrt 2||^2`, where `psi_+-'` carry the phases
/// that make `c_+-` real and positive.
pub fn residual_r_prime(psi: &WalkerState, model: &TwoLevelModel) -> f64 {
    let unit = |z: C64| {
        if z.norm() > 0.0 {
            z / z.norm()
        } else {
            C64::new(1.0, 0.0)
        }
    };
    let (pp, pm) = (unit(model.c_plus), unit(model.c_minus));
    let s = std::f64::consts::FRAC_1_SQRT_2;
    psi.amplitudes()
        .iter()
        .zip(model.plus.amplitudes().iter().zip(model.minus.amplitudes()))
        .map(|(x, (p, m))| {
            (0..2)
                .map(|k| (x[k] - (p[k] * pp + m[k] * pm) * s).norm_sqr())
                .sum::<f64>()
        })
        .sum()
}

/// True when the quasi-energy lies in a gap of the bulk band, `|cos E| > cos t`.
pub fn in_gap(energy: f64, theta: f64) -> bool {
    energy.cos().abs() > theta.cos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walker::CoinField;
    use std::f64::consts::FRAC_PI_4;

    fn ring(n1: usize, n2: usize, alpha: f64) -> RingConfig {
        RingConfig::new(n1, n2, FRAC_PI_4, alpha).unwrap()
    }

    #[test]
    fn two_site_permutation() {
        let field = CoinField::uniform(2, 0.0, 0.0).unwrap();
        let s = diagonalize_step(&build_step_unitary(&field)).unwrap();
        let mut e: Vec<f64> = s.quasi_energies().to_vec();
        e.sort_by(f64::total_cmp);
        assert!(e[0].abs() < 1e-12 && e[1].abs() < 1e-12);
        assert!((e[2] - PI).abs() < 1e-12 && (e[3] - PI).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_unitary() {
        let mut u = DMatrix::<C64>::identity(4, 4);
        u[(0, 1)] = C64::new(0.1, 0.0);
        assert!(matches!(diagonalize_step(&u), Err(Error::NotUnitary(_))));
    }

    #[test]
    fn symmetric_ring_doublets() {
        let s = diagonalize_ring(&ring(7, 7, 0.0)).unwrap();
        let e = s.quasi_energies();
        assert_eq!(e.iter().filter(|x| x.abs() < 1e-10).count(), 2);
        assert_eq!(e.iter().filter(|x| (*x - PI).abs() < 1e-10).count(), 2);
        assert!(e.windows(2).all(|w| w[0].abs() <= w[1].abs()));
    }

    #[test]
    fn eigenvectors_are_orthonormal() {
        let s = diagonalize_ring(&ring(5, 5, 0.0)).unwrap();
        let v = s.eigenvectors();
        for i in 0..v.len() {
            for j in 0..v.len() {
                let o = overlap(&v[i], &v[j]).unwrap();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((o - C64::new(expect, 0.0)).norm() < 1e-10, "{i} {j}");
            }
        }
    }

    #[test]
    fn majorana_pair_localizes() {
        let c = ring(7, 7, 0.0);
        let s = diagonalize_ring(&c).unwrap();
        let (a, b) = extract_majorana_pair(&s, MajoranaTarget::Zero, &c).unwrap();
        let pa = a.site_probabilities();
        let pb = b.site_probabilities();
        // the walls sit between sites, so sites 13 / 0 and 6 / 7 tie exactly
        let max_a = pa.iter().cloned().fold(0.0, f64::max);
        let max_b = pb.iter().cloned().fold(0.0, f64::max);
        assert!(pa[0] >= max_a * (1.0 - 1e-12));
        assert!(pb[7] >= max_b * (1.0 - 1e-12));
        assert!(pa[7] < 1e-4 && pb[0] < 1e-4);
        assert!(overlap(&a, &b).unwrap().norm() < 1e-10);
    }

    #[test]
    fn majorana_pair_errors() {
        let c = ring(4, 4, 0.05 * PI);
        let s = diagonalize_ring(&c).unwrap();
        assert!(matches!(
            extract_majorana_pair(&s, MajoranaTarget::Zero, &c),
            Err(Error::NoDoublet { .. })
        ));
        let wrong = ring(5, 4, 0.0);
        assert!(matches!(
            extract_majorana_pair(&s, MajoranaTarget::Zero, &wrong),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn split_pair_under_flux() {
        let s = diagonalize_ring(&ring(4, 4, 0.05 * PI)).unwrap();
        let e = s.quasi_energies();
        assert!((e[0].abs() - 0.0245).abs() < 1e-4);
        assert!((e[0] + e[1]).abs() < 1e-10);
    }

    #[test]
    fn self_decomposition() {
        let s = diagonalize_ring(&ring(4, 4, 0.05 * PI)).unwrap();
        let probe = two_level_decompose(&s.eigenvectors()[0], &s).unwrap();
        let plus = probe.plus.clone();
        let m = two_level_decompose(&plus, &s).unwrap();
        assert!((m.c_plus.norm() - 1.0).abs() < 1e-12);
        assert!(m.c_minus.norm() < 1e-12);
        assert!(m.residual_r2.abs() < 1e-12);
        assert!(m.gap > 0.0);
    }

    #[test]
    fn r_prime_vanishes_on_even_superposition() {
        let s = diagonalize_ring(&ring(4, 4, 0.05 * PI)).unwrap();
        let m = two_level_decompose(&s.eigenvectors()[0], &s).unwrap();
        let amps = m
            .plus
            .amplitudes()
            .iter()
            .zip(m.minus.amplitudes())
            .map(|(p, q)| [p[0] + q[0], p[1] + q[1]])
            .collect();
        let psi = WalkerState::normalized(amps).unwrap();
        let model = two_level_decompose(&psi, &s).unwrap();
        assert!(residual_r_prime(&psi, &model) < 1e-12);
    }

    #[test]
    fn gap_classification() {
        assert!(in_gap(0.0, FRAC_PI_4));
        assert!(in_gap(PI, FRAC_PI_4));
        assert!(!in_gap(PI / 2.0, FRAC_PI_4));
    }
}
