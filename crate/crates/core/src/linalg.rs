//! Small dense helpers shared by the analytic and numeric solvers.

use nalgebra::{Complex, Matrix3, Matrix4, Vector3, Vector4};

pub type C64 = Complex<f64>;

/// Relative tolerance used to detect ties when choosing the phase anchor.
const PHASE_TIE: f64 = 1e-9;

/// Multiplies `amps` by a global phase so that the largest-magnitude entry is
/// real and positive. Near-ties (relative 1e-9) resolve to the lowest index.
pub fn fix_global_phase(amps: &mut [C64]) {
    let max = amps.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
    if max == 0.0 {
        return;
    }
    let anchor = amps
        .iter()
        .position(|z| z.norm() >= max * (1.0 - PHASE_TIE))
        .expect("maximum exists");
    let rot = amps[anchor].conj() / amps[anchor].norm();
    for z in amps.iter_mut() {
        *z *= rot;
    }
}

/// Eigen-decomposition of a 2x2 Hermitian matrix `[[p, w], [w*, r]]`.
///
/// Returns the unit eigenvector of the larger eigenvalue followed by its
/// orthogonal complement.
pub fn hermitian2_dominant(p: f64, w: C64, r: f64) -> ([C64; 2], [C64; 2]) {
    let half_diff = 0.5 * (p - r);
    let lambda = 0.5 * (p + r) + (half_diff * half_diff + w.norm_sqr()).sqrt();
    let scale = p.abs().max(r.abs()).max(w.norm());
    let v = if w.norm() <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
        if p >= r {
            [C64::new(1.0, 0.0), C64::new(0.0, 0.0)]
        } else {
            [C64::new(0.0, 0.0), C64::new(1.0, 0.0)]
        }
    } else {
        let a = w;
        let b = C64::new(lambda - p, 0.0);
        let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
        [a / n, b / n]
    };
    let perp = [-v[1].conj(), v[0].conj()];
    (v, perp)
}

/// Singular values (descending) and the right-singular vectors that pair
/// with them, for a 4x4 complex matrix.
pub fn svd4(a: &Matrix4<C64>) -> Vec<(f64, Vector4<C64>)> {
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("requested V^H");
    let mut pairs: Vec<(f64, Vector4<C64>)> = (0..4)
        .map(|i| {
            let row = v_t.row(i);
            let v = Vector4::new(row[0].conj(), row[1].conj(), row[2].conj(), row[3].conj());
            (svd.singular_values[i], v)
        })
        .collect();
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
    pairs
}

/// Least-squares parabola through `(x, y)` samples; returns the abscissa of
/// its vertex, or `None` when the fit is degenerate or opens upward.
pub fn parabola_vertex(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 3 || xs.len() != ys.len() {
        return None;
    }
    let mut normal = Matrix3::<f64>::zeros();
    let mut rhs = Vector3::<f64>::zeros();
    for (&x, &y) in xs.iter().zip(ys) {
        let basis = Vector3::new(1.0, x, x * x);
        normal += basis * basis.transpose();
        rhs += basis * y;
    }
    let coef = normal.lu().solve(&rhs)?;
    if coef[2] >= 0.0 || !coef[2].is_finite() {
        return None;
    }
    Some(-coef[1] / (2.0 * coef[2]))
}

/// Wraps an angle to the principal quasi-energy branch (-pi, pi]; values
/// within 1e-12 of -pi map to +pi.
pub fn principal_angle(x: f64) -> f64 {
    use std::f64::consts::PI;
    let mut y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    }
    if y <= -PI + 1e-12 {
        y = PI;
    }
    y
}

/// Distance between two angles on the circle.
pub fn angular_distance(a: f64, b: f64) -> f64 {
    principal_angle(a - b).abs()
}
