//! Continuous Lyapunov, algebraic Riccati and discrete Stein solvers for 2×2
//! real matrices.
//!
//! Every solve works on the three independent entries `(xx, xp, pp)` of the
//! symmetric unknown. Inputs in SI units routinely span sixty orders of
//! magnitude (`1/m ≈ 10¹⁸` next to `d2 ≈ 10⁻⁴²`), so the Riccati and Stein
//! solvers first move to balanced coordinates `X = S X' S` with a diagonal
//! power-of-two `S` and undo the scaling on the way out.

use crate::error::{Error, Result};
use crate::linalg::mat2::{Mat2, SymMat2};
use crate::tolerances::{
    CARE_NEWTON_MAX_ITER, CARE_NEWTON_REFINE_STEPS, SINGULARITY_REL,
};

/// `A X + X Aᵀ + D` for symmetric `X`, entrywise.
pub fn lyapunov_residual(a: &Mat2, x: &SymMat2, d: &SymMat2) -> SymMat2 {
    let ax = *a * x.to_mat2();
    SymMat2::new(
        2.0 * ax.m11 + d.xx,
        ax.m12 + ax.m21 + d.xp,
        2.0 * ax.m22 + d.pp,
    )
}

/// `A X + X Aᵀ + D − X G X`, the right-hand side of the Riccati flow.
pub fn riccati_rhs(a: &Mat2, x: &SymMat2, d: &SymMat2, g: &SymMat2) -> SymMat2 {
    lyapunov_residual(a, x, d) - g.congruence(&x.to_mat2())
}

/// Residual of `A X + X Aᵀ + D − X G X = 0` measured entrywise against the
/// magnitude of the terms that are being cancelled. Unit-consistent, so it
/// can be compared across natural and SI problems.
pub fn relative_riccati_residual(a: &Mat2, x: &SymMat2, d: &SymMat2, g: &SymMat2) -> f64 {
    let ax = *a * x.to_mat2();
    let xgx = g.congruence(&x.to_mat2());
    let r = riccati_rhs(a, x, d, g);
    let scale = |r: f64, t: [f64; 4]| {
        let s: f64 = t.iter().map(|v| v.abs()).sum();
        if s == 0.0 {
            r.abs()
        } else {
            r.abs() / s
        }
    };
    scale(r.xx, [2.0 * ax.m11, d.xx, xgx.xx, 0.0])
        .max(scale(r.xp, [ax.m12, ax.m21, d.xp, xgx.xp]))
        .max(scale(r.pp, [2.0 * ax.m22, d.pp, xgx.pp, 0.0]))
}

/// `B Bᵀ` as a symmetric matrix.
pub fn gram_of(b: &Mat2) -> SymMat2 {
    SymMat2::new(
        b.m11 * b.m11 + b.m12 * b.m12,
        b.m11 * b.m21 + b.m12 * b.m22,
        b.m21 * b.m21 + b.m22 * b.m22,
    )
}

/// Exact solution of the 3×3 system on `(xx, xp, pp)` behind
/// `A X + X Aᵀ + D = 0`, written out by Cramer's rule:
///
/// `X = −(det A · D + adj A · D · adj Aᵀ) / (2 · tr A · det A)`.
///
/// Valid whenever the Lyapunov operator is invertible (`tr A ≠ 0`,
/// `det A ≠ 0`), stable or not. All terms are positive for positive
/// semidefinite `D` and damped oscillator drifts, so no cancellation occurs
/// even when the damping is twelve orders below the trap frequency.
fn lyapunov_closed_form(a: &Mat2, d: &SymMat2) -> Result<SymMat2> {
    let tr = a.trace();
    let det = a.det();
    let denom = 2.0 * tr * det;
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::SingularMatrix {
            det: denom,
            scale: a.det_scale(),
        });
    }
    let num = d.scale(det) + d.congruence(&a.adjugate());
    let x = num.scale(-1.0 / denom);
    if !x.is_finite() {
        return Err(Error::NonFinite("lyapunov"));
    }
    Ok(x)
}

/// Solve `A X + X Aᵀ + D = 0` for Hurwitz `A`.
pub fn solve_lyapunov(a: &Mat2, d: &SymMat2) -> Result<SymMat2> {
    let max_re = a.max_real_part();
    if max_re >= 0.0 {
        return Err(Error::NotHurwitz {
            max_real_part: max_re,
        });
    }
    lyapunov_closed_form(a, d)
}

/// Solve `𝒜ᵀ X2 + X2 𝒜 − B Bᵀ = 0` for Hurwitz `𝒜`.
pub fn solve_x2(script_a: &Mat2, b: &Mat2) -> Result<SymMat2> {
    solve_x2_gram(script_a, &gram_of(b))
}

/// [`solve_x2`] with `G = B Bᵀ` supplied directly.
pub fn solve_x2_gram(script_a: &Mat2, g: &SymMat2) -> Result<SymMat2> {
    solve_lyapunov(&script_a.transpose(), &-*g)
}

fn pow2_near(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        1.0
    } else {
        2f64.powi(v.log2().round() as i32)
    }
}

/// Diagonal similarity `S = diag(1, s)` equalizing the off-diagonal entries of `m`.
fn balancing_factor(m: &Mat2) -> f64 {
    if m.m12 != 0.0 && m.m21 != 0.0 {
        pow2_near((m.m21 / m.m12).abs().sqrt())
    } else {
        1.0
    }
}

/// `S⁻¹ M S` for `S = diag(1, s)`.
fn similar(m: &Mat2, s: f64) -> Mat2 {
    Mat2::new(m.m11, m.m12 * s, m.m21 / s, m.m22)
}

/// `X = S X' S` for `S = diag(1, s)`.
fn congruent_up(x: &SymMat2, s: f64) -> SymMat2 {
    SymMat2::new(x.xx, x.xp * s, x.pp * s * s)
}

/// `S⁻¹ D S⁻¹`.
fn congruent_down(d: &SymMat2, s: f64) -> SymMat2 {
    SymMat2::new(d.xx, d.xp / s, d.pp / (s * s))
}

type Mat4 = [[f64; 4]; 4];

fn mat4_mul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut c = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            c[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

fn mat4_det(m: &Mat4) -> f64 {
    let mut a = *m;
    let mut det = 1.0;
    for col in 0..4 {
        let piv = (col..4)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            a.swap(piv, col);
            det = -det;
        }
        det *= a[col][col];
        for row in col + 1..4 {
            let f = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= f * a[col][k];
            }
        }
    }
    det
}

/// Which root of the algebraic Riccati equation to return.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CareRoot {
    /// `A − X G` Hurwitz: the attractor of the Riccati flow.
    Stabilizing,
    /// `A − X G` with spectrum in the right half plane.
    AntiStabilizing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CareMethod {
    InvariantSubspace,
    Newton,
    Lyapunov,
}

/// Solution of `A X + X Aᵀ + D − X G X = 0` with diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CareSolution {
    pub x: SymMat2,
    /// `𝒜 = A − X B Bᵀ`.
    pub closed_loop: Mat2,
    pub residual: f64,
    pub method: CareMethod,
}

/// Balanced, dimensionless form of a Riccati problem.
struct ScaledCare {
    a: Mat2,
    d: SymMat2,
    g: SymMat2,
    /// Position/momentum balancing factor.
    s: f64,
    /// Magnitude of the unknown: `X' = kappa · Z`.
    kappa: f64,
}

impl ScaledCare {
    fn new(a: &Mat2, d: &SymMat2, g: &SymMat2) -> Self {
        let s = balancing_factor(a);
        let a1 = similar(a, s);
        let d1 = congruent_down(d, s);
        let g1 = congruent_up(g, s);
        let rate = {
            let r = a1.rate_scale();
            if r > 0.0 {
                pow2_near(r)
            } else {
                1.0
            }
        };
        let (dn, gn) = (d1.max_abs(), g1.max_abs());
        let kappa = if dn > 0.0 && gn > 0.0 {
            pow2_near((dn / gn).sqrt())
        } else if gn > 0.0 {
            pow2_near(rate / gn)
        } else if dn > 0.0 {
            pow2_near(dn / rate)
        } else {
            1.0
        };
        ScaledCare {
            a: a1.scale(1.0 / rate),
            d: d1.scale(1.0 / (kappa * rate)),
            g: g1.scale(kappa / rate),
            s,
            kappa,
        }
    }

    fn unscale(&self, z: &SymMat2) -> SymMat2 {
        congruent_up(&z.scale(self.kappa), self.s)
    }
}

fn root_ok(closed_loop: &Mat2, root: CareRoot) -> bool {
    match root {
        CareRoot::Stabilizing => closed_loop.is_hurwitz(),
        CareRoot::AntiStabilizing => (-*closed_loop).is_hurwitz(),
    }
}

/// Invariant-subspace solve on the 4×4 matrix `ℋ = ((−Aᵀ, G), (D, A))`.
///
/// The graph `(I; X)` of a solution is invariant with `ℋ (I; X) = (I; X)(−𝒜ᵀ)`,
/// so the stabilizing root sits on the eigenvalues of `ℋ` with positive real
/// part. `ℋ` is Hamiltonian, its characteristic polynomial is
/// `s⁴ + c2 s² + c0` with `c2 = −tr A² − tr GD`, `c0 = det ℋ`; for the pair
/// `μ1, μ2` with `Re μ > 0` one has `μ1 + μ2 = sqrt(2 sqrt(c0) − c2)` and
/// `μ1 μ2 = sqrt(c0)`. The real matrix `(ℋ + μ1)(ℋ + μ2)` annihilates the
/// complementary subspace and its range is the one wanted.
fn subspace_solve(p: &ScaledCare, root: CareRoot) -> Option<SymMat2> {
    let (a, d, g) = (&p.a, &p.d, &p.g);
    let h: Mat4 = [
        [-a.m11, -a.m21, g.xx, g.xp],
        [-a.m12, -a.m22, g.xp, g.pp],
        [d.xx, d.xp, a.m11, a.m12],
        [d.xp, d.pp, a.m21, a.m22],
    ];
    let a2 = *a * *a;
    let c2 = -(a2.trace() + g.xx * d.xx + 2.0 * g.xp * d.xp + g.pp * d.pp);
    let c0 = mat4_det(&h);
    if !(c0 > 0.0) {
        return None;
    }
    let p1 = c0.sqrt();
    let s1_sq = 2.0 * p1 - c2;
    if !(s1_sq > 0.0) {
        return None;
    }
    let s1 = match root {
        CareRoot::Stabilizing => s1_sq.sqrt(),
        CareRoot::AntiStabilizing => -s1_sq.sqrt(),
    };
    let h2 = mat4_mul(&h, &h);
    let mut proj = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            proj[i][j] = h2[i][j] + s1 * h[i][j] + if i == j { p1 } else { 0.0 };
        }
    }
    let col = |j: usize| [proj[0][j], proj[1][j], proj[2][j], proj[3][j]];
    let norm = |c: &[f64; 4]| c.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut best: Option<(f64, [f64; 4], [f64; 4])> = None;
    for i in 0..4 {
        for j in i + 1..4 {
            let (ci, cj) = (col(i), col(j));
            let (ni, nj) = (norm(&ci), norm(&cj));
            if ni == 0.0 || nj == 0.0 {
                continue;
            }
            let u_det = (ci[0] * cj[1] - cj[0] * ci[1]).abs() / (ni * nj);
            if best.as_ref().is_none_or(|b| u_det > b.0) {
                best = Some((u_det, ci, cj));
            }
        }
    }
    let (quality, ci, cj) = best?;
    if quality < 1e-10 {
        return None;
    }
    let u = Mat2::new(ci[0], cj[0], ci[1], cj[1]);
    let v = Mat2::new(ci[2], cj[2], ci[3], cj[3]);
    let x = v * u.inverse().ok()?;
    let z = SymMat2::symmetric_part(&x);
    z.is_finite().then_some(z)
}

/// One Newton–Kleinman sweep:
/// `(A − Z G) Z⁺ + Z⁺ (A − Z G)ᵀ + D + Z G Z = 0`.
fn newton_step(p: &ScaledCare, z: &SymMat2) -> Option<SymMat2> {
    let closed = p.a - z.to_mat2() * p.g.to_mat2();
    let rhs = p.d + p.g.congruence(&z.to_mat2());
    lyapunov_closed_form(&closed, &rhs).ok()
}

fn scaled_residual(p: &ScaledCare, z: &SymMat2) -> f64 {
    relative_riccati_residual(&p.a, z, &p.d, &p.g)
}

fn newton_refine(p: &ScaledCare, mut z: SymMat2, root: CareRoot, steps: usize) -> SymMat2 {
    let mut res = scaled_residual(p, &z);
    for _ in 0..steps {
        let Some(next) = newton_step(p, &z) else { break };
        let closed = p.a - next.to_mat2() * p.g.to_mat2();
        if !root_ok(&closed, root) {
            break;
        }
        let next_res = scaled_residual(p, &next);
        if !(next_res <= res) {
            // keep the structurally symmetric iterate if it is no worse
            if next_res <= 2.0 * res {
                z = next;
            }
            break;
        }
        z = next;
        res = next_res;
        if res == 0.0 {
            break;
        }
    }
    z
}

fn newton_from_zero(p: &ScaledCare) -> Option<SymMat2> {
    if !p.a.is_hurwitz() {
        return None;
    }
    let mut z = SymMat2::ZERO;
    for _ in 0..CARE_NEWTON_MAX_ITER {
        let next = newton_step(p, &z)?;
        let change = next.rel_diff(&z);
        z = next;
        if change < 1e-15 {
            break;
        }
    }
    Some(z)
}

/// Solve `A X + X Aᵀ + D − X G X = 0` for the requested root.
pub fn solve_care_gram(a: &Mat2, d: &SymMat2, g: &SymMat2, root: CareRoot) -> Result<CareSolution> {
    if !(a.is_finite() && d.is_finite() && g.is_finite()) {
        return Err(Error::NonFinite("care input"));
    }
    if g.is_zero() {
        return match root {
            CareRoot::Stabilizing => {
                let x = solve_lyapunov(a, d).map_err(|_| {
                    Error::NoStabilizingSolution("B = 0 and A is not Hurwitz".into())
                })?;
                Ok(CareSolution {
                    x,
                    closed_loop: *a,
                    residual: relative_riccati_residual(a, &x, d, g),
                    method: CareMethod::Lyapunov,
                })
            }
            CareRoot::AntiStabilizing => Err(Error::NoStabilizingSolution(
                "B = 0: no anti-stabilizing root".into(),
            )),
        };
    }
    let p = ScaledCare::new(a, d, g);
    let (z, method) = match subspace_solve(&p, root) {
        Some(z) => (
            newton_refine(&p, z, root, CARE_NEWTON_REFINE_STEPS),
            CareMethod::InvariantSubspace,
        ),
        None => match root {
            CareRoot::Stabilizing => {
                let z = newton_from_zero(&p).ok_or_else(|| {
                    Error::NoStabilizingSolution(
                        "stable subspace has no invertible basis block and A is not Hurwitz".into(),
                    )
                })?;
                (z, CareMethod::Newton)
            }
            CareRoot::AntiStabilizing => {
                return Err(Error::NoStabilizingSolution(
                    "Hamiltonian has eigenvalues on the imaginary axis".into(),
                ))
            }
        },
    };
    let closed_scaled = p.a - z.to_mat2() * p.g.to_mat2();
    if !root_ok(&closed_scaled, root) {
        return Err(Error::NoStabilizingSolution(format!(
            "closed loop {closed_scaled} does not have the requested spectrum"
        )));
    }
    let residual = scaled_residual(&p, &z);
    let x = p.unscale(&z);
    if !x.is_finite() {
        return Err(Error::NonFinite("care"));
    }
    Ok(CareSolution {
        x,
        closed_loop: *a - x.to_mat2() * g.to_mat2(),
        residual,
        method,
    })
}

/// Stabilizing solution of `A X1 + X1 Aᵀ + D − X1 B Bᵀ X1 = 0`.
pub fn solve_care(a: &Mat2, d: &SymMat2, b: &Mat2) -> Result<SymMat2> {
    solve_care_gram(a, d, &gram_of(b), CareRoot::Stabilizing).map(|s| s.x)
}

/// 3×3 Gaussian elimination with partial pivoting and one refinement sweep.
fn solve3(m: &[[f64; 3]; 3], r: &[f64; 3]) -> Option<[f64; 3]> {
    fn eliminate(m: &[[f64; 3]; 3], r: &[f64; 3]) -> Option<[f64; 3]> {
        let mut a = *m;
        let mut b = *r;
        let scale = a
            .iter()
            .flat_map(|row| row.iter())
            .fold(0.0f64, |s, v| s.max(v.abs()));
        for col in 0..3 {
            let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
            if a[piv][col].abs() <= SINGULARITY_REL * scale {
                return None;
            }
            a.swap(piv, col);
            b.swap(piv, col);
            for row in col + 1..3 {
                let f = a[row][col] / a[col][col];
                for k in col..3 {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
        let mut x = [0.0; 3];
        for i in (0..3).rev() {
            let s: f64 = (i + 1..3).map(|k| a[i][k] * x[k]).sum();
            x[i] = (b[i] - s) / a[i][i];
        }
        Some(x)
    }
    let x = eliminate(m, r)?;
    let res: Vec<f64> = (0..3)
        .map(|i| r[i] - (0..3).map(|k| m[i][k] * x[k]).sum::<f64>())
        .collect();
    let dx = eliminate(m, &[res[0], res[1], res[2]])?;
    let out = [x[0] + dx[0], x[1] + dx[1], x[2] + dx[2]];
    out.iter().all(|v| v.is_finite()).then_some(out)
}

/// Solve the Stein equation `α − F α Fᵀ = R` without any stability
/// requirement. Fails only when `1 − λi λj = 0` for some pair of
/// eigenvalues of `F`.
pub fn solve_stein(f: &Mat2, rhs: &SymMat2) -> Result<SymMat2> {
    let s = balancing_factor(f);
    let fs = similar(f, s);
    let rs = congruent_down(rhs, s);
    let (a, b, c, d) = (fs.m11, fs.m12, fs.m21, fs.m22);
    let m = [
        [1.0 - a * a, -2.0 * a * b, -b * b],
        [-a * c, 1.0 - (a * d + b * c), -b * d],
        [-c * c, -2.0 * c * d, 1.0 - d * d],
    ];
    let v = solve3(&m, &[rs.xx, rs.xp, rs.pp]).ok_or(Error::SingularMatrix {
        det: 0.0,
        scale: 1.0,
    })?;
    Ok(congruent_up(&SymMat2::new(v[0], v[1], v[2]), s))
}

/// Solve `α − F α Fᵀ = R` for `F` with spectral radius below one.
pub fn solve_discrete_sylvester(f: &Mat2, rhs: &SymMat2) -> Result<SymMat2> {
    let rho = f.spectral_radius();
    if rho >= 1.0 {
        return Err(Error::SpectralRadiusGEOne(rho));
    }
    solve_stein(f, rhs)
}

/// `α − F α Fᵀ − R`, entrywise.
pub fn stein_residual(f: &Mat2, alpha: &SymMat2, rhs: &SymMat2) -> SymMat2 {
    *alpha - alpha.congruence(f) - *rhs
}

/// Relative Stein residual against the magnitude of `α` and `R`.
pub fn relative_stein_residual(f: &Mat2, alpha: &SymMat2, rhs: &SymMat2) -> f64 {
    let r = stein_residual(f, alpha, rhs);
    let t = alpha.congruence(f);
    let rel = |r: f64, a: f64, b: f64, c: f64| {
        let s = a.abs() + b.abs() + c.abs();
        if s == 0.0 {
            r.abs()
        } else {
            r.abs() / s
        }
    };
    rel(r.xx, alpha.xx, t.xx, rhs.xx)
        .max(rel(r.xp, alpha.xp, t.xp, rhs.xp))
        .max(rel(r.pp, alpha.pp, t.pp, rhs.pp))
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::tolerances::{CARE_RESIDUAL, LYAPUNOV_RESIDUAL, STEIN_RESIDUAL};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn oscillator(a1: f64, a2: f64, m: f64, w: f64) -> Mat2 {
        Mat2::new(-a1, 1.0 / m, -m * w * w, -a2)
    }

    /// Independent route: generic 3×3 elimination of the Lyapunov system.
    fn lyapunov_by_elimination(a: &Mat2, d: &SymMat2) -> SymMat2 {
        let (p, q, r, s) = (a.m11, a.m12, a.m21, a.m22);
        let m = [
            [2.0 * p, 2.0 * q, 0.0],
            [r, p + s, q],
            [0.0, 2.0 * r, 2.0 * s],
        ];
        let v = solve3(&m, &[-d.xx, -d.xp, -d.pp]).unwrap();
        SymMat2::new(v[0], v[1], v[2])
    }

    fn rel_lyap_residual(a: &Mat2, x: &SymMat2, d: &SymMat2) -> f64 {
        lyapunov_residual(a, x, d).max_abs() / d.max_abs()
    }

    #[test]
    fn lyapunov_identity_case() {
        let x = solve_lyapunov(&Mat2::diag(-1.0, -1.0), &SymMat2::diag(2.0, 2.0)).unwrap();
        assert_relative_eq!(x.xx, 1.0);
        assert_relative_eq!(x.pp, 1.0);
        assert_eq!(x.xp, 0.0);
    }

    #[test]
    fn lyapunov_damped_oscillator() {
        let a = oscillator(1.0, 1.0, 1.0, 1.5 * PI);
        let d = SymMat2::diag(0.5, 0.5);
        let x = solve_lyapunov(&a, &d).unwrap();
        assert!(rel_lyap_residual(&a, &x, &d) <= LYAPUNOV_RESIDUAL);
        let oracle = lyapunov_by_elimination(&a, &d);
        assert!(x.rel_diff(&oracle) < 1e-13);
        // above the infinite-frequency floor d1 / 2(a1 + a2) = 0.125
        assert!(x.xx > 0.125 && x.xx < 0.14, "{x}");
        assert_relative_eq!(x.xx, 0.135_772_792_797, max_relative = 1e-10);
    }

    #[test]
    fn lyapunov_rejects_undamped() {
        let a = Mat2::new(0.0, 1.0, -1.0, 0.0);
        let r = solve_lyapunov(&a, &SymMat2::diag(1.0, 1.0));
        assert!(matches!(r, Err(Error::NotHurwitz { .. })));
    }

    #[test]
    fn lyapunov_si_scale_matches_expanded_formula() {
        let (m, w) = (1e-18, 2.0 * PI * 1e5);
        let (a1, a2) = (5e-7, 1.5e-6);
        let (d1, d2) = (1.7e-21, 3.6e-45);
        let x = solve_lyapunov(&oscillator(a1, a2, m, w), &SymMat2::diag(d1, d2)).unwrap();
        let expected = (d2 / (m * m) + w * w * d1 + a2 * (a1 + a2) * d1)
            / (2.0 * (a1 + a2) * (a1 * a2 + w * w));
        assert_relative_eq!(x.xx, expected, max_relative = 1e-13);
        let expected_xp = m * (a1 * x.xx - d1 / 2.0);
        assert!((x.xp - expected_xp).abs() <= 1e-12 * (x.xx * x.pp).sqrt());
    }

    #[test]
    fn care_with_zero_backaction_is_lyapunov() {
        let x = solve_care(&Mat2::diag(-1.0, -1.0), &SymMat2::IDENTITY, &Mat2::ZERO).unwrap();
        assert_relative_eq!(x.xx, 0.5);
        assert_relative_eq!(x.pp, 0.5);
    }

    #[test]
    fn care_scalar_slice() {
        // diag(3,3) = B Bᵀ with B = √3·I; per axis −2x + 1 − 3x² = 0 → x = 1/3
        let b = Mat2::diag(3f64.sqrt(), 3f64.sqrt());
        let x = solve_care(&Mat2::diag(-1.0, -1.0), &SymMat2::IDENTITY, &b).unwrap();
        assert_relative_eq!(x.xx, 1.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(x.pp, 1.0 / 3.0, max_relative = 1e-14);
        assert!(x.xp.abs() < 1e-15);
    }

    #[test]
    fn care_fig3_settings_shrinks_position_variance() {
        let a = oscillator(1.0, 1.0, 1.0, 1.5 * PI);
        let d = SymMat2::diag(0.5, 0.5);
        let lyap = solve_lyapunov(&a, &d).unwrap();
        let mut prev = lyap.xx;
        for b in [0.5, 1.0, 3.0, 5.0] {
            let bm = Mat2::new(0.0, b, 0.0, 0.0);
            let sol = solve_care_gram(&a, &d, &gram_of(&bm), CareRoot::Stabilizing).unwrap();
            assert!(sol.residual <= CARE_RESIDUAL, "b={b} residual {}", sol.residual);
            assert!(sol.closed_loop.is_hurwitz());
            assert!(sol.x.xx < prev, "b={b}");
            prev = sol.x.xx;
        }
    }

    #[test]
    fn care_anti_stabilizing_root_solves_same_equation() {
        let a = oscillator(1.0, 1.0, 1.0, 1.5 * PI);
        let d = SymMat2::diag(0.5, 0.5);
        let g = gram_of(&Mat2::new(0.0, 3.0, 0.0, 0.0));
        let anti = solve_care_gram(&a, &d, &g, CareRoot::AntiStabilizing).unwrap();
        assert!((-anti.closed_loop).is_hurwitz());
        assert!(anti.residual < 1e-9);
        let stab = solve_care_gram(&a, &d, &g, CareRoot::Stabilizing).unwrap();
        assert!(stab.x.rel_diff(&anti.x) > 1e-3);
    }

    #[test]
    fn care_without_measurement_on_undamped_drift_fails() {
        let a = Mat2::new(0.0, 1.0, -1.0, 0.0);
        let r = solve_care(&a, &SymMat2::IDENTITY, &Mat2::ZERO);
        assert!(matches!(r, Err(Error::NoStabilizingSolution(_))));
    }

    #[test]
    fn care_undamped_but_measured_is_stabilized() {
        let a = Mat2::new(0.0, 1.0, -1.0, 0.0);
        let b = Mat2::new(0.0, 1.0, 0.0, 0.0);
        let sol = solve_care_gram(&a, &SymMat2::IDENTITY, &gram_of(&b), CareRoot::Stabilizing)
            .unwrap();
        assert!(sol.closed_loop.is_hurwitz());
        assert!(sol.residual < 1e-12);
    }

    #[test]
    fn care_si_scale() {
        let (m, w) = (1e-18, 2.0 * PI * 1e5);
        let a = oscillator(5e-7, 1.5e-6, m, w);
        let d = SymMat2::diag(1.7e-21, 2.2e-42);
        let b = Mat2::new(0.0, (8.0 * 0.3 * 1e26f64).sqrt(), 0.0, 0.0);
        let g = gram_of(&b);
        let sol = solve_care_gram(&a, &d, &g, CareRoot::Stabilizing).unwrap();
        assert!(sol.closed_loop.is_hurwitz());
        assert!(sol.residual < 1e-9, "{}", sol.residual);
        assert!(sol.x.is_physical(1.054_571_817e-34, 1e-9));
    }

    #[test]
    fn x2_examples() {
        let x2 = solve_x2(&Mat2::diag(-1.0, -1.0), &Mat2::diag(2f64.sqrt(), 2f64.sqrt())).unwrap();
        assert_relative_eq!(x2.xx, -1.0, max_relative = 1e-15);
        // the residual convention 𝒜ᵀX2 + X2𝒜 − BBᵀ = 0 with 𝒜 = −I gives X2 = −G/2
        assert_relative_eq!(x2.pp, -1.0, max_relative = 1e-15);
        let zero = solve_x2(&Mat2::diag(-1.0, -2.0), &Mat2::ZERO).unwrap();
        assert_eq!(zero, SymMat2::ZERO);
        let r = solve_x2(&Mat2::diag(1.0, -1.0), &Mat2::IDENTITY);
        assert!(matches!(r, Err(Error::NotHurwitz { .. })));
    }

    #[test]
    fn stein_examples() {
        let a = solve_discrete_sylvester(&Mat2::ZERO, &SymMat2::new(1.0, 2.0, 3.0)).unwrap();
        assert_eq!(a, SymMat2::new(1.0, 2.0, 3.0));
        let a = solve_discrete_sylvester(&Mat2::diag(0.5, 0.5), &SymMat2::diag(3.0, 3.0)).unwrap();
        assert_relative_eq!(a.xx, 4.0, max_relative = 1e-15);
        assert_relative_eq!(a.pp, 4.0, max_relative = 1e-15);
        let r = solve_discrete_sylvester(&Mat2::diag(2.0, 0.1), &SymMat2::IDENTITY);
        assert!(matches!(r, Err(Error::SpectralRadiusGEOne(_))));
        // saddle maps still have a fixed point
        let f = Mat2::diag(2.0, 0.25);
        let a = solve_stein(&f, &SymMat2::diag(1.0, 1.0)).unwrap();
        assert_relative_eq!(a.xx, -1.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(a.pp, 1.0 / (1.0 - 1.0 / 16.0), max_relative = 1e-14);
    }

    #[test]
    fn stein_matches_fixed_point_iteration() {
        let f = oscillator(0.3, 0.3, 1.0, 2.0).exp(0.7) * oscillator(0.3, 0.3, 1.0, 1.0).exp(1.1);
        assert!(f.spectral_radius() < 1.0);
        let rhs = SymMat2::new(0.4, -0.1, 0.9);
        let alpha = solve_discrete_sylvester(&f, &rhs).unwrap();
        assert!(relative_stein_residual(&f, &alpha, &rhs) <= STEIN_RESIDUAL);
        let mut it = SymMat2::ZERO;
        for _ in 0..10_000 {
            it = it.congruence(&f) + rhs;
        }
        assert!(alpha.rel_diff(&it) < 1e-12);
    }
}
