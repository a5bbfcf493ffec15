//! Fourier-multiplier operators on spectral fields.
//!
//! Derivatives use the derivative wavenumber, which is zero at the Nyquist
//! index so that `ik` maps real fields to real fields. Every operator here is
//! built from the same wavevector table, so `curl∘gradient`, `divergence∘curl`
//! and `divergence∘leray_project` vanish up to rounding.

use num_complex::Complex64;

use super::field::{forward_many, RealVectorField, ScalarField, SpectralField};
use super::grid::{GridCtx, GridSpec};
use crate::error::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Calls `f(idx, k)` for every mode in storage order.
#[inline]
pub(crate) fn for_each_mode(ctx: &GridCtx, mut f: impl FnMut(usize, [f64; 3])) {
    let n = ctx.spec.n();
    let mut idx = 0;
    for i2 in 0..n {
        for i1 in 0..n {
            for i0 in 0..n {
                f(idx, ctx.kvec(i0, i1, i2));
                idx += 1;
            }
        }
    }
}

pub fn curl(f: &SpectralField) -> SpectralField {
    let grid = f.grid();
    let ctx = grid.ctx();
    let mut out = SpectralField::zeros(grid);
    {
        let (a, b, c) = (f.component(0), f.component(1), f.component(2));
        let o = out.components_mut();
        for_each_mode(&ctx, |idx, k| {
            let (fx, fy, fz) = (a[idx], b[idx], c[idx]);
            o[0][idx] = I * (fz * k[1] - fy * k[2]);
            o[1][idx] = I * (fx * k[2] - fz * k[0]);
            o[2][idx] = I * (fy * k[0] - fx * k[1]);
        });
    }
    out.set_solenoidal(true);
    out
}

pub fn divergence(f: &SpectralField) -> ScalarField {
    let grid = f.grid();
    let ctx = grid.ctx();
    let mut out = ScalarField::zeros(grid);
    let (a, b, c) = (f.component(0), f.component(1), f.component(2));
    let o = out.coefficients_mut();
    for_each_mode(&ctx, |idx, k| {
        o[idx] = I * (a[idx] * k[0] + b[idx] * k[1] + c[idx] * k[2]);
    });
    out
}

pub fn gradient(p: &ScalarField) -> SpectralField {
    let grid = p.grid();
    let ctx = grid.ctx();
    let mut out = SpectralField::zeros(grid);
    let src = p.coefficients();
    {
        let o = out.components_mut();
        for_each_mode(&ctx, |idx, k| {
            let v = I * src[idx];
            o[0][idx] = v * k[0];
            o[1][idx] = v * k[1];
            o[2][idx] = v * k[2];
        });
    }
    out.set_solenoidal(false);
    out
}

/// Spectral Laplacian `-|k|² p̂`, with the same wavenumbers as the derivative operators.
pub fn laplacian(p: &ScalarField) -> ScalarField {
    let grid = p.grid();
    let ctx = grid.ctx();
    let mut out = p.clone();
    let o = out.coefficients_mut();
    for_each_mode(&ctx, |idx, k| {
        o[idx] *= -(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]);
    });
    out
}

/// Projection onto divergence-free fields, `(I - k kᵀ/|k|²)` per mode. The mean mode passes through.
pub fn leray_project(f: &SpectralField) -> SpectralField {
    let mut out = f.clone();
    leray_project_mut(&mut out);
    out
}

pub(crate) fn leray_project_mut(f: &mut SpectralField) {
    let ctx = f.grid().ctx();
    {
        let o = f.components_mut();
        for_each_mode(&ctx, |idx, k| {
            let kk = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            if kk == 0.0 {
                return;
            }
            let kf = (o[0][idx] * k[0] + o[1][idx] * k[1] + o[2][idx] * k[2]) / kk;
            o[0][idx] -= kf * k[0];
            o[1][idx] -= kf * k[1];
            o[2][idx] -= kf * k[2];
        });
    }
    f.set_solenoidal(true);
}

/// Zeroes every mode with some `|k_i| > n/3`.
pub fn dealias(f: &mut SpectralField) {
    let ctx = f.grid().ctx();
    for c in f.components_mut().iter_mut() {
        dealias_slice(&ctx, c);
    }
}

pub(crate) fn dealias_slice(ctx: &GridCtx, c: &mut [Complex64]) {
    for (z, &keep) in c.iter_mut().zip(&ctx.keep) {
        if !keep {
            *z = Complex64::default();
        }
    }
}

/// Real-space product tensor `T_{ji} = f_j g_i`, transformed and dealiased.
/// Returns the spectral tensor divergence `Σ_j ∂_j T_{ji} = ∇·(f⊗g)`.
pub(crate) fn tensor_divergence(ctx: &GridCtx, f: &RealVectorField, g: &RealVectorField) -> SpectralField {
    let mut prods: Vec<Vec<f64>> = Vec::with_capacity(9);
    for j in 0..3 {
        for i in 0..3 {
            prods.push(f.component(j).iter().zip(g.component(i)).map(|(a, b)| a * b).collect());
        }
    }
    let refs: Vec<&[f64]> = prods.iter().map(|v| v.as_slice()).collect();
    let hat = forward_many(ctx, &refs);
    divergence_of_tensor(ctx, |j, i| &hat[3 * j + i])
}

/// `∇·(f⊗f)` using the six distinct products.
pub(crate) fn symmetric_tensor_divergence(ctx: &GridCtx, f: &RealVectorField) -> SpectralField {
    const PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];
    let prods: Vec<Vec<f64>> = PAIRS
        .iter()
        .map(|&(j, i)| f.component(j).iter().zip(f.component(i)).map(|(a, b)| a * b).collect())
        .collect();
    let refs: Vec<&[f64]> = prods.iter().map(|v| v.as_slice()).collect();
    let hat = forward_many(ctx, &refs);
    let slot = |j: usize, i: usize| -> usize {
        let (a, b) = if j <= i { (j, i) } else { (i, j) };
        PAIRS.iter().position(|&p| p == (a, b)).unwrap()
    };
    divergence_of_tensor(ctx, |j, i| &hat[slot(j, i)])
}

/// `∇·(f⊗g - g⊗f)` using the three distinct antisymmetric products.
pub(crate) fn antisymmetric_tensor_divergence(
    ctx: &GridCtx,
    f: &RealVectorField,
    g: &RealVectorField,
) -> SpectralField {
    // A_{ji} = f_j g_i - g_j f_i, stored for (0,1), (0,2), (1,2)
    const PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];
    let prods: Vec<Vec<f64>> = PAIRS
        .iter()
        .map(|&(j, i)| {
            let (fj, fi, gj, gi) = (f.component(j), f.component(i), g.component(j), g.component(i));
            (0..fj.len()).map(|p| fj[p] * gi[p] - gj[p] * fi[p]).collect()
        })
        .collect();
    let refs: Vec<&[f64]> = prods.iter().map(|v| v.as_slice()).collect();
    let hat = forward_many(ctx, &refs);
    let grid = ctx.spec;
    let mut out = SpectralField::zeros(grid);
    {
        let o = out.components_mut();
        let (a01, a02, a12) = (&hat[0], &hat[1], &hat[2]);
        for_each_mode(ctx, |idx, k| {
            if !ctx.keep[idx] {
                return;
            }
            // out_i = Σ_j i k_j A_{ji}, with A_{ij} = -A_{ji}
            o[0][idx] = I * (-(a01[idx] * k[1]) - a02[idx] * k[2]);
            o[1][idx] = I * (a01[idx] * k[0] - a12[idx] * k[2]);
            o[2][idx] = I * (a02[idx] * k[0] + a12[idx] * k[1]);
        });
    }
    out.set_solenoidal(false);
    out
}

fn divergence_of_tensor<'a>(ctx: &GridCtx, t: impl Fn(usize, usize) -> &'a Vec<Complex64>) -> SpectralField {
    let mut out = SpectralField::zeros(ctx.spec);
    {
        let o = out.components_mut();
        let cols: Vec<[&Vec<Complex64>; 3]> = (0..3).map(|i| [t(0, i), t(1, i), t(2, i)]).collect();
        for_each_mode(ctx, |idx, k| {
            if !ctx.keep[idx] {
                return;
            }
            for (i, col) in cols.iter().enumerate() {
                o[i][idx] = I * (col[0][idx] * k[0] + col[1][idx] * k[1] + col[2][idx] * k[2]);
            }
        });
    }
    out.set_solenoidal(false);
    out
}

/// Real-space cross product `f × g`, transformed and dealiased.
pub(crate) fn cross_product(ctx: &GridCtx, f: &RealVectorField, g: &RealVectorField) -> SpectralField {
    let c = |a: usize, b: usize| -> Vec<f64> {
        let (fa, fb, ga, gb) = (f.component(a), f.component(b), g.component(a), g.component(b));
        (0..fa.len()).map(|p| fa[p] * gb[p] - fb[p] * ga[p]).collect()
    };
    let prods = [c(1, 2), c(2, 0), c(0, 1)];
    let refs: Vec<&[f64]> = prods.iter().map(|v| v.as_slice()).collect();
    let mut hat = forward_many(ctx, &refs).into_iter();
    let comps = [hat.next().unwrap(), hat.next().unwrap(), hat.next().unwrap()];
    let mut out = SpectralField::from_coefficients(ctx.spec, comps, false).expect("grid sizes agree");
    dealias(&mut out);
    out
}

/// Momentum nonlinearity `(u·∇)u - (b·∇)b`, written as `∇·(u⊗u) - ∇·(b⊗b)` and dealiased.
pub fn momentum_nonlinearity(u: &SpectralField, b: &SpectralField) -> Result<SpectralField> {
    u.ensure_same_grid(b)?;
    let ctx = u.grid().ctx();
    let ur = u.inverse_transform();
    let br = b.inverse_transform();
    let mut n = symmetric_tensor_divergence(&ctx, &ur);
    n.axpy(-1.0, &symmetric_tensor_divergence(&ctx, &br));
    Ok(n)
}

/// Pressure solving `-Δp = ∇·N` for the momentum nonlinearity `N`, so that
/// `N + ∇p` is divergence-free. The mean of `p` is zero.
pub fn recover_pressure(u: &SpectralField, b: &SpectralField) -> Result<ScalarField> {
    let n = momentum_nonlinearity(u, b)?;
    let grid = n.grid();
    let ctx = grid.ctx();
    let mut p = ScalarField::zeros(grid);
    let (a, bb, c) = (n.component(0), n.component(1), n.component(2));
    let o = p.coefficients_mut();
    for_each_mode(&ctx, |idx, k| {
        let kk = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if kk > 0.0 {
            o[idx] = I * (a[idx] * k[0] + bb[idx] * k[1] + c[idx] * k[2]) / kk;
        }
    });
    Ok(p)
}

/// `f(λx)` for an integer `λ >= 1`: mode `k` moves to `λk`.
pub fn dilate(f: &SpectralField, lambda: usize) -> Result<SpectralField> {
    if lambda == 0 {
        return Err(Error::InvalidArgument("dilation factor must be at least 1".into()));
    }
    let grid = f.grid();
    // transform round-off is not allowed to masquerade as high modes
    let band = f.band_extent(1e-13 * f.max_abs_coefficient());
    let lam = lambda as i64;
    if lam * band >= grid.n() as i64 / 2 {
        return Err(Error::BandLimit(format!("band {band} dilated by {lambda} reaches the Nyquist index")));
    }
    let mut out = SpectralField::zeros(grid);
    for k2 in -band..=band {
        for k1 in -band..=band {
            for k0 in -band..=band {
                let v = f.mode([k0, k1, k2]);
                let dst = grid.mode_index([lam * k0, lam * k1, lam * k2]);
                for (c, z) in v.iter().enumerate() {
                    out.component_mut(c)[dst] = *z;
                }
            }
        }
    }
    Ok(out.with_solenoidal_flag(f.is_flagged_solenoidal()))
}

/// Convenience: a zero grid field of the given size.
pub fn zeros(grid: GridSpec) -> SpectralField {
    SpectralField::zeros(grid)
}
