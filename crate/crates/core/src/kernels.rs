//! Dense inner loops shared by the single-step and batched paths.
//!
//! Every routine has one fixed floating-point evaluation order. The AVX2 and
//! scalar implementations perform the same multiplications and additions in
//! the same order (no fused multiply-add), so they agree bitwise and the
//! dispatch choice never changes a result.
//!
//! Dot products keep eight partial sums: lane `l` accumulates elements
//! `l, l + 8, l + 16, ...`, the lanes are folded as
//! `((l0 + l1) + (l2 + l3)) + ((l4 + l5) + (l6 + l7))` and the leftover
//! elements are added sequentially at the end.

const LANES: usize = 8;

#[inline(always)]
fn fold(a: &[f64; LANES]) -> f64 {
    ((a[0] + a[1]) + (a[2] + a[3])) + ((a[4] + a[5]) + (a[6] + a[7]))
}

#[inline]
fn has_avx2() -> bool {
    #[cfg(target_arch = "x86_64")]
    {
        std::arch::is_x86_feature_detected!("avx2")
    }
    #[cfg(not(target_arch = "x86_64"))]
    {
        false
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    #[cfg(target_arch = "x86_64")]
    if has_avx2() {
        // SAFETY: AVX2 support was just checked; lengths are equal.
        return unsafe { avx2::dot(a, b) };
    }
    scalar::dot(a, b)
}

/// `[dot(w, xs[0]), .., dot(w, xs[3])]`, loading `w` once.
pub(crate) fn dot4(w: &[f64], xs: [&[f64]; 4]) -> [f64; 4] {
    for x in &xs {
        assert_eq!(x.len(), w.len());
    }
    #[cfg(target_arch = "x86_64")]
    if has_avx2() {
        // SAFETY: AVX2 support was just checked; lengths are equal.
        return unsafe { avx2::dot4(w, xs) };
    }
    scalar::dot4(w, xs)
}

/// Weighted sum of rows over a batch, evaluated in ascending batch order.
///
/// For `r < rows` and `k < width`:
/// `out[r·width + k] = Σ_{n = 0..count} coef[n·coef_stride + r] · x[n·width + k]`,
/// where the `n = 0` term is assigned and later terms added one at a time.
pub(crate) fn weighted_row_sums(
    out: &mut [f64],
    rows: usize,
    width: usize,
    coef: &[f64],
    coef_stride: usize,
    x: &[f64],
    count: usize,
) {
    assert_eq!(out.len(), rows * width);
    assert!(count >= 1);
    assert!(rows <= coef_stride || count == 1);
    assert!(coef.len() >= (count - 1) * coef_stride + rows);
    assert!(x.len() >= count * width);
    #[cfg(target_arch = "x86_64")]
    if has_avx2() {
        // SAFETY: AVX2 support was just checked; bounds asserted above.
        unsafe { avx2::weighted_row_sums(out, rows, width, coef, coef_stride, x, count) };
        return;
    }
    scalar::weighted_row_sums(out, rows, width, coef, coef_stride, x, count, 0);
}

mod scalar {
    use super::{fold, LANES};

    pub fn dot(a: &[f64], b: &[f64]) -> f64 {
        let body = a.len() / LANES * LANES;
        let mut acc = [0.0f64; LANES];
        for (x, y) in a[..body].chunks_exact(LANES).zip(b[..body].chunks_exact(LANES)) {
            for l in 0..LANES {
                acc[l] += x[l] * y[l];
            }
        }
        let mut s = fold(&acc);
        for k in body..a.len() {
            s += a[k] * b[k];
        }
        s
    }

    pub fn dot4(w: &[f64], xs: [&[f64]; 4]) -> [f64; 4] {
        xs.map(|x| dot(w, x))
    }

    /// Evaluates output rows `row0..rows`.
    #[allow(clippy::too_many_arguments)]
    pub fn weighted_row_sums(
        out: &mut [f64],
        rows: usize,
        width: usize,
        coef: &[f64],
        coef_stride: usize,
        x: &[f64],
        count: usize,
        row0: usize,
    ) {
        for r in row0..rows {
            for k in 0..width {
                let mut acc = coef[r] * x[k];
                for n in 1..count {
                    acc += coef[n * coef_stride + r] * x[n * width + k];
                }
                out[r * width + k] = acc;
            }
        }
    }
}

#[cfg(target_arch = "x86_64")]
mod avx2 {
    use std::arch::x86_64::*;

    use super::{fold, LANES};

    #[inline(always)]
    unsafe fn finish(lo: __m256d, hi: __m256d) -> f64 {
        let mut lanes = [0.0f64; LANES];
        _mm256_storeu_pd(lanes.as_mut_ptr(), lo);
        _mm256_storeu_pd(lanes.as_mut_ptr().add(4), hi);
        fold(&lanes)
    }

    #[target_feature(enable = "avx2")]
    pub unsafe fn dot(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len();
        let body = n / LANES * LANES;
        let (pa, pb) = (a.as_ptr(), b.as_ptr());
        let (mut lo, mut hi) = (_mm256_setzero_pd(), _mm256_setzero_pd());
        let mut i = 0;
        while i < body {
            lo = _mm256_add_pd(lo, _mm256_mul_pd(_mm256_loadu_pd(pa.add(i)), _mm256_loadu_pd(pb.add(i))));
            hi = _mm256_add_pd(
                hi,
                _mm256_mul_pd(_mm256_loadu_pd(pa.add(i + 4)), _mm256_loadu_pd(pb.add(i + 4))),
            );
            i += LANES;
        }
        let mut s = finish(lo, hi);
        for k in body..n {
            s += a[k] * b[k];
        }
        s
    }

    #[target_feature(enable = "avx2")]
    pub unsafe fn dot4(w: &[f64], xs: [&[f64]; 4]) -> [f64; 4] {
        let n = w.len();
        let body = n / LANES * LANES;
        let pw = w.as_ptr();
        let px = xs.map(<[f64]>::as_ptr);
        let mut acc = [_mm256_setzero_pd(); 8];
        let mut i = 0;
        while i < body {
            let wl = _mm256_loadu_pd(pw.add(i));
            let wh = _mm256_loadu_pd(pw.add(i + 4));
            for k in 0..4 {
                acc[2 * k] = _mm256_add_pd(acc[2 * k], _mm256_mul_pd(wl, _mm256_loadu_pd(px[k].add(i))));
                acc[2 * k + 1] = _mm256_add_pd(acc[2 * k + 1], _mm256_mul_pd(wh, _mm256_loadu_pd(px[k].add(i + 4))));
            }
            i += LANES;
        }
        let mut out = [0.0; 4];
        for k in 0..4 {
            let mut s = finish(acc[2 * k], acc[2 * k + 1]);
            for j in body..n {
                s += w[j] * xs[k][j];
            }
            out[k] = s;
        }
        out
    }

    /// Tiles of 4 rows × 8 columns are held in registers for the whole batch.
    #[target_feature(enable = "avx2")]
    pub unsafe fn weighted_row_sums(
        out: &mut [f64],
        rows: usize,
        width: usize,
        coef: &[f64],
        coef_stride: usize,
        x: &[f64],
        count: usize,
    ) {
        const TR: usize = 4;
        const TC: usize = 8;
        let row_body = rows / TR * TR;
        let col_body = width / TC * TC;
        let (pc, px, po) = (coef.as_ptr(), x.as_ptr(), out.as_mut_ptr());
        // Column strips outermost: one strip of `x` stays cached while every
        // row tile of the block consumes it.
        let mut k0 = 0;
        while k0 < col_body {
            let mut r0 = 0;
            while r0 < row_body {
                let mut acc = [_mm256_setzero_pd(); 2 * TR];
                let xl = _mm256_loadu_pd(px.add(k0));
                let xh = _mm256_loadu_pd(px.add(k0 + 4));
                for r in 0..TR {
                    let c = _mm256_broadcast_sd(&*pc.add(r0 + r));
                    acc[2 * r] = _mm256_mul_pd(c, xl);
                    acc[2 * r + 1] = _mm256_mul_pd(c, xh);
                }
                for n in 1..count {
                    let xn = px.add(n * width + k0);
                    let xl = _mm256_loadu_pd(xn);
                    let xh = _mm256_loadu_pd(xn.add(4));
                    let cn = pc.add(n * coef_stride + r0);
                    for r in 0..TR {
                        let c = _mm256_broadcast_sd(&*cn.add(r));
                        acc[2 * r] = _mm256_add_pd(acc[2 * r], _mm256_mul_pd(c, xl));
                        acc[2 * r + 1] = _mm256_add_pd(acc[2 * r + 1], _mm256_mul_pd(c, xh));
                    }
                }
                for r in 0..TR {
                    let o = po.add((r0 + r) * width + k0);
                    _mm256_storeu_pd(o, acc[2 * r]);
                    _mm256_storeu_pd(o.add(4), acc[2 * r + 1]);
                }
                r0 += TR;
            }
            k0 += TC;
        }
        for r in 0..row_body {
            for k in col_body..width {
                let mut a = coef[r] * x[k];
                for n in 1..count {
                    a += coef[n * coef_stride + r] * x[n * width + k];
                }
                out[r * width + k] = a;
            }
        }
        super::scalar::weighted_row_sums(out, rows, width, coef, coef_stride, x, count, row_body);
    }
}
