//! Radial reference values on the unit disk from Bessel characteristic
//! equations, computed by power series and bisection. Independent of the
//! Galerkin machinery; used to validate it.

/// `J_ν(x)` (`kind = -1`) or `I_ν(x)` (`kind = +1`) by power series.
fn bessel_series(nu: u32, x: f64, kind: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = (0..nu).fold(1.0, |acc, k| acc * half / (k + 1) as f64);
    let mut sum = term;
    let q = half * half;
    for k in 1..200 {
        term *= kind * q / (k as f64 * (k + nu as usize) as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// Bessel function of the first kind `J_ν(x)`.
pub fn bessel_j(nu: u32, x: f64) -> f64 {
    bessel_series(nu, x, -1.0)
}

/// Modified Bessel function `I_ν(x)`.
pub fn bessel_i(nu: u32, x: f64) -> f64 {
    bessel_series(nu, x, 1.0)
}

/// Bisection for a sign change of `f` in `[a, b]`.
pub fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let c = 0.5 * (a + b);
        let fc = f(c);
        if fc == 0.0 || (b - a) < 1e-15 * c.abs() {
            return c;
        }
        if (fa < 0.0) == (fc < 0.0) {
            a = c;
            fa = fc;
        } else {
            b = c;
        }
    }
    0.5 * (a + b)
}

/// The `k`-th positive root (1-based) of `f`, scanning from `0` with step `h`.
fn kth_root(f: impl Fn(f64) -> f64, k: usize, h: f64) -> f64 {
    let mut found = 0;
    let mut x = h;
    let mut prev = f(x);
    loop {
        let next = f(x + h);
        if (prev < 0.0) != (next < 0.0) {
            found += 1;
            if found == k {
                return bisect(&f, x, x + h);
            }
        }
        prev = next;
        x += h;
    }
}

/// `j_{ν,k}`, the `k`-th positive zero of `J_ν`.
pub fn bessel_j_zero(nu: u32, k: usize) -> f64 {
    kth_root(|x| bessel_j(nu, x), k, 0.05)
}

/// `k`-th root of the clamped-plate equation `J_ν(x) I_{ν+1}(x) + J_{ν+1}(x) I_ν(x) = 0`.
pub fn clamped_plate_root(nu: u32, k: usize) -> f64 {
    kth_root(
        |x| bessel_j(nu, x) * bessel_i(nu + 1, x) + bessel_j(nu + 1, x) * bessel_i(nu, x),
        k,
        0.05,
    )
}

/// Membrane: lowest eigenvalue of `-Δu = λu`, `u = 0` on the unit circle.
pub fn disk_membrane_first() -> f64 {
    bessel_j_zero(0, 1).powi(2)
}

/// Clamped plate: lowest eigenvalue of `Δ²u = λu` on the unit disk.
pub fn disk_plate_first() -> f64 {
    clamped_plate_root(0, 1).powi(4)
}

/// Clamped buckling: lowest eigenvalue of `Δ²u = -λΔu` on the unit disk, `j_{1,1}²`.
pub fn disk_buckling_first() -> f64 {
    bessel_j_zero(1, 1).powi(2)
}

/// Sorted membrane eigenvalues `j_{ν,k}²` with multiplicity (2 for `ν > 0`),
/// the first `count` of them.
pub fn disk_membrane_spectrum(count: usize) -> Vec<f64> {
    let mut out = Vec::new();
    for nu in 0..count as u32 + 1 {
        for k in 1..=count {
            let v = bessel_j_zero(nu, k).powi(2);
            out.push(v);
            if nu > 0 {
                out.push(v);
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out.truncate(count);
    out
}
